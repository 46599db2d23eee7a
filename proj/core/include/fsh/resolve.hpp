#pragma once

#include <map>
#include <optional>
#include <vector>

#include "fsh/sheaf.hpp"

namespace fsh {

// Single-degree slice of a complex of sheaves, concentrated in degree 0.
SheafComplex degree_piece(const SheafComplex& f, int n);

// Godement envelope G(M) = (+)_x E_x(M_x) of a single-degree sheaf, with the
// canonical componentwise-injective mono M -> G(M).
struct GodementResult {
  SheafComplex sheaf;
  SheafChainMap mono;
};
GodementResult godement(const SheafComplex& m);

// G on maps: u : A -> B between single-degree sheaves gives G(u) : GA -> GB.
// Strictly functorial and k-linear.
SheafChainMap godement_map(const GodementResult& ga, const GodementResult& gb,
                           const SheafChainMap& u);

// Retraction of the Godement mono, when one exists; M is injective iff it does.
std::optional<SheafChainMap> injective_retraction(const SheafComplex& m);
bool is_injective_sheaf(const SheafComplex& m);

// Bounded injective resolution 0 -> M -> I^0 -> ... -> I^L -> 0 by iterated
// Godement envelopes, stopping early when a cokernel certifies injective.
struct InjResolution {
  SheafComplex input;
  std::vector<SheafComplex> terms;
  std::vector<SheafChainMap> diffs;  // terms[j] -> terms[j+1]
  SheafChainMap aug;                 // input -> terms[0]
};
InjResolution inj_resolve_sheaf(const SheafComplex& m);

// One row of the resolution functor: the pure Godement tower of a single
// degree piece, iterated until the cokernel vanishes.  Unlike the
// early-stopped inj_resolve_sheaf this is a functor on the nose, so maps
// transport strictly across levels.
struct ResolutionRow {
  std::vector<SheafComplex> kers;    // K_0 = piece, K_1, ..., K_{L-1}
  std::vector<GodementResult> gd;    // gd[j] = godement(K_j); I^j = gd[j].sheaf
  std::vector<std::vector<Matrix>> q;    // q[j][x] : I^j_x -> K_{j+1,x}
  std::vector<std::vector<Matrix>> sig;  // right inverses, sig[j][x]
  std::vector<SheafChainMap> diffs;      // I^j -> I^{j+1}
  std::size_t length() const { return gd.size(); }
};
ResolutionRow resolve_row(const SheafComplex& piece);

struct ResolutionResult {
  SheafComplex input;
  SheafComplex output;  // iF, componentwise injective, bounded
  SheafChainMap iota;   // F -> iF, stalkwise quasi-isomorphism
  std::map<int, ResolutionRow> rows;  // by degree of the input
};
ResolutionResult i_complex(const SheafComplex& f);

// i on graded maps: degree-d h between resolved endpoints yields a degree-d
// map i(h) : iF -> iG with i(Dh) = D(ih), i(g o f) = i(g) o i(f), i(id) = id.
SheafGradedMap i_on_graded_map(const ResolutionResult& rf,
                               const ResolutionResult& rg,
                               const SheafGradedMap& h);

// Componentwise injectivity of every degree slice; bounded + componentwise
// injective objects are the fibrant ones here.
bool is_fibrant(const SheafComplex& f);

}  // namespace fsh
