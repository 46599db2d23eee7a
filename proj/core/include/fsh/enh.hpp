#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fsh/resolve.hpp"

namespace fsh {

// A fibrant object together with the resolution that produced it, when it
// arose as i(F); res->output == cx in that case.  Objects produced by the
// upper shriek of a fibrant object carry no resolution (res == nullptr).
struct Fib {
  SheafComplex cx;
  std::shared_ptr<const ResolutionResult> res;
};

// i as a functor landing in Fib.
Fib fib_i(const SheafComplex& f);
// iota_F : F -> i(F) for the fibrant wrapper of F.
SheafChainMap fib_iota(const Fib& f);
// Transport a graded map between resolved inputs: i(h) : a.cx -> b.cx.
SheafGradedMap i_map(const Fib& a, const Fib& b, const SheafGradedMap& h);

// Complexes over the one-point site, used for the global-sections functors.
SiteContext point_site(std::uint32_t p);
SheafComplex point_sheaf(const Complex& v);
// Global sections as a sheaf on the point, and its action on maps.
SheafComplex gamma_sheaf(const SheafComplex& f);
SheafChainMap gamma_map(const SheafGradedMap& phi);

// --- functor expressions ------------------------------------------------------

// Formula trees over the generators of the enhancement.  Slots are the
// positional inputs; object(G) embeds a fixed complex of sheaves.  Hom is
// contravariant in its first slot (see slot_variance).
struct FunctorExpr {
  enum class Kind {
    Slot,      // inputs[slot]
    Object,    // constant object G
    Tensor,    // args[0] (x) args[1]
    SHom,      // Hom(args[0], args[1]), first slot contravariant
    HomGlob,   // Gamma Hom(args[0], args[1])
    Gamma,     // Gamma args[0]
    Pull,      // alpha^* args[0]
    PullInv,   // alpha^{-1} args[0]
    Push,      // alpha_* args[0]
    Shriek,    // j_! args[0]
    UShriek,   // j^! args[0]
  };
  Kind kind = Kind::Slot;
  std::size_t slot = 0;
  std::shared_ptr<const SheafComplex> obj;
  std::optional<ContinuousMap> map;
  std::optional<LocallyClosedImmersion> imm;
  std::vector<FunctorExpr> args;
};

FunctorExpr fe_slot(std::size_t i = 0);
FunctorExpr fe_object(SheafComplex g);
FunctorExpr fe_tensor(FunctorExpr a, FunctorExpr b);
FunctorExpr fe_shom(FunctorExpr a, FunctorExpr b);
FunctorExpr fe_hom_glob(FunctorExpr a, FunctorExpr b);
FunctorExpr fe_gamma(FunctorExpr a);
FunctorExpr fe_pull(ContinuousMap alpha, FunctorExpr a);
FunctorExpr fe_pullinv(ContinuousMap alpha, FunctorExpr a);
FunctorExpr fe_push(ContinuousMap alpha, FunctorExpr a);
FunctorExpr fe_shriek(LocallyClosedImmersion j, FunctorExpr a);
FunctorExpr fe_ushriek(LocallyClosedImmersion j, FunctorExpr a);

std::size_t expr_arity(const FunctorExpr& e);
// +1 covariant, -1 contravariant, 0 when the slot does not occur (or occurs
// with both variances).
int slot_variance(const FunctorExpr& e, std::size_t slot);

// Underlined evaluation: inserts i exactly as the defining formulas do
// (ul(x) = i((-) (x) (-)), ulHom = i Hom, ul alpha_* = i alpha_*, ul j^! = j^!,
// ul Gamma = Gamma, ul HomGlob = Gamma Hom).  Inputs must be fibrant.
Fib eval_underlined(const FunctorExpr& e, const std::vector<Fib>& inputs);

// Derived-level evaluation on arbitrary complexes: exact functors apply
// directly, the right-derived ones go through i first.
SheafComplex eval_derived(const FunctorExpr& e,
                          const std::vector<SheafComplex>& inputs);

// --- zig-zags ------------------------------------------------------------------

struct Leg {
  SheafChainMap map;
  bool forward = true;  // backward legs point target -> source in the chain
  bool qiso = false;
};

// A chain of fibrant vertices v_0 .. v_n joined by legs; legs[i] is a chain
// map v_i -> v_{i+1} when forward, v_{i+1} -> v_i when backward.
struct ZigZag {
  std::string tag;
  std::vector<Fib> vertices;
  std::vector<Leg> legs;
  bool two_iso_expected = true;

  const SheafComplex& source() const { return vertices.front().cx; }
  const SheafComplex& target() const { return vertices.back().cx; }
};

ZigZag zig_identity(Fib v, std::string tag = "id");
void zig_push(ZigZag& z, Fib next, SheafChainMap map, bool forward);
ZigZag zig_reverse(const ZigZag& z);
ZigZag zig_concat(const ZigZag& a, const ZigZag& b);

// Replace backward legs by pivot-canonical homotopy inverses and compose.
// Throws std::runtime_error when a backward leg is not invertible in ENH.
SheafChainMap reduce_roof(const ZigZag& z);
// 2-isomorphism criterion: every leg a quasi-isomorphism.
bool check_two_iso(const ZigZag& z);

// --- Table-1 rows ---------------------------------------------------------------

// Everything a row can consume; each row checks the fields it needs.  For
// composition rows the composite is alpha o beta (beta acts first).
struct RowBindings {
  std::optional<ContinuousMap> alpha, beta;
  std::optional<LocallyClosedImmersion> j, j2, j12;
  std::optional<CartesianSquare> square;
  std::vector<Fib> inputs;
};

const std::vector<std::string>& row_ids();
// Whether the row is marked as a 2-isomorphism in the table.
bool row_is_two_iso(const std::string& row);
ZigZag generator_zigzag(const std::string& row, const RowBindings& b);

// (alpha beta)_* F -> alpha_* beta_* F, the strict composition isomorphism.
SheafChainMap push_compose_iso(const ContinuousMap& alpha,
                               const ContinuousMap& beta,
                               const SheafComplex& f);

// --- diagrams -------------------------------------------------------------------

struct DiagramSpec {
  std::string name;
  ZigZag path1, path2;
};

struct DiagramResult {
  bool ok = false;
  std::optional<SheafHomotopy> witness;
  DiagramSpec spec;
};

const std::vector<std::string>& diagram_names();
// Bindings reuse RowBindings; inputs sized per diagram.
DiagramSpec build_diagram(const std::string& name, const RowBindings& b);
DiagramResult check_diagram(const std::string& name, const RowBindings& b);

// Apply a one-slot functor context to every vertex and leg of a zig-zag.
// The expression must contain exactly one Slot leaf (the plug); its other
// leaves must be Object nodes.  Hom contexts are supported in the covariant
// (second) argument only.
ZigZag whisker_zigzag(const FunctorExpr& f, const ZigZag& z);

// --- omega ----------------------------------------------------------------------

// The canonical comparison between eval_underlined(e)(iE..) and
// i(eval_derived(e)(E..)) for a generator e; from_derived records the
// direction (true: i(derived) -> underlined).
struct OmegaResult {
  SheafChainMap comparison;
  bool from_derived = true;
  bool ok = false;
};
OmegaResult omega_compare(const FunctorExpr& e,
                          const std::vector<SheafComplex>& inputs);

}  // namespace fsh
