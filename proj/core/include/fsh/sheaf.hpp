#pragma once

#include "fsh/complex_ops.hpp"
#include "fsh/space.hpp"

namespace fsh {

// {0, 1, ..., n-1}: every point of a space, in order.
std::vector<int> all_points(std::size_t n);

struct SiteContext {
  std::shared_ptr<const FinSpace> space;
  std::uint32_t p = kDefaultPrime;
  bool operator==(const SiteContext& o) const {
    return p == o.p && *space == *o.space;
  }
};

// Complex of sheaves on a finite space, encoded as a functor on the
// specialization poset: stalk F_x = F(U_x) with restrictions
// rho_{x<=y} : F_x -> F_y for x <= y.
class SheafComplex {
 public:
  SheafComplex() = default;
  explicit SheafComplex(SiteContext ctx)
      : ctx_(std::move(ctx)), stalks_(ctx_.space->size(), Complex(ctx_.p)) {}

  const SiteContext& ctx() const { return ctx_; }
  std::size_t points() const { return stalks_.size(); }

  const Complex& stalk(int x) const { return stalks_.at(static_cast<std::size_t>(x)); }
  void set_stalk(int x, Complex c) { stalks_.at(static_cast<std::size_t>(x)) = std::move(c); }

  // rho_{x<=y}; identity when x == y.
  ChainMap res(int x, int y) const;
  void set_res(int x, int y, ChainMap m);

  // Degree window across all stalks.
  int lo() const;
  int hi() const;
  bool is_zero_object() const;

  // Checks res shapes, chain-map property, identity and composition laws.
  void validate() const;

  bool operator==(const SheafComplex& o) const;

 private:
  SiteContext ctx_;
  std::vector<Complex> stalks_;
  std::map<std::pair<int, int>, ChainMap> res_;
};

// Natural family of graded maps phi_x : F_x -> G_x of a fixed degree;
// naturality (strict commutation with rho) is part of validity. Chain maps
// are the degree-0 families also commuting with d.
class SheafGradedMap {
 public:
  SheafGradedMap() = default;
  SheafGradedMap(SheafComplex src, SheafComplex tgt, int degree = 0);

  const SheafComplex& src() const { return src_; }
  const SheafComplex& tgt() const { return tgt_; }
  int degree() const { return degree_; }

  const GradedMap& at(int x) const { return comps_.at(static_cast<std::size_t>(x)); }
  void set_at(int x, GradedMap g);

  bool is_natural() const;
  bool is_chain_map() const;
  void validate_chain_map() const;
  bool is_zero() const;

  SheafGradedMap operator+(const SheafGradedMap& o) const;
  SheafGradedMap operator-(const SheafGradedMap& o) const;
  SheafGradedMap scaled(std::uint32_t c) const;
  bool operator==(const SheafGradedMap& o) const;

  static SheafGradedMap identity(const SheafComplex& f);
  static SheafGradedMap compose(const SheafGradedMap& g, const SheafGradedMap& f);

 private:
  SheafComplex src_, tgt_;
  int degree_ = 0;
  std::vector<GradedMap> comps_;
};

using SheafChainMap = SheafGradedMap;

struct SheafHomotopy {
  SheafChainMap f, g;
  SheafGradedMap h;
  void validate() const;
};

// --- constructors -----------------------------------------------------------

SheafComplex make_constant(const SiteContext& ctx, const Complex& v);
// Skyscraper/coinduced E_x(V): stalk V at every y <= x, identity restrictions.
SheafComplex make_skyscraper(const SiteContext& ctx, int x, const Complex& v);
// Open-cell extension P_x(V): stalk V on U_x, zero elsewhere.
SheafComplex make_cell(const SiteContext& ctx, int x, const Complex& v);

struct RandomBounds {
  std::size_t max_dim = 2;   // stalk dimension per degree
  int lo = -1, hi = 1;       // degree window of building blocks
  std::size_t pieces = 2;    // generator summands
  bool twist = true;         // conjugate stalks by random isomorphisms
};
SheafComplex make_random(const SiteContext& ctx, std::uint64_t seed,
                         const RandomBounds& b = {});
// Random natural chain map between given sheaves (an element of the kernel
// of the hom differential), deterministic in the seed.
SheafChainMap random_sheaf_map(const SheafComplex& f, const SheafComplex& g,
                               std::uint64_t seed);
SheafGradedMap random_sheaf_graded(const SheafComplex& f, const SheafComplex& g,
                                   int degree, std::uint64_t seed);

// --- additive structure ------------------------------------------------------

struct SheafDirectSum {
  SheafComplex total;
  SheafChainMap incl_left, incl_right, proj_left, proj_right;
};
SheafDirectSum sheaf_direct_sum(const SheafComplex& a, const SheafComplex& b);
SheafComplex sheaf_shift(int n, const SheafComplex& a);
SheafComplex sheaf_cone(const SheafChainMap& f);
SheafChainMap sheaf_cone_in(const SheafChainMap& f);   // G -> cone(f)
SheafChainMap sheaf_cone_out(const SheafChainMap& f);  // cone(f) -> F[1]

bool sheaf_is_acyclic(const SheafComplex& f);        // stalkwise
bool sheaf_is_quasi_iso(const SheafChainMap& f);     // stalkwise

// --- sections ----------------------------------------------------------------

struct SectionsResult {
  Complex cx;
  std::vector<int> pts;            // the subset, sorted
  std::map<int, Matrix> basis;     // per degree: ambient (+)_x F_x^n times dim
};
SectionsResult sections_full(const SheafComplex& f, const std::vector<int>& subset);
Complex sections(const SheafComplex& f, const std::vector<int>& subset);
Complex global_sections(const SheafComplex& f);

// Restriction sections(F, big) -> sections(F, small) for small ⊆ big.
ChainMap sections_restrict(const SheafComplex& f, const SectionsResult& big,
                           const SectionsResult& small);
// Induced map on sections of a graded map (same subset on both sides).
GradedMap sections_map(const SheafGradedMap& phi, const SectionsResult& src_sec,
                       const SectionsResult& tgt_sec);

// --- functors: objects and map actions ---------------------------------------

SheafComplex pullback(const ContinuousMap& alpha, const SheafComplex& f);
SheafGradedMap pullback_map(const ContinuousMap& alpha, const SheafGradedMap& phi);

SheafComplex pushforward(const ContinuousMap& alpha, const SheafComplex& f);
SheafGradedMap pushforward_map(const ContinuousMap& alpha, const SheafGradedMap& phi);

// unit id -> alpha_* alpha^* and counit alpha^* alpha_* -> id (underived)
SheafChainMap push_pull_unit(const ContinuousMap& alpha, const SheafComplex& f);
SheafChainMap pull_push_counit(const ContinuousMap& alpha, const SheafComplex& f);

SheafComplex sheaf_tensor(const SheafComplex& f, const SheafComplex& g);
SheafGradedMap sheaf_tensor_map(const SheafGradedMap& phi, const SheafGradedMap& psi);
SheafChainMap sheaf_tensor_swap(const SheafComplex& f, const SheafComplex& g);
SheafChainMap sheaf_tensor_assoc(const SheafComplex& f, const SheafComplex& g,
                                 const SheafComplex& h);
SheafChainMap sheaf_tensor_lunit(const SheafComplex& unit, const SheafComplex& f);
SheafChainMap sheaf_tensor_runit(const SheafComplex& f, const SheafComplex& unit);
// Strict equality witnesses alpha^*(F (x) G) = alpha^*F (x) alpha^*G (identity).

// Enriched hom of poset representations over a subposet, with an explicit
// embedding into the ambient product of pointwise hom spaces.
struct RepHom {
  Complex cx;
  std::vector<int> pts;
  std::map<int, Matrix> basis;  // per hom degree
  // convert an element (coordinates in basis) to the natural family and back
};
RepHom rep_hom(const SheafComplex& f, const SheafComplex& g, const std::vector<int>& subset);
// Family <-> coordinates for RepHom elements.
std::vector<GradedMap> rep_hom_family(const SheafComplex& f, const SheafComplex& g,
                                      const RepHom& rh, int degree, const Matrix& coords);
Matrix rep_hom_coords(const SheafComplex& f, const SheafComplex& g, const RepHom& rh,
                      int degree, const std::vector<GradedMap>& family);

struct SheafHomResult {
  SheafComplex sheaf;
  std::vector<RepHom> stalk_data;  // per point of the space
};
SheafHomResult sheaf_hom(const SheafComplex& f, const SheafComplex& g);
// Hom(phi, psi) : Hom(F, G) -> Hom(F', G') for chain maps phi : F' -> F,
// psi : G -> G'.
SheafGradedMap sheaf_hom_map(const SheafComplex& f, const SheafComplex& g,
                             const SheafHomResult& src, const SheafComplex& fp,
                             const SheafComplex& gp, const SheafHomResult& dst,
                             const SheafChainMap& phi, const SheafChainMap& psi);

// --- locally closed calculus -------------------------------------------------

SheafComplex lower_shriek(const LocallyClosedImmersion& j, const SheafComplex& f);
SheafGradedMap lower_shriek_map(const LocallyClosedImmersion& j, const SheafGradedMap& phi);

struct UpperShriekResult {
  SheafComplex sheaf;                       // on the subspace
  std::map<std::pair<int, int>, Matrix> emb;  // per (point of S, degree): into F_z
};
UpperShriekResult upper_shriek_adjoint(const LocallyClosedImmersion& j,
                                       const SheafComplex& f);
SheafGradedMap upper_shriek_map(const LocallyClosedImmersion& j,
                                const SheafGradedMap& phi);

SheafChainMap shriek_unit(const LocallyClosedImmersion& j, const SheafComplex& f);
  // F -> j^! j_! F (iso)
SheafChainMap shriek_counit(const LocallyClosedImmersion& j, const SheafComplex& f);
  // j_! j^! F -> F
SheafChainMap shriek_to_push(const LocallyClosedImmersion& j, const SheafComplex& f);
  // canonical j_! F -> j_* F

// --- strict structural isomorphisms used by the zig-zag rows ------------------

// alpha_* Hom(alpha^* E, F) -> Hom(E, alpha_* F)  (strict iso)
SheafChainMap adj_push_hom(const ContinuousMap& alpha, const SheafComplex& e,
                           const SheafComplex& f);
// Hom(E (x) F, G) -> Hom(E, Hom(F, G))  (currying, strict iso)
SheafChainMap curry_hom(const SheafComplex& e, const SheafComplex& f,
                        const SheafComplex& g);
// j_! E (x) F -> j_!(E (x) j^{-1} F)  (projection formula, strict iso)
SheafChainMap proj_formula_iso(const LocallyClosedImmersion& j, const SheafComplex& e,
                               const SheafComplex& f);
// beta^{-1} j_! E -> j'_! beta'^{-1} E for the pulled-back square (strict iso)
SheafChainMap base_change_iso(const LocallyClosedImmersion& j, const ContinuousMap& beta,
                              const LocallyClosedImmersion& jp, const ContinuousMap& beta_p,
                              const SheafComplex& e);
// alpha_* Hom(E, j^! F) -> Hom(j_! E, F)  (strict iso, alpha = j)
SheafChainMap adj_shriek_hom(const LocallyClosedImmersion& j, const SheafComplex& e,
                             const SheafComplex& f);
// Hom(j^{-1} E, j^! F) -> j^! Hom(E, F)  (strict iso)
SheafChainMap upper_shriek_hom_iso(const LocallyClosedImmersion& j, const SheafComplex& e,
                                   const SheafComplex& f);
// (j1 j2)^! F -> j2^! (j1^! F)  (change of kernel bases)
SheafChainMap ushriek_compose_iso(const LocallyClosedImmersion& j1,
                                  const LocallyClosedImmersion& j2,
                                  const LocallyClosedImmersion& j12,
                                  const SheafComplex& f);

// --- homotopy solving at the sheaf level --------------------------------------

std::optional<SheafHomotopy> sheaf_is_homotopic(const SheafChainMap& f,
                                                const SheafChainMap& g);
struct SheafHomotopyInverse {
  SheafChainMap g;
  SheafHomotopy gf_id, fg_id;
};
std::optional<SheafHomotopyInverse> sheaf_homotopy_inverse(const SheafChainMap& f);

SheafGradedMap sheaf_diff_map(const SheafComplex& f);
SheafGradedMap sheaf_hom_diff(const SheafGradedMap& f);

// Generic linear systems over natural graded families (naturality is imposed
// automatically on every unknown).
struct SheafUnknown {
  SheafComplex src, tgt;
  int degree;
};
struct SheafTerm {
  std::size_t unknown;
  std::function<SheafGradedMap(const SheafGradedMap&)> op;
};
struct SheafEquation {
  std::vector<SheafTerm> terms;
  SheafGradedMap rhs;
};
std::optional<std::vector<SheafGradedMap>> sheaf_solve_graded(
    const std::vector<SheafUnknown>& unknowns,
    const std::vector<SheafEquation>& equations);

}  // namespace fsh
