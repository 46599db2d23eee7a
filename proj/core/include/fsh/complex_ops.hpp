#pragma once

#include <functional>
#include <optional>

#include "fsh/complex.hpp"

namespace fsh {

// [n]A with ([n]A)^m = A^(m+n) and d_[n]A = (-1)^n d_A.
Complex shift(int n, const Complex& a);
GradedMap shift(int n, const GradedMap& f);

// Cone(f)^n = B^n (+) A^(n+1), d = [[d_B, f],[0, -d_A]].
Complex cone(const ChainMap& f);
// Action of Cone on a commuting square (u,v): Cone(f) -> Cone(f'),
// u: B -> B', v: A -> A' with u f = f' v.
ChainMap cone_map(const ChainMap& f, const ChainMap& fp, const ChainMap& u,
                  const ChainMap& v);

Complex icone(const Complex& a);
ChainMap icone_map(const ChainMap& f);  // icone as a functor
ChainMap icone_in(const Complex& a);    // canonical mono A -> icone(A) onto the B-slot

struct DirectSum {
  Complex total;
  ChainMap incl_left, incl_right, proj_left, proj_right;
};
DirectSum direct_sum(const Complex& a, const Complex& b);

// Tensor product with Koszul signs; blocks of (A (x) B)^n ordered by
// ascending A-degree.
Complex tensor(const Complex& a, const Complex& b);
// f (x) g with the Koszul sign (-1)^{|g| deg_A}.
GradedMap tensor_map(const GradedMap& f, const GradedMap& g);
// Symmetry A (x) B -> B (x) A, x(x)y -> (-1)^{|x||y|} y(x)x.
ChainMap tensor_swap(const Complex& a, const Complex& b);
// Associator (A(x)B)(x)C -> A(x)(B(x)C) (a basis permutation; no signs).
ChainMap tensor_assoc(const Complex& a, const Complex& b, const Complex& c);
// Unitors k(x)A -> A and A(x)k -> A for a rank-one complex k in degree 0.
ChainMap tensor_lunit(const Complex& unit, const Complex& a);
ChainMap tensor_runit(const Complex& a, const Complex& unit);

// Hom complex: degree-d part is (+)_n Hom(A^n, B^(n+d)) with
// D(f) = d_B f - (-1)^d f d_A. Keeps the block layout so elements convert
// to and from GradedMaps.
class HomComplex {
 public:
  HomComplex(Complex a, Complex b);

  const Complex& cx() const { return cx_; }
  const Complex& source() const { return a_; }
  const Complex& target() const { return b_; }

  Matrix to_vector(const GradedMap& g) const;          // column vector
  GradedMap from_vector(int degree, const Matrix& v) const;

  // Matrix of the hom differential from degree d to d+1.
  Matrix diff_matrix(int d) const { return cx_.diff(d); }

 private:
  Complex a_, b_;
  Complex cx_;
  // block starts per hom degree: list of (source degree n, offset)
  std::map<int, std::vector<std::pair<int, std::size_t>>> layout_;
};

Complex hom_complex(const Complex& a, const Complex& b);

// The differential of A packaged as a degree-1 graded map A -> A.
GradedMap diff_map(const Complex& a);
// D(f) = d_tgt f - (-1)^{deg f} f d_src, the hom-complex differential.
GradedMap hom_diff(const GradedMap& f);

std::optional<Homotopy> is_homotopic(const ChainMap& f, const ChainMap& g);

struct HomotopyInverse {
  ChainMap g;
  Homotopy gf_id;  // g f ~ id
  Homotopy fg_id;  // f g ~ id
};
std::optional<HomotopyInverse> homotopy_inverse(const ChainMap& f);

bool is_quasi_iso(const ChainMap& f);
bool is_acyclic(const Complex& a);

struct CohomologyResult {
  std::map<int, std::size_t> dims;
  // Columns of incl[n] are representative cocycles; proj[n] * incl[n] = id,
  // proj[n] * d^(n-1) = 0.
  std::map<int, Matrix> incl, proj;
};
CohomologyResult cohomology(const Complex& a);

// --- generic linear solving over graded maps -------------------------------

// Unknowns are graded maps with fixed endpoints and degrees; equations are
// k-linear expressions in them equated to a right-hand side.
struct GradedUnknown {
  Complex src, tgt;
  int degree;
};
struct GradedTerm {
  std::size_t unknown;  // index into the unknown list
  std::function<GradedMap(const GradedMap&)> op;  // must be k-linear
};
struct GradedEquation {
  std::vector<GradedTerm> terms;  // sum of terms
  GradedMap rhs;
};
std::optional<std::vector<GradedMap>> solve_graded(
    const std::vector<GradedUnknown>& unknowns,
    const std::vector<GradedEquation>& equations);

// --- factorizations --------------------------------------------------------

enum class FactorMode { CofThenTrivFib, TrivCofThenFib };

struct Factorization {
  ChainMap left;
  Complex mid;
  ChainMap right;
};
// right * left = f. Mode CofThenTrivFib: left degreewise-split mono, right a
// surjective quasi-isomorphism (mapping cylinder). Mode TrivCofThenFib: left
// a split-mono quasi-isomorphism, right degreewise surjective (mapping path
// space). Both constructions are componentwise linear in f.
Factorization factorize(const ChainMap& f, FactorMode mode);

// --- structure theory over a field ----------------------------------------

struct SemisimpleDecomposition {
  Complex S;        // zero differential, S^n = H^n(A)
  Complex T;        // graded (zero differential), T^n = im d^(n-1)
  Complex model;    // S (+) icone(T), with this exact layout
  ChainMap iso;     // A -> model, an exact isomorphism of complexes
  ChainMap inverse; // model -> A
};
SemisimpleDecomposition decompose_semisimple(const Complex& a);

enum class MonoType { IdS, IdICone, ZeroToK, ZeroToICone, KToICone };

struct MonoSummand {
  MonoType type;
  int shift;  // summand is [shift](basic); k@n corresponds to shift -n
  std::size_t multiplicity;
};

struct MonoClassification {
  std::vector<MonoSummand> summands;
  Complex model_src, model_tgt;
  ChainMap model_mono;       // canonical direct sum of basic monos
  ChainMap src_iso, tgt_iso; // model_src -> A, model_tgt -> B with
                             // m * src_iso = tgt_iso * model_mono
};
// Requires every component of m injective; throws std::invalid_argument
// otherwise.
MonoClassification classify_mono(const ChainMap& m);

}  // namespace fsh
