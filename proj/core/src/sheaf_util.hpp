#pragma once

#include "fsh/sheaf.hpp"

namespace fsh::detail {

// Degrees n with src.dim(n) > 0 and tgt.dim(n + deg) > 0: the support of a
// graded map src -> tgt of the given degree.
inline std::vector<int> gm_degrees(const Complex& src, const Complex& tgt, int deg) {
  std::vector<int> out;
  for (auto& [n, d] : src.dims())
    if (d && tgt.dim(n + deg)) out.push_back(n);
  return out;
}

inline std::size_t gm_dim(const Complex& src, const Complex& tgt, int deg) {
  std::size_t t = 0;
  for (int n : gm_degrees(src, tgt, deg)) t += src.dim(n) * tgt.dim(n + deg);
  return t;
}

inline Matrix gm_vec(const GradedMap& g) {
  auto degs = gm_degrees(g.src(), g.tgt(), g.degree());
  Matrix v(gm_dim(g.src(), g.tgt(), g.degree()), 1, g.src().modulus());
  std::size_t off = 0;
  for (int n : degs) {
    Matrix m = g.map(n);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c)
        v.at(off + r * m.cols() + c, 0) = m.at(r, c);
    off += m.rows() * m.cols();
  }
  return v;
}

inline GradedMap gm_unvec(const Complex& src, const Complex& tgt, int deg,
                          const Matrix& v, std::size_t col = 0) {
  GradedMap g(src, tgt, deg);
  std::size_t off = 0;
  for (int n : gm_degrees(src, tgt, deg)) {
    Matrix m(tgt.dim(n + deg), src.dim(n), src.modulus());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c)
        m.at(r, c) = v.at(off + r * m.cols() + c, col);
    off += m.rows() * m.cols();
    g.set_map(n, std::move(m));
  }
  return g;
}

inline std::size_t sgm_dim(const SheafComplex& src, const SheafComplex& tgt, int deg) {
  std::size_t t = 0;
  for (std::size_t x = 0; x < src.points(); ++x)
    t += gm_dim(src.stalk(static_cast<int>(x)), tgt.stalk(static_cast<int>(x)), deg);
  return t;
}

inline Matrix sgm_vec(const SheafGradedMap& g) {
  Matrix v(sgm_dim(g.src(), g.tgt(), g.degree()), 1, g.src().ctx().p);
  std::size_t off = 0;
  for (std::size_t x = 0; x < g.src().points(); ++x) {
    Matrix part = gm_vec(g.at(static_cast<int>(x)));
    for (std::size_t r = 0; r < part.rows(); ++r) v.at(off + r, 0) = part.at(r, 0);
    off += part.rows();
  }
  return v;
}

inline SheafGradedMap sgm_unvec(const SheafComplex& src, const SheafComplex& tgt,
                                int deg, const Matrix& v, std::size_t col = 0) {
  SheafGradedMap g(src, tgt, deg);
  std::size_t off = 0;
  for (std::size_t xi = 0; xi < src.points(); ++xi) {
    int x = static_cast<int>(xi);
    std::size_t d = gm_dim(src.stalk(x), tgt.stalk(x), deg);
    Matrix part(d, 1, src.ctx().p);
    for (std::size_t r = 0; r < d; ++r) part.at(r, 0) = v.at(off + r, col);
    off += d;
    g.set_at(x, gm_unvec(src.stalk(x), tgt.stalk(x), deg, part));
  }
  return g;
}

// Ambient product (+)_{x in pts} F_x^n used by sections and rep-hom bases.
inline std::size_t amb_dim(const SheafComplex& f, const std::vector<int>& pts, int n) {
  std::size_t t = 0;
  for (int x : pts) t += f.stalk(x).dim(n);
  return t;
}

inline std::size_t amb_offset(const SheafComplex& f, const std::vector<int>& pts,
                              int x, int n) {
  std::size_t t = 0;
  for (int y : pts) {
    if (y == x) return t;
    t += f.stalk(y).dim(n);
  }
  throw std::invalid_argument("amb_offset: point not in subset");
}

// Degree window across the listed stalks.
inline std::pair<int, int> window(const SheafComplex& f, const std::vector<int>& pts) {
  int lo = 0, hi = -1;
  bool first = true;
  for (int x : pts) {
    const Complex& s = f.stalk(x);
    if (s.is_zero_object()) continue;
    if (first || s.lo() < lo) lo = s.lo();
    if (first || s.hi() > hi) hi = s.hi();
    first = false;
  }
  if (first) return {0, -1};
  return {lo, hi};
}

// Offset of the degree-n block inside the flattened (src -> tgt, deg) space.
inline std::size_t gm_block_offset(const Complex& src, const Complex& tgt, int deg,
                                   int n) {
  std::size_t off = 0;
  for (int m : gm_degrees(src, tgt, deg)) {
    if (m == n) return off;
    off += src.dim(m) * tgt.dim(m + deg);
  }
  throw std::invalid_argument("gm_block_offset: absent block");
}

// Matrix of h |-> g o h on flattened graded-map spaces,
// (a -> g.src(), d)  ->  (a -> g.tgt(), d + deg g).
Matrix postcompose_matrix(const GradedMap& g, const Complex& a, int d);
// Matrix of h |-> h o f on flattened graded-map spaces,
// (f.tgt() -> b, d)  ->  (f.src() -> b, d + deg f).
Matrix precompose_matrix(const GradedMap& f, const Complex& b, int d);
// Matrix of the hom differential D(h) = d_b h - (-1)^d h d_a.
Matrix hom_diff_matrix(const Complex& a, const Complex& b, int d);

// Rows expressing naturality of a degree-d family F -> G over the points in
// pts (columns: the per-point flattened spaces concatenated in pts order).
Matrix nat_rows(const SheafComplex& f, const SheafComplex& g, int d,
                const std::vector<int>& pts);

// A pivot-canonical kernel basis that is square is the identity; skip the
// solve in that case.
inline Matrix solve_in_basis(const Matrix& basis, const Matrix& img,
                             const char* what) {
  if (basis.rows() == basis.cols()) return img;
  auto sol = solve(basis, img);
  if (!sol) throw std::logic_error(std::string(what) + ": image escapes the basis");
  return *sol;
}

// Offset of point y inside the concatenated hom spaces over pts at degree d.
inline std::size_t hom_amb_offset(const SheafComplex& f, const SheafComplex& g,
                                  const std::vector<int>& pts, int y, int d) {
  std::size_t t = 0;
  for (int z : pts) {
    if (z == y) return t;
    t += gm_dim(f.stalk(z), g.stalk(z), d);
  }
  throw std::invalid_argument("hom_amb_offset: point not in subset");
}

// Strict related pairs (x, y), x < y in the given subset, sorted.
inline std::vector<std::pair<int, int>> strict_pairs(const FinSpace& sp,
                                                     const std::vector<int>& pts) {
  std::vector<std::pair<int, int>> out;
  for (int x : pts)
    for (int y : pts)
      if (x != y && sp.leq(x, y)) out.emplace_back(x, y);
  return out;
}

}  // namespace fsh::detail
