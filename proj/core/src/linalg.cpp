#include "fsh/linalg.hpp"

namespace fsh {

RrefResult rref(const Matrix& m) {
  const std::uint64_t p = m.modulus();
  RrefResult out{m, Matrix::identity(m.rows(), m.modulus()), 0, {}};
  Matrix& R = out.R;
  Matrix& T = out.T;
  std::size_t row = 0;
  for (std::size_t col = 0; col < m.cols() && row < m.rows(); ++col) {
    std::size_t piv = row;
    while (piv < m.rows() && R.at(piv, col) == 0) ++piv;
    if (piv == m.rows()) continue;
    if (piv != row) {
      for (std::size_t j = 0; j < R.cols(); ++j) std::swap(R.at(row, j), R.at(piv, j));
      for (std::size_t j = 0; j < T.cols(); ++j) std::swap(T.at(row, j), T.at(piv, j));
    }
    std::uint64_t inv = fp_inv(R.at(row, col), m.modulus());
    for (std::size_t j = 0; j < R.cols(); ++j)
      R.at(row, j) = static_cast<std::uint32_t>(inv * R.at(row, j) % p);
    for (std::size_t j = 0; j < T.cols(); ++j)
      T.at(row, j) = static_cast<std::uint32_t>(inv * T.at(row, j) % p);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == row || R.at(i, col) == 0) continue;
      std::uint64_t f = p - R.at(i, col);
      for (std::size_t j = 0; j < R.cols(); ++j)
        R.at(i, j) = static_cast<std::uint32_t>((R.at(i, j) + f * R.at(row, j)) % p);
      for (std::size_t j = 0; j < T.cols(); ++j)
        T.at(i, j) = static_cast<std::uint32_t>((T.at(i, j) + f * T.at(row, j)) % p);
    }
    out.pivots.push_back(col);
    ++row;
  }
  out.rank = row;
  return out;
}

std::size_t rank(const Matrix& m) { return rref(m).rank; }

Matrix kernel(const Matrix& m) {
  RrefResult rr = rref(m);
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto c : rr.pivots) is_pivot[c] = true;
  std::vector<std::size_t> free_cols;
  for (std::size_t c = 0; c < m.cols(); ++c)
    if (!is_pivot[c]) free_cols.push_back(c);
  Matrix K(m.cols(), free_cols.size(), m.modulus());
  const std::uint32_t p = m.modulus();
  for (std::size_t j = 0; j < free_cols.size(); ++j) {
    std::size_t fc = free_cols[j];
    K.at(fc, j) = 1;
    for (std::size_t i = 0; i < rr.rank; ++i) {
      std::uint32_t v = rr.R.at(i, fc);
      if (v != 0) K.at(rr.pivots[i], j) = p - v;
    }
  }
  return K;
}

std::optional<Matrix> solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("solve: row mismatch");
  RrefResult rr = rref(a);
  Matrix tb = rr.T * b;
  // consistency: rows beyond rank of R must be zero in tb
  for (std::size_t i = rr.rank; i < tb.rows(); ++i)
    for (std::size_t j = 0; j < tb.cols(); ++j)
      if (tb.at(i, j) != 0) return std::nullopt;
  Matrix x(a.cols(), b.cols(), a.modulus());
  for (std::size_t i = 0; i < rr.rank; ++i) {
    std::size_t pc = rr.pivots[i];
    for (std::size_t j = 0; j < b.cols(); ++j) x.at(pc, j) = tb.at(i, j);
  }
  // back-substitution not needed: R is fully reduced, but free columns of R
  // contribute since x has zeros there; pivot rows read off directly except
  // for interactions with other pivot columns, which are zero in rref.
  // Still, R may have nonzero entries in free columns; with free vars = 0
  // the pivot equation is x_pivot = tb row directly.
  return x;
}

std::optional<Matrix> solve_left(const Matrix& a, const Matrix& b) {
  auto x = solve(a.transposed(), b.transposed());
  if (!x) return std::nullopt;
  return x->transposed();
}

std::optional<Matrix> inverse(const Matrix& m) {
  if (m.rows() != m.cols()) return std::nullopt;
  RrefResult rr = rref(m);
  if (rr.rank != m.rows()) return std::nullopt;
  return rr.T;
}

std::vector<std::size_t> extend_basis(const Matrix& b, const Matrix& z) {
  if (b.rows() != z.rows()) throw std::invalid_argument("extend_basis: row mismatch");
  RrefResult rr = rref(Matrix::hstack(b, z));
  std::vector<std::size_t> out;
  for (auto c : rr.pivots)
    if (c >= b.cols()) out.push_back(c - b.cols());
  return out;
}

}  // namespace fsh
