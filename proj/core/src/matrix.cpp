#include "fsh/matrix.hpp"

namespace fsh {

std::uint32_t fp_inv(std::uint32_t a, std::uint32_t p) {
  if (a == 0) throw std::domain_error("fp_inv: zero has no inverse");
  // extended Euclid
  std::int64_t t = 0, nt = 1, r = p, nr = a % p;
  while (nr != 0) {
    std::int64_t q = r / nr;
    std::int64_t tmp = t - q * nt;
    t = nt;
    nt = tmp;
    tmp = r - q * nr;
    r = nr;
    nr = tmp;
  }
  if (r != 1) throw std::domain_error("fp_inv: modulus not prime?");
  if (t < 0) t += p;
  return static_cast<std::uint32_t>(t);
}

Matrix Matrix::operator+(const Matrix& o) const {
  check_same_field(o);
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw std::invalid_argument("Matrix::+: shape mismatch");
  Matrix r(rows_, cols_, p_);
  for (std::size_t i = 0; i < a_.size(); ++i)
    r.a_[i] = static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(a_[i]) + o.a_[i]) % p_);
  return r;
}

Matrix Matrix::operator-(const Matrix& o) const {
  check_same_field(o);
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw std::invalid_argument("Matrix::-: shape mismatch");
  Matrix r(rows_, cols_, p_);
  for (std::size_t i = 0; i < a_.size(); ++i)
    r.a_[i] = static_cast<std::uint32_t>(
        (static_cast<std::uint64_t>(a_[i]) + p_ - o.a_[i]) % p_);
  return r;
}

Matrix Matrix::operator*(const Matrix& o) const {
  check_same_field(o);
  if (cols_ != o.rows_) throw std::invalid_argument("Matrix::*: shape mismatch");
  Matrix r(rows_, o.cols_, p_);
  const std::uint64_t p = p_;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = 0; k < cols_; ++k) {
      std::uint64_t aik = a_[i * cols_ + k];
      if (aik == 0) continue;
      const std::uint32_t* orow = &o.a_[k * o.cols_];
      std::uint32_t* rrow = &r.a_[i * o.cols_];
      for (std::size_t j = 0; j < o.cols_; ++j)
        rrow[j] = static_cast<std::uint32_t>((rrow[j] + aik * orow[j]) % p);
    }
  }
  return r;
}

Matrix Matrix::scaled(std::uint32_t c) const {
  Matrix r(rows_, cols_, p_);
  std::uint64_t cc = c % p_;
  for (std::size_t i = 0; i < a_.size(); ++i)
    r.a_[i] = static_cast<std::uint32_t>((cc * a_[i]) % p_);
  return r;
}

Matrix Matrix::operator-() const { return scaled(p_ - 1); }

Matrix Matrix::transposed() const {
  Matrix r(cols_, rows_, p_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r.at(j, i) = at(i, j);
  return r;
}

Matrix Matrix::col_slice(std::size_t c0, std::size_t c1) const {
  if (c0 > c1 || c1 > cols_) throw std::out_of_range("Matrix::col_slice");
  Matrix r(rows_, c1 - c0, p_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = c0; j < c1; ++j) r.at(i, j - c0) = at(i, j);
  return r;
}

Matrix Matrix::row_slice(std::size_t r0, std::size_t r1) const {
  if (r0 > r1 || r1 > rows_) throw std::out_of_range("Matrix::row_slice");
  Matrix r(r1 - r0, cols_, p_);
  for (std::size_t i = r0; i < r1; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r.at(i - r0, j) = at(i, j);
  return r;
}

Matrix Matrix::select_cols(const std::vector<std::size_t>& idx) const {
  Matrix r(rows_, idx.size(), p_);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] >= cols_) throw std::out_of_range("Matrix::select_cols");
    for (std::size_t i = 0; i < rows_; ++i) r.at(i, j) = at(i, idx[j]);
  }
  return r;
}

Matrix Matrix::hstack(const Matrix& a, const Matrix& b) {
  a.check_same_field(b);
  if (a.rows_ != b.rows_) throw std::invalid_argument("Matrix::hstack: row mismatch");
  Matrix r(a.rows_, a.cols_ + b.cols_, a.p_);
  for (std::size_t i = 0; i < a.rows_; ++i) {
    for (std::size_t j = 0; j < a.cols_; ++j) r.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < b.cols_; ++j) r.at(i, a.cols_ + j) = b.at(i, j);
  }
  return r;
}

Matrix Matrix::vstack(const Matrix& a, const Matrix& b) {
  a.check_same_field(b);
  if (a.cols_ != b.cols_) throw std::invalid_argument("Matrix::vstack: col mismatch");
  Matrix r(a.rows_ + b.rows_, a.cols_, a.p_);
  for (std::size_t i = 0; i < a.rows_; ++i)
    for (std::size_t j = 0; j < a.cols_; ++j) r.at(i, j) = a.at(i, j);
  for (std::size_t i = 0; i < b.rows_; ++i)
    for (std::size_t j = 0; j < b.cols_; ++j) r.at(a.rows_ + i, j) = b.at(i, j);
  return r;
}

Matrix Matrix::block_diag(const std::vector<Matrix>& blocks, std::uint32_t p) {
  std::size_t rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
    p = b.modulus();
  }
  Matrix r(rows, cols, p);
  std::size_t r0 = 0, c0 = 0;
  for (const auto& b : blocks) {
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) r.at(r0 + i, c0 + j) = b.at(i, j);
    r0 += b.rows();
    c0 += b.cols();
  }
  return r;
}

}  // namespace fsh
