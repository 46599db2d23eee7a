#pragma once

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fsh {

inline constexpr std::uint32_t kDefaultPrime = 32003;

// Dense matrix over the prime field F_p, row-major. 0xN and Nx0 matrices
// are legal and stand for maps in or out of the zero space.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0), p_(kDefaultPrime) {}
  Matrix(std::size_t rows, std::size_t cols, std::uint32_t p = kDefaultPrime)
      : rows_(rows), cols_(cols), p_(p), a_(rows * cols, 0) {
    if (p < 2) throw std::invalid_argument("Matrix: modulus must be >= 2");
  }

  static Matrix identity(std::size_t n, std::uint32_t p = kDefaultPrime) {
    Matrix m(n, n, p);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint32_t modulus() const { return p_; }

  std::uint32_t& at(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  std::uint32_t at(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  // Sets the entry to value mod p (accepts negatives).
  void set(std::size_t r, std::size_t c, std::int64_t v) {
    std::int64_t m = v % static_cast<std::int64_t>(p_);
    if (m < 0) m += p_;
    at(r, c) = static_cast<std::uint32_t>(m);
  }

  bool is_zero() const {
    for (auto v : a_)
      if (v != 0) return false;
    return true;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && p_ == o.p_ && a_ == o.a_;
  }
  bool operator!=(const Matrix& o) const { return !(*this == o); }

  Matrix operator+(const Matrix& o) const;
  Matrix operator-(const Matrix& o) const;
  Matrix operator*(const Matrix& o) const;  // matrix product
  Matrix scaled(std::uint32_t c) const;
  Matrix operator-() const;
  Matrix transposed() const;

  // Columns [c0, c1) as a new matrix.
  Matrix col_slice(std::size_t c0, std::size_t c1) const;
  Matrix row_slice(std::size_t r0, std::size_t r1) const;
  Matrix select_cols(const std::vector<std::size_t>& idx) const;

  static Matrix hstack(const Matrix& a, const Matrix& b);
  static Matrix vstack(const Matrix& a, const Matrix& b);
  // Block-diagonal of the given matrices (empty list -> 0x0).
  static Matrix block_diag(const std::vector<Matrix>& blocks,
                           std::uint32_t p = kDefaultPrime);

 private:
  void check_same_field(const Matrix& o) const {
    if (p_ != o.p_) throw std::invalid_argument("Matrix: modulus mismatch");
  }

  std::size_t rows_, cols_;
  std::uint32_t p_;
  std::vector<std::uint32_t> a_;
};

std::uint32_t fp_inv(std::uint32_t a, std::uint32_t p);

}  // namespace fsh
