#pragma once

#include <map>

#include "fsh/linalg.hpp"

namespace fsh {

// Bounded cochain complex of finite-dimensional F_p vector spaces.
// Degrees outside the stored window are zero. The differential d(n) maps
// degree n to degree n+1 and satisfies d(n+1) * d(n) = 0.
class Complex {
 public:
  explicit Complex(std::uint32_t p = kDefaultPrime) : p_(p) {}

  std::uint32_t modulus() const { return p_; }

  std::size_t dim(int n) const {
    auto it = dims_.find(n);
    return it == dims_.end() ? 0 : it->second;
  }
  void set_dim(int n, std::size_t d) {
    if (d == 0)
      dims_.erase(n);
    else
      dims_[n] = d;
  }

  Matrix diff(int n) const {
    auto it = d_.find(n);
    if (it != d_.end()) return it->second;
    return Matrix(dim(n + 1), dim(n), p_);
  }
  void set_diff(int n, Matrix m) {
    if (m.rows() != dim(n + 1) || m.cols() != dim(n))
      throw std::invalid_argument("Complex::set_diff: shape mismatch");
    if (m.is_zero())
      d_.erase(n);
    else
      d_[n] = std::move(m);
  }

  // Degree window [lo, hi] of possibly-nonzero components; lo > hi when zero.
  int lo() const { return dims_.empty() ? 0 : dims_.begin()->first; }
  int hi() const { return dims_.empty() ? -1 : dims_.rbegin()->first; }
  bool is_zero_object() const { return dims_.empty(); }

  std::size_t total_dim() const {
    std::size_t t = 0;
    for (auto& [n, d] : dims_) t += d;
    return t;
  }

  const std::map<int, std::size_t>& dims() const { return dims_; }

  // Throws unless every differential is shape-correct and d*d = 0.
  void validate() const;

  bool operator==(const Complex& o) const;
  bool operator!=(const Complex& o) const { return !(*this == o); }

  // Complex concentrated in one degree with zero differential.
  static Complex point(int degree, std::size_t dim, std::uint32_t p = kDefaultPrime);

 private:
  std::uint32_t p_;
  std::map<int, std::size_t> dims_;
  std::map<int, Matrix> d_;
};

// Degreewise linear map A -> B shifted by `degree`; no commutation
// constraint. Chain maps are the degree-0 maps commuting with d, checked
// separately.
class GradedMap {
 public:
  GradedMap() = default;
  GradedMap(Complex src, Complex tgt, int degree = 0)
      : src_(std::move(src)), tgt_(std::move(tgt)), degree_(degree) {}

  const Complex& src() const { return src_; }
  const Complex& tgt() const { return tgt_; }
  int degree() const { return degree_; }

  // Component in degree n: matrix of shape tgt.dim(n+degree) x src.dim(n).
  Matrix map(int n) const {
    auto it = maps_.find(n);
    if (it != maps_.end()) return it->second;
    return Matrix(tgt_.dim(n + degree_), src_.dim(n), src_.modulus());
  }
  void set_map(int n, Matrix m) {
    if (m.rows() != tgt_.dim(n + degree_) || m.cols() != src_.dim(n))
      throw std::invalid_argument("GradedMap::set_map: shape mismatch");
    if (m.is_zero())
      maps_.erase(n);
    else
      maps_[n] = std::move(m);
  }

  bool is_chain_map() const;       // degree 0 and commutes with d
  void validate_chain_map() const; // throws when not

  bool is_zero() const {
    for (auto& [n, m] : maps_) if (!m.is_zero()) return false;
    return true;
  }

  GradedMap operator+(const GradedMap& o) const;
  GradedMap operator-(const GradedMap& o) const;
  GradedMap scaled(std::uint32_t c) const;

  bool operator==(const GradedMap& o) const;

  static GradedMap identity(const Complex& a);
  // g after f (composition).
  static GradedMap compose(const GradedMap& g, const GradedMap& f);

 private:
  Complex src_, tgt_;
  int degree_ = 0;
  std::map<int, Matrix> maps_;
};

using ChainMap = GradedMap;  // chain maps are degree-0 graded maps with d f = f d

// Homotopy h between chain maps f and g: degree -1 map with
// f - g = d h + h d.
struct Homotopy {
  ChainMap f, g;
  GradedMap h;
  void validate() const;  // throws unless the homotopy identity holds
};

}  // namespace fsh
