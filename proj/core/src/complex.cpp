#include "fsh/complex.hpp"

namespace fsh {

void Complex::validate() const {
  for (auto& [n, m] : d_) {
    if (m.rows() != dim(n + 1) || m.cols() != dim(n))
      throw std::logic_error("Complex: differential shape mismatch");
    if (m.modulus() != p_) throw std::logic_error("Complex: modulus mismatch");
  }
  for (auto& [n, d] : dims_) {
    (void)d;
    Matrix dd = diff(n + 1) * diff(n);
    if (!dd.is_zero()) throw std::logic_error("Complex: d*d != 0");
  }
}

bool Complex::operator==(const Complex& o) const {
  if (p_ != o.p_ || dims_ != o.dims_) return false;
  for (auto& [n, d] : dims_) {
    (void)d;
    if (diff(n) != o.diff(n)) return false;
  }
  return true;
}

Complex Complex::point(int degree, std::size_t dim, std::uint32_t p) {
  Complex c(p);
  c.set_dim(degree, dim);
  return c;
}

bool GradedMap::is_chain_map() const {
  if (degree_ != 0) return false;
  for (int n = std::min(src_.lo(), tgt_.lo()) - 1; n <= std::max(src_.hi(), tgt_.hi()); ++n) {
    if (tgt_.diff(n) * map(n) != GradedMap::map(n + 1) * src_.diff(n)) return false;
  }
  return true;
}

void GradedMap::validate_chain_map() const {
  if (!is_chain_map()) throw std::logic_error("GradedMap: not a chain map");
}

GradedMap GradedMap::operator+(const GradedMap& o) const {
  if (degree_ != o.degree_) throw std::invalid_argument("GradedMap::+: degree mismatch");
  GradedMap r(src_, tgt_, degree_);
  for (int n = src_.lo(); n <= src_.hi(); ++n)
    if (src_.dim(n) && tgt_.dim(n + degree_)) r.set_map(n, map(n) + o.map(n));
  return r;
}

GradedMap GradedMap::operator-(const GradedMap& o) const {
  if (degree_ != o.degree_) throw std::invalid_argument("GradedMap::-: degree mismatch");
  GradedMap r(src_, tgt_, degree_);
  for (int n = src_.lo(); n <= src_.hi(); ++n)
    if (src_.dim(n) && tgt_.dim(n + degree_)) r.set_map(n, map(n) - o.map(n));
  return r;
}

GradedMap GradedMap::scaled(std::uint32_t c) const {
  GradedMap r(src_, tgt_, degree_);
  for (auto& [n, m] : maps_) r.set_map(n, m.scaled(c));
  return r;
}

bool GradedMap::operator==(const GradedMap& o) const {
  if (degree_ != o.degree_ || src_ != o.src_ || tgt_ != o.tgt_) return false;
  for (int n = src_.lo(); n <= src_.hi(); ++n)
    if (map(n) != o.map(n)) return false;
  return true;
}

GradedMap GradedMap::identity(const Complex& a) {
  GradedMap r(a, a, 0);
  for (auto& [n, d] : a.dims()) r.set_map(n, Matrix::identity(d, a.modulus()));
  return r;
}

GradedMap GradedMap::compose(const GradedMap& g, const GradedMap& f) {
  GradedMap r(f.src(), g.tgt(), f.degree() + g.degree());
  for (int n = f.src().lo(); n <= f.src().hi(); ++n) {
    if (!f.src().dim(n) || !g.tgt().dim(n + r.degree())) continue;
    r.set_map(n, g.map(n + f.degree()) * f.map(n));
  }
  return r;
}

void Homotopy::validate() const {
  if (h.degree() != -1) throw std::logic_error("Homotopy: h must have degree -1");
  const Complex& A = f.src();
  const Complex& B = f.tgt();
  for (int n = A.lo(); n <= A.hi(); ++n) {
    Matrix lhs = f.map(n) - g.map(n);
    Matrix rhs = B.diff(n - 1) * h.map(n) + h.map(n + 1) * A.diff(n);
    if (lhs != rhs) throw std::logic_error("Homotopy: identity fails");
  }
}

}  // namespace fsh
