#include "fsh/sheaf.hpp"

#include <algorithm>
#include <random>

#include "sheaf_util.hpp"

namespace fsh {

using detail::amb_dim;
using detail::amb_offset;
using detail::gm_degrees;
using detail::gm_dim;
using detail::gm_unvec;
using detail::gm_vec;
using detail::sgm_dim;
using detail::sgm_unvec;
using detail::sgm_vec;
using detail::strict_pairs;
using detail::window;

namespace detail {

Matrix postcompose_matrix(const GradedMap& g, const Complex& a, int d) {
  const Complex& b = g.src();
  const Complex& c = g.tgt();
  int e = g.degree();
  std::uint32_t p = a.modulus();
  Matrix m(gm_dim(a, c, d + e), gm_dim(a, b, d), p);
  for (int n : gm_degrees(a, b, d)) {
    if (!c.dim(n + d + e)) continue;
    std::size_t in_off = gm_block_offset(a, b, d, n);
    std::size_t out_off = gm_block_offset(a, c, d + e, n);
    Matrix gm = g.map(n + d);
    std::size_t ac = a.dim(n);
    for (std::size_t rp = 0; rp < gm.rows(); ++rp)
      for (std::size_t r = 0; r < gm.cols(); ++r) {
        std::uint32_t v = gm.at(rp, r);
        if (!v) continue;
        for (std::size_t c0 = 0; c0 < ac; ++c0)
          m.at(out_off + rp * ac + c0, in_off + r * ac + c0) = v;
      }
  }
  return m;
}

Matrix precompose_matrix(const GradedMap& f, const Complex& b, int d) {
  const Complex& src = f.src();
  const Complex& tgt = f.tgt();
  int e = f.degree();
  std::uint32_t p = b.modulus();
  Matrix m(gm_dim(src, b, d + e), gm_dim(tgt, b, d), p);
  for (int n : gm_degrees(src, b, d + e)) {
    std::size_t tc = tgt.dim(n + e);
    if (!tc || !b.dim(n + e + d)) continue;
    std::size_t in_off = gm_block_offset(tgt, b, d, n + e);
    std::size_t out_off = gm_block_offset(src, b, d + e, n);
    Matrix fm = f.map(n);  // tgt.dim(n+e) x src.dim(n)
    std::size_t sc = src.dim(n);
    std::size_t br = b.dim(n + e + d);
    for (std::size_t cin = 0; cin < tc; ++cin)
      for (std::size_t cout = 0; cout < sc; ++cout) {
        std::uint32_t v = fm.at(cin, cout);
        if (!v) continue;
        for (std::size_t r = 0; r < br; ++r) {
          std::uint32_t& slot = m.at(out_off + r * sc + cout, in_off + r * tc + cin);
          slot = static_cast<std::uint32_t>(
              (slot + static_cast<std::uint64_t>(v)) % p);
        }
      }
  }
  return m;
}

Matrix hom_diff_matrix(const Complex& a, const Complex& b, int d) {
  Matrix post = postcompose_matrix(diff_map(b), a, d);
  Matrix pre = precompose_matrix(diff_map(a), b, d);
  return (d % 2 == 0) ? post - pre : post + pre;
}

Matrix nat_rows(const SheafComplex& f, const SheafComplex& g, int d,
                const std::vector<int>& pts) {
  std::uint32_t p = f.ctx().p;
  std::size_t cols = 0;
  for (int y : pts) cols += gm_dim(f.stalk(y), g.stalk(y), d);
  Matrix a(0, cols, p);
  for (auto [x, y] : strict_pairs(*f.ctx().space, pts)) {
    std::size_t nr = gm_dim(f.stalk(x), g.stalk(y), d);
    if (!nr) continue;
    Matrix row(nr, cols, p);
    Matrix p1 = postcompose_matrix(g.res(x, y), f.stalk(x), d);
    Matrix p2 = precompose_matrix(f.res(x, y), g.stalk(y), d);
    std::size_t ox = hom_amb_offset(f, g, pts, x, d);
    std::size_t oy = hom_amb_offset(f, g, pts, y, d);
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t c = 0; c < p1.cols(); ++c) row.at(r, ox + c) = p1.at(r, c);
      for (std::size_t c = 0; c < p2.cols(); ++c)
        row.at(r, oy + c) = (p - p2.at(r, c)) % p;
    }
    a = Matrix::vstack(a, row);
  }
  return a;
}

}  // namespace detail

// --- SheafComplex ------------------------------------------------------------

ChainMap SheafComplex::res(int x, int y) const {
  if (!ctx_.space->leq(x, y))
    throw std::invalid_argument("SheafComplex::res: points are not related");
  if (x == y) return GradedMap::identity(stalk(x));
  auto it = res_.find({x, y});
  if (it != res_.end()) return it->second;
  return GradedMap(stalk(x), stalk(y), 0);
}

void SheafComplex::set_res(int x, int y, ChainMap m) {
  if (x == y) throw std::invalid_argument("SheafComplex::set_res: x == y");
  if (!ctx_.space->leq(x, y))
    throw std::invalid_argument("SheafComplex::set_res: points are not related");
  if (m.src() != stalk(x) || m.tgt() != stalk(y) || m.degree() != 0)
    throw std::invalid_argument("SheafComplex::set_res: endpoint mismatch");
  if (m.is_zero())
    res_.erase({x, y});
  else
    res_[{x, y}] = std::move(m);
}

int SheafComplex::lo() const { return window(*this, all_points(points())).first; }
int SheafComplex::hi() const { return window(*this, all_points(points())).second; }

bool SheafComplex::is_zero_object() const {
  for (auto& s : stalks_)
    if (!s.is_zero_object()) return false;
  return true;
}

void SheafComplex::validate() const {
  const FinSpace& sp = *ctx_.space;
  for (std::size_t x = 0; x < stalks_.size(); ++x) {
    stalks_[x].validate();
    if (stalks_[x].modulus() != ctx_.p)
      throw std::invalid_argument("SheafComplex: stalk modulus mismatch");
  }
  std::vector<int> all = all_points(points());
  for (auto [x, y] : strict_pairs(sp, all)) {
    res(x, y).validate_chain_map();
    for (int z : all)
      if (z != y && sp.leq(y, z)) {
        if (GradedMap::compose(res(y, z), res(x, y)) != res(x, z))
          throw std::invalid_argument("SheafComplex: restriction composition fails");
      }
  }
}

bool SheafComplex::operator==(const SheafComplex& o) const {
  if (!(ctx_ == o.ctx_) || stalks_ != o.stalks_) return false;
  std::vector<int> all = all_points(points());
  for (auto [x, y] : strict_pairs(*ctx_.space, all))
    if (res(x, y) != o.res(x, y)) return false;
  return true;
}

std::vector<int> all_points(std::size_t n) {
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(i);
  return out;
}

// --- SheafGradedMap ----------------------------------------------------------

SheafGradedMap::SheafGradedMap(SheafComplex src, SheafComplex tgt, int degree)
    : src_(std::move(src)), tgt_(std::move(tgt)), degree_(degree) {
  if (!(src_.ctx() == tgt_.ctx()))
    throw std::invalid_argument("SheafGradedMap: context mismatch");
  comps_.reserve(src_.points());
  for (std::size_t x = 0; x < src_.points(); ++x)
    comps_.emplace_back(src_.stalk(static_cast<int>(x)),
                        tgt_.stalk(static_cast<int>(x)), degree);
}

void SheafGradedMap::set_at(int x, GradedMap g) {
  GradedMap& slot = comps_.at(static_cast<std::size_t>(x));
  if (g.src() != slot.src() || g.tgt() != slot.tgt() || g.degree() != degree_)
    throw std::invalid_argument("SheafGradedMap::set_at: endpoint mismatch");
  slot = std::move(g);
}

bool SheafGradedMap::is_natural() const {
  for (auto [x, y] : strict_pairs(*src_.ctx().space, all_points(src_.points())))
    if (GradedMap::compose(tgt_.res(x, y), at(x)) !=
        GradedMap::compose(at(y), src_.res(x, y)))
      return false;
  return true;
}

bool SheafGradedMap::is_chain_map() const {
  if (degree_ != 0 || !is_natural()) return false;
  for (auto& c : comps_)
    if (!c.is_chain_map()) return false;
  return true;
}

void SheafGradedMap::validate_chain_map() const {
  if (!is_natural())
    throw std::invalid_argument("SheafGradedMap: family is not natural");
  for (auto& c : comps_) c.validate_chain_map();
}

bool SheafGradedMap::is_zero() const {
  for (auto& c : comps_)
    if (!c.is_zero()) return false;
  return true;
}

SheafGradedMap SheafGradedMap::operator+(const SheafGradedMap& o) const {
  SheafGradedMap out(src_, tgt_, degree_);
  for (std::size_t x = 0; x < comps_.size(); ++x)
    out.comps_[x] = comps_[x] + o.comps_[x];
  return out;
}

SheafGradedMap SheafGradedMap::operator-(const SheafGradedMap& o) const {
  SheafGradedMap out(src_, tgt_, degree_);
  for (std::size_t x = 0; x < comps_.size(); ++x)
    out.comps_[x] = comps_[x] - o.comps_[x];
  return out;
}

SheafGradedMap SheafGradedMap::scaled(std::uint32_t c) const {
  SheafGradedMap out(src_, tgt_, degree_);
  for (std::size_t x = 0; x < comps_.size(); ++x) out.comps_[x] = comps_[x].scaled(c);
  return out;
}

bool SheafGradedMap::operator==(const SheafGradedMap& o) const {
  return degree_ == o.degree_ && src_ == o.src_ && tgt_ == o.tgt_ &&
         comps_ == o.comps_;
}

SheafGradedMap SheafGradedMap::identity(const SheafComplex& f) {
  SheafGradedMap out(f, f, 0);
  for (std::size_t x = 0; x < f.points(); ++x)
    out.set_at(static_cast<int>(x), GradedMap::identity(f.stalk(static_cast<int>(x))));
  return out;
}

SheafGradedMap SheafGradedMap::compose(const SheafGradedMap& g, const SheafGradedMap& f) {
  SheafGradedMap out(f.src(), g.tgt(), f.degree() + g.degree());
  for (std::size_t x = 0; x < f.src().points(); ++x) {
    int xi = static_cast<int>(x);
    out.set_at(xi, GradedMap::compose(g.at(xi), f.at(xi)));
  }
  return out;
}

void SheafHomotopy::validate() const {
  f.validate_chain_map();
  g.validate_chain_map();
  if (!h.is_natural())
    throw std::invalid_argument("SheafHomotopy: h is not natural");
  if (!(f - g == sheaf_hom_diff(h)))
    throw std::invalid_argument("SheafHomotopy: identity f - g = Dh fails");
}

SheafGradedMap sheaf_diff_map(const SheafComplex& f) {
  SheafGradedMap out(f, f, 1);
  for (std::size_t x = 0; x < f.points(); ++x)
    out.set_at(static_cast<int>(x), diff_map(f.stalk(static_cast<int>(x))));
  return out;
}

SheafGradedMap sheaf_hom_diff(const SheafGradedMap& f) {
  SheafGradedMap out(f.src(), f.tgt(), f.degree() + 1);
  for (std::size_t x = 0; x < f.src().points(); ++x)
    out.set_at(static_cast<int>(x), hom_diff(f.at(static_cast<int>(x))));
  return out;
}

// --- constructors ------------------------------------------------------------

SheafComplex make_constant(const SiteContext& ctx, const Complex& v) {
  SheafComplex f(ctx);
  for (std::size_t x = 0; x < ctx.space->size(); ++x)
    f.set_stalk(static_cast<int>(x), v);
  for (auto [x, y] : strict_pairs(*ctx.space, all_points(ctx.space->size())))
    f.set_res(x, y, GradedMap::identity(v));
  return f;
}

SheafComplex make_skyscraper(const SiteContext& ctx, int x, const Complex& v) {
  SheafComplex f(ctx);
  std::vector<int> supp = ctx.space->down_closure({x});
  for (int y : supp) f.set_stalk(y, v);
  for (auto [a, b] : strict_pairs(*ctx.space, supp))
    f.set_res(a, b, GradedMap::identity(v));
  return f;
}

SheafComplex make_cell(const SiteContext& ctx, int x, const Complex& v) {
  SheafComplex f(ctx);
  std::vector<int> supp = ctx.space->minimal_open(x);
  for (int y : supp) f.set_stalk(y, v);
  for (auto [a, b] : strict_pairs(*ctx.space, supp))
    f.set_res(a, b, GradedMap::identity(v));
  return f;
}

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c,
                     std::uint32_t p) {
  Matrix m(r, c, p);
  std::uniform_int_distribution<std::uint32_t> d(0, p - 1);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m.at(i, j) = d(rng);
  return m;
}

Matrix random_invertible(std::mt19937_64& rng, std::size_t n, std::uint32_t p) {
  while (true) {
    Matrix m = random_matrix(rng, n, n, p);
    if (inverse(m)) return m;
  }
}

Complex random_complex(std::mt19937_64& rng, std::uint32_t p, const RandomBounds& b) {
  std::uniform_int_distribution<std::size_t> dd(0, b.max_dim);
  Complex s(p), t(p);
  for (int n = b.lo; n <= b.hi; ++n) {
    s.set_dim(n, dd(rng));
    if (n < b.hi) t.set_dim(n + 1, dd(rng));
  }
  DirectSum ds = direct_sum(s, icone(t));
  Complex a = ds.total;
  // conjugate by a random degreewise isomorphism
  Complex out(p);
  for (auto& [n, d] : a.dims()) out.set_dim(n, d);
  std::map<int, Matrix> phi;
  for (auto& [n, d] : a.dims()) phi[n] = random_invertible(rng, d, p);
  for (auto& [n, d] : a.dims()) {
    if (!a.dim(n + 1)) continue;
    out.set_diff(n, phi.at(n + 1) * a.diff(n) * *inverse(phi.at(n)));
  }
  out.validate();
  return out;
}

}  // namespace

SheafComplex make_random(const SiteContext& ctx, std::uint64_t seed,
                         const RandomBounds& b) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dx(0, static_cast<int>(ctx.space->size()) - 1);
  std::uniform_int_distribution<int> dk(0, 1);
  SheafComplex f(ctx);
  bool first = true;
  for (std::size_t i = 0; i < b.pieces; ++i) {
    Complex v = random_complex(rng, ctx.p, b);
    int x = dx(rng);
    SheafComplex piece =
        dk(rng) ? make_skyscraper(ctx, x, v) : make_cell(ctx, x, v);
    f = first ? piece : sheaf_direct_sum(f, piece).total;
    first = false;
  }
  if (!b.twist) return f;
  // conjugate every stalk by a random degreewise isomorphism
  SheafComplex out(ctx);
  std::vector<std::map<int, Matrix>> phi(f.points());
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    const Complex& a = f.stalk(x);
    Complex s(ctx.p);
    for (auto& [n, d] : a.dims()) {
      s.set_dim(n, d);
      phi[xi][n] = random_invertible(rng, d, ctx.p);
    }
    for (auto& [n, d] : a.dims())
      if (a.dim(n + 1))
        s.set_diff(n, phi[xi].at(n + 1) * a.diff(n) * *inverse(phi[xi].at(n)));
    out.set_stalk(x, std::move(s));
  }
  for (auto [x, y] : strict_pairs(*ctx.space, all_points(f.points()))) {
    ChainMap r = f.res(x, y);
    GradedMap m(out.stalk(x), out.stalk(y), 0);
    for (auto& [n, d] : out.stalk(x).dims())
      if (out.stalk(y).dim(n))
        m.set_map(n, phi[static_cast<std::size_t>(y)].at(n) * r.map(n) *
                         *inverse(phi[static_cast<std::size_t>(x)].at(n)));
    out.set_res(x, y, std::move(m));
  }
  return out;
}

namespace {

// Block-diagonal hom differential across the stalks.
Matrix sheaf_hom_diff_matrix(const SheafComplex& f, const SheafComplex& g, int deg) {
  std::vector<Matrix> blocks;
  for (std::size_t x = 0; x < f.points(); ++x)
    blocks.push_back(detail::hom_diff_matrix(f.stalk(static_cast<int>(x)),
                                             g.stalk(static_cast<int>(x)), deg));
  return Matrix::block_diag(blocks, f.ctx().p);
}

// Basis of natural degree-`deg` families F -> G, optionally intersected with
// the kernel of the hom differential (chain maps when deg = 0).
Matrix nat_family_kernel(const SheafComplex& f, const SheafComplex& g, int deg,
                         bool chain) {
  Matrix a = detail::nat_rows(f, g, deg, all_points(f.points()));
  if (chain) a = Matrix::vstack(a, sheaf_hom_diff_matrix(f, g, deg));
  return kernel(a);
}

}  // namespace

SheafChainMap random_sheaf_map(const SheafComplex& f, const SheafComplex& g,
                               std::uint64_t seed) {
  Matrix k = nat_family_kernel(f, g, 0, true);
  std::mt19937_64 rng(seed);
  Matrix coef = random_matrix(rng, k.cols(), 1, f.ctx().p);
  return sgm_unvec(f, g, 0, k * coef);
}

SheafGradedMap random_sheaf_graded(const SheafComplex& f, const SheafComplex& g,
                                   int degree, std::uint64_t seed) {
  Matrix k = nat_family_kernel(f, g, degree, false);
  std::mt19937_64 rng(seed);
  Matrix coef = random_matrix(rng, k.cols(), 1, f.ctx().p);
  return sgm_unvec(f, g, degree, k * coef);
}

// --- additive structure ------------------------------------------------------

SheafDirectSum sheaf_direct_sum(const SheafComplex& a, const SheafComplex& b) {
  if (!(a.ctx() == b.ctx()))
    throw std::invalid_argument("sheaf_direct_sum: context mismatch");
  SheafComplex t(a.ctx());
  std::vector<DirectSum> ds;
  ds.reserve(a.points());
  for (std::size_t xi = 0; xi < a.points(); ++xi) {
    int x = static_cast<int>(xi);
    ds.push_back(direct_sum(a.stalk(x), b.stalk(x)));
    t.set_stalk(x, ds.back().total);
  }
  for (auto [x, y] : strict_pairs(*a.ctx().space, all_points(a.points()))) {
    auto& dx = ds[static_cast<std::size_t>(x)];
    auto& dy = ds[static_cast<std::size_t>(y)];
    GradedMap r = GradedMap::compose(dy.incl_left,
                                     GradedMap::compose(a.res(x, y), dx.proj_left)) +
                  GradedMap::compose(dy.incl_right,
                                     GradedMap::compose(b.res(x, y), dx.proj_right));
    t.set_res(x, y, std::move(r));
  }
  SheafDirectSum out{t, SheafChainMap(a, t), SheafChainMap(b, t),
                     SheafChainMap(t, a), SheafChainMap(t, b)};
  for (std::size_t xi = 0; xi < a.points(); ++xi) {
    int x = static_cast<int>(xi);
    out.incl_left.set_at(x, ds[xi].incl_left);
    out.incl_right.set_at(x, ds[xi].incl_right);
    out.proj_left.set_at(x, ds[xi].proj_left);
    out.proj_right.set_at(x, ds[xi].proj_right);
  }
  return out;
}

SheafComplex sheaf_shift(int n, const SheafComplex& a) {
  SheafComplex out(a.ctx());
  for (std::size_t xi = 0; xi < a.points(); ++xi)
    out.set_stalk(static_cast<int>(xi), shift(n, a.stalk(static_cast<int>(xi))));
  for (auto [x, y] : strict_pairs(*a.ctx().space, all_points(a.points())))
    out.set_res(x, y, shift(n, a.res(x, y)));
  return out;
}

SheafComplex sheaf_cone(const SheafChainMap& f) {
  SheafComplex out(f.src().ctx());
  for (std::size_t xi = 0; xi < f.src().points(); ++xi)
    out.set_stalk(static_cast<int>(xi), cone(f.at(static_cast<int>(xi))));
  for (auto [x, y] : strict_pairs(*f.src().ctx().space, all_points(f.src().points())))
    out.set_res(x, y, cone_map(f.at(x), f.at(y), f.tgt().res(x, y), f.src().res(x, y)));
  return out;
}

SheafChainMap sheaf_cone_in(const SheafChainMap& f) {
  SheafComplex c = sheaf_cone(f);
  SheafChainMap out(f.tgt(), c);
  for (std::size_t xi = 0; xi < c.points(); ++xi) {
    int x = static_cast<int>(xi);
    GradedMap m(f.tgt().stalk(x), c.stalk(x), 0);
    for (auto& [n, d] : f.tgt().stalk(x).dims()) {
      Matrix blk(c.stalk(x).dim(n), d, c.ctx().p);
      for (std::size_t i = 0; i < d; ++i) blk.at(i, i) = 1;
      m.set_map(n, std::move(blk));
    }
    out.set_at(x, std::move(m));
  }
  return out;
}

SheafChainMap sheaf_cone_out(const SheafChainMap& f) {
  SheafComplex c = sheaf_cone(f);
  SheafComplex sh = sheaf_shift(1, f.src());
  SheafChainMap out(c, sh);
  for (std::size_t xi = 0; xi < c.points(); ++xi) {
    int x = static_cast<int>(xi);
    GradedMap m(c.stalk(x), sh.stalk(x), 0);
    for (auto& [n, d] : c.stalk(x).dims()) {
      std::size_t bd = f.tgt().stalk(x).dim(n);
      std::size_t ad = f.src().stalk(x).dim(n + 1);
      Matrix blk(ad, d, c.ctx().p);
      for (std::size_t i = 0; i < ad; ++i) blk.at(i, bd + i) = 1;
      m.set_map(n, std::move(blk));
    }
    out.set_at(x, std::move(m));
  }
  return out;
}

bool sheaf_is_acyclic(const SheafComplex& f) {
  for (std::size_t x = 0; x < f.points(); ++x)
    if (!is_acyclic(f.stalk(static_cast<int>(x)))) return false;
  return true;
}

bool sheaf_is_quasi_iso(const SheafChainMap& f) {
  for (std::size_t x = 0; x < f.src().points(); ++x)
    if (!is_quasi_iso(f.at(static_cast<int>(x)))) return false;
  return true;
}

// --- sections ----------------------------------------------------------------

SectionsResult sections_full(const SheafComplex& f, const std::vector<int>& subset) {
  std::vector<int> pts = subset;
  std::sort(pts.begin(), pts.end());
  std::uint32_t p = f.ctx().p;
  SectionsResult out;
  out.pts = pts;
  out.cx = Complex(p);
  auto [lo, hi] = window(f, pts);
  auto pairs = strict_pairs(*f.ctx().space, pts);
  for (int n = lo; n <= hi; ++n) {
    std::size_t ad = amb_dim(f, pts, n);
    if (ad == 0) continue;
    Matrix a(0, ad, p);
    for (auto [x, y] : pairs) {
      std::size_t ry = f.stalk(y).dim(n);
      if (ry == 0) continue;
      Matrix row(ry, ad, p);
      Matrix rm = f.res(x, y).map(n);
      std::size_t ox = amb_offset(f, pts, x, n);
      std::size_t oy = amb_offset(f, pts, y, n);
      for (std::size_t r = 0; r < ry; ++r) {
        for (std::size_t c = 0; c < f.stalk(x).dim(n); ++c) row.at(r, ox + c) = rm.at(r, c);
        row.set(r, oy + r, -1);
      }
      a = Matrix::vstack(a, row);
    }
    Matrix k = kernel(a);
    out.basis[n] = k;
    out.cx.set_dim(n, k.cols());
  }
  // induced differential: apply the stalkwise differentials and re-express
  for (int n = lo; n < hi; ++n) {
    if (!out.cx.dim(n) || !out.cx.dim(n + 1)) continue;
    std::vector<Matrix> blocks;
    for (int x : pts) blocks.push_back(f.stalk(x).diff(n));
    Matrix damb = Matrix::block_diag(blocks, p);
    auto sol = solve(out.basis.at(n + 1), damb * out.basis.at(n));
    if (!sol) throw std::logic_error("sections: differential does not preserve sections");
    out.cx.set_diff(n, *sol);
  }
  return out;
}

Complex sections(const SheafComplex& f, const std::vector<int>& subset) {
  return sections_full(f, subset).cx;
}

Complex global_sections(const SheafComplex& f) {
  return sections(f, all_points(f.points()));
}

ChainMap sections_restrict(const SheafComplex& f, const SectionsResult& big,
                           const SectionsResult& small) {
  GradedMap out(big.cx, small.cx, 0);
  for (auto& [n, bb] : big.basis) {
    if (!small.cx.dim(n)) continue;
    // project ambient coordinates of big onto the small subset
    Matrix proj(amb_dim(f, small.pts, n), bb.rows(), f.ctx().p);
    for (int x : small.pts) {
      std::size_t d = f.stalk(x).dim(n);
      if (!d) continue;
      std::size_t so = amb_offset(f, small.pts, x, n);
      std::size_t bo = amb_offset(f, big.pts, x, n);
      for (std::size_t i = 0; i < d; ++i) proj.at(so + i, bo + i) = 1;
    }
    auto sol = solve(small.basis.at(n), proj * bb);
    if (!sol) throw std::logic_error("sections_restrict: image is not a section");
    out.set_map(n, *sol);
  }
  return out;
}

GradedMap sections_map(const SheafGradedMap& phi, const SectionsResult& src_sec,
                       const SectionsResult& tgt_sec) {
  int deg = phi.degree();
  GradedMap out(src_sec.cx, tgt_sec.cx, deg);
  for (auto& [n, bb] : src_sec.basis) {
    if (!tgt_sec.cx.dim(n + deg)) continue;
    std::vector<Matrix> blocks;
    for (int x : src_sec.pts) blocks.push_back(phi.at(x).map(n));
    Matrix amb = Matrix::block_diag(blocks, phi.src().ctx().p);
    auto sol = solve(tgt_sec.basis.at(n + deg), amb * bb);
    if (!sol) throw std::logic_error("sections_map: image is not a section");
    out.set_map(n, *sol);
  }
  return out;
}

// --- pullback / pushforward --------------------------------------------------

SheafComplex pullback(const ContinuousMap& alpha, const SheafComplex& f) {
  if (!(*alpha.tgt == *f.ctx().space))
    throw std::invalid_argument("pullback: space mismatch");
  SiteContext ctx{alpha.src, f.ctx().p};
  SheafComplex out(ctx);
  for (std::size_t yi = 0; yi < ctx.space->size(); ++yi)
    out.set_stalk(static_cast<int>(yi), f.stalk(alpha(static_cast<int>(yi))));
  for (auto [y, yp] : strict_pairs(*ctx.space, all_points(ctx.space->size())))
    out.set_res(y, yp, alpha(y) != alpha(yp)
                           ? f.res(alpha(y), alpha(yp))
                           : ChainMap::identity(f.stalk(alpha(y))));
  return out;
}

SheafGradedMap pullback_map(const ContinuousMap& alpha, const SheafGradedMap& phi) {
  SheafGradedMap out(pullback(alpha, phi.src()), pullback(alpha, phi.tgt()),
                     phi.degree());
  for (std::size_t yi = 0; yi < alpha.src->size(); ++yi)
    out.set_at(static_cast<int>(yi), phi.at(alpha(static_cast<int>(yi))));
  return out;
}

namespace {

struct PushData {
  SheafComplex sheaf;
  std::vector<SectionsResult> secs;  // per point of the target space
};

PushData pushforward_full(const ContinuousMap& alpha, const SheafComplex& f) {
  if (!(*alpha.src == *f.ctx().space))
    throw std::invalid_argument("pushforward: space mismatch");
  SiteContext ctx{alpha.tgt, f.ctx().p};
  PushData out{SheafComplex(ctx), {}};
  out.secs.reserve(ctx.space->size());
  for (std::size_t xi = 0; xi < ctx.space->size(); ++xi) {
    int x = static_cast<int>(xi);
    out.secs.push_back(sections_full(f, alpha.preimage(ctx.space->minimal_open(x))));
    out.sheaf.set_stalk(x, out.secs.back().cx);
  }
  for (auto [x, y] : strict_pairs(*ctx.space, all_points(ctx.space->size())))
    out.sheaf.set_res(x, y, sections_restrict(f, out.secs[static_cast<std::size_t>(x)],
                                              out.secs[static_cast<std::size_t>(y)]));
  return out;
}

}  // namespace

SheafComplex pushforward(const ContinuousMap& alpha, const SheafComplex& f) {
  return pushforward_full(alpha, f).sheaf;
}

SheafGradedMap pushforward_map(const ContinuousMap& alpha, const SheafGradedMap& phi) {
  PushData ps = pushforward_full(alpha, phi.src());
  PushData pt = pushforward_full(alpha, phi.tgt());
  SheafGradedMap out(ps.sheaf, pt.sheaf, phi.degree());
  for (std::size_t xi = 0; xi < ps.sheaf.points(); ++xi)
    out.set_at(static_cast<int>(xi), sections_map(phi, ps.secs[xi], pt.secs[xi]));
  return out;
}

SheafChainMap push_pull_unit(const ContinuousMap& alpha, const SheafComplex& f) {
  SheafComplex pb = pullback(alpha, f);
  PushData pd = pushforward_full(alpha, pb);
  SheafChainMap out(f, pd.sheaf);
  std::uint32_t p = f.ctx().p;
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    const SectionsResult& sec = pd.secs[xi];
    GradedMap m(f.stalk(x), pd.sheaf.stalk(x), 0);
    for (auto& [n, d] : f.stalk(x).dims()) {
      if (!pd.sheaf.stalk(x).dim(n)) continue;  // empty fiber: unit is zero
      Matrix amb(amb_dim(pb, sec.pts, n), d, p);
      for (int y : sec.pts) {
        Matrix r = f.res(x, alpha(y)).map(n);
        std::size_t off = amb_offset(pb, sec.pts, y, n);
        for (std::size_t i = 0; i < r.rows(); ++i)
          for (std::size_t j = 0; j < r.cols(); ++j) amb.at(off + i, j) = r.at(i, j);
      }
      auto sol = solve(sec.basis.at(n), amb);
      if (!sol) throw std::logic_error("push_pull_unit: family is not a section");
      m.set_map(n, *sol);
    }
    out.set_at(x, std::move(m));
  }
  return out;
}

SheafChainMap pull_push_counit(const ContinuousMap& alpha, const SheafComplex& f) {
  PushData pd = pushforward_full(alpha, f);
  SheafComplex src = pullback(alpha, pd.sheaf);
  SheafChainMap out(src, f);
  for (std::size_t yi = 0; yi < alpha.src->size(); ++yi) {
    int y = static_cast<int>(yi);
    const SectionsResult& sec = pd.secs[static_cast<std::size_t>(alpha(y))];
    GradedMap m(src.stalk(y), f.stalk(y), 0);
    for (auto& [n, bb] : sec.basis) {
      std::size_t d = f.stalk(y).dim(n);
      if (!d) continue;
      std::size_t off = amb_offset(f, sec.pts, y, n);
      m.set_map(n, bb.row_slice(off, off + d));
    }
    out.set_at(y, std::move(m));
  }
  return out;
}

// --- generic solving ---------------------------------------------------------

std::optional<std::vector<SheafGradedMap>> sheaf_solve_graded(
    const std::vector<SheafUnknown>& unknowns,
    const std::vector<SheafEquation>& equations) {
  if (unknowns.empty()) return std::vector<SheafGradedMap>{};
  std::uint32_t p = unknowns[0].src.ctx().p;
  std::vector<std::size_t> offs(unknowns.size() + 1, 0);
  for (std::size_t u = 0; u < unknowns.size(); ++u)
    offs[u + 1] = offs[u] + sgm_dim(unknowns[u].src, unknowns[u].tgt, unknowns[u].degree);
  std::size_t cols = offs.back();

  std::vector<Matrix> arows, brows;
  auto add_equation = [&](auto&& eval_terms, const Matrix& rhs_vec) {
    std::size_t nr = rhs_vec.rows();
    if (nr == 0) return;
    Matrix block(nr, cols, p);
    for (std::size_t u = 0; u < unknowns.size(); ++u) {
      std::size_t ud = offs[u + 1] - offs[u];
      for (std::size_t c = 0; c < ud; ++c) {
        Matrix e(ud, 1, p);
        e.at(c, 0) = 1;
        SheafGradedMap basis = sgm_unvec(unknowns[u].src, unknowns[u].tgt,
                                         unknowns[u].degree, e);
        Matrix v = eval_terms(u, basis);
        for (std::size_t r = 0; r < nr; ++r) block.at(r, offs[u] + c) = v.at(r, 0);
      }
    }
    arows.push_back(std::move(block));
    brows.push_back(rhs_vec);
  };

  for (auto& eq : equations) {
    auto eval = [&](std::size_t u, const SheafGradedMap& basis) {
      SheafGradedMap acc(eq.rhs.src(), eq.rhs.tgt(), eq.rhs.degree());
      for (auto& t : eq.terms)
        if (t.unknown == u) acc = acc + t.op(basis);
      return sgm_vec(acc);
    };
    add_equation(eval, sgm_vec(eq.rhs));
  }
  // naturality of every unknown
  for (std::size_t u = 0; u < unknowns.size(); ++u) {
    const auto& uk = unknowns[u];
    for (auto [x, y] : strict_pairs(*uk.src.ctx().space, all_points(uk.src.points()))) {
      std::size_t nr = gm_dim(uk.src.stalk(x), uk.tgt.stalk(y), uk.degree);
      if (!nr) continue;
      auto eval = [&, x = x, y = y](std::size_t uu, const SheafGradedMap& basis) {
        if (uu != u) return Matrix(nr, 1, p);
        GradedMap g = GradedMap::compose(uk.tgt.res(x, y), basis.at(x)) -
                      GradedMap::compose(basis.at(y), uk.src.res(x, y));
        return gm_vec(g);
      };
      add_equation(eval, Matrix(nr, 1, p));
    }
  }

  Matrix a(0, cols, p), b(0, 1, p);
  for (std::size_t i = 0; i < arows.size(); ++i) {
    a = Matrix::vstack(a, arows[i]);
    b = Matrix::vstack(b, brows[i]);
  }
  auto sol = solve(a, b);
  if (!sol) return std::nullopt;
  std::vector<SheafGradedMap> out;
  for (std::size_t u = 0; u < unknowns.size(); ++u) {
    Matrix part(offs[u + 1] - offs[u], 1, p);
    for (std::size_t r = 0; r < part.rows(); ++r) part.at(r, 0) = sol->at(offs[u] + r, 0);
    out.push_back(sgm_unvec(unknowns[u].src, unknowns[u].tgt, unknowns[u].degree, part));
  }
  return out;
}

std::optional<SheafHomotopy> sheaf_is_homotopic(const SheafChainMap& f,
                                                const SheafChainMap& g) {
  const SheafComplex& a = f.src();
  const SheafComplex& b = f.tgt();
  std::uint32_t p = a.ctx().p;
  Matrix sys = sheaf_hom_diff_matrix(a, b, -1);
  Matrix rhs = sgm_vec(f - g);
  Matrix nat = detail::nat_rows(a, b, -1, all_points(a.points()));
  sys = Matrix::vstack(sys, nat);
  rhs = Matrix::vstack(rhs, Matrix(nat.rows(), 1, p));
  auto sol = solve(sys, rhs);
  if (!sol) return std::nullopt;
  SheafHomotopy out{f, g, sgm_unvec(a, b, -1, *sol)};
  out.validate();
  return out;
}

std::optional<SheafHomotopyInverse> sheaf_homotopy_inverse(const SheafChainMap& f) {
  const SheafComplex& a = f.src();
  const SheafComplex& b = f.tgt();
  std::uint32_t p = a.ctx().p;
  // unknowns: g : B -> A (degree 0), h1 : A -> A, h2 : B -> B (degree -1)
  std::size_t ng = sgm_dim(b, a, 0), n1 = sgm_dim(a, a, -1), n2 = sgm_dim(b, b, -1);
  std::size_t cols = ng + n1 + n2;
  auto place = [&](Matrix& big, const Matrix& blk, std::size_t r0, std::size_t c0) {
    for (std::size_t r = 0; r < blk.rows(); ++r)
      for (std::size_t c = 0; c < blk.cols(); ++c)
        if (blk.at(r, c)) big.at(r0 + r, c0 + c) = blk.at(r, c);
  };
  std::vector<Matrix> sys_rows, rhs_rows;
  auto add = [&](std::size_t nr) -> std::pair<Matrix, Matrix> {
    return {Matrix(nr, cols, p), Matrix(nr, 1, p)};
  };
  // Dg = 0
  {
    Matrix d = sheaf_hom_diff_matrix(b, a, 0);
    auto [sys, rhs] = add(d.rows());
    place(sys, d, 0, 0);
    sys_rows.push_back(sys);
    rhs_rows.push_back(rhs);
  }
  // g f - D h1 = id_A  and  f g - D h2 = id_B, blockwise per point
  {
    std::vector<Matrix> pre, post;
    for (std::size_t x = 0; x < a.points(); ++x) {
      int xi = static_cast<int>(x);
      pre.push_back(detail::precompose_matrix(f.at(xi), a.stalk(xi), 0));
      post.push_back(detail::postcompose_matrix(f.at(xi), b.stalk(xi), 0));
    }
    Matrix gf = Matrix::block_diag(pre, p);   // (B->A,0) -> (A->A,0)
    Matrix fg = Matrix::block_diag(post, p);  // (B->A,0) -> (B->B,0)
    Matrix d1 = sheaf_hom_diff_matrix(a, a, -1);
    Matrix d2 = sheaf_hom_diff_matrix(b, b, -1);
    auto [sys1, rhs1] = add(gf.rows());
    place(sys1, gf, 0, 0);
    place(sys1, -d1, 0, ng);
    rhs1 = sgm_vec(SheafGradedMap::identity(a));
    sys_rows.push_back(sys1);
    rhs_rows.push_back(rhs1);
    auto [sys2, rhs2] = add(fg.rows());
    place(sys2, fg, 0, 0);
    place(sys2, -d2, 0, ng + n1);
    rhs2 = sgm_vec(SheafGradedMap::identity(b));
    sys_rows.push_back(sys2);
    rhs_rows.push_back(rhs2);
  }
  // naturality of each unknown
  {
    std::vector<int> all = all_points(a.points());
    Matrix natg = detail::nat_rows(b, a, 0, all);
    Matrix nat1 = detail::nat_rows(a, a, -1, all);
    Matrix nat2 = detail::nat_rows(b, b, -1, all);
    auto [s0, r0] = add(natg.rows());
    place(s0, natg, 0, 0);
    sys_rows.push_back(s0);
    rhs_rows.push_back(r0);
    auto [s1, r1] = add(nat1.rows());
    place(s1, nat1, 0, ng);
    sys_rows.push_back(s1);
    rhs_rows.push_back(r1);
    auto [s2, r2] = add(nat2.rows());
    place(s2, nat2, 0, ng + n1);
    sys_rows.push_back(s2);
    rhs_rows.push_back(r2);
  }
  Matrix sys(0, cols, p), rhs(0, 1, p);
  for (std::size_t i = 0; i < sys_rows.size(); ++i) {
    sys = Matrix::vstack(sys, sys_rows[i]);
    rhs = Matrix::vstack(rhs, rhs_rows[i]);
  }
  auto sol = solve(sys, rhs);
  if (!sol) return std::nullopt;
  auto part = [&](std::size_t off, std::size_t len) {
    Matrix v(len, 1, p);
    for (std::size_t r = 0; r < len; ++r) v.at(r, 0) = sol->at(off + r, 0);
    return v;
  };
  SheafChainMap g = sgm_unvec(b, a, 0, part(0, ng));
  SheafGradedMap h1 = sgm_unvec(a, a, -1, part(ng, n1));
  SheafGradedMap h2 = sgm_unvec(b, b, -1, part(ng + n1, n2));
  SheafHomotopyInverse out{g,
                           {SheafGradedMap::compose(g, f),
                            SheafGradedMap::identity(a), h1},
                           {SheafGradedMap::compose(f, g),
                            SheafGradedMap::identity(b), h2}};
  out.g.validate_chain_map();
  out.gf_id.validate();
  out.fg_id.validate();
  return out;
}

}  // namespace fsh
