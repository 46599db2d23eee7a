#include "fsh/complex_ops.hpp"

#include <stdexcept>

namespace fsh {

Complex shift(int n, const Complex& a) {
  Complex r(a.modulus());
  for (auto& [m, d] : a.dims()) r.set_dim(m - n, d);
  for (auto& [m, d] : a.dims()) {
    (void)d;
    Matrix dm = a.diff(m);
    if (n % 2 != 0) dm = -dm;
    if (dm.rows() > 0 || dm.cols() > 0) r.set_diff(m - n, dm);
  }
  return r;
}

GradedMap shift(int n, const GradedMap& f) {
  GradedMap r(shift(n, f.src()), shift(n, f.tgt()), f.degree());
  for (auto& [m, d] : f.src().dims()) {
    (void)d;
    r.set_map(m - n, f.map(m));
  }
  return r;
}

Complex cone(const ChainMap& f) {
  f.validate_chain_map();
  const Complex& a = f.src();
  const Complex& b = f.tgt();
  Complex c(a.modulus());
  int lo = std::min(a.lo() - 1, b.lo()), hi = std::max(a.hi() - 1, b.hi());
  for (int n = lo; n <= hi; ++n) c.set_dim(n, b.dim(n) + a.dim(n + 1));
  for (int n = lo; n < hi; ++n) {
    Matrix top = Matrix::hstack(b.diff(n), f.map(n + 1));
    Matrix bot = Matrix::hstack(Matrix(a.dim(n + 2), b.dim(n), a.modulus()),
                                -a.diff(n + 1));
    c.set_diff(n, Matrix::vstack(top, bot));
  }
  return c;
}

ChainMap cone_map(const ChainMap& f, const ChainMap& fp, const ChainMap& u,
                  const ChainMap& v) {
  if (!(GradedMap::compose(u, f) == GradedMap::compose(fp, v)))
    throw std::invalid_argument("cone_map: square does not commute");
  Complex cs = cone(f), ct = cone(fp);
  ChainMap r(cs, ct);
  for (int n = cs.lo(); n <= cs.hi(); ++n)
    r.set_map(n, Matrix::block_diag({u.map(n), v.map(n + 1)}, cs.modulus()));
  return r;
}

Complex icone(const Complex& a) { return cone(GradedMap::identity(a)); }

ChainMap icone_map(const ChainMap& f) {
  return cone_map(GradedMap::identity(f.src()), GradedMap::identity(f.tgt()),
                  f, f);
}

ChainMap icone_in(const Complex& a) {
  Complex c = icone(a);
  ChainMap r(a, c);
  for (auto& [n, d] : a.dims()) {
    Matrix m(c.dim(n), d, a.modulus());
    for (std::size_t i = 0; i < d; ++i) m.at(i, i) = 1;
    r.set_map(n, m);
  }
  return r;
}

DirectSum direct_sum(const Complex& a, const Complex& b) {
  Complex t(a.modulus());
  int lo = std::min(a.lo(), b.lo()), hi = std::max(a.hi(), b.hi());
  for (int n = lo; n <= hi; ++n) t.set_dim(n, a.dim(n) + b.dim(n));
  for (int n = lo; n < hi; ++n)
    t.set_diff(n, Matrix::block_diag({a.diff(n), b.diff(n)}, a.modulus()));
  DirectSum s{t, ChainMap(a, t), ChainMap(b, t), ChainMap(t, a), ChainMap(t, b)};
  for (int n = lo; n <= hi; ++n) {
    std::size_t da = a.dim(n), db = b.dim(n);
    Matrix il(da + db, da, a.modulus()), ir(da + db, db, a.modulus());
    Matrix pl(da, da + db, a.modulus()), pr(db, da + db, a.modulus());
    for (std::size_t i = 0; i < da; ++i) {
      il.at(i, i) = 1;
      pl.at(i, i) = 1;
    }
    for (std::size_t i = 0; i < db; ++i) {
      ir.at(da + i, i) = 1;
      pr.at(i, da + i) = 1;
    }
    s.incl_left.set_map(n, il);
    s.incl_right.set_map(n, ir);
    s.proj_left.set_map(n, pl);
    s.proj_right.set_map(n, pr);
  }
  return s;
}

namespace {

struct TBlock {
  int adeg;
  std::size_t off, adim, bdim;
};

std::vector<TBlock> tblocks(const Complex& a, const Complex& b, int n) {
  std::vector<TBlock> v;
  std::size_t off = 0;
  for (int m = a.lo(); m <= a.hi(); ++m) {
    std::size_t da = a.dim(m), db = b.dim(n - m);
    if (da && db) {
      v.push_back({m, off, da, db});
      off += da * db;
    }
  }
  return v;
}

const TBlock* tblock_find(const std::vector<TBlock>& v, int adeg) {
  for (auto& bl : v)
    if (bl.adeg == adeg) return &bl;
  return nullptr;
}

}  // namespace

Complex tensor(const Complex& a, const Complex& b) {
  Complex t(a.modulus());
  if (a.is_zero_object() || b.is_zero_object()) return t;
  int lo = a.lo() + b.lo(), hi = a.hi() + b.hi();
  for (int n = lo; n <= hi; ++n) {
    std::size_t d = 0;
    for (auto& bl : tblocks(a, b, n)) d += bl.adim * bl.bdim;
    t.set_dim(n, d);
  }
  for (int n = lo; n < hi; ++n) {
    auto src = tblocks(a, b, n), dst = tblocks(a, b, n + 1);
    Matrix dm(t.dim(n + 1), t.dim(n), a.modulus());
    for (auto& bl : src) {
      // d_A (x) id
      if (const TBlock* up = tblock_find(dst, bl.adeg + 1)) {
        Matrix da = a.diff(bl.adeg);
        for (std::size_t i = 0; i < bl.adim; ++i)
          for (std::size_t ip = 0; ip < up->adim; ++ip) {
            if (da.at(ip, i) == 0) continue;
            for (std::size_t j = 0; j < bl.bdim; ++j)
              dm.at(up->off + ip * up->bdim + j, bl.off + i * bl.bdim + j) =
                  da.at(ip, i);
          }
      }
      // (-1)^adeg id (x) d_B
      if (const TBlock* sm = tblock_find(dst, bl.adeg)) {
        Matrix db = b.diff(n - bl.adeg);
        bool neg = (bl.adeg % 2) != 0;
        for (std::size_t j = 0; j < bl.bdim; ++j)
          for (std::size_t jp = 0; jp < sm->bdim; ++jp) {
            if (db.at(jp, j) == 0) continue;
            std::int64_t v = db.at(jp, j);
            for (std::size_t i = 0; i < bl.adim; ++i)
              dm.set(sm->off + i * sm->bdim + jp, bl.off + i * bl.bdim + j,
                     neg ? -v : v);
          }
      }
    }
    t.set_diff(n, dm);
  }
  return t;
}

GradedMap tensor_map(const GradedMap& f, const GradedMap& g) {
  Complex ts = tensor(f.src(), g.src()), tt = tensor(f.tgt(), g.tgt());
  int df = f.degree(), dg = g.degree();
  GradedMap r(ts, tt, df + dg);
  for (int n = ts.lo(); n <= ts.hi(); ++n) {
    auto src = tblocks(f.src(), g.src(), n);
    auto dst = tblocks(f.tgt(), g.tgt(), n + df + dg);
    Matrix rm(tt.dim(n + df + dg), ts.dim(n), ts.modulus());
    for (auto& bl : src) {
      const TBlock* tb = tblock_find(dst, bl.adeg + df);
      if (!tb) continue;
      Matrix fm = f.map(bl.adeg), gm = g.map(n - bl.adeg);
      bool neg = ((dg * bl.adeg) % 2) != 0;  // Koszul: g passes x of degree adeg
      for (std::size_t i = 0; i < bl.adim; ++i)
        for (std::size_t ip = 0; ip < tb->adim; ++ip) {
          if (fm.at(ip, i) == 0) continue;
          for (std::size_t j = 0; j < bl.bdim; ++j)
            for (std::size_t jp = 0; jp < tb->bdim; ++jp) {
              if (gm.at(jp, j) == 0) continue;
              std::int64_t v =
                  static_cast<std::int64_t>(fm.at(ip, i)) * gm.at(jp, j) % ts.modulus();
              rm.set(tb->off + ip * tb->bdim + jp, bl.off + i * bl.bdim + j,
                     neg ? -v : v);
            }
        }
    }
    r.set_map(n, rm);
  }
  return r;
}

ChainMap tensor_swap(const Complex& a, const Complex& b) {
  Complex ts = tensor(a, b), tt = tensor(b, a);
  ChainMap r(ts, tt);
  for (int n = ts.lo(); n <= ts.hi(); ++n) {
    auto src = tblocks(a, b, n), dst = tblocks(b, a, n);
    Matrix rm(tt.dim(n), ts.dim(n), ts.modulus());
    for (auto& bl : src) {
      const TBlock* tb = tblock_find(dst, n - bl.adeg);
      bool neg = ((bl.adeg * (n - bl.adeg)) % 2) != 0;
      for (std::size_t i = 0; i < bl.adim; ++i)
        for (std::size_t j = 0; j < bl.bdim; ++j)
          rm.set(tb->off + j * tb->bdim + i, bl.off + i * bl.bdim + j,
                 neg ? -1 : 1);
    }
    r.set_map(n, rm);
  }
  return r;
}

ChainMap tensor_assoc(const Complex& a, const Complex& b, const Complex& c) {
  Complex ab = tensor(a, b), bc = tensor(b, c);
  Complex ts = tensor(ab, c), tt = tensor(a, bc);
  ChainMap r(ts, tt);
  for (int n = ts.lo(); n <= ts.hi(); ++n) {
    auto outer_s = tblocks(ab, c, n), outer_t = tblocks(a, bc, n);
    Matrix rm(tt.dim(n), ts.dim(n), ts.modulus());
    for (auto& os : outer_s) {
      int m = os.adeg;  // ab-degree
      auto inner_s = tblocks(a, b, m);
      for (auto& is : inner_s) {
        int p = is.adeg, q = m - p, rdeg = n - m;
        const TBlock* ot = tblock_find(outer_t, p);
        if (!ot) continue;
        auto inner_t = tblocks(b, c, n - p);
        const TBlock* it = tblock_find(inner_t, q);
        if (!it) continue;
        std::size_t dc = c.dim(rdeg);
        for (std::size_t i = 0; i < is.adim; ++i)
          for (std::size_t j = 0; j < is.bdim; ++j)
            for (std::size_t k = 0; k < dc; ++k) {
              std::size_t si =
                  os.off + (is.off + i * is.bdim + j) * os.bdim + k;
              std::size_t ti =
                  ot->off + i * ot->bdim + (it->off + j * it->bdim + k);
              rm.at(ti, si) = 1;
            }
      }
    }
    r.set_map(n, rm);
  }
  return r;
}

ChainMap tensor_lunit(const Complex& unit, const Complex& a) {
  if (unit.total_dim() != 1 || unit.dim(0) != 1)
    throw std::invalid_argument("tensor_lunit: unit must be rank one in degree 0");
  Complex ts = tensor(unit, a);
  ChainMap r(ts, a);
  for (auto& [n, d] : a.dims()) r.set_map(n, Matrix::identity(d, a.modulus()));
  return r;
}

ChainMap tensor_runit(const Complex& a, const Complex& unit) {
  if (unit.total_dim() != 1 || unit.dim(0) != 1)
    throw std::invalid_argument("tensor_runit: unit must be rank one in degree 0");
  Complex ts = tensor(a, unit);
  ChainMap r(ts, a);
  for (auto& [n, d] : a.dims()) r.set_map(n, Matrix::identity(d, a.modulus()));
  return r;
}

HomComplex::HomComplex(Complex a, Complex b) : a_(std::move(a)), b_(std::move(b)), cx_(a_.modulus()) {
  if (a_.is_zero_object() || b_.is_zero_object()) return;
  int dlo = b_.lo() - a_.hi(), dhi = b_.hi() - a_.lo();
  for (int d = dlo; d <= dhi; ++d) {
    std::size_t off = 0;
    std::vector<std::pair<int, std::size_t>> blocks;
    for (int n = a_.lo(); n <= a_.hi(); ++n) {
      std::size_t sz = a_.dim(n) * b_.dim(n + d);
      if (sz == 0) continue;
      blocks.emplace_back(n, off);
      off += sz;
    }
    if (off == 0) continue;
    layout_[d] = std::move(blocks);
    cx_.set_dim(d, off);
  }
  for (int d = dlo; d < dhi; ++d) {
    if (cx_.dim(d) == 0 || cx_.dim(d + 1) == 0) continue;
    Matrix dm(cx_.dim(d + 1), cx_.dim(d), a_.modulus());
    auto& src = layout_[d];
    auto& dst = layout_[d + 1];
    auto dst_off = [&](int n) -> std::size_t {
      for (auto& [m, o] : dst)
        if (m == n) return o;
      return static_cast<std::size_t>(-1);
    };
    bool neg = (d % 2 == 0);  // -(-1)^d f d_A
    for (auto& [n, off] : src) {
      std::size_t ac = a_.dim(n), br = b_.dim(n + d);
      // d_B composed with the block at n
      std::size_t o1 = dst_off(n);
      if (o1 != static_cast<std::size_t>(-1)) {
        Matrix db = b_.diff(n + d);
        for (std::size_t rp = 0; rp < db.rows(); ++rp)
          for (std::size_t rr = 0; rr < br; ++rr) {
            if (db.at(rp, rr) == 0) continue;
            for (std::size_t cc = 0; cc < ac; ++cc)
              dm.at(o1 + rp * ac + cc, off + rr * ac + cc) = db.at(rp, rr);
          }
      }
      // the block at n precomposed with d_A^(n-1) lands in block n-1
      std::size_t o2 = dst_off(n - 1);
      if (o2 != static_cast<std::size_t>(-1)) {
        Matrix da = a_.diff(n - 1);
        std::size_t ac0 = a_.dim(n - 1);
        for (std::size_t rr = 0; rr < br; ++rr)
          for (std::size_t cp = 0; cp < ac; ++cp)
            for (std::size_t cc = 0; cc < ac0; ++cc) {
              if (da.at(cp, cc) == 0) continue;
              std::int64_t cur = dm.at(o2 + rr * ac0 + cc, off + rr * ac + cp);
              std::int64_t v = neg ? cur - da.at(cp, cc) : cur + da.at(cp, cc);
              dm.set(o2 + rr * ac0 + cc, off + rr * ac + cp, v);
            }
      }
    }
    cx_.set_diff(d, dm);
  }
}

Matrix HomComplex::to_vector(const GradedMap& g) const {
  int d = g.degree();
  Matrix v(cx_.dim(d), 1, a_.modulus());
  auto it = layout_.find(d);
  if (it == layout_.end()) return v;
  for (auto& [n, off] : it->second) {
    Matrix m = g.map(n);
    std::size_t ac = a_.dim(n);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c)
        v.at(off + r * ac + c, 0) = m.at(r, c);
  }
  return v;
}

GradedMap HomComplex::from_vector(int degree, const Matrix& v) const {
  if (v.rows() != cx_.dim(degree) || v.cols() != 1)
    throw std::invalid_argument("HomComplex::from_vector: bad shape");
  GradedMap g(a_, b_, degree);
  auto it = layout_.find(degree);
  if (it == layout_.end()) return g;
  for (auto& [n, off] : it->second) {
    std::size_t ac = a_.dim(n), br = b_.dim(n + degree);
    Matrix m(br, ac, a_.modulus());
    for (std::size_t r = 0; r < br; ++r)
      for (std::size_t c = 0; c < ac; ++c) m.at(r, c) = v.at(off + r * ac + c, 0);
    g.set_map(n, m);
  }
  return g;
}

Complex hom_complex(const Complex& a, const Complex& b) {
  return HomComplex(a, b).cx();
}

GradedMap diff_map(const Complex& a) {
  GradedMap d(a, a, 1);
  for (auto& [n, dim] : a.dims()) {
    (void)dim;
    d.set_map(n, a.diff(n));
  }
  return d;
}

GradedMap hom_diff(const GradedMap& f) {
  GradedMap t = GradedMap::compose(diff_map(f.tgt()), f);
  GradedMap u = GradedMap::compose(f, diff_map(f.src()));
  return (f.degree() % 2 == 0) ? t - u : t + u;
}

// --- generic graded linear systems -----------------------------------------

namespace {

std::size_t gm_dim(const Complex& s, const Complex& t, int deg) {
  std::size_t d = 0;
  for (auto& [n, sd] : s.dims()) d += sd * t.dim(n + deg);
  return d;
}

Matrix gm_vec(const Complex& s, const Complex& t, int deg, const GradedMap& g) {
  Matrix v(gm_dim(s, t, deg), 1, s.modulus());
  std::size_t off = 0;
  for (auto& [n, sd] : s.dims()) {
    std::size_t td = t.dim(n + deg);
    if (td == 0) continue;
    Matrix m = g.map(n);
    for (std::size_t r = 0; r < td; ++r)
      for (std::size_t c = 0; c < sd; ++c) v.at(off + r * sd + c, 0) = m.at(r, c);
    off += td * sd;
  }
  return v;
}

GradedMap gm_unvec(const Complex& s, const Complex& t, int deg, const Matrix& v) {
  GradedMap g(s, t, deg);
  std::size_t off = 0;
  for (auto& [n, sd] : s.dims()) {
    std::size_t td = t.dim(n + deg);
    if (td == 0) continue;
    Matrix m(td, sd, s.modulus());
    for (std::size_t r = 0; r < td; ++r)
      for (std::size_t c = 0; c < sd; ++c) m.at(r, c) = v.at(off + r * sd + c, 0);
    g.set_map(n, m);
    off += td * sd;
  }
  return g;
}

}  // namespace

std::optional<std::vector<GradedMap>> solve_graded(
    const std::vector<GradedUnknown>& unknowns,
    const std::vector<GradedEquation>& equations) {
  std::uint32_t p = kDefaultPrime;
  if (!unknowns.empty()) p = unknowns[0].src.modulus();
  else if (!equations.empty()) p = equations[0].rhs.src().modulus();

  std::vector<std::size_t> col_off(unknowns.size() + 1, 0);
  for (std::size_t u = 0; u < unknowns.size(); ++u)
    col_off[u + 1] = col_off[u] + gm_dim(unknowns[u].src, unknowns[u].tgt, unknowns[u].degree);
  std::size_t ncols = col_off.back();

  std::vector<std::size_t> row_off(equations.size() + 1, 0);
  for (std::size_t e = 0; e < equations.size(); ++e)
    row_off[e + 1] = row_off[e] + gm_dim(equations[e].rhs.src(), equations[e].rhs.tgt(),
                                         equations[e].rhs.degree());
  std::size_t nrows = row_off.back();

  Matrix big(nrows, ncols, p), rhs(nrows, 1, p);
  for (std::size_t e = 0; e < equations.size(); ++e) {
    const auto& eq = equations[e];
    const Complex& es = eq.rhs.src();
    const Complex& et = eq.rhs.tgt();
    int ed = eq.rhs.degree();
    Matrix rv = gm_vec(es, et, ed, eq.rhs);
    for (std::size_t r = 0; r < rv.rows(); ++r) rhs.at(row_off[e] + r, 0) = rv.at(r, 0);
    for (const auto& term : eq.terms) {
      const auto& un = unknowns[term.unknown];
      // evaluate the linear op on each basis graded map
      std::size_t col = col_off[term.unknown];
      for (auto& [n, sd] : un.src.dims()) {
        std::size_t td = un.tgt.dim(n + un.degree);
        if (td == 0) continue;
        for (std::size_t r = 0; r < td; ++r)
          for (std::size_t c = 0; c < sd; ++c) {
            GradedMap basis(un.src, un.tgt, un.degree);
            Matrix bm(td, sd, p);
            bm.at(r, c) = 1;
            basis.set_map(n, bm);
            Matrix outv = gm_vec(es, et, ed, term.op(basis));
            for (std::size_t rr = 0; rr < outv.rows(); ++rr) {
              if (outv.at(rr, 0) == 0) continue;
              std::size_t v = big.at(row_off[e] + rr, col);
              big.at(row_off[e] + rr, col) =
                  static_cast<std::uint32_t>((v + outv.at(rr, 0)) % p);
            }
            ++col;
          }
      }
    }
  }

  auto sol = solve(big, rhs);
  if (!sol) return std::nullopt;
  std::vector<GradedMap> out;
  for (std::size_t u = 0; u < unknowns.size(); ++u) {
    Matrix slice(col_off[u + 1] - col_off[u], 1, p);
    for (std::size_t r = 0; r < slice.rows(); ++r) slice.at(r, 0) = sol->at(col_off[u] + r, 0);
    out.push_back(gm_unvec(unknowns[u].src, unknowns[u].tgt, unknowns[u].degree, slice));
  }
  return out;
}

std::optional<Homotopy> is_homotopic(const ChainMap& f, const ChainMap& g) {
  if (!(f.src() == g.src()) || !(f.tgt() == g.tgt()))
    throw std::invalid_argument("is_homotopic: endpoint mismatch");
  f.validate_chain_map();
  g.validate_chain_map();
  std::vector<GradedUnknown> un{{f.src(), f.tgt(), -1}};
  GradedEquation eq;
  eq.terms.push_back({0, [](const GradedMap& h) { return hom_diff(h); }});
  eq.rhs = f - g;
  auto sol = solve_graded(un, {eq});
  if (!sol) return std::nullopt;
  return Homotopy{f, g, (*sol)[0]};
}

std::optional<HomotopyInverse> homotopy_inverse(const ChainMap& f) {
  f.validate_chain_map();
  const Complex& a = f.src();
  const Complex& b = f.tgt();
  std::vector<GradedUnknown> un{{b, a, 0}, {a, a, -1}, {b, b, -1}};
  GradedEquation chain;  // d g - g d = 0
  chain.terms.push_back({0, [](const GradedMap& g) { return hom_diff(g); }});
  chain.rhs = GradedMap(b, a, 1);
  GradedEquation left;  // g f - (d h1 + h1 d) = id_A
  left.terms.push_back({0, [&f](const GradedMap& g) { return GradedMap::compose(g, f); }});
  left.terms.push_back({1, [](const GradedMap& h) { return hom_diff(h).scaled(0) - hom_diff(h); }});
  left.rhs = GradedMap::identity(a);
  GradedEquation right;  // f g - (d h2 + h2 d) = id_B
  right.terms.push_back({0, [&f](const GradedMap& g) { return GradedMap::compose(f, g); }});
  right.terms.push_back({2, [](const GradedMap& h) { return hom_diff(h).scaled(0) - hom_diff(h); }});
  right.rhs = GradedMap::identity(b);
  auto sol = solve_graded(un, {chain, left, right});
  if (!sol) return std::nullopt;
  HomotopyInverse inv{(*sol)[0],
                      Homotopy{GradedMap::compose((*sol)[0], f), GradedMap::identity(a), (*sol)[1]},
                      Homotopy{GradedMap::compose(f, (*sol)[0]), GradedMap::identity(b), (*sol)[2]}};
  return inv;
}

CohomologyResult cohomology(const Complex& a) {
  CohomologyResult res;
  for (int n = a.lo(); n <= a.hi(); ++n) {
    std::size_t dn = a.dim(n);
    if (dn == 0) continue;
    Matrix z = kernel(a.diff(n));
    Matrix dprev = a.diff(n - 1);
    auto rrp = rref(dprev);
    Matrix bb = dprev.select_cols(rrp.pivots);
    auto hsel = extend_basis(bb, z);
    Matrix incl = z.select_cols(hsel);
    if (incl.cols() == 0) continue;
    auto csel = extend_basis(z, Matrix::identity(dn, a.modulus()));
    Matrix cmat = Matrix::identity(dn, a.modulus()).select_cols(csel);
    Matrix u = Matrix::hstack(Matrix::hstack(bb, incl), cmat);
    Matrix uinv = inverse(u).value();
    res.dims[n] = incl.cols();
    res.incl[n] = incl;
    res.proj[n] = uinv.row_slice(bb.cols(), bb.cols() + incl.cols());
  }
  return res;
}

bool is_acyclic(const Complex& a) {
  return cohomology(a).dims.empty();
}

bool is_quasi_iso(const ChainMap& f) {
  f.validate_chain_map();
  return is_acyclic(cone(f));
}

Factorization factorize(const ChainMap& f, FactorMode mode) {
  f.validate_chain_map();
  const Complex& a = f.src();
  const Complex& b = f.tgt();
  std::uint32_t p = a.modulus();
  Factorization out;
  if (mode == FactorMode::CofThenTrivFib) {
    // Cyl(f)^n = A^n (+) A^(n+1) (+) B^n, d(a,a',b) = (da - a', -da', db + fa')
    Complex cyl(p);
    int lo = std::min(a.lo() - 1, b.lo()), hi = std::max(a.hi(), b.hi());
    for (int n = lo; n <= hi; ++n)
      cyl.set_dim(n, a.dim(n) + a.dim(n + 1) + b.dim(n));
    for (int n = lo; n < hi; ++n) {
      std::size_t c0 = a.dim(n), c1 = a.dim(n + 1), c2 = b.dim(n);
      std::size_t r0 = a.dim(n + 1), r1 = a.dim(n + 2), r2 = b.dim(n + 1);
      Matrix dm(r0 + r1 + r2, c0 + c1 + c2, p);
      Matrix da = a.diff(n), da1 = a.diff(n + 1), db = b.diff(n), fm = f.map(n + 1);
      for (std::size_t r = 0; r < r0; ++r) {
        for (std::size_t c = 0; c < c0; ++c) dm.at(r, c) = da.at(r, c);
        if (r < c1) dm.set(r, c0 + r, -1);
      }
      for (std::size_t r = 0; r < r1; ++r)
        for (std::size_t c = 0; c < c1; ++c) dm.set(r0 + r, c0 + c, -static_cast<std::int64_t>(da1.at(r, c)));
      for (std::size_t r = 0; r < r2; ++r) {
        for (std::size_t c = 0; c < c1; ++c) dm.at(r0 + r1 + r, c0 + c) = fm.at(r, c);
        for (std::size_t c = 0; c < c2; ++c) dm.at(r0 + r1 + r, c0 + c1 + c) = db.at(r, c);
      }
      cyl.set_diff(n, dm);
    }
    ChainMap left(a, cyl), right(cyl, b);
    for (int n = lo; n <= hi; ++n) {
      std::size_t c0 = a.dim(n), c1 = a.dim(n + 1), c2 = b.dim(n);
      Matrix lm(c0 + c1 + c2, c0, p);
      for (std::size_t i = 0; i < c0; ++i) lm.at(i, i) = 1;
      left.set_map(n, lm);
      Matrix rm(c2, c0 + c1 + c2, p);
      Matrix fm = f.map(n);
      for (std::size_t r = 0; r < c2; ++r) {
        for (std::size_t c = 0; c < c0; ++c) rm.at(r, c) = fm.at(r, c);
        rm.at(r, c0 + c1 + r) = 1;
      }
      right.set_map(n, rm);
    }
    out = {left, cyl, right};
  } else {
    // P(f)^n = A^n (+) B^(n-1) (+) B^n, d(a,h,b) = (da, b - fa - dh, db)
    Complex pf(p);
    int lo = std::min(a.lo(), b.lo()), hi = std::max(a.hi(), b.hi() + 1);
    for (int n = lo; n <= hi; ++n)
      pf.set_dim(n, a.dim(n) + b.dim(n - 1) + b.dim(n));
    for (int n = lo; n < hi; ++n) {
      std::size_t c0 = a.dim(n), c1 = b.dim(n - 1), c2 = b.dim(n);
      std::size_t r0 = a.dim(n + 1), r1 = b.dim(n), r2 = b.dim(n + 1);
      Matrix dm(r0 + r1 + r2, c0 + c1 + c2, p);
      Matrix da = a.diff(n), dbm1 = b.diff(n - 1), db = b.diff(n), fm = f.map(n);
      for (std::size_t r = 0; r < r0; ++r)
        for (std::size_t c = 0; c < c0; ++c) dm.at(r, c) = da.at(r, c);
      for (std::size_t r = 0; r < r1; ++r) {
        for (std::size_t c = 0; c < c0; ++c) dm.set(r0 + r, c, -static_cast<std::int64_t>(fm.at(r, c)));
        for (std::size_t c = 0; c < c1; ++c) dm.set(r0 + r, c0 + c, -static_cast<std::int64_t>(dbm1.at(r, c)));
        if (r < c2) dm.at(r0 + r, c0 + c1 + r) = 1;
      }
      for (std::size_t r = 0; r < r2; ++r)
        for (std::size_t c = 0; c < c2; ++c) dm.at(r0 + r1 + r, c0 + c1 + c) = db.at(r, c);
      pf.set_diff(n, dm);
    }
    ChainMap left(a, pf), right(pf, b);
    for (int n = lo; n <= hi; ++n) {
      std::size_t c0 = a.dim(n), c1 = b.dim(n - 1), c2 = b.dim(n);
      Matrix lm(c0 + c1 + c2, c0, p);
      Matrix fm = f.map(n);
      for (std::size_t i = 0; i < c0; ++i) lm.at(i, i) = 1;
      for (std::size_t r = 0; r < c2; ++r)
        for (std::size_t c = 0; c < c0; ++c) lm.at(c0 + c1 + r, c) = fm.at(r, c);
      left.set_map(n, lm);
      Matrix rm(c2, c0 + c1 + c2, p);
      for (std::size_t r = 0; r < c2; ++r) rm.at(r, c0 + c1 + r) = 1;
      right.set_map(n, rm);
    }
    out = {left, pf, right};
  }
  out.left.validate_chain_map();
  out.right.validate_chain_map();
  if (!(GradedMap::compose(out.right, out.left) == f))
    throw std::logic_error("factorize: composite differs from f");
  return out;
}

}  // namespace fsh
