#include "fsh/resolve.hpp"

#include <algorithm>
#include <stdexcept>

#include "fsh/linalg.hpp"
#include "sheaf_util.hpp"

namespace fsh {

namespace {

std::vector<std::vector<int>> up_sets(const FinSpace& sp) {
  std::vector<std::vector<int>> up(sp.size());
  for (std::size_t y = 0; y < sp.size(); ++y) {
    up[y] = sp.up_closure({static_cast<int>(y)});
    std::sort(up[y].begin(), up[y].end());
  }
  return up;
}

std::size_t env_dim(const SheafComplex& m, const std::vector<int>& up) {
  std::size_t t = 0;
  for (int x : up) t += m.stalk(x).dim(0);
  return t;
}

std::size_t env_offset(const SheafComplex& m, const std::vector<int>& up, int x) {
  std::size_t t = 0;
  for (int z : up) {
    if (z == x) return t;
    t += m.stalk(z).dim(0);
  }
  throw std::invalid_argument("env_offset: point outside the envelope support");
}

// Per-point matrices of a degree-0 map between single-degree sheaves.
using LevelMap = std::vector<Matrix>;

LevelMap chain_to_level(const SheafChainMap& u) {
  LevelMap out;
  for (std::size_t x = 0; x < u.src().points(); ++x)
    out.push_back(u.at(static_cast<int>(x)).map(0));
  return out;
}

// G(u) per point: block diagonal of u over the envelope support.
LevelMap env_on_map(const SheafComplex& a, const SheafComplex& b, const LevelMap& u,
                    const std::vector<std::vector<int>>& up, std::uint32_t p) {
  LevelMap out;
  for (std::size_t y = 0; y < a.points(); ++y) {
    Matrix g(env_dim(b, up[y]), env_dim(a, up[y]), p);
    std::size_t ro = 0, co = 0;
    for (int x : up[y]) {
      const Matrix& ux = u[static_cast<std::size_t>(x)];
      for (std::size_t r = 0; r < ux.rows(); ++r)
        for (std::size_t c = 0; c < ux.cols(); ++c) g.at(ro + r, co + c) = ux.at(r, c);
      ro += ux.rows();
      co += ux.cols();
    }
    out.push_back(std::move(g));
  }
  return out;
}

struct CokerResult {
  SheafComplex ker;          // the cokernel sheaf K
  std::vector<Matrix> q;     // GM_x -> K_x, canonical projection
  std::vector<Matrix> sig;   // right inverses, q * sig = id
};

// Cokernel of the (componentwise injective) Godement mono, with canonical
// projections built from pivot-complement bases.
CokerResult coker_of_mono(const GodementResult& g) {
  const SheafComplex& gm = g.sheaf;
  std::uint32_t p = gm.ctx().p;
  CokerResult out{SheafComplex(gm.ctx()), {}, {}};
  for (std::size_t xi = 0; xi < gm.points(); ++xi) {
    int x = static_cast<int>(xi);
    Matrix mono = g.mono.at(x).map(0);
    std::size_t gd = gm.stalk(x).dim(0), md = mono.cols();
    auto extra = extend_basis(mono, Matrix::identity(gd, p));
    if (md + extra.size() != gd)
      throw std::logic_error("coker_of_mono: mono is not injective");
    Matrix basis(gd, gd, p);
    for (std::size_t c = 0; c < md; ++c)
      for (std::size_t r = 0; r < gd; ++r) basis.at(r, c) = mono.at(r, c);
    for (std::size_t c = 0; c < extra.size(); ++c) basis.at(extra[c], md + c) = 1;
    auto binv = inverse(basis);
    if (!binv) throw std::logic_error("coker_of_mono: degenerate complement");
    out.q.push_back(binv->row_slice(md, gd));
    out.sig.push_back(basis.col_slice(md, gd));
    Complex c;
    c.set_dim(0, gd - md);
    out.ker.set_stalk(x, c);
  }
  for (auto [x, y] : detail::strict_pairs(*gm.ctx().space, all_points(gm.points()))) {
    Matrix r = out.q[static_cast<std::size_t>(y)] * gm.res(x, y).map(0) *
               out.sig[static_cast<std::size_t>(x)];
    if (r.is_zero()) continue;
    ChainMap cm(out.ker.stalk(x), out.ker.stalk(y), 0);
    cm.set_map(0, std::move(r));
    out.ker.set_res(x, y, cm);
  }
  return out;
}

SheafChainMap level_to_chain(const SheafComplex& a, const SheafComplex& b,
                             const LevelMap& u) {
  SheafChainMap out(a, b);
  for (std::size_t xi = 0; xi < a.points(); ++xi) {
    int x = static_cast<int>(xi);
    GradedMap gm(a.stalk(x), b.stalk(x), 0);
    if (u[xi].rows() && u[xi].cols()) gm.set_map(0, u[xi]);
    out.set_at(x, std::move(gm));
  }
  return out;
}

// Transport u : K_j(a) -> K_j(b) one level down the tower.
LevelMap transport(const ResolutionRow& ra, const ResolutionRow& rb, std::size_t j,
                   const LevelMap& u, const std::vector<std::vector<int>>& up,
                   std::uint32_t p) {
  LevelMap gu = env_on_map(ra.kers[j], rb.kers[j], u, up, p);
  LevelMap out;
  for (std::size_t x = 0; x < gu.size(); ++x)
    out.push_back(rb.q[j][x] * gu[x] * ra.sig[j][x]);
  return out;
}

// Blocks (n, j) with n + j = m, in ascending n, present in the given rows.
std::vector<std::pair<int, std::size_t>> total_blocks(
    const std::map<int, ResolutionRow>& rows, int m) {
  std::vector<std::pair<int, std::size_t>> out;
  for (auto& [n, row] : rows) {
    int j = m - n;
    if (j >= 0 && static_cast<std::size_t>(j) < row.length())
      out.emplace_back(n, static_cast<std::size_t>(j));
  }
  return out;
}

std::size_t block_dim(const ResolutionRow& row, std::size_t j, int x) {
  return row.gd[j].sheaf.stalk(x).dim(0);
}

std::size_t total_dim(const std::map<int, ResolutionRow>& rows, int m, int x) {
  std::size_t t = 0;
  for (auto [n, j] : total_blocks(rows, m)) t += block_dim(rows.at(n), j, x);
  return t;
}

std::size_t total_offset(const std::map<int, ResolutionRow>& rows, int m, int x,
                         int n) {
  std::size_t t = 0;
  for (auto [nn, j] : total_blocks(rows, m)) {
    if (nn == n) return t;
    t += block_dim(rows.at(nn), j, x);
  }
  throw std::invalid_argument("total_offset: absent block");
}

void place(Matrix& dst, std::size_t ro, std::size_t co, const Matrix& src,
           bool negate = false) {
  std::uint32_t p = dst.modulus();
  for (std::size_t r = 0; r < src.rows(); ++r)
    for (std::size_t c = 0; c < src.cols(); ++c) {
      std::uint32_t v = src.at(r, c);
      dst.at(ro + r, co + c) = negate && v ? p - v : v;
    }
}

}  // namespace

SheafComplex degree_piece(const SheafComplex& f, int n) {
  SheafComplex out(f.ctx());
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    Complex c;
    c.set_dim(0, f.stalk(x).dim(n));
    out.set_stalk(x, c);
  }
  for (auto [x, y] : detail::strict_pairs(*f.ctx().space, all_points(f.points()))) {
    Matrix r = f.res(x, y).map(n);
    if (r.is_zero()) continue;
    ChainMap cm(out.stalk(x), out.stalk(y), 0);
    cm.set_map(0, std::move(r));
    out.set_res(x, y, cm);
  }
  return out;
}

GodementResult godement(const SheafComplex& m) {
  const FinSpace& sp = *m.ctx().space;
  std::uint32_t p = m.ctx().p;
  auto up = up_sets(sp);
  SheafComplex g(m.ctx());
  for (std::size_t y = 0; y < sp.size(); ++y) {
    Complex c;
    c.set_dim(0, env_dim(m, up[y]));
    g.set_stalk(static_cast<int>(y), c);
  }
  for (auto [y, yp] : detail::strict_pairs(sp, all_points(sp.size()))) {
    auto& uy = up[static_cast<std::size_t>(y)];
    auto& uyp = up[static_cast<std::size_t>(yp)];
    Matrix r(env_dim(m, uyp), env_dim(m, uy), p);
    for (int x : uyp) {
      std::size_t d = m.stalk(x).dim(0);
      std::size_t ro = env_offset(m, uyp, x), co = env_offset(m, uy, x);
      for (std::size_t i = 0; i < d; ++i) r.at(ro + i, co + i) = 1;
    }
    if (r.is_zero()) continue;
    ChainMap cm(g.stalk(y), g.stalk(yp), 0);
    cm.set_map(0, std::move(r));
    g.set_res(y, yp, cm);
  }
  SheafChainMap mono(m, g);
  for (std::size_t yi = 0; yi < sp.size(); ++yi) {
    int y = static_cast<int>(yi);
    std::size_t d = m.stalk(y).dim(0);
    Matrix mm(env_dim(m, up[yi]), d, p);
    for (int x : up[yi]) place(mm, env_offset(m, up[yi], x), 0, m.res(y, x).map(0));
    GradedMap gm(m.stalk(y), g.stalk(y), 0);
    if (mm.rows() && mm.cols()) gm.set_map(0, std::move(mm));
    mono.set_at(y, std::move(gm));
  }
  return {std::move(g), std::move(mono)};
}

SheafChainMap godement_map(const GodementResult& ga, const GodementResult& gb,
                           const SheafChainMap& u) {
  auto up = up_sets(*u.src().ctx().space);
  LevelMap gu = env_on_map(u.src(), u.tgt(), chain_to_level(u), up, u.src().ctx().p);
  return level_to_chain(ga.sheaf, gb.sheaf, gu);
}

std::optional<SheafChainMap> injective_retraction(const SheafComplex& m) {
  GodementResult g = godement(m);
  std::uint32_t p = m.ctx().p;
  auto pts = all_points(m.points());
  Matrix nat = detail::nat_rows(g.sheaf, m, 0, pts);
  std::vector<Matrix> blocks;
  Matrix rhs_id(0, 1, p);
  for (int x : pts) {
    blocks.push_back(detail::precompose_matrix(g.mono.at(x), m.stalk(x), 0));
    rhs_id = Matrix::vstack(rhs_id,
                            detail::gm_vec(GradedMap::identity(m.stalk(x))));
  }
  Matrix comp = Matrix::block_diag(blocks);
  Matrix lhs = Matrix::vstack(nat, comp);
  Matrix rhs = Matrix::vstack(Matrix(nat.rows(), 1, p), rhs_id);
  auto sol = solve(lhs, rhs);
  if (!sol) return std::nullopt;
  return detail::sgm_unvec(g.sheaf, m, 0, *sol);
}

bool is_injective_sheaf(const SheafComplex& m) {
  return injective_retraction(m).has_value();
}

ResolutionRow resolve_row(const SheafComplex& piece) {
  ResolutionRow row;
  std::size_t bound = piece.ctx().space->longest_chain() + 2;
  SheafComplex k = piece;
  for (std::size_t j = 0; j <= bound; ++j) {
    bool zero = true;
    for (std::size_t x = 0; x < k.points(); ++x)
      if (!k.stalk(static_cast<int>(x)).is_zero_object()) zero = false;
    if (zero) break;
    if (j == bound)
      throw std::logic_error("resolve_row: Godement tower failed to terminate");
    row.kers.push_back(k);
    row.gd.push_back(godement(k));
    CokerResult ck = coker_of_mono(row.gd.back());
    row.q.push_back(std::move(ck.q));
    row.sig.push_back(std::move(ck.sig));
    k = std::move(ck.ker);
  }
  // differentials d^j = mono_{K_{j+1}} o q_j
  for (std::size_t j = 0; j + 1 < row.length(); ++j) {
    const GodementResult& next = row.gd[j + 1];
    SheafChainMap d(row.gd[j].sheaf, next.sheaf);
    for (std::size_t xi = 0; xi < piece.points(); ++xi) {
      int x = static_cast<int>(xi);
      Matrix dm = next.mono.at(x).map(0) * row.q[j][xi];
      GradedMap gm(row.gd[j].sheaf.stalk(x), next.sheaf.stalk(x), 0);
      if (dm.rows() && dm.cols()) gm.set_map(0, std::move(dm));
      d.set_at(x, std::move(gm));
    }
    row.diffs.push_back(std::move(d));
  }
  return row;
}

InjResolution inj_resolve_sheaf(const SheafComplex& m) {
  InjResolution out{m, {}, {}, SheafChainMap(m, m)};
  if (is_injective_sheaf(m)) {
    out.terms.push_back(m);
    out.aug = SheafGradedMap::identity(m);
    return out;
  }
  GodementResult g0 = godement(m);
  out.aug = g0.mono;
  std::size_t bound = m.ctx().space->longest_chain() + 2;
  GodementResult cur = std::move(g0);
  for (std::size_t j = 0; j <= bound; ++j) {
    out.terms.push_back(cur.sheaf);
    CokerResult ck = coker_of_mono(cur);
    bool zero = true;
    for (std::size_t x = 0; x < ck.ker.points(); ++x)
      if (!ck.ker.stalk(static_cast<int>(x)).is_zero_object()) zero = false;
    if (zero) break;
    SheafChainMap proj = level_to_chain(cur.sheaf, ck.ker, ck.q);
    if (is_injective_sheaf(ck.ker)) {
      out.diffs.push_back(proj);
      out.terms.push_back(ck.ker);
      break;
    }
    GodementResult next = godement(ck.ker);
    out.diffs.push_back(SheafGradedMap::compose(next.mono, proj));
    if (j == bound)
      throw std::logic_error("inj_resolve_sheaf: tower failed to terminate");
    cur = std::move(next);
  }
  return out;
}

ResolutionResult i_complex(const SheafComplex& f) {
  ResolutionResult out{f, SheafComplex(f.ctx()), SheafChainMap(f, f), {}};
  const FinSpace& sp = *f.ctx().space;
  std::uint32_t p = f.ctx().p;
  auto up = up_sets(sp);
  auto [lo, hi] = detail::window(f, all_points(f.points()));
  for (int n = lo; n <= hi; ++n) {
    ResolutionRow row = resolve_row(degree_piece(f, n));
    if (row.length()) out.rows.emplace(n, std::move(row));
  }
  auto& rows = out.rows;

  // row maps I_j(d_F) : I_n^j -> I_{n+1}^j, transported down each tower
  std::map<int, std::vector<LevelMap>> rowmaps;
  for (auto& [n, row] : rows) {
    auto it = rows.find(n + 1);
    if (it == rows.end()) continue;
    LevelMap u;
    for (std::size_t x = 0; x < f.points(); ++x)
      u.push_back(f.stalk(static_cast<int>(x)).diff(n));
    std::vector<LevelMap> levels;
    std::size_t depth = std::min(row.length(), it->second.length());
    for (std::size_t j = 0; j < depth; ++j) {
      levels.push_back(env_on_map(row.kers[j], it->second.kers[j], u, up, p));
      if (j + 1 < depth) u = transport(row, it->second, j, u, up, p);
    }
    rowmaps.emplace(n, std::move(levels));
  }

  // total complex stalks and differential
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    Complex c;
    for (int m = lo; rows.empty() ? false : m <= hi + static_cast<int>(sp.longest_chain()) + 1; ++m)
      c.set_dim(m, total_dim(rows, m, x));
    for (auto& [m, dm] : std::map<int, std::size_t>(c.dims())) {
      if (!c.dim(m + 1)) continue;
      Matrix d(c.dim(m + 1), dm, p);
      for (auto [n, j] : total_blocks(rows, m)) {
        const ResolutionRow& row = rows.at(n);
        std::size_t co = total_offset(rows, m, x, n);
        auto rmit = rowmaps.find(n);
        if (rmit != rowmaps.end() && j < rmit->second.size() &&
            total_dim(rows, m + 1, x)) {
          auto nb = total_blocks(rows, m + 1);
          bool has = false;
          for (auto [nn, jj] : nb)
            if (nn == n + 1 && jj == j) has = true;
          if (has)
            place(d, total_offset(rows, m + 1, x, n + 1), co,
                  rmit->second[j][xi]);
        }
        if (j + 1 < row.length()) {
          place(d, total_offset(rows, m + 1, x, n), co,
                row.diffs[j].at(x).map(0), n % 2 != 0);
        }
      }
      if (!d.is_zero()) c.set_diff(m, std::move(d));
    }
    out.output.set_stalk(x, std::move(c));
  }
  for (auto [x, y] : detail::strict_pairs(sp, all_points(f.points()))) {
    GradedMap r(out.output.stalk(x), out.output.stalk(y), 0);
    for (auto& [m, dm] : out.output.stalk(x).dims()) {
      if (!out.output.stalk(y).dim(m)) continue;
      Matrix rm(out.output.stalk(y).dim(m), dm, p);
      for (auto [n, j] : total_blocks(rows, m))
        place(rm, total_offset(rows, m, y, n), total_offset(rows, m, x, n),
              rows.at(n).gd[j].sheaf.res(x, y).map(0));
      if (!rm.is_zero()) r.set_map(m, std::move(rm));
    }
    if (!r.is_zero()) out.output.set_res(x, y, r);
  }

  out.iota = SheafChainMap(f, out.output);
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    GradedMap gm(f.stalk(x), out.output.stalk(x), 0);
    for (auto& [n, d] : f.stalk(x).dims()) {
      if (!out.output.stalk(x).dim(n)) continue;
      Matrix mm(out.output.stalk(x).dim(n), d, p);
      place(mm, total_offset(rows, n, x, n), 0, rows.at(n).gd[0].mono.at(x).map(0));
      gm.set_map(n, std::move(mm));
    }
    out.iota.set_at(x, std::move(gm));
  }
  return out;
}

SheafGradedMap i_on_graded_map(const ResolutionResult& rf,
                               const ResolutionResult& rg,
                               const SheafGradedMap& h) {
  if (!(rf.input == h.src()) || !(rg.input == h.tgt()))
    throw std::invalid_argument("i_on_graded_map: endpoints do not match");
  const SheafComplex& f = rf.input;
  std::uint32_t p = f.ctx().p;
  int d = h.degree();
  auto up = up_sets(*f.ctx().space);

  // transported levels of each component h_n : F^n -> G^{n+d}
  std::map<int, std::vector<LevelMap>> comp;
  for (auto& [n, row] : rf.rows) {
    auto it = rg.rows.find(n + d);
    if (it == rg.rows.end()) continue;
    LevelMap u;
    for (std::size_t x = 0; x < f.points(); ++x)
      u.push_back(h.at(static_cast<int>(x)).map(n));
    std::vector<LevelMap> levels;
    std::size_t depth = std::min(row.length(), it->second.length());
    for (std::size_t j = 0; j < depth; ++j) {
      levels.push_back(env_on_map(row.kers[j], it->second.kers[j], u, up, p));
      if (j + 1 < depth) u = transport(row, it->second, j, u, up, p);
    }
    comp.emplace(n, std::move(levels));
  }

  SheafGradedMap out(rf.output, rg.output, d);
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    GradedMap gm(rf.output.stalk(x), rg.output.stalk(x), d);
    for (auto& [m, dm] : rf.output.stalk(x).dims()) {
      std::size_t td = rg.output.stalk(x).dim(m + d);
      if (!td) continue;
      Matrix mm(td, dm, p);
      for (auto [n, j] : total_blocks(rf.rows, m)) {
        auto cit = comp.find(n);
        if (cit == comp.end() || j >= cit->second.size()) continue;
        bool has = false;
        for (auto [nn, jj] : total_blocks(rg.rows, m + d))
          if (nn == n + d && jj == j) has = true;
        if (!has) continue;
        place(mm, total_offset(rg.rows, m + d, x, n + d),
              total_offset(rf.rows, m, x, n), cit->second[j][xi]);
      }
      if (!mm.is_zero()) gm.set_map(m, std::move(mm));
    }
    out.set_at(x, std::move(gm));
  }
  return out;
}

bool is_fibrant(const SheafComplex& f) {
  auto [lo, hi] = detail::window(f, all_points(f.points()));
  for (int n = lo; n <= hi; ++n)
    if (!is_injective_sheaf(degree_piece(f, n))) return false;
  return true;
}

}  // namespace fsh
