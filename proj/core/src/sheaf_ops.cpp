#include <algorithm>

#include "sheaf_util.hpp"

namespace fsh {

using detail::amb_offset;
using detail::gm_degrees;
using detail::gm_dim;
using detail::gm_unvec;
using detail::gm_vec;
using detail::strict_pairs;

// --- tensor ------------------------------------------------------------------

SheafComplex sheaf_tensor(const SheafComplex& f, const SheafComplex& g) {
  if (!(f.ctx() == g.ctx()))
    throw std::invalid_argument("sheaf_tensor: context mismatch");
  SheafComplex out(f.ctx());
  for (std::size_t xi = 0; xi < f.points(); ++xi)
    out.set_stalk(static_cast<int>(xi),
                  tensor(f.stalk(static_cast<int>(xi)), g.stalk(static_cast<int>(xi))));
  for (auto [x, y] : strict_pairs(*f.ctx().space, all_points(f.points())))
    out.set_res(x, y, tensor_map(f.res(x, y), g.res(x, y)));
  return out;
}

SheafGradedMap sheaf_tensor_map(const SheafGradedMap& phi, const SheafGradedMap& psi) {
  SheafGradedMap out(sheaf_tensor(phi.src(), psi.src()),
                     sheaf_tensor(phi.tgt(), psi.tgt()),
                     phi.degree() + psi.degree());
  for (std::size_t xi = 0; xi < phi.src().points(); ++xi) {
    int x = static_cast<int>(xi);
    out.set_at(x, tensor_map(phi.at(x), psi.at(x)));
  }
  return out;
}

SheafChainMap sheaf_tensor_swap(const SheafComplex& f, const SheafComplex& g) {
  SheafChainMap out(sheaf_tensor(f, g), sheaf_tensor(g, f));
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    out.set_at(x, tensor_swap(f.stalk(x), g.stalk(x)));
  }
  return out;
}

SheafChainMap sheaf_tensor_assoc(const SheafComplex& f, const SheafComplex& g,
                                 const SheafComplex& h) {
  SheafChainMap out(sheaf_tensor(sheaf_tensor(f, g), h),
                    sheaf_tensor(f, sheaf_tensor(g, h)));
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    out.set_at(x, tensor_assoc(f.stalk(x), g.stalk(x), h.stalk(x)));
  }
  return out;
}

SheafChainMap sheaf_tensor_lunit(const SheafComplex& unit, const SheafComplex& f) {
  SheafChainMap out(sheaf_tensor(unit, f), f);
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    out.set_at(x, tensor_lunit(unit.stalk(x), f.stalk(x)));
  }
  return out;
}

SheafChainMap sheaf_tensor_runit(const SheafComplex& f, const SheafComplex& unit) {
  SheafChainMap out(sheaf_tensor(f, unit), f);
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    out.set_at(x, tensor_runit(f.stalk(x), unit.stalk(x)));
  }
  return out;
}

// --- rep-hom and the internal hom sheaf ---------------------------------------

namespace {

std::size_t amb_hom_dim(const SheafComplex& f, const SheafComplex& g,
                        const std::vector<int>& pts, int d) {
  std::size_t t = 0;
  for (int y : pts) t += gm_dim(f.stalk(y), g.stalk(y), d);
  return t;
}

Matrix family_to_amb(const SheafComplex& f, const SheafComplex& g,
                     const std::vector<int>& pts, int d,
                     const std::vector<GradedMap>& fam) {
  Matrix v(amb_hom_dim(f, g, pts, d), 1, f.ctx().p);
  std::size_t off = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Matrix part = gm_vec(fam[i]);
    for (std::size_t r = 0; r < part.rows(); ++r) v.at(off + r, 0) = part.at(r, 0);
    off += part.rows();
  }
  return v;
}

std::vector<GradedMap> amb_to_family(const SheafComplex& f, const SheafComplex& g,
                                     const std::vector<int>& pts, int d,
                                     const Matrix& v) {
  std::vector<GradedMap> fam;
  std::size_t off = 0;
  for (int y : pts) {
    std::size_t dim = gm_dim(f.stalk(y), g.stalk(y), d);
    Matrix part(dim, 1, f.ctx().p);
    for (std::size_t r = 0; r < dim; ++r) part.at(r, 0) = v.at(off + r, 0);
    off += dim;
    fam.push_back(gm_unvec(f.stalk(y), g.stalk(y), d, part));
  }
  return fam;
}

// Offset of the A-degree-m block inside (A (x) B)^n.
std::size_t tensor_block_offset(const Complex& a, const Complex& b, int n, int m) {
  std::size_t off = 0;
  for (int aa = a.lo(); aa < m; ++aa)
    if (a.dim(aa) && b.dim(n - aa)) off += a.dim(aa) * b.dim(n - aa);
  return off;
}

}  // namespace

RepHom rep_hom(const SheafComplex& f, const SheafComplex& g,
               const std::vector<int>& subset) {
  std::vector<int> pts = subset;
  std::sort(pts.begin(), pts.end());
  std::uint32_t p = f.ctx().p;
  RepHom out;
  out.pts = pts;
  out.cx = Complex(p);
  // degree range
  int dlo = 0, dhi = -1;
  bool first = true;
  for (int y : pts) {
    const Complex& a = f.stalk(y);
    const Complex& b = g.stalk(y);
    if (a.is_zero_object() || b.is_zero_object()) continue;
    int l = b.lo() - a.hi(), h = b.hi() - a.lo();
    if (first || l < dlo) dlo = l;
    if (first || h > dhi) dhi = h;
    first = false;
  }
  for (int d = dlo; d <= dhi; ++d) {
    std::size_t ad = amb_hom_dim(f, g, pts, d);
    if (!ad) continue;
    Matrix k = kernel(detail::nat_rows(f, g, d, pts));
    out.basis[d] = k;
    out.cx.set_dim(d, k.cols());
  }
  for (int d = dlo; d < dhi; ++d) {
    if (!out.cx.dim(d) || !out.cx.dim(d + 1)) continue;
    std::vector<Matrix> blocks;
    for (int y : pts)
      blocks.push_back(detail::hom_diff_matrix(f.stalk(y), g.stalk(y), d));
    Matrix damb = Matrix::block_diag(blocks, p);
    out.cx.set_diff(d, detail::solve_in_basis(out.basis.at(d + 1),
                                              damb * out.basis.at(d), "rep_hom"));
  }
  return out;
}

std::vector<GradedMap> rep_hom_family(const SheafComplex& f, const SheafComplex& g,
                                      const RepHom& rh, int degree, const Matrix& coords) {
  auto it = rh.basis.find(degree);
  if (it == rh.basis.end()) {
    std::vector<GradedMap> fam;
    for (int y : rh.pts) fam.emplace_back(f.stalk(y), g.stalk(y), degree);
    return fam;
  }
  return amb_to_family(f, g, rh.pts, degree, it->second * coords);
}

Matrix rep_hom_coords(const SheafComplex& f, const SheafComplex& g, const RepHom& rh,
                      int degree, const std::vector<GradedMap>& family) {
  Matrix amb = family_to_amb(f, g, rh.pts, degree, family);
  auto it = rh.basis.find(degree);
  if (it == rh.basis.end()) {
    if (!amb.is_zero())
      throw std::logic_error("rep_hom_coords: nonzero family in an empty degree");
    return Matrix(0, 1, f.ctx().p);
  }
  return detail::solve_in_basis(it->second, amb, "rep_hom_coords");
}

SheafHomResult sheaf_hom(const SheafComplex& f, const SheafComplex& g) {
  SheafHomResult out{SheafComplex(f.ctx()), {}};
  const FinSpace& sp = *f.ctx().space;
  out.stalk_data.reserve(f.points());
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    out.stalk_data.push_back(rep_hom(f, g, sp.minimal_open(x)));
    out.sheaf.set_stalk(x, out.stalk_data.back().cx);
  }
  for (auto [x, z] : strict_pairs(sp, all_points(f.points()))) {
    const RepHom& rx = out.stalk_data[static_cast<std::size_t>(x)];
    const RepHom& rz = out.stalk_data[static_cast<std::size_t>(z)];
    GradedMap m(rx.cx, rz.cx, 0);
    for (auto& [d, bs] : rx.basis) {
      if (!rz.cx.dim(d)) continue;
      // truncation: scatter the U_x ambient onto the U_z ambient
      Matrix tr(amb_hom_dim(f, g, rz.pts, d), bs.rows(), f.ctx().p);
      for (int y : rz.pts) {
        std::size_t len = gm_dim(f.stalk(y), g.stalk(y), d);
        std::size_t oz = detail::hom_amb_offset(f, g, rz.pts, y, d);
        std::size_t ox = detail::hom_amb_offset(f, g, rx.pts, y, d);
        for (std::size_t i = 0; i < len; ++i) tr.at(oz + i, ox + i) = 1;
      }
      m.set_map(d, detail::solve_in_basis(rz.basis.at(d), tr * bs, "sheaf_hom res"));
    }
    out.sheaf.set_res(x, z, std::move(m));
  }
  return out;
}

SheafGradedMap sheaf_hom_map(const SheafComplex& f, const SheafComplex& g,
                             const SheafHomResult& src, const SheafComplex& fp,
                             const SheafComplex& gp, const SheafHomResult& dst,
                             const SheafChainMap& phi, const SheafChainMap& psi) {
  // Hom(phi, psi)(h) = psi o h o phi with phi : F' -> F, psi : G -> G'.
  (void)gp;
  SheafGradedMap out(src.sheaf, dst.sheaf, 0);
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    const RepHom& rs = src.stalk_data[xi];
    const RepHom& rd = dst.stalk_data[xi];
    GradedMap m(rs.cx, rd.cx, 0);
    for (auto& [d, bs] : rs.basis) {
      if (!rd.cx.dim(d)) continue;
      // conjugation h |-> psi o h o phi on the ambient product, blockwise
      std::vector<Matrix> blocks;
      for (int y : rs.pts)
        blocks.push_back(detail::postcompose_matrix(psi.at(y), fp.stalk(y), d) *
                         detail::precompose_matrix(phi.at(y), g.stalk(y), d));
      Matrix op = Matrix::block_diag(blocks, f.ctx().p);
      m.set_map(d, detail::solve_in_basis(rd.basis.at(d), op * bs, "sheaf_hom_map"));
    }
    out.set_at(x, std::move(m));
  }
  return out;
}

// --- locally closed calculus ---------------------------------------------------

SheafComplex lower_shriek(const LocallyClosedImmersion& j, const SheafComplex& f) {
  if (!(*j.sub_space == *f.ctx().space))
    throw std::invalid_argument("lower_shriek: space mismatch");
  SiteContext ctx{j.ambient, f.ctx().p};
  SheafComplex out(ctx);
  for (int x : j.subset) out.set_stalk(x, f.stalk(j.sub_index(x)));
  for (auto [x, y] : strict_pairs(*j.ambient, j.subset))
    out.set_res(x, y, f.res(j.sub_index(x), j.sub_index(y)));
  return out;
}

SheafGradedMap lower_shriek_map(const LocallyClosedImmersion& j,
                                const SheafGradedMap& phi) {
  SheafGradedMap out(lower_shriek(j, phi.src()), lower_shriek(j, phi.tgt()),
                     phi.degree());
  for (int x : j.subset) out.set_at(x, phi.at(j.sub_index(x)));
  return out;
}

UpperShriekResult upper_shriek_adjoint(const LocallyClosedImmersion& j,
                                       const SheafComplex& f) {
  if (!(*j.ambient == *f.ctx().space))
    throw std::invalid_argument("upper_shriek: space mismatch");
  std::uint32_t p = f.ctx().p;
  UpperShriekResult out{SheafComplex({j.sub_space, p}), {}};
  for (std::size_t si = 0; si < j.sub_space->size(); ++si) {
    int s = static_cast<int>(si);
    int z = j.subset[si];
    const Complex& fz = f.stalk(z);
    // complement of the subset inside the minimal open of z
    std::vector<int> comp;
    for (int y : j.ambient->minimal_open(z))
      if (!j.contains(y)) comp.push_back(y);
    Complex st(p);
    for (auto& [n, d] : fz.dims()) {
      Matrix a(0, d, p);
      for (int y : comp) {
        Matrix r = f.res(z, y).map(n);
        if (r.rows()) a = Matrix::vstack(a, r);
      }
      Matrix k = kernel(a);
      out.emb[{s, n}] = k;
      st.set_dim(n, k.cols());
    }
    for (auto& [n, d] : fz.dims()) {
      if (!st.dim(n) || !st.dim(n + 1)) continue;
      auto sol = solve(out.emb.at({s, n + 1}), fz.diff(n) * out.emb.at({s, n}));
      if (!sol) throw std::logic_error("upper_shriek: differential escapes the kernel");
      st.set_diff(n, *sol);
    }
    out.sheaf.set_stalk(s, std::move(st));
  }
  for (auto [a, b] : strict_pairs(*j.sub_space, all_points(j.sub_space->size()))) {
    int za = j.subset[static_cast<std::size_t>(a)];
    int zb = j.subset[static_cast<std::size_t>(b)];
    GradedMap m(out.sheaf.stalk(a), out.sheaf.stalk(b), 0);
    for (auto& [n, d] : out.sheaf.stalk(a).dims()) {
      if (!out.sheaf.stalk(b).dim(n)) continue;
      auto sol = solve(out.emb.at({b, n}), f.res(za, zb).map(n) * out.emb.at({a, n}));
      if (!sol) throw std::logic_error("upper_shriek: restriction escapes the kernel");
      m.set_map(n, *sol);
    }
    out.sheaf.set_res(a, b, std::move(m));
  }
  return out;
}

SheafGradedMap upper_shriek_map(const LocallyClosedImmersion& j,
                                const SheafGradedMap& phi) {
  UpperShriekResult us = upper_shriek_adjoint(j, phi.src());
  UpperShriekResult ut = upper_shriek_adjoint(j, phi.tgt());
  int dg = phi.degree();
  SheafGradedMap out(us.sheaf, ut.sheaf, dg);
  for (std::size_t si = 0; si < j.sub_space->size(); ++si) {
    int s = static_cast<int>(si);
    int z = j.subset[si];
    GradedMap m(us.sheaf.stalk(s), ut.sheaf.stalk(s), dg);
    for (auto& [n, d] : us.sheaf.stalk(s).dims()) {
      if (!ut.sheaf.stalk(s).dim(n + dg)) continue;
      auto sol = solve(ut.emb.at({s, n + dg}), phi.at(z).map(n) * us.emb.at({s, n}));
      if (!sol) throw std::logic_error("upper_shriek_map: image escapes the kernel");
      m.set_map(n, *sol);
    }
    out.set_at(s, std::move(m));
  }
  return out;
}

SheafChainMap shriek_unit(const LocallyClosedImmersion& j, const SheafComplex& f) {
  SheafComplex lw = lower_shriek(j, f);
  UpperShriekResult us = upper_shriek_adjoint(j, lw);
  SheafChainMap out(f, us.sheaf);
  for (std::size_t si = 0; si < j.sub_space->size(); ++si) {
    int s = static_cast<int>(si);
    GradedMap m(f.stalk(s), us.sheaf.stalk(s), 0);
    for (auto& [n, d] : f.stalk(s).dims()) {
      auto sol = solve(us.emb.at({s, n}), Matrix::identity(d, f.ctx().p));
      if (!sol) throw std::logic_error("shriek_unit: unit is not an isomorphism");
      m.set_map(n, *sol);
    }
    out.set_at(s, std::move(m));
  }
  return out;
}

SheafChainMap shriek_counit(const LocallyClosedImmersion& j, const SheafComplex& f) {
  UpperShriekResult us = upper_shriek_adjoint(j, f);
  SheafComplex lw = lower_shriek(j, us.sheaf);
  SheafChainMap out(lw, f);
  for (int x : j.subset) {
    int s = j.sub_index(x);
    GradedMap m(lw.stalk(x), f.stalk(x), 0);
    for (auto& [n, d] : lw.stalk(x).dims()) m.set_map(n, us.emb.at({s, n}));
    out.set_at(x, std::move(m));
  }
  return out;
}

SheafChainMap shriek_to_push(const LocallyClosedImmersion& j, const SheafComplex& f) {
  SheafComplex lw = lower_shriek(j, f);
  SheafComplex ps = pushforward(j.inclusion, f);
  SheafChainMap out(lw, ps);
  std::uint32_t p = f.ctx().p;
  for (int x : j.subset) {
    int s = j.sub_index(x);
    std::vector<int> pre = j.inclusion.preimage(j.ambient->minimal_open(x));
    SectionsResult sec = sections_full(f, pre);
    GradedMap m(lw.stalk(x), ps.stalk(x), 0);
    for (auto& [n, d] : f.stalk(s).dims()) {
      if (!ps.stalk(x).dim(n)) {
        if (d) throw std::logic_error("shriek_to_push: missing sections degree");
        continue;
      }
      Matrix amb(detail::amb_dim(f, sec.pts, n), d, p);
      for (int t : sec.pts) {
        Matrix r = f.res(s, t).map(n);
        std::size_t off = amb_offset(f, sec.pts, t, n);
        for (std::size_t i = 0; i < r.rows(); ++i)
          for (std::size_t jj = 0; jj < r.cols(); ++jj) amb.at(off + i, jj) = r.at(i, jj);
      }
      auto sol = solve(sec.basis.at(n), amb);
      if (!sol) throw std::logic_error("shriek_to_push: family is not a section");
      m.set_map(n, *sol);
    }
    out.set_at(x, std::move(m));
  }
  return out;
}

// --- strict structural isomorphisms -------------------------------------------

SheafChainMap curry_hom(const SheafComplex& e, const SheafComplex& f,
                        const SheafComplex& g) {
  SheafComplex ef = sheaf_tensor(e, f);
  SheafHomResult lhs = sheaf_hom(ef, g);
  SheafHomResult hfg = sheaf_hom(f, g);
  SheafHomResult rhs = sheaf_hom(e, hfg.sheaf);
  const SheafComplex& rhs_h = hfg.sheaf;
  std::uint32_t p = e.ctx().p;
  SheafChainMap out(lhs.sheaf, rhs.sheaf, 0);
  for (std::size_t xi = 0; xi < e.points(); ++xi) {
    int x = static_cast<int>(xi);
    const RepHom& rl = lhs.stalk_data[xi];
    const RepHom& rr = rhs.stalk_data[xi];
    GradedMap m(rl.cx, rr.cx, 0);
    for (auto& [d, bs] : rl.basis) {
      if (!rr.cx.dim(d)) continue;
      Matrix img_amb(amb_hom_dim(e, rhs_h, rr.pts, d), bs.cols(), p);
      for (std::size_t c = 0; c < bs.cols(); ++c) {
        Matrix cc(bs.cols(), 1, p);
        cc.at(c, 0) = 1;
        auto fam = rep_hom_family(ef, g, rl, d, cc);  // h_y : (E(x)F)_y -> G_y
        // curried family over U_x
        std::vector<GradedMap> cur;
        for (std::size_t yi = 0; yi < rl.pts.size(); ++yi) {
          int y = rl.pts[yi];
          const RepHom& rhy = hfg.stalk_data[static_cast<std::size_t>(y)];
          GradedMap cy(e.stalk(y), rhy.cx, d);
          for (auto& [mdeg, edim] : e.stalk(y).dims()) {
            if (!rhy.cx.dim(mdeg + d)) {
              // curried elements in this degree must vanish; checked below
            }
            Matrix col(rhy.cx.dim(mdeg + d), edim, p);
            for (std::size_t k = 0; k < edim; ++k) {
              // element of Hom(F,G)_y in degree mdeg + d: the family
              // z |-> (fvec |-> h_z(rho_E(e_k) (x) fvec))
              std::vector<GradedMap> inner;
              for (int z : rhy.pts) {
                std::size_t zi = static_cast<std::size_t>(
                    std::lower_bound(rl.pts.begin(), rl.pts.end(), z) - rl.pts.begin());
                const GradedMap& hz = fam[zi];
                Matrix re = e.res(y, z).map(mdeg);  // E_y^m -> E_z^m
                GradedMap val(f.stalk(z), g.stalk(z), mdeg + d);
                for (auto& [q, fd] : f.stalk(z).dims()) {
                  if (!g.stalk(z).dim(q + mdeg + d)) continue;
                  Matrix hm = hz.map(mdeg + q);
                  if (!hm.rows() || !hm.cols()) {
                    val.set_map(q, Matrix(g.stalk(z).dim(q + mdeg + d), fd, p));
                    continue;
                  }
                  std::size_t toff =
                      tensor_block_offset(e.stalk(z), f.stalk(z), mdeg + q, mdeg);
                  Matrix vm(g.stalk(z).dim(q + mdeg + d), fd, p);
                  for (std::size_t jj = 0; jj < fd; ++jj)
                    for (std::size_t a = 0; a < e.stalk(z).dim(mdeg); ++a) {
                      std::uint32_t coef = re.at(a, k);
                      if (!coef) continue;
                      std::size_t src = toff + a * fd + jj;
                      for (std::size_t r = 0; r < vm.rows(); ++r)
                        vm.at(r, jj) = static_cast<std::uint32_t>(
                            (vm.at(r, jj) +
                             static_cast<std::uint64_t>(coef) * hm.at(r, src)) % p);
                    }
                  val.set_map(q, std::move(vm));
                }
                inner.push_back(std::move(val));
              }
              Matrix coords = rep_hom_coords(f, g, rhy, mdeg + d, inner);
              for (std::size_t r = 0; r < coords.rows(); ++r) col.at(r, k) = coords.at(r, 0);
            }
            cy.set_map(mdeg, std::move(col));
          }
          cur.push_back(std::move(cy));
        }
        Matrix v = family_to_amb(e, rhs_h, rr.pts, d, cur);
        for (std::size_t r = 0; r < v.rows(); ++r) img_amb.at(r, c) = v.at(r, 0);
      }
      m.set_map(d, detail::solve_in_basis(rr.basis.at(d), img_amb, "curry_hom"));
    }
    out.set_at(x, std::move(m));
  }
  return out;
}

SheafChainMap adj_push_hom(const ContinuousMap& alpha, const SheafComplex& e,
                           const SheafComplex& f) {
  SheafComplex pe = pullback(alpha, e);
  SheafHomResult hp = sheaf_hom(pe, f);
  SheafComplex src = pushforward(alpha, hp.sheaf);
  SheafComplex pf = pushforward(alpha, f);
  SheafHomResult rhs = sheaf_hom(e, pf);
  std::uint32_t p = e.ctx().p;
  std::map<int, SectionsResult> zsec;
  for (std::size_t zi = 0; zi < e.points(); ++zi)
    zsec.emplace(static_cast<int>(zi),
                 sections_full(f, alpha.preimage(e.ctx().space->minimal_open(
                     static_cast<int>(zi)))));
  SheafChainMap out(src, rhs.sheaf, 0);
  for (std::size_t xi = 0; xi < e.points(); ++xi) {
    int x = static_cast<int>(xi);
    std::vector<int> w = alpha.preimage(e.ctx().space->minimal_open(x));
    SectionsResult sec = sections_full(hp.sheaf, w);
    const RepHom& rr = rhs.stalk_data[xi];
    GradedMap m(src.stalk(x), rr.cx, 0);
    for (auto& [d, bs] : sec.basis) {
      if (!rr.cx.dim(d)) continue;
      Matrix img_amb(amb_hom_dim(e, pf, rr.pts, d), bs.cols(), p);
      for (std::size_t c = 0; c < bs.cols(); ++c) {
        // diagonal components phi_y : E_{alpha(y)} -> F_y for y in W
        std::vector<GradedMap> diag;
        for (int y : sec.pts) {
          const RepHom& ry = hp.stalk_data[static_cast<std::size_t>(y)];
          std::size_t off = amb_offset(hp.sheaf, sec.pts, y, d);
          std::size_t dim = hp.sheaf.stalk(y).dim(d);
          Matrix coords(dim, 1, p);
          for (std::size_t r = 0; r < dim; ++r) coords.at(r, 0) = bs.at(off + r, c);
          auto famy = rep_hom_family(pe, f, ry, d, coords);
          std::size_t self = static_cast<std::size_t>(
              std::lower_bound(ry.pts.begin(), ry.pts.end(), y) - ry.pts.begin());
          diag.push_back(famy[self]);
        }
        // target family over U_x
        std::vector<GradedMap> cur;
        for (int z : rr.pts) {
          const SectionsResult& secz = zsec.at(z);
          GradedMap cz(e.stalk(z), pf.stalk(z), d);
          for (auto& [mdeg, edim] : e.stalk(z).dims()) {
            if (!pf.stalk(z).dim(mdeg + d)) continue;
            Matrix amb(detail::amb_dim(f, secz.pts, mdeg + d), edim, p);
            for (int y : secz.pts) {
              std::size_t yi = static_cast<std::size_t>(
                  std::lower_bound(sec.pts.begin(), sec.pts.end(), y) - sec.pts.begin());
              Matrix pm = diag[yi].map(mdeg) * e.res(z, alpha(y)).map(mdeg);
              std::size_t off = amb_offset(f, secz.pts, y, mdeg + d);
              for (std::size_t r = 0; r < pm.rows(); ++r)
                for (std::size_t cc2 = 0; cc2 < pm.cols(); ++cc2)
                  amb.at(off + r, cc2) = pm.at(r, cc2);
            }
            cz.set_map(mdeg, detail::solve_in_basis(secz.basis.at(mdeg + d), amb,
                                                    "adj_push_hom"));
          }
          cur.push_back(std::move(cz));
        }
        Matrix v = family_to_amb(e, pf, rr.pts, d, cur);
        for (std::size_t r = 0; r < v.rows(); ++r) img_amb.at(r, c) = v.at(r, 0);
      }
      m.set_map(d, detail::solve_in_basis(rr.basis.at(d), img_amb, "adj_push_hom"));
    }
    out.set_at(x, std::move(m));
  }
  return out;
}

SheafChainMap adj_shriek_hom(const LocallyClosedImmersion& j, const SheafComplex& e,
                             const SheafComplex& f) {
  UpperShriekResult us = upper_shriek_adjoint(j, f);
  SheafHomResult hs = sheaf_hom(e, us.sheaf);
  SheafComplex src = pushforward(j.inclusion, hs.sheaf);
  SheafComplex le = lower_shriek(j, e);
  SheafHomResult rhs = sheaf_hom(le, f);
  std::uint32_t p = f.ctx().p;
  SheafChainMap out(src, rhs.sheaf, 0);
  for (std::size_t xi = 0; xi < f.points(); ++xi) {
    int x = static_cast<int>(xi);
    std::vector<int> w = j.inclusion.preimage(j.ambient->minimal_open(x));
    SectionsResult sec = sections_full(hs.sheaf, w);
    const RepHom& rr = rhs.stalk_data[xi];
    GradedMap m(src.stalk(x), rr.cx, 0);
    for (auto& [d, bs] : sec.basis) {
      if (!rr.cx.dim(d)) continue;
      Matrix img_amb(amb_hom_dim(le, f, rr.pts, d), bs.cols(), p);
      for (std::size_t c = 0; c < bs.cols(); ++c) {
        // diagonal components phi_s : E_s -> (j^! F)_s for s in W
        std::vector<GradedMap> diag;
        for (int s : sec.pts) {
          const RepHom& rsd = hs.stalk_data[static_cast<std::size_t>(s)];
          std::size_t off = amb_offset(hs.sheaf, sec.pts, s, d);
          std::size_t dim = hs.sheaf.stalk(s).dim(d);
          Matrix coords(dim, 1, p);
          for (std::size_t r = 0; r < dim; ++r) coords.at(r, 0) = bs.at(off + r, c);
          auto fams = rep_hom_family(e, us.sheaf, rsd, d, coords);
          std::size_t self = static_cast<std::size_t>(
              std::lower_bound(rsd.pts.begin(), rsd.pts.end(), s) - rsd.pts.begin());
          diag.push_back(fams[self]);
        }
        // target family: y in U_x maps to emb o phi at points of S, zero off S
        std::vector<GradedMap> cur;
        for (int y : rr.pts) {
          GradedMap cy(le.stalk(y), f.stalk(y), d);
          int s = j.sub_index(y);
          if (s >= 0) {
            std::size_t si = static_cast<std::size_t>(
                std::lower_bound(sec.pts.begin(), sec.pts.end(), s) - sec.pts.begin());
            for (auto& [n, dd] : le.stalk(y).dims()) {
              if (!f.stalk(y).dim(n + d)) continue;
              cy.set_map(n, us.emb.at({s, n + d}) * diag[si].map(n));
            }
          }
          cur.push_back(std::move(cy));
        }
        Matrix v = family_to_amb(le, f, rr.pts, d, cur);
        for (std::size_t r = 0; r < v.rows(); ++r) img_amb.at(r, c) = v.at(r, 0);
      }
      m.set_map(d, detail::solve_in_basis(rr.basis.at(d), img_amb, "adj_shriek_hom"));
    }
    out.set_at(x, std::move(m));
  }
  return out;
}

SheafChainMap upper_shriek_hom_iso(const LocallyClosedImmersion& j,
                                   const SheafComplex& e, const SheafComplex& f) {
  SheafComplex pe = pullback(j.inclusion, e);
  UpperShriekResult usf = upper_shriek_adjoint(j, f);
  SheafHomResult lhs = sheaf_hom(pe, usf.sheaf);
  SheafHomResult hef = sheaf_hom(e, f);
  UpperShriekResult rhs = upper_shriek_adjoint(j, hef.sheaf);
  std::uint32_t p = f.ctx().p;
  SheafChainMap out(lhs.sheaf, rhs.sheaf, 0);
  for (std::size_t si = 0; si < j.sub_space->size(); ++si) {
    int s = static_cast<int>(si);
    int z = j.subset[si];
    const RepHom& rl = lhs.stalk_data[si];
    const RepHom& ra = hef.stalk_data[static_cast<std::size_t>(z)];
    GradedMap m(lhs.sheaf.stalk(s), rhs.sheaf.stalk(s), 0);
    for (auto& [d, bs] : rl.basis) {
      if (!rhs.sheaf.stalk(s).dim(d)) continue;
      Matrix img_amb(amb_hom_dim(e, f, ra.pts, d), bs.cols(), p);
      for (std::size_t c = 0; c < bs.cols(); ++c) {
        Matrix cc(bs.cols(), 1, p);
        cc.at(c, 0) = 1;
        auto fam = rep_hom_family(pe, usf.sheaf, rl, d, cc);  // over U_z within S
        // extend by the kernel embeddings to an ambient family over U_z
        std::vector<GradedMap> ext;
        for (int y : ra.pts) {
          GradedMap hy(e.stalk(y), f.stalk(y), d);
          int t = j.sub_index(y);
          if (t >= 0) {
            std::size_t ti = static_cast<std::size_t>(
                std::lower_bound(rl.pts.begin(), rl.pts.end(), t) - rl.pts.begin());
            for (auto& [n, dd] : e.stalk(y).dims()) {
              if (!f.stalk(y).dim(n + d)) continue;
              hy.set_map(n, usf.emb.at({t, n + d}) * fam[ti].map(n));
            }
          }
          ext.push_back(std::move(hy));
        }
        Matrix v = family_to_amb(e, f, ra.pts, d, ext);
        for (std::size_t r = 0; r < v.rows(); ++r) img_amb.at(r, c) = v.at(r, 0);
      }
      Matrix coords =
          detail::solve_in_basis(ra.basis.at(d), img_amb, "upper_shriek_hom_iso");
      m.set_map(d, detail::solve_in_basis(rhs.emb.at({s, d}), coords,
                                          "upper_shriek_hom_iso"));
    }
    out.set_at(s, std::move(m));
  }
  return out;
}

SheafChainMap proj_formula_iso(const LocallyClosedImmersion& j, const SheafComplex& e,
                               const SheafComplex& f) {
  SheafComplex lhs = sheaf_tensor(lower_shriek(j, e), f);
  SheafComplex rhs =
      lower_shriek(j, sheaf_tensor(e, pullback(j.inclusion, f)));
  if (!(lhs == rhs))
    throw std::logic_error("proj_formula_iso: the two sides fail to agree strictly");
  SheafChainMap out(lhs, rhs, 0);
  for (std::size_t xi = 0; xi < lhs.points(); ++xi)
    out.set_at(static_cast<int>(xi), GradedMap::identity(lhs.stalk(static_cast<int>(xi))));
  return out;
}

SheafChainMap base_change_iso(const LocallyClosedImmersion& j, const ContinuousMap& beta,
                              const LocallyClosedImmersion& jp, const ContinuousMap& beta_p,
                              const SheafComplex& e) {
  SheafComplex lhs = pullback(beta, lower_shriek(j, e));
  SheafComplex rhs = lower_shriek(jp, pullback(beta_p, e));
  if (!(lhs == rhs))
    throw std::logic_error("base_change_iso: the two sides fail to agree strictly");
  SheafChainMap out(lhs, rhs, 0);
  for (std::size_t xi = 0; xi < lhs.points(); ++xi)
    out.set_at(static_cast<int>(xi), GradedMap::identity(lhs.stalk(static_cast<int>(xi))));
  return out;
}

SheafChainMap ushriek_compose_iso(const LocallyClosedImmersion& j1,
                                  const LocallyClosedImmersion& j2,
                                  const LocallyClosedImmersion& j12,
                                  const SheafComplex& f) {
  UpperShriekResult u1 = upper_shriek_adjoint(j1, f);
  UpperShriekResult u2 = upper_shriek_adjoint(j2, u1.sheaf);
  UpperShriekResult u12 = upper_shriek_adjoint(j12, f);
  SheafChainMap out(u12.sheaf, u2.sheaf, 0);
  for (std::size_t si = 0; si < j12.sub_space->size(); ++si) {
    int s = static_cast<int>(si);
    // the same point inside the middle subspace
    int t = j1.sub_index(j12.subset[si]);
    if (t < 0 || j2.subset[si] != t)
      throw std::invalid_argument("ushriek_compose_iso: immersions do not compose");
    GradedMap m(u12.sheaf.stalk(s), u2.sheaf.stalk(s), 0);
    for (auto& [n, d] : u12.sheaf.stalk(s).dims()) {
      if (!u2.sheaf.stalk(s).dim(n)) {
        if (d) throw std::logic_error("ushriek_compose_iso: dimension mismatch");
        continue;
      }
      auto sol = solve(u1.emb.at({t, n}) * u2.emb.at({s, n}), u12.emb.at({s, n}));
      if (!sol) throw std::logic_error("ushriek_compose_iso: bases do not match");
      m.set_map(n, *sol);
    }
    out.set_at(s, std::move(m));
  }
  return out;
}

}  // namespace fsh
