#include <stdexcept>

#include "fsh/enh.hpp"
#include "sheaf_util.hpp"

namespace fsh {

namespace {

const Fib& need_input(const RowBindings& b, std::size_t i, const char* row) {
  if (b.inputs.size() <= i)
    throw std::invalid_argument(std::string("row ") + row + ": missing input");
  return b.inputs[i];
}

const ContinuousMap& need_alpha(const RowBindings& b, const char* row) {
  if (!b.alpha) throw std::invalid_argument(std::string("row ") + row + ": needs a map");
  return *b.alpha;
}

const ContinuousMap& need_beta(const RowBindings& b, const char* row) {
  if (!b.beta)
    throw std::invalid_argument(std::string("row ") + row + ": needs a second map");
  return *b.beta;
}

const LocallyClosedImmersion& need_j(const RowBindings& b, const char* row) {
  if (!b.j)
    throw std::invalid_argument(std::string("row ") + row +
                                ": needs a locally closed immersion");
  return *b.j;
}

const LocallyClosedImmersion& need_j2(const RowBindings& b, const char* row) {
  if (!b.j2)
    throw std::invalid_argument(std::string("row ") + row +
                                ": needs a second immersion");
  return *b.j2;
}

const LocallyClosedImmersion& need_j12(const RowBindings& b, const char* row) {
  if (!b.j12)
    throw std::invalid_argument(std::string("row ") + row +
                                ": needs the composite immersion");
  return *b.j12;
}

ZigZag zig_start(std::string tag, Fib v0, bool two_iso) {
  ZigZag z;
  z.tag = std::move(tag);
  z.two_iso_expected = two_iso;
  z.vertices.push_back(std::move(v0));
  return z;
}

void push_identity_leg(ZigZag& z) {
  Fib v = z.vertices.back();
  zig_push(z, v, SheafGradedMap::identity(v.cx), true);
}

SheafComplex unit_object(const SiteContext& ctx) {
  return make_constant(ctx, Complex::point(0, 1, ctx.p));
}

void require_strict(bool cond, const char* what) {
  if (!cond)
    throw std::logic_error(std::string("generator_zigzag: strict identity failed: ") +
                           what);
}

// --- the 27 rows, in table order ---------------------------------------------

ZigZag row_left(const RowBindings& b) {
  const Fib& in = need_input(b, 0, "left");
  SheafComplex o = unit_object(in.cx.ctx());
  Fib io = fib_i(o);
  Fib v0 = fib_i(sheaf_tensor(io.cx, in.cx));
  Fib v1 = fib_i(sheaf_tensor(o, in.cx));
  Fib v2 = fib_i(in.cx);
  SheafChainMap id_in = SheafGradedMap::identity(in.cx);
  ZigZag z = zig_start("left", v0, true);
  zig_push(z, v1, i_map(v1, v0, sheaf_tensor_map(io.res->iota, id_in)), false);
  zig_push(z, v2, i_map(v1, v2, sheaf_tensor_lunit(o, in.cx)), true);
  zig_push(z, in, v2.res->iota, false);
  return z;
}

ZigZag row_right(const RowBindings& b) {
  const Fib& in = need_input(b, 0, "right");
  SheafComplex o = unit_object(in.cx.ctx());
  Fib io = fib_i(o);
  Fib v0 = fib_i(sheaf_tensor(in.cx, io.cx));
  Fib v1 = fib_i(sheaf_tensor(in.cx, o));
  Fib v2 = fib_i(in.cx);
  SheafChainMap id_in = SheafGradedMap::identity(in.cx);
  ZigZag z = zig_start("right", v0, true);
  zig_push(z, v1, i_map(v1, v0, sheaf_tensor_map(id_in, io.res->iota)), false);
  zig_push(z, v2, i_map(v1, v2, sheaf_tensor_runit(in.cx, o)), true);
  zig_push(z, in, v2.res->iota, false);
  return z;
}

ZigZag row_ass(const RowBindings& b) {
  const Fib& fi = need_input(b, 0, "ass-and-symm");
  const Fib& fj = need_input(b, 1, "ass-and-symm");
  const Fib& fk = need_input(b, 2, "ass-and-symm");
  SheafComplex tij = sheaf_tensor(fi.cx, fj.cx);
  SheafComplex tjk = sheaf_tensor(fj.cx, fk.cx);
  Fib itij = fib_i(tij);
  Fib itjk = fib_i(tjk);
  Fib v0 = fib_i(sheaf_tensor(itij.cx, fk.cx));
  Fib v1 = fib_i(sheaf_tensor(tij, fk.cx));
  Fib v2 = fib_i(sheaf_tensor(fi.cx, tjk));
  Fib v3 = fib_i(sheaf_tensor(fi.cx, itjk.cx));
  ZigZag z = zig_start("ass-and-symm", v0, true);
  zig_push(z, v1,
           i_map(v1, v0,
                 sheaf_tensor_map(itij.res->iota, SheafGradedMap::identity(fk.cx))),
           false);
  zig_push(z, v2, i_map(v1, v2, sheaf_tensor_assoc(fi.cx, fj.cx, fk.cx)), true);
  zig_push(z, v3,
           i_map(v2, v3,
                 sheaf_tensor_map(SheafGradedMap::identity(fi.cx), itjk.res->iota)),
           true);
  return z;
}

ZigZag row_swap(const RowBindings& b) {
  const Fib& fi = need_input(b, 0, "ulotimes-swap");
  const Fib& fj = need_input(b, 1, "ulotimes-swap");
  Fib v0 = fib_i(sheaf_tensor(fi.cx, fj.cx));
  Fib v1 = fib_i(sheaf_tensor(fj.cx, fi.cx));
  ZigZag z = zig_start("ulotimes-swap", v0, true);
  zig_push(z, v1, i_map(v0, v1, sheaf_tensor_swap(fi.cx, fj.cx)), true);
  return z;
}

ZigZag row_48(const RowBindings& b) {
  const Fib& fi = need_input(b, 0, "48");
  const Fib& fj = need_input(b, 1, "48");
  const Fib& fk = need_input(b, 2, "48");
  SheafComplex tij = sheaf_tensor(fi.cx, fj.cx);
  Fib itij = fib_i(tij);
  SheafHomResult h0 = sheaf_hom(itij.cx, fk.cx);
  SheafHomResult h1 = sheaf_hom(tij, fk.cx);
  SheafHomResult hjk = sheaf_hom(fj.cx, fk.cx);
  SheafHomResult h2 = sheaf_hom(fi.cx, hjk.sheaf);
  Fib ihjk = fib_i(hjk.sheaf);
  SheafHomResult h3 = sheaf_hom(fi.cx, ihjk.cx);
  Fib v0 = fib_i(h0.sheaf);
  Fib v1 = fib_i(h1.sheaf);
  Fib v2 = fib_i(h2.sheaf);
  Fib v3 = fib_i(h3.sheaf);
  ZigZag z = zig_start("48", v0, true);
  zig_push(z, v1,
           i_map(v0, v1,
                 sheaf_hom_map(itij.cx, fk.cx, h0, tij, fk.cx, h1, itij.res->iota,
                               SheafGradedMap::identity(fk.cx))),
           true);
  zig_push(z, v2, i_map(v1, v2, curry_hom(fi.cx, fj.cx, fk.cx)), true);
  zig_push(z, v3,
           i_map(v2, v3,
                 sheaf_hom_map(fi.cx, hjk.sheaf, h2, fi.cx, ihjk.cx, h3,
                               SheafGradedMap::identity(fi.cx), ihjk.res->iota)),
           true);
  return z;
}

ZigZag row_46(const RowBindings& b) {
  const Fib& fi = need_input(b, 0, "46");
  const Fib& fj = need_input(b, 1, "46");
  SheafHomResult h = sheaf_hom(fi.cx, fj.cx);
  Fib ih = fib_i(h.sheaf);
  Fib v0{gamma_sheaf(h.sheaf), nullptr};
  Fib v1{gamma_sheaf(ih.cx), nullptr};
  ZigZag z = zig_start("46", v0, true);
  zig_push(z, v1, gamma_map(ih.res->iota), true);
  return z;
}

ZigZag row_aa_id(const RowBindings& b) {
  const ContinuousMap& a = need_alpha(b, "aa-id");
  const Fib& in = need_input(b, 0, "aa-id");
  Fib ipush = fib_i(pushforward(a, in.cx));
  Fib v0 = fib_i(pullback(a, ipush.cx));
  Fib v1 = fib_i(pullback(a, ipush.res->input));
  Fib v2 = fib_i(in.cx);
  ZigZag z = zig_start("aa-id", v0, false);
  zig_push(z, v1, i_map(v1, v0, pullback_map(a, ipush.res->iota)), false);
  zig_push(z, v2, i_map(v1, v2, pull_push_counit(a, in.cx)), true);
  zig_push(z, in, v2.res->iota, false);
  return z;
}

ZigZag row_id_aa(const RowBindings& b) {
  const ContinuousMap& a = need_alpha(b, "id-aa");
  const Fib& in = need_input(b, 0, "id-aa");
  Fib v1 = fib_i(in.cx);
  Fib ipull = fib_i(pullback(a, in.cx));
  SheafChainMap c = SheafGradedMap::compose(pushforward_map(a, ipull.res->iota),
                                            push_pull_unit(a, in.cx));
  Fib v2 = fib_i(pushforward(a, ipull.cx));
  ZigZag z = zig_start("id-aa", in, false);
  zig_push(z, v1, v1.res->iota, true);
  zig_push(z, v2, i_map(v1, v2, c), true);
  return z;
}

ZigZag row_pull_otimes(const RowBindings& b) {
  const ContinuousMap& a = need_alpha(b, "ul-alpha*-otimes");
  const Fib& fi = need_input(b, 0, "ul-alpha*-otimes");
  const Fib& fj = need_input(b, 1, "ul-alpha*-otimes");
  SheafComplex tij = sheaf_tensor(fi.cx, fj.cx);
  Fib itij = fib_i(tij);
  Fib v0 = fib_i(pullback(a, itij.cx));
  SheafComplex pt = pullback(a, tij);
  SheafComplex pi = pullback(a, fi.cx);
  SheafComplex pj = pullback(a, fj.cx);
  require_strict(pt == sheaf_tensor(pi, pj), "alpha^*(I (x) J) = alpha^*I (x) alpha^*J");
  Fib v1 = fib_i(pt);
  Fib ipi = fib_i(pi);
  Fib ipj = fib_i(pj);
  Fib v2 = fib_i(sheaf_tensor(ipi.cx, ipj.cx));
  ZigZag z = zig_start("ul-alpha*-otimes", v0, true);
  zig_push(z, v1, i_map(v1, v0, pullback_map(a, itij.res->iota)), false);
  zig_push(z, v2, i_map(v1, v2, sheaf_tensor_map(ipi.res->iota, ipj.res->iota)), true);
  return z;
}

ZigZag row_pull_push_hom(const RowBindings& b) {
  const ContinuousMap& a = need_alpha(b, "pull-push-sheafHom");
  const Fib& fi = need_input(b, 0, "pull-push-sheafHom");  // on the target site
  const Fib& fj = need_input(b, 1, "pull-push-sheafHom");  // on the source site
  SheafComplex pi = pullback(a, fi.cx);
  Fib ipi = fib_i(pi);
  SheafHomResult h = sheaf_hom(ipi.cx, fj.cx);
  Fib ih = fib_i(h.sheaf);
  Fib v0 = fib_i(pushforward(a, ih.cx));
  Fib v1 = fib_i(pushforward(a, h.sheaf));
  SheafHomResult h2 = sheaf_hom(pi, fj.cx);
  SheafChainMap contra = sheaf_hom_map(ipi.cx, fj.cx, h, pi, fj.cx, h2, ipi.res->iota,
                                       SheafGradedMap::identity(fj.cx));
  Fib v2 = fib_i(pushforward(a, h2.sheaf));
  SheafComplex pj = pushforward(a, fj.cx);
  SheafHomResult h3 = sheaf_hom(fi.cx, pj);
  Fib v3 = fib_i(h3.sheaf);
  Fib ipj = fib_i(pj);
  SheafHomResult h4 = sheaf_hom(fi.cx, ipj.cx);
  Fib v4 = fib_i(h4.sheaf);
  ZigZag z = zig_start("pull-push-sheafHom", v0, true);
  zig_push(z, v1, i_map(v1, v0, pushforward_map(a, ih.res->iota)), false);
  zig_push(z, v2, i_map(v1, v2, pushforward_map(a, contra)), true);
  zig_push(z, v3, i_map(v2, v3, adj_push_hom(a, fi.cx, fj.cx)), true);
  zig_push(z, v4,
           i_map(v3, v4,
                 sheaf_hom_map(fi.cx, pj, h3, fi.cx, ipj.cx, h4,
                               SheafGradedMap::identity(fi.cx), ipj.res->iota)),
           true);
  return z;
}

ZigZag row_id_push(const RowBindings& b) {
  const Fib& in = need_input(b, 0, "id_*");
  auto id = ContinuousMap::identity(in.cx.ctx().space);
  require_strict(pullback(id, in.cx) == in.cx, "id^{-1} I = I");
  SheafChainMap u = push_pull_unit(id, in.cx);
  Fib v0 = fib_i(u.tgt());
  Fib v1 = fib_i(in.cx);
  ZigZag z = zig_start("id_*", v0, true);
  zig_push(z, v1, i_map(v1, v0, u), false);
  zig_push(z, in, v1.res->iota, false);
  return z;
}

ZigZag row_push_comp(const RowBindings& b) {
  const ContinuousMap& a = need_alpha(b, "alphabeta_*");
  const ContinuousMap& bt = need_beta(b, "alphabeta_*");
  const Fib& in = need_input(b, 0, "alphabeta_*");
  auto gamma = ContinuousMap::compose(a, bt);
  Fib v0 = fib_i(pushforward(gamma, in.cx));
  SheafChainMap c = push_compose_iso(a, bt, in.cx);
  Fib v1 = fib_i(c.tgt());
  Fib ibf = fib_i(pushforward(bt, in.cx));
  Fib v2 = fib_i(pushforward(a, ibf.cx));
  ZigZag z = zig_start("alphabeta_*", v0, true);
  zig_push(z, v1, i_map(v0, v1, c), true);
  zig_push(z, v2, i_map(v1, v2, pushforward_map(a, ibf.res->iota)), true);
  return z;
}

ZigZag row_id_pull(const RowBindings& b) {
  const Fib& in = need_input(b, 0, "id^*");
  auto id = ContinuousMap::identity(in.cx.ctx().space);
  require_strict(pullback(id, in.cx) == in.cx, "id^{-1} I = I");
  Fib v0 = fib_i(in.cx);
  ZigZag z = zig_start("id^*", v0, true);
  zig_push(z, in, v0.res->iota, false);
  return z;
}

ZigZag row_pull_comp(const RowBindings& b) {
  const ContinuousMap& a = need_alpha(b, "alphabeta^*");
  const ContinuousMap& bt = need_beta(b, "alphabeta^*");
  const Fib& in = need_input(b, 0, "alphabeta^*");
  auto gamma = ContinuousMap::compose(a, bt);
  SheafComplex pg = pullback(gamma, in.cx);
  SheafComplex pa = pullback(a, in.cx);
  require_strict(pg == pullback(bt, pa), "(alpha beta)^{-1} = beta^{-1} alpha^{-1}");
  Fib v0 = fib_i(pg);
  Fib ipa = fib_i(pa);
  Fib v1 = fib_i(pullback(bt, ipa.cx));
  ZigZag z = zig_start("alphabeta^*", v0, true);
  zig_push(z, v1, i_map(v0, v1, pullback_map(bt, ipa.res->iota)), true);
  return z;
}

ZigZag row_pull_inv(const RowBindings& b) {
  const ContinuousMap& a = need_alpha(b, "ulalpha*-inv");
  const Fib& in = need_input(b, 0, "ulalpha*-inv");
  Fib v = fib_i(pullback(a, in.cx));
  ZigZag z = zig_start("ulalpha*-inv", v, true);
  push_identity_leg(z);
  return z;
}

ZigZag row_shriek_to_push(const RowBindings& b, bool proper) {
  const char* row = proper ? "alpha_!-to-alpha_*-proper" : "alpha_!-to-alpha_*-not-proper";
  const LocallyClosedImmersion& j = need_j(b, row);
  const Fib& in = need_input(b, 0, row);
  bool closed = j.ambient->is_closed(j.subset);
  if (closed != proper)
    throw std::invalid_argument(std::string("row ") + row +
                                ": immersion properness does not match the row");
  Fib v0 = fib_i(lower_shriek(j, in.cx));
  Fib v1 = fib_i(pushforward(j.inclusion, in.cx));
  ZigZag z = zig_start(row, v0, proper);
  zig_push(z, v1, i_map(v0, v1, shriek_to_push(j, in.cx)), true);
  return z;
}

ZigZag row_counit_shriek(const RowBindings& b) {
  const LocallyClosedImmersion& j = need_j(b, "a_!a^!-id");
  const Fib& in = need_input(b, 0, "a_!a^!-id");
  SheafComplex u = upper_shriek_adjoint(j, in.cx).sheaf;
  Fib v0 = fib_i(lower_shriek(j, u));
  Fib v1 = fib_i(in.cx);
  ZigZag z = zig_start("a_!a^!-id", v0, false);
  zig_push(z, v1, i_map(v0, v1, shriek_counit(j, in.cx)), true);
  zig_push(z, in, v1.res->iota, false);
  return z;
}

ZigZag row_unit_shriek(const RowBindings& b) {
  const LocallyClosedImmersion& j = need_j(b, "id-a^!a_!");
  const Fib& in = need_input(b, 0, "id-a^!a_!");
  SheafChainMap u = shriek_unit(j, in.cx);
  Fib v1{u.tgt(), nullptr};
  Fib il = fib_i(lower_shriek(j, in.cx));
  SheafChainMap m = upper_shriek_map(j, il.res->iota);
  Fib v2{m.tgt(), nullptr};
  ZigZag z = zig_start("id-a^!a_!", in, false);
  zig_push(z, v1, u, true);
  zig_push(z, v2, m, true);
  return z;
}

ZigZag row_proj_formula(const RowBindings& b) {
  const LocallyClosedImmersion& j = need_j(b, "projection-fml");
  const Fib& fi = need_input(b, 0, "projection-fml");  // on the subspace
  const Fib& fj = need_input(b, 1, "projection-fml");  // on the ambient space
  Fib il = fib_i(lower_shriek(j, fi.cx));
  Fib v0 = fib_i(sheaf_tensor(il.cx, fj.cx));
  Fib v1 = fib_i(sheaf_tensor(il.res->input, fj.cx));
  SheafChainMap c = proj_formula_iso(j, fi.cx, fj.cx);
  Fib v2 = fib_i(c.tgt());
  SheafComplex pj = pullback(j.inclusion, fj.cx);
  Fib ipj = fib_i(pj);
  SheafChainMap m =
      lower_shriek_map(j, sheaf_tensor_map(SheafGradedMap::identity(fi.cx),
                                           ipj.res->iota));
  Fib v3 = fib_i(m.tgt());
  Fib iw = fib_i(sheaf_tensor(fi.cx, ipj.cx));
  SheafChainMap m2 = lower_shriek_map(j, iw.res->iota);
  Fib v4 = fib_i(m2.tgt());
  ZigZag z = zig_start("projection-fml", v0, true);
  zig_push(z, v1,
           i_map(v1, v0, sheaf_tensor_map(il.res->iota, SheafGradedMap::identity(fj.cx))),
           false);
  zig_push(z, v2, i_map(v1, v2, c), true);
  zig_push(z, v3, i_map(v2, v3, m), true);
  zig_push(z, v4, i_map(v3, v4, m2), true);
  return z;
}

ZigZag row_shriek_adjunction_hom(const RowBindings& b) {
  const LocallyClosedImmersion& j = need_j(b, "!-adjunction-sheafHom");
  const Fib& fi = need_input(b, 0, "!-adjunction-sheafHom");  // on the subspace
  const Fib& fk = need_input(b, 1, "!-adjunction-sheafHom");  // on the ambient space
  SheafComplex u = upper_shriek_adjoint(j, fk.cx).sheaf;
  SheafHomResult h = sheaf_hom(fi.cx, u);
  Fib ih = fib_i(h.sheaf);
  Fib v0 = fib_i(pushforward(j.inclusion, ih.cx));
  Fib v1 = fib_i(pushforward(j.inclusion, h.sheaf));
  SheafComplex l = lower_shriek(j, fi.cx);
  SheafHomResult h2 = sheaf_hom(l, fk.cx);
  Fib v2 = fib_i(h2.sheaf);
  Fib il = fib_i(l);
  SheafHomResult h3 = sheaf_hom(il.cx, fk.cx);
  Fib v3 = fib_i(h3.sheaf);
  ZigZag z = zig_start("!-adjunction-sheafHom", v0, true);
  zig_push(z, v1, i_map(v1, v0, pushforward_map(j.inclusion, ih.res->iota)), false);
  zig_push(z, v2, i_map(v1, v2, adj_shriek_hom(j, fi.cx, fk.cx)), true);
  zig_push(z, v3,
           i_map(v3, v2,
                 sheaf_hom_map(il.cx, fk.cx, h3, l, fk.cx, h2, il.res->iota,
                               SheafGradedMap::identity(fk.cx))),
           false);
  return z;
}

ZigZag row_upper_shriek_hom(const RowBindings& b) {
  const LocallyClosedImmersion& j = need_j(b, "upper-!-sheafHom");
  const Fib& fi = need_input(b, 0, "upper-!-sheafHom");  // on the ambient space
  const Fib& fk = need_input(b, 1, "upper-!-sheafHom");  // on the ambient space
  SheafComplex pi = pullback(j.inclusion, fi.cx);
  Fib ipi = fib_i(pi);
  SheafComplex uk = upper_shriek_adjoint(j, fk.cx).sheaf;
  SheafHomResult h0 = sheaf_hom(ipi.cx, uk);
  SheafHomResult h1 = sheaf_hom(pi, uk);
  Fib v0 = fib_i(h0.sheaf);
  Fib v1 = fib_i(h1.sheaf);
  SheafHomResult hik = sheaf_hom(fi.cx, fk.cx);
  Fib ihik = fib_i(hik.sheaf);
  SheafChainMap c = SheafGradedMap::compose(upper_shriek_map(j, ihik.res->iota),
                                            upper_shriek_hom_iso(j, fi.cx, fk.cx));
  Fib v2 = fib_i(c.tgt());
  Fib v3{c.tgt(), nullptr};
  ZigZag z = zig_start("upper-!-sheafHom", v0, true);
  zig_push(z, v1,
           i_map(v0, v1,
                 sheaf_hom_map(ipi.cx, uk, h0, pi, uk, h1, ipi.res->iota,
                               SheafGradedMap::identity(uk))),
           true);
  zig_push(z, v2, i_map(v1, v2, c), true);
  zig_push(z, v3, v2.res->iota, false);
  return z;
}

ZigZag row_id_shriek(const RowBindings& b) {
  const Fib& in = need_input(b, 0, "id_!");
  auto jw = whole_space_immersion(in.cx.ctx().space);
  require_strict(lower_shriek(jw, in.cx) == in.cx, "id_! I = I");
  Fib v1 = fib_i(in.cx);
  ZigZag z = zig_start("id_!", in, true);
  zig_push(z, v1, v1.res->iota, true);
  return z;
}

ZigZag row_shriek_comp(const RowBindings& b) {
  const LocallyClosedImmersion& j1 = need_j(b, "alphabeta_!");
  const LocallyClosedImmersion& j2 = need_j2(b, "alphabeta_!");
  const LocallyClosedImmersion& j12 = need_j12(b, "alphabeta_!");
  const Fib& in = need_input(b, 0, "alphabeta_!");
  SheafComplex l2 = lower_shriek(j2, in.cx);
  Fib il2 = fib_i(l2);
  Fib v0 = fib_i(lower_shriek(j1, il2.cx));
  SheafComplex a = lower_shriek(j1, l2);
  require_strict(a == lower_shriek(j12, in.cx), "j1_! j2_! I = (j1 j2)_! I");
  Fib v1 = fib_i(a);
  ZigZag z = zig_start("alphabeta_!", v0, true);
  zig_push(z, v1, i_map(v1, v0, lower_shriek_map(j1, il2.res->iota)), false);
  push_identity_leg(z);
  return z;
}

ZigZag row_id_upper_shriek(const RowBindings& b) {
  const Fib& in = need_input(b, 0, "id^!");
  auto jw = whole_space_immersion(in.cx.ctx().space);
  require_strict(upper_shriek_adjoint(jw, in.cx).sheaf == in.cx, "id^! I = I");
  ZigZag z = zig_start("id^!", in, true);
  push_identity_leg(z);
  return z;
}

ZigZag row_upper_shriek_comp(const RowBindings& b) {
  const LocallyClosedImmersion& j1 = need_j(b, "alphabeta^!");
  const LocallyClosedImmersion& j2 = need_j2(b, "alphabeta^!");
  const LocallyClosedImmersion& j12 = need_j12(b, "alphabeta^!");
  const Fib& in = need_input(b, 0, "alphabeta^!");
  SheafChainMap c = ushriek_compose_iso(j1, j2, j12, in.cx);
  Fib v0{c.src(), nullptr};
  Fib v1{c.tgt(), nullptr};
  ZigZag z = zig_start("alphabeta^!", v0, true);
  zig_push(z, v1, c, true);
  return z;
}

ZigZag row_base_change(const RowBindings& b) {
  const LocallyClosedImmersion& j = need_j(b, "proper-base-change");
  const LocallyClosedImmersion& jp = need_j2(b, "proper-base-change");
  const ContinuousMap& beta = need_beta(b, "proper-base-change");
  const ContinuousMap& beta_p = need_alpha(b, "proper-base-change");  // restricted map
  const Fib& in = need_input(b, 0, "proper-base-change");
  Fib il = fib_i(lower_shriek(j, in.cx));
  Fib v0 = fib_i(pullback(beta, il.cx));
  Fib v1 = fib_i(pullback(beta, il.res->input));
  SheafChainMap c = base_change_iso(j, beta, jp, beta_p, in.cx);
  Fib v2 = fib_i(c.tgt());
  Fib ipi = fib_i(pullback(beta_p, in.cx));
  SheafChainMap m = lower_shriek_map(jp, ipi.res->iota);
  Fib v3 = fib_i(m.tgt());
  ZigZag z = zig_start("proper-base-change", v0, true);
  zig_push(z, v1, i_map(v1, v0, pullback_map(beta, il.res->iota)), false);
  zig_push(z, v2, i_map(v1, v2, c), true);
  zig_push(z, v3, i_map(v2, v3, m), true);
  return z;
}

}  // namespace

const std::vector<std::string>& row_ids() {
  static const std::vector<std::string> ids = {
      "left",
      "right",
      "ass-and-symm",
      "ulotimes-swap",
      "48",
      "46",
      "aa-id",
      "id-aa",
      "ul-alpha*-otimes",
      "pull-push-sheafHom",
      "id_*",
      "alphabeta_*",
      "id^*",
      "alphabeta^*",
      "ulalpha*-inv",
      "alpha_!-to-alpha_*-not-proper",
      "alpha_!-to-alpha_*-proper",
      "a_!a^!-id",
      "id-a^!a_!",
      "projection-fml",
      "!-adjunction-sheafHom",
      "upper-!-sheafHom",
      "id_!",
      "alphabeta_!",
      "id^!",
      "alphabeta^!",
      "proper-base-change",
  };
  return ids;
}

bool row_is_two_iso(const std::string& row) {
  return row != "aa-id" && row != "id-aa" && row != "a_!a^!-id" &&
         row != "id-a^!a_!" && row != "alpha_!-to-alpha_*-not-proper";
}

ZigZag generator_zigzag(const std::string& row, const RowBindings& b) {
  if (row == "left") return row_left(b);
  if (row == "right") return row_right(b);
  if (row == "ass-and-symm") return row_ass(b);
  if (row == "ulotimes-swap") return row_swap(b);
  if (row == "48") return row_48(b);
  if (row == "46") return row_46(b);
  if (row == "aa-id") return row_aa_id(b);
  if (row == "id-aa") return row_id_aa(b);
  if (row == "ul-alpha*-otimes") return row_pull_otimes(b);
  if (row == "pull-push-sheafHom") return row_pull_push_hom(b);
  if (row == "id_*") return row_id_push(b);
  if (row == "alphabeta_*") return row_push_comp(b);
  if (row == "id^*") return row_id_pull(b);
  if (row == "alphabeta^*") return row_pull_comp(b);
  if (row == "ulalpha*-inv") return row_pull_inv(b);
  if (row == "alpha_!-to-alpha_*-not-proper") return row_shriek_to_push(b, false);
  if (row == "alpha_!-to-alpha_*-proper") return row_shriek_to_push(b, true);
  if (row == "a_!a^!-id") return row_counit_shriek(b);
  if (row == "id-a^!a_!") return row_unit_shriek(b);
  if (row == "projection-fml") return row_proj_formula(b);
  if (row == "!-adjunction-sheafHom") return row_shriek_adjunction_hom(b);
  if (row == "upper-!-sheafHom") return row_upper_shriek_hom(b);
  if (row == "id_!") return row_id_shriek(b);
  if (row == "alphabeta_!") return row_shriek_comp(b);
  if (row == "id^!") return row_id_upper_shriek(b);
  if (row == "alphabeta^!") return row_upper_shriek_comp(b);
  if (row == "proper-base-change") return row_base_change(b);
  throw std::invalid_argument("generator_zigzag: unknown row " + row);
}

SheafChainMap push_compose_iso(const ContinuousMap& alpha, const ContinuousMap& beta,
                               const SheafComplex& f) {
  auto gamma = ContinuousMap::compose(alpha, beta);
  SheafComplex gf = pushforward(gamma, f);
  SheafComplex bf = pushforward(beta, f);
  SheafComplex abf = pushforward(alpha, bf);
  SheafChainMap out(gf, abf, 0);
  const FinSpace& z_space = *alpha.tgt;
  const FinSpace& y_space = *alpha.src;
  for (int z = 0; z < static_cast<int>(z_space.size()); ++z) {
    auto big = sections_full(f, gamma.preimage(z_space.minimal_open(z)));
    auto a_pre = alpha.preimage(z_space.minimal_open(z));
    auto out_sec = sections_full(bf, a_pre);
    // Restrict a section over (alpha beta)^{-1} U_z to beta^{-1} U_y per y.
    std::vector<ChainMap> rest;
    rest.reserve(a_pre.size());
    for (int y : a_pre)
      rest.push_back(sections_restrict(
          f, big, sections_full(f, beta.preimage(y_space.minimal_open(y)))));
    GradedMap gm(gf.stalk(z), abf.stalk(z), 0);
    for (auto [n, cols] : gf.stalk(z).dims()) {
      Matrix amb(detail::amb_dim(bf, a_pre, n), cols, f.ctx().p);
      std::size_t row0 = 0;
      for (std::size_t yi = 0; yi < a_pre.size(); ++yi) {
        Matrix blk = rest[yi].map(n);
        for (std::size_t r = 0; r < blk.rows(); ++r)
          for (std::size_t c = 0; c < cols; ++c) amb.at(row0 + r, c) = blk.at(r, c);
        row0 += blk.rows();
      }
      auto bit = out_sec.basis.find(n);
      if (bit == out_sec.basis.end()) {
        if (!amb.is_zero())
          throw std::logic_error("push_compose_iso: section escapes the target");
        continue;
      }
      gm.set_map(n, detail::solve_in_basis(bit->second, amb, "push_compose_iso"));
    }
    out.set_at(z, gm);
  }
  out.validate_chain_map();
  return out;
}

}  // namespace fsh
