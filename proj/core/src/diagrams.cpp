#include <functional>
#include <stdexcept>

#include "fsh/enh.hpp"

namespace fsh {

namespace {

// Apply a dg-functor to every vertex and leg of a zig-zag.  `on_obj` is the
// plain functor on objects, `on_map` its action on chain maps; when `wrap` the
// functor is an underlined one, so vertices get re-resolved and legs pass
// through i.
ZigZag whisker(const ZigZag& z, const std::string& tag,
               const std::function<SheafComplex(const SheafComplex&)>& on_obj,
               const std::function<SheafChainMap(const SheafChainMap&)>& on_map,
               bool wrap) {
  std::vector<Fib> verts;
  verts.reserve(z.vertices.size());
  for (const auto& v : z.vertices)
    verts.push_back(wrap ? fib_i(on_obj(v.cx)) : Fib{on_obj(v.cx), nullptr});
  ZigZag out;
  out.tag = tag + "(" + z.tag + ")";
  out.two_iso_expected = z.two_iso_expected;
  out.vertices.push_back(verts.front());
  for (std::size_t k = 0; k < z.legs.size(); ++k) {
    const Leg& leg = z.legs[k];
    SheafChainMap raw = on_map(leg.map);
    if (wrap) {
      const Fib& a = leg.forward ? verts[k] : verts[k + 1];
      const Fib& b = leg.forward ? verts[k + 1] : verts[k];
      raw = i_map(a, b, raw);
    }
    zig_push(out, verts[k + 1], std::move(raw), leg.forward);
  }
  return out;
}

ZigZag wh_tensor_right(const ZigZag& z, const Fib& h) {
  return whisker(
      z, "-(x)" ,
      [&](const SheafComplex& v) { return sheaf_tensor(v, h.cx); },
      [&](const SheafChainMap& f) {
        return sheaf_tensor_map(f, SheafGradedMap::identity(h.cx));
      },
      true);
}

ZigZag wh_tensor_left(const Fib& g, const ZigZag& z) {
  return whisker(
      z, "(x)-",
      [&](const SheafComplex& v) { return sheaf_tensor(g.cx, v); },
      [&](const SheafChainMap& f) {
        return sheaf_tensor_map(SheafGradedMap::identity(g.cx), f);
      },
      true);
}

ZigZag wh_push(const ContinuousMap& a, const ZigZag& z) {
  return whisker(
      z, "push",
      [&](const SheafComplex& v) { return pushforward(a, v); },
      [&](const SheafChainMap& f) { return pushforward_map(a, f); }, true);
}

ZigZag wh_pull(const ContinuousMap& a, const ZigZag& z) {
  return whisker(
      z, "pull",
      [&](const SheafComplex& v) { return pullback(a, v); },
      [&](const SheafChainMap& f) { return pullback_map(a, f); }, true);
}

ZigZag wh_shriek(const LocallyClosedImmersion& j, const ZigZag& z) {
  return whisker(
      z, "shriek",
      [&](const SheafComplex& v) { return lower_shriek(j, v); },
      [&](const SheafChainMap& f) { return lower_shriek_map(j, f); }, true);
}

ZigZag wh_ushriek(const LocallyClosedImmersion& j, const ZigZag& z) {
  return whisker(
      z, "ushriek",
      [&](const SheafComplex& v) { return upper_shriek_adjoint(j, v).sheaf; },
      [&](const SheafChainMap& f) { return upper_shriek_map(j, f); }, false);
}

Fib ul_tensor(const Fib& a, const Fib& b) {
  return fib_i(sheaf_tensor(a.cx, b.cx));
}

ZigZag ass_row(const Fib& a, const Fib& b, const Fib& c) {
  RowBindings rb;
  rb.inputs = {a, b, c};
  return generator_zigzag("ass-and-symm", rb);
}

const Fib& need_input(const RowBindings& b, std::size_t i, const char* d) {
  if (b.inputs.size() <= i)
    throw std::invalid_argument(std::string("diagram ") + d + ": missing input");
  return b.inputs[i];
}

DiagramSpec diag_assoc_pentagon(const RowBindings& b) {
  const Fib& e = need_input(b, 0, "assoc-pentagon");
  const Fib& f = need_input(b, 1, "assoc-pentagon");
  const Fib& g = need_input(b, 2, "assoc-pentagon");
  const Fib& h = need_input(b, 3, "assoc-pentagon");
  Fib ef = ul_tensor(e, f);
  Fib fg = ul_tensor(f, g);
  Fib gh = ul_tensor(g, h);
  DiagramSpec d;
  d.name = "assoc-pentagon";
  d.path1 = zig_concat(ass_row(ef, g, h), ass_row(e, f, gh));
  d.path2 = zig_concat(zig_concat(wh_tensor_right(ass_row(e, f, g), h),
                                  ass_row(e, fg, h)),
                       wh_tensor_left(e, ass_row(f, g, h)));
  return d;
}

DiagramSpec diag_unit_triangle(const RowBindings& b) {
  const Fib& e = need_input(b, 0, "unit-triangle");
  const Fib& f = need_input(b, 1, "unit-triangle");
  Fib io = fib_i(make_constant(e.cx.ctx(), Complex::point(0, 1, e.cx.ctx().p)));
  RowBindings left_b;
  left_b.inputs = {f};
  RowBindings right_b;
  right_b.inputs = {e};
  DiagramSpec d;
  d.name = "unit-triangle";
  d.path1 = zig_concat(ass_row(e, io, f),
                       wh_tensor_left(e, generator_zigzag("left", left_b)));
  d.path2 = wh_tensor_right(generator_zigzag("right", right_b), f);
  return d;
}

DiagramSpec diag_symm_involution(const RowBindings& b) {
  const Fib& e = need_input(b, 0, "symm-involution");
  const Fib& f = need_input(b, 1, "symm-involution");
  RowBindings ef;
  ef.inputs = {e, f};
  RowBindings fe;
  fe.inputs = {f, e};
  DiagramSpec d;
  d.name = "symm-involution";
  d.path1 = zig_concat(generator_zigzag("ulotimes-swap", ef),
                       generator_zigzag("ulotimes-swap", fe));
  d.path2 = zig_identity(ul_tensor(e, f));
  return d;
}

DiagramSpec diag_pull_triangle_push(const RowBindings& b) {
  if (!b.alpha) throw std::invalid_argument("diagram alpha*-triangle-push: needs a map");
  const ContinuousMap& a = *b.alpha;
  const Fib& e = need_input(b, 0, "alpha*-triangle-push");
  Fib p = fib_i(pushforward(a, e.cx));
  RowBindings unit_b;
  unit_b.alpha = a;
  unit_b.inputs = {p};
  RowBindings counit_b;
  counit_b.alpha = a;
  counit_b.inputs = {e};
  DiagramSpec d;
  d.name = "alpha*-triangle-push";
  d.path1 = zig_concat(generator_zigzag("id-aa", unit_b),
                       wh_push(a, generator_zigzag("aa-id", counit_b)));
  d.path2 = zig_identity(p);
  return d;
}

DiagramSpec diag_pull_triangle_pull(const RowBindings& b) {
  if (!b.alpha) throw std::invalid_argument("diagram alpha*-triangle-pull: needs a map");
  const ContinuousMap& a = *b.alpha;
  const Fib& e = need_input(b, 0, "alpha*-triangle-pull");
  Fib q = fib_i(pullback(a, e.cx));
  RowBindings unit_b;
  unit_b.alpha = a;
  unit_b.inputs = {e};
  RowBindings counit_b;
  counit_b.alpha = a;
  counit_b.inputs = {q};
  DiagramSpec d;
  d.name = "alpha*-triangle-pull";
  d.path1 = zig_concat(wh_pull(a, generator_zigzag("id-aa", unit_b)),
                       generator_zigzag("aa-id", counit_b));
  d.path2 = zig_identity(q);
  return d;
}

DiagramSpec diag_conjugation_square(const RowBindings& b) {
  if (!b.alpha || !b.beta)
    throw std::invalid_argument("diagram conjugation-square: needs two maps");
  const ContinuousMap& a = *b.alpha;
  const ContinuousMap& bt = *b.beta;
  auto gamma = ContinuousMap::compose(a, bt);
  const Fib& e = need_input(b, 0, "conjugation-square");
  Fib pull_gamma = fib_i(pullback(gamma, e.cx));
  Fib pull_a = fib_i(pullback(a, e.cx));

  RowBindings unit_gamma;
  unit_gamma.alpha = gamma;
  unit_gamma.inputs = {e};
  RowBindings push_comp;
  push_comp.alpha = a;
  push_comp.beta = bt;
  push_comp.inputs = {pull_gamma};
  DiagramSpec d;
  d.name = "conjugation-square";
  d.path1 = zig_concat(generator_zigzag("id-aa", unit_gamma),
                       generator_zigzag("alphabeta_*", push_comp));

  RowBindings unit_a;
  unit_a.alpha = a;
  unit_a.inputs = {e};
  RowBindings unit_bt;
  unit_bt.alpha = bt;
  unit_bt.inputs = {pull_a};
  RowBindings pull_comp;
  pull_comp.alpha = a;
  pull_comp.beta = bt;
  pull_comp.inputs = {e};
  d.path2 = zig_concat(
      zig_concat(generator_zigzag("id-aa", unit_a),
                 wh_push(a, generator_zigzag("id-aa", unit_bt))),
      wh_push(a, wh_push(bt, zig_reverse(generator_zigzag("alphabeta^*", pull_comp)))));
  return d;
}

DiagramSpec diag_shriek_triangle_lower(const RowBindings& b) {
  if (!b.j)
    throw std::invalid_argument("diagram alpha!-triangle-shriek: needs an immersion");
  const LocallyClosedImmersion& j = *b.j;
  const Fib& e = need_input(b, 0, "alpha!-triangle-shriek");
  Fib l = fib_i(lower_shriek(j, e.cx));
  RowBindings unit_b;
  unit_b.j = j;
  unit_b.inputs = {e};
  RowBindings counit_b;
  counit_b.j = j;
  counit_b.inputs = {l};
  DiagramSpec d;
  d.name = "alpha!-triangle-shriek";
  d.path1 = zig_concat(wh_shriek(j, generator_zigzag("id-a^!a_!", unit_b)),
                       generator_zigzag("a_!a^!-id", counit_b));
  d.path2 = zig_identity(l);
  return d;
}

DiagramSpec diag_shriek_triangle_upper(const RowBindings& b) {
  if (!b.j)
    throw std::invalid_argument("diagram alpha!-triangle-ushriek: needs an immersion");
  const LocallyClosedImmersion& j = *b.j;
  const Fib& e = need_input(b, 0, "alpha!-triangle-ushriek");
  Fib u{upper_shriek_adjoint(j, e.cx).sheaf, nullptr};
  RowBindings unit_b;
  unit_b.j = j;
  unit_b.inputs = {u};
  RowBindings counit_b;
  counit_b.j = j;
  counit_b.inputs = {e};
  DiagramSpec d;
  d.name = "alpha!-triangle-ushriek";
  d.path1 = zig_concat(generator_zigzag("id-a^!a_!", unit_b),
                       wh_ushriek(j, generator_zigzag("a_!a^!-id", counit_b)));
  d.path2 = zig_identity(u);
  return d;
}

}  // namespace

const std::vector<std::string>& diagram_names() {
  static const std::vector<std::string> names = {
      "assoc-pentagon",       "unit-triangle",        "symm-involution",
      "alpha*-triangle-push", "alpha*-triangle-pull", "conjugation-square",
      "alpha!-triangle-shriek", "alpha!-triangle-ushriek",
  };
  return names;
}

DiagramSpec build_diagram(const std::string& name, const RowBindings& b) {
  if (name == "assoc-pentagon") return diag_assoc_pentagon(b);
  if (name == "unit-triangle") return diag_unit_triangle(b);
  if (name == "symm-involution") return diag_symm_involution(b);
  if (name == "alpha*-triangle-push") return diag_pull_triangle_push(b);
  if (name == "alpha*-triangle-pull") return diag_pull_triangle_pull(b);
  if (name == "conjugation-square") return diag_conjugation_square(b);
  if (name == "alpha!-triangle-shriek") return diag_shriek_triangle_lower(b);
  if (name == "alpha!-triangle-ushriek") return diag_shriek_triangle_upper(b);
  throw std::invalid_argument("build_diagram: unknown diagram " + name);
}

namespace {

std::size_t slot_count(const FunctorExpr& e) {
  if (e.kind == FunctorExpr::Kind::Slot) return 1;
  std::size_t n = 0;
  for (const auto& a : e.args) n += slot_count(a);
  return n;
}

ZigZag wh_hom_right(const Fib& g, const ZigZag& z) {
  return whisker(
      z, "Hom(g,-)",
      [&](const SheafComplex& v) { return sheaf_hom(g.cx, v).sheaf; },
      [&](const SheafChainMap& f) {
        return sheaf_hom_map(g.cx, f.src(), sheaf_hom(g.cx, f.src()), g.cx,
                             f.tgt(), sheaf_hom(g.cx, f.tgt()),
                             SheafGradedMap::identity(g.cx), f);
      },
      true);
}

ZigZag wh_hom_glob_right(const Fib& g, const ZigZag& z) {
  return whisker(
      z, "HomG(g,-)",
      [&](const SheafComplex& v) {
        return gamma_sheaf(sheaf_hom(g.cx, v).sheaf);
      },
      [&](const SheafChainMap& f) {
        return gamma_map(sheaf_hom_map(g.cx, f.src(), sheaf_hom(g.cx, f.src()),
                                       g.cx, f.tgt(),
                                       sheaf_hom(g.cx, f.tgt()),
                                       SheafGradedMap::identity(g.cx), f));
      },
      true);
}

ZigZag wh_gamma(const ZigZag& z) {
  return whisker(
      z, "Gamma",
      [&](const SheafComplex& v) { return gamma_sheaf(v); },
      [&](const SheafChainMap& f) { return gamma_map(f); }, true);
}

}  // namespace

ZigZag whisker_zigzag(const FunctorExpr& f, const ZigZag& z) {
  using K = FunctorExpr::Kind;
  if (f.kind == K::Slot) return z;
  if (f.kind == K::Object)
    throw std::invalid_argument("whisker_zigzag: context has no slot");
  if (f.kind == K::Tensor || f.kind == K::SHom || f.kind == K::HomGlob) {
    bool left = slot_count(f.args[0]) == 1;
    bool right = slot_count(f.args[1]) == 1;
    if (left == right)
      throw std::invalid_argument("whisker_zigzag: context needs exactly one slot");
    const FunctorExpr& live = left ? f.args[0] : f.args[1];
    const FunctorExpr& fixed = left ? f.args[1] : f.args[0];
    Fib g = eval_underlined(fixed, {});
    ZigZag inner = whisker_zigzag(live, z);
    if (f.kind == K::Tensor)
      return left ? wh_tensor_right(inner, g) : wh_tensor_left(g, inner);
    if (left)
      throw std::invalid_argument(
          "whisker_zigzag: contravariant Hom context unsupported");
    return f.kind == K::SHom ? wh_hom_right(g, inner)
                             : wh_hom_glob_right(g, inner);
  }
  if (slot_count(f.args[0]) != 1)
    throw std::invalid_argument("whisker_zigzag: context needs exactly one slot");
  ZigZag inner = whisker_zigzag(f.args[0], z);
  switch (f.kind) {
    case K::Gamma:
      return wh_gamma(inner);
    case K::Pull:
    case K::PullInv:
      return wh_pull(*f.map, inner);
    case K::Push:
      return wh_push(*f.map, inner);
    case K::Shriek:
      return wh_shriek(*f.imm, inner);
    case K::UShriek:
      return wh_ushriek(*f.imm, inner);
    default:
      throw std::invalid_argument("whisker_zigzag: unsupported context");
  }
}

DiagramResult check_diagram(const std::string& name, const RowBindings& b) {
  DiagramResult r;
  r.spec = build_diagram(name, b);
  if (!(r.spec.path1.source() == r.spec.path2.source()) ||
      !(r.spec.path1.target() == r.spec.path2.target()))
    throw std::logic_error("check_diagram: paths do not share endpoints");
  SheafChainMap m1 = reduce_roof(r.spec.path1);
  SheafChainMap m2 = reduce_roof(r.spec.path2);
  r.witness = sheaf_is_homotopic(m1, m2);
  r.ok = r.witness.has_value();
  return r;
}

}  // namespace fsh
