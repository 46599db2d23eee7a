#include "fsh/enh.hpp"

#include <stdexcept>

namespace fsh {

Fib fib_i(const SheafComplex& f) {
  auto r = std::make_shared<ResolutionResult>(i_complex(f));
  Fib out{r->output, std::move(r)};
  return out;
}

SheafChainMap fib_iota(const Fib& f) {
  if (!f.res) throw std::logic_error("fib_iota: vertex carries no resolution");
  return f.res->iota;
}

SheafGradedMap i_map(const Fib& a, const Fib& b, const SheafGradedMap& h) {
  if (!a.res || !b.res) throw std::logic_error("i_map: endpoint without resolution");
  return i_on_graded_map(*a.res, *b.res, h);
}

SiteContext point_site(std::uint32_t p) {
  static const auto pt = std::make_shared<const FinSpace>(1, std::vector<std::pair<int, int>>{});
  return SiteContext{pt, p};
}

SheafComplex point_sheaf(const Complex& v) {
  SheafComplex out(point_site(v.modulus()));
  out.set_stalk(0, v);
  return out;
}

SheafComplex gamma_sheaf(const SheafComplex& f) {
  return point_sheaf(global_sections(f));
}

SheafChainMap gamma_map(const SheafGradedMap& phi) {
  auto pts = all_points(phi.src().points());
  auto ssec = sections_full(phi.src(), pts);
  auto tsec = sections_full(phi.tgt(), pts);
  SheafGradedMap out(point_sheaf(ssec.cx), point_sheaf(tsec.cx), phi.degree());
  out.set_at(0, sections_map(phi, ssec, tsec));
  return out;
}

// --- functor expressions ------------------------------------------------------

FunctorExpr fe_slot(std::size_t i) {
  FunctorExpr e;
  e.kind = FunctorExpr::Kind::Slot;
  e.slot = i;
  return e;
}

FunctorExpr fe_object(SheafComplex g) {
  FunctorExpr e;
  e.kind = FunctorExpr::Kind::Object;
  e.obj = std::make_shared<const SheafComplex>(std::move(g));
  return e;
}

static FunctorExpr fe_node(FunctorExpr::Kind k, std::vector<FunctorExpr> args) {
  FunctorExpr e;
  e.kind = k;
  e.args = std::move(args);
  return e;
}

FunctorExpr fe_tensor(FunctorExpr a, FunctorExpr b) {
  return fe_node(FunctorExpr::Kind::Tensor, {std::move(a), std::move(b)});
}
FunctorExpr fe_shom(FunctorExpr a, FunctorExpr b) {
  return fe_node(FunctorExpr::Kind::SHom, {std::move(a), std::move(b)});
}
FunctorExpr fe_hom_glob(FunctorExpr a, FunctorExpr b) {
  return fe_node(FunctorExpr::Kind::HomGlob, {std::move(a), std::move(b)});
}
FunctorExpr fe_gamma(FunctorExpr a) {
  return fe_node(FunctorExpr::Kind::Gamma, {std::move(a)});
}

static FunctorExpr fe_mapped(FunctorExpr::Kind k, ContinuousMap alpha, FunctorExpr a) {
  FunctorExpr e = fe_node(k, {std::move(a)});
  e.map = std::move(alpha);
  return e;
}

FunctorExpr fe_pull(ContinuousMap alpha, FunctorExpr a) {
  return fe_mapped(FunctorExpr::Kind::Pull, std::move(alpha), std::move(a));
}
FunctorExpr fe_pullinv(ContinuousMap alpha, FunctorExpr a) {
  return fe_mapped(FunctorExpr::Kind::PullInv, std::move(alpha), std::move(a));
}
FunctorExpr fe_push(ContinuousMap alpha, FunctorExpr a) {
  return fe_mapped(FunctorExpr::Kind::Push, std::move(alpha), std::move(a));
}

static FunctorExpr fe_immersed(FunctorExpr::Kind k, LocallyClosedImmersion j,
                               FunctorExpr a) {
  FunctorExpr e = fe_node(k, {std::move(a)});
  e.imm = std::move(j);
  return e;
}

FunctorExpr fe_shriek(LocallyClosedImmersion j, FunctorExpr a) {
  return fe_immersed(FunctorExpr::Kind::Shriek, std::move(j), std::move(a));
}
FunctorExpr fe_ushriek(LocallyClosedImmersion j, FunctorExpr a) {
  return fe_immersed(FunctorExpr::Kind::UShriek, std::move(j), std::move(a));
}

std::size_t expr_arity(const FunctorExpr& e) {
  if (e.kind == FunctorExpr::Kind::Slot) return e.slot + 1;
  std::size_t a = 0;
  for (const auto& c : e.args) a = std::max(a, expr_arity(c));
  return a;
}

int slot_variance(const FunctorExpr& e, std::size_t slot) {
  using K = FunctorExpr::Kind;
  switch (e.kind) {
    case K::Slot:
      return e.slot == slot ? 1 : 0;
    case K::Object:
      return 0;
    case K::SHom:
    case K::HomGlob: {
      int a = -slot_variance(e.args[0], slot);
      int b = slot_variance(e.args[1], slot);
      if (a == 0) return b;
      if (b == 0) return a;
      return a == b ? a : 0;
    }
    default: {
      int v = 0;
      for (const auto& c : e.args) {
        int w = slot_variance(c, slot);
        if (w == 0) continue;
        if (v == 0)
          v = w;
        else if (v != w)
          return 0;
      }
      return v;
    }
  }
}

Fib eval_underlined(const FunctorExpr& e, const std::vector<Fib>& inputs) {
  using K = FunctorExpr::Kind;
  auto ev = [&](std::size_t i) { return eval_underlined(e.args.at(i), inputs); };
  switch (e.kind) {
    case K::Slot: {
      const Fib& in = inputs.at(e.slot);
      if (!is_fibrant(in.cx))
        throw std::invalid_argument("eval_underlined: non-fibrant input");
      return in;
    }
    case K::Object:
      return fib_i(*e.obj);
    case K::Tensor:
      return fib_i(sheaf_tensor(ev(0).cx, ev(1).cx));
    case K::SHom:
      return fib_i(sheaf_hom(ev(0).cx, ev(1).cx).sheaf);
    case K::HomGlob:
      return fib_i(gamma_sheaf(sheaf_hom(ev(0).cx, ev(1).cx).sheaf));
    case K::Gamma:
      return fib_i(gamma_sheaf(ev(0).cx));
    case K::Pull:
    case K::PullInv:
      return fib_i(pullback(*e.map, ev(0).cx));
    case K::Push:
      return fib_i(pushforward(*e.map, ev(0).cx));
    case K::Shriek:
      return fib_i(lower_shriek(*e.imm, ev(0).cx));
    case K::UShriek:
      return Fib{upper_shriek_adjoint(*e.imm, ev(0).cx).sheaf, nullptr};
  }
  throw std::logic_error("eval_underlined: bad kind");
}

SheafComplex eval_derived(const FunctorExpr& e,
                          const std::vector<SheafComplex>& inputs) {
  using K = FunctorExpr::Kind;
  auto ev = [&](std::size_t i) { return eval_derived(e.args.at(i), inputs); };
  auto resolve = [](const SheafComplex& f) { return i_complex(f).output; };
  switch (e.kind) {
    case K::Slot:
      return inputs.at(e.slot);
    case K::Object:
      return *e.obj;
    case K::Tensor:
      return sheaf_tensor(ev(0), ev(1));
    case K::SHom:
      return sheaf_hom(ev(0), resolve(ev(1))).sheaf;
    case K::HomGlob:
      return gamma_sheaf(sheaf_hom(ev(0), resolve(ev(1))).sheaf);
    case K::Gamma:
      return gamma_sheaf(resolve(ev(0)));
    case K::Pull:
    case K::PullInv:
      return pullback(*e.map, ev(0));
    case K::Push:
      return pushforward(*e.map, resolve(ev(0)));
    case K::Shriek:
      return lower_shriek(*e.imm, ev(0));
    case K::UShriek:
      return upper_shriek_adjoint(*e.imm, resolve(ev(0))).sheaf;
  }
  throw std::logic_error("eval_derived: bad kind");
}

// --- zig-zags ------------------------------------------------------------------

ZigZag zig_identity(Fib v, std::string tag) {
  ZigZag z;
  z.tag = std::move(tag);
  z.legs.push_back(Leg{SheafGradedMap::identity(v.cx), true, true});
  z.vertices.push_back(v);
  z.vertices.push_back(std::move(v));
  return z;
}

void zig_push(ZigZag& z, Fib next, SheafChainMap map, bool forward) {
  if (z.vertices.empty()) throw std::logic_error("zig_push: no source vertex");
  const SheafComplex& prev = z.vertices.back().cx;
  const SheafComplex& from = forward ? map.src() : map.tgt();
  const SheafComplex& to = forward ? map.tgt() : map.src();
  if (!(from == prev) || !(to == next.cx))
    throw std::logic_error("zig_push: leg endpoints do not chain");
  bool q = sheaf_is_quasi_iso(map);
  z.legs.push_back(Leg{std::move(map), forward, q});
  z.vertices.push_back(std::move(next));
}

ZigZag zig_reverse(const ZigZag& z) {
  ZigZag out;
  out.tag = "rev(" + z.tag + ")";
  out.two_iso_expected = z.two_iso_expected;
  out.vertices.assign(z.vertices.rbegin(), z.vertices.rend());
  for (auto it = z.legs.rbegin(); it != z.legs.rend(); ++it)
    out.legs.push_back(Leg{it->map, !it->forward, it->qiso});
  return out;
}

ZigZag zig_concat(const ZigZag& a, const ZigZag& b) {
  if (!(a.target() == b.source()))
    throw std::logic_error("zig_concat: endpoint mismatch");
  ZigZag out = a;
  out.tag = a.tag + ";" + b.tag;
  out.two_iso_expected = a.two_iso_expected && b.two_iso_expected;
  out.legs.insert(out.legs.end(), b.legs.begin(), b.legs.end());
  out.vertices.insert(out.vertices.end(), b.vertices.begin() + 1, b.vertices.end());
  return out;
}

SheafChainMap reduce_roof(const ZigZag& z) {
  SheafChainMap cur = SheafGradedMap::identity(z.source());
  for (const auto& leg : z.legs) {
    if (leg.forward) {
      cur = SheafGradedMap::compose(leg.map, cur);
      continue;
    }
    if (!leg.qiso)
      throw std::runtime_error("reduce_roof: backward leg is not a quasi-isomorphism");
    auto inv = sheaf_homotopy_inverse(leg.map);
    if (!inv)
      throw std::runtime_error("reduce_roof: backward leg has no homotopy inverse");
    cur = SheafGradedMap::compose(inv->g, cur);
  }
  return cur;
}

bool check_two_iso(const ZigZag& z) {
  for (const auto& leg : z.legs)
    if (!leg.qiso) return false;
  return true;
}

}  // namespace fsh
