#include "fsh/workspace.hpp"

#include <algorithm>
#include <future>
#include <thread>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fstream>

#include "json.hpp"

namespace fsh {

namespace {

using Json = nlohmann::ordered_json;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

const RandomBounds kTiny0{1, 0, 0, 1, true};
const RandomBounds kTiny1{1, 0, 1, 1, true};

SheafComplex nonzero_random(const SiteContext& ctx, std::uint64_t seed,
                            const RandomBounds& b) {
  for (std::uint64_t s = seed;; ++s) {
    SheafComplex f = make_random(ctx, s, b);
    for (std::size_t x = 0; x < f.points(); ++x)
      if (!f.stalk(static_cast<int>(x)).is_zero_object()) return f;
  }
}

// Bounded both in points and in chain length: the injective-resolution
// window (and with it every re-resolved zig-zag vertex) grows with the
// longest chain, so deep random posets are exact but explosively large.
std::shared_ptr<const FinSpace> random_space(std::mt19937_64& rng,
                                             std::size_t max_pts,
                                             std::size_t max_chain = 2) {
 retry:
  std::size_t n = 2 + rng() % (max_pts - 1);
  std::vector<char> rel(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) rel[i * n + i] = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng() % 5 < 2) rel[i * n + j] = 1;
  // transitive closure (indices already topologically ordered)
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (rel[i * n + k])
        for (std::size_t j = 0; j < n; ++j)
          if (rel[k * n + j]) rel[i * n + j] = 1;
  std::vector<std::pair<int, int>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && rel[i * n + j])
        pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  auto out = std::make_shared<const FinSpace>(n, pairs);
  if (out->longest_chain() > max_chain) goto retry;
  return out;
}

ContinuousMap random_monotone(std::mt19937_64& rng,
                              std::shared_ptr<const FinSpace> src,
                              std::shared_ptr<const FinSpace> tgt) {
  const std::size_t n = src->size(), m = tgt->size();
  std::vector<int> assign(n, 0);
  for (int tries = 0; tries < 200; ++tries) {
    for (auto& a : assign) a = static_cast<int>(rng() % m);
    bool mono = true;
    for (std::size_t x = 0; x < n && mono; ++x)
      for (std::size_t y = 0; y < n && mono; ++y)
        if (src->leq(static_cast<int>(x), static_cast<int>(y)) &&
            !tgt->leq(assign[x], assign[y]))
          mono = false;
    if (mono) break;
    if (tries == 199) std::fill(assign.begin(), assign.end(), 0);
  }
  ContinuousMap f{std::move(src), std::move(tgt), std::move(assign)};
  f.validate();
  return f;
}

LocallyClosedImmersion random_immersion(std::mt19937_64& rng,
                                        std::shared_ptr<const FinSpace> x) {
  for (int tries = 0; tries < 50; ++tries) {
    std::vector<int> s;
    for (std::size_t i = 0; i < x->size(); ++i)
      if (rng() % 2) s.push_back(static_cast<int>(i));
    if (s.empty() || s.size() == x->size()) continue;
    if (auto j = factor_locally_closed(x, s)) return *j;
  }
  return *factor_locally_closed(x, {0});
}

LocallyClosedImmersion random_closed_immersion(std::mt19937_64& rng,
                                               std::shared_ptr<const FinSpace> x) {
  for (int tries = 0; tries < 50; ++tries) {
    std::vector<int> s;
    for (std::size_t i = 0; i < x->size(); ++i)
      if (rng() % 2) s.push_back(static_cast<int>(i));
    if (s.empty()) continue;
    s = x->down_closure(s);
    if (s.size() == x->size()) continue;
    if (auto j = factor_locally_closed(x, s)) return *j;
  }
  return *factor_locally_closed(x, x->down_closure({0}));
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 0x632be59bd9b4e019ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// --- workspace construction --------------------------------------------------

std::shared_ptr<const FinSpace> Workspace::space(const std::string& name) const {
  auto it = ctx.sites.find(name);
  if (it == ctx.sites.end())
    throw std::invalid_argument("unknown space: " + name);
  return it->second;
}

const ContinuousMap& Workspace::map(const std::string& name) const {
  auto it = ctx.maps.find(name);
  if (it == ctx.maps.end()) throw std::invalid_argument("unknown map: " + name);
  return it->second;
}

const LocallyClosedImmersion& Workspace::imm(const std::string& name) const {
  auto it = ctx.immersions.find(name);
  if (it == ctx.immersions.end())
    throw std::invalid_argument("unknown immersion: " + name);
  return it->second;
}

const SheafComplex& Workspace::object(const std::string& name) const {
  auto it = ctx.objects.find(name);
  if (it == ctx.objects.end())
    throw std::invalid_argument("unknown object: " + name);
  return it->second;
}

SiteContext Workspace::site(const std::string& name) const {
  return SiteContext{space(name), cfg.p};
}

Workspace default_workspace(const WorkspaceConfig& cfg) {
  Workspace ws;
  ws.cfg = cfg;
  ws.ctx.p = cfg.p;

  auto& sites = ws.ctx.sites;
  sites["pt"] = std::make_shared<const FinSpace>(
      1, std::vector<std::pair<int, int>>{});
  sites["sierpinski"] = std::make_shared<const FinSpace>(
      2, std::vector<std::pair<int, int>>{{0, 1}});
  sites["pseudo-circle"] = std::make_shared<const FinSpace>(
      4, std::vector<std::pair<int, int>>{{0, 2}, {0, 3}, {1, 2}, {1, 3}});
  sites["interval"] = std::make_shared<const FinSpace>(
      3, std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {0, 2}});
  sites["disc2"] = std::make_shared<const FinSpace>(
      2, std::vector<std::pair<int, int>>{});
  sites["empty"] = std::make_shared<const FinSpace>(
      0, std::vector<std::pair<int, int>>{});
  auto pt = sites["pt"], sp = sites["sierpinski"], pc = sites["pseudo-circle"],
       iv = sites["interval"];

  auto& imms = ws.ctx.immersions;
  imms.emplace("c", *factor_locally_closed(sp, {0}));
  imms.emplace("o", *factor_locally_closed(sp, {1}));
  imms.emplace("x", *factor_locally_closed(pc, {0}));
  imms.emplace("u", *factor_locally_closed(pc, {2, 3}));
  imms.emplace("jp", *factor_locally_closed(pc, {0, 1}));
  imms.emplace("j1", *factor_locally_closed(iv, {1, 2}));
  imms.emplace("j2", *factor_locally_closed(imms.at("j1").sub_space, {1}));
  imms.emplace("j12", *factor_locally_closed(iv, {2}));

  auto& maps = ws.ctx.maps;
  maps.emplace("sigma", ContinuousMap::to_point(sp, pt));
  maps.emplace("pi", ContinuousMap{pc, sp, {0, 0, 1, 1}});
  maps.emplace("rho",
               ContinuousMap::compose(maps.at("sigma"), maps.at("pi")));
  maps.emplace("tau", ContinuousMap::to_point(iv, pt));
  maps.emplace("betap", ContinuousMap{imms.at("jp").sub_space,
                                      imms.at("c").sub_space, {0, 0}});

  Complex unit = Complex::point(0, 1, cfg.p);
  auto& objs = ws.ctx.objects;
  objs.emplace("constK", make_constant(SiteContext{pc, cfg.p}, unit));
  objs.emplace("constKs", make_constant(SiteContext{sp, cfg.p}, unit));
  objs.emplace("constKi", make_constant(SiteContext{iv, cfg.p}, unit));
  objs.emplace("constKpt", make_constant(SiteContext{pt, cfg.p}, unit));
  objs.emplace("constKe",
               make_constant(SiteContext{sites["empty"], cfg.p}, unit));
  objs.emplace("cellO", make_cell(SiteContext{sp, cfg.p}, 1, unit));

  ws.ctx.two_cells.emplace("idK",
                           SheafGradedMap::identity(objs.at("constKs")));
  return ws;
}

void load_workspace_file(Workspace& ws, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open workspace file: " + path);
  Json j = Json::parse(in);

  for (auto& [name, spec] : j.value("spaces", Json::object()).items()) {
    std::vector<std::pair<int, int>> pairs;
    for (auto& pr : spec.value("leq", Json::array()))
      pairs.emplace_back(pr.at(0).get<int>(), pr.at(1).get<int>());
    ws.ctx.sites[name] = std::make_shared<const FinSpace>(
        spec.at("size").get<std::size_t>(), pairs);
  }
  for (auto& [name, spec] : j.value("maps", Json::object()).items()) {
    ContinuousMap f{ws.space(spec.at("src").get<std::string>()),
                    ws.space(spec.at("tgt").get<std::string>()),
                    spec.at("assign").get<std::vector<int>>()};
    f.validate();
    ws.ctx.maps.insert_or_assign(name, std::move(f));
  }
  for (auto& [name, spec] : j.value("immersions", Json::object()).items()) {
    auto amb = ws.space(spec.at("ambient").get<std::string>());
    auto imm =
        factor_locally_closed(amb, spec.at("subset").get<std::vector<int>>());
    if (!imm)
      throw std::runtime_error("immersion " + name + ": subset not locally closed");
    ws.ctx.immersions.insert_or_assign(name, *imm);
  }
  for (auto& [name, spec] : j.value("objects", Json::object()).items()) {
    SiteContext site{ws.space(spec.at("site").get<std::string>()), ws.cfg.p};
    std::string kind = spec.value("kind", std::string("constant"));
    Complex v = Complex::point(spec.value("degree", 0), spec.value("dim", 1),
                               ws.cfg.p);
    SheafComplex f;
    if (kind == "constant") {
      f = make_constant(site, v);
    } else if (kind == "skyscraper") {
      f = make_skyscraper(site, spec.at("point").get<int>(), v);
    } else if (kind == "cell") {
      f = make_cell(site, spec.at("point").get<int>(), v);
    } else if (kind == "random") {
      f = make_random(site, spec.value("seed", 0ull), RandomBounds{});
    } else {
      throw std::runtime_error("object " + name + ": unknown kind " + kind);
    }
    ws.ctx.objects.insert_or_assign(name, std::move(f));
  }
}

// --- row instances -------------------------------------------------------------

RowBindings row_instance(const Workspace& ws, const std::string& row,
                         std::uint64_t k) {
  const auto& ids = row_ids();
  if (std::find(ids.begin(), ids.end(), row) == ids.end())
    throw std::invalid_argument("unknown row: " + row);
  std::mt19937_64 rng(mix_seed(mix_seed(ws.cfg.seed, fnv1a(row)), k));
  const std::uint32_t p = ws.cfg.p;
  const bool vary = (k % 2) == 1;  // odd instances run on random posets

  auto sp = ws.space("sierpinski");
  SiteContext csp{sp, p}, cpt{ws.space("pt"), p},
      cpc{ws.space("pseudo-circle"), p};
  const ContinuousMap& pi = ws.map("pi");
  const ContinuousMap& sigma = ws.map("sigma");
  const LocallyClosedImmersion& jc = ws.imm("c");
  const LocallyClosedImmersion& jo = ws.imm("o");

  auto rnd = [&](const SiteContext& c, const RandomBounds& b) {
    return fib_i(nonzero_random(c, rng(), b));
  };
  auto pick_site = [&](const SiteContext& builtin) {
    return vary ? SiteContext{random_space(rng, 5), p} : builtin;
  };
  const RandomBounds& vb = vary ? kTiny0 : kTiny1;  // random posets: width 0

  RowBindings b;
  if (row == "left" || row == "right" || row == "id_*" || row == "id^*" ||
      row == "id_!" || row == "id^!" || row == "ulalpha*-inv") {
    SiteContext c = pick_site(csp);
    if (row == "ulalpha*-inv")
      b.alpha = vary ? random_monotone(rng, random_space(rng, 4), c.space)
                     : pi;
    b.inputs = {rnd(c, vb)};
  } else if (row == "ass-and-symm") {
    // triple tensors of resolutions grow multiplicatively; keep stalks width 0
    SiteContext c = pick_site(csp);
    b.inputs = {rnd(c, kTiny0), rnd(c, kTiny0), rnd(c, kTiny0)};
  } else if (row == "ulotimes-swap" || row == "46") {
    SiteContext c = pick_site(csp);
    b.inputs = {rnd(c, vb), rnd(c, vb)};
  } else if (row == "48") {
    b.inputs = {rnd(csp, kTiny0), rnd(csp, kTiny0), rnd(csp, kTiny0)};
  } else if (row == "aa-id" || row == "id-aa" || row == "ul-alpha*-otimes") {
    ContinuousMap alpha = pi;
    if (vary) {
      auto y = random_space(rng, 5);
      alpha = random_monotone(rng, random_space(rng, 5), y);
    }
    SiteContext src{alpha.src, p}, tgt{alpha.tgt, p};
    b.alpha = alpha;
    if (row == "aa-id")
      b.inputs = {rnd(src, vary ? kTiny0 : kTiny1)};
    else if (row == "id-aa")
      b.inputs = {rnd(tgt, vary ? kTiny0 : kTiny1)};
    else  // tensor of two pullback resolutions; keep stalks width 0
      b.inputs = {rnd(tgt, kTiny0), rnd(tgt, kTiny0)};
  } else if (row == "pull-push-sheafHom") {
    b.alpha = sigma;
    b.inputs = {rnd(cpt, kTiny1), rnd(csp, kTiny0)};
  } else if (row == "alphabeta_*" || row == "alphabeta^*") {
    ContinuousMap beta = pi, alpha = sigma;
    if (vary) {
      auto x = random_space(rng, 5);
      auto y = random_space(rng, 4);
      auto z = random_space(rng, 4);
      beta = random_monotone(rng, x, y);
      alpha = random_monotone(rng, y, z);
    }
    SiteContext src{beta.src, p}, tgt{alpha.tgt, p};
    b.alpha = alpha;
    b.beta = beta;
    b.inputs = {row == "alphabeta_*" ? rnd(src, vary ? kTiny0 : kTiny1)
                                     : rnd(tgt, vary ? kTiny0 : kTiny1)};
  } else if (row == "alpha_!-to-alpha_*-not-proper") {
    b.j = jo;
    Complex v = Complex::point(0, 1 + static_cast<std::size_t>(k % 2), p);
    b.inputs = {fib_i(make_constant(SiteContext{jo.sub_space, p}, v))};
  } else if (row == "alpha_!-to-alpha_*-proper") {
    LocallyClosedImmersion j =
        vary ? random_closed_immersion(rng, random_space(rng, 5)) : jc;
    b.j = j;
    b.inputs = {rnd(SiteContext{j.sub_space, p}, vary ? kTiny0 : kTiny1)};
  } else if (row == "a_!a^!-id") {
    LocallyClosedImmersion j =
        vary ? random_immersion(rng, random_space(rng, 5)) : jc;
    b.j = j;
    b.inputs = {rnd(SiteContext{j.ambient, p}, vary ? kTiny0 : kTiny1)};
  } else if (row == "id-a^!a_!") {
    LocallyClosedImmersion j =
        vary ? random_immersion(rng, random_space(rng, 5)) : jc;
    b.j = j;
    b.inputs = {rnd(SiteContext{j.sub_space, p}, vary ? kTiny0 : kTiny1)};
  } else if (row == "projection-fml") {
    LocallyClosedImmersion j =
        vary ? random_immersion(rng, random_space(rng, 4)) : jo;
    b.j = j;
    b.inputs = {rnd(SiteContext{j.sub_space, p}, vary ? kTiny0 : kTiny1),
                rnd(SiteContext{j.ambient, p}, vary ? kTiny0 : kTiny1)};
  } else if (row == "!-adjunction-sheafHom") {
    b.j = jc;
    b.inputs = {rnd(SiteContext{jc.sub_space, p}, kTiny0), rnd(csp, kTiny0)};
  } else if (row == "upper-!-sheafHom") {
    b.j = jc;
    b.inputs = {rnd(csp, kTiny0), rnd(csp, kTiny0)};
  } else if (row == "alphabeta_!" || row == "alphabeta^!") {
    b.j = ws.imm("j1");
    b.j2 = ws.imm("j2");
    b.j12 = ws.imm("j12");
    SiteContext c = row == "alphabeta_!"
                        ? SiteContext{b.j2->sub_space, p}
                        : SiteContext{ws.space("interval"), p};
    b.inputs = {rnd(c, kTiny1)};
  } else if (row == "proper-base-change") {
    b.j = jc;
    b.j2 = ws.imm("jp");
    b.beta = pi;
    b.alpha = ws.map("betap");
    b.inputs = {rnd(SiteContext{jc.sub_space, p}, kTiny1)};
  } else {
    throw std::logic_error("row_instance: unhandled row " + row);
  }
  return b;
}

RowReport check_row_instances(const Workspace& ws, const std::string& row) {
  RowReport rep;
  rep.row = row;
  rep.instances = ws.cfg.instances;
  bool ok = true;
  const bool expect_iso = row_is_two_iso(row);
  const bool expect_fail = row == "alpha_!-to-alpha_*-not-proper";
  for (std::uint64_t k = 0; k < ws.cfg.instances; ++k) {
    try {
      RowBindings b = row_instance(ws, row, k);
      ZigZag z = generator_zigzag(row, b);
      std::vector<bool> legs;
      for (const auto& leg : z.legs) legs.push_back(leg.qiso);
      rep.legs.push_back(legs);
      for (const auto& v : z.vertices)
        if (!is_fibrant(v.cx)) ok = false;
      for (const auto& leg : z.legs)
        if (!leg.forward && !leg.qiso) ok = false;
      SheafChainMap red = reduce_roof(z);
      if (expect_iso && !(check_two_iso(z) && sheaf_is_quasi_iso(red)))
        ok = false;
      if (expect_fail && check_two_iso(z)) ok = false;
    } catch (const std::exception&) {
      rep.legs.emplace_back();
      ok = false;
    }
  }
  rep.verdict = ok;
  return rep;
}

RowBindings diagram_instance(const Workspace& ws, const std::string& name,
                             std::uint64_t k) {
  const auto& names = diagram_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw std::invalid_argument("unknown diagram: " + name);
  std::mt19937_64 rng(mix_seed(mix_seed(ws.cfg.seed, fnv1a(name)), k));
  const std::uint32_t p = ws.cfg.p;
  SiteContext csp{ws.space("sierpinski"), p}, cpt{ws.space("pt"), p},
      cdisc{ws.space("disc2"), p};
  auto rnd = [&](const SiteContext& c, const RandomBounds& b) {
    return fib_i(nonzero_random(c, rng(), b));
  };

  RowBindings b;
  if (name == "assoc-pentagon") {
    b.inputs = {rnd(cdisc, kTiny1), rnd(cdisc, kTiny1), rnd(cdisc, kTiny1),
                rnd(cdisc, kTiny1)};
  } else if (name == "unit-triangle" || name == "symm-involution") {
    b.inputs = {rnd(csp, kTiny0), rnd(csp, kTiny0)};
  } else if (name == "alpha*-triangle-push") {
    b.alpha = ws.map("sigma");
    b.inputs = {rnd(csp, kTiny0)};
  } else if (name == "alpha*-triangle-pull") {
    b.alpha = ws.map("sigma");
    b.inputs = {rnd(cpt, kTiny1)};
  } else if (name == "conjugation-square") {
    b.alpha = ws.map("sigma");
    b.beta = ws.map("pi");
    b.inputs = {rnd(cpt, kTiny1)};
  } else if (name == "alpha!-triangle-shriek") {
    b.j = ws.imm("c");
    b.inputs = {rnd(SiteContext{b.j->sub_space, p}, kTiny1)};
  } else if (name == "alpha!-triangle-ushriek") {
    b.j = ws.imm("c");
    b.inputs = {rnd(csp, kTiny1)};
  } else {
    throw std::logic_error("diagram_instance: unhandled diagram " + name);
  }
  return b;
}

DiagramReport check_diagram_instances(const Workspace& ws,
                                      const std::string& name) {
  DiagramReport rep;
  rep.name = name;
  rep.instances = ws.cfg.instances;
  bool ok = true;
  for (std::uint64_t k = 0; k < ws.cfg.instances; ++k) {
    bool one = false;
    try {
      RowBindings b = diagram_instance(ws, name, k);
      DiagramResult r = check_diagram(name, b);
      one = r.ok;
      if (one && r.witness) r.witness->validate();
    } catch (const std::exception&) {
      one = false;
    }
    rep.oks.push_back(one);
    ok = ok && one;
  }
  rep.verdict = ok;
  return rep;
}

// --- omega -----------------------------------------------------------------

bool omega_natural(const FunctorExpr& gen,
                   const std::vector<SheafComplex>& inputs, std::size_t vary,
                   const SheafComplex& ep, std::uint64_t seed) {
  using K = FunctorExpr::Kind;
  if (gen.kind == K::Object || gen.kind == K::Slot) return true;

  OmegaResult rE = omega_compare(gen, inputs);
  std::vector<SheafComplex> shifted = inputs;
  shifted.at(vary) = ep;
  OmegaResult rEp = omega_compare(gen, shifted);
  if (!rE.ok || !rEp.ok) return false;

  const SheafComplex& e = inputs.at(vary);
  SheafChainMap f = random_sheaf_map(e, ep, seed);
  Fib fe = fib_i(e), fep = fib_i(ep);
  SheafGradedMap fi = i_on_graded_map(*fe.res, *fep.res, f);

  SheafChainMap ul, der;
  switch (gen.kind) {
    case K::Tensor: {
      const SheafComplex& g = inputs.at(1 - vary);
      SheafComplex ig = fib_i(g).cx;
      auto idg = SheafGradedMap::identity(g);
      auto idig = SheafGradedMap::identity(ig);
      SheafGradedMap rawd = vary == 0 ? sheaf_tensor_map(f, idg)
                                      : sheaf_tensor_map(idg, f);
      SheafGradedMap rawu = vary == 0 ? sheaf_tensor_map(fi, idig)
                                      : sheaf_tensor_map(idig, fi);
      der = i_map(fib_i(rawd.src()), fib_i(rawd.tgt()), rawd);
      ul = i_map(fib_i(rawu.src()), fib_i(rawu.tgt()), rawu);
      break;
    }
    case K::SHom:
    case K::HomGlob: {
      if (vary != 1)
        throw std::invalid_argument("omega_natural: Hom varies slot 1 only");
      const SheafComplex& a = inputs.at(0);
      SheafComplex ia = fib_i(a).cx;
      SheafHomResult d1 = sheaf_hom(a, fe.cx), d2 = sheaf_hom(a, fep.cx);
      SheafHomResult u1 = sheaf_hom(ia, fe.cx), u2 = sheaf_hom(ia, fep.cx);
      SheafGradedMap rawd = sheaf_hom_map(a, fe.cx, d1, a, fep.cx, d2,
                                          SheafGradedMap::identity(a), fi);
      SheafGradedMap rawu = sheaf_hom_map(ia, fe.cx, u1, ia, fep.cx, u2,
                                          SheafGradedMap::identity(ia), fi);
      if (gen.kind == K::HomGlob) {
        der = gamma_map(rawd);
        ul = gamma_map(rawu);
      } else {
        der = i_map(fib_i(d1.sheaf), fib_i(d2.sheaf), rawd);
        ul = i_map(fib_i(u1.sheaf), fib_i(u2.sheaf), rawu);
      }
      break;
    }
    case K::Gamma: {
      SheafChainMap raw = gamma_map(fi);
      der = ul = i_map(fib_i(raw.src()), fib_i(raw.tgt()), raw);
      break;
    }
    case K::Push: {
      SheafGradedMap raw = pushforward_map(*gen.map, fi);
      der = ul = i_map(fib_i(raw.src()), fib_i(raw.tgt()), raw);
      break;
    }
    case K::Pull:
    case K::PullInv: {
      SheafGradedMap rawd = pullback_map(*gen.map, f);
      SheafGradedMap rawu = pullback_map(*gen.map, fi);
      der = i_map(fib_i(rawd.src()), fib_i(rawd.tgt()), rawd);
      ul = i_map(fib_i(rawu.src()), fib_i(rawu.tgt()), rawu);
      break;
    }
    case K::Shriek: {
      SheafGradedMap rawd = lower_shriek_map(*gen.imm, f);
      SheafGradedMap rawu = lower_shriek_map(*gen.imm, fi);
      der = i_map(fib_i(rawd.src()), fib_i(rawd.tgt()), rawd);
      ul = i_map(fib_i(rawu.src()), fib_i(rawu.tgt()), rawu);
      break;
    }
    case K::UShriek: {
      SheafGradedMap raw = upper_shriek_map(*gen.imm, fi);
      ul = raw;
      der = i_map(fib_i(raw.src()), fib_i(raw.tgt()), raw);
      break;
    }
    default:
      return false;
  }

  SheafChainMap lhs, rhs;
  if (rE.from_derived) {
    lhs = SheafGradedMap::compose(ul, rE.comparison);
    rhs = SheafGradedMap::compose(rEp.comparison, der);
  } else {
    lhs = SheafGradedMap::compose(der, rE.comparison);
    rhs = SheafGradedMap::compose(rEp.comparison, ul);
  }
  return lhs == rhs || sheaf_is_homotopic(lhs, rhs).has_value();
}

// --- verification suites -----------------------------------------------------

namespace {

CheckResult vacuous(const std::string& id) {
  return CheckResult{id, true, "warning: vacuous pass, 0 instances"};
}

Complex random_complex_impl(std::mt19937_64& rng, std::uint32_t p, int lo,
                            int hi, int maxdim) {
  Complex s(p), t(p);
  for (int n = lo; n <= hi; ++n) {
    s.set_dim(n, rng() % (maxdim + 1));
    t.set_dim(n, rng() % (maxdim + 1));
  }
  Complex m = direct_sum(s, icone(t)).total;
  Complex out(p);
  for (const auto& [n, d] : m.dims()) out.set_dim(n, d);
  std::map<int, Matrix> u;
  for (const auto& [n, d] : m.dims()) {
    Matrix v(d, d, p);
    do {
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          v.at(i, j) = static_cast<std::uint32_t>(rng() % p);
    } while (!inverse(v).has_value());
    u[n] = v;
  }
  for (const auto& [n, d] : m.dims()) {
    (void)d;
    if (m.dim(n + 1) == 0) continue;
    out.set_diff(n, u.at(n + 1) * m.diff(n) * inverse(u.at(n)).value());
  }
  out.validate();
  return out;
}

}  // namespace

Complex random_complex(std::uint64_t seed, std::uint32_t p, int lo, int hi,
                       int maxdim) {
  std::mt19937_64 rng(seed);
  return random_complex_impl(rng, p, lo, hi, maxdim);
}

ChainMap random_chain_map(std::uint64_t seed, const Complex& a,
                          const Complex& b) {
  std::mt19937_64 rng(seed);
  HomComplex h(a, b);
  Matrix k = kernel(h.diff_matrix(0));
  Matrix coeff(k.cols(), 1, a.modulus());
  for (std::size_t i = 0; i < k.cols(); ++i)
    coeff.at(i, 0) = static_cast<std::uint32_t>(rng() % a.modulus());
  return h.from_vector(0, k * coeff);
}

std::vector<CheckResult> verify_structure(const Workspace& ws) {
  std::vector<CheckResult> out;
  const std::uint32_t p = ws.cfg.p;
  if (ws.cfg.instances == 0)
    return {vacuous("structure/mono"), vacuous("structure/semisimple")};

  {
    CheckResult r{"structure/semisimple", true, ""};
    std::mt19937_64 rng(mix_seed(ws.cfg.seed, fnv1a("semisimple")));
    for (std::uint64_t k = 0; k < ws.cfg.instances && r.ok; ++k) {
      Complex a = random_complex_impl(rng, p, -2, 2, 3);
      auto dec = decompose_semisimple(a);
      if (!(GradedMap::compose(dec.iso, dec.inverse) ==
            GradedMap::identity(dec.model)) ||
          !(GradedMap::compose(dec.inverse, dec.iso) ==
            GradedMap::identity(a))) {
        r.ok = false;
        r.detail = "instance " + std::to_string(k) + ": iso not exact";
      }
      auto coh = cohomology(a);
      for (const auto& [n, d] : coh.dims)
        if (dec.S.dim(n) != d) {
          r.ok = false;
          r.detail = "instance " + std::to_string(k) + ": H mismatch";
        }
    }
    out.push_back(std::move(r));
  }
  {
    CheckResult r{"structure/mono", true, ""};
    std::mt19937_64 rng(mix_seed(ws.cfg.seed, fnv1a("mono")));
    for (std::uint64_t k = 0; k < ws.cfg.instances && r.ok; ++k) {
      Complex a = random_complex_impl(rng, p, -1, 2, 3);
      ChainMap m = (k % 2 == 0)
                       ? direct_sum(a, icone(random_complex_impl(rng, p, 0, 1, 2)))
                             .incl_left
                       : icone_in(a);
      auto cls = classify_mono(m);
      ChainMap lhs = GradedMap::compose(m, cls.src_iso);
      ChainMap rhs = GradedMap::compose(cls.tgt_iso, cls.model_mono);
      if (!(lhs == rhs)) {
        r.ok = false;
        r.detail = "instance " + std::to_string(k) + ": reassembly failed";
      }
    }
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  return out;
}

std::vector<CheckResult> verify_rows(const Workspace& ws) {
  std::vector<CheckResult> out;
  if (ws.cfg.instances == 0) {
    for (const auto& row : row_ids()) out.push_back(vacuous("rows/" + row));
    std::sort(out.begin(), out.end(), [](const CheckResult& a,
                                         const CheckResult& b) { return a.id < b.id; });
    return out;
  }
  const auto& ids = row_ids();
  const std::size_t par = std::clamp<std::size_t>(
      std::thread::hardware_concurrency(), 2, 6);
  for (std::size_t base = 0; base < ids.size(); base += par) {
    std::vector<std::future<RowReport>> jobs;
    for (std::size_t i = base; i < std::min(base + par, ids.size()); ++i)
      jobs.push_back(std::async(std::launch::async, [&ws, row = ids[i]] {
        return check_row_instances(ws, row);
      }));
    for (auto& j : jobs) {
      RowReport rep = j.get();
      CheckResult r{"rows/" + rep.row, rep.verdict, ""};
      if (!rep.verdict) r.detail = "see check-row " + rep.row;
      out.push_back(std::move(r));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  return out;
}

std::vector<CheckResult> verify_diagrams(const Workspace& ws) {
  std::vector<CheckResult> out;
  if (ws.cfg.instances == 0) {
    for (const auto& name : diagram_names())
      out.push_back(vacuous("diagrams/" + name));
  } else {
    const auto& names = diagram_names();
    const std::size_t par = std::clamp<std::size_t>(
        std::thread::hardware_concurrency(), 2, 6);
    for (std::size_t base = 0; base < names.size(); base += par) {
      std::vector<std::future<DiagramReport>> jobs;
      for (std::size_t i = base; i < std::min(base + par, names.size()); ++i)
        jobs.push_back(std::async(std::launch::async, [&ws, name = names[i]] {
          return check_diagram_instances(ws, name);
        }));
      for (auto& j : jobs) {
        DiagramReport rep = j.get();
        CheckResult r{"diagrams/" + rep.name, rep.verdict, ""};
        if (!rep.verdict) r.detail = "see check-diagram " + rep.name;
        out.push_back(std::move(r));
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  return out;
}

std::vector<CheckResult> verify_omega(const Workspace& ws) {
  const std::uint32_t p = ws.cfg.p;
  SiteContext csp{ws.space("sierpinski"), p}, cpc{ws.space("pseudo-circle"), p};
  SiteContext cpt{ws.space("pt"), p};
  const LocallyClosedImmersion& jc = ws.imm("c");
  const LocallyClosedImmersion& jo = ws.imm("o");
  SiteContext cso{jo.sub_space, p};

  struct Gen {
    std::string name;
    FunctorExpr expr;
    std::vector<std::pair<SiteContext, RandomBounds>> inputs;
    std::size_t vary;
  };
  std::vector<Gen> gens;
  gens.push_back({"push", fe_push(ws.map("sigma"), fe_slot()),
                  {{csp, kTiny1}}, 0});
  gens.push_back({"pull", fe_pull(ws.map("pi"), fe_slot()),
                  {{csp, kTiny1}}, 0});
  gens.push_back({"pullinv", fe_pullinv(ws.map("pi"), fe_slot()),
                  {{csp, kTiny1}}, 0});
  gens.push_back({"tensor", fe_tensor(fe_slot(0), fe_slot(1)),
                  {{csp, kTiny1}, {csp, kTiny1}}, 0});
  gens.push_back({"shom", fe_shom(fe_slot(0), fe_slot(1)),
                  {{csp, kTiny0}, {csp, kTiny0}}, 1});
  gens.push_back({"homglob", fe_hom_glob(fe_slot(0), fe_slot(1)),
                  {{csp, kTiny0}, {csp, kTiny0}}, 1});
  gens.push_back({"gamma", fe_gamma(fe_slot()), {{cpc, kTiny1}}, 0});
  gens.push_back({"shriek", fe_shriek(jo, fe_slot()), {{cso, kTiny1}}, 0});
  gens.push_back({"ushriek", fe_ushriek(jc, fe_slot()), {{csp, kTiny1}}, 0});
  gens.push_back(
      {"object",
       fe_object(make_constant(csp, Complex::point(0, 1, p))),
       {},
       0});

  std::vector<CheckResult> out;
  if (ws.cfg.instances == 0) {
    for (const auto& g : gens) out.push_back(vacuous("omega/" + g.name));
  } else {
    std::vector<std::future<CheckResult>> jobs;
    for (const auto& g : gens)
      jobs.push_back(std::async(std::launch::async, [&ws, g] {
        CheckResult r{"omega/" + g.name, true, ""};
        for (std::uint64_t k = 0; k < ws.cfg.instances && r.ok; ++k) {
          std::mt19937_64 rng(
              mix_seed(mix_seed(ws.cfg.seed, fnv1a(g.name)), k));
          std::vector<SheafComplex> in;
          for (const auto& [c, bnd] : g.inputs)
            in.push_back(nonzero_random(c, rng(), bnd));
          if (!omega_compare(g.expr, in).ok) {
            r.ok = false;
            r.detail = "instance " + std::to_string(k) + ": not a quasi-iso";
          }
        }
        std::size_t nat = std::min<std::size_t>(ws.cfg.instances, 10);
        for (std::uint64_t k = 0; k < nat && r.ok && !g.inputs.empty(); ++k) {
          std::mt19937_64 rng(
              mix_seed(mix_seed(ws.cfg.seed, fnv1a(g.name + "/nat")), k));
          std::vector<SheafComplex> in;
          for (const auto& [c, bnd] : g.inputs)
            in.push_back(nonzero_random(c, rng(), bnd));
          SheafComplex ep =
              nonzero_random(g.inputs[g.vary].first, rng(), g.inputs[g.vary].second);
          if (!omega_natural(g.expr, in, g.vary, ep, rng())) {
            r.ok = false;
            r.detail =
                "naturality instance " + std::to_string(k) + " failed";
          }
        }
        return r;
      }));
    for (auto& j : jobs) out.push_back(j.get());
  }
  std::sort(out.begin(), out.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  return out;
}

namespace {

// Random 2-morphism terms over atoms whose inputs we can synthesize.
struct FmlAtom {
  std::string text;
  std::vector<std::string> input_sites;  // workspace immersion/space names
  bool on_sp = true;  // zig-zag vertices on sierpinski (whiskerable by sigma_*)
};

const std::vector<FmlAtom>& fml_atom_pool() {
  static const std::vector<FmlAtom> pool = {
      {"row:left", {"sierpinski"}},
      {"row:right", {"sierpinski"}},
      {"row:ulotimes-swap", {"sierpinski", "sierpinski"}},
      {"row:46", {"sierpinski", "sierpinski"}, false},  // lives on the point
      {"row:id_* @ pi", {"sierpinski"}},
      {"row:id^* @ pi", {"sierpinski"}},
      {"row:id_! @ c", {"sierpinski"}},
      {"row:id^! @ c", {"sierpinski"}},
      {"row:alpha_!-to-alpha_*-proper @ c", {"sub:c"}},
      {"row:alpha_!-to-alpha_*-not-proper @ o", {"sub:o"}},
      {"ud:idK", {}},
      {"cmp(\xE2\x8A\x97((-0), (-1)))", {"sierpinski", "sierpinski"}},
  };
  return pool;
}

}  // namespace

std::vector<CheckResult> verify_fml(const Workspace& ws) {
  std::vector<CheckResult> out;

  {
    CheckResult r{"fml/golden-roundtrip", true, ""};
    const std::vector<std::string> corpus = {
        "pi_* \xE2\x88\x98 Hom(pi^*(-), -)",
        "sigma_* . Gamma(-) . tensor(obj:constKs, -)",
        "\xE2\x8A\x97(c_!(c^!((-0))), pi^-1((-1)))",
        "HomG(obj:constKs, \xCE\x93(-) )",
        "row:id-aa @ pi",
        "inv(row:proj-fml @ c)",
        "2 * row:left \xC2\xB7 inv(row:right) + ud:idK",
        "whisker(sigma_*((-)), cmp(pi^*(-)))",
        "row:proper-base-change @ c,jp,pi,betap",
    };
    for (std::size_t i = 0; i < corpus.size() && r.ok; ++i) {
      try {
        Formula f1 = parse_formula(corpus[i], ws.ctx);
        std::string printed =
            std::visit([](const auto& t) { return print_formula(t); }, f1);
        Formula f2 = parse_formula(printed, ws.ctx);
        if (!(f1 == f2)) {
          r.ok = false;
          r.detail = "corpus entry " + std::to_string(i) + ": not stable";
        }
      } catch (const std::exception& e) {
        r.ok = false;
        r.detail = "corpus entry " + std::to_string(i) + ": " + e.what();
      }
    }
    out.push_back(std::move(r));
  }

  {
    CheckResult r{"fml/invertible-implies-two-iso", true, ""};
    if (ws.cfg.instances == 0) {
      r = vacuous(r.id);
    } else {
      const std::size_t terms = std::max<std::size_t>(ws.cfg.instances, 50);
      std::size_t invertible = 0;
      for (std::size_t k = 0; k < terms && r.ok; ++k) {
        std::mt19937_64 rng(mix_seed(mix_seed(ws.cfg.seed, fnv1a("fmlrand")), k));
        const FmlAtom& atom = fml_atom_pool()[rng() % fml_atom_pool().size()];
        std::string text = atom.text;
        std::size_t wraps = rng() % 3;
        bool whiskered = false;  // sigma_* moves the zig-zag to the point
        for (std::size_t w = 0; w < wraps; ++w) {
          std::string cand;
          std::size_t pickw = rng() % 5;
          if (pickw == 4 && (whiskered || !atom.on_sp)) pickw = 0;
          switch (pickw) {
            case 0: cand = "inv(" + text + ")"; break;
            case 1:
              cand = std::to_string(1 + rng() % 7) + " * (" + text + ")";
              break;
            case 2: cand = "(" + text + ") + (" + text + ")"; break;
            case 3: cand = "(" + text + ") \xC2\xB7 inv(" + text + ")"; break;
            default:
              cand = "whisker(sigma_*((-)), " + text + ")";
              whiskered = true;
              break;
          }
          try {
            (void)parse_formula(cand, ws.ctx);
            text = cand;
          } catch (const FmlError&) {
            // wrapper not applicable to this term; keep the previous text
          }
        }
        try {
          auto t = std::get<TwoMorphTerm>(parse_formula(text, ws.ctx));
          std::vector<SheafComplex> inputs;
          for (const auto& site : atom.input_sites) {
            SiteContext c = site.rfind("sub:", 0) == 0
                                ? SiteContext{ws.imm(site.substr(4)).sub_space,
                                              ws.cfg.p}
                                : ws.site(site);
            inputs.push_back(nonzero_random(c, rng(), kTiny1));
          }
          if (!is_formally_invertible(t, ws.ctx, inputs)) continue;
          ++invertible;
          LinearZigZag lz = interpret_two(t, ws.ctx, inputs);
          for (const auto& [coef, z] : lz.terms) {
            (void)coef;
            if (!check_two_iso(z)) {
              r.ok = false;
              r.detail = "term " + std::to_string(k) + " (" + text +
                         "): invertible but not a 2-iso";
            }
          }
        } catch (const std::exception& e) {
          r.ok = false;
          r.detail = "term " + std::to_string(k) + ": " + e.what();
        }
      }
      if (r.ok)
        r.detail = std::to_string(invertible) + " invertible terms checked";
    }
    out.push_back(std::move(r));
  }

  std::sort(out.begin(), out.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.id < b.id; });
  return out;
}

std::vector<CheckResult> verify_suite(const Workspace& ws,
                                      const std::string& suite) {
  if (suite == "rows") return verify_rows(ws);
  if (suite == "diagrams") return verify_diagrams(ws);
  if (suite == "structure") return verify_structure(ws);
  if (suite == "omega") return verify_omega(ws);
  if (suite == "fml") return verify_fml(ws);
  if (suite == "all") {
    std::vector<CheckResult> out;
    for (const char* s : {"structure", "rows", "diagrams", "omega", "fml"}) {
      auto part = verify_suite(ws, s);
      out.insert(out.end(), part.begin(), part.end());
    }
    std::sort(out.begin(), out.end(), [](const CheckResult& a,
                                         const CheckResult& b) { return a.id < b.id; });
    return out;
  }
  throw std::invalid_argument("unknown suite: " + suite);
}

}  // namespace fsh
