#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"

#include "fsh/json_io.hpp"

#include "fsh/resolve.hpp"

using namespace fsh;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

bool is_prime(std::uint32_t n) {
  if (n < 2) return false;
  for (std::uint32_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

struct Options {
  std::uint32_t field = kDefaultPrime;
  std::uint64_t seed = 1;
  std::size_t instances = 25;
  bool emit_resolution = false;
  std::string backend = "enh";
  std::string json_path;
  std::string workspace_path;
};

Workspace make_workspace(const Options& opt) {
  Workspace ws = default_workspace(
      WorkspaceConfig{opt.field, opt.seed, opt.instances});
  if (!opt.workspace_path.empty()) load_workspace_file(ws, opt.workspace_path);
  return ws;
}

void emit(const Options& opt, const Json& j) {
  std::fputs(json_dump(j).c_str(), stdout);
  if (!opt.json_path.empty()) write_json_file(j, opt.json_path);
}

std::string fmt_h(const Json& h) {
  std::string out = "{";
  bool first = true;
  for (const auto& [n, d] : h.items()) {
    if (!first) out += ", ";
    out += n + ":" + d.dump();
    first = false;
  }
  return out + "}";
}

int cmd_compute(const Options& opt, const std::string& formula) {
  Workspace ws = make_workspace(opt);
  Formula f = parse_formula(formula, ws.ctx);

  if (std::holds_alternative<OneMorphTerm>(f)) {
    const auto& t = std::get<OneMorphTerm>(f);
    OneTyping ty = typecheck(t, ws.ctx);
    if (!ty.sources.empty())
      throw FmlError("compute needs a closed formula (no free slots)", 1, 1);
    SheafComplex val = opt.backend == "trcat"
                           ? interpret_one_derived(t, ws.ctx, {})
                           : interpret_one(t, ws.ctx, {}).cx;
    Json rep{{"formula", formula}, {"backend", opt.backend}};
    if (val.points() <= 1) {
      Json h = val.points() == 0 ? Json::object()
                                 : json_cohomology(val.stalk(0));
      rep["H"] = h;
      std::printf("H = %s\n", fmt_h(h).c_str());
    } else {
      Json stalks = Json::array();
      for (std::size_t x = 0; x < val.points(); ++x) {
        Json h = json_cohomology(val.stalk(static_cast<int>(x)));
        stalks.push_back(h);
        std::printf("H(stalk %zu) = %s\n", x, fmt_h(h).c_str());
      }
      rep["stalks"] = stalks;
    }
    if (opt.emit_resolution) {
      ResolutionResult r = i_complex(val);
      rep["resolution"] = json_resolution(r);
      for (const auto& [n, row] : r.rows)
        std::printf("resolution row %d: length %zu\n", n, row.length());
    }
    if (!opt.json_path.empty()) write_json_file(rep, opt.json_path);
    return kExitPass;
  }

  const auto& t = std::get<TwoMorphTerm>(f);
  typecheck(t, ws.ctx);
  LinearZigZag lz = interpret_two(t, ws.ctx, {});
  bool two_iso = true;
  for (const auto& [coef, z] : lz.terms) {
    (void)coef;
    two_iso = two_iso && check_two_iso(z);
  }
  SheafChainMap red = reduce_two(lz);
  bool qiso = sheaf_is_quasi_iso(red);
  Json rep{{"formula", formula},
           {"terms", lz.terms.size()},
           {"two_iso", two_iso},
           {"reduced_qiso", qiso}};
  emit(opt, rep);
  return two_iso ? kExitPass : kExitFail;
}

int cmd_verify(const Options& opt, const std::string& suite) {
  Workspace ws = make_workspace(opt);
  std::vector<CheckResult> res = verify_suite(ws, suite);
  emit(opt, json_check_results(res));
  for (const auto& r : res)
    if (!r.ok) return kExitFail;
  return kExitPass;
}

Json resolution_shape(const SheafComplex& f, bool print) {
  Json shape = Json::object();
  int lo = 0, hi = -1;
  for (std::size_t x = 0; x < f.points(); ++x) {
    const Complex& st = f.stalk(static_cast<int>(x));
    if (st.is_zero_object()) continue;
    lo = hi < lo ? st.lo() : std::min(lo, st.lo());
    hi = std::max(hi, st.hi());
  }
  for (int n = lo; n <= hi; ++n) {
    InjResolution r = inj_resolve_sheaf(degree_piece(f, n));
    Json dims = Json::array();
    for (const auto& term : r.terms) {
      std::size_t tot = 0;
      for (std::size_t x = 0; x < term.points(); ++x)
        tot += term.stalk(static_cast<int>(x)).total_dim();
      dims.push_back(tot);
    }
    shape[std::to_string(n)] =
        Json{{"length", r.terms.size()}, {"term_dims", dims}};
    if (print)
      std::printf("resolution degree %d: length %zu\n", n, r.terms.size());
  }
  return shape;
}

int cmd_describe(const Options& opt, const std::string& name) {
  Workspace ws = make_workspace(opt);
  if (name.rfind("resolution of ", 0) == 0) {
    std::string rest = name.substr(14);
    std::string obj = rest, site;
    if (std::size_t at = rest.find(" on "); at != std::string::npos) {
      obj = rest.substr(0, at);
      site = rest.substr(at + 4);
    }
    std::optional<SheafComplex> f;
    if (ws.ctx.objects.count(obj)) {
      f = ws.object(obj);
    } else if (obj == "constK" && ws.ctx.sites.count(site)) {
      f = make_constant(ws.site(site), Complex::point(0, 1, opt.field));
    }
    if (!f) {
      std::fprintf(stderr, "error: unknown object: %s\n", obj.c_str());
      return kExitUsage;
    }
    if (!site.empty() && ws.ctx.sites.count(site) &&
        f->ctx().space != ws.space(site)) {
      std::fprintf(stderr, "error: %s does not live on %s\n", obj.c_str(),
                   site.c_str());
      return kExitUsage;
    }
    Json shape = resolution_shape(*f, true);
    emit(opt, Json{{"resolution", rest}, {"shape", shape}});
    return kExitPass;
  }
  if (ws.ctx.sites.count(name)) {
    const FinSpace& s = *ws.space(name);
    Json j = json_space(s);
    std::printf("space %s: %zu points, %zu relation(s)\n", name.c_str(),
                s.size(), j["leq"].size());
    emit(opt, Json{{"space", name}, {"data", j}});
    return kExitPass;
  }
  if (ws.ctx.objects.count(name)) {
    const SheafComplex& f = ws.object(name);
    Json j = json_sheaf(f);
    std::printf("object %s on %zu points\n", name.c_str(), f.points());
    Json rep{{"object", name}, {"data", j}};
    if (opt.emit_resolution) rep["resolution"] = resolution_shape(f, true);
    emit(opt, rep);
    return kExitPass;
  }
  if (ws.ctx.maps.count(name)) {
    const ContinuousMap& m = ws.map(name);
    emit(opt, Json{{"map", name},
                   {"src", json_space(*m.src)},
                   {"tgt", json_space(*m.tgt)},
                   {"assign", m.assign}});
    return kExitPass;
  }
  if (ws.ctx.immersions.count(name)) {
    const LocallyClosedImmersion& j = ws.imm(name);
    emit(opt, Json{{"immersion", name},
                   {"subset", j.subset},
                   {"open_hull", j.open_hull},
                   {"closed_part", j.closed_part}});
    return kExitPass;
  }
  std::fprintf(stderr, "error: unknown name: %s\n", name.c_str());
  return kExitUsage;
}

int cmd_check_row(const Options& opt, const std::string& row) {
  const auto& ids = row_ids();
  if (std::find(ids.begin(), ids.end(), row) == ids.end()) {
    std::fprintf(stderr, "error: unknown row: %s\n", row.c_str());
    return kExitUsage;
  }
  Workspace ws = make_workspace(opt);
  RowReport rep = check_row_instances(ws, row);
  emit(opt, json_row_report(rep));
  return rep.verdict ? kExitPass : kExitFail;
}

int cmd_check_diagram(const Options& opt, const std::string& name) {
  const auto& names = diagram_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::fprintf(stderr, "error: unknown diagram: %s\n", name.c_str());
    return kExitUsage;
  }
  Workspace ws = make_workspace(opt);
  DiagramReport rep = check_diagram_instances(ws, name);
  emit(opt, json_diagram_report(rep));
  return rep.verdict ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact six-functor laboratory over finite posets"};
  app.require_subcommand(1);

  Options opt;
  app.add_option("--field", opt.field, "prime field characteristic")
      ->check([](const std::string& v) -> std::string {
        std::uint64_t n = 0;
        try {
          n = std::stoull(v);
        } catch (...) {
          return "not a number";
        }
        if (n >= 65536 || !is_prime(static_cast<std::uint32_t>(n)))
          return "needs a prime < 65536";
        return "";
      });
  app.add_option("--seed", opt.seed, "base seed for random instances");
  app.add_option("--instances", opt.instances, "instances per check");
  app.add_flag("--emit-resolution", opt.emit_resolution,
               "also print the injective resolution shape");
  app.add_option("--backend", opt.backend, "evaluation backend")
      ->check(CLI::IsMember({"enh", "trcat"}));
  app.add_option("--json", opt.json_path, "write the JSON report here");
  app.add_option("--workspace", opt.workspace_path,
                 "merge spaces/maps/objects from this JSON file");

  std::string formula, suite, name, row_id, diagram;
  CLI::App* compute = app.add_subcommand("compute", "evaluate a formula");
  compute->add_option("formula", formula, "formula text")->required();
  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite", suite, "rows|diagrams|structure|omega|fml|all")
      ->required()
      ->check(CLI::IsMember({"rows", "diagrams", "structure", "omega", "fml",
                             "all"}));
  CLI::App* describe = app.add_subcommand("describe", "describe a built-in");
  describe->add_option("name", name, "space/map/immersion/object")->required();
  CLI::App* checkrow = app.add_subcommand("check-row", "check one table row");
  checkrow->add_option("row-id", row_id, "row identifier")->required();
  CLI::App* checkdiag =
      app.add_subcommand("check-diagram", "check one coherence diagram");
  checkdiag->add_option("name", diagram, "diagram name")->required();
  for (CLI::App* s : {compute, verify, describe, checkrow, checkdiag})
    s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (compute->parsed()) return cmd_compute(opt, formula);
    if (verify->parsed()) return cmd_verify(opt, suite);
    if (describe->parsed()) return cmd_describe(opt, name);
    if (checkrow->parsed()) return cmd_check_row(opt, row_id);
    if (checkdiag->parsed()) return cmd_check_diagram(opt, diagram);
  } catch (const FmlError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitUsage;
}
