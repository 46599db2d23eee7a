#include "fsh/json_io.hpp"

#include <fstream>

#include "fsh/complex_ops.hpp"

namespace fsh {

Json json_complex(const Complex& c) {
  Json dims = Json::object();
  for (const auto& [n, d] : c.dims())
    if (d) dims[std::to_string(n)] = d;
  return Json{{"modulus", c.modulus()}, {"dims", dims}};
}

Json json_cohomology(const Complex& c) {
  Json h = Json::object();
  for (const auto& [n, d] : cohomology(c).dims)
    if (d) h[std::to_string(n)] = d;
  return h;
}

Json json_space(const FinSpace& s) {
  Json rel = Json::array();
  for (std::size_t x = 0; x < s.size(); ++x)
    for (std::size_t y = 0; y < s.size(); ++y)
      if (x != y && s.leq(static_cast<int>(x), static_cast<int>(y)))
        rel.push_back(Json::array({x, y}));
  return Json{{"points", s.size()},
              {"leq", rel},
              {"longest_chain", s.longest_chain()}};
}

Json json_sheaf(const SheafComplex& f) {
  Json stalks = Json::array();
  for (std::size_t x = 0; x < f.points(); ++x)
    stalks.push_back(json_complex(f.stalk(static_cast<int>(x))));
  return Json{{"modulus", f.ctx().p},
              {"space", json_space(*f.ctx().space)},
              {"stalks", stalks}};
}

Json json_resolution(const ResolutionResult& r) {
  Json rows = Json::object();
  for (const auto& [n, row] : r.rows) {
    Json terms = Json::array();
    for (const auto& t : row.gd) {
      std::size_t tot = 0;
      for (std::size_t x = 0; x < t.sheaf.points(); ++x)
        tot += t.sheaf.stalk(static_cast<int>(x)).total_dim();
      terms.push_back(tot);
    }
    rows[std::to_string(n)] =
        Json{{"length", row.length()}, {"term_dims", terms}};
  }
  return Json{{"input", json_sheaf(r.input)},
              {"output", json_sheaf(r.output)},
              {"rows", rows}};
}

Json json_row_report(const RowReport& r) {
  Json instances = Json::array();
  for (const auto& inst : r.legs) {
    Json legs = Json::array();
    for (bool q : inst) legs.push_back(Json{{"qiso", q}});
    instances.push_back(legs);
  }
  return Json{{"row", r.row},
              {"instances", r.instances},
              {"legs", instances},
              {"verdict", r.verdict}};
}

Json json_diagram_report(const DiagramReport& r) {
  Json oks = Json::array();
  for (bool ok : r.oks) oks.push_back(ok);
  return Json{{"diagram", r.name},
              {"instances", r.instances},
              {"commutes", oks},
              {"verdict", r.verdict}};
}

Json json_check_results(const std::vector<CheckResult>& rs) {
  Json checks = Json::array();
  bool all = true;
  for (const auto& r : rs) {
    Json c{{"id", r.id}, {"ok", r.ok}};
    if (!r.detail.empty()) c["detail"] = r.detail;
    checks.push_back(std::move(c));
    all = all && r.ok;
  }
  return Json{{"checks", checks}, {"verdict", all}};
}

std::string json_dump(const Json& j) { return j.dump(2) + "\n"; }

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << json_dump(j);
}

}  // namespace fsh
