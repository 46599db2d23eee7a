#pragma once

#include <string>

#include "json.hpp"

#include "fsh/workspace.hpp"

namespace fsh {

// Ordered so that report bytes are deterministic for a given seed.
using Json = nlohmann::ordered_json;

Json json_complex(const Complex& c);
Json json_cohomology(const Complex& c);
Json json_space(const FinSpace& s);
Json json_sheaf(const SheafComplex& f);
Json json_resolution(const ResolutionResult& r);
Json json_row_report(const RowReport& r);
Json json_diagram_report(const DiagramReport& r);
Json json_check_results(const std::vector<CheckResult>& rs);

// dump(2) with a trailing newline.
std::string json_dump(const Json& j);
void write_json_file(const Json& j, const std::string& path);

}  // namespace fsh
