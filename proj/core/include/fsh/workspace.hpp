#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsh/fml.hpp"

namespace fsh {

struct WorkspaceConfig {
  std::uint32_t p = kDefaultPrime;  // must be prime
  std::uint64_t seed = 1;
  std::size_t instances = 25;
};

// A formula context seeded with the built-in spaces, maps and objects, plus
// the verification configuration.
struct Workspace {
  WorkspaceConfig cfg;
  FmlContext ctx;

  std::shared_ptr<const FinSpace> space(const std::string& name) const;
  const ContinuousMap& map(const std::string& name) const;
  const LocallyClosedImmersion& imm(const std::string& name) const;
  const SheafComplex& object(const std::string& name) const;
  SiteContext site(const std::string& name) const;
};

// Built-ins: spaces pt, sierpinski, pseudo-circle, interval (3-chain),
// disc2 (two-point discrete), empty; maps sigma, pi, rho, tau; immersions
// c, o, x, u, j1, j2, j12, jp; objects constK*, cellO; 2-cell idK.
Workspace default_workspace(const WorkspaceConfig& cfg = {});

// Merge spaces/maps/objects from a JSON workspace file.
void load_workspace_file(Workspace& ws, const std::string& path);

// --- verification driver ----------------------------------------------------

struct CheckResult {
  std::string id;
  bool ok = false;
  std::string detail;  // first counterexample or note
};

// Suites: "rows", "diagrams", "structure", "omega", "fml", "all".
std::vector<CheckResult> verify_suite(const Workspace& ws,
                                      const std::string& suite);
std::vector<CheckResult> verify_rows(const Workspace& ws);
std::vector<CheckResult> verify_diagrams(const Workspace& ws);
std::vector<CheckResult> verify_structure(const Workspace& ws);
std::vector<CheckResult> verify_omega(const Workspace& ws);
std::vector<CheckResult> verify_fml(const Workspace& ws);

// Seeded bindings for one instance of a row / diagram (instance index k).
RowBindings row_instance(const Workspace& ws, const std::string& row,
                         std::uint64_t k);
RowBindings diagram_instance(const Workspace& ws, const std::string& name,
                             std::uint64_t k);

// Reports for the check-row / check-diagram entry points.
struct RowReport {
  std::string row;
  std::size_t instances = 0;
  std::vector<std::vector<bool>> legs;  // per instance, qiso per leg
  bool verdict = false;
};
RowReport check_row_instances(const Workspace& ws, const std::string& row);

struct DiagramReport {
  std::string name;
  std::size_t instances = 0;
  std::vector<bool> oks;
  bool verdict = false;
};
DiagramReport check_diagram_instances(const Workspace& ws,
                                      const std::string& name);

// Pseudo-naturality of the omega comparison: vary input slot `vary` of the
// generator along a random chain map f : inputs[vary] -> ep (seeded); true
// when the square against omega commutes up to homotopy.  For Hom generators
// `vary` must name the covariant slot.
bool omega_natural(const FunctorExpr& gen, const std::vector<SheafComplex>& inputs,
                   std::size_t vary, const SheafComplex& ep, std::uint64_t seed);

// Deterministic seed mixing shared by the drivers and tests.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// Seeded random complexes / chain maps (shared by the structure suite and
// the tests): a random complex is a conjugated S (+) icone(T), a random
// chain map a random 0-cocycle of the hom complex.
Complex random_complex(std::uint64_t seed, std::uint32_t p, int lo, int hi,
                       int maxdim);
ChainMap random_chain_map(std::uint64_t seed, const Complex& a,
                          const Complex& b);

}  // namespace fsh
