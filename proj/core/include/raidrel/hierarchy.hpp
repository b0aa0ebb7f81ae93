#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "raidrel/builder.hpp"
#include "raidrel/ctmc.hpp"
#include "raidrel/simulate.hpp"
#include "raidrel/topology.hpp"

namespace raidrel::hier {

// 2-state equivalent of a subsystem; 0 for an infinite MTTDIL.
double equivalent_component(double mttdil_sub_hr);

// MTTDIL of n independent copies, valid when the subsystem lifetime is exponential.
double independent_scale(double mttdil_sub_hr, std::size_t n);

struct DiscretizationParams {
  double delta = 1e-4;
  double step = 175;
  // 0: found by doubling until g(max) < delta
  double max = 0;
};

struct DiscretizedMean {
  double lower = 0;
  double upper = 0;
  double max = 0;
  std::size_t steps = 0;
};

void validate(const DiscretizationParams& p);

// Bounds on E[min of n iid copies] from the Riemann sums of g(t) = (1 - F(t))^n.
DiscretizedMean discretized_mean(const std::function<double(double)>& cdf, std::size_t n, DiscretizationParams p = {});
// Same with an uncertain F: each bound uses the side of F(t) +- half_width(t)
// that widens it.
DiscretizedMean discretized_mean(const std::function<double(double)>& cdf,
                                 const std::function<double(double)>& half_width, std::size_t n,
                                 DiscretizationParams p = {});

enum class Method { Numeric, Simulate };
std::string_view to_string(Method m);

struct DecompositionPlan {
  // Each leaf is a set of RAID group ids solved together. Empty: one leaf per group.
  std::vector<std::vector<std::string>> leaves;
  // replace the disk law by the exponential equivalent of its fragment
  bool disk_level = false;
  Method leaf_method = Method::Numeric;
  Method top_method = Method::Numeric;
  // simulate a leaf that exceeds the state budget instead of failing
  bool simulate_fallback = false;
  ctmc::ExploreOptions explore;
  ctmc::SolveOptions solve;
  sim::SimOptions sim;
};

struct LevelRecord {
  int level = 0;  // 0 disk, 1 leaf, 2 system
  std::string subsystem_id;
  Method method = Method::Numeric;
  double value_hr = 0;
  double ci_halfwidth = 0;
  std::size_t states = 0;
};

struct DecompositionResult {
  double mttdil_hr = 0;
  double ci_halfwidth = 0;
  std::vector<LevelRecord> report;
  std::map<std::string, double> substitutions;  // subsystem id -> equivalent rate
};

void validate(const DecompositionPlan& plan, const topo::Topology& t);

// Leaf view: the leaf's disks and every component only they depend on;
// components shared with other leaves are kept but made perfect.
topo::Topology leaf_topology(const topo::Topology& t, const std::vector<std::string>& groups);

DecompositionResult decompose_solve(const topo::Topology& t, const build::SystemModels& m,
                                    const DecompositionPlan& plan = {});
void write_report_csv(std::ostream& os, const DecompositionResult& r);

struct PEstimateOptions {
  double lo = 0;
  double hi = 1;
  std::size_t audit_points = 10;
  double tolerance = 0.005;  // relative, on the MTTDIL
  double p_tolerance = 1e-3;
  std::size_t max_iterations = 100;
};

struct PEstimate {
  double p = 0;
  double mttdil_hr = 0;
  std::size_t evaluations = 0;
};

// Bisection on a model family whose MTTDIL decreases in p.
PEstimate estimate_p(const std::function<double(double)>& mttdil_of_p, double target_hr,
                     const PEstimateOptions& o = {});

}  // namespace raidrel::hier
