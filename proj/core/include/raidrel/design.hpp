#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "raidrel/builder.hpp"
#include "raidrel/ctmc.hpp"
#include "raidrel/simulate.hpp"
#include "raidrel/topology.hpp"

namespace raidrel::design {

struct SpanPlan {
  std::vector<int> counts;  // disks per enclosure, in enclosure order
  int n = 0;
  int m = 0;
  int f = 0;
  // the f-at-a-time branch met an enclosure smaller than f and the rest
  // went into residual capacity
  bool fallback = false;
};

// Empty capacities: 24 per enclosure.
SpanPlan greedy_span(int n, int m, int f, std::vector<int> capacities = {});
// counts sum to n, respect capacities, at most m enclosures
bool satisfies_invariants(const SpanPlan& p, const std::vector<int>& capacities);
// "enclosure1:14", empty enclosures omitted
std::string format_plan(const SpanPlan& p);

// m * C(n/m, 2) * lambda * p; m must divide n.
double correlated_span_rate(int n, int m, double lambda, double p);
// Extension for uneven splits: sum over enclosures of C(n_i, 2) * lambda * p.
double correlated_span_rate(const SpanPlan& plan, double lambda, double p);

struct SpanTopologyOptions {
  topo::RaidLevel level = topo::RaidLevel::Raid5;
  double disk_mttf_hr = 33 * 8760.0;
  double disk_mttr_hr = 30;
  // unset: enclosures follow `policy`
  std::optional<double> enclosure_mttf_hr;
  topo::EnclosurePolicy policy;
  double expander_mttf_hr = topo::kNever;
  double controller_mttf_hr = topo::kNever;
};

// One group whose disks are split across enclosures per `counts`; each
// enclosure has its own expander under a common controller.
topo::Topology spanned_group_topology(const std::vector<int>& counts, const SpanTopologyOptions& o = {});

// Partitions of n into at most max_parts positive parts, each descending.
std::vector<std::vector<int>> partitions(int n, int max_parts);

struct Config {
  std::string id;
  topo::Topology topology;
  build::SystemModels models;
  std::string extra_cost_note;
};

struct CompareOptions {
  std::size_t baseline = 0;
  ctmc::ExploreOptions explore;
  ctmc::SolveOptions solve;
  // simulate configs that exceed the state budget
  bool allow_simulation = true;
  sim::SimOptions sim;
};

struct CompareRow {
  std::string id;
  double measure_hr = 0;
  double ci_halfwidth = 0;
  double gain = 1;  // measure / baseline measure
  std::string method;
  std::size_t states = 0;
  std::string extra_cost_note;
};

// MTTDIL of every config, ranked best first.
std::vector<CompareRow> compare_configs(const std::vector<Config>& configs, const CompareOptions& o = {});
void write_comparison_csv(std::ostream& os, const std::vector<CompareRow>& rows);

struct SweepRow {
  std::vector<int> counts;
  double mttdil_hr = 0;
  std::size_t states = 0;
};

std::vector<SweepRow> span_sweep(int n, int max_enclosures, const SpanTopologyOptions& o,
                                 const build::SystemModels& models = {}, const ctmc::SolveOptions& solve = {});
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace raidrel::design
