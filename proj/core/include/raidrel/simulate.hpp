#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "raidrel/builder.hpp"
#include "raidrel/ctmc.hpp"
#include "raidrel/distributions.hpp"
#include "raidrel/explore.hpp"
#include "raidrel/topology.hpp"

namespace raidrel::sim {

struct SimOptions {
  double confidence = 0.99;
  double relative_width = 0.01;
  std::uint64_t max_path_length = 1'000'000'000;
  std::uint64_t seed = 1;
  std::size_t min_paths = 1000;
  std::size_t max_paths = 10'000'000;
  std::size_t batch = 1000;
  bool record_samples = false;
};

struct SimEstimate {
  double mean = 0;
  double half_width = 0;
  double confidence = 0.99;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::size_t truncated = 0;  // paths that hit max_path_length without absorbing
  bool flagged = false;       // more than 1% of paths truncated
  bool converged = false;     // relative width target reached
  std::vector<double> samples;
};

void validate(const SimOptions& o);

// two-sided Student-t critical value for n samples
double t_critical(double confidence, std::size_t n);
double pairwise_sum(std::span<const double> v);
SimEstimate summarize(std::span<const double> values, double confidence);

SimEstimate simulate_mtta(const ctmc::Ctmc& c, std::string_view label, const SimOptions& o);
SimEstimate simulate_mtta(const ctmc::ModelGenerator& g, const SimOptions& o);

// One absorption time of the chain. `truncated` is set when the path stops
// after max_events jumps, or in a non-target absorbing state, without absorbing.
double sample_absorption(const ctmc::Ctmc& c, const std::vector<char>& target, Rng& rng, std::uint64_t max_events,
                         bool& truncated);

// Mean of min(X_1..X_n) over n_obs observations, X_i iid absorption times of `sub`.
SimEstimate simulate_min_of_subsystems(const ctmc::Ctmc& sub, std::size_t n, std::size_t n_obs, const SimOptions& o,
                                       std::string_view label = ctmc::kDil);

// Mean first time at which ceil(k*G/100) groups are in DIL at once.
SimEstimate simulate_k_percent(const topo::Topology& t, const build::SystemModels& m, double k, bool with_repair,
                               double restore_rate, const SimOptions& o, build::SystemOptions base = {});

// Event-driven group simulation with arbitrary lifetime laws; every disk keeps
// its own clocks, so ages survive unrelated events.
struct RawGroupModel {
  int disks = 6;
  topo::RaidLevel level = topo::RaidLevel::Raid5;
  dist::Distribution ttop = dist::Weibull{1.12, 461386, 0};
  dist::Distribution ttr = dist::Weibull{2, 12, 6};
  std::optional<dist::Distribution> ttld;
  std::optional<dist::Distribution> ttscr;
  // a restore in progress starts over when another member fails during it
  bool restart_interrupted = true;
};

struct CurveEstimate {
  std::vector<double> times;
  std::vector<double> fraction;
  std::vector<double> half_width;
  std::size_t n_paths = 0;
  double confidence = 0.99;
  std::uint64_t seed = 0;
};

void validate(const RawGroupModel& m);
CurveEstimate simulate_raw_curve(const RawGroupModel& m, std::span<const double> times, std::size_t n_paths,
                                 const SimOptions& o);
SimEstimate simulate_raw_mtta(const RawGroupModel& m, const SimOptions& o);

void write_samples_csv(std::ostream& os, const SimEstimate& e);

}  // namespace raidrel::sim
