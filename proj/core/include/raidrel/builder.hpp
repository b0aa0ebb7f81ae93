#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "raidrel/ctmc.hpp"
#include "raidrel/distributions.hpp"
#include "raidrel/explore.hpp"
#include "raidrel/topology.hpp"

namespace raidrel::build {

struct ExponentialDisk {
  double rate;
};

struct ThreeStateDisk {
  dist::PhaseType3 ph;
};

// Operational failure per a 3-state phase type, latent defects arriving at
// ttld_rate and cleared by an Erlang scrub, Erlang restore after failure.
struct DetailedDisk {
  dist::PhaseType3 ttop;
  double ttld_rate;
  dist::ErlangK ttscr;
  dist::ErlangK ttr;
  // allow operational failure while a latent defect is outstanding
  bool op_failure_with_defect = false;
  bool scrub = true;
};

using DiskModelSpec = std::variant<ExponentialDisk, ThreeStateDisk, DetailedDisk>;

ThreeStateDisk default_three_state();
DetailedDisk default_detailed();

struct RebuildSpec {
  double rate = 1.0 / 30.0;
  double uer_prob = 0.0;
  static RebuildSpec from_mean(double mean_hr, double uer_prob = 0.0);
};
RebuildSpec default_rebuild();

struct CorrelationSpec {
  double p = 0.0;
};

void validate(const DiskModelSpec& d);
void validate(const RebuildSpec& r);
void validate(const CorrelationSpec& c);

// Local phase machine of one disk.
struct DiskPhases {
  enum class Kind : std::uint8_t { Internal, OpFailure, RepairDone };
  struct Move {
    std::uint8_t from;
    std::uint8_t to;
    double rate;
    Kind kind;
  };
  std::vector<std::string> names;
  std::uint8_t initial = 0;
  std::vector<Move> moves;
  std::vector<char> failed;  // disk is down and being restored
  std::vector<char> latent;  // carries an uncleared latent defect
  std::size_t size() const { return names.size(); }
};

DiskPhases disk_phases(const DiskModelSpec& d, const RebuildSpec& r);

enum class FragmentMode { AbsorbOnFailure, Renewal };
// Single detailed disk. AbsorbOnFailure: operational failure enters an
// absorbing state labelled "OpFail". Renewal: failures are restored; states
// are labelled "Restoring" and "LatentDefect".
ctmc::Ctmc build_detailed_disk(const DiskModelSpec& d, FragmentMode mode = FragmentMode::AbsorbOnFailure);

// n-disk group in one enclosure. RAID1/5/6 use per-phase disk counts; RAID10
// tracks each disk.
ctmc::Ctmc build_raid_ctmc(int n, topo::RaidLevel level, const DiskModelSpec& disk, const RebuildSpec& rebuild,
                           const CorrelationSpec& corr, const ctmc::ExploreOptions& explore = {});
std::unique_ptr<ctmc::ModelGenerator> raid_group_generator(int n, topo::RaidLevel level, const DiskModelSpec& disk,
                                                           const RebuildSpec& rebuild, const CorrelationSpec& corr);

// Failure laws attached to a topology.
struct SystemModels {
  // unset: each disk is exponential with its component mttf
  std::optional<DiskModelSpec> disk;
  // unset: each disk rebuilds at 1/mttr, no UER
  std::optional<RebuildSpec> rebuild;
  CorrelationSpec correlation;
};

// Exponential element that puts `group` into DIL when it fires.
struct GroupKiller {
  std::string id;
  std::size_t group;
  double rate;
};

struct SystemOptions {
  bool symmetry_reduction = true;
  bool series_reduction = false;
  std::set<std::string> perfect;  // ids treated as never failing
  std::vector<GroupKiller> killers;
  // target = at least this many groups simultaneously in DIL
  std::size_t lost_groups_target = 1;
  // restore rate out of DIL for a lost group (0 = no repair)
  double dil_restore_rate = 0.0;
  ctmc::ExploreOptions explore;
};

class SystemGenerator : public ctmc::ModelGenerator {
 public:
  SystemGenerator(const topo::Topology& t, const SystemModels& m, const SystemOptions& o = {});
  ~SystemGenerator() override;

  ctmc::State initial_state() const override;
  bool is_target(const ctmc::State& s) const override;
  void successors(const ctmc::State& s, std::vector<ctmc::Successor>& out) const override;
  void raw_successors(const ctmc::State& s, std::vector<ctmc::Successor>& out) const override;
  void complete(ctmc::State& s) const override;

  std::size_t group_count() const;
  std::size_t lost_groups(const ctmc::State& s) const;
  std::size_t state_width() const;
  std::size_t modelled_components() const;
  std::size_t symmetry_classes() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ctmc::Ctmc build_system_ctmc(const topo::Topology& t, const SystemModels& m, const SystemOptions& o = {});

// Topology of n disks behind one perfect controller/expander in one perfect enclosure.
topo::Topology single_group_topology(int n, topo::RaidLevel level, double disk_mttf_hr = topo::kNever);

}  // namespace raidrel::build
