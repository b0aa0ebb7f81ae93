#include <numeric>
#include <stdexcept>

#include "raidrel/builder.hpp"

namespace raidrel::build {
namespace {

// Exchangeable disks: the state is the number of disks in each local phase,
// plus a trailing byte that is 1 once the group has lost data.
class CountingGroup : public ctmc::ModelGenerator {
 public:
  CountingGroup(int n, topo::RaidLevel level, DiskPhases phases, double uer, double p)
      : n_(n), phases_(std::move(phases)), uer_(uer), p_(p) {
    topo::RaidGroup g;
    g.level = level;
    g.members.resize(static_cast<std::size_t>(n));
    f_ = g.fault_tolerance();
    for (const auto& m : phases_.moves)
      if (m.kind == DiskPhases::Kind::OpFailure) fail_entry_ = m.to;
  }

  ctmc::State initial_state() const override {
    ctmc::State s(phases_.size() + 1, 0);
    s[phases_.initial] = static_cast<std::uint8_t>(n_);
    return s;
  }

  bool is_target(const ctmc::State& s) const override { return s.back() != 0; }

  void successors(const ctmc::State& s, std::vector<ctmc::Successor>& out) const override {
    const std::size_t np = phases_.size();
    int down = 0, latent = 0;
    for (std::size_t k = 0; k < np; ++k) {
      if (phases_.failed[k]) down += s[k];
      if (phases_.latent[k]) latent += s[k];
    }
    ctmc::State lost(s.size(), 0);
    lost.back() = 1;
    auto moved = [&](std::uint8_t a, std::uint8_t b) {
      ctmc::State t = s;
      --t[a];
      ++t[b];
      return t;
    };
    auto loses = [&](int others_down, int others_latent) {
      return others_down >= f_ - 1 && others_down + others_latent >= f_;
    };

    for (const auto& m : phases_.moves) {
      const int c = s[m.from];
      if (c == 0) continue;
      const double base = c * m.rate;
      switch (m.kind) {
        case DiskPhases::Kind::Internal:
          out.push_back({moved(m.from, m.to), base});
          break;
        case DiskPhases::Kind::OpFailure: {
          const int lat_others = latent - (phases_.latent[m.from] ? 1 : 0);
          const bool fatal = loses(down, lat_others);
          const int candidates = n_ - down - 1;
          const double single = (p_ > 0 && candidates > 0) ? base * (1 - p_) : base;
          out.push_back({fatal ? lost : moved(m.from, m.to), single});
          if (single == base) break;
          for (std::size_t b = 0; b < np; ++b) {
            if (phases_.failed[b]) continue;
            const int cb = s[b] - (b == m.from ? 1 : 0);
            if (cb <= 0) continue;
            const double r = base * p_ * cb / candidates;
            if (fatal) {
              out.push_back({lost, r});
              continue;
            }
            const int lat2 = lat_others - (phases_.latent[b] ? 1 : 0);
            if (loses(down + 1, lat2)) {
              out.push_back({lost, r});
              continue;
            }
            ctmc::State t = moved(m.from, m.to);
            --t[b];
            ++t[fail_entry_];
            out.push_back({t, r});
          }
          break;
        }
        case DiskPhases::Kind::RepairDone: {
          const bool exposed = uer_ > 0 && down >= f_;
          if (exposed) {
            out.push_back({moved(m.from, m.to), base * (1 - uer_)});
            out.push_back({lost, base * uer_});
          } else {
            out.push_back({moved(m.from, m.to), base});
          }
          break;
        }
      }
    }
  }

 private:
  int n_;
  int f_ = 1;
  DiskPhases phases_;
  double uer_;
  double p_;
  std::uint8_t fail_entry_ = 0;
};

}  // namespace

topo::Topology single_group_topology(int n, topo::RaidLevel level, double disk_mttf_hr) {
  using topo::ComponentKind;
  topo::Topology t;
  t.add_component({"ctl", ComponentKind::Controller, topo::kNever, std::nullopt, 0.5, "", {}});
  t.add_component({"encl", ComponentKind::Enclosure, topo::kNever, std::nullopt, 0.5, "", {}});
  t.add_component({"exp", ComponentKind::Expander, topo::kNever, std::nullopt, 0.5, "encl", {}});
  t.add_link("ctl", "exp");
  topo::RaidGroup g{"g", level, {}};
  for (int i = 1; i <= n; ++i) {
    const std::string id = "d" + std::to_string(i);
    t.add_component({id, ComponentKind::Disk, disk_mttf_hr, std::nullopt, 30.0, "encl", {}});
    t.add_link("exp", id);
    g.members.push_back(id);
  }
  t.add_group(g);
  return t;
}

std::unique_ptr<ctmc::ModelGenerator> raid_group_generator(int n, topo::RaidLevel level, const DiskModelSpec& disk,
                                                           const RebuildSpec& rebuild, const CorrelationSpec& corr) {
  validate(disk);
  validate(rebuild);
  validate(corr);
  topo::RaidGroup probe{"g", level, std::vector<std::string>(static_cast<std::size_t>(std::max(n, 0)))};
  if (n < probe.fault_tolerance() + 1 || n < 2) throw std::invalid_argument("too few disks for the RAID level");
  if (n > 250) throw std::invalid_argument("group too large");
  if (level == topo::RaidLevel::Raid10) {
    if (n % 2 != 0) throw std::invalid_argument("RAID10 needs an even number of disks");
    SystemModels m{disk, rebuild, corr};
    SystemOptions o;
    o.symmetry_reduction = false;
    return std::make_unique<SystemGenerator>(single_group_topology(n, level), m, o);
  }
  return std::make_unique<CountingGroup>(n, level, disk_phases(disk, rebuild), rebuild.uer_prob, corr.p);
}

ctmc::Ctmc build_raid_ctmc(int n, topo::RaidLevel level, const DiskModelSpec& disk, const RebuildSpec& rebuild,
                           const CorrelationSpec& corr, const ctmc::ExploreOptions& explore) {
  return ctmc::explore(*raid_group_generator(n, level, disk, rebuild, corr), explore);
}

}  // namespace raidrel::build
