#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "raidrel/simulate.hpp"
#include "sequential.hpp"

namespace raidrel::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DiskClocks {
  double op = kInf;       // next operational failure
  double ld = kInf;       // next latent defect arrival
  double scrub = kInf;    // scrub completion of the current defect
  double restore = kInf;  // restore completion while down
};

class GroupRun {
 public:
  explicit GroupRun(const RawGroupModel& m) : m_(m), group_{"g", m.level, {}} {
    group_.members.resize(static_cast<std::size_t>(m.disks));
    disks_.resize(group_.members.size());
    down_.assign(disks_.size(), 0);
    latent_.assign(disks_.size(), 0);
  }

  // Time of data loss, or kInf when none happens before `horizon`.
  double run(Rng& rng, double horizon, std::uint64_t max_events, bool& truncated) {
    truncated = false;
    std::fill(down_.begin(), down_.end(), 0);
    std::fill(latent_.begin(), latent_.end(), 0);
    for (auto& d : disks_) fresh(d, 0, rng);
    for (std::uint64_t ev = 0;; ++ev) {
      if (ev >= max_events) {
        truncated = true;
        return kInf;
      }
      std::size_t who = 0;
      int what = 0;
      double t = kInf;
      for (std::size_t i = 0; i < disks_.size(); ++i) {
        const DiskClocks& d = disks_[i];
        const std::array<double, 4> c{d.op, d.ld, d.scrub, d.restore};
        for (int k = 0; k < 4; ++k) {
          if (c[k] < t) {
            t = c[k];
            who = i;
            what = k;
          }
        }
      }
      if (t > horizon) return kInf;
      DiskClocks& d = disks_[who];
      switch (what) {
        case 0:
          if (group_.loses_on_failure(who, down_, latent_)) return t;
          down_[who] = 1;
          latent_[who] = 0;
          d = DiskClocks{};
          d.restore = t + dist::sample(m_.ttr, rng);
          if (m_.restart_interrupted) {
            for (std::size_t j = 0; j < disks_.size(); ++j)
              if (j != who && down_[j]) disks_[j].restore = t + dist::sample(m_.ttr, rng);
          }
          break;
        case 1:
          latent_[who] = 1;
          d.ld = kInf;
          d.scrub = m_.ttscr ? t + dist::sample(*m_.ttscr, rng) : kInf;
          break;
        case 2:
          latent_[who] = 0;
          d.scrub = kInf;
          d.ld = t + dist::sample(*m_.ttld, rng);
          break;
        default:
          down_[who] = 0;
          fresh(d, t, rng);
          break;
      }
    }
  }

 private:
  void fresh(DiskClocks& d, double t, Rng& rng) {
    d = DiskClocks{};
    d.op = t + dist::sample(m_.ttop, rng);
    if (m_.ttld) d.ld = t + dist::sample(*m_.ttld, rng);
  }

  const RawGroupModel& m_;
  topo::RaidGroup group_;
  std::vector<DiskClocks> disks_;
  std::vector<char> down_;
  std::vector<char> latent_;
};

}  // namespace

void validate(const RawGroupModel& m) {
  const topo::RaidGroup g{"g", m.level, std::vector<std::string>(static_cast<std::size_t>(std::max(m.disks, 0)))};
  if (m.disks < 2) throw std::invalid_argument("raw group needs at least 2 disks");
  if (m.level == topo::RaidLevel::Raid10 && m.disks % 2 != 0) throw std::invalid_argument("RAID10 needs an even disk count");
  if (m.disks <= g.fault_tolerance()) throw std::invalid_argument("group smaller than its fault tolerance + 1");
  dist::validate(m.ttop);
  dist::validate(m.ttr);
  if (m.ttld) dist::validate(*m.ttld);
  if (m.ttscr) dist::validate(*m.ttscr);
  if (m.ttscr && !m.ttld) throw std::invalid_argument("scrub distribution given without a latent defect distribution");
}

CurveEstimate simulate_raw_curve(const RawGroupModel& m, std::span<const double> times, std::size_t n_paths,
                                 const SimOptions& o) {
  validate(m);
  validate(o);
  if (times.empty()) throw std::invalid_argument("no evaluation times");
  if (n_paths < 1) throw std::invalid_argument("need at least one path");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0) || (i > 0 && times[i] < times[i - 1]))
      throw std::invalid_argument("times must be non-negative and ascending");
  }
  const double horizon = times.back();
  std::vector<std::size_t> hits(times.size(), 0);
  GroupRun run(m);
  for (std::size_t i = 0; i < n_paths; ++i) {
    Rng rng(o.seed, i);
    bool cut = false;
    const double t = run.run(rng, horizon, o.max_path_length, cut);
    if (t == kInf) continue;
    const auto k = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
    if (k < times.size()) ++hits[k];
  }
  CurveEstimate c;
  c.times.assign(times.begin(), times.end());
  c.n_paths = n_paths;
  c.confidence = o.confidence;
  c.seed = o.seed;
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + o.confidence / 2);
  const double n = static_cast<double>(n_paths);
  std::size_t cum = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    cum += hits[k];
    const double p = static_cast<double>(cum) / n;
    c.fraction.push_back(p);
    c.half_width.push_back(z * std::sqrt(p * (1 - p) / n));
  }
  return c;
}

SimEstimate simulate_raw_mtta(const RawGroupModel& m, const SimOptions& o) {
  validate(m);
  GroupRun run(m);
  return detail::sequential(o, [&](Rng& rng) {
    bool cut = false;
    const double t = run.run(rng, kInf, o.max_path_length, cut);
    return detail::PathResult{cut ? 0.0 : t, cut};
  });
}

}  // namespace raidrel::sim
