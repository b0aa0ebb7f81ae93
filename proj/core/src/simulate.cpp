#include "raidrel/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "raidrel/csv.hpp"
#include "sequential.hpp"

namespace raidrel::sim {

void validate(const SimOptions& o) {
  if (!(o.confidence > 0 && o.confidence < 1)) throw std::invalid_argument("confidence must be in (0, 1)");
  if (!(o.relative_width > 0)) throw std::invalid_argument("relative width must be > 0");
  if (o.max_path_length < 1) throw std::invalid_argument("max_path_length must be >= 1");
  if (o.batch < 1 || o.max_paths < 1) throw std::invalid_argument("batch and max_paths must be >= 1");
}

double t_critical(double confidence, std::size_t n) {
  if (n < 2) return std::numeric_limits<double>::infinity();
  boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::quantile(dist, 0.5 + confidence / 2);
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

SimEstimate summarize(std::span<const double> values, double confidence) {
  SimEstimate e;
  e.confidence = confidence;
  e.n_paths = values.size();
  if (values.empty()) return e;
  const double n = static_cast<double>(values.size());
  e.mean = pairwise_sum(values) / n;
  if (values.size() > 1) {
    std::vector<double> dev(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - e.mean) * (values[i] - e.mean);
    const double var = pairwise_sum(dev) / (n - 1);
    e.half_width = t_critical(confidence, values.size()) * std::sqrt(var / n);
  } else {
    e.half_width = std::numeric_limits<double>::infinity();
  }
  return e;
}


double sample_absorption(const ctmc::Ctmc& c, const std::vector<char>& target, Rng& rng, std::uint64_t max_events,
                         bool& truncated) {
  // initial state
  double u = rng.uniform();
  std::size_t s = 0;
  const auto& init = c.initial();
  for (; s + 1 < init.size(); ++s) {
    if (u < init[s]) break;
    u -= init[s];
  }
  double t = 0;
  std::uint64_t events = 0;
  truncated = false;
  while (!target[s]) {
    const double q = c.exit_rate(s);
    if (q <= 0 || events >= max_events) {
      truncated = true;
      return t;
    }
    t += rng.exponential(q);
    double pick = rng.uniform() * q;
    const auto tg = c.targets(s);
    const auto rt = c.rates(s);
    std::size_t k = 0;
    for (; k + 1 < tg.size(); ++k) {
      if (pick < rt[k]) break;
      pick -= rt[k];
    }
    s = tg[k];
    ++events;
  }
  return t;
}

SimEstimate simulate_mtta(const ctmc::Ctmc& c, std::string_view label, const SimOptions& o) {
  const auto target = c.mask(label);
  return detail::sequential(o, [&](Rng& rng) {
    bool cut = false;
    const double v = sample_absorption(c, target, rng, o.max_path_length, cut);
    return detail::PathResult{v, cut};
  });
}

SimEstimate simulate_mtta(const ctmc::ModelGenerator& g, const SimOptions& o) {
  const ctmc::State init = g.initial_state();
  return detail::sequential(o, [&](Rng& rng) {
    ctmc::State s = init;
    std::vector<ctmc::Successor> succ;
    double t = 0;
    for (std::uint64_t ev = 0; !g.is_target(s); ++ev) {
      succ.clear();
      g.raw_successors(s, succ);
      double q = 0;
      for (const auto& x : succ) q += x.rate;
      if (q <= 0 || ev >= o.max_path_length) return detail::PathResult{t, true};
      t += rng.exponential(q);
      double pick = rng.uniform() * q;
      std::size_t k = 0;
      for (; k + 1 < succ.size(); ++k) {
        if (pick < succ[k].rate) break;
        pick -= succ[k].rate;
      }
      s = std::move(succ[k].state);
      g.complete(s);
    }
    return detail::PathResult{t, false};
  });
}

SimEstimate simulate_min_of_subsystems(const ctmc::Ctmc& sub, std::size_t n, std::size_t n_obs, const SimOptions& o,
                                       std::string_view label) {
  validate(o);
  if (n < 1) throw std::invalid_argument("need at least one subsystem");
  if (n_obs < 1) throw std::invalid_argument("need at least one observation");
  const auto target = sub.mask(label);
  std::vector<double> values(n_obs);
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < n_obs; ++i) {
    Rng rng(o.seed, i);
    double best = std::numeric_limits<double>::infinity();
    bool cut = false;
    for (std::size_t k = 0; k < n; ++k) {
      bool c = false;
      const double v = sample_absorption(sub, target, rng, o.max_path_length, c);
      cut = cut || c;
      best = std::min(best, v);
    }
    values[i] = best;
    truncated += cut;
  }
  SimEstimate e = summarize(values, o.confidence);
  e.seed = o.seed;
  e.truncated = truncated;
  e.flagged = static_cast<double>(truncated) > 0.01 * static_cast<double>(n_obs);
  e.converged = e.half_width <= o.relative_width * std::abs(e.mean);
  if (o.record_samples) e.samples = std::move(values);
  return e;
}

SimEstimate simulate_k_percent(const topo::Topology& t, const build::SystemModels& m, double k, bool with_repair,
                               double restore_rate, const SimOptions& o, build::SystemOptions base) {
  if (!(k > 0 && k <= 100)) throw std::invalid_argument("k must be in (0, 100]");
  const std::size_t groups = t.groups().size();
  if (groups == 0) throw std::invalid_argument("system has no RAID groups");
  if (with_repair && !(restore_rate > 0)) throw std::invalid_argument("repair from DIL needs a restore rate > 0");
  base.lost_groups_target = static_cast<std::size_t>(std::ceil(k * static_cast<double>(groups) / 100.0 - 1e-9));
  base.lost_groups_target = std::max<std::size_t>(1, base.lost_groups_target);
  base.dil_restore_rate = with_repair ? restore_rate : 0.0;
  build::SystemGenerator g(t, m, base);
  return simulate_mtta(g, o);
}

void write_samples_csv(std::ostream& os, const SimEstimate& e) {
  os << "run_index,value_hr\n";
  for (std::size_t i = 0; i < e.samples.size(); ++i) os << i << ',' << format_double(e.samples[i]) << '\n';
}

}  // namespace raidrel::sim
