#include "raidrel/design.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "raidrel/csv.hpp"
#include "raidrel/explore.hpp"

namespace raidrel::design {

SpanPlan greedy_span(int n, int m, int f, std::vector<int> capacities) {
  if (n < 1 || m < 1 || f < 1) throw std::invalid_argument("need n >= 1, m >= 1, f >= 1");
  if (capacities.empty()) capacities.assign(static_cast<std::size_t>(m), 24);
  if (capacities.size() != static_cast<std::size_t>(m)) throw std::invalid_argument("need one capacity per enclosure");
  for (int c : capacities)
    if (c < 0) throw std::invalid_argument("capacities must be >= 0");
  if (std::accumulate(capacities.begin(), capacities.end(), 0L) < n)
    throw std::invalid_argument("total enclosure capacity is below the number of disks");

  SpanPlan plan{std::vector<int>(static_cast<std::size_t>(m), 0), n, m, f, false};
  std::vector<char> used(capacities.size(), 0);
  int left = n;
  int free_encl = m;
  while (left > 0) {
    if (left <= free_encl * f) {
      for (std::size_t i = 0; i < capacities.size() && left > 0; ++i) {
        if (used[i]) continue;
        const int d = std::min({f, left, capacities[i]});
        if (d < std::min(f, left)) plan.fallback = true;
        plan.counts[i] = d;
        used[i] = 1;
        left -= d;
      }
      // enclosures smaller than f: spill into residual capacity
      for (std::size_t i = 0; i < capacities.size() && left > 0; ++i) {
        const int d = std::min(left, capacities[i] - plan.counts[i]);
        plan.counts[i] += d;
        left -= d;
      }
      break;
    }
    std::size_t best = capacities.size();
    for (std::size_t i = 0; i < capacities.size(); ++i)
      if (!used[i] && (best == capacities.size() || capacities[i] > capacities[best])) best = i;
    const int d = std::min(capacities[best], left);
    plan.counts[best] = d;
    used[best] = 1;
    left -= d;
    --free_encl;
  }
  return plan;
}

bool satisfies_invariants(const SpanPlan& p, const std::vector<int>& capacities) {
  if (p.counts.size() != static_cast<std::size_t>(p.m)) return false;
  if (!capacities.empty() && capacities.size() != p.counts.size()) return false;
  int sum = 0;
  int used = 0;
  for (std::size_t i = 0; i < p.counts.size(); ++i) {
    const int cap = capacities.empty() ? 24 : capacities[i];
    if (p.counts[i] < 0 || p.counts[i] > cap) return false;
    sum += p.counts[i];
    used += p.counts[i] > 0;
  }
  return sum == p.n && used <= p.m;
}

std::string format_plan(const SpanPlan& p) {
  std::string out;
  for (std::size_t i = 0; i < p.counts.size(); ++i) {
    if (p.counts[i] == 0) continue;
    if (!out.empty()) out += ' ';
    out += "enclosure" + std::to_string(i + 1) + ":" + std::to_string(p.counts[i]);
  }
  return out;
}

namespace {

double pairs(int k) { return 0.5 * k * (k - 1.0); }

void check_rate_args(double lambda, double p) {
  if (!(lambda >= 0) || std::isinf(lambda)) throw std::invalid_argument("lambda must be >= 0 and finite");
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("p must be in [0, 1]");
}

}  // namespace

double correlated_span_rate(int n, int m, double lambda, double p) {
  if (n < 1 || m < 1) throw std::invalid_argument("need n >= 1 and m >= 1");
  if (n % m != 0) throw std::invalid_argument("m must divide n; use the SpanPlan form for uneven splits");
  check_rate_args(lambda, p);
  return m * pairs(n / m) * lambda * p;
}

double correlated_span_rate(const SpanPlan& plan, double lambda, double p) {
  check_rate_args(lambda, p);
  double r = 0;
  for (int k : plan.counts) {
    if (k < 0) throw std::invalid_argument("negative enclosure count");
    r += pairs(k);
  }
  return r * lambda * p;
}

topo::Topology spanned_group_topology(const std::vector<int>& counts, const SpanTopologyOptions& o) {
  if (counts.empty()) throw std::invalid_argument("no enclosures");
  topo::Topology t;
  t.set_enclosure_policy(o.policy);
  t.add_component({"ctl", topo::ComponentKind::Controller, o.controller_mttf_hr, {}, 0.5, "", {}});
  topo::RaidGroup g{"g", o.level, {}};
  int disk = 0;
  for (std::size_t e = 0; e < counts.size(); ++e) {
    if (counts[e] < 0) throw std::invalid_argument("negative enclosure count");
    if (counts[e] == 0) continue;
    const std::string encl = "encl" + std::to_string(e + 1);
    const std::string exp = "exp" + std::to_string(e + 1);
    t.add_component({encl, topo::ComponentKind::Enclosure, o.enclosure_mttf_hr, {}, 0.5, "", {}});
    t.add_component({exp, topo::ComponentKind::Expander, o.expander_mttf_hr, {}, 0.5, encl, {}});
    t.add_link("ctl", exp);
    for (int k = 0; k < counts[e]; ++k) {
      const std::string id = "d" + std::to_string(++disk);
      t.add_component({id, topo::ComponentKind::Disk, o.disk_mttf_hr, {}, o.disk_mttr_hr, encl, {}});
      t.add_link(exp, id);
      g.members.push_back(id);
    }
  }
  t.add_group(std::move(g));
  topo::require_valid(t);
  return t;
}

std::vector<std::vector<int>> partitions(int n, int max_parts) {
  if (n < 1 || max_parts < 1) throw std::invalid_argument("need n >= 1 and max_parts >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int, int)> rec = [&](int left, int cap) {
    if (left == 0) {
      out.push_back(cur);
      return;
    }
    if (static_cast<int>(cur.size()) == max_parts) return;
    for (int k = std::min(left, cap); k >= 1; --k) {
      cur.push_back(k);
      rec(left - k, k);
      cur.pop_back();
    }
  };
  rec(n, n);
  return out;
}

std::vector<CompareRow> compare_configs(const std::vector<Config>& configs, const CompareOptions& o) {
  if (configs.size() < 2) throw std::invalid_argument("need at least two configs to compare");
  if (o.baseline >= configs.size()) throw std::invalid_argument("baseline index out of range");
  std::vector<CompareRow> rows;
  for (const auto& c : configs) {
    CompareRow r;
    r.id = c.id;
    r.extra_cost_note = c.extra_cost_note;
    build::SystemOptions so;
    so.explore = o.explore;
    try {
      const auto chain = build::build_system_ctmc(c.topology, c.models, so);
      r.measure_hr = ctmc::mtta(chain, ctmc::kDil, o.solve).hours;
      r.method = "numeric";
      r.states = chain.size();
    } catch (const ctmc::StateBudgetExceeded&) {
      if (!o.allow_simulation) throw;
      const build::SystemGenerator g(c.topology, c.models, so);
      const auto e = sim::simulate_mtta(g, o.sim);
      r.measure_hr = e.mean;
      r.ci_halfwidth = e.half_width;
      r.method = "simulate";
    }
    rows.push_back(std::move(r));
  }
  const double base = rows[o.baseline].measure_hr;
  for (auto& r : rows) r.gain = (r.measure_hr == base) ? 1.0 : r.measure_hr / base;
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.measure_hr > b.measure_hr; });
  return rows;
}

void write_comparison_csv(std::ostream& os, const std::vector<CompareRow>& rows) {
  os << "config_id,measure_hr,gain_vs_baseline,extra_cost_note\n";
  for (const auto& r : rows) write_csv_row(os, {r.id, format_double(r.measure_hr), format_double(r.gain), r.extra_cost_note});
}

std::vector<SweepRow> span_sweep(int n, int max_enclosures, const SpanTopologyOptions& o,
                                 const build::SystemModels& models, const ctmc::SolveOptions& solve) {
  std::vector<SweepRow> out;
  for (auto& counts : partitions(n, max_enclosures)) {
    const auto t = spanned_group_topology(counts, o);
    const auto chain = build::build_system_ctmc(t, models);
    out.push_back(SweepRow{counts, ctmc::mtta(chain, ctmc::kDil, solve).hours, chain.size()});
  }
  return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "partition,enclosures,mttdil_hr,states\n";
  for (const auto& r : rows) {
    std::string p;
    for (int k : r.counts) p += (p.empty() ? "" : "-") + std::to_string(k);
    write_csv_row(os, {p, std::to_string(r.counts.size()), format_double(r.mttdil_hr), std::to_string(r.states)});
  }
}

}  // namespace raidrel::design
