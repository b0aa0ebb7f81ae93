#include "raidrel/hierarchy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>

#include "raidrel/csv.hpp"
#include "raidrel/explore.hpp"

namespace raidrel::hier {

double equivalent_component(double mttdil_sub_hr) {
  if (std::isinf(mttdil_sub_hr) && mttdil_sub_hr > 0) return 0.0;
  if (!(mttdil_sub_hr > 0)) throw std::invalid_argument("subsystem MTTDIL must be > 0");
  return 1.0 / mttdil_sub_hr;
}

double independent_scale(double mttdil_sub_hr, std::size_t n) {
  if (n < 1) throw std::invalid_argument("need at least one subsystem");
  if (!(mttdil_sub_hr > 0)) throw std::invalid_argument("subsystem MTTDIL must be > 0");
  return mttdil_sub_hr / static_cast<double>(n);
}

void validate(const DiscretizationParams& p) {
  if (!(p.delta > 0 && p.delta < 1)) throw std::invalid_argument("delta must be in (0, 1)");
  if (!(p.step > 0) || std::isinf(p.step)) throw std::invalid_argument("step must be > 0 and finite");
  if (!(p.max >= 0) || std::isinf(p.max)) throw std::invalid_argument("max must be >= 0 and finite");
}

namespace {

double survival_pow(double f, std::size_t n) {
  const double s = std::clamp(1.0 - f, 0.0, 1.0);
  return std::pow(s, static_cast<double>(n));
}

DiscretizedMean riemann(const std::function<double(double)>& g_hi, const std::function<double(double)>& g_lo,
                        DiscretizationParams p) {
  validate(p);
  double max = p.max;
  if (max == 0) {
    max = p.step;
    int doublings = 0;
    while (!(g_hi(max) < p.delta)) {
      if (++doublings > 60) throw std::runtime_error("g(max) stays above delta after 60 doublings");
      max *= 2;
    }
  } else if (!(g_hi(max) < p.delta)) {
    throw std::runtime_error("g(max) >= delta at the given max");
  }
  const auto k = static_cast<std::size_t>(std::ceil(max / p.step - 1e-12));
  DiscretizedMean r;
  r.max = static_cast<double>(k) * p.step;
  r.steps = k;
  double up = 0;
  double low = 0;
  for (std::size_t i = 0; i < k; ++i) {
    up += g_hi(static_cast<double>(i) * p.step);
    low += g_lo(static_cast<double>(i + 1) * p.step);
  }
  r.upper = p.step * up;
  r.lower = p.step * low;
  return r;
}

}  // namespace

DiscretizedMean discretized_mean(const std::function<double(double)>& cdf, std::size_t n, DiscretizationParams p) {
  if (n < 1) throw std::invalid_argument("need at least one subsystem");
  auto g = [&](double t) { return survival_pow(cdf(t), n); };
  return riemann(g, g, p);
}

DiscretizedMean discretized_mean(const std::function<double(double)>& cdf,
                                 const std::function<double(double)>& half_width, std::size_t n,
                                 DiscretizationParams p) {
  if (n < 1) throw std::invalid_argument("need at least one subsystem");
  auto g_hi = [&](double t) { return survival_pow(cdf(t) - std::abs(half_width(t)), n); };
  auto g_lo = [&](double t) { return survival_pow(cdf(t) + std::abs(half_width(t)), n); };
  return riemann(g_hi, g_lo, p);
}

std::string_view to_string(Method m) { return m == Method::Numeric ? "numeric" : "simulate"; }

namespace {

// Disks whose accessibility depends on each component.
std::vector<std::set<std::size_t>> component_users(const topo::Topology& t) {
  std::vector<std::set<std::size_t>> users(t.size());
  const topo::PathTable paths(t);
  auto add = [&](std::size_t c, std::size_t d) {
    users[c].insert(d);
    const auto& e = t.components()[c].enclosure;
    if (!e.empty()) users[t.index_of(e)].insert(d);
  };
  for (std::size_t d : t.disks()) {
    add(d, d);
    for (const auto& path : paths.paths(d))
      for (std::size_t c : path) add(c, d);
  }
  return users;
}

std::vector<std::vector<std::string>> leaves_of(const DecompositionPlan& plan, const topo::Topology& t) {
  if (!plan.leaves.empty()) return plan.leaves;
  std::vector<std::vector<std::string>> out;
  for (const auto& g : t.groups()) out.push_back({g.id});
  return out;
}

std::set<std::size_t> leaf_disks(const topo::Topology& t, const std::vector<std::string>& groups) {
  std::set<std::size_t> out;
  for (const auto& id : groups) {
    const auto it = std::find_if(t.groups().begin(), t.groups().end(), [&](const auto& g) { return g.id == id; });
    if (it == t.groups().end()) throw std::invalid_argument("plan names unknown RAID group '" + id + "'");
    for (const auto& m : it->members) out.insert(t.index_of(m));
  }
  return out;
}

bool subset(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

struct Solved {
  double value = 0;
  double half_width = 0;
  std::size_t states = 0;
  Method method = Method::Numeric;
};

Solved solve_system(const topo::Topology& t, const build::SystemModels& m, const build::SystemOptions& so,
                    Method method, const DecompositionPlan& plan) {
  if (method == Method::Numeric) {
    try {
      const auto c = build::build_system_ctmc(t, m, so);
      const auto r = ctmc::mtta(c, ctmc::kDil, plan.solve);
      return Solved{r.hours, 0, c.size(), Method::Numeric};
    } catch (const ctmc::StateBudgetExceeded&) {
      if (!plan.simulate_fallback) throw;
    }
  }
  const build::SystemGenerator g(t, m, so);
  const auto e = sim::simulate_mtta(g, plan.sim);
  return Solved{e.mean, e.half_width, 0, Method::Simulate};
}

}  // namespace

void validate(const DecompositionPlan& plan, const topo::Topology& t) {
  std::set<std::string> seen;
  for (const auto& leaf : leaves_of(plan, t)) {
    if (leaf.empty()) throw std::invalid_argument("plan has an empty leaf");
    for (const auto& g : leaf)
      if (!seen.insert(g).second) throw std::invalid_argument("RAID group '" + g + "' appears in two leaves");
    leaf_disks(t, leaf);
  }
  if (seen.size() != t.groups().size()) throw std::invalid_argument("plan leaves do not cover every RAID group");
  sim::validate(plan.sim);
}

topo::Topology leaf_topology(const topo::Topology& t, const std::vector<std::string>& groups) {
  const auto mine = leaf_disks(t, groups);
  const auto users = component_users(t);
  topo::Topology out;
  if (t.enclosure_policy()) out.set_enclosure_policy(*t.enclosure_policy());
  std::vector<char> keep(t.size(), 0);
  for (std::size_t c = 0; c < t.size(); ++c) {
    bool touches = false;
    for (std::size_t d : users[c]) touches = touches || mine.count(d) > 0;
    if (!touches) continue;
    keep[c] = 1;
    topo::ComponentSpec spec = t.components()[c];
    if (!subset(users[c], mine)) {
      spec.mttf_hr = topo::kNever;
      spec.lifetime.reset();
    } else if (spec.kind == topo::ComponentKind::Enclosure && !spec.mttf_hr && !spec.lifetime) {
      // pin the occupancy-dependent rate of the full system
      const double rate = t.failure_rate(c);
      spec.mttf_hr = rate > 0 ? 1.0 / rate : topo::kNever;
    }
    out.add_component(std::move(spec));
  }
  for (const auto& l : t.links())
    if (keep[t.index_of(l.from)] && keep[t.index_of(l.to)]) out.add_link(l.from, l.to);
  for (const auto& g : t.groups())
    if (std::find(groups.begin(), groups.end(), g.id) != groups.end()) out.add_group(g);
  return out;
}

DecompositionResult decompose_solve(const topo::Topology& t, const build::SystemModels& models,
                                    const DecompositionPlan& plan) {
  topo::require_valid(t);
  validate(plan, t);
  DecompositionResult res;
  build::SystemModels m = models;

  if (plan.disk_level && m.disk && !std::holds_alternative<build::ExponentialDisk>(*m.disk)) {
    double mean_hr = 0;
    std::size_t states = 0;
    if (const auto* d = std::get_if<build::ThreeStateDisk>(&*m.disk)) {
      mean_hr = dist::mean(d->ph);
      states = 4;
    } else {
      const auto frag = build::build_detailed_disk(*m.disk, build::FragmentMode::AbsorbOnFailure);
      mean_hr = ctmc::mtta(frag, "OpFail", plan.solve).hours;
      states = frag.size();
    }
    const double rate = equivalent_component(mean_hr);
    res.report.push_back(LevelRecord{0, "disk", Method::Numeric, mean_hr, 0, states});
    res.substitutions["disk"] = rate;
    m.disk = build::ExponentialDisk{rate};
  }

  build::SystemOptions so;
  so.explore = plan.explore;
  const auto leaves = leaves_of(plan, t);
  std::vector<Solved> solved;
  double worst_rel = 0;
  for (const auto& leaf : leaves) {
    std::string id;
    for (const auto& g : leaf) id += (id.empty() ? "" : "+") + g;
    const Solved s = solve_system(leaf_topology(t, leaf), m, so, plan.leaf_method, plan);
    res.report.push_back(LevelRecord{1, id, s.method, s.value, s.half_width, s.states});
    res.substitutions[id] = equivalent_component(s.value);
    if (s.value > 0 && std::isfinite(s.value)) worst_rel = std::max(worst_rel, s.half_width / s.value);
    solved.push_back(s);
  }

  if (leaves.size() == 1) {
    res.mttdil_hr = solved[0].value;
    res.ci_halfwidth = solved[0].half_width;
    return res;
  }

  // parent: shared components plus one killer per leaf
  const auto users = component_users(t);
  std::vector<std::set<std::size_t>> leaf_sets;
  for (const auto& leaf : leaves) leaf_sets.push_back(leaf_disks(t, leaf));
  build::SystemOptions parent = so;
  for (std::size_t c = 0; c < t.size(); ++c) {
    const auto& comp = t.components()[c];
    if (comp.kind == topo::ComponentKind::Disk) {
      parent.perfect.insert(comp.id);
      continue;
    }
    if (users[c].empty()) continue;
    for (const auto& s : leaf_sets)
      if (subset(users[c], s)) parent.perfect.insert(comp.id);
  }
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const auto& first = leaves[k].front();
    const auto it = std::find_if(t.groups().begin(), t.groups().end(), [&](const auto& g) { return g.id == first; });
    parent.killers.push_back(build::GroupKiller{"leaf" + std::to_string(k),
                                                static_cast<std::size_t>(it - t.groups().begin()),
                                                equivalent_component(solved[k].value)});
  }
  const Solved top = solve_system(t, m, parent, plan.top_method, plan);
  res.report.push_back(LevelRecord{2, "system", top.method, top.value, top.half_width, top.states});
  res.mttdil_hr = top.value;
  // first-order: relative leaf error carries over to the aggregate
  res.ci_halfwidth = top.half_width + worst_rel * top.value;
  return res;
}

void write_report_csv(std::ostream& os, const DecompositionResult& r) {
  os << "level,subsystem_id,method,value_hr,ci_halfwidth\n";
  for (const auto& rec : r.report) {
    write_csv_row(os, {std::to_string(rec.level), rec.subsystem_id, std::string(to_string(rec.method)),
                       format_double(rec.value_hr), format_double(rec.ci_halfwidth)});
  }
}

PEstimate estimate_p(const std::function<double(double)>& f, double target_hr, const PEstimateOptions& o) {
  if (!(o.lo >= 0 && o.hi <= 1 && o.lo < o.hi)) throw std::invalid_argument("bracket must satisfy 0 <= lo < hi <= 1");
  if (o.audit_points < 1) throw std::invalid_argument("audit needs at least one interval");
  if (!(o.tolerance > 0) || !(o.p_tolerance > 0)) throw std::invalid_argument("tolerances must be > 0");
  if (!(target_hr > 0)) throw std::invalid_argument("target MTTDIL must be > 0");
  PEstimate r;
  std::vector<double> ps;
  std::vector<double> vs;
  for (std::size_t i = 0; i <= o.audit_points; ++i) {
    const double p = o.lo + (o.hi - o.lo) * static_cast<double>(i) / static_cast<double>(o.audit_points);
    ps.push_back(p);
    vs.push_back(f(p));
    ++r.evaluations;
    if (i > 0 && vs[i] > vs[i - 1] * (1 + 1e-12))
      throw std::runtime_error("MTTDIL is not monotone decreasing in p over the bracket");
  }
  if (!(vs.back() < vs.front())) throw std::runtime_error("MTTDIL does not vary with p over the bracket");
  if (target_hr > vs.front() * (1 + o.tolerance) || target_hr < vs.back() * (1 - o.tolerance))
    throw std::runtime_error("target MTTDIL is outside the range reachable in the bracket");

  std::size_t k = 0;
  while (k + 2 < ps.size() && vs[k + 1] >= target_hr) ++k;
  double a = ps[k];
  double b = ps[k + 1];
  double p = a;
  double v = vs[k];
  for (std::size_t it = 0; it < o.max_iterations; ++it) {
    if (std::abs(v - target_hr) <= o.tolerance * target_hr && b - a <= o.p_tolerance) break;
    p = 0.5 * (a + b);
    v = f(p);
    ++r.evaluations;
    if (v > target_hr)
      a = p;
    else
      b = p;
  }
  if (std::abs(v - target_hr) > o.tolerance * target_hr)
    throw std::runtime_error("bisection did not reach the MTTDIL tolerance");
  r.p = p;
  r.mttdil_hr = v;
  return r;
}

}  // namespace raidrel::hier
