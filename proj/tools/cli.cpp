#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "CLI11.hpp"
#include "config.hpp"
#include "raidrel/csv.hpp"
#include "raidrel/design.hpp"
#include "raidrel/distributions.hpp"
#include "raidrel/hierarchy.hpp"
#include "raidrel/simulate.hpp"

#ifndef RAIDREL_VERSION
#define RAIDREL_VERSION "0.0.0"
#endif

namespace raidrel::cli {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::string config_hash;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> outputs;
  Clock::time_point start = Clock::now();

  json to_json() const {
    json j;
    j["command"] = command;
    j["args"] = args;
    j["config_hash"] = config_hash;
    j["seed"] = seed ? json(*seed) : json(nullptr);
    j["tool_version"] = RAIDREL_VERSION;
    j["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
    j["outputs"] = outputs;
    return j;
  }
};

// Output sink: a file when a path is given, `fallback` otherwise.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw std::runtime_error("cannot write '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_ = nullptr;
};

void write_manifest(const Manifest& m, const std::string& manifest_path, const std::string& output_path,
                    std::ostream& err) {
  std::string path = manifest_path;
  if (path.empty() && !output_path.empty() && output_path != "-") path = output_path + ".manifest.json";
  if (path.empty()) {
    err << "manifest: " << m.to_json().dump() << "\n";
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write manifest '" + path + "'");
  os << m.to_json().dump(2) << "\n";
}

struct Common {
  std::string output;
  std::string manifest;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-o,--output", c.output, "output CSV path (default stdout)");
  app->add_option("--manifest", c.manifest, "run manifest path (default <output>.manifest.json, or stderr)");
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  Common common;
  double shape = 0;
  double scale = 0;
  double offset = 0;
  std::string target = "phase3";
  std::string curves;
  double t_max = 2e6;
  std::size_t points = 2001;
};

int cmd_fit(const FitArgs& a, Manifest& man, std::ostream& out, std::ostream& err) {
  const dist::Weibull w{a.shape, a.scale, a.offset};
  dist::validate(w);
  const auto grid = dist::linear_grid(0, a.t_max, a.points);
  Sink sink(a.common.output, out);
  std::ostream& os = *sink;
  std::optional<dist::Distribution> approx;
  if (a.target == "phase3") {
    std::pair<dist::PhaseType3, dist::PhaseType3> fits;
    try {
      fits = dist::fit_phase3(dist::raw_moments(w, 3));
    } catch (const dist::NoValidFit& e) {
      err << "error: " << e.what() << " (x=" << format_double(e.intermediates.x)
          << ", y=" << format_double(e.intermediates.y) << "); try --target erlang:k\n";
      return kModelError;
    }
    os << "branch,sigma,alpha,beta,max_positive,max_negative\n";
    const std::array<dist::PhaseType3, 2> br{fits.first, fits.second};
    for (int i = 0; i < 2; ++i) {
      const auto d = dist::max_cdf_diff(br[i], w, grid);
      write_csv_row(os, {std::to_string(i + 1), format_double(br[i].sigma), format_double(br[i].alpha),
                         format_double(br[i].beta), format_double(d.max_positive), format_double(d.max_negative)});
    }
    approx = dist::select_branch(fits, w, grid);
  } else if (a.target.rfind("erlang:", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(a.target.substr(7));
    } catch (const std::exception&) {
      err << "error: bad --target '" << a.target << "'\n";
      return kUsage;
    }
    if (k < 1) {
      err << "error: Erlang stage count must be >= 1\n";
      return kUsage;
    }
    const auto e = dist::fit_erlang(k, w);
    const auto d = dist::max_cdf_diff(e, w, grid);
    os << "k,lambda,max_positive,max_negative\n";
    write_csv_row(os, {std::to_string(e.k), format_double(e.lambda), format_double(d.max_positive),
                       format_double(d.max_negative)});
    approx = e;
  } else {
    err << "error: --target must be phase3 or erlang:k\n";
    return kUsage;
  }
  if (a.common.output.size() && a.common.output != "-") man.outputs.push_back(a.common.output);
  if (!a.curves.empty()) {
    std::ofstream cs(a.curves, std::ios::binary);
    if (!cs) throw std::runtime_error("cannot write '" + a.curves + "'");
    cs << "t_hr,pdf_approx,pdf_weibull,hazard_approx,hazard_weibull\n";
    for (double t : grid) {
      write_csv_row(cs, {format_double(t), format_double(dist::density(*approx, t)), format_double(dist::density(w, t)),
                         format_double(dist::hazard(*approx, t)), format_double(dist::hazard(w, t))});
    }
    man.outputs.push_back(a.curves);
  }
  return kOk;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  Common common;
  std::string config;
  std::string measure = "mttdil";
  std::string times;
  std::string method = "numeric";
  std::uint64_t seed = 1;
  double confidence = 0.99;
  double epsilon = 1e-9;
  double rel_width = 0.01;
  std::size_t state_budget = 5'000'000;
  std::size_t paths = 100000;
  std::size_t max_paths = 10'000'000;
  double per = 1000;
  bool lenient = false;
  bool timing = false;
  std::string report;
};

struct Row {
  std::string measure;
  std::optional<double> t;
  double value = 0;
  double ci = 0;
  std::string method;
  std::size_t states = 0;
};

void write_solve_csv(std::ostream& os, const std::vector<Row>& rows, std::optional<double> seconds) {
  os << "measure,t_hr,value,ci_halfwidth,method,states,seconds\n";
  for (const auto& r : rows) {
    write_csv_row(os, {r.measure, r.t ? format_double(*r.t) : "", format_double(r.value), format_double(r.ci),
                       r.method, std::to_string(r.states), seconds ? format_double(*seconds) : ""});
  }
}

int cmd_solve(const SolveArgs& a, Manifest& man, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  SystemConfig cfg;
  try {
    cfg = load_config(a.config, a.lenient);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  }
  for (const auto& w : cfg.warnings) err << "warning: " << w << "\n";
  man.config_hash = config_hash(cfg.topology, cfg.models);

  if (a.measure != "mttdil" && a.measure != "ddf") {
    err << "error: --measure must be mttdil or ddf\n";
    return kUsage;
  }
  if (a.method != "numeric" && a.method != "simulate" && a.method != "decompose") {
    err << "error: --method must be numeric, simulate or decompose\n";
    return kUsage;
  }
  std::vector<double> times;
  if (a.measure == "ddf") {
    if (a.times.empty()) {
      err << "error: --measure ddf needs --times\n";
      return kUsage;
    }
    try {
      times = parse_times(a.times);
    } catch (const std::exception& e) {
      err << "error: --times: " << e.what() << "\n";
      return kUsage;
    }
    if (a.method == "decompose") {
      err << "error: --method decompose supports --measure mttdil only\n";
      return kUsage;
    }
  }

  ctmc::SolveOptions so;
  so.epsilon_u = a.epsilon;
  build::SystemOptions sys;
  sys.explore.state_budget = a.state_budget;
  sim::SimOptions sim;
  sim.seed = a.seed;
  sim.confidence = a.confidence;
  sim.relative_width = a.rel_width;
  sim.max_paths = a.max_paths;
  sim::validate(sim);
  if (a.method != "numeric") man.seed = a.seed;

  std::vector<Row> rows;
  if (a.method == "numeric") {
    ctmc::Ctmc chain;
    try {
      chain = build::build_system_ctmc(cfg.topology, cfg.models, sys);
    } catch (const ctmc::StateBudgetExceeded& e) {
      err << "error: " << e.what() << "\nhint: rerun with --method decompose or --method simulate\n";
      return kBudget;
    }
    if (a.measure == "mttdil") {
      const auto r = ctmc::mtta(chain, ctmc::kDil, so);
      rows.push_back({"mttdil", std::nullopt, r.hours, 0, "numeric", chain.size()});
    } else {
      const auto curve = ctmc::absorption_curve(chain, times, ctmc::kDil, so);
      for (std::size_t i = 0; i < times.size(); ++i)
        rows.push_back({"ddf", times[i], curve[i] * a.per, 0, "numeric", chain.size()});
    }
  } else if (a.method == "simulate") {
    const build::SystemGenerator g(cfg.topology, cfg.models, sys);
    if (a.measure == "mttdil") {
      const auto e = sim::simulate_mtta(g, sim);
      if (e.flagged) err << "warning: " << e.truncated << " paths hit the path-length limit\n";
      rows.push_back({"mttdil", std::nullopt, e.mean, e.half_width, "simulate", 0});
    } else {
      sim.min_paths = a.paths;
      sim.max_paths = a.paths;
      sim.batch = std::min<std::size_t>(a.paths, 10000);
      sim.record_samples = true;
      auto e = sim::simulate_mtta(g, sim);
      std::sort(e.samples.begin(), e.samples.end());
      const double z = boost::math::quantile(boost::math::normal(), 0.5 + a.confidence / 2);
      const double n = static_cast<double>(e.samples.size());
      for (double t : times) {
        const auto hit = std::upper_bound(e.samples.begin(), e.samples.end(), t) - e.samples.begin();
        const double p = static_cast<double>(hit) / n;
        rows.push_back({"ddf", t, p * a.per, z * std::sqrt(p * (1 - p) / n) * a.per, "simulate", 0});
      }
    }
  } else {
    hier::DecompositionPlan plan;
    plan.explore.state_budget = a.state_budget;
    plan.solve = so;
    plan.sim = sim;
    hier::DecompositionResult r;
    try {
      r = hier::decompose_solve(cfg.topology, cfg.models, plan);
    } catch (const ctmc::StateBudgetExceeded& e) {
      err << "error: " << e.what() << "\n";
      return kBudget;
    }
    std::size_t states = 0;
    for (const auto& rec : r.report) states = std::max(states, rec.states);
    rows.push_back({"mttdil", std::nullopt, r.mttdil_hr, r.ci_halfwidth, "decompose", states});
    if (!a.report.empty()) {
      std::ofstream rs(a.report, std::ios::binary);
      if (!rs) throw std::runtime_error("cannot write '" + a.report + "'");
      hier::write_report_csv(rs, r);
      man.outputs.push_back(a.report);
    }
  }

  std::optional<double> seconds;
  if (a.timing) seconds = std::chrono::duration<double>(Clock::now() - start).count();
  Sink sink(a.common.output, out);
  write_solve_csv(*sink, rows, seconds);
  if (!a.common.output.empty() && a.common.output != "-") man.outputs.push_back(a.common.output);
  return kOk;
}

// ---------------------------------------------------------------- span

struct SpanArgs {
  Common common;
  int n = 0;
  int m = 0;
  int f = 1;
  std::vector<int> capacities;
  bool sweep = false;
  std::string config;
  int max_enclosures = 0;
  bool lenient = false;
};

int cmd_span(const SpanArgs& a, Manifest& man, std::ostream& out, std::ostream& err) {
  if (!a.sweep) {
    if (a.n < 1 || a.m < 1 || a.f < 1) {
      err << "error: span needs -n, -m, -f >= 1\n";
      return kUsage;
    }
    design::SpanPlan p;
    try {
      p = design::greedy_span(a.n, a.m, a.f, a.capacities);
    } catch (const std::invalid_argument& e) {
      err << "error: " << e.what() << "\n";
      return kModelError;
    }
    Sink sink(a.common.output, out);
    *sink << design::format_plan(p) << "\n";
    if (p.fallback) err << "note: an enclosure below f disks of capacity; remainder placed in residual capacity\n";
    return kOk;
  }
  design::SpanTopologyOptions o;
  build::SystemModels models;
  int n = a.n;
  if (!a.config.empty()) {
    SystemConfig cfg;
    try {
      cfg = load_config(a.config, a.lenient);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return kModelError;
    }
    man.config_hash = config_hash(cfg.topology, cfg.models);
    const auto& t = cfg.topology;
    if (t.groups().empty()) {
      err << "error: config has no RAID group to sweep\n";
      return kModelError;
    }
    const auto& g = t.groups().front();
    o.level = g.level;
    const auto& d = t.at(g.members.front());
    if (d.mttf_hr) o.disk_mttf_hr = *d.mttf_hr;
    o.disk_mttr_hr = d.mttr_hr;
    if (t.enclosure_policy()) o.policy = *t.enclosure_policy();
    models = cfg.models;
    if (n < 1) n = static_cast<int>(g.members.size());
  } else if (a.f == 2) {
    o.level = topo::RaidLevel::Raid6;
  }
  if (n < 1) {
    err << "error: --sweep needs -n or --config\n";
    return kUsage;
  }
  const int max_m = a.max_enclosures > 0 ? a.max_enclosures : (a.m > 0 ? a.m : n);
  const auto rows = design::span_sweep(n, max_m, o, models);
  Sink sink(a.common.output, out);
  design::write_sweep_csv(*sink, rows);
  if (!a.common.output.empty() && a.common.output != "-") man.outputs.push_back(a.common.output);
  return kOk;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  Common common;
  std::vector<std::string> configs;
  std::vector<std::string> notes;
  std::size_t baseline = 0;
  std::size_t state_budget = 5'000'000;
  std::uint64_t seed = 1;
  bool lenient = false;
};

int cmd_compare(const CompareArgs& a, Manifest& man, std::ostream& out, std::ostream& err) {
  if (a.configs.size() < 2) {
    err << "error: compare needs at least two configs\n";
    return kUsage;
  }
  std::vector<design::Config> configs;
  std::string hashes;
  for (std::size_t i = 0; i < a.configs.size(); ++i) {
    SystemConfig cfg;
    try {
      cfg = load_config(a.configs[i], a.lenient);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return kModelError;
    }
    hashes += (hashes.empty() ? "" : ",") + config_hash(cfg.topology, cfg.models);
    configs.push_back({a.configs[i], std::move(cfg.topology), cfg.models, i < a.notes.size() ? a.notes[i] : ""});
  }
  man.config_hash = hashes;
  man.seed = a.seed;
  design::CompareOptions o;
  o.baseline = a.baseline;
  o.explore.state_budget = a.state_budget;
  o.sim.seed = a.seed;
  const auto rows = design::compare_configs(configs, o);
  Sink sink(a.common.output, out);
  design::write_comparison_csv(*sink, rows);
  if (!a.common.output.empty() && a.common.output != "-") man.outputs.push_back(a.common.output);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"raidrel: reliability models of RAID storage systems"};
  app.set_version_flag("--version", RAIDREL_VERSION);
  app.require_subcommand(1);

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "fit a phase-type or Erlang model to a Weibull law");
  f->add_option("--shape", fit.shape, "Weibull shape")->required();
  f->add_option("--scale", fit.scale, "Weibull scale (hr)")->required();
  f->add_option("--offset", fit.offset, "Weibull location (hr)");
  f->add_option("--target", fit.target, "phase3 or erlang:k");
  f->add_option("--curves", fit.curves, "CSV of pdf and hazard curves");
  f->add_option("--t-max", fit.t_max, "grid end (hr)");
  f->add_option("--points", fit.points, "grid points")->check(CLI::Range(2, 10'000'000));
  add_common(f, fit.common);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "MTTDIL or DDF of a configured system");
  s->add_option("config", solve.config, "JSON config")->required();
  s->add_option("--measure", solve.measure, "mttdil or ddf");
  s->add_option("--times", solve.times, "times for ddf, e.g. 1y..10y or 100h,2d");
  s->add_option("--method", solve.method, "numeric, simulate or decompose");
  s->add_option("--seed", solve.seed, "simulation seed");
  s->add_option("--confidence", solve.confidence, "simulation confidence level")->check(CLI::Range(0.5, 0.9999));
  s->add_option("--epsilon", solve.epsilon, "uniformization truncation error")->check(CLI::PositiveNumber);
  s->add_option("--rel-width", solve.rel_width, "simulation relative CI half-width target")
      ->check(CLI::PositiveNumber);
  s->add_option("--state-budget", solve.state_budget, "explicit state limit");
  s->add_option("--paths", solve.paths, "paths for simulated ddf")->check(CLI::Range(10, 1'000'000'000));
  s->add_option("--max-paths", solve.max_paths, "path cap for simulated mttdil")->check(CLI::PositiveNumber);
  s->add_option("--per", solve.per, "ddf scale (groups)")->check(CLI::PositiveNumber);
  s->add_option("--report", solve.report, "per-level CSV for --method decompose");
  s->add_flag("--lenient", solve.lenient, "warn on unknown config keys");
  s->add_flag("--timing", solve.timing, "fill the seconds column");
  add_common(s, solve.common);

  SpanArgs span;
  auto* sp = app.add_subcommand("span", "greedy placement of a group across enclosures");
  sp->add_option("-n", span.n, "disks");
  sp->add_option("-m", span.m, "enclosures");
  sp->add_option("-f", span.f, "fault tolerance");
  sp->add_option("--capacities", span.capacities, "per-enclosure capacity")->delimiter(',');
  sp->add_flag("--sweep", span.sweep, "MTTDIL of every partition");
  sp->add_option("--config", span.config, "config supplying the group and failure laws for --sweep");
  sp->add_option("--max-enclosures", span.max_enclosures, "sweep partitions into at most this many enclosures");
  sp->add_flag("--lenient", span.lenient, "warn on unknown config keys");
  add_common(sp, span.common);

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "rank configurations by MTTDIL");
  c->add_option("configs", cmp.configs, "JSON configs; the first is the baseline unless --baseline")->required();
  c->add_option("--note", cmp.notes, "extra-cost note per config, in order");
  c->add_option("--baseline", cmp.baseline, "index of the baseline config");
  c->add_option("--state-budget", cmp.state_budget, "explicit state limit");
  c->add_option("--seed", cmp.seed, "simulation seed for configs over budget");
  c->add_flag("--lenient", cmp.lenient, "warn on unknown config keys");
  add_common(c, cmp.common);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << RAIDREL_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands())
      if (sub->parsed()) err << sub->help();
    return kUsage;
  }

  Manifest man;
  man.args = args;
  Common* common = nullptr;
  int code = kOk;
  try {
    if (f->parsed()) {
      man.command = "fit";
      common = &fit.common;
      code = cmd_fit(fit, man, out, err);
    } else if (s->parsed()) {
      man.command = "solve";
      common = &solve.common;
      code = cmd_solve(solve, man, out, err);
    } else if (sp->parsed()) {
      man.command = "span";
      common = &span.common;
      code = cmd_span(span, man, out, err);
    } else {
      man.command = "compare";
      common = &cmp.common;
      code = cmd_compare(cmp, man, out, err);
    }
    if (code == kOk) write_manifest(man, common->manifest, common->output, err);
  } catch (const ctmc::StateBudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return kBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  }
  return code;
}

}  // namespace raidrel::cli
