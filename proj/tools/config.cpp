#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace raidrel::cli {

using nlohmann::json;

namespace {

constexpr double kHoursPerYear = 8760.0;

class Reader {
 public:
  Reader(const json& j, std::string where, bool lenient, std::vector<std::string>& warnings)
      : j_(j), where_(std::move(where)), lenient_(lenient), warnings_(warnings) {
    if (!j_.is_object()) fail("expected an object");
  }

  void allow(std::initializer_list<const char*> keys) {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (ok.count(k)) continue;
      const std::string msg = where_ + ": unknown key '" + k + "'";
      if (!lenient_) throw ConfigError(msg);
      warnings_.push_back(msg);
    }
  }

  bool has(const char* k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  const json& at(const char* k) const {
    if (!has(k)) fail(std::string("missing key '") + k + "'");
    return j_.at(k);
  }

  double number(const char* k) const { return as_number(at(k), path(k)); }
  double number_or(const char* k, double v) const { return has(k) ? number(k) : v; }
  std::string string(const char* k) const {
    const auto& v = at(k);
    if (!v.is_string()) throw ConfigError(path(k) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string_or(const char* k, std::string v) const { return has(k) ? string(k) : v; }
  bool boolean_or(const char* k, bool v) const {
    if (!has(k)) return v;
    if (!at(k).is_boolean()) throw ConfigError(path(k) + ": expected true or false");
    return at(k).get<bool>();
  }
  int integer(const char* k) const {
    const double v = number(k);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(path(k) + ": expected an integer");
    return static_cast<int>(v);
  }

  std::string path(const std::string& k) const { return where_ + "." + k; }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

  static double as_number(const json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      std::string s = v.get<std::string>();
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      if (s == "inf" || s == "infinity") return topo::kNever;
    }
    throw ConfigError(where + ": expected a number (or \"inf\")");
  }

 private:
  const json& j_;
  std::string where_;
  bool lenient_;
  std::vector<std::string>& warnings_;
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

dist::PhaseType3 read_ph(const Reader& r) { return {r.number("sigma"), r.number("alpha"), r.number("beta")}; }

dist::ErlangK read_erlang(const json& j, const std::string& where, bool lenient, std::vector<std::string>& w) {
  Reader r(j, where, lenient, w);
  r.allow({"k", "lambda"});
  return {r.integer("k"), r.number("lambda")};
}

build::DiskModelSpec read_disk_model(const json& j, bool lenient, std::vector<std::string>& w) {
  Reader r(j, "disk_model", lenient, w);
  const std::string type = lower(r.string("type"));
  if (type == "exponential") {
    r.allow({"type", "mttf_hr"});
    const double mttf = r.number("mttf_hr");
    if (!(mttf > 0)) r.fail("mttf_hr must be > 0");
    return build::ExponentialDisk{std::isinf(mttf) ? 0.0 : 1.0 / mttf};
  }
  if (type == "three_state") {
    r.allow({"type", "sigma", "alpha", "beta"});
    auto d = build::default_three_state();
    if (r.has("sigma") || r.has("alpha") || r.has("beta")) d.ph = read_ph(r);
    return d;
  }
  if (type == "detailed") {
    r.allow({"type", "ttop", "ttld_mean_hr", "ttscr", "ttr", "op_failure_with_defect", "scrub"});
    auto d = build::default_detailed();
    if (r.has("ttop")) {
      Reader p(r.at("ttop"), "disk_model.ttop", lenient, w);
      p.allow({"sigma", "alpha", "beta"});
      d.ttop = read_ph(p);
    }
    if (r.has("ttld_mean_hr")) {
      const double m = r.number("ttld_mean_hr");
      if (!(m > 0)) r.fail("ttld_mean_hr must be > 0");
      d.ttld_rate = std::isinf(m) ? 0.0 : 1.0 / m;
    }
    if (r.has("ttscr")) d.ttscr = read_erlang(r.at("ttscr"), "disk_model.ttscr", lenient, w);
    if (r.has("ttr")) d.ttr = read_erlang(r.at("ttr"), "disk_model.ttr", lenient, w);
    d.op_failure_with_defect = r.boolean_or("op_failure_with_defect", d.op_failure_with_defect);
    d.scrub = r.boolean_or("scrub", d.scrub);
    return d;
  }
  throw ConfigError("disk_model.type: expected exponential, three_state or detailed");
}

std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

dist::Distribution distribution_from_json(const json& j, const std::string& where) {
  std::vector<std::string> w;
  Reader r(j, where, false, w);
  const std::string type = lower(r.string("type"));
  dist::Distribution d;
  if (type == "exponential") {
    r.allow({"type", "rate"});
    d = dist::Exponential{r.number("rate")};
  } else if (type == "weibull") {
    r.allow({"type", "shape", "scale", "offset"});
    d = dist::Weibull{r.number("shape"), r.number("scale"), r.number_or("offset", 0)};
  } else if (type == "erlang") {
    r.allow({"type", "k", "lambda"});
    d = dist::ErlangK{r.integer("k"), r.number("lambda")};
  } else if (type == "phase3") {
    r.allow({"type", "sigma", "alpha", "beta"});
    d = read_ph(r);
  } else {
    r.fail("type must be exponential, weibull, erlang or phase3");
  }
  try {
    dist::validate(d);
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return d;
}

json distribution_to_json(const dist::Distribution& d) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, dist::Exponential>) {
          return {{"type", "exponential"}, {"rate", x.rate}};
        } else if constexpr (std::is_same_v<T, dist::Weibull>) {
          return {{"type", "weibull"}, {"shape", x.shape}, {"scale", x.scale}, {"offset", x.offset}};
        } else if constexpr (std::is_same_v<T, dist::ErlangK>) {
          return {{"type", "erlang"}, {"k", x.k}, {"lambda", x.lambda}};
        } else {
          return {{"type", "phase3"}, {"sigma", x.sigma}, {"alpha", x.alpha}, {"beta", x.beta}};
        }
      },
      d);
}

SystemConfig parse_config(std::string_view text, bool lenient, std::string_view source) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::size_t start = 0;
    for (std::size_t l = 1; l < line; ++l) start = text.find('\n', start) + 1;
    const auto end = text.find('\n', start);
    std::ostringstream os;
    os << source << ":" << line << ":" << col << ": JSON parse error\n  "
       << text.substr(start, end == std::string_view::npos ? text.size() - start : end - start) << "\n  "
       << std::string(col > 1 ? col - 1 : 0, ' ') << "^";
    throw ConfigError(os.str());
  }

  SystemConfig cfg;
  auto& w = cfg.warnings;
  Reader top(doc, std::string(source), lenient, w);
  top.allow({"components", "links", "raid_groups", "enclosure_policy", "disk_model", "rebuild", "correlation"});

  auto& t = cfg.topology;
  if (top.has("enclosure_policy")) {
    Reader r(top.at("enclosure_policy"), "enclosure_policy", lenient, w);
    r.allow({"capacity", "threshold", "mttf_below_hr", "mttf_above_hr"});
    topo::EnclosurePolicy p;
    p.capacity = r.has("capacity") ? r.integer("capacity") : p.capacity;
    p.threshold = r.has("threshold") ? r.integer("threshold") : p.threshold;
    p.mttf_below_hr = r.number_or("mttf_below_hr", p.mttf_below_hr);
    p.mttf_above_hr = r.number_or("mttf_above_hr", p.mttf_above_hr);
    t.set_enclosure_policy(p);
  }

  const auto& comps = top.at("components");
  if (!comps.is_array()) throw ConfigError("components: expected an array");
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string where = "components[" + std::to_string(i) + "]";
    Reader r(comps[i], where, lenient, w);
    r.allow({"id", "kind", "mttf_hr", "distribution", "mttr_hr", "enclosure"});
    topo::ComponentSpec c;
    c.id = r.string("id");
    try {
      c.kind = topo::parse_kind(r.string("kind"));
    } catch (const std::exception& e) {
      throw ConfigError(r.path("kind") + ": " + e.what());
    }
    if (r.has("mttf_hr")) c.mttf_hr = r.number("mttf_hr");
    if (r.has("distribution")) c.lifetime = distribution_from_json(r.at("distribution"), r.path("distribution"));
    c.mttr_hr = r.number_or("mttr_hr", c.mttr_hr);
    c.enclosure = r.string_or("enclosure", "");
    try {
      t.add_component(std::move(c));
    } catch (const std::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  if (top.has("links")) {
    const auto& links = top.at("links");
    if (!links.is_array()) throw ConfigError("links: expected an array");
    for (std::size_t i = 0; i < links.size(); ++i) {
      const std::string where = "links[" + std::to_string(i) + "]";
      Reader r(links[i], where, lenient, w);
      r.allow({"from", "to"});
      try {
        t.add_link(r.string("from"), r.string("to"));
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
  }

  if (top.has("raid_groups")) {
    const auto& groups = top.at("raid_groups");
    if (!groups.is_array()) throw ConfigError("raid_groups: expected an array");
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const std::string where = "raid_groups[" + std::to_string(i) + "]";
      Reader r(groups[i], where, lenient, w);
      r.allow({"id", "level", "members"});
      topo::RaidGroup g;
      g.id = r.string("id");
      try {
        g.level = topo::parse_level(r.string("level"));
      } catch (const std::exception& e) {
        throw ConfigError(r.path("level") + ": " + e.what());
      }
      const auto& mem = r.at("members");
      if (!mem.is_array()) throw ConfigError(r.path("members") + ": expected an array");
      for (const auto& m : mem) {
        if (!m.is_string()) throw ConfigError(r.path("members") + ": expected disk ids");
        g.members.push_back(m.get<std::string>());
      }
      try {
        t.add_group(std::move(g));
      } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
      }
    }
  }

  if (top.has("disk_model")) cfg.models.disk = read_disk_model(top.at("disk_model"), lenient, w);
  if (top.has("rebuild")) {
    Reader r(top.at("rebuild"), "rebuild", lenient, w);
    r.allow({"mean_hr", "uer_prob"});
    try {
      cfg.models.rebuild = build::RebuildSpec::from_mean(r.number_or("mean_hr", 30), r.number_or("uer_prob", 0));
      build::validate(*cfg.models.rebuild);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("rebuild: ") + e.what());
    }
  }
  if (top.has("correlation")) {
    Reader r(top.at("correlation"), "correlation", lenient, w);
    r.allow({"p"});
    cfg.models.correlation.p = r.number_or("p", 0);
  }

  try {
    if (cfg.models.disk) build::validate(*cfg.models.disk);
    build::validate(cfg.models.correlation);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const auto diags = topo::validate(t);
  if (!diags.empty()) {
    std::string msg = std::string(source) + ": invalid topology";
    for (const auto& d : diags) msg += "\n  " + d.element + ": " + d.message;
    throw ConfigError(msg);
  }
  return cfg;
}

SystemConfig load_config(const std::string& path, bool lenient) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), lenient, path);
}

namespace {

json number_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

}  // namespace

json emit_config(const topo::Topology& t, const build::SystemModels& m) {
  json doc = json::object();
  json comps = json::array();
  for (const auto& c : t.components()) {
    json j = {{"id", c.id}, {"kind", std::string(topo::to_string(c.kind))}, {"mttr_hr", c.mttr_hr}};
    if (c.mttf_hr) j["mttf_hr"] = number_json(*c.mttf_hr);
    if (c.lifetime) j["distribution"] = distribution_to_json(*c.lifetime);
    if (!c.enclosure.empty()) j["enclosure"] = c.enclosure;
    comps.push_back(std::move(j));
  }
  doc["components"] = std::move(comps);
  json links = json::array();
  for (const auto& l : t.links()) links.push_back({{"from", l.from}, {"to", l.to}});
  doc["links"] = std::move(links);
  json groups = json::array();
  for (const auto& g : t.groups())
    groups.push_back({{"id", g.id}, {"level", std::string(topo::to_string(g.level))}, {"members", g.members}});
  doc["raid_groups"] = std::move(groups);
  if (const auto& p = t.enclosure_policy()) {
    doc["enclosure_policy"] = {{"capacity", p->capacity},
                               {"threshold", p->threshold},
                               {"mttf_below_hr", number_json(p->mttf_below_hr)},
                               {"mttf_above_hr", number_json(p->mttf_above_hr)}};
  }
  if (m.disk) {
    std::visit(
        [&](const auto& d) {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, build::ExponentialDisk>) {
            doc["disk_model"] = {{"type", "exponential"}, {"mttf_hr", number_json(d.rate > 0 ? 1.0 / d.rate : topo::kNever)}};
          } else if constexpr (std::is_same_v<T, build::ThreeStateDisk>) {
            doc["disk_model"] = {{"type", "three_state"}, {"sigma", d.ph.sigma}, {"alpha", d.ph.alpha}, {"beta", d.ph.beta}};
          } else {
            doc["disk_model"] = {
                {"type", "detailed"},
                {"ttop", {{"sigma", d.ttop.sigma}, {"alpha", d.ttop.alpha}, {"beta", d.ttop.beta}}},
                {"ttld_mean_hr", number_json(d.ttld_rate > 0 ? 1.0 / d.ttld_rate : topo::kNever)},
                {"ttscr", {{"k", d.ttscr.k}, {"lambda", d.ttscr.lambda}}},
                {"ttr", {{"k", d.ttr.k}, {"lambda", d.ttr.lambda}}},
                {"op_failure_with_defect", d.op_failure_with_defect},
                {"scrub", d.scrub}};
          }
        },
        *m.disk);
  }
  if (m.rebuild) doc["rebuild"] = {{"mean_hr", 1.0 / m.rebuild->rate}, {"uer_prob", m.rebuild->uer_prob}};
  doc["correlation"] = {{"p", m.correlation.p}};
  return doc;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const topo::Topology& t, const build::SystemModels& m) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << fnv1a(emit_config(t, m).dump());
  return os.str();
}

double parse_time(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty time");
  double scale = 1;
  const char u = static_cast<char>(std::tolower(static_cast<unsigned char>(s.back())));
  if (u == 'h' || u == 'd' || u == 'y') {
    scale = u == 'h' ? 1 : (u == 'd' ? 24 : kHoursPerYear);
    s.remove_suffix(1);
  }
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !(v >= 0) || std::isinf(v))
    throw std::invalid_argument("bad time '" + std::string(s) + "'");
  return v * scale;
}

std::vector<double> parse_times(std::string_view s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto end = s.find(',', start);
    if (end == std::string_view::npos) end = s.size();
    std::string_view item = s.substr(start, end - start);
    const auto dots = item.find("..");
    if (dots == std::string_view::npos) {
      out.push_back(parse_time(item));
    } else {
      std::string_view rest = item.substr(dots + 2);
      const double a = parse_time(item.substr(0, dots));
      double step = a;
      const auto colon = rest.find(':');
      if (colon != std::string_view::npos) {
        step = parse_time(rest.substr(colon + 1));
        rest = rest.substr(0, colon);
      }
      const double b = parse_time(rest);
      if (!(step > 0)) throw std::invalid_argument("range step must be > 0");
      if (b < a) throw std::invalid_argument("range end before start");
      const auto k = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
      if (k > 1'000'000) throw std::invalid_argument("range has too many points");
      for (std::size_t i = 0; i <= k; ++i) out.push_back(a + static_cast<double>(i) * step);
    }
    start = end + 1;
  }
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] < out[i - 1]) throw std::invalid_argument("times must be ascending");
  return out;
}

}  // namespace raidrel::cli
