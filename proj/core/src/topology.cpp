#include "raidrel/topology.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>

namespace raidrel::topo {

std::string_view to_string(ComponentKind k) {
  switch (k) {
    case ComponentKind::Controller: return "controller";
    case ComponentKind::Expander: return "expander";
    case ComponentKind::Enclosure: return "enclosure";
    case ComponentKind::Interconnect: return "interconnect";
    case ComponentKind::Disk: return "disk";
  }
  return "?";
}

std::string_view to_string(RaidLevel l) {
  switch (l) {
    case RaidLevel::Raid1: return "RAID1";
    case RaidLevel::Raid5: return "RAID5";
    case RaidLevel::Raid6: return "RAID6";
    case RaidLevel::Raid10: return "RAID10";
  }
  return "?";
}

ComponentKind parse_kind(std::string_view s) {
  for (auto k : {ComponentKind::Controller, ComponentKind::Expander, ComponentKind::Enclosure,
                 ComponentKind::Interconnect, ComponentKind::Disk})
    if (s == to_string(k)) return k;
  throw TopologyError("unknown component kind '" + std::string(s) + "'");
}

RaidLevel parse_level(std::string_view s) {
  std::string u(s);
  for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (auto l : {RaidLevel::Raid1, RaidLevel::Raid5, RaidLevel::Raid6, RaidLevel::Raid10})
    if (u == to_string(l)) return l;
  throw TopologyError("unknown RAID level '" + std::string(s) + "'");
}

int RaidGroup::fault_tolerance() const {
  switch (level) {
    case RaidLevel::Raid1: return static_cast<int>(members.size()) - 1;
    case RaidLevel::Raid5: return 1;
    case RaidLevel::Raid6: return 2;
    case RaidLevel::Raid10: return 1;
  }
  return 0;
}

bool RaidGroup::lost(std::span<const char> inaccessible) const {
  if (level == RaidLevel::Raid10) {
    for (std::size_t i = 0; i + 1 < inaccessible.size(); i += 2)
      if (inaccessible[i] && inaccessible[i + 1]) return true;
    return false;
  }
  const auto down = std::count_if(inaccessible.begin(), inaccessible.end(), [](char c) { return c != 0; });
  return down > fault_tolerance();
}

bool RaidGroup::loses_on_failure(std::size_t who, std::span<const char> inaccessible,
                                 std::span<const char> latent) const {
  if (level == RaidLevel::Raid10) {
    const std::size_t mate = who ^ 1U;
    if (mate >= inaccessible.size()) return false;
    return inaccessible[mate] || latent[mate];
  }
  int a = 0;
  int l = 0;
  for (std::size_t i = 0; i < inaccessible.size(); ++i) {
    if (i == who) continue;
    if (inaccessible[i])
      ++a;
    else if (latent[i])
      ++l;
  }
  const int f = fault_tolerance();
  return a >= f - 1 && a + l >= f;
}

double enclosure_rate(const EnclosurePolicy& p, int occupancy) {
  if (occupancy <= 0 || occupancy > p.capacity) throw TopologyError("enclosure occupancy out of range");
  return 1.0 / (occupancy <= p.threshold ? p.mttf_below_hr : p.mttf_above_hr);
}

void Topology::add_component(ComponentSpec c) {
  index_.emplace(c.id, components_.size());
  components_.push_back(std::move(c));
}

void Topology::add_link(std::string from, std::string to) { links_.push_back({std::move(from), std::move(to)}); }

void Topology::add_group(RaidGroup g) { groups_.push_back(std::move(g)); }

std::optional<std::size_t> Topology::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Topology::index_of(std::string_view id) const {
  auto i = find(id);
  if (!i) throw TopologyError("unknown component '" + std::string(id) + "'");
  return *i;
}

std::vector<std::size_t> Topology::children(std::size_t i) const {
  std::vector<std::size_t> out;
  for (const auto& l : links_)
    if (l.from == components_[i].id)
      if (auto j = find(l.to)) out.push_back(*j);
  return out;
}

std::vector<std::size_t> Topology::parents(std::size_t i) const {
  std::vector<std::size_t> out;
  for (const auto& l : links_)
    if (l.to == components_[i].id)
      if (auto j = find(l.from)) out.push_back(*j);
  return out;
}

int Topology::occupancy(std::string_view enclosure_id) const {
  int n = 0;
  for (const auto& c : components_)
    if (c.kind == ComponentKind::Disk && c.enclosure == enclosure_id) ++n;
  return n;
}

double Topology::failure_rate(std::size_t i) const {
  const auto& c = components_[i];
  if (c.lifetime) return 1.0 / dist::mean(*c.lifetime);
  if (c.mttf_hr) return std::isinf(*c.mttf_hr) ? 0.0 : 1.0 / *c.mttf_hr;
  if (c.kind == ComponentKind::Enclosure && policy_) return enclosure_rate(*policy_, occupancy(c.id));
  throw TopologyError("component '" + c.id + "' has no failure rate");
}

double Topology::repair_rate(std::size_t i) const {
  const double r = components_[i].mttr_hr;
  return std::isinf(r) ? 0.0 : 1.0 / r;
}

std::vector<std::size_t> Topology::disks() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < components_.size(); ++i)
    if (components_[i].kind == ComponentKind::Disk) out.push_back(i);
  return out;
}

namespace {

bool can_feed(ComponentKind from, ComponentKind to) {
  if (from == ComponentKind::Disk || from == ComponentKind::Enclosure) return false;
  return to != ComponentKind::Controller && to != ComponentKind::Enclosure;
}

// all root-to-disk paths through parents, as index sequences ending at the disk
std::vector<std::vector<std::size_t>> raw_paths(const Topology& t, std::size_t disk) {
  std::vector<std::vector<std::size_t>> parents(t.size());
  for (const auto& l : t.links()) {
    auto a = t.find(l.from);
    auto b = t.find(l.to);
    if (a && b) parents[*b].push_back(*a);
  }
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> stack{disk};
  std::vector<char> on_path(t.size(), 0);
  std::function<void(std::size_t)> walk = [&](std::size_t v) {
    if (t.components()[v].kind == ComponentKind::Controller) {
      out.emplace_back(stack.rbegin(), stack.rend());
      return;
    }
    on_path[v] = 1;
    for (std::size_t p : parents[v]) {
      if (on_path[p]) continue;
      stack.push_back(p);
      walk(p);
      stack.pop_back();
    }
    on_path[v] = 0;
  };
  walk(disk);
  // drop paths whose component set strictly contains another path's set
  std::vector<std::vector<std::size_t>> sorted(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    sorted[i] = out[i];
    std::sort(sorted[i].begin(), sorted[i].end());
  }
  std::vector<std::vector<std::size_t>> minimal;
  for (std::size_t i = 0; i < out.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < out.size() && !dominated; ++j)
      if (i != j && sorted[j].size() < sorted[i].size() &&
          std::includes(sorted[i].begin(), sorted[i].end(), sorted[j].begin(), sorted[j].end()))
        dominated = true;
    if (!dominated) minimal.push_back(out[i]);
  }
  std::sort(minimal.begin(), minimal.end());
  return minimal;
}

}  // namespace

std::vector<Diagnostic> validate(const Topology& t) {
  std::vector<Diagnostic> d;
  const auto& comps = t.components();

  std::set<std::string> seen;
  for (const auto& c : comps) {
    if (c.id.empty()) d.push_back({"<component>", "empty component id"});
    if (!seen.insert(c.id).second) d.push_back({c.id, "duplicate component id '" + c.id + "'"});
    if (c.mttf_hr && !(*c.mttf_hr > 0)) d.push_back({c.id, "mttf must be > 0"});
    if (!(c.mttr_hr > 0)) d.push_back({c.id, "mttr must be > 0"});
    if (c.lifetime) {
      try {
        dist::validate(*c.lifetime);
      } catch (const std::exception& e) {
        d.push_back({c.id, std::string("invalid lifetime: ") + e.what()});
      }
    }
    if (!c.mttf_hr && !c.lifetime && !(c.kind == ComponentKind::Enclosure && t.enclosure_policy()))
      d.push_back({c.id, "no mttf or lifetime given"});
    if (!c.enclosure.empty()) {
      auto e = t.find(c.enclosure);
      if (!e || comps[*e].kind != ComponentKind::Enclosure)
        d.push_back({c.id, "enclosure '" + c.enclosure + "' is not an enclosure component"});
    }
    if (c.kind == ComponentKind::Disk && c.enclosure.empty()) d.push_back({c.id, "disk is not inside an enclosure"});
  }

  if (const auto& p = t.enclosure_policy()) {
    if (p->capacity < 1 || p->threshold < 1 || p->threshold > p->capacity)
      d.push_back({"enclosure_policy", "need 1 <= threshold <= capacity"});
    if (!(p->mttf_above_hr > 0) || !(p->mttf_below_hr >= p->mttf_above_hr))
      d.push_back({"enclosure_policy", "need mttf_below >= mttf_above > 0"});
    for (const auto& c : comps)
      if (c.kind == ComponentKind::Enclosure && t.occupancy(c.id) > p->capacity)
        d.push_back({c.id, "over capacity (" + std::to_string(t.occupancy(c.id)) + " disks, capacity " +
                               std::to_string(p->capacity) + ")"});
  }

  bool links_ok = true;
  for (const auto& l : t.links()) {
    auto a = t.find(l.from);
    auto b = t.find(l.to);
    if (!a) d.push_back({l.from, "link from unknown component"});
    if (!b) d.push_back({l.to, "link to unknown component"});
    if (!a || !b) {
      links_ok = false;
      continue;
    }
    if (!can_feed(comps[*a].kind, comps[*b].kind))
      d.push_back({l.from + "->" + l.to, "link not allowed between " + std::string(to_string(comps[*a].kind)) +
                                             " and " + std::string(to_string(comps[*b].kind))});
  }

  if (links_ok) {
    // cycle check by Kahn's algorithm
    std::vector<int> indeg(t.size(), 0);
    std::vector<std::vector<std::size_t>> out(t.size());
    for (const auto& l : t.links()) {
      const auto a = t.index_of(l.from), b = t.index_of(l.to);
      out[a].push_back(b);
      ++indeg[b];
    }
    std::vector<std::size_t> q;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (indeg[i] == 0) q.push_back(i);
    std::size_t visited = 0;
    while (!q.empty()) {
      auto v = q.back();
      q.pop_back();
      ++visited;
      for (auto w : out[v])
        if (--indeg[w] == 0) q.push_back(w);
    }
    if (visited != t.size()) d.push_back({"<links>", "links contain a cycle"});
    else
      for (std::size_t i : t.disks())
        if (raw_paths(t, i).empty()) d.push_back({comps[i].id, "unreachable disk (no controller path)"});
  }

  std::map<std::string, std::string> owner;
  for (const auto& g : t.groups()) {
    const int f = g.fault_tolerance();
    if (static_cast<int>(g.members.size()) < f + 1 || g.members.size() < 2)
      d.push_back({g.id, "group has too few members for its RAID level"});
    if (g.level == RaidLevel::Raid10 && g.members.size() % 2 != 0)
      d.push_back({g.id, "RAID10 needs an even number of members"});
    for (const auto& m : g.members) {
      auto i = t.find(m);
      if (!i || comps[*i].kind != ComponentKind::Disk) {
        d.push_back({g.id, "member '" + m + "' is not a disk"});
        continue;
      }
      auto [it, fresh] = owner.emplace(m, g.id);
      if (!fresh) d.push_back({m, "disk belongs to groups '" + it->second + "' and '" + g.id + "'"});
    }
  }
  return d;
}

void require_valid(const Topology& t) {
  auto d = validate(t);
  if (d.empty()) return;
  std::string msg = "invalid topology:";
  for (const auto& x : d) msg += "\n  " + x.element + ": " + x.message;
  throw TopologyError(msg);
}

std::vector<std::vector<std::string>> access_paths(const Topology& t, std::string_view disk_id) {
  const std::size_t i = t.index_of(disk_id);
  if (t.components()[i].kind != ComponentKind::Disk) throw TopologyError("'" + std::string(disk_id) + "' is not a disk");
  auto p = raw_paths(t, i);
  if (p.empty()) throw TopologyError("disk '" + std::string(disk_id) + "' has no controller path");
  std::vector<std::vector<std::string>> out;
  for (const auto& path : p) {
    std::vector<std::string> ids;
    for (auto k : path) ids.push_back(t.components()[k].id);
    out.push_back(std::move(ids));
  }
  return out;
}

PathTable::PathTable(const Topology& t) {
  for (std::size_t i : t.disks()) paths_[i] = raw_paths(t, i);
}

Topology series_reduce(const Topology& t, std::vector<std::vector<std::string>>* flagged) {
  const auto& comps = t.components();
  const std::size_t n = t.size();
  std::vector<std::vector<std::size_t>> out(n), in(n);
  for (const auto& l : t.links()) {
    const auto a = t.index_of(l.from), b = t.index_of(l.to);
    out[a].push_back(b);
    in[b].push_back(a);
  }
  auto mergeable_kind = [&](std::size_t i) {
    const auto& c = comps[i];
    if (c.kind == ComponentKind::Disk || c.kind == ComponentKind::Enclosure) return false;
    return !c.lifetime || std::holds_alternative<dist::Exponential>(*c.lifetime);
  };
  // structural successor: u -> v is the only link out of u and into v
  std::vector<long> next(n, -1), prev(n, -1);
  for (std::size_t u = 0; u < n; ++u) {
    if (out[u].size() != 1) continue;
    const std::size_t v = out[u][0];
    if (in[v].size() == 1 && mergeable_kind(u) && mergeable_kind(v)) {
      next[u] = static_cast<long>(v);
      prev[v] = static_cast<long>(u);
    }
  }

  std::vector<long> rep(n, -1);  // component -> index of its run head
  std::vector<std::vector<std::size_t>> runs;
  for (std::size_t h = 0; h < n; ++h) {
    if (prev[h] != -1 || next[h] == -1) continue;
    std::vector<std::size_t> run{h};
    std::string encl = comps[h].enclosure;
    for (long v = next[h]; v != -1; v = next[static_cast<std::size_t>(v)]) {
      const auto& cv = comps[static_cast<std::size_t>(v)];
      const auto& last = comps[run.back()];
      const bool same_mttr = cv.mttr_hr == last.mttr_hr;
      const bool encl_ok = cv.enclosure.empty() || encl.empty() || cv.enclosure == encl;
      if (same_mttr && encl_ok) {
        run.push_back(static_cast<std::size_t>(v));
        if (encl.empty()) encl = cv.enclosure;
        continue;
      }
      if (!same_mttr && flagged) flagged->push_back({last.id, cv.id});
      runs.push_back(run);
      run = {static_cast<std::size_t>(v)};
      encl = cv.enclosure;
    }
    runs.push_back(run);
  }

  Topology r;
  if (t.enclosure_policy()) r.set_enclosure_policy(*t.enclosure_policy());
  std::vector<std::string> new_id(n);
  for (std::size_t i = 0; i < n; ++i) new_id[i] = comps[i].id;
  std::vector<char> absorbed(n, 0);
  std::vector<ComponentSpec> merged_at(n);
  std::vector<char> is_head(n, 0);
  for (const auto& run : runs) {
    if (run.size() < 2) continue;
    ComponentSpec m = comps[run.front()];
    double rate = 0;
    std::string id;
    for (auto k : run) {
      rate += t.failure_rate(k);
      id += (id.empty() ? "" : "+") + comps[k].id;
      if (comps[k].merged_from.empty())
        m.merged_from.push_back(comps[k].id);
      else
        m.merged_from.insert(m.merged_from.end(), comps[k].merged_from.begin(), comps[k].merged_from.end());
      if (m.enclosure.empty()) m.enclosure = comps[k].enclosure;
      absorbed[k] = 1;
      new_id[k] = id;  // patched below
    }
    m.id = id;
    m.lifetime.reset();
    m.mttf_hr = rate > 0 ? 1.0 / rate : kNever;
    for (auto k : run) new_id[k] = id;
    merged_at[run.front()] = std::move(m);
    is_head[run.front()] = 1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (is_head[i])
      r.add_component(merged_at[i]);
    else if (!absorbed[i])
      r.add_component(comps[i]);
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& l : t.links()) {
    const auto a = t.index_of(l.from), b = t.index_of(l.to);
    if (new_id[a] == new_id[b]) continue;
    if (seen.emplace(new_id[a], new_id[b]).second) r.add_link(new_id[a], new_id[b]);
  }
  for (const auto& g : t.groups()) r.add_group(g);
  return r;
}

std::vector<Topology> independent_partition(const Topology& t) {
  const std::size_t n = t.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) { parent[root(a)] = root(b); };
  for (const auto& l : t.links()) unite(t.index_of(l.from), t.index_of(l.to));
  for (std::size_t i = 0; i < n; ++i)
    if (!t.components()[i].enclosure.empty())
      if (auto e = t.find(t.components()[i].enclosure)) unite(i, *e);
  for (const auto& g : t.groups())
    for (std::size_t k = 1; k < g.members.size(); ++k) unite(t.index_of(g.members[0]), t.index_of(g.members[k]));

  std::vector<long> slot(n, -1);
  std::vector<Topology> parts;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = root(i);
    if (slot[r] == -1) {
      slot[r] = static_cast<long>(parts.size());
      parts.emplace_back();
      if (t.enclosure_policy()) parts.back().set_enclosure_policy(*t.enclosure_policy());
    }
    parts[static_cast<std::size_t>(slot[r])].add_component(t.components()[i]);
  }
  for (const auto& l : t.links())
    parts[static_cast<std::size_t>(slot[root(t.index_of(l.from))])].add_link(l.from, l.to);
  for (const auto& g : t.groups())
    if (!g.members.empty()) parts[static_cast<std::size_t>(slot[root(t.index_of(g.members.front()))])].add_group(g);
  return parts;
}

}  // namespace raidrel::topo
