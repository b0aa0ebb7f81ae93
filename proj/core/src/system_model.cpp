#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <stdexcept>

#include "raidrel/builder.hpp"

namespace raidrel::build {

namespace {

struct DiskInfo {
  std::size_t comp = 0;
  int pos = -1;  // -1: perfect disk, always up
  int model = 0;
  int group = -1;
  int member = -1;
  int encl = -1;
  double uer = 0;
  std::vector<std::vector<int>> paths;  // component indices, disk excluded
  std::vector<int> neighbours;          // other disks in the same enclosure
};

struct SymClass {
  std::size_t start = 0;
  std::size_t len = 0;
  std::size_t count = 0;
};

}  // namespace

struct SystemGenerator::Impl {
  topo::Topology t;
  std::vector<DiskPhases> models;
  std::vector<std::uint8_t> fail_entry;
  std::vector<int> pos;  // per component
  std::vector<double> fail_rate, repair_rate;
  std::vector<int> encl;
  std::vector<int> stateful;  // components with a state byte
  std::vector<DiskInfo> disks;
  std::vector<topo::RaidGroup> groups;
  std::vector<std::vector<int>> members;  // group -> disk info indices
  std::vector<int> flag_pos;
  std::vector<GroupKiller> killers;
  std::vector<SymClass> classes;
  std::size_t width = 0;
  std::size_t target = 1;
  double restore = 0;
  double p = 0;

  bool failed(const ctmc::State& s, int c) const { return pos[c] >= 0 && s[pos[c]] != 0; }
  bool down(const ctmc::State& s, int c) const { return failed(s, c) || (encl[c] >= 0 && failed(s, encl[c])); }

  bool disk_failed(const ctmc::State& s, const DiskInfo& d) const {
    return d.pos >= 0 && models[d.model].failed[s[d.pos]];
  }

  void access(const ctmc::State& s, std::vector<char>& inacc, std::vector<char>& latent) const {
    inacc.assign(disks.size(), 0);
    latent.assign(disks.size(), 0);
    for (std::size_t i = 0; i < disks.size(); ++i) {
      const auto& d = disks[i];
      bool bad = disk_failed(s, d) || (d.encl >= 0 && failed(s, d.encl));
      if (!bad) {
        bool any = false;
        for (const auto& path : d.paths) {
          bool up = true;
          for (int c : path)
            if (down(s, c)) {
              up = false;
              break;
            }
          if (up) {
            any = true;
            break;
          }
        }
        bad = !any;
      }
      inacc[i] = bad;
      latent[i] = !bad && d.pos >= 0 && models[d.model].latent[s[d.pos]];
    }
  }

  bool lost(const ctmc::State& s, int g) const { return s[flag_pos[g]] != 0; }

  std::vector<char> member_view(int g, const std::vector<char>& v) const {
    std::vector<char> out;
    out.reserve(members[g].size());
    for (int i : members[g]) out.push_back(v[i]);
    return out;
  }

  bool loses_on_failure(int g, int member, const std::vector<char>& inacc, const std::vector<char>& latent) const {
    return groups[g].loses_on_failure(static_cast<std::size_t>(member), member_view(g, inacc), member_view(g, latent));
  }

  bool group_lost(int g, const std::vector<char>& inacc) const { return groups[g].lost(member_view(g, inacc)); }

  void canonicalize(ctmc::State& s) const {
    for (const auto& c : classes) {
      if (c.count < 2) continue;
      std::uint8_t* base = s.data() + c.start;
      if (c.len == 1) {
        std::sort(base, base + c.count);
        continue;
      }
      std::vector<std::vector<std::uint8_t>> blocks(c.count);
      for (std::size_t k = 0; k < c.count; ++k) blocks[k].assign(base + k * c.len, base + (k + 1) * c.len);
      std::sort(blocks.begin(), blocks.end());
      for (std::size_t k = 0; k < c.count; ++k) std::memcpy(base + k * c.len, blocks[k].data(), c.len);
    }
  }

  // Marks newly lost groups, canonicalizes and emits unless it is a self-loop.
  void mark_lost(ctmc::State& t) const {
    std::vector<char> inacc, latent;
    access(t, inacc, latent);
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (!lost(t, static_cast<int>(g)) && group_lost(static_cast<int>(g), inacc)) t[flag_pos[g]] = 1;
  }

  // raw: skip completion, for path sampling
  void finish(bool raw, const ctmc::State& from, ctmc::State t, double rate, std::vector<ctmc::Successor>& out) const {
    if (rate <= 0) return;
    if (raw) {
      out.push_back({std::move(t), rate});
      return;
    }
    mark_lost(t);
    canonicalize(t);
    if (t == from) return;
    out.push_back({std::move(t), rate});
  }

  void successors(const ctmc::State& s, std::vector<ctmc::Successor>& out, bool raw) const {
    std::vector<char> inacc, latent;
    access(s, inacc, latent);

    for (int c : stateful) {
      ctmc::State t = s;
      if (s[pos[c]] == 0) {
        t[pos[c]] = 1;
        finish(raw, s, std::move(t), fail_rate[c], out);
      } else {
        t[pos[c]] = 0;
        finish(raw, s, std::move(t), repair_rate[c], out);
      }
    }

    for (std::size_t i = 0; i < disks.size(); ++i) {
      const auto& d = disks[i];
      if (d.pos < 0) continue;
      if (d.group >= 0 && lost(s, d.group)) continue;  // frozen until restored
      const auto& ph = models[d.model];
      const std::uint8_t cur = s[d.pos];
      for (const auto& m : ph.moves) {
        if (m.from != cur) continue;
        ctmc::State t = s;
        t[d.pos] = m.to;
        if (m.kind == DiskPhases::Kind::Internal) {
          finish(raw, s, std::move(t), m.rate, out);
        } else if (m.kind == DiskPhases::Kind::RepairDone) {
          bool exposed = false;
          if (d.group >= 0 && d.uer > 0) {
            int n_down = 0;
            for (int k : members[d.group]) n_down += inacc[k];
            exposed = n_down >= groups[d.group].fault_tolerance();
          }
          if (exposed) {
            ctmc::State bad = t;
            bad[flag_pos[d.group]] = 1;
            finish(raw, s, std::move(bad), m.rate * d.uer, out);
            finish(raw, s, std::move(t), m.rate * (1 - d.uer), out);
          } else {
            finish(raw, s, std::move(t), m.rate, out);
          }
        } else {
          const bool fatal = d.group >= 0 && loses_on_failure(d.group, d.member, inacc, latent);
          std::vector<int> partners;
          if (p > 0)
            for (int e : d.neighbours) {
              const auto& de = disks[e];
              if (de.pos < 0 || disk_failed(s, de)) continue;
              if (de.group >= 0 && lost(s, de.group)) continue;
              partners.push_back(e);
            }
          const double single = partners.empty() ? m.rate : m.rate * (1 - p);
          {
            ctmc::State a = t;
            if (fatal) a[flag_pos[d.group]] = 1;
            finish(raw, s, std::move(a), single, out);
          }
          if (partners.empty()) continue;
          const double share = m.rate * p / static_cast<double>(partners.size());
          for (int e : partners) {
            const auto& de = disks[e];
            ctmc::State b = t;
            b[de.pos] = fail_entry[de.model];
            if (fatal) b[flag_pos[d.group]] = 1;
            std::vector<char> in2 = inacc, lat2 = latent;
            in2[i] = 1;
            lat2[i] = 0;
            if (de.group >= 0 && !b[flag_pos[de.group]] && loses_on_failure(de.group, de.member, in2, lat2))
              b[flag_pos[de.group]] = 1;
            finish(raw, s, std::move(b), share, out);
          }
        }
      }
    }

    for (const auto& k : killers) {
      if (lost(s, static_cast<int>(k.group))) continue;
      ctmc::State t = s;
      t[flag_pos[k.group]] = 1;
      finish(raw, s, std::move(t), k.rate, out);
    }

    if (restore > 0)
      for (std::size_t g = 0; g < groups.size(); ++g) {
        if (!lost(s, static_cast<int>(g))) continue;
        ctmc::State t = s;
        t[flag_pos[g]] = 0;
        for (int k : members[g])
          if (disks[k].pos >= 0) t[disks[k].pos] = models[disks[k].model].initial;
        finish(raw, s, std::move(t), restore, out);
      }
  }
};

SystemGenerator::SystemGenerator(const topo::Topology& input, const SystemModels& m, const SystemOptions& o)
    : impl_(std::make_unique<Impl>()) {
  auto& I = *impl_;
  topo::require_valid(input);
  if (m.disk) validate(*m.disk);
  if (m.rebuild) validate(*m.rebuild);
  validate(m.correlation);
  if (o.lost_groups_target < 1) throw std::invalid_argument("lost_groups_target must be >= 1");

  topo::Topology base = input;
  std::set<std::string> perfect_disks;
  for (const auto& id : o.perfect) {
    const auto i = base.index_of(id);
    auto& c = base.mutable_component(i);
    if (c.kind == topo::ComponentKind::Disk) {
      perfect_disks.insert(id);
    } else {
      c.mttf_hr = topo::kNever;
      c.lifetime.reset();
    }
  }
  I.t = o.series_reduction ? topo::series_reduce(base) : base;
  const auto& t = I.t;
  const auto& comps = t.components();
  const std::size_t n = comps.size();
  I.p = m.correlation.p;
  I.target = o.lost_groups_target;
  I.restore = o.dil_restore_rate;
  I.groups = t.groups();
  if (I.target > I.groups.size()) throw std::invalid_argument("lost_groups_target exceeds the number of groups");

  I.encl.assign(n, -1);
  I.fail_rate.assign(n, 0);
  I.repair_rate.assign(n, 0);
  I.pos.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!comps[i].enclosure.empty()) I.encl[i] = static_cast<int>(t.index_of(comps[i].enclosure));
    if (comps[i].kind != topo::ComponentKind::Disk) {
      I.fail_rate[i] = t.failure_rate(i);
      I.repair_rate[i] = t.repair_rate(i);
    }
  }

  // disk phase models
  std::map<std::pair<double, double>, int> exp_models;
  auto model_for = [&](std::size_t comp) -> std::pair<int, double> {
    const RebuildSpec rb = m.rebuild ? *m.rebuild : RebuildSpec{t.repair_rate(comp), 0.0};
    if (m.disk) {
      if (I.models.empty()) I.models.push_back(disk_phases(*m.disk, rb));
      return {0, rb.uer_prob};
    }
    const double rate = t.failure_rate(comp);
    auto key = std::make_pair(rate, rb.rate);
    auto it = exp_models.find(key);
    if (it == exp_models.end()) {
      it = exp_models.emplace(key, static_cast<int>(I.models.size())).first;
      I.models.push_back(disk_phases(ExponentialDisk{rate}, rb));
    }
    return {it->second, rb.uer_prob};
  };

  const topo::PathTable paths(t);
  std::map<std::size_t, int> disk_slot;
  for (std::size_t i : t.disks()) {
    DiskInfo d;
    d.comp = i;
    d.encl = I.encl[i];
    const bool perfect = perfect_disks.count(comps[i].id) > 0;
    auto [mi, uer] = model_for(i);
    d.model = mi;
    d.uer = uer;
    d.pos = perfect ? -1 : 0;  // placeholder, laid out below
    for (const auto& path : paths.paths(i)) {
      std::vector<int> p;
      for (std::size_t k = 0; k + 1 < path.size(); ++k) p.push_back(static_cast<int>(path[k]));
      d.paths.push_back(std::move(p));
    }
    disk_slot[i] = static_cast<int>(I.disks.size());
    I.disks.push_back(std::move(d));
  }
  I.fail_entry.resize(I.models.size(), 0);
  for (std::size_t k = 0; k < I.models.size(); ++k)
    for (const auto& mv : I.models[k].moves)
      if (mv.kind == DiskPhases::Kind::OpFailure) I.fail_entry[k] = mv.to;

  I.members.resize(I.groups.size());
  for (std::size_t g = 0; g < I.groups.size(); ++g)
    for (std::size_t k = 0; k < I.groups[g].members.size(); ++k) {
      const int di = disk_slot.at(t.index_of(I.groups[g].members[k]));
      I.disks[di].group = static_cast<int>(g);
      I.disks[di].member = static_cast<int>(k);
      I.members[g].push_back(di);
    }
  for (std::size_t a = 0; a < I.disks.size(); ++a)
    for (std::size_t b = 0; b < I.disks.size(); ++b)
      if (a != b && I.disks[a].encl >= 0 && I.disks[a].encl == I.disks[b].encl)
        I.disks[a].neighbours.push_back(static_cast<int>(b));

  // which disks each stateful component serves
  std::vector<std::set<int>> users(n);
  for (std::size_t di = 0; di < I.disks.size(); ++di)
    for (const auto& path : I.disks[di].paths)
      for (int c : path) users[c].insert(static_cast<int>(di));
  auto has_state = [&](std::size_t c) {
    return comps[c].kind != topo::ComponentKind::Disk && I.fail_rate[c] > 0;
  };
  std::vector<int> exclusive_of(n, -1);
  for (std::size_t c = 0; c < n; ++c) {
    if (!has_state(c) || comps[c].kind == topo::ComponentKind::Enclosure) continue;
    if (users[c].size() == 1) exclusive_of[c] = *users[c].begin();
  }

  // block of each disk: exclusive components ordered canonically, plus signature
  std::vector<std::vector<int>> block(I.disks.size());
  std::vector<std::string> signature(I.disks.size());
  for (std::size_t di = 0; di < I.disks.size(); ++di) {
    auto& d = I.disks[di];
    auto token = [&](int c, const std::map<int, int>* local) {
      std::ostringstream os;
      os.precision(17);
      if (exclusive_of[c] == static_cast<int>(di)) {
        os << "E" << I.fail_rate[c] << '|' << I.repair_rate[c] << '|' << I.encl[c];
        if (local) os << '#' << local->at(c);
      } else {
        os << "S" << c;
      }
      return os.str();
    };
    std::vector<std::pair<std::vector<std::string>, std::size_t>> tp;
    for (std::size_t k = 0; k < d.paths.size(); ++k) {
      std::vector<std::string> v;
      for (int c : d.paths[k]) v.push_back(token(c, nullptr));
      tp.emplace_back(std::move(v), k);
    }
    std::stable_sort(tp.begin(), tp.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::map<int, int> local;
    for (const auto& [v, k] : tp)
      for (int c : d.paths[k])
        if (exclusive_of[c] == static_cast<int>(di) && !local.count(c)) {
          local.emplace(c, static_cast<int>(block[di].size()));
          block[di].push_back(c);
        }
    std::vector<std::vector<std::string>> full;
    for (const auto& path : d.paths) {
      std::vector<std::string> v;
      for (int c : path) v.push_back(token(c, &local));
      full.push_back(std::move(v));
    }
    std::sort(full.begin(), full.end());
    std::ostringstream sig;
    sig.precision(17);
    sig << "g" << d.group << " e" << d.encl << " m" << d.model << " u" << d.uer << " p" << (d.pos < 0);
    const bool pinned = !o.symmetry_reduction ||
                        (d.group >= 0 && I.groups[d.group].level == topo::RaidLevel::Raid10);
    if (pinned) sig << " id" << di;
    for (const auto& v : full) {
      sig << " [";
      for (const auto& x : v) sig << x << ' ';
      sig << ']';
    }
    signature[di] = sig.str();
  }

  // layout: shared components, then symmetry classes of disk blocks, then group flags
  std::size_t w = 0;
  for (std::size_t c = 0; c < n; ++c)
    if (has_state(c) && exclusive_of[c] < 0) {
      I.pos[c] = static_cast<int>(w++);
      I.stateful.push_back(static_cast<int>(c));
    }
  std::vector<std::vector<int>> class_members;
  std::map<std::string, std::size_t> class_of;
  for (std::size_t di = 0; di < I.disks.size(); ++di) {
    auto [it, fresh] = class_of.emplace(signature[di], class_members.size());
    if (fresh) class_members.emplace_back();
    class_members[it->second].push_back(static_cast<int>(di));
  }
  for (const auto& cm : class_members) {
    SymClass sc;
    sc.start = w;
    sc.count = cm.size();
    for (int di : cm) {
      auto& d = I.disks[di];
      const std::size_t begin = w;
      if (d.pos >= 0) d.pos = static_cast<int>(w++);
      for (int c : block[di]) {
        I.pos[c] = static_cast<int>(w++);
        I.stateful.push_back(c);
      }
      sc.len = w - begin;
    }
    if (sc.len > 0) I.classes.push_back(sc);
  }
  for (std::size_t g = 0; g < I.groups.size(); ++g) I.flag_pos.push_back(static_cast<int>(w++));
  I.width = w;
  if (w == 0) throw std::invalid_argument("system has no modelled elements");

  for (const auto& k : o.killers) {
    if (k.group >= I.groups.size()) throw std::invalid_argument("killer '" + k.id + "' refers to an unknown group");
    if (!(k.rate >= 0)) throw std::invalid_argument("killer rate must be >= 0");
    I.killers.push_back(k);
  }
}

SystemGenerator::~SystemGenerator() = default;

ctmc::State SystemGenerator::initial_state() const {
  const auto& I = *impl_;
  ctmc::State s(I.width, 0);
  for (const auto& d : I.disks)
    if (d.pos >= 0) s[d.pos] = I.models[d.model].initial;
  I.canonicalize(s);
  return s;
}

bool SystemGenerator::is_target(const ctmc::State& s) const { return lost_groups(s) >= impl_->target; }

void SystemGenerator::successors(const ctmc::State& s, std::vector<ctmc::Successor>& out) const {
  impl_->successors(s, out, false);
}

void SystemGenerator::raw_successors(const ctmc::State& s, std::vector<ctmc::Successor>& out) const {
  impl_->successors(s, out, true);
}

void SystemGenerator::complete(ctmc::State& s) const { impl_->mark_lost(s); }

std::size_t SystemGenerator::group_count() const { return impl_->groups.size(); }

std::size_t SystemGenerator::lost_groups(const ctmc::State& s) const {
  std::size_t n = 0;
  for (int p : impl_->flag_pos) n += s[p] != 0;
  return n;
}

std::size_t SystemGenerator::state_width() const { return impl_->width; }

std::size_t SystemGenerator::modelled_components() const {
  std::size_t n = impl_->stateful.size();
  for (const auto& d : impl_->disks) n += d.pos >= 0;
  return n;
}

std::size_t SystemGenerator::symmetry_classes() const { return impl_->classes.size(); }

ctmc::Ctmc build_system_ctmc(const topo::Topology& t, const SystemModels& m, const SystemOptions& o) {
  SystemGenerator g(t, m, o);
  return ctmc::explore(g, o.explore);
}

}  // namespace raidrel::build
