#pragma once

#include <string>

#include "raidrel/topology.hpp"

namespace fixtures {

inline constexpr double kController = 604440;
inline constexpr double kExpander = 2560000;
inline constexpr double kInterconnect = 200000;
inline constexpr double kDisk = 33 * 8760.0;

inline void add(raidrel::topo::Topology& t, const std::string& id, raidrel::topo::ComponentKind k, double mttf,
                double mttr = 0.5, const std::string& encl = "") {
  raidrel::topo::ComponentSpec c;
  c.id = id;
  c.kind = k;
  c.mttf_hr = mttf;
  c.mttr_hr = mttr;
  c.enclosure = encl;
  t.add_component(std::move(c));
}

inline void add_enclosure(raidrel::topo::Topology& t, const std::string& id) {
  raidrel::topo::ComponentSpec c;
  c.id = id;
  c.kind = raidrel::topo::ComponentKind::Enclosure;
  t.add_component(std::move(c));
}

// Dual-controller storage: c1/c2 cable into expanders A/B of E1..E{direct};
// enclosure E{direct+i} hangs off E{i} by daisy chain on side A (and side B
// when multipath). One RAID5 group of `disks` disks per enclosure.
inline raidrel::topo::Topology storage(int direct, int chained, int disks, bool multipath) {
  using K = raidrel::topo::ComponentKind;
  raidrel::topo::Topology t;
  add(t, "c1", K::Controller, kController);
  add(t, "c2", K::Controller, kController);
  auto side = [&](int e, char s, const std::string& feed) {
    const std::string exp = "E" + std::to_string(e) + "." + s;
    const std::string cable = "cable." + feed + ".E" + std::to_string(e) + s;
    add(t, cable, K::Interconnect, kInterconnect);
    add(t, exp, K::Expander, kExpander, 0.5, "E" + std::to_string(e));
    t.add_link(feed, cable);
    t.add_link(cable, exp);
  };
  for (int e = 1; e <= direct + chained; ++e) add_enclosure(t, "E" + std::to_string(e));
  for (int e = 1; e <= direct; ++e) {
    side(e, 'A', "c1");
    side(e, 'B', "c2");
  }
  for (int i = 1; i <= chained; ++i) {
    side(direct + i, 'A', "E" + std::to_string(i) + ".A");
    if (multipath) side(direct + i, 'B', "E" + std::to_string(i) + ".B");
  }
  for (int e = 1; e <= direct + chained; ++e) {
    const std::string E = "E" + std::to_string(e);
    raidrel::topo::RaidGroup g;
    g.id = "g" + std::to_string(e);
    g.level = raidrel::topo::RaidLevel::Raid5;
    const bool two = e <= direct || multipath;
    for (int k = 1; k <= disks; ++k) {
      const std::string d = E + ".d" + std::to_string(k);
      add(t, d, K::Disk, kDisk, 30, E);
      for (char s : two ? std::string("AB") : std::string("A")) {
        const std::string ic = std::string("ic.") + E + s + ".d" + std::to_string(k);
        add(t, ic, K::Interconnect, kInterconnect);
        t.add_link(E + "." + s, ic);
        t.add_link(ic, d);
      }
      g.members.push_back(d);
    }
    t.add_group(g);
  }
  t.set_enclosure_policy({});
  return t;
}

inline raidrel::topo::Topology fig1a() { return storage(1, 0, 4, true); }

}  // namespace fixtures
