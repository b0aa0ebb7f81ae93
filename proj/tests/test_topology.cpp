#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "raidrel/builder.hpp"
#include "raidrel/ctmc.hpp"
#include "raidrel/topology.hpp"

using namespace raidrel;
using namespace raidrel::topo;
using fixtures::add;

namespace {

bool mentions(const std::vector<Diagnostic>& d, const std::string& element, const std::string& text) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) {
    return x.element == element && x.message.find(text) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("validate accepts the reference topologies") {
  CHECK(validate(fixtures::fig1a()).empty());
  CHECK(validate(fixtures::storage(2, 2, 6, false)).empty());
  CHECK(validate(fixtures::storage(2, 2, 6, true)).empty());
}

TEST_CASE("validate reports violations by element") {
  SUBCASE("unreachable disk") {
    auto t = fixtures::fig1a();
    add(t, "E1.d9", ComponentKind::Disk, 1000, 30, "E1");
    const auto d = validate(t);
    CHECK(mentions(d, "E1.d9", "unreachable disk"));
  }
  SUBCASE("over capacity") {
    Topology t;
    add(t, "c", ComponentKind::Controller, 1000);
    fixtures::add_enclosure(t, "E");
    for (int i = 0; i < 25; ++i) {
      add(t, "d" + std::to_string(i), ComponentKind::Disk, 1000, 30, "E");
      t.add_link("c", "d" + std::to_string(i));
    }
    t.set_enclosure_policy({});
    CHECK(mentions(validate(t), "E", "over capacity"));
  }
  SUBCASE("cycle") {
    Topology t;
    add(t, "a", ComponentKind::Interconnect, 1000);
    add(t, "b", ComponentKind::Interconnect, 1000);
    t.add_link("a", "b");
    t.add_link("b", "a");
    CHECK(mentions(validate(t), "<links>", "cycle"));
  }
  SUBCASE("group too small and unknown member") {
    auto t = fixtures::fig1a();
    t.add_group({"small", RaidLevel::Raid6, {"E1.d1", "E1.d2"}});
    t.add_group({"ghost", RaidLevel::Raid5, {"E1.d1", "nope"}});
    const auto d = validate(t);
    CHECK(mentions(d, "small", ""));
    CHECK(mentions(d, "ghost", "nope"));
  }
  SUBCASE("bad numbers") {
    auto t = fixtures::fig1a();
    add(t, "x", ComponentKind::Controller, -1);
    add(t, "y", ComponentKind::Controller, 1, 0);
    const auto d = validate(t);
    CHECK(mentions(d, "x", "mttf"));
    CHECK(mentions(d, "y", "mttr"));
  }
  CHECK_THROWS_AS(require_valid([] {
                    Topology t;
                    add(t, "d", ComponentKind::Disk, 1);
                    return t;
                  }()),
                  TopologyError);
}

TEST_CASE("duplicate ids are rejected") {
  auto t = fixtures::fig1a();
  add(t, "c1", ComponentKind::Controller, 1);
  CHECK(mentions(validate(t), "c1", "duplicate"));
}

TEST_CASE("access paths") {
  const auto a = fixtures::storage(2, 2, 6, false);
  const auto b = fixtures::storage(2, 2, 6, true);
  CHECK(access_paths(a, "E3.d1").size() == 1);
  CHECK(access_paths(b, "E3.d1").size() == 2);
  CHECK(access_paths(a, "E1.d1").size() == 2);
  const auto p = access_paths(a, "E3.d1").front();
  CHECK(p.front() == "c1");
  CHECK(p.back() == "E3.d1");
  CHECK(std::find(p.begin(), p.end(), "E1.A") != p.end());
  CHECK_THROWS(access_paths(a, "nope"));
  CHECK_THROWS(access_paths(a, "c1"));

  auto t = fixtures::fig1a();
  add(t, "E1.d9", ComponentKind::Disk, 1000, 30, "E1");
  CHECK_THROWS(access_paths(t, "E1.d9"));
}

TEST_CASE("enclosure rate step") {
  const EnclosurePolicy p{24, 12, 28400, 11100};
  CHECK(enclosure_rate(p, 8) == doctest::Approx(1.0 / 28400));
  CHECK(enclosure_rate({24, 4, 28400, 11100}, 8) == doctest::Approx(1.0 / 11100));
  CHECK(enclosure_rate(p, 12) == doctest::Approx(1.0 / 28400));
  CHECK(enclosure_rate(p, 13) == doctest::Approx(1.0 / 11100));
  CHECK_THROWS(enclosure_rate(p, 0));
  CHECK_THROWS(enclosure_rate(p, 25));
  // single step
  int steps = 0;
  for (int k = 2; k <= 24; ++k) steps += enclosure_rate(p, k) != enclosure_rate(p, k - 1);
  CHECK(steps == 1);
}

TEST_CASE("series reduction of the controller-interconnect-expander chain") {
  Topology t;
  add(t, "c", ComponentKind::Controller, fixtures::kController);
  add(t, "ic", ComponentKind::Interconnect, fixtures::kInterconnect);
  add(t, "x", ComponentKind::Expander, fixtures::kExpander);
  add(t, "E", ComponentKind::Enclosure, 28400);
  for (int i = 1; i <= 4; ++i) {
    add(t, "d" + std::to_string(i), ComponentKind::Disk, fixtures::kDisk, 30, "E");
    t.add_link("x", "d" + std::to_string(i));
  }
  t.add_link("c", "ic");
  t.add_link("ic", "x");
  t.add_group({"g", RaidLevel::Raid5, {"d1", "d2", "d3", "d4"}});
  const auto r = series_reduce(t);
  CHECK(r.size() == t.size() - 2);
  const auto& m = r.at("c+ic+x");
  CHECK(*m.mttf_hr == doctest::Approx(1 / (1 / 604440.0 + 1 / 200000.0 + 1 / 2560000.0)).epsilon(1e-12));
  CHECK(m.mttr_hr == 0.5);
  CHECK(access_paths(r, "d1").size() == 1);

  // idempotent
  const auto rr = series_reduce(r);
  CHECK(rr.size() == r.size());
  CHECK(rr.links().size() == r.links().size());

  // one-element chains stay put
  const auto f = fixtures::fig1a();
  CHECK(series_reduce(f).size() <= f.size());
  Topology one;
  add(one, "c", ComponentKind::Controller, 100);
  add(one, "E", ComponentKind::Enclosure, 100);
  add(one, "d", ComponentKind::Disk, 100, 30, "E");
  one.add_link("c", "d");
  CHECK(series_reduce(one).size() == 3);
}

TEST_CASE("mttr mismatch leaves the chain unreduced and flagged") {
  Topology t;
  add(t, "c", ComponentKind::Controller, 1000, 0.5);
  add(t, "ic", ComponentKind::Interconnect, 1000, 2.0);
  add(t, "E", ComponentKind::Enclosure, 1000);
  add(t, "d", ComponentKind::Disk, 1000, 30, "E");
  t.add_link("c", "ic");
  t.add_link("ic", "d");
  std::vector<std::vector<std::string>> flagged;
  const auto r = series_reduce(t, &flagged);
  CHECK(r.size() == t.size());
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0] == std::vector<std::string>{"c", "ic"});
}

TEST_CASE("series reduction preserves MTTA on random chains") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Topology t;
    const int len = 1 + static_cast<int>(rng.uniform() * 5);
    std::string prev;
    for (int k = 0; k < len; ++k) {
      const std::string id = "s" + std::to_string(k);
      add(t, id, k == 0 ? ComponentKind::Controller : ComponentKind::Interconnect, 1e4 + 1e6 * rng.uniform());
      if (!prev.empty()) t.add_link(prev, id);
      prev = id;
    }
    add(t, "E", ComponentKind::Enclosure, 1e5 + 1e6 * rng.uniform());
    RaidGroup g{"g", RaidLevel::Raid5, {}};
    for (int i = 1; i <= 3; ++i) {
      const std::string d = "d" + std::to_string(i);
      add(t, d, ComponentKind::Disk, 1e5 * (1 + rng.uniform()), 30, "E");
      t.add_link(prev, d);
      g.members.push_back(d);
    }
    t.add_group(g);
    const auto r = series_reduce(t);
    CHECK(r.size() == t.size() - static_cast<std::size_t>(len) + 1);
    const double a = ctmc::mtta(build::build_system_ctmc(t, {})).hours;
    const double b = ctmc::mtta(build::build_system_ctmc(r, {})).hours;
    CHECK(std::abs(a - b) <= 1e-9 * a);
  }
}

TEST_CASE("independent partition") {
  CHECK(independent_partition(Topology{}).empty());
  CHECK(independent_partition(fixtures::fig1a()).size() == 1);

  // 20 disjoint controller pairs, each with its own enclosure
  Topology big;
  for (int s = 0; s < 20; ++s) {
    const auto part = fixtures::fig1a();
    const std::string pre = "s" + std::to_string(s) + ".";
    for (auto c : part.components()) {
      c.id = pre + c.id;
      if (!c.enclosure.empty()) c.enclosure = pre + c.enclosure;
      big.add_component(c);
    }
    for (const auto& l : part.links()) big.add_link(pre + l.from, pre + l.to);
    for (auto g : part.groups()) {
      g.id = pre + g.id;
      for (auto& m : g.members) m = pre + m;
      big.add_group(g);
    }
  }
  big.set_enclosure_policy({});
  const auto parts = independent_partition(big);
  REQUIRE(parts.size() == 20);
  std::set<std::string> all;
  std::size_t total = 0;
  for (const auto& p : parts) {
    CHECK(validate(p).empty());
    CHECK(p.groups().size() == 1);
    for (const auto& c : p.components()) all.insert(c.id);
    total += p.size();
  }
  CHECK(total == big.size());
  CHECK(all.size() == big.size());
}

TEST_CASE("occupancy and rates") {
  const auto t = fixtures::storage(2, 2, 6, true);
  CHECK(t.occupancy("E1") == 6);
  CHECK(t.failure_rate(t.index_of("E1")) == doctest::Approx(1.0 / 28400));
  CHECK(t.failure_rate(t.index_of("c1")) == doctest::Approx(1.0 / 604440));
  CHECK(t.repair_rate(t.index_of("E1.d1")) == doctest::Approx(1.0 / 30));
  CHECK(t.disks().size() == 24);
  CHECK(parse_level("raid6") == RaidLevel::Raid6);
  CHECK(to_string(ComponentKind::Expander) == "expander");
  CHECK_THROWS(parse_kind("toaster"));
}

TEST_CASE("group loss rules") {
  const RaidGroup r5{"g", RaidLevel::Raid5, {"a", "b", "c", "d"}};
  const RaidGroup r6{"g", RaidLevel::Raid6, {"a", "b", "c", "d"}};
  const RaidGroup r10{"g", RaidLevel::Raid10, {"a", "b", "c", "d"}};
  CHECK(r5.fault_tolerance() == 1);
  CHECK(r6.fault_tolerance() == 2);
  const std::vector<char> one{1, 0, 0, 0}, two{1, 1, 0, 0}, three{1, 1, 1, 0}, mirror{1, 0, 1, 0};
  CHECK_FALSE(r5.lost(one));
  CHECK(r5.lost(two));
  CHECK_FALSE(r6.lost(two));
  CHECK(r6.lost(three));
  CHECK_FALSE(r10.lost(mirror));
  CHECK(r10.lost(two));
  const std::vector<char> none(4, 0), latent_b{0, 1, 0, 0};
  CHECK_FALSE(r5.loses_on_failure(0, none, none));
  CHECK(r5.loses_on_failure(0, none, latent_b));
  CHECK(r5.loses_on_failure(0, std::vector<char>{0, 0, 1, 0}, none));
  CHECK_FALSE(r6.loses_on_failure(0, none, latent_b));
}
