#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "raidrel/design.hpp"

using namespace raidrel;
using namespace raidrel::design;

TEST_CASE("greedy spanning examples") {
  const auto a = greedy_span(14, 2, 1);
  CHECK(a.counts == std::vector<int>{14, 0});
  CHECK(format_plan(a) == "enclosure1:14");
  CHECK(greedy_span(8, 8, 1).counts == std::vector<int>(8, 1));
  CHECK(greedy_span(8, 3, 1, {3, 3, 3}).counts == std::vector<int>{3, 3, 2});
  // f at a time, remainder in the next enclosure
  CHECK(greedy_span(5, 4, 2).counts == std::vector<int>{2, 2, 1, 0});
  // highest capacity first, ties to the lowest index
  CHECK(greedy_span(10, 3, 1, {4, 6, 6}).counts == std::vector<int>{0, 6, 4});
  CHECK_FALSE(greedy_span(10, 3, 1, {4, 6, 6}).fallback);
  CHECK_THROWS(greedy_span(30, 1, 1));
  CHECK_THROWS(greedy_span(3, 2, 1, {1}));
  CHECK_THROWS(greedy_span(0, 2, 1));
}

TEST_CASE("greedy spanning invariants on random inputs") {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const int m = 1 + static_cast<int>(rng.uniform() * 10);
    const int f = 1 + static_cast<int>(rng.uniform() * 3);
    std::vector<int> caps(static_cast<std::size_t>(m));
    for (auto& c : caps) c = static_cast<int>(rng.uniform() * 25);
    const int total = std::accumulate(caps.begin(), caps.end(), 0);
    if (total == 0) continue;
    const int n = 1 + static_cast<int>(rng.uniform() * total);
    const auto p = greedy_span(n, m, f, caps);
    CHECK(satisfies_invariants(p, caps));
    CHECK(p.n == n);
    CHECK(p.m == m);
    CHECK(p.f == f);
    // deterministic
    CHECK(greedy_span(n, m, f, caps).counts == p.counts);
  }
}

TEST_CASE("correlated spanning rate") {
  const double l = 1e-5, p = 0.2;
  CHECK(correlated_span_rate(8, 1, l, p) == doctest::Approx(28 * l * p));
  CHECK(correlated_span_rate(8, 2, l, p) == doctest::Approx(12 * l * p));
  CHECK(correlated_span_rate(8, 8, l, p) == 0.0);
  CHECK_THROWS(correlated_span_rate(8, 3, l, p));
  // strictly decreasing in m while n/m >= 2
  for (int n : {12, 24, 60}) {
    double prev = INFINITY;
    for (int m = 1; m <= n / 2; ++m) {
      if (n % m) continue;
      const double r = correlated_span_rate(n, m, l, p);
      CHECK(r < prev);
      prev = r;
    }
  }
  // plan form agrees on even splits and extends to uneven ones
  SpanPlan even{{4, 4}, 8, 2, 1, false};
  CHECK(correlated_span_rate(even, l, p) == doctest::Approx(correlated_span_rate(8, 2, l, p)));
  SpanPlan uneven{{3, 3, 2}, 8, 3, 1, false};
  CHECK(correlated_span_rate(uneven, l, p) == doctest::Approx((3 + 3 + 1) * l * p));
}

TEST_CASE("partitions") {
  CHECK(partitions(8, 8).size() == 22);
  CHECK(partitions(8, 2).size() == 5);
  for (const auto& q : partitions(8, 8)) {
    CHECK(std::accumulate(q.begin(), q.end(), 0) == 8);
    CHECK(std::is_sorted(q.rbegin(), q.rend()));
  }
}

TEST_CASE("spanned group topology") {
  const auto t = spanned_group_topology({3, 3, 2});
  CHECK(topo::validate(t).empty());
  CHECK(t.disks().size() == 8);
  CHECK(t.groups().size() == 1);
  CHECK(t.occupancy("encl1") == 3);
  CHECK(t.occupancy("encl3") == 2);
}

TEST_CASE("spanning sweep ordering for an 8-disk RAID5") {
  const auto rows = span_sweep(8, 8, {});
  REQUIRE(rows.size() == 22);
  std::map<std::vector<int>, double> v;
  for (const auto& r : rows) v[r.counts] = r.mttdil_hr;
  // one disk per enclosure survives any single enclosure failure
  CHECK(v.at(std::vector<int>(8, 1)) > v.at({8}));
  // every enclosure holding two or more members adds a fatal failure point
  CHECK(v.at({8}) > v.at({4, 4}));
  CHECK(v.at({4, 4}) > v.at({2, 2, 2, 2}));
  // at this occupancy the best plan is the full spread
  const auto best = std::max_element(rows.begin(), rows.end(),
                                     [](const auto& a, const auto& b) { return a.mttdil_hr < b.mttdil_hr; });
  CHECK(best->counts == std::vector<int>(8, 1));
  std::ostringstream os;
  write_sweep_csv(os, rows);
  CHECK(os.str().rfind("partition,enclosures,mttdil_hr,states\n8,1,", 0) == 0);
}

TEST_CASE("configuration comparison") {
  build::SystemModels m;
  m.rebuild = build::default_rebuild();
  std::vector<Config> cs{{"single", fixtures::storage(1, 1, 3, false), m, ""},
                         {"multi", fixtures::storage(1, 1, 3, true), m, "2 SAS cables"},
                         {"single-again", fixtures::storage(1, 1, 3, false), m, ""}};
  const auto rows = compare_configs(cs);
  REQUIRE(rows.size() == 3);
  std::map<std::string, CompareRow> by;
  for (const auto& r : rows) by[r.id] = r;
  CHECK(by.at("single").gain == 1.0);
  CHECK(by.at("single-again").gain == 1.0);
  CHECK(by.at("multi").gain >= 1.0);
  CHECK(rows.front().id == "multi");
  CHECK(by.at("multi").extra_cost_note == "2 SAS cables");
  CHECK(by.at("single").method == "numeric");
  std::ostringstream os;
  write_comparison_csv(os, rows);
  CHECK(os.str().rfind("config_id,measure_hr,gain_vs_baseline,extra_cost_note\nmulti,", 0) == 0);

  CHECK_THROWS(compare_configs({cs[0]}));
  CompareOptions tight;
  tight.explore.state_budget = 10;
  tight.allow_simulation = false;
  CHECK_THROWS(compare_configs(cs, tight));
}
