#include <cmath>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "doctest.h"
#include "random_ctmc.hpp"
#include "raidrel/ctmc.hpp"

using namespace raidrel;
using namespace raidrel::ctmc;

namespace {

Ctmc chain(std::vector<Transition> tr, std::size_t n, std::vector<std::uint32_t> dil) {
  std::vector<double> init(n, 0.0);
  init[0] = 1;
  return Ctmc(n, std::move(tr), std::move(init), {{"DIL", std::move(dil)}});
}

// Work(0) / Degraded(1) / DIL(2) with correlated second failure and UER,
// eliminated by hand: T0 = 1/a + (1-p) T1, T1 = (1 + mu (1-h) T0) / (mu + b)
double three_state_closed_form(int n, double lambda, double mu, double h, double p) {
  const double a = n * lambda, b = (n - 1) * lambda;
  return (1 / a + (1 - p) / (mu + b)) / (1 - (1 - p) * mu * (1 - h) / (mu + b));
}

Ctmc three_state(int n, double lambda, double mu, double h, double p) {
  return chain({{0, 1, n * lambda * (1 - p)},
                {0, 2, n * lambda * p},
                {1, 0, mu * (1 - h)},
                {1, 2, mu * h + (n - 1) * lambda}},
               3, {2});
}

}  // namespace

TEST_CASE("mtta of elementary chains") {
  CHECK(mtta(chain({{0, 1, 0.25}}, 2, {1})).hours == doctest::Approx(4.0).epsilon(1e-12));
  const double n = 6, l = 1e-5;
  const auto r = mtta(chain({{0, 1, n * l}, {1, 2, (n - 1) * l}}, 3, {2}));
  CHECK(r.finite);
  CHECK(r.hours == doctest::Approx(1 / (n * l) + 1 / ((n - 1) * l)).epsilon(1e-12));
}

TEST_CASE("mtta of the three-state group chain matches its closed form") {
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    const int n = 3 + static_cast<int>(rng.uniform() * 10);
    const double lambda = 1 / (1e4 + 1e6 * rng.uniform());
    const double mu = 1 / (5 + 50 * rng.uniform());
    const double h = 0.01 * rng.uniform();
    const double p = 0.5 * rng.uniform();
    const double want = three_state_closed_form(n, lambda, mu, h, p);
    for (auto m : {LinearMethod::Dense, LinearMethod::SparseLU, LinearMethod::GaussSeidel, LinearMethod::Krylov}) {
      SolveOptions o;
      o.method = m;
      CHECK(mtta(three_state(n, lambda, mu, h, p), kDil, o).hours == doctest::Approx(want).epsilon(1e-8));
    }
  }
}

TEST_CASE("birth-death chain with repair against the closed form") {
  // 0 -(a)-> 1 -(b)-> 2, 1 -(mu)-> 0: T0 = (a + b + mu) / (a b)
  const double a = 3e-4, b = 2e-4, mu = 0.1;
  const auto r = mtta(chain({{0, 1, a}, {1, 2, b}, {1, 0, mu}}, 3, {2}));
  CHECK(r.hours == doctest::Approx((a + b + mu) / (a * b)).epsilon(1e-10));
}

TEST_CASE("unreachable target is reported, not thrown") {
  const auto r = mtta(chain({{0, 1, 1.0}, {1, 0, 1.0}}, 3, {2}));
  CHECK_FALSE(r.finite);
  CHECK(std::isinf(r.hours));
}

TEST_CASE("mtta when the initial state is a target") {
  std::vector<double> init{0, 1};
  const Ctmc c(2, {{0, 1, 1.0}}, init, {{"DIL", {1}}});
  CHECK(mtta(c).hours == 0.0);
}

TEST_CASE("Ctmc construction errors") {
  CHECK_THROWS_AS(Ctmc(2, {{0, 0, 1.0}}, {1, 0}), CtmcError);
  CHECK_THROWS_AS(Ctmc(2, {{0, 1, -1.0}}, {1, 0}), CtmcError);
  CHECK_THROWS_AS(Ctmc(2, {{0, 2, 1.0}}, {1, 0}), CtmcError);
  CHECK_THROWS_AS(Ctmc(2, {{0, 1, 1.0}}, {0.5, 0.4}), CtmcError);
  CHECK_THROWS_AS(Ctmc(2, {{0, 1, 1.0}}, {1, 0}, {{"DIL", {7}}}), CtmcError);
  const Ctmc c(2, {{0, 1, 1.0}, {0, 1, 2.0}}, {1, 0}, {{"DIL", {1}}});
  CHECK(c.transition_count() == 1);
  CHECK(c.exit_rate(0) == 3.0);
  CHECK_THROWS_AS(c.states_with("nope"), CtmcError);
  CHECK_THROWS_AS(absorption_probability(c, 1.0, "nope"), CtmcError);
  CHECK_THROWS_AS(transient(c, -1.0), CtmcError);
  SolveOptions bad;
  bad.tolerance = 0;
  CHECK_THROWS_AS(mtta(c, kDil, bad), CtmcError);
}

TEST_CASE("transient distribution") {
  const double l = 0.3;
  const auto c = chain({{0, 1, l}}, 2, {1});
  for (double t : {0.0, 0.5, 3.0, 40.0})
    CHECK(absorption_probability(c, t) == doctest::Approx(1 - std::exp(-l * t)).epsilon(1e-9));
  CHECK(absorption_probability(c, 0.0) == 0.0);

  // Erlang-3 absorption
  const double r = 0.7;
  const auto e = chain({{0, 1, r}, {1, 2, r}, {2, 3, r}}, 4, {3});
  const boost::math::gamma_distribution<double> g(3, 1 / r);
  for (double t : {0.1, 1.0, 4.0, 10.0, 30.0})
    CHECK(std::abs(absorption_probability(e, t) - boost::math::cdf(g, t)) < 1e-9);

  Rng rng(1);
  const auto rc = fixtures::random_ctmc(rng, 60);
  std::vector<double> times;
  for (int i = 0; i <= 40; ++i) times.push_back(0.5 * i * i);
  const auto series = transient_series(rc, times);
  double prev = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double mass = 0;
    for (double v : series[i]) mass += v;
    CHECK(std::abs(mass - 1) < 1e-9);
    const double a = series[i].back();
    CHECK(a >= prev - 1e-12);
    prev = a;
  }
  CHECK_THROWS(transient_series(rc, std::vector<double>{2.0, 1.0}));
}

TEST_CASE("mtta equals the integral of the survival on random chains") {
  Rng rng(2024);
  for (int k = 0; k < 10; ++k) {
    const auto c = fixtures::random_ctmc(rng, 3 + static_cast<std::size_t>(rng.uniform() * 98));
    const double m = mtta(c).hours;
    const double q = fixtures::mtta_by_quadrature(c, m);
    CHECK(std::abs(q - m) <= 1e-3 * m);
  }
}

TEST_CASE("uniformization agrees with the matrix exponential") {
  Rng rng(77);
  for (int k = 0; k < 10; ++k) {
    const auto c = fixtures::random_ctmc(rng, 3 + static_cast<std::size_t>(rng.uniform() * 18));
    for (double t : {0.3, 2.0, 15.0}) {
      const auto u = transient(c, t);
      const auto x = fixtures::expm_distribution(c, t);
      for (std::size_t s = 0; s < c.size(); ++s) CHECK(std::abs(u[s] - x[s]) < 1e-8);
    }
  }
}

TEST_CASE("Poisson truncation window") {
  for (double lambda : {0.0, 0.3, 5.0, 80.0, 2500.0}) {
    const double eps = 1e-9;
    const auto w = poisson_window(lambda, eps);
    REQUIRE(w.weights.size() == w.right - w.left + 1);
    double kept = 0;
    for (double v : w.weights) kept += v;
    CHECK(kept == doctest::Approx(1.0).epsilon(1e-12));
    if (lambda == 0) continue;
    const boost::math::poisson_distribution<double> p(lambda);
    const double mass = boost::math::cdf(p, static_cast<double>(w.right)) -
                        (w.left == 0 ? 0.0 : boost::math::cdf(p, static_cast<double>(w.left - 1)));
    CHECK(1 - mass <= eps);
    for (std::size_t k = w.left; k <= w.right; k += 1 + (w.right - w.left) / 7)
      CHECK(w.weights[k - w.left] == doctest::Approx(boost::math::pdf(p, static_cast<double>(k)) / mass).epsilon(1e-8));
  }
  CHECK_THROWS(poisson_window(-1, 1e-9));
  CHECK_THROWS(poisson_window(1, 0));
}

TEST_CASE("merge_absorbing") {
  // two fail states
  const std::vector<double> init{1, 0, 0, 0};
  const Ctmc c(4, {{0, 1, 0.01}, {1, 0, 0.5}, {1, 2, 0.002}, {0, 3, 0.001}}, init, {{"A", {2}}, {"B", {3}}});
  const std::vector<std::string> ab{"A", "B"};
  const auto m = merge_absorbing(c, ab);
  CHECK(m.size() == 3);
  const std::vector<std::string> dil{"DIL"};
  const Ctmc both(4, c.transitions(), init, {{"DIL", {2, 3}}});
  CHECK(mtta(m, "A").hours == doctest::Approx(mtta(both).hours).epsilon(1e-12));
  CHECK(m.states_with("A") == m.states_with("B"));

  // no labelled states: identity
  const std::vector<std::string> none{"nothing"};
  const auto same = merge_absorbing(c, none);
  CHECK(same.size() == c.size());
  CHECK(same.transition_count() == c.transition_count());

  // label on a live state
  const Ctmc live(2, {{0, 1, 1.0}}, {1, 0}, {{"DIL", {0}}});
  CHECK_THROWS_AS(merge_absorbing(live, dil), CtmcError);

  // random chain with the sink split into two absorbing states
  Rng rng(9);
  const auto r = fixtures::random_ctmc(rng, 50);
  std::vector<Transition> tr;
  bool flip = false;
  for (auto t : r.transitions()) {
    if (t.to == 49 && (flip = !flip)) t.to = 50;
    tr.push_back(t);
  }
  std::vector<double> i51(51, 0.0);
  i51[0] = 1;
  const Ctmc split(51, tr, i51, {{"DIL", {49, 50}}});
  const auto merged = merge_absorbing(split, dil);
  std::vector<double> times{0.5, 2, 8, 30, 120};
  const auto a = absorption_curve(split, times);
  const auto b = absorption_curve(merged, times);
  const auto o = absorption_curve(r, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) < 1e-9);
    CHECK(std::abs(o[i] - b[i]) < 1e-9);
  }
  CHECK(mtta(merged).hours == doctest::Approx(mtta(split).hours).epsilon(1e-12));
}

TEST_CASE("ddf curve scales absorption by the population") {
  const auto c = chain({{0, 1, 1e-4}}, 2, {1});
  const std::vector<double> times{8760, 17520};
  const auto d = ddf_curve(c, times, 1000);
  REQUIRE(d.size() == 2);
  CHECK(d[0].t_hr == 8760);
  CHECK(d[0].value == doctest::Approx(1000 * (1 - std::exp(-0.876))).epsilon(1e-9));
}

TEST_CASE("csv export") {
  const auto c = chain({{0, 1, 0.5}}, 2, {1});
  std::ostringstream os;
  c.to_csv(os);
  CHECK(os.str().find("from,to,rate") == 0);
  CHECK(os.str().find("0,1,0.5") != std::string::npos);
}
