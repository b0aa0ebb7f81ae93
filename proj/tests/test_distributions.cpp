#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "doctest.h"
#include "raidrel/distributions.hpp"

using namespace raidrel;
using namespace raidrel::dist;

namespace {

// E[X^k] = k! pi (-T)^-k 1 for the Young/BurntIn chain.
std::array<double, 3> matrix_moments(const PhaseType3& p) {
  Eigen::Matrix2d t;
  t << -(p.sigma + p.alpha), p.sigma, 0, -p.beta;
  const Eigen::Matrix2d inv = (-t).inverse();
  const Eigen::RowVector2d pi(1, 0);
  Eigen::Matrix2d pw = inv;
  std::array<double, 3> out{};
  double fact = 1;
  for (int k = 1; k <= 3; ++k) {
    fact *= k;
    out[k - 1] = fact * (pi * pw * Eigen::Vector2d::Ones())(0);
    pw = pw * inv;
  }
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

bool has_branch(const std::pair<PhaseType3, PhaseType3>& f, const PhaseType3& p, double tol) {
  for (const auto& b : {f.first, f.second})
    if (rel(b.sigma, p.sigma) < tol && rel(b.alpha, p.alpha) < tol && rel(b.beta, p.beta) < tol) return true;
  return false;
}

}  // namespace

TEST_CASE("Weibull raw moments") {
  const auto m = raw_moments(Weibull{1, 1000, 0}, 3);
  CHECK(rel(m.mu1, 1000) < 1e-12);
  CHECK(rel(m.mu2, 2e6) < 1e-12);
  CHECK(rel(m.mu3, 6e9) < 1e-12);

  const Weibull w{1.12, 461386, 0};
  const double quad = boost::math::quadrature::exp_sinh<double>().integrate(
      [&](double t) { return t * density(w, t); });
  CHECK(rel(raw_moments(w, 1).mu1, quad) < 1e-9);
  CHECK(rel(raw_moments(w, 1).mu1, 461386 * std::tgamma(1 + 1 / 1.12)) < 1e-12);
  CHECK(raw_moments(w, 1).mu1 == doctest::Approx(4.43e5).epsilon(0.01));

  const Weibull s{3, 168, 6};
  CHECK(rel(mean(s), 6 + 168 * std::tgamma(4.0 / 3.0)) < 1e-12);
  // third moment of the shifted law by quadrature
  const double q3 = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double t) { return t * t * t * density(s, t); }, 6.0, 2000.0, 15, 1e-13);
  CHECK(rel(raw_moments(s, 3).mu3, q3) < 1e-9);
  CHECK_THROWS(raw_moments(s, 4));
}

TEST_CASE("phase-type fit of the operational-failure Weibull") {
  const auto f = fit_phase3(raw_moments(Weibull{1.12, 461386, 0}, 3));
  CHECK(rel(f.first.alpha, 1.72e-6) < 0.01);
  CHECK(rel(f.second.alpha, 1.72e-6) < 0.01);
  CHECK(has_branch(f, {2.49e-6, 1.72e-6, 2.88e-6}, 0.01));
  CHECK(has_branch(f, {1.16e-6, 1.72e-6, 4.21e-6}, 0.01));

  // both branches carry the same three moments as the Weibull
  const auto target = raw_moments(Weibull{1.12, 461386, 0}, 3);
  for (const auto& b : {f.first, f.second}) {
    const auto mm = matrix_moments(b);
    CHECK(rel(mm[0], target.mu1) < 1e-9);
    CHECK(rel(mm[1], target.mu2) < 1e-9);
    CHECK(rel(mm[2], target.mu3) < 1e-9);
  }
}

TEST_CASE("phase-type moment round trip") {
  const PhaseType3 p{2e-6, 1e-6, 3e-6};
  CHECK(has_branch(fit_phase3(raw_moments(p, 3)), p, 1e-9));

  // random admissible chains
  Rng rng(11);
  int tried = 0;
  for (int i = 0; i < 300; ++i) {
    // rates within a decade of each other; at wider spreads one stage barely
    // moves the moments and the inversion is ill-conditioned
    const PhaseType3 q{std::pow(10.0, -6.5 + rng.uniform()), std::pow(10.0, -6.5 + rng.uniform()),
                       std::pow(10.0, -6.5 + rng.uniform())};
    // near sigma + alpha == beta the two branches merge and the square root
    // of the discriminant amplifies round-off; keep to well separated chains
    const double c = q.sigma + q.alpha;
    if (std::abs(c - q.beta) < 0.05 * std::max(c, q.beta)) continue;
    std::pair<PhaseType3, PhaseType3> f;
    try {
      f = fit_phase3(raw_moments(q, 3));
    } catch (const NoValidFit&) {
      continue;  // the moment map is not injective everywhere
    }
    ++tried;
    const auto mm = matrix_moments(q);
    for (const auto& b : {f.first, f.second}) {
      const auto mb = matrix_moments(b);
      for (int k = 0; k < 3; ++k) CHECK(rel(mb[k], mm[k]) < 1e-9);
    }
    CHECK(has_branch(f, q, 1e-6));
  }
  CHECK(tried > 200);
}

TEST_CASE("closed-form phase-type moments agree with the matrix form") {
  for (const PhaseType3& p : {PhaseType3{5.4668e-4, 1.058e-5, 3.39e-6}, PhaseType3{1e-3, 5e-4, 2e-4}}) {
    const auto m = raw_moments(p, 3);
    const auto mm = matrix_moments(p);
    CHECK(rel(m.mu1, mm[0]) < 1e-12);
    CHECK(rel(m.mu2, mm[1]) < 1e-12);
    CHECK(rel(m.mu3, mm[2]) < 1e-12);
    const auto c = phase3_central_moments(p);
    const auto back = raw_from_central(c);
    CHECK(rel(back.mu3, m.mu3) < 1e-12);
  }
}

TEST_CASE("inadmissible inversions raise NoValidFit") {
  CHECK_THROWS_AS(fit_phase3(raw_moments(Weibull{2, 12, 6}, 3)), NoValidFit);
  CHECK_THROWS_AS(fit_phase3(raw_moments(Weibull{3, 168, 6}, 3)), NoValidFit);
  try {
    fit_phase3(raw_moments(Weibull{2, 12, 6}, 3));
  } catch (const NoValidFit& e) {
    const auto v = phase3_intermediates(raw_moments(Weibull{2, 12, 6}, 3));
    CHECK(e.intermediates.x == v.x);
  }
}

TEST_CASE("Erlang fits by mean matching") {
  CHECK(rel(fit_erlang(3, Weibull{3, 168, 6}).lambda, 0.019228232) < 1e-6);
  CHECK(rel(fit_erlang(3, Weibull{2, 12, 6}).lambda, 0.180345653) < 1e-6);
  CHECK(rel(fit_erlang(1, Exponential{0.01}).lambda, 0.01) < 1e-15);
  for (const Distribution& d : {Distribution{Weibull{3, 168, 6}}, Distribution{Weibull{1.12, 461386, 0}}}) {
    const auto e = fit_erlang(4, d);
    CHECK(rel(mean(e), mean(d)) < 1e-14);
  }
  CHECK_THROWS(fit_erlang(0, Exponential{1}));
}

TEST_CASE("density, cdf and hazard") {
  CHECK(hazard(Exponential{0.25}, 3.0) == doctest::Approx(0.25));
  CHECK(hazard(Exponential{0.25}, 300.0) == doctest::Approx(0.25));
  CHECK(cdf(Weibull{3, 168, 6}, 6) == 0.0);
  CHECK(cdf(Weibull{3, 168, 6}, 3) == 0.0);
  CHECK_THROWS(cdf(Exponential{1}, -1));

  const std::vector<Distribution> laws{Exponential{1e-3}, Weibull{1.12, 461386, 0}, Weibull{3, 168, 6},
                                       ErlangK{3, 0.0192}, PhaseType3{2.49e-6, 1.72e-6, 2.88e-6},
                                       PhaseType3{1e-3, 1e-3, 1e-3}};
  for (const auto& d : laws) {
    const double m = mean(d);
    double prev = 0;
    for (int i = 1; i <= 200; ++i) {
      const double t = m * 0.03 * i;
      const double F = cdf(d, t);
      CHECK(F >= prev);
      prev = F;
      CHECK(density(d, t) >= 0);
      const double s = 1 - F;
      if (s > 1e-3) CHECK(std::abs(hazard(d, t) - density(d, t) / s) <= 1e-12 * density(d, t) / s);
      CHECK(std::abs(survival(d, t) - s) < 1e-14);
    }
    CHECK(cdf(d, 60 * m) > 0.999);
    // cdf is the integral of the density
    const double t1 = 1.5 * m;
    const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double t) { return density(d, t); }, 0.0, t1, 15, 1e-12);
    CHECK(std::abs(q - cdf(d, t1)) < 1e-9);
  }
}

TEST_CASE("phase-type hazard flattens to its tail rate") {
  const PhaseType3 p{2.49e-6, 1.72e-6, 2.88e-6};
  const double limit = std::min(p.beta, p.sigma + p.alpha);
  CHECK(rel(hazard(p, 1e8), limit) < 1e-6);
  CHECK(std::abs(hazard_slope(p, 1e8)) < 1e-16);
  // the slope expression is the derivative of the hazard
  for (double t : {1e4, 1e5, 1e6}) {
    const double h = t * 1e-5;
    const double fd = (hazard(p, t + h) - hazard(p, t - h)) / (2 * h);
    CHECK(rel(hazard_slope(p, t), fd) < 1e-5);
  }
}

TEST_CASE("cdf difference of the fitted phase type") {
  const Weibull w{1.12, 461386, 0};
  const auto f = fit_phase3(raw_moments(w, 3));
  const auto grid = linear_grid(0, 2e6, 4001);
  const auto pick = select_branch(f, w, grid);
  const auto d = max_cdf_diff(pick, w, grid);
  CHECK(d.max_positive <= 0.008);
  CHECK(d.max_negative >= -0.005);
  const auto fine = max_cdf_diff(pick, w, linear_grid(0, 2e6, 8001));
  CHECK(std::abs(fine.max_positive - d.max_positive) < 1e-4);
  CHECK(std::abs(fine.max_negative - d.max_negative) < 1e-4);
  const auto same = max_cdf_diff(w, w, grid);
  CHECK(same.max_positive == 0);
  CHECK(same.max_negative == 0);
  CHECK_THROWS(max_cdf_diff(w, w, std::vector<double>{}));
}

TEST_CASE("sampling matches analytic means") {
  const std::vector<Distribution> laws{Exponential{1e-3}, Weibull{1.12, 461386, 0}, Weibull{3, 168, 6},
                                       ErlangK{3, 0.0192}, PhaseType3{2.49e-6, 1.72e-6, 2.88e-6}};
  for (const auto& d : laws) {
    Rng rng(5, 9);
    const int n = 1'000'000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = sample(d, rng);
      CHECK_FALSE(x < 0);
      s += x;
      s2 += x * x;
    }
    const double m = s / n;
    const double se = std::sqrt((s2 / n - m * m) / n);
    CHECK(std::abs(m - mean(d)) < 3.5 * se);
  }
}

TEST_CASE("chain absorption histogram matches the closed-form pdf") {
  const PhaseType3 p{5.4668e-4, 1.058e-5, 3.39e-6};
  Rng rng(3);
  const int n = 1'000'000;
  const int bins = 50;
  std::vector<double> edges;
  // equiprobable bins from the closed-form cdf, by bisection
  for (int b = 1; b < bins; ++b) {
    double lo = 0, hi = 1e8;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (cdf(p, mid) < static_cast<double>(b) / bins ? lo : hi) = mid;
    }
    edges.push_back(0.5 * (lo + hi));
  }
  std::vector<int> count(bins, 0);
  for (int i = 0; i < n; ++i) {
    // race in Young, then BurntIn
    double t = rng.exponential(p.sigma + p.alpha);
    if (rng.uniform() * (p.sigma + p.alpha) < p.sigma) t += rng.exponential(p.beta);
    ++count[std::upper_bound(edges.begin(), edges.end(), t) - edges.begin()];
  }
  double chi = 0;
  const double expect = static_cast<double>(n) / bins;
  for (int c : count) chi += (c - expect) * (c - expect) / expect;
  const double pval = 1 - boost::math::cdf(boost::math::chi_squared(bins - 1), chi);
  CHECK(pval > 0.01);
}

TEST_CASE("KS exponentiality test") {
  std::vector<double> e(10000), w(10000);
  int rejects = 0;
  const int trials = 200;
  for (int k = 0; k < trials; ++k) {
    Rng rng(100, k);
    for (auto& x : e) x = rng.exponential(2.0);
    rejects += ks_exponentiality(e, 0.05).reject;
  }
  // rate estimated from the data makes the asymptotic critical value conservative
  CHECK(static_cast<double>(rejects) / trials <= 0.05 + 3 * std::sqrt(0.05 * 0.95 / trials));

  Rng rng(7);
  for (auto& x : w) x = sample(Weibull{3, 100, 0}, rng);
  const auto r = ks_exponentiality(w, 0.05);
  CHECK(r.reject);
  CHECK(r.statistic > r.critical);

  CHECK_THROWS(ks_exponentiality(std::vector<double>(100, 3.0), 0.05));
  CHECK_THROWS(ks_exponentiality(std::vector<double>{1, 2, 3}, 0.05));
  CHECK_THROWS(ks_exponentiality(e, 0.07));
}

TEST_CASE("validation") {
  CHECK_THROWS(validate(Distribution{Exponential{0}}));
  CHECK_THROWS(validate(Distribution{Weibull{0, 1, 0}}));
  CHECK_THROWS(validate(Distribution{Weibull{1, 1, -1}}));
  CHECK_THROWS(validate(Distribution{ErlangK{0, 1}}));
  CHECK_THROWS(validate(Distribution{PhaseType3{1, -1, 1}}));
  CHECK(describe(Weibull{1.12, 461386, 0}).find("Weibull") != std::string::npos);
}
