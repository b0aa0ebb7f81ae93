#include "raidrel/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

namespace raidrel::dist {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool positive_finite(double v) { return std::isfinite(v) && v > 0; }

void check_time(double t) {
  if (!(t >= 0)) throw DistributionError("time must be nonnegative");
}

// P(chain is in BurntIn at t) / sigma, written so neither branch overflows.
double burnt_mass(const PhaseType3& p, double t) {
  const double c = p.sigma + p.alpha;
  const double b = p.beta;
  const double d = c - b;
  if (d == 0) return t * std::exp(-b * t);
  if (d > 0) return std::exp(-b * t) * (-std::expm1(-d * t)) / d;
  return std::exp(-c * t) * std::expm1(d * t) / d;
}

}  // namespace

void validate(const Distribution& d) {
  std::visit(overloaded{
                 [](const Exponential& e) {
                   if (!positive_finite(e.rate)) throw DistributionError("exponential rate must be > 0");
                 },
                 [](const Weibull& w) {
                   if (!positive_finite(w.shape)) throw DistributionError("weibull shape must be > 0");
                   if (!positive_finite(w.scale)) throw DistributionError("weibull scale must be > 0");
                   if (!(w.offset >= 0) || !std::isfinite(w.offset))
                     throw DistributionError("weibull offset must be >= 0");
                 },
                 [](const ErlangK& e) {
                   if (e.k < 1) throw DistributionError("erlang k must be >= 1");
                   if (!positive_finite(e.lambda)) throw DistributionError("erlang lambda must be > 0");
                 },
                 [](const PhaseType3& p) {
                   if (!positive_finite(p.sigma) || !positive_finite(p.alpha) || !positive_finite(p.beta))
                     throw DistributionError("phase-type rates must be > 0");
                 },
             },
             d);
}

std::string describe(const Distribution& d) {
  std::ostringstream os;
  os.precision(10);
  std::visit(overloaded{
                 [&](const Exponential& e) { os << "Exponential(rate=" << e.rate << ")"; },
                 [&](const Weibull& w) {
                   os << "Weibull(shape=" << w.shape << ", scale=" << w.scale << ", offset=" << w.offset << ")";
                 },
                 [&](const ErlangK& e) { os << "Erlang(k=" << e.k << ", lambda=" << e.lambda << ")"; },
                 [&](const PhaseType3& p) {
                   os << "PhaseType3(sigma=" << p.sigma << ", alpha=" << p.alpha << ", beta=" << p.beta << ")";
                 },
             },
             d);
  return os.str();
}

Moments raw_moments(const Distribution& d, int r_max) {
  if (r_max < 1 || r_max > 3) throw DistributionError("r_max must be 1, 2 or 3");
  validate(d);
  std::array<double, 4> m{1, 0, 0, 0};
  std::visit(overloaded{
                 [&](const Exponential& e) {
                   for (int r = 1; r <= 3; ++r) m[r] = std::tgamma(r + 1.0) / std::pow(e.rate, r);
                 },
                 [&](const Weibull& w) {
                   std::array<double, 4> core{1, 0, 0, 0};
                   for (int j = 1; j <= 3; ++j) core[j] = std::pow(w.scale, j) * std::tgamma(1.0 + j / w.shape);
                   // E[(offset + X)^r] by binomial expansion
                   static constexpr int binom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
                   for (int r = 1; r <= 3; ++r) {
                     double s = 0;
                     for (int j = 0; j <= r; ++j) s += binom[r][j] * std::pow(w.offset, r - j) * core[j];
                     m[r] = s;
                   }
                 },
                 [&](const ErlangK& e) {
                   double rising = 1;
                   for (int r = 1; r <= 3; ++r) {
                     rising *= e.k + r - 1;
                     m[r] = rising / std::pow(e.lambda, r);
                   }
                 },
                 [&](const PhaseType3& p) {
                   const double c = p.sigma + p.alpha;
                   const double b = p.beta;
                   const double q = p.sigma / c;
                   m[1] = 1 / c + q / b;
                   m[2] = 2 / (c * c) + 2 * q / (c * b) + 2 * q / (b * b);
                   m[3] = 6 / (c * c * c) + 6 * q / (c * c * b) + 6 * q / (c * b * b) + 6 * q / (b * b * b);
                 },
             },
             d);
  Moments out;
  out.mu1 = m[1];
  if (r_max >= 2) out.mu2 = m[2];
  if (r_max >= 3) out.mu3 = m[3];
  return out;
}

double mean(const Distribution& d) { return raw_moments(d, 1).mu1; }

CentralMoments central_moments(const Moments& m) {
  return {m.mu1, m.mu2 - m.mu1 * m.mu1, m.mu3 - 3 * m.mu1 * m.mu2 + 2 * m.mu1 * m.mu1 * m.mu1};
}

Moments raw_from_central(const CentralMoments& c) {
  const double m1 = c.mean;
  const double m2 = c.variance + m1 * m1;
  return {m1, m2, c.third + 3 * m1 * m2 - 2 * m1 * m1 * m1};
}

CentralMoments phase3_central_moments(const PhaseType3& p) {
  // closed-form expressions of the chain's mean, variance and third central moment
  const double s = p.sigma, a = p.alpha, b = p.beta;
  const double c = s + a;
  const double mean = (b + s) / (b * c);
  const double var = (b * b + s * s + 2 * a * s) / (b * b * c * c);
  const double third = 2 * (b * b * b + s * s * s + 3 * a * s * s + 3 * a * a * s) / (b * b * b * c * c * c);
  return {mean, var, third};
}

namespace {

// Extended precision: x cancels terms of order m3^2 and its square root
// amplifies whatever round-off is left.
using Wide = long double;

struct Scaled {
  Wide m1, m2, m3;
  double scale;
};

// The inversion is stated on (mean, variance, third central moment). Work in
// units of the mean so the sixth powers stay well inside double range.
Scaled scaled_central(const Moments& m) {
  if (!positive_finite(m.mu1)) throw DistributionError("mu1 must be > 0");
  if (!(m.mu2 >= m.mu1 * m.mu1 * (1 - 1e-12))) throw DistributionError("mu2 < mu1^2 (negative variance)");
  if (!positive_finite(m.mu3)) throw DistributionError("mu3 must be > 0");
  const Wide s = m.mu1;
  const Wide r2 = m.mu2 / (s * s), r3 = m.mu3 / (s * s * s);
  const Wide var = r2 - 1;
  const Wide third = r3 - 3 * r2 + 2;
  return {1, std::max(var, Wide(0)), third, m.mu1};
}

struct WideIntermediates {
  Wide x, y;
};

WideIntermediates wide_intermediates(const Scaled& v) {
  const Wide m1 = v.m1, m2 = v.m2, m3 = v.m3;
  const Wide m1_2 = m1 * m1, m1_3 = m1_2 * m1;
  const Wide x = -2 * m1_3 * m1_3 + 6 * m1_2 * m1_2 * m2 - 18 * m1_2 * m2 * m2 + 18 * m2 * m2 * m2 +
                 8 * m1_3 * m3 - 12 * m1 * m2 * m3 + m3 * m3;
  const Wide y = m1_2 * m1_2 + 3 * m2 * m2 - 2 * m1 * m3;
  return {x, y};
}

}  // namespace

MomentMatchIntermediates phase3_intermediates(const Moments& m) {
  const WideIntermediates w = wide_intermediates(scaled_central(m));
  return {static_cast<double>(w.x), static_cast<double>(w.y)};
}

std::pair<PhaseType3, PhaseType3> fit_phase3(const Moments& m) {
  const Scaled v = scaled_central(m);
  const Wide m1 = v.m1, m2 = v.m2, m3 = v.m3;
  WideIntermediates w = wide_intermediates(v);
  const MomentMatchIntermediates in{static_cast<double>(w.x), static_cast<double>(w.y)};
  // x is a difference of terms of order m3^2; values within round-off of zero are zero
  const Wide mag = 2 + 6 * m2 + 18 * m2 * m2 + 18 * m2 * m2 * m2 + 8 * std::abs(m3) + 12 * m2 * std::abs(m3) + m3 * m3;
  if (w.x < 0 && w.x > -1e-12L * mag) w.x = 0;
  if (w.x < 0) throw NoValidFit("moment inversion has no real solution (x < 0)", in);
  if (w.y == 0 || !std::isfinite(static_cast<double>(w.y)))
    throw NoValidFit("moment inversion is singular (y == 0)", in);

  const Wide rx = std::sqrt(w.x);
  const Wide sc = v.scale;
  const double alpha = static_cast<double>(-2 * (m1 * m1 * m1 - 3 * m1 * m2 + m3) / w.y / sc);
  auto branch = [&](int sign) {
    return PhaseType3{static_cast<double>((4 * m1 * m1 * m1 - 6 * m1 * m2 + m3 + sign * rx) / w.y / sc), alpha,
                      static_cast<double>((2 * m1 * m1 * m1 - m3 - sign * rx) / w.y / sc)};
  };
  const PhaseType3 plus = branch(+1);
  const PhaseType3 minus = branch(-1);
  auto ok = [](const PhaseType3& p) {
    return positive_finite(p.sigma) && positive_finite(p.alpha) && positive_finite(p.beta);
  };
  if (!(alpha > 0)) throw NoValidFit("moment inversion gives a non-positive alpha", in);
  if (ok(plus) && ok(minus)) return {plus, minus};
  if (ok(plus)) return {plus, plus};
  if (ok(minus)) return {minus, minus};
  throw NoValidFit("moment inversion gives non-positive sigma or beta on both branches", in);
}

ErlangK fit_erlang(int k, const Distribution& d) {
  if (k < 1) throw DistributionError("erlang k must be >= 1");
  const double m = mean(d);
  if (!positive_finite(m)) throw DistributionError("distribution mean is not finite");
  return {k, k / m};
}

double density(const Distribution& d, double t) {
  check_time(t);
  return std::visit(overloaded{
                        [&](const Exponential& e) { return e.rate * std::exp(-e.rate * t); },
                        [&](const Weibull& w) {
                          if (t <= w.offset) return (t == w.offset && w.shape == 1) ? 1 / w.scale : 0.0;
                          const double z = (t - w.offset) / w.scale;
                          return w.shape / w.scale * std::pow(z, w.shape - 1) * std::exp(-std::pow(z, w.shape));
                        },
                        [&](const ErlangK& e) {
                          return e.lambda * boost::math::gamma_p_derivative(static_cast<double>(e.k), e.lambda * t);
                        },
                        [&](const PhaseType3& p) {
                          const double c = p.sigma + p.alpha;
                          return p.alpha * std::exp(-c * t) + p.beta * p.sigma * burnt_mass(p, t);
                        },
                    },
                    d);
}

double survival(const Distribution& d, double t) {
  check_time(t);
  return std::visit(overloaded{
                        [&](const Exponential& e) { return std::exp(-e.rate * t); },
                        [&](const Weibull& w) {
                          if (t <= w.offset) return 1.0;
                          return std::exp(-std::pow((t - w.offset) / w.scale, w.shape));
                        },
                        [&](const ErlangK& e) {
                          return boost::math::gamma_q(static_cast<double>(e.k), e.lambda * t);
                        },
                        [&](const PhaseType3& p) {
                          const double c = p.sigma + p.alpha;
                          return std::exp(-c * t) + p.sigma * burnt_mass(p, t);
                        },
                    },
                    d);
}

double cdf(const Distribution& d, double t) {
  check_time(t);
  return std::visit(overloaded{
                        [&](const Exponential& e) { return -std::expm1(-e.rate * t); },
                        [&](const Weibull& w) {
                          if (t <= w.offset) return 0.0;
                          return -std::expm1(-std::pow((t - w.offset) / w.scale, w.shape));
                        },
                        [&](const ErlangK& e) {
                          return boost::math::gamma_p(static_cast<double>(e.k), e.lambda * t);
                        },
                        [&](const PhaseType3&) { return 1.0 - survival(d, t); },
                    },
                    d);
}

double hazard(const Distribution& d, double t) {
  check_time(t);
  if (const auto* e = std::get_if<Exponential>(&d)) return e->rate;
  if (const auto* w = std::get_if<Weibull>(&d)) {
    if (t < w->offset) return 0.0;
    const double z = (t - w->offset) / w->scale;
    return w->shape / w->scale * std::pow(z, w->shape - 1);
  }
  const double s = survival(d, t);
  if (s <= 0) return std::numeric_limits<double>::infinity();
  return density(d, t) / s;
}

double hazard_slope(const PhaseType3& p, double t) {
  check_time(t);
  const double c = p.sigma + p.alpha;
  const double e = std::exp(-c * t);
  const double bm = burnt_mass(p, t);
  const double f = p.alpha * e + p.beta * p.sigma * bm;
  const double s = e + p.sigma * bm;
  const double df = -p.alpha * c * e + p.beta * p.sigma * (e - p.beta * bm);
  return (df * s + f * f) / (s * s);
}

CdfDiff max_cdf_diff(const Distribution& a, const Distribution& b, std::span<const double> grid) {
  if (grid.empty()) throw DistributionError("empty grid");
  CdfDiff out;
  out.t_positive = out.t_negative = grid.front();
  double prev = -1;
  for (double t : grid) {
    if (!(t >= 0) || !(t > prev)) throw DistributionError("grid must be strictly increasing and nonnegative");
    prev = t;
    const double diff = cdf(a, t) - cdf(b, t);
    if (diff > out.max_positive) {
      out.max_positive = diff;
      out.t_positive = t;
    }
    if (diff < out.max_negative) {
      out.max_negative = diff;
      out.t_negative = t;
    }
  }
  return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) throw DistributionError("grid needs hi > lo and at least 2 points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  g.back() = hi;
  return g;
}

PhaseType3 select_branch(const std::pair<PhaseType3, PhaseType3>& fits, const Distribution& target,
                         std::span<const double> grid) {
  auto sup = [&](const PhaseType3& p) {
    const CdfDiff d = max_cdf_diff(p, target, grid);
    return std::max(d.max_positive, -d.max_negative);
  };
  return sup(fits.second) < sup(fits.first) ? fits.second : fits.first;
}

double sample(const Distribution& d, Rng& rng) {
  return std::visit(overloaded{
                        [&](const Exponential& e) { return rng.exponential(e.rate); },
                        [&](const Weibull& w) {
                          return w.offset + w.scale * std::pow(-std::log(rng.uniform()), 1.0 / w.shape);
                        },
                        [&](const ErlangK& e) {
                          double s = 0;
                          for (int i = 0; i < e.k; ++i) s += rng.exponential(e.lambda);
                          return s;
                        },
                        [&](const PhaseType3& p) {
                          const double c = p.sigma + p.alpha;
                          double t = rng.exponential(c);
                          if (rng.uniform() * c < p.sigma) t += rng.exponential(p.beta);
                          return t;
                        },
                    },
                    d);
}

KsResult ks_exponentiality(std::span<const double> samples, double significance) {
  static constexpr double allowed[] = {0.01, 0.05, 0.10, 0.20};
  if (std::none_of(std::begin(allowed), std::end(allowed), [&](double a) { return std::abs(a - significance) < 1e-12; }))
    throw DistributionError("significance must be one of 0.01, 0.05, 0.10, 0.20");
  if (samples.size() < 8) throw DistributionError("KS test needs at least 8 samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  if (x.front() < 0) throw DistributionError("negative sample");
  if (x.front() == x.back()) throw DistributionError("degenerate (constant) samples");
  double sum = 0;
  for (double v : x) sum += v;
  const double n = static_cast<double>(x.size());
  const double rate = n / sum;
  double dmax = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = -std::expm1(-rate * x[i]);
    dmax = std::max({dmax, (static_cast<double>(i) + 1) / n - f, f - static_cast<double>(i) / n});
  }
  KsResult r;
  r.statistic = dmax;
  r.critical = std::sqrt(-0.5 * std::log(significance / 2)) / std::sqrt(n);
  r.reject = dmax > r.critical;
  return r;
}

}  // namespace raidrel::dist
