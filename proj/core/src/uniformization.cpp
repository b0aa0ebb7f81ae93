#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Sparse>

#include "raidrel/ctmc.hpp"

namespace raidrel::ctmc {

PoissonWindow poisson_window(double lambda, double epsilon) {
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw CtmcError("poisson rate must be finite and >= 0");
  if (!(epsilon > 0 && epsilon < 1)) throw CtmcError("truncation error must be in (0, 1)");
  PoissonWindow w;
  if (lambda == 0) {
    w.weights = {1.0};
    return w;
  }
  // weights relative to the mode, expanded until the geometric tail bounds
  // on both sides are below epsilon/2 of the accumulated mass
  const auto mode = static_cast<std::size_t>(std::floor(lambda));
  std::vector<double> right{1.0};
  double total = 1.0;
  for (std::size_t k = mode;; ++k) {
    const double r = lambda / static_cast<double>(k + 1);
    const double next = right.back() * r;
    if (r < 1 && next * (1 / (1 - r)) <= 0.5 * epsilon * total) break;
    right.push_back(next);
    total += next;
  }
  std::vector<double> left;
  double cur = 1.0;
  for (std::size_t k = mode; k > 0; --k) {
    const double r = static_cast<double>(k) / lambda;
    const double prev = cur * r;
    if (prev * (1 / (1 - r)) <= 0.5 * epsilon * total) break;
    left.push_back(prev);
    total += prev;
    cur = prev;
  }
  w.left = mode - left.size();
  w.right = mode + right.size() - 1;
  w.weights.reserve(left.size() + right.size());
  for (auto it = left.rbegin(); it != left.rend(); ++it) w.weights.push_back(*it / total);
  for (double v : right) w.weights.push_back(v / total);
  return w;
}

namespace {

class Uniformized {
 public:
  explicit Uniformized(const Ctmc& c) : n_(static_cast<Eigen::Index>(c.size())) {
    double qmax = 0;
    for (std::size_t s = 0; s < c.size(); ++s) qmax = std::max(qmax, c.exit_rate(s));
    q_ = qmax * 1.02;
    if (q_ == 0) return;
    // transpose of P = I + Q/q, row-major so a step is a gather per target
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(c.transition_count() + c.size());
    for (std::size_t s = 0; s < c.size(); ++s) {
      const auto i = static_cast<Eigen::Index>(s);
      trip.emplace_back(i, i, 1 - c.exit_rate(s) / q_);
      auto tg = c.targets(s);
      auto rt = c.rates(s);
      for (std::size_t k = 0; k < tg.size(); ++k) trip.emplace_back(static_cast<Eigen::Index>(tg[k]), i, rt[k] / q_);
    }
    pt_.resize(n_, n_);
    pt_.setFromTriplets(trip.begin(), trip.end());
  }

  std::vector<double> advance(const std::vector<double>& pi, double dt, double eps) const {
    if (dt == 0 || q_ == 0) return pi;
    const PoissonWindow w = poisson_window(q_ * dt, eps);
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(pi.data(), n_);
    Eigen::VectorXd tmp(n_), acc = Eigen::VectorXd::Zero(n_);
    for (std::size_t k = 0; k <= w.right; ++k) {
      if (k >= w.left) acc += w.weights[k - w.left] * v;
      if (k == w.right) break;
      tmp.noalias() = pt_ * v;
      v.swap(tmp);
    }
    return {acc.data(), acc.data() + n_};
  }

 private:
  Eigen::Index n_;
  double q_ = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> pt_;
};

}  // namespace

std::vector<std::vector<double>> transient_series(const Ctmc& c, std::span<const double> times,
                                                  const SolveOptions& opts) {
  Uniformized u(c);
  std::vector<std::vector<double>> out;
  std::vector<double> pi = c.initial();
  double now = 0;
  for (double t : times) {
    if (!(t >= 0)) throw CtmcError("time must be nonnegative");
    if (t < now) throw CtmcError("times must be ascending");
    pi = u.advance(pi, t - now, opts.epsilon_u);
    now = t;
    out.push_back(pi);
  }
  return out;
}

std::vector<double> transient(const Ctmc& c, double t, const SolveOptions& opts) {
  const double ts[] = {t};
  return std::move(transient_series(c, ts, opts).front());
}

std::vector<double> absorption_curve(const Ctmc& c, std::span<const double> times, std::string_view label,
                                     const SolveOptions& opts) {
  const auto& states = c.states_with(label);
  std::vector<double> out;
  for (const auto& pi : transient_series(c, times, opts)) {
    double p = 0;
    for (auto s : states) p += pi[s];
    out.push_back(std::min(1.0, p));
  }
  return out;
}

double absorption_probability(const Ctmc& c, double t, std::string_view label, const SolveOptions& opts) {
  const double ts[] = {t};
  return absorption_curve(c, ts, label, opts).front();
}

std::vector<DdfRow> ddf_curve(const Ctmc& group_model, std::span<const double> times, double per,
                              const SolveOptions& opts) {
  const auto p = absorption_curve(group_model, times, kDil, opts);
  std::vector<DdfRow> rows;
  for (std::size_t i = 0; i < times.size(); ++i) rows.push_back({times[i], per * p[i]});
  return rows;
}

}  // namespace raidrel::ctmc
