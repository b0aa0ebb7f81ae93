#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "raidrel/ctmc.hpp"
#include "raidrel/rng.hpp"

namespace fixtures {

// Random absorbing chain: states 0..n-2 transient, n-1 labelled DIL. Each
// transient state moves to a few random states with rates in [0.05, 1] and,
// with probability 0.3, to DIL; a forward edge keeps DIL reachable.
inline raidrel::ctmc::Ctmc random_ctmc(raidrel::Rng& rng, std::size_t n) {
  using raidrel::ctmc::Transition;
  std::vector<Transition> tr;
  const auto sink = static_cast<std::uint32_t>(n - 1);
  auto rate = [&] { return 0.05 + 0.95 * rng.uniform(); };
  for (std::uint32_t s = 0; s < sink; ++s) {
    const auto fwd = static_cast<std::uint32_t>(s + 1 + static_cast<std::uint32_t>(rng.uniform() * (sink - s)));
    tr.push_back({s, std::min(fwd, sink), rate()});
    const int extra = static_cast<int>(rng.uniform() * 4);
    for (int k = 0; k < extra; ++k) {
      const auto to = static_cast<std::uint32_t>(rng.uniform() * sink);
      if (to != s) tr.push_back({s, to, rate()});
    }
    if (rng.uniform() < 0.3) tr.push_back({s, sink, 0.1 * rate()});
  }
  std::vector<double> init(n, 0.0);
  init[0] = 1.0;
  return raidrel::ctmc::Ctmc(n, std::move(tr), std::move(init), {{"DIL", {sink}}});
}

// pi(t) = pi(0) exp(Q t) by dense scaling-and-squaring
inline std::vector<double> expm_distribution(const raidrel::ctmc::Ctmc& c, double t) {
  const auto n = static_cast<Eigen::Index>(c.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (const auto& tr : c.transitions()) {
    q(tr.from, tr.to) += tr.rate;
    q(tr.from, tr.from) -= tr.rate;
  }
  Eigen::RowVectorXd p0(n);
  for (Eigen::Index i = 0; i < n; ++i) p0(i) = c.initial()[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd e = (q * t).exp();
  const Eigen::RowVectorXd p = p0 * e;
  return {p.data(), p.data() + n};
}

// integral of the survival function by composite Simpson on [0, T], T chosen
// where the survival has dropped below 1e-10
inline double mtta_by_quadrature(const raidrel::ctmc::Ctmc& c, double mean_guess) {
  double horizon = 10 * mean_guess;
  for (;;) {
    const std::vector<double> end{horizon};
    if (1 - raidrel::ctmc::absorption_curve(c, end).front() < 1e-10) break;
    horizon *= 2;
  }
  const int intervals = 4000;
  const double h = horizon / intervals;
  std::vector<double> times(intervals + 1);
  for (int i = 0; i <= intervals; ++i) times[static_cast<std::size_t>(i)] = i * h;
  const auto f = raidrel::ctmc::absorption_curve(c, times);
  double s = 0;
  for (int i = 0; i <= intervals; ++i) {
    const double w = (i == 0 || i == intervals) ? 1 : (i % 2 ? 4 : 2);
    s += w * (1 - f[static_cast<std::size_t>(i)]);
  }
  return s * h / 3;
}

}  // namespace fixtures
