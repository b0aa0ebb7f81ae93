#include "raidrel/ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/IterativeLinearSolvers>

#include "raidrel/csv.hpp"

namespace raidrel::ctmc {

Ctmc::Ctmc(std::size_t n, std::vector<Transition> transitions, std::vector<double> initial,
           std::map<std::string, std::vector<std::uint32_t>> labels)
    : exit_(n, 0.0), initial_(std::move(initial)), labels_(std::move(labels)) {
  if (initial_.size() != n) throw CtmcError("initial distribution has wrong length");
  double mass = 0;
  for (double p : initial_) {
    if (!(p >= 0)) throw CtmcError("initial distribution has a negative entry");
    mass += p;
  }
  if (n > 0 && std::abs(mass - 1) > 1e-9) throw CtmcError("initial distribution does not sum to 1");
  for (const auto& t : transitions) {
    if (t.from >= n || t.to >= n) throw CtmcError("transition refers to an unknown state");
    if (t.from == t.to) throw CtmcError("self-loop transition");
    if (!(t.rate >= 0) || !std::isfinite(t.rate)) throw CtmcError("transition rate must be finite and >= 0");
  }
  transitions.erase(std::remove_if(transitions.begin(), transitions.end(), [](const Transition& t) { return t.rate == 0; }),
                    transitions.end());
  std::sort(transitions.begin(), transitions.end(),
            [](const Transition& a, const Transition& b) { return a.from != b.from ? a.from < b.from : a.to < b.to; });
  row_.assign(n + 1, 0);
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const auto& t = transitions[i];
    if (!targets_.empty() && i > 0 && transitions[i - 1].from == t.from && transitions[i - 1].to == t.to) {
      rates_.back() += t.rate;
    } else {
      targets_.push_back(t.to);
      rates_.push_back(t.rate);
      ++row_[t.from + 1];
    }
    exit_[t.from] += t.rate;
  }
  std::partial_sum(row_.begin(), row_.end(), row_.begin());
  for (auto& [name, states] : labels_) {
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    for (auto s : states)
      if (s >= n) throw CtmcError("label '" + name + "' refers to an unknown state");
  }
}

const std::vector<std::uint32_t>& Ctmc::states_with(std::string_view label) const {
  auto it = labels_.find(std::string(label));
  if (it == labels_.end()) throw CtmcError("unknown label '" + std::string(label) + "'");
  return it->second;
}

std::vector<char> Ctmc::mask(std::string_view label) const {
  std::vector<char> m(size(), 0);
  for (auto s : states_with(label)) m[s] = 1;
  return m;
}

std::vector<Transition> Ctmc::transitions() const {
  std::vector<Transition> out;
  out.reserve(targets_.size());
  for (std::size_t s = 0; s < size(); ++s)
    for (std::size_t k = row_[s]; k < row_[s + 1]; ++k)
      out.push_back({static_cast<std::uint32_t>(s), targets_[k], rates_[k]});
  return out;
}

void Ctmc::to_csv(std::ostream& os) const {
  os << "from,to,rate\n";
  for (const auto& t : transitions()) os << t.from << ',' << t.to << ',' << format_double(t.rate) << '\n';
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

std::vector<char> backward_reach(const Ctmc& c, const std::vector<char>& target) {
  const std::size_t n = c.size();
  std::vector<std::vector<std::uint32_t>> pred(n);
  for (std::size_t s = 0; s < n; ++s)
    for (auto t : c.targets(s)) pred[t].push_back(static_cast<std::uint32_t>(s));
  std::vector<char> seen(target);
  std::vector<std::uint32_t> stack;
  for (std::size_t s = 0; s < n; ++s)
    if (target[s]) stack.push_back(static_cast<std::uint32_t>(s));
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto p : pred[v])
      if (!seen[p]) {
        seen[p] = 1;
        stack.push_back(p);
      }
  }
  return seen;
}

double max_residual(const SpMat& a, const Eigen::VectorXd& x) {
  Eigen::VectorXd r = Eigen::VectorXd::Ones(x.size()) - a * x;
  return r.cwiseAbs().maxCoeff();
}

}  // namespace

MttaResult mtta(const Ctmc& c, std::string_view target_label, const SolveOptions& opts) {
  if (!(opts.tolerance > 0) || !(opts.epsilon_u > 0)) throw CtmcError("tolerances must be > 0");
  const std::size_t n = c.size();
  const std::vector<char> target = c.mask(target_label);
  MttaResult res;

  // forward closure of the initial support, stopping at target states
  std::vector<char> live(n, 0);
  std::vector<std::uint32_t> stack;
  for (std::size_t s = 0; s < n; ++s)
    if (c.initial()[s] > 0 && !target[s]) {
      live[s] = 1;
      stack.push_back(static_cast<std::uint32_t>(s));
    }
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (auto t : c.targets(v))
      if (!target[t] && !live[t]) {
        live[t] = 1;
        stack.push_back(t);
      }
  }
  const std::vector<char> reach = backward_reach(c, target);
  std::vector<int> idx(n, -1);
  int m = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (!live[s]) continue;
    if (!reach[s]) {
      res.finite = false;
      res.hours = std::numeric_limits<double>::infinity();
      return res;
    }
    idx[s] = m++;
  }
  res.transient_states = static_cast<std::size_t>(m);
  if (m == 0) return res;

  std::vector<Eigen::Triplet<double, int>> trip;
  for (std::size_t s = 0; s < n; ++s) {
    if (idx[s] < 0) continue;
    trip.emplace_back(idx[s], idx[s], c.exit_rate(s));
    auto tg = c.targets(s);
    auto rt = c.rates(s);
    for (std::size_t k = 0; k < tg.size(); ++k)
      if (idx[tg[k]] >= 0) trip.emplace_back(idx[s], idx[tg[k]], -rt[k]);
  }
  SpMat a(m, m);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd x;

  LinearMethod method = opts.method;
  if (method == LinearMethod::Auto)
    method = static_cast<std::size_t>(m) <= opts.dense_limit ? LinearMethod::Dense : LinearMethod::Krylov;

  if (method == LinearMethod::Krylov) {
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double, int>> solver;
    solver.preconditioner().setDroptol(1e-6);
    solver.setTolerance(opts.tolerance);
    solver.setMaxIterations(static_cast<int>(std::min<std::size_t>(opts.max_iterations, 1u << 30)));
    solver.compute(a);
    if (solver.info() == Eigen::Success) {
      x = solver.solve(ones);
      res.iterations = static_cast<std::size_t>(solver.iterations());
    }
    // fall back to a direct factorization when the iteration stalls
    if (solver.info() != Eigen::Success || !x.allFinite())
      method = LinearMethod::SparseLU;
  }

  if (method == LinearMethod::Dense) {
    Eigen::MatrixXd dense(a);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
    x = lu.solve(ones);
    for (int it = 0; it < 3 && max_residual(a, x) > opts.tolerance; ++it) x += lu.solve(ones - a * x);
  } else if (method == LinearMethod::SparseLU) {
    Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) throw SolverError("sparse LU factorization failed: singular system");
    x = lu.solve(ones);
    for (int it = 0; it < 3 && max_residual(a, x) > opts.tolerance; ++it) x += lu.solve(ones - a * x);
  } else if (method == LinearMethod::GaussSeidel) {
    // Gauss-Seidel in state order
    Eigen::SparseMatrix<double, Eigen::RowMajor, int> ar(a);
    x = Eigen::VectorXd::Zero(m);
    std::size_t it = 0;
    for (; it < opts.max_iterations; ++it) {
      double change = 0, scale = 0;
      for (int i = 0; i < m; ++i) {
        double diag = 0, acc = 1;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor, int>::InnerIterator e(ar, i); e; ++e) {
          if (e.col() == i)
            diag = e.value();
          else
            acc -= e.value() * x[e.col()];
        }
        const double v = acc / diag;
        change = std::max(change, std::abs(v - x[i]));
        scale = std::max(scale, std::abs(v));
        x[i] = v;
      }
      if (change <= opts.tolerance * scale) break;
    }
    res.iterations = it + 1;
    if (it == opts.max_iterations) throw SolverError("Gauss-Seidel did not converge within max_iterations");
  }
  if (!x.allFinite()) throw SolverError("linear solve produced non-finite values: singular system");
  res.residual = max_residual(a, x);
  double h = 0;
  for (std::size_t s = 0; s < n; ++s)
    if (idx[s] >= 0) h += c.initial()[s] * x[idx[s]];
  res.hours = h;
  return res;
}

Ctmc merge_absorbing(const Ctmc& c, std::span<const std::string> labels) {
  const std::size_t n = c.size();
  std::vector<char> merged(n, 0);
  for (const auto& l : labels)
    if (c.has_label(l))
      for (auto s : c.states_with(l)) {
        if (!c.targets(s).empty()) throw CtmcError("label '" + l + "' is on a non-absorbing state");
        merged[s] = 1;
      }
  if (std::find(merged.begin(), merged.end(), 1) == merged.end()) return c;

  std::vector<std::uint32_t> map(n);
  std::uint32_t next = 0;
  for (std::size_t s = 0; s < n; ++s)
    if (!merged[s]) map[s] = next++;
  const std::uint32_t sink = next;
  for (std::size_t s = 0; s < n; ++s)
    if (merged[s]) map[s] = sink;

  std::vector<Transition> tr;
  for (const auto& t : c.transitions()) tr.push_back({map[t.from], map[t.to], t.rate});
  std::vector<double> init(sink + 1, 0.0);
  for (std::size_t s = 0; s < n; ++s) init[map[s]] += c.initial()[s];
  std::map<std::string, std::vector<std::uint32_t>> lab;
  for (const auto& [name, states] : c.labels()) {
    std::set<std::uint32_t> out;
    for (auto s : states) out.insert(map[s]);
    lab[name].assign(out.begin(), out.end());
  }
  for (const auto& l : labels) {
    auto& v = lab[l];
    if (std::find(v.begin(), v.end(), sink) == v.end()) v.push_back(sink);
  }
  return Ctmc(sink + 1, std::move(tr), std::move(init), std::move(lab));
}

}  // namespace raidrel::ctmc
