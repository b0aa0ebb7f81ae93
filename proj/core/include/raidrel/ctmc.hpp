#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace raidrel::ctmc {

inline constexpr std::string_view kDil = "DIL";

struct Transition {
  std::uint32_t from;
  std::uint32_t to;
  double rate;
};

class CtmcError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sparse CTMC in compressed-row form. Parallel transitions between the same
// pair of states are summed; zero rates are dropped.
class Ctmc {
 public:
  Ctmc() = default;
  Ctmc(std::size_t n, std::vector<Transition> transitions, std::vector<double> initial,
       std::map<std::string, std::vector<std::uint32_t>> labels = {});

  std::size_t size() const { return exit_.size(); }
  std::size_t transition_count() const { return targets_.size(); }

  std::span<const std::uint32_t> targets(std::size_t s) const {
    return {targets_.data() + row_[s], targets_.data() + row_[s + 1]};
  }
  std::span<const double> rates(std::size_t s) const { return {rates_.data() + row_[s], rates_.data() + row_[s + 1]}; }
  double exit_rate(std::size_t s) const { return exit_[s]; }
  const std::vector<double>& initial() const { return initial_; }

  const std::map<std::string, std::vector<std::uint32_t>>& labels() const { return labels_; }
  bool has_label(std::string_view label) const { return labels_.count(std::string(label)) > 0; }
  const std::vector<std::uint32_t>& states_with(std::string_view label) const;
  std::vector<char> mask(std::string_view label) const;

  std::vector<Transition> transitions() const;
  void to_csv(std::ostream& os) const;

 private:
  std::vector<std::size_t> row_{0};
  std::vector<std::uint32_t> targets_;
  std::vector<double> rates_;
  std::vector<double> exit_;
  std::vector<double> initial_;
  std::map<std::string, std::vector<std::uint32_t>> labels_;
};

// Auto: dense LU up to dense_limit states, else preconditioned BiCGSTAB with
// a sparse LU fallback.
enum class LinearMethod { Auto, Dense, SparseLU, GaussSeidel, Krylov };

struct SolveOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
  double epsilon_u = 1e-9;
  LinearMethod method = LinearMethod::Auto;
  std::size_t dense_limit = 2000;
};

struct MttaResult {
  bool finite = true;
  double hours = 0;
  double residual = 0;
  std::size_t iterations = 0;
  std::size_t transient_states = 0;
};

MttaResult mtta(const Ctmc& c, std::string_view target_label = kDil, const SolveOptions& opts = {});

std::vector<double> transient(const Ctmc& c, double t, const SolveOptions& opts = {});
// distributions at each time; times must be ascending
std::vector<std::vector<double>> transient_series(const Ctmc& c, std::span<const double> times,
                                                  const SolveOptions& opts = {});
double absorption_probability(const Ctmc& c, double t, std::string_view label = kDil, const SolveOptions& opts = {});
std::vector<double> absorption_curve(const Ctmc& c, std::span<const double> times, std::string_view label = kDil,
                                     const SolveOptions& opts = {});

struct DdfRow {
  double t_hr;
  double value;
};
std::vector<DdfRow> ddf_curve(const Ctmc& group_model, std::span<const double> times, double per,
                              const SolveOptions& opts = {});

// Poisson(lambda) weights on [left, right] whose total omitted mass is <= epsilon.
struct PoissonWindow {
  std::size_t left = 0;
  std::size_t right = 0;
  std::vector<double> weights;
};
PoissonWindow poisson_window(double lambda, double epsilon);

// Collapses every state carrying any of `labels` into one absorbing state that
// carries all of them.
Ctmc merge_absorbing(const Ctmc& c, std::span<const std::string> labels);

}  // namespace raidrel::ctmc
