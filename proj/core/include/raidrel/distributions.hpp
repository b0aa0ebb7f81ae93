#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "raidrel/rng.hpp"

namespace raidrel::dist {

struct Exponential {
  double rate;
};

// 2- or 3-parameter Weibull; offset is a location shift in hours.
struct Weibull {
  double shape;
  double scale;
  double offset = 0.0;
};

struct ErlangK {
  int k;
  double lambda;
};

// Absorption time of Young -(sigma)-> BurntIn, Young -(alpha)-> Fail,
// BurntIn -(beta)-> Fail, starting in Young.
struct PhaseType3 {
  double sigma;
  double alpha;
  double beta;
};

using Distribution = std::variant<Exponential, Weibull, ErlangK, PhaseType3>;

// raw moments E[T], E[T^2], E[T^3]
struct Moments {
  double mu1 = 0;
  double mu2 = 0;
  double mu3 = 0;
};

struct MomentMatchIntermediates {
  double x = 0;
  double y = 0;
};

class DistributionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NoValidFit : public std::runtime_error {
 public:
  NoValidFit(const std::string& what, MomentMatchIntermediates v)
      : std::runtime_error(what), intermediates(v) {}
  MomentMatchIntermediates intermediates;
};

void validate(const Distribution& d);
std::string describe(const Distribution& d);

Moments raw_moments(const Distribution& d, int r_max = 3);
double mean(const Distribution& d);

// Moments of the 3-state chain in closed form (mean, variance, third central moment).
struct CentralMoments {
  double mean = 0;
  double variance = 0;
  double third = 0;
};
CentralMoments central_moments(const Moments& m);
Moments raw_from_central(const CentralMoments& c);
CentralMoments phase3_central_moments(const PhaseType3& p);

MomentMatchIntermediates phase3_intermediates(const Moments& m);
// Both +/- branches; throws NoValidFit when the inversion is inadmissible.
std::pair<PhaseType3, PhaseType3> fit_phase3(const Moments& m);

ErlangK fit_erlang(int k, const Distribution& d);

double density(const Distribution& d, double t);
double cdf(const Distribution& d, double t);
double survival(const Distribution& d, double t);
double hazard(const Distribution& d, double t);
// d/dt of the hazard of the 3-state chain
double hazard_slope(const PhaseType3& p, double t);

struct CdfDiff {
  double max_positive = 0;
  double max_negative = 0;
  double t_positive = 0;
  double t_negative = 0;
};
CdfDiff max_cdf_diff(const Distribution& a, const Distribution& b, std::span<const double> grid);
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

// Branch whose cdf stays closest (sup norm over grid) to target.
PhaseType3 select_branch(const std::pair<PhaseType3, PhaseType3>& fits, const Distribution& target,
                         std::span<const double> grid);

double sample(const Distribution& d, Rng& rng);

struct KsResult {
  double statistic = 0;
  double critical = 0;
  bool reject = false;
};
KsResult ks_exponentiality(std::span<const double> samples, double significance);

}  // namespace raidrel::dist
