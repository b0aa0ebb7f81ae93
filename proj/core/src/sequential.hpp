#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "raidrel/rng.hpp"
#include "raidrel/simulate.hpp"

namespace raidrel::sim::detail {

struct PathResult {
  double value;
  bool truncated;
};

// Batched paths until the relative half-width target or max_paths.
template <class Sampler>
SimEstimate sequential(const SimOptions& o, Sampler&& sample) {
  validate(o);
  std::vector<double> values;
  std::size_t truncated = 0;
  SimEstimate e;
  while (values.size() < o.max_paths) {
    const std::size_t stop = std::min(o.max_paths, values.size() + o.batch);
    for (std::size_t i = values.size(); i < stop; ++i) {
      Rng rng(o.seed, i);
      const PathResult r = sample(rng);
      values.push_back(r.value);
      truncated += r.truncated;
    }
    e = summarize(values, o.confidence);
    if (values.size() >= o.min_paths && e.half_width <= o.relative_width * std::abs(e.mean)) {
      e.converged = true;
      break;
    }
  }
  e.seed = o.seed;
  e.truncated = truncated;
  e.flagged = static_cast<double>(truncated) > 0.01 * static_cast<double>(values.size());
  if (o.record_samples) e.samples = std::move(values);
  return e;
}

}  // namespace raidrel::sim::detail
