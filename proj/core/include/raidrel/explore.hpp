#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "raidrel/ctmc.hpp"

namespace raidrel::ctmc {

using State = std::vector<std::uint8_t>;

struct Successor {
  State state;
  double rate;
};

// Implicit model: states are fixed-width byte tuples.
class ModelGenerator {
 public:
  virtual ~ModelGenerator() = default;
  virtual State initial_state() const = 0;
  virtual bool is_target(const State& s) const = 0;
  // appends (successor, rate) pairs; successors may repeat
  virtual void successors(const State& s, std::vector<Successor>& out) const = 0;

  // Cheaper pair for path sampling: candidate states may be incomplete (not
  // canonical, derived flags unset) and may equal `s`; complete() fixes the
  // one that is chosen.
  virtual void raw_successors(const State& s, std::vector<Successor>& out) const { successors(s, out); }
  virtual void complete(State&) const {}
};

class StateBudgetExceeded : public std::runtime_error {
 public:
  explicit StateBudgetExceeded(std::size_t budget);
  std::size_t budget;
};

// Open-addressing set of fixed-width byte strings stored in one arena.
class StateStore {
 public:
  explicit StateStore(std::size_t width);
  // returns (index, inserted)
  std::pair<std::uint32_t, bool> insert(std::span<const std::uint8_t> s);
  std::span<const std::uint8_t> get(std::uint32_t i) const { return {arena_.data() + i * width_, width_}; }
  std::size_t size() const { return count_; }
  std::size_t width() const { return width_; }

 private:
  void grow();
  std::uint64_t hash(std::span<const std::uint8_t> s) const;

  std::size_t width_;
  std::size_t count_ = 0;
  std::vector<std::uint8_t> arena_;
  std::vector<std::uint32_t> slots_;
};

struct ExploreOptions {
  std::size_t state_budget = 5'000'000;
};

// Breadth-first reachability from the initial state. Target states are merged
// into a single absorbing state labelled DIL.
Ctmc explore(const ModelGenerator& g, const ExploreOptions& opts = {});

}  // namespace raidrel::ctmc
