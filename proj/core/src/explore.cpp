#include "raidrel/explore.hpp"

#include <algorithm>
#include <cstring>
#include <string>

namespace raidrel::ctmc {

namespace {
constexpr std::uint32_t kEmpty = 0xffffffffU;
}

StateBudgetExceeded::StateBudgetExceeded(std::size_t b)
    : std::runtime_error("state budget of " + std::to_string(b) +
                         " states exceeded; use hierarchical decomposition or simulation"),
      budget(b) {}

StateStore::StateStore(std::size_t width) : width_(width), slots_(1024, kEmpty) {}

std::uint64_t StateStore::hash(std::span<const std::uint8_t> s) const {
  // FNV-1a followed by a 64-bit finalizer
  std::uint64_t h = 1469598103934665603ULL;
  for (auto b : s) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

void StateStore::grow() {
  std::vector<std::uint32_t> fresh(slots_.size() * 2, kEmpty);
  const std::size_t mask = fresh.size() - 1;
  for (std::uint32_t i = 0; i < count_; ++i) {
    std::size_t p = hash(get(i)) & mask;
    while (fresh[p] != kEmpty) p = (p + 1) & mask;
    fresh[p] = i;
  }
  slots_.swap(fresh);
}

std::pair<std::uint32_t, bool> StateStore::insert(std::span<const std::uint8_t> s) {
  if ((count_ + 1) * 2 > slots_.size()) grow();
  const std::size_t mask = slots_.size() - 1;
  std::size_t p = hash(s) & mask;
  while (slots_[p] != kEmpty) {
    const std::uint32_t i = slots_[p];
    if (width_ == 0 || std::memcmp(arena_.data() + i * width_, s.data(), width_) == 0) return {i, false};
    p = (p + 1) & mask;
  }
  const auto i = static_cast<std::uint32_t>(count_++);
  slots_[p] = i;
  arena_.insert(arena_.end(), s.begin(), s.end());
  return {i, true};
}

Ctmc explore(const ModelGenerator& g, const ExploreOptions& opts) {
  const State init = g.initial_state();
  StateStore store(init.size());
  std::vector<Transition> tr;
  std::vector<Successor> succ;
  // state 0 of the store is reserved for the merged target state
  constexpr std::uint32_t kTarget = 0;
  const State sentinel(init.size(), 0xff);
  store.insert(sentinel);
  std::uint32_t start = kTarget;
  if (!g.is_target(init)) start = store.insert(init).first;

  State cur;
  for (std::uint32_t next = 1; next < store.size(); ++next) {
    auto span = store.get(next);
    cur.assign(span.begin(), span.end());
    succ.clear();
    g.successors(cur, succ);
    for (const auto& s : succ) {
      if (s.rate <= 0) continue;
      std::uint32_t to = kTarget;
      if (!g.is_target(s.state)) {
        to = store.insert(s.state).first;
        if (store.size() - 1 > opts.state_budget) throw StateBudgetExceeded(opts.state_budget);
      }
      if (to != next) tr.push_back({next, to, s.rate});
    }
  }
  const std::size_t n = store.size();
  std::vector<double> initial(n, 0.0);
  initial[start] = 1.0;
  std::map<std::string, std::vector<std::uint32_t>> labels;
  labels[std::string(kDil)] = {kTarget};
  return Ctmc(n, std::move(tr), std::move(initial), std::move(labels));
}

}  // namespace raidrel::ctmc
