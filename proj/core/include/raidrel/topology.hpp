#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "raidrel/distributions.hpp"

namespace raidrel::topo {

enum class ComponentKind { Controller, Expander, Enclosure, Interconnect, Disk };
enum class RaidLevel { Raid1, Raid5, Raid6, Raid10 };

std::string_view to_string(ComponentKind k);
std::string_view to_string(RaidLevel l);
ComponentKind parse_kind(std::string_view s);
RaidLevel parse_level(std::string_view s);

class TopologyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct ComponentSpec {
  std::string id;
  ComponentKind kind = ComponentKind::Disk;
  // Unset for enclosures governed by an EnclosurePolicy. kNever means the
  // component does not fail.
  std::optional<double> mttf_hr;
  // Non-exponential lifetime, used by event-driven simulation; numeric
  // models use its mean.
  std::optional<dist::Distribution> lifetime;
  double mttr_hr = 0.5;
  // Containing enclosure (disks and expanders; optional for other kinds).
  std::string enclosure;
  std::vector<std::string> merged_from;
};

struct Link {
  std::string from;
  std::string to;
};

struct RaidGroup {
  std::string id;
  RaidLevel level = RaidLevel::Raid5;
  std::vector<std::string> members;

  int fault_tolerance() const;
  // true when the set of inaccessible members loses data
  bool lost(std::span<const char> inaccessible) const;
  // Member `who` fails operationally. A rebuild of it needs every other
  // member that is still readable and free of latent defects; true when that
  // is impossible.
  bool loses_on_failure(std::size_t who, std::span<const char> inaccessible, std::span<const char> latent) const;
};

struct EnclosurePolicy {
  int capacity = 24;
  int threshold = 12;
  double mttf_below_hr = 28400;
  double mttf_above_hr = 11100;
};

double enclosure_rate(const EnclosurePolicy& p, int occupancy);

class Topology {
 public:
  void add_component(ComponentSpec c);
  void add_link(std::string from, std::string to);
  void add_group(RaidGroup g);
  void set_enclosure_policy(EnclosurePolicy p) { policy_ = p; }

  const std::vector<ComponentSpec>& components() const { return components_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<RaidGroup>& groups() const { return groups_; }
  const std::optional<EnclosurePolicy>& enclosure_policy() const { return policy_; }

  std::size_t size() const { return components_.size(); }
  bool empty() const { return components_.empty(); }
  std::optional<std::size_t> find(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;  // throws on unknown id
  const ComponentSpec& at(std::string_view id) const { return components_[index_of(id)]; }
  ComponentSpec& mutable_component(std::size_t i) { return components_[i]; }

  std::vector<std::size_t> children(std::size_t i) const;
  std::vector<std::size_t> parents(std::size_t i) const;
  // number of disks whose enclosure is `enclosure_id`
  int occupancy(std::string_view enclosure_id) const;
  // exponential failure rate used by numeric models (/hr); 0 for components that never fail
  double failure_rate(std::size_t i) const;
  double repair_rate(std::size_t i) const;
  std::vector<std::size_t> disks() const;

 private:
  std::vector<ComponentSpec> components_;
  std::vector<Link> links_;
  std::vector<RaidGroup> groups_;
  std::optional<EnclosurePolicy> policy_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Diagnostic {
  std::string element;
  std::string message;
};

std::vector<Diagnostic> validate(const Topology& t);
void require_valid(const Topology& t);  // throws TopologyError listing diagnostics

// Every minimal controller -> disk path, as component ids ending with the disk.
std::vector<std::vector<std::string>> access_paths(const Topology& t, std::string_view disk_id);

// Index form of access_paths for every disk, computed once.
class PathTable {
 public:
  explicit PathTable(const Topology& t);
  const std::vector<std::vector<std::size_t>>& paths(std::size_t disk) const { return paths_.at(disk); }

 private:
  std::unordered_map<std::size_t, std::vector<std::vector<std::size_t>>> paths_;
};

// Replaces maximal in-series chains of equal-mttr exponential components by
// one component. Chains that break only because of an mttr mismatch are
// reported through `flagged`.
Topology series_reduce(const Topology& t, std::vector<std::vector<std::string>>* flagged = nullptr);

std::vector<Topology> independent_partition(const Topology& t);

}  // namespace raidrel::topo
