#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "raidrel/builder.hpp"
#include "raidrel/topology.hpp"

namespace raidrel::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SystemConfig {
  topo::Topology topology;
  build::SystemModels models;
  std::vector<std::string> warnings;  // unknown keys under --lenient
};

// Strict mode rejects unknown keys; lenient mode records them as warnings.
SystemConfig parse_config(std::string_view text, bool lenient = false, std::string_view source = "<config>");
SystemConfig load_config(const std::string& path, bool lenient = false);

nlohmann::json emit_config(const topo::Topology& t, const build::SystemModels& m);
nlohmann::json distribution_to_json(const dist::Distribution& d);
dist::Distribution distribution_from_json(const nlohmann::json& j, const std::string& where);

std::uint64_t fnv1a(std::string_view bytes);
// Hash of the canonical emitted form, so formatting does not matter.
std::string config_hash(const topo::Topology& t, const build::SystemModels& m);

// "8760", "8760h", "365d", "1y"
double parse_time(std::string_view s);
// comma list of times or ranges "a..b" (step a) and "a..b:s"
std::vector<double> parse_times(std::string_view s);

}  // namespace raidrel::cli
