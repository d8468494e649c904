#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ftb/districts.hpp"
#include "ftb/rdd.hpp"

namespace ftb {

struct CapsConfig {
  std::vector<std::string> targets;  // district ids
  int reduction_steps = 12;
  bool reoptimize_others = false;
};

struct FeesConfig {
  double rate = 0.0;
  bool thresholds_at_fixed_gap = true;          // otherwise explicit per district
  std::vector<double> thresholds;               // aligned with districts when explicit
  std::vector<double> transfer_weights;         // aligned with districts
};

struct RddEstimateConfig {
  std::vector<OutcomeSpec> outcomes;
  std::vector<int> lags;
  bool poly3 = true;
  bool local_linear = true;
  bool neighbors = false;
  bool exclude_shared_school = true;
  int scatter_bins = 40;
};

struct ScenarioConfig {
  Economy economy;
  std::uint64_t seed = 0;
  GameOptions game;
  bool fixed_expenditures = false;      // evaluate a given profile instead of solving
  std::vector<double> expenditures;     // the profile when fixed
  std::optional<CapsConfig> caps;
  std::optional<FeesConfig> fees;
  bool floor_block = false;
  std::optional<PanelParams> rdd;
  RddEstimateConfig rdd_estimate;
  std::string normalized;  // canonical re-emission of the config text

  int district_index(const std::string& id) const;
};

// Parses, validates (unknown keys rejected, invariants enforced), and
// normalizes a scenario configuration.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text);

// Canonical form: defaults materialized, keys sorted, stable formatting.
std::string normalize_config_text(const std::string& text);

std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace ftb
