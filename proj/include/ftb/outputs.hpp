#pragma once

#include <string>
#include <vector>

#include "ftb/config.hpp"
#include "ftb/policy.hpp"

namespace ftb {

struct RunInfo {
  std::string command;
  std::string config_path;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

// Each writer returns the list of files it produced (for the manifest).
std::vector<std::string> write_equilibrium_outputs(const std::string& out_dir,
                                                   const Economy& econ,
                                                   const GameSolution& sol,
                                                   const IcAuditReport& audit);

// Market layer only, for fixed profiles where no stationary tax schedule
// exists (for example anchors with positive outside PDVs).
std::vector<std::string> write_market_outputs(const std::string& out_dir, const Economy& econ,
                                              const std::vector<double>& expenditure,
                                              const IcAuditReport& audit,
                                              const std::string& note);

std::vector<std::string> write_policy_outputs(const std::string& out_dir, const Economy& econ,
                                              const PolicyReport& report,
                                              const std::string& policy_kind);

std::vector<std::string> write_floor_outputs(const std::string& out_dir, const Economy& econ,
                                             const FloorCheckReport& report);

std::vector<std::string> write_panel_outputs(const std::string& out_dir, const Panel& panel);

struct EstimateRow {
  std::string sample;  // own | neighbor
  std::string outcome;
  std::string transform;
  int lag = 0;
  RddEstimate estimate;
};

std::vector<std::string> write_estimate_outputs(const std::string& out_dir,
                                                const std::vector<EstimateRow>& rows,
                                                const Panel& panel,
                                                const RddEstimateConfig& cfg);

void write_manifest(const std::string& out_dir, const RunInfo& info,
                    const std::vector<std::string>& outputs);

}  // namespace ftb
