#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ftb/districts.hpp"

namespace ftb {

// Expenditure caps, possibly built from a common reduction below equilibrium.
struct CapPolicy {
  std::vector<double> caps;          // per district; infinity = uncapped
  std::vector<int> targets;          // districts whose caps came from a common reduction
  std::optional<double> common_reduction;
  bool reoptimize_others = false;    // default holds non-target districts fixed
};

struct FeePolicy {
  std::vector<double> threshold;        // per district
  double fee_rate = 0.0;                // charge per unit of expenditure above threshold
  std::vector<double> transfer_weights; // shares of collected fees, sum to 1
};

struct DistrictDelta {
  std::string id;
  double baseline = 0.0;
  double treated = 0.0;
  double delta() const { return treated - baseline; }
};

struct SweepPoint {
  double reduction = 0.0;
  std::vector<double> delta;  // per district objective change
};

struct PolicyReport {
  GameSolution baseline;
  GameSolution treated;
  std::vector<DistrictDelta> objective_delta;
  bool pareto = false;
  std::vector<int> strict_gainers;
  bool found = true;            // false = no improving policy in the searched family
  double chosen_reduction = 0.0;
  std::vector<SweepPoint> sweep;  // reduction line search, when one ran
  std::string verdict;
};

PolicyReport solve_capped_equilibrium(const Economy& econ, const CapPolicy& policy,
                                      const GameSolution& baseline, const GameOptions& base_opt);

// Line search over a common cap reduction for the districts in `targets`,
// holding the rest fixed; keeps the reduction maximizing the minimum gain.
PolicyReport find_pareto_caps(const Economy& econ, const std::vector<int>& targets,
                              const GameSolution& baseline, const GameOptions& base_opt,
                              int reduction_steps = 12);

PolicyReport solve_fee_policy(const Economy& econ, const FeePolicy& policy,
                              const GameSolution& baseline, const GameOptions& base_opt);

struct RentalOutcome {
  std::vector<double> quality;
  std::vector<double> rent1, rent2;  // per-period rent net of tax
};

// Stationary per-period rent from the payment identity
// f + tax + (f + tax)/(1+r) = -pdv.
RentalOutcome rental_rates(std::span<const double> quality, std::span<const double> pdv,
                           std::span<const double> tax, double rate);

struct FloorCheckDistrict {
  std::string id;
  double equilibrium = 0.0;
  double fixed_gap = 0.0;
  bool underspends = false;  // equilibrium below the fixed-gap benchmark
};

struct FloorCheckReport {
  std::vector<FloorCheckDistrict> district;
  bool applicable = false;       // every district underspends
  bool floor_improves_all = false;
  double floor_tested = 0.0;
  std::vector<double> objective_delta;
};

// Verifies that renter-dominated districts underspend relative to the
// fixed-gap benchmark and that a common expenditure floor raises all
// objectives.
FloorCheckReport expenditure_floor_check(const Economy& econ, const GameOptions& base_opt);

enum class CompStatCase {
  raiser_dominates,   // raiser's worst location beats everyone's best
  raiser_dominated,   // raiser's best location below everyone's worst
  overlap_above,      // raiser's bottom at or above the other district's bottom
  overlap_below,
};

struct CompStatStep {
  int other = 0;                  // district compared against
  double e_step = 0.0;
  CompStatCase kind = CompStatCase::overlap_above;
  double max_equality_violation = 0.0;  // on the predicted-unchanged region
  double min_strict_margin = 0.0;       // on the predicted strict region
  double own_quotient = 0.0;            // (m-hat - m) / (e-hat - e) on own homes
  double cross_quotient = 0.0;          // same for the other district's strict region
  bool pattern_holds = false;
};

struct CompStatReport {
  std::vector<CompStatStep> steps;
  bool all_hold = false;
};

// Classifies each expenditure step into its comparative-statics case and
// verifies the predicted sign pattern of the lump-sum equivalents.
CompStatReport comparative_statics_audit(const Economy& econ, int j,
                                         std::span<const double> base_profile,
                                         std::span<const double> e_steps, int probe_points = 41);

}  // namespace ftb
