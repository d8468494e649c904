#pragma once

#include <limits>
#include <span>
#include <vector>

#include "ftb/market.hpp"

namespace ftb {

// Quantile-based grid for integrals against a district's housing measure.
struct QualityGrid {
  std::vector<double> quality;
  std::vector<double> weight;  // trapezoid weights, summing to the housing mass
  double mass = 0.0;
};

QualityGrid make_quality_grid(const Distribution& housing, int points);

struct TaxSchedule {
  std::vector<double> quality;
  std::vector<double> tax;
  double revenue = 0.0;
  double post_tax_wealth = 0.0;  // equalized incumbent wealth-plus-price level
};

// Budget-side policy modifications: fees on expenditure above a threshold and
// lump-sum transfers into district budgets.
struct RevenueAdjustment {
  std::vector<double> fee_threshold;  // empty = no fees
  double fee_rate = 0.0;
  std::vector<double> transfer_in;  // empty = no transfers

  double fee_paid(int j, double e) const {
    if (fee_threshold.empty() || fee_rate <= 0.0) return 0.0;
    return fee_rate * std::max(0.0, e - fee_threshold[j]);
  }
  double required_revenue(int j, double e) const {
    double t = transfer_in.empty() ? 0.0 : transfer_in[j];
    return e + fee_paid(j, e) - t;
  }
};

// Frozen stationary horizon for one district: resale prices, second-period
// rents and policy, and incumbent wealth, all on the district's quality grid.
struct DistrictContext {
  QualityGrid grid;
  std::vector<double> incumbent_wealth;
  std::vector<double> renter_share;
  std::vector<double> pdv;           // stationary lump-sum equivalents m*
  std::vector<double> tax;           // stationary tax schedule
  std::vector<double> resale_price;  // stationary prices, frozen as resale values
  std::vector<double> gross_rent;    // stationary per-period rent + tax
  double post_tax_wealth = 0.0;
};

struct StationaryContext {
  std::vector<double> expenditure;  // the profile the horizon was built at
  std::vector<DistrictContext> district;
};

// Incumbent wealth resolved from a fixed population rather than the profile's
// own stationary assignment; policy comparisons freeze the baseline residents.
using IncumbentOverride = std::vector<std::vector<double>>;

StationaryContext make_stationary_context(const Economy& econ, std::span<const double> e,
                                          const RevenueAdjustment& adj = {},
                                          int grid_points = 161,
                                          const IncumbentOverride* incumbents = nullptr);

// Revenue-e schedule maximizing incumbent welfare: marginal utility of the
// post-tax position is equalized across homes; the multiplier is found by
// bisection.
TaxSchedule optimal_tax_schedule(const Economy& econ, int j, double revenue,
                                 const QualityGrid& grid, std::span<const double> pdv,
                                 std::span<const double> resale,
                                 std::span<const double> incumbent_wealth);

struct DistrictObjectiveValue {
  double school_term = 0.0;
  double owner_welfare = 0.0;
  double renter_welfare = 0.0;
  double total() const { return school_term + owner_welfare + renter_welfare; }
};

// Objective of district j at a deviation profile, holding the stationary
// horizon (resale prices, second-period expenditure and rents) frozen.
DistrictObjectiveValue district_objective(const Economy& econ, int j,
                                          std::span<const double> e_profile,
                                          const StationaryContext& ctx,
                                          const RevenueAdjustment& adj = {});

struct SearchBounds {
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();  // clipped internally
};

double best_response(const Economy& econ, int j, std::span<const double> e_profile,
                     const StationaryContext& ctx, const RevenueAdjustment& adj = {},
                     SearchBounds bounds = {});

// Optimal expenditure when the lump-sum equivalents are frozen at their
// stationary values: the benchmark against which equilibrium spending is
// judged excessive. The set of co-moving districts does not enter the frozen
// objective, so only (j, context) matter.
double fixed_gap_best_response(const Economy& econ, int j, const StationaryContext& ctx,
                               const RevenueAdjustment& adj = {}, SearchBounds bounds = {});

struct GameOptions {
  std::vector<double> initial;  // empty = 0.5 everywhere
  double damping = 0.5;
  double tol = 1e-6;
  int max_iterations = 500;
  int grid_points = 161;
  std::vector<double> caps;    // empty = none
  std::vector<double> floors;  // empty = none
  std::vector<char> fixed;     // districts held at their initial value
  RevenueAdjustment adjustment;
  IncumbentOverride incumbents;  // empty = assignment-implied incumbents
  bool trace = false;            // iteration log on stderr
};

struct GameSolution {
  std::vector<double> expenditure;
  double br_residual = 0.0;
  int iterations = 0;
  bool multiple_optima = false;
  StationaryContext context;
  std::vector<TaxSchedule> taxes;
  std::vector<DistrictObjectiveValue> objectives;
};

// Damped simultaneous best-response iteration on expenditure levels.
GameSolution nash_equilibrium(const Economy& econ, const GameOptions& options = {});

}  // namespace ftb
