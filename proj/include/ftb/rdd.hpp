#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ftb/errors.hpp"

namespace ftb {

struct MunicipalityYear {
  int muni_id = 0;
  int year = 0;
  bool has_margin = false;  // a usable referendum record exists
  double margin = 0.0;      // vote share minus 1/2, in [-1/2, 1/2]
  bool win = false;         // margin >= 0
  double avg_tax = 0.0;
  double income_pc = 0.0;
  double home_value = 0.0;
  int school_district_id = 0;
};

// planted parameters, kept with synthetic panels for recovery experiments
struct DgpTruth {
  double levy_jump = 0.0;           // discontinuity in levy growth at the cutoff
  double home_value_effect = 0.0;   // home-value growth per unit levy growth
  double income_per_tax = 0.0;      // income level per unit tax level
  double neighbor_spillover = 0.0;  // levy-growth spillover per winning neighbor
};

struct Panel {
  std::vector<MunicipalityYear> rows;  // sorted by (muni_id, year)
  std::vector<std::pair<int, int>> adjacency;
  int n_muni = 0;
  int years = 0;
  int first_year = 0;
  std::optional<DgpTruth> dgp_truth;

  const MunicipalityYear& at(int muni, int year) const;
};

struct PanelParams {
  int n_muni = 500;
  int years = 25;
  int first_year = 1990;
  double referendum_propensity = 0.5;
  double multi_referendum_share = 0.15;  // years with two referenda
  double margin_beta_a = 2.0;            // margin ~ Beta(a, b) - 1/2
  double margin_beta_b = 2.0;
  double levy_jump = 0.05;
  bool cumulative_levy_effect = false;  // growth stays elevated after a win
  double home_value_effect = 2.0;
  double income_per_tax = 15.0;
  double neighbor_spillover = 0.0;
  double loss_underreport = 0.5;
  double levy_growth_mean = 0.02;
  double levy_growth_sd = 0.02;
  double home_growth_mean = 0.01;
  double home_growth_sd = 0.03;
  double income_base = 30000.0;
  double income_sd = 400.0;
  double levy0_lo = 2000.0, levy0_hi = 6000.0;
  double home0_lo = 150000.0, home0_hi = 400000.0;
  int school_district_size = 4;
  int neighbor_links = 4;

  void validate() const;
};

// Simulates municipality-year panels in which winning a referendum shifts levy
// growth from the following year, home values respond to levy growth, incomes
// respond to levy levels, and wins spill over to contiguous neighbors.
// Loss-only years go unreported at the given rate, independently of outcomes.
Panel generate_panel(const PanelParams& params, std::uint64_t seed);

enum class Transform { level, pct_change, log_change };

struct OutcomeSpec {
  std::string field;  // avg_tax | income_pc | home_value
  Transform transform = Transform::log_change;
};

enum class RddSpec { poly3, local_linear };

struct RddEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double p_value = 1.0;
  long n_effective = 0;
  double bandwidth = 0.0;  // local-linear only; 0 for the polynomial spec
  RddSpec spec = RddSpec::poly3;
  double first_stage_t = 0.0;    // fuzzy only
  bool weak_first_stage = false;
};

// Cubic polynomial specification with full interactions on both sides of the
// cutoff; returns the win-indicator coefficient with an HC1 standard error.
RddEstimate sharp_rdd_poly(const Panel& panel, const OutcomeSpec& outcome, int lag);

// Ratio of the outcome and treatment discontinuities from the same polynomial
// specification; delta-method standard error with HC1 cross-covariances.
RddEstimate fuzzy_rdd(const Panel& panel, const OutcomeSpec& outcome,
                      const OutcomeSpec& treatment, int lag);

struct IkConstants {
  double pilot = 1.84;
  double derivative = 3.56;
  double regularization = 2160.0;
  double final = 3.4375;  // triangular-kernel constant
};

// Plug-in bandwidth for the local-linear estimator at cutoff zero.
double ik_bandwidth(const std::vector<double>& running, const std::vector<double>& outcome,
                    const IkConstants& constants = {});

// Triangular-kernel local-linear fit on each side of the cutoff; bandwidth
// from the plug-in rule when not supplied.
RddEstimate local_linear_rdd(const Panel& panel, const OutcomeSpec& outcome, int lag,
                             std::optional<double> bandwidth = std::nullopt,
                             const IkConstants& constants = {});

// Derived panel whose outcome fields are contiguity-averaged over neighbors,
// optionally excluding neighbors in the same school district. Municipalities
// without qualifying neighbors get unusable (NaN) outcome fields.
Panel neighbor_outcomes(const Panel& panel, bool exclude_shared_school);

// CSV interchange (see README for the column sets)
void write_panel_csv(const Panel& panel, const std::string& panel_path,
                     const std::string& adjacency_path);
Panel read_panel_csv(const std::string& panel_path, const std::string& adjacency_path);

}  // namespace ftb
