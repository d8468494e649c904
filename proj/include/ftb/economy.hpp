#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ftb/distribution.hpp"
#include "ftb/econ_core.hpp"

namespace ftb {

// Concave expenditure-to-school-quality technology with s'(e) -> 0.
struct SchoolTech {
  enum class Kind { log1p, power } kind = Kind::log1p;
  double alpha = 1.0;  // overall scale
  double beta = 0.5;   // exponent for the power kind, in (0, 1)

  double quality(double e) const;
  double marginal(double e) const;
  double expenditure_for(double quality) const;  // inverse of quality()
  void validate() const;
};

// Wealth of incumbent residents by home quality. `assigned_type` resolves to
// the income of the type living at q in the stationary equilibrium.
struct IncumbentWealthSpec {
  enum class Kind { assigned_type, constant, affine } kind = Kind::assigned_type;
  double value = 0.0;      // constant
  double intercept = 0.0;  // affine: intercept + slope * q
  double slope = 0.0;
};

// Fraction of the housing stock at quality q that is rented.
struct RenterShareSpec {
  enum class Kind { constant, affine } kind = Kind::constant;
  double value = 0.0;
  double intercept = 0.0;
  double slope = 0.0;

  double at(double q) const;
  void validate() const;
};

struct District {
  std::string id;
  Distribution housing;  // quality CDF; mass fixed at 1/N by Economy::validate
  IncumbentWealthSpec old_wealth;
  RenterShareSpec renter_share;
  double school_scale = 1.0;  // per-district multiplier on the common technology
};

struct Economy {
  std::vector<District> districts;
  Distribution income;  // arrival types, total mass 1
  UtilitySpec utility;
  double rate = 0.05;                // r
  SchoolTech school;                 // common s(e)
  double outside_money_value = 0.0;  // money value pinned for the lowest type
  double school_weight = 1.0;        // weight on school quality in district objectives

  std::size_t n_districts() const { return districts.size(); }
  double school_quality(std::size_t j, double e) const {
    return districts[j].school_scale * school.quality(e);
  }
  double school_marginal(std::size_t j, double e) const {
    return districts[j].school_scale * school.marginal(e);
  }
  // expenditure whose school quality in district j equals `quality`
  double expenditure_for_quality(std::size_t j, double quality) const {
    return school.expenditure_for(quality / districts[j].school_scale);
  }

  void validate() const;  // throws ValidationError / MassMismatch
};

}  // namespace ftb
