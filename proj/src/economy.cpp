#include "ftb/economy.hpp"

#include <cmath>

namespace ftb {

double SchoolTech::quality(double e) const {
  if (kind == Kind::log1p) return alpha * std::log1p(e);
  return alpha * std::pow(e, beta);
}

double SchoolTech::marginal(double e) const {
  if (kind == Kind::log1p) return alpha / (1.0 + e);
  return alpha * beta * std::pow(std::max(e, 1e-300), beta - 1.0);
}

double SchoolTech::expenditure_for(double q) const {
  if (kind == Kind::log1p) return std::expm1(q / alpha);
  return std::pow(q / alpha, 1.0 / beta);
}

void SchoolTech::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("school tech: alpha must be positive");
  if (kind == Kind::power && !(beta > 0.0 && beta < 1.0))
    throw ValidationError("school tech: power exponent must lie in (0, 1)");
}

double RenterShareSpec::at(double q) const {
  double s = kind == Kind::constant ? value : intercept + slope * q;
  if (s < 0.0) s = 0.0;
  if (s > 1.0) s = 1.0;
  return s;
}

void RenterShareSpec::validate() const {
  if (kind == Kind::constant && !(value >= 0.0 && value <= 1.0))
    throw ValidationError("renter share: constant must lie in [0, 1]");
}

void Economy::validate() const {
  if (districts.empty()) throw ValidationError("economy: need at least one district");
  utility.validate();
  school.validate();
  if (!(1.0 + rate > 0.0)) throw ValidationError("economy: need 1 + r > 0");
  if (!(school_weight >= 0.0)) throw ValidationError("economy: theta must be nonnegative");
  if (std::abs(income.mass() - 1.0) > 1e-12)
    throw ValidationError("economy: arrival population must have unit mass");

  const double per_district = 1.0 / static_cast<double>(districts.size());
  double total = 0.0;
  for (const auto& d : districts) {
    if (d.housing.lo() < -1e-12 || d.housing.hi() > 1.0 + 1e-12)
      throw ValidationError("district " + d.id + ": home quality must lie in [0, 1]");
    if (std::abs(d.housing.mass() - per_district) > 1e-12)
      throw MassMismatch("district " + d.id + ": housing mass must equal 1/N");
    if (!(d.school_scale > 0.0))
      throw ValidationError("district " + d.id + ": school scale must be positive");
    d.renter_share.validate();
    total += d.housing.mass();
  }
  if (std::abs(total - income.mass()) > 1e-12)
    throw MassMismatch("economy: total housing mass must equal population mass");
}

}  // namespace ftb
