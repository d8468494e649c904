#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ftb/economy.hpp"

namespace ftb {

// One maximal interval of types over which the set of active districts is
// constant and location quality is linear in type.
struct AllocationSegment {
  double w_lo = 0.0, w_hi = 0.0;      // type range
  double ell_lo = 0.0, ell_hi = 0.0;  // location-quality range
  double mass_lo = 0.0, mass_hi = 0.0;
  double pooled_density = 0.0;  // housing density on the location-quality axis
  double ell_slope = 0.0;       // d ell / d w on the segment
  double jump_before = 0.0;     // upward jump in ell at w_lo (quality-dominance gap)
  std::vector<int> active;      // districts absorbing arrivals here
};

// The unique monotone assignment of arrival types to locations.
class Allocation {
 public:
  Allocation(const Economy& econ, std::span<const double> expenditure);

  double location_quality(double w) const;  // ell(w), right-continuous
  double location_slope(double w) const;    // one-sided (right inside, left at top)
  double arrivals(int j, double w) const;   // mass of types <= w settling in district j
  double house_choice(int j, double w) const;  // district-j house for type w
  double type_at(int j, double q) const;       // inverse of house_choice
  bool district_active_at(int j, double w) const;

  const std::vector<AllocationSegment>& segments() const { return segments_; }
  double school_quality(int j) const { return school_[j]; }
  int n_districts() const { return static_cast<int>(school_.size()); }
  double type_lo() const { return segments_.front().w_lo; }
  double type_hi() const { return segments_.back().w_hi; }

  // Lowest type at which more than one district is active, and the highest
  // type at which the active set is still plural (Prop-1 style cutoffs).
  double cutoff_low() const { return cutoff_low_; }
  double cutoff_high() const { return cutoff_high_; }

 private:
  const AllocationSegment& segment_of_type(double w) const;
  const AllocationSegment& segment_of_mass(double m) const;

  std::vector<AllocationSegment> segments_;
  std::vector<double> school_;      // s_j(e_j) per district
  std::vector<double> q_lo_, q_hi_;  // housing supports
  const Economy* econ_ = nullptr;
  double cutoff_low_ = 0.0, cutoff_high_ = 0.0;
};

Allocation assign_locations(const Economy& econ, std::span<const double> expenditure);

// M(w), m(w), and U(w) from the envelope formula, anchored at the outside
// money value of the lowest type.
class MoneyValueSolution {
 public:
  MoneyValueSolution(const Economy& econ, const Allocation& alloc,
                     std::span<const double> expenditure);

  double money_value(double w) const;  // M(w)
  double pdv_at_type(double w) const;  // m(w)
  double total_value(double w) const;  // U(w) = ell(w) + M(w)
  double pdv_at_quality(int j, double q) const;  // m^j(q)

  const Allocation& allocation() const { return alloc_; }

 private:
  struct Node {
    double w, value, slope, pdv;
  };
  std::size_t node_before(double w) const;

  Allocation alloc_;
  std::vector<Node> nodes_;
  UtilitySpec utility_;
  double rate_ = 0.0;
};

MoneyValueSolution money_values(const Economy& econ, const Allocation& alloc,
                                std::span<const double> expenditure);

// Stationary price p solving p = -tax + p/(1+r) - pdv; requires r > 0.
double steady_state_price(double tax, double pdv_m, double rate);
std::vector<double> steady_state_prices(std::span<const double> pdv,
                                        std::span<const double> tax, double rate);

// Price of a home bought now and resold next period.
double two_period_price(double tax1, double resale, double pdv_m, double rate);

struct IcAuditReport {
  double max_violation = 0.0;  // positive means a profitable deviation was found
  std::size_t samples = 0;
  double worst_type = 0.0, worst_target_type = 0.0;
  int worst_district = -1;
};

// Samples deviations (w adopts the location choice of w' in district j) and
// reports the largest incentive-compatibility violation.
IcAuditReport ic_audit(const Economy& econ, const Allocation& alloc,
                       const MoneyValueSolution& mvs, std::size_t sample_count,
                       std::uint64_t seed,
                       const std::function<double(int, double)>& pdv_override = nullptr);

}  // namespace ftb
