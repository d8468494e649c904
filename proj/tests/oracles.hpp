#pragma once

#include <span>
#include <vector>

#include "ftb/economy.hpp"

namespace ftb::oracle {

// One home in the brute-force discrete economy.
struct DiscreteHome {
  int district = 0;
  double quality = 0.0;
  double location_quality = 0.0;
  double pdv = 0.0;     // equilibrium lump-sum equivalent
  double agent = 0.0;   // type assigned to this home
};

struct DiscreteEquilibrium {
  std::vector<DiscreteHome> homes;  // sorted by location quality ascending
  double grid_cell = 0.0;           // type-axis width of one agent cell

  // highest/lowest assigned type per district
  double district_min_type(int j) const;
  double district_max_type(int j) const;
};

// Competitive equilibrium of a discretized economy with n agents and n homes:
// monotone assignment by descending type, prices built by walking the
// indifference conditions of the marginal (cell-edge) types upward from the
// outside option of the poorest type.
DiscreteEquilibrium discrete_equilibrium(const Economy& econ, std::span<const double> expenditure,
                                         int n_agents);

// District objective recomputed end to end on the discrete economy: discrete
// lump-sum equivalents, stationary equal-marginal-utility tax, stationary
// prices, and discrete welfare sums.
double discrete_objective(const Economy& econ, std::span<const double> expenditure, int j,
                          int n_agents);

}  // namespace ftb::oracle
