#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftb/econ_core.hpp"

namespace ftb::oracle {

double DiscreteEquilibrium::district_min_type(int j) const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& h : homes)
    if (h.district == j) m = std::min(m, h.agent);
  return m;
}

double DiscreteEquilibrium::district_max_type(int j) const {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& h : homes)
    if (h.district == j) m = std::max(m, h.agent);
  return m;
}

DiscreteEquilibrium discrete_equilibrium(const Economy& econ, std::span<const double> expenditure,
                                         int n_agents) {
  const int nd = static_cast<int>(econ.n_districts());
  DiscreteEquilibrium eq;

  // homes at quality mid-quantiles, n/(number of districts) per district
  std::vector<DiscreteHome> homes;
  int per = n_agents / nd;
  for (int j = 0; j < nd; ++j) {
    const Distribution& Q = econ.districts[j].housing;
    double s = econ.school_quality(j, expenditure[j]);
    for (int k = 0; k < per; ++k) {
      DiscreteHome h;
      h.district = j;
      h.quality = Q.quantile((k + 0.5) / per * Q.mass());
      h.location_quality = h.quality + s;
      homes.push_back(h);
    }
  }
  std::stable_sort(homes.begin(), homes.end(), [](const DiscreteHome& a, const DiscreteHome& b) {
    if (a.location_quality != b.location_quality) return a.location_quality < b.location_quality;
    return a.district < b.district;
  });

  const int n = static_cast<int>(homes.size());
  const Distribution& F = econ.income;
  for (int i = 0; i < n; ++i) homes[i].agent = F.quantile((i + 0.5) / n * F.mass());
  // resolution limit of the discrete economy: one home within a district
  eq.grid_cell = (F.hi() - F.lo()) * nd / n;

  // outside option pins the bottom; each subsequent price leaves the cell-edge
  // type indifferent between adjacent homes
  double w0 = F.lo();
  // U(w0) = bottom-of-market location quality + outside money value; the
  // discrete bottom home sits half a cell up the quality ladder, so its money
  // value is lower by the quality difference
  double market_bottom = std::numeric_limits<double>::infinity();
  for (int j = 0; j < nd; ++j)
    market_bottom = std::min(
        market_bottom, econ.districts[j].housing.lo() + econ.school_quality(j, expenditure[j]));
  double target0 =
      econ.outside_money_value + market_bottom - homes.front().location_quality;
  homes[0].pdv = invert_value_in_money(w0, target0, econ.rate, econ.utility);
  double prev_m = homes[0].pdv;
  for (int i = 1; i < n; ++i) {
    double w_edge = F.quantile(static_cast<double>(i) / n * F.mass());
    double v_keep = money_value_of_pdv(w_edge, prev_m, econ.rate, econ.utility);
    double target = v_keep + homes[i - 1].location_quality - homes[i].location_quality;
    homes[i].pdv = invert_value_in_money(w_edge, target, econ.rate, econ.utility, prev_m);
    prev_m = homes[i].pdv;
  }
  eq.homes = std::move(homes);
  return eq;
}

double discrete_objective(const Economy& econ, std::span<const double> expenditure, int j,
                          int n_agents) {
  DiscreteEquilibrium eq = discrete_equilibrium(econ, expenditure, n_agents);
  const District& d = econ.districts[j];
  const double r = econ.rate;
  const double gross = 1.0 + r;

  std::vector<const DiscreteHome*> mine;
  for (const auto& h : eq.homes)
    if (h.district == j) mine.push_back(&h);
  const double mass = d.housing.mass();
  const double cell = mass / static_cast<double>(mine.size());

  auto incumbent_wealth = [&](const DiscreteHome& h) {
    switch (d.old_wealth.kind) {
      case IncumbentWealthSpec::Kind::constant:
        return d.old_wealth.value;
      case IncumbentWealthSpec::Kind::affine:
        return d.old_wealth.intercept + d.old_wealth.slope * h.quality;
      default:
        return h.agent;  // assigned type in the stationary equilibrium
    }
  };

  // stationary equal-marginal-utility tax: post-tax wealth c solves the
  // stationary budget, tax = (r/(1+r)) (wealth - c) - pdv
  double sum_m = 0.0, sum_w = 0.0;
  for (auto* h : mine) {
    sum_m += h->pdv * cell;
    sum_w += incumbent_wealth(*h) * cell;
  }
  double e = expenditure[j];
  double c = (-sum_m - e + r / gross * sum_w) * gross / (r * mass);

  double school = econ.school_weight * 2.0 * econ.school_quality(j, e);
  double owner = 0.0, renter = 0.0;
  for (auto* h : mine) {
    double rent_share = d.renter_share.at(h->quality);
    double price = c - incumbent_wealth(*h);
    owner += econ.utility.value(incumbent_wealth(*h) + price) * (1.0 - rent_share) * cell;
    double gross_rent = -h->pdv * gross / (2.0 + r);
    renter += econ.utility.value(incumbent_wealth(*h) - gross_rent) * rent_share * cell;
  }
  return school + owner + renter;
}

}  // namespace ftb::oracle
