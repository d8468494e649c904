#include "ftb/districts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <sstream>

#include "ftb/parallel.hpp"

namespace ftb {

namespace {

constexpr double kInvGolden = 0.61803398874989484820;

double incumbent_wealth_at(const District& d, double q, const Allocation& alloc, int j) {
  switch (d.old_wealth.kind) {
    case IncumbentWealthSpec::Kind::constant:
      return d.old_wealth.value;
    case IncumbentWealthSpec::Kind::affine:
      return d.old_wealth.intercept + d.old_wealth.slope * q;
    case IncumbentWealthSpec::Kind::assigned_type:
    default:
      return alloc.type_at(j, q);
  }
}

// golden-section max of a unimodal function on [a, b]
double golden_max(const std::function<double(double)>& f, double a, double b, double tol,
                  double* value_out = nullptr) {
  double c = b - kInvGolden * (b - a);
  double d = a + kInvGolden * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvGolden * (b - a);
      fd = f(d);
    }
  }
  double x = fc >= fd ? c : d;
  if (value_out) *value_out = std::max(fc, fd);
  return x;
}

}  // namespace

QualityGrid make_quality_grid(const Distribution& housing, int points) {
  if (points < 3) throw ValidationError("quality grid: need at least 3 points");
  QualityGrid g;
  g.mass = housing.mass();
  // uniform in measure, refined at CDF knots so the quantile map is smooth per cell
  std::vector<double> masses;
  masses.reserve(points + housing.knots().size());
  for (int i = 0; i < points; ++i)
    masses.push_back(g.mass * static_cast<double>(i) / (points - 1));
  for (const auto& k : housing.knots())
    if (k.cum > 1e-15 && k.cum < g.mass - 1e-15) masses.push_back(k.cum);
  std::sort(masses.begin(), masses.end());
  masses.erase(std::unique(masses.begin(), masses.end(),
                           [&](double a, double b) { return b - a <= 1e-14 * g.mass; }),
               masses.end());

  const std::size_t n = masses.size();
  g.quality.resize(n);
  g.weight.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) g.quality[i] = housing.quantile(masses[i]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double cell = masses[i + 1] - masses[i];
    g.weight[i] += 0.5 * cell;
    g.weight[i + 1] += 0.5 * cell;
  }
  return g;
}

StationaryContext make_stationary_context(const Economy& econ, std::span<const double> e,
                                          const RevenueAdjustment& adj, int grid_points,
                                          const IncumbentOverride* incumbents) {
  StationaryContext ctx;
  ctx.expenditure.assign(e.begin(), e.end());
  Allocation alloc = assign_locations(econ, e);
  MoneyValueSolution mvs = money_values(econ, alloc, e);

  const double r = econ.rate;
  const double gross = 1.0 + r;
  ctx.district.resize(econ.n_districts());
  for (int j = 0; j < static_cast<int>(econ.n_districts()); ++j) {
    DistrictContext& d = ctx.district[j];
    const District& dist = econ.districts[j];
    d.grid = make_quality_grid(dist.housing, grid_points);
    const std::size_t n = d.grid.quality.size();
    d.incumbent_wealth.resize(n);
    d.renter_share.resize(n);
    d.pdv.resize(n);
    d.tax.resize(n);
    d.resale_price.resize(n);
    d.gross_rent.resize(n);

    const std::vector<double>* frozen =
        incumbents && !incumbents->empty() ? &(*incumbents)[j] : nullptr;
    if (frozen && frozen->size() != n)
      throw ValidationError("stationary context: incumbent override grid mismatch");
    double sum_m = 0.0, sum_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double q = d.grid.quality[i];
      d.incumbent_wealth[i] = frozen ? (*frozen)[i] : incumbent_wealth_at(dist, q, alloc, j);
      d.renter_share[i] = dist.renter_share.at(q);
      d.pdv[i] = mvs.pdv_at_quality(j, q);
      sum_m += d.pdv[i] * d.grid.weight[i];
      sum_w += d.incumbent_wealth[i] * d.grid.weight[i];
    }
    // stationary tax equalizes incumbent positions at the required revenue;
    // the stationary price is then post-tax wealth minus own wealth
    double req = adj.required_revenue(j, e[j]);
    double c = (-sum_m - req + r / gross * sum_w) * gross / (r * d.grid.mass);
    if (!(c > 0.0))
      throw RevenueInfeasible("stationary context: no feasible stationary schedule, district " +
                              dist.id);
    d.post_tax_wealth = c;
    for (std::size_t i = 0; i < n; ++i) {
      d.tax[i] = r / gross * (d.incumbent_wealth[i] - c) - d.pdv[i];
      d.resale_price[i] = c - d.incumbent_wealth[i];
      d.gross_rent[i] = -d.pdv[i] * gross / (2.0 + r);
    }
  }
  return ctx;
}

TaxSchedule optimal_tax_schedule(const Economy& econ, int j, double revenue,
                                 const QualityGrid& grid, std::span<const double> pdv,
                                 std::span<const double> resale,
                                 std::span<const double> incumbent_wealth) {
  (void)j;
  if (std::isnan(revenue)) throw ValidationError("optimal_tax_schedule: revenue must be a number");
  const double gross = 1.0 + econ.rate;
  const std::size_t n = grid.quality.size();
  const UtilitySpec& u = econ.utility;

  // budget pool: with marginal utilities equalized the post-tax position c is
  // constant across homes and revenue = pool - c * mass
  double pool = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    pool += (incumbent_wealth[i] + resale[i] / gross - pdv[i]) * grid.weight[i];
  if (revenue >= pool - 1e-12)
    throw RevenueInfeasible("optimal_tax_schedule: revenue exceeds the feasible pool");

  auto revenue_at = [&](double lambda) { return pool - u.marginal_inverse(lambda) * grid.mass; };

  // bracket the multiplier, then bisect
  double lam = u.marginal((pool - revenue) / grid.mass);
  double lam_lo = lam, lam_hi = lam;
  int guard = 0;
  while (revenue_at(lam_lo) > revenue && ++guard < 300) lam_lo *= 0.5;
  guard = 0;
  while (revenue_at(lam_hi) < revenue && ++guard < 300) lam_hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lam_lo + lam_hi);
    if (revenue_at(mid) < revenue)
      lam_lo = mid;
    else
      lam_hi = mid;
    if (lam_hi - lam_lo <= 1e-15 * lam_hi) break;
  }
  double c = u.marginal_inverse(0.5 * (lam_lo + lam_hi));

  TaxSchedule ts;
  ts.quality = grid.quality;
  ts.tax.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ts.tax[i] = incumbent_wealth[i] + resale[i] / gross - pdv[i] - c;
    total += ts.tax[i] * grid.weight[i];
  }
  // absorb the multiplier's residual rounding into a uniform shift
  double correction = (revenue - total) / grid.mass;
  for (std::size_t i = 0; i < n; ++i) ts.tax[i] += correction;
  ts.revenue = revenue;
  ts.post_tax_wealth = c - correction;
  return ts;
}

DistrictObjectiveValue district_objective(const Economy& econ, int j,
                                          std::span<const double> e_profile,
                                          const StationaryContext& ctx,
                                          const RevenueAdjustment& adj) {
  Allocation alloc = assign_locations(econ, e_profile);
  MoneyValueSolution mvs = money_values(econ, alloc, e_profile);

  const DistrictContext& d = ctx.district[j];
  const double gross = 1.0 + econ.rate;
  const std::size_t n = d.grid.quality.size();

  std::vector<double> m_dev(n);
  for (std::size_t i = 0; i < n; ++i) m_dev[i] = mvs.pdv_at_quality(j, d.grid.quality[i]);

  double req = adj.required_revenue(j, e_profile[j]);
  TaxSchedule ts =
      optimal_tax_schedule(econ, j, req, d.grid, m_dev, d.resale_price, d.incumbent_wealth);

  DistrictObjectiveValue v;
  v.school_term = econ.school_weight * (econ.school_quality(j, e_profile[j]) +
                                        econ.school_quality(j, ctx.expenditure[j]));
  for (std::size_t i = 0; i < n; ++i) {
    double price = two_period_price(ts.tax[i], d.resale_price[i], m_dev[i], econ.rate);
    double share = d.renter_share[i];
    if (share < 1.0) {
      double owner_c = d.incumbent_wealth[i] + price;
      if (owner_c <= 0.0)
        throw RevenueInfeasible("district_objective: incumbent consumption not positive");
      v.owner_welfare += econ.utility.value(owner_c) * (1.0 - share) * d.grid.weight[i];
    }
    if (share > 0.0) {
      // period-1 rent adjusts so the renter's payment PDV matches the location
      double rent1 = -m_dev[i] - d.gross_rent[i] / gross;
      double renter_c = d.incumbent_wealth[i] - rent1;
      if (renter_c <= 0.0)
        throw RevenueInfeasible("district_objective: renter consumption not positive");
      v.renter_welfare += econ.utility.value(renter_c) * share * d.grid.weight[i];
    }
  }
  return v;
}

namespace {

double upper_search_bound(const Economy& econ, int j, const DistrictContext& d,
                          const RevenueAdjustment& adj) {
  // expenditure beyond which school-quality gains are negligible next to the
  // marginal utility of incumbent money
  double c0 = std::max(d.post_tax_wealth, 1e-6);
  double target = 1e-4 * econ.utility.marginal(2.0 * c0) / std::max(econ.school_weight, 1e-9);
  double scale = econ.districts[j].school_scale;
  double e_bound;
  if (econ.school.kind == SchoolTech::Kind::log1p)
    e_bound = scale * econ.school.alpha / target - 1.0;
  else
    e_bound = std::pow(scale * econ.school.alpha * econ.school.beta / target,
                       1.0 / (1.0 - econ.school.beta));
  e_bound = std::clamp(e_bound, 1.0, 1e6);

  // shrink into the revenue-feasible range, and keep the search inside the
  // region where a stationary schedule exists so the damped iteration cannot
  // run off the feasibility cliff
  double pool = 0.0, stat_pool = 0.0;
  const double gross = 1.0 + econ.rate;
  for (std::size_t i = 0; i < d.grid.quality.size(); ++i) {
    pool += (d.incumbent_wealth[i] + d.resale_price[i] / gross - d.pdv[i]) * d.grid.weight[i];
    stat_pool +=
        (-d.pdv[i] + econ.rate / gross * d.incumbent_wealth[i]) * d.grid.weight[i];
  }
  double cap = std::min(pool - 1e-9, 0.98 * stat_pool);
  // invert e + fee(e) - transfer = cap (piecewise linear in e)
  double transfer = adj.transfer_in.empty() ? 0.0 : adj.transfer_in[j];
  double budget = cap + transfer;
  double e_feasible = budget;
  if (!adj.fee_threshold.empty() && adj.fee_rate > 0.0 && budget > adj.fee_threshold[j])
    e_feasible = adj.fee_threshold[j] + (budget - adj.fee_threshold[j]) / (1.0 + adj.fee_rate);
  e_feasible = std::max(e_feasible, 0.0);
  return std::min(e_bound, e_feasible);
}

struct BestResponseResult {
  double argmax = 0.0;
  double value = 0.0;
  bool split_optima = false;
};

BestResponseResult maximize_multistart(const std::function<double(double)>& objective, double lo,
                                       double hi, int starts, double tol) {
  std::vector<double> xs(starts), vs(starts);
  for (int k = 0; k < starts; ++k) {
    double a = lo + (hi - lo) * k / starts;
    double b = lo + (hi - lo) * (k + 1) / starts;
    vs[k] = 0.0;
    xs[k] = golden_max(objective, a, b, tol, &vs[k]);
  }
  BestResponseResult res;
  res.value = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < starts; ++k) {
    if (vs[k] > res.value + 1e-12 * (1.0 + std::abs(vs[k]))) {
      res.value = vs[k];
      res.argmax = xs[k];
    } else if (std::abs(vs[k] - res.value) <= 1e-9 * (1.0 + std::abs(res.value))) {
      if (std::abs(xs[k] - res.argmax) > 100.0 * tol) res.split_optima = true;
      if (xs[k] < res.argmax) res.argmax = xs[k];  // smallest maximizer on ties
    }
  }
  double v_lo = objective(lo);
  if (v_lo > res.value + 1e-12 * (1.0 + std::abs(v_lo))) {
    res.value = v_lo;
    res.argmax = lo;
  }
  return res;
}

BestResponseResult best_response_detail(const Economy& econ, int j,
                                        std::span<const double> e_profile,
                                        const StationaryContext& ctx,
                                        const RevenueAdjustment& adj, SearchBounds bounds) {
  std::vector<double> profile(e_profile.begin(), e_profile.end());
  auto objective = [&, profile](double x) mutable {
    profile[j] = x;
    try {
      return district_objective(econ, j, profile, ctx, adj).total();
    } catch (const SolverError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  double hi = std::min(bounds.hi, upper_search_bound(econ, j, ctx.district[j], adj));
  double lo = std::max(0.0, bounds.lo);
  if (!(hi > lo)) {
    BestResponseResult r;
    r.argmax = lo;
    r.value = objective(lo);
    return r;
  }
  double tol = std::clamp(1e-7 * (hi - lo), 1e-9, 2e-7);
  return maximize_multistart(objective, lo, hi, 3, tol);
}

// cheap best response for the inner loop: golden section on a window around
// the previous response, expanded until the maximizer is interior
double best_response_warm(const Economy& econ, int j, std::span<const double> e_profile,
                          const StationaryContext& ctx, const RevenueAdjustment& adj,
                          SearchBounds bounds, double center, double window, double tol) {
  std::vector<double> profile(e_profile.begin(), e_profile.end());
  auto objective = [&, profile](double x) mutable {
    profile[j] = x;
    try {
      return district_objective(econ, j, profile, ctx, adj).total();
    } catch (const SolverError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  double hi_full = std::min(bounds.hi, upper_search_bound(econ, j, ctx.district[j], adj));
  double lo_full = std::max(0.0, bounds.lo);
  if (!(hi_full > lo_full)) return lo_full;
  center = std::clamp(center, lo_full, hi_full);
  for (int attempt = 0; attempt < 8; ++attempt) {
    double a = std::max(lo_full, center - window);
    double b = std::min(hi_full, center + window);
    double x = golden_max(objective, a, b, tol);
    bool at_left = x - a <= 4.0 * tol && a > lo_full;
    bool at_right = b - x <= 4.0 * tol && b < hi_full;
    if (!at_left && !at_right) return x;
    center = x;
    window *= 4.0;
  }
  return golden_max(objective, lo_full, hi_full, tol);
}

}  // namespace

double best_response(const Economy& econ, int j, std::span<const double> e_profile,
                     const StationaryContext& ctx, const RevenueAdjustment& adj,
                     SearchBounds bounds) {
  return best_response_detail(econ, j, e_profile, ctx, adj, bounds).argmax;
}

double fixed_gap_best_response(const Economy& econ, int j, const StationaryContext& ctx,
                               const RevenueAdjustment& adj, SearchBounds bounds) {
  const DistrictContext& d = ctx.district[j];
  const double gross = 1.0 + econ.rate;
  const std::size_t n = d.grid.quality.size();

  // with lump-sum equivalents frozen the renter term is a constant and owners
  // enter only through the equalized post-tax position
  double renter_const = 0.0;
  double owner_mass = 0.0;
  double pool = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pool += (d.incumbent_wealth[i] + d.resale_price[i] / gross - d.pdv[i]) * d.grid.weight[i];
    owner_mass += (1.0 - d.renter_share[i]) * d.grid.weight[i];
    if (d.renter_share[i] > 0.0) {
      double rent1 = -d.pdv[i] - d.gross_rent[i] / gross;
      renter_const += econ.utility.value(d.incumbent_wealth[i] - rent1) * d.renter_share[i] *
                      d.grid.weight[i];
    }
  }

  auto objective = [&](double x) {
    double req = adj.required_revenue(j, x);
    double c = (pool - req) / d.grid.mass;
    if (c <= 0.0) return -std::numeric_limits<double>::infinity();
    double school = econ.school_weight *
                    (econ.school_quality(j, x) + econ.school_quality(j, ctx.expenditure[j]));
    return school + econ.utility.value(c) * owner_mass + renter_const;
  };

  double hi = std::min(bounds.hi, upper_search_bound(econ, j, d, adj));
  double lo = std::max(0.0, bounds.lo);
  if (!(hi > lo)) return lo;
  double tol = std::max(1e-9, 1e-8 * (hi - lo));
  double value = 0.0;
  double x = golden_max(objective, lo, hi, tol, &value);
  if (objective(lo) > value) return lo;
  return x;
}

GameSolution nash_equilibrium(const Economy& econ, const GameOptions& options) {
  const int n = static_cast<int>(econ.n_districts());
  std::vector<double> e = options.initial.empty() ? std::vector<double>(n, 0.5) : options.initial;
  if (static_cast<int>(e.size()) != n)
    throw ValidationError("nash_equilibrium: initial profile size mismatch");

  auto bounds_for = [&](int j) {
    SearchBounds b;
    if (!options.floors.empty()) b.lo = options.floors[j];
    if (!options.caps.empty()) b.hi = options.caps[j];
    return b;
  };
  auto is_fixed = [&](int j) { return !options.fixed.empty() && options.fixed[j] != 0; };

  GameSolution sol;
  std::deque<double> residual_trace;
  bool converged = false;
  StationaryContext ctx;
  std::vector<double> e_prev = e;
  std::vector<double> br_prev = e;
  double prev_resid = std::numeric_limits<double>::infinity();
  bool have_warm = false;
  double damping = options.damping;
  int stall_window = 0;
  double stall_best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    // if an aggressive step left the stationary-feasible region, back off
    for (int back = 0;; ++back) {
      try {
        ctx = make_stationary_context(econ, e, options.adjustment, options.grid_points,
                                      options.incumbents.empty() ? nullptr : &options.incumbents);
        break;
      } catch (const RevenueInfeasible&) {
        if (it == 0 || back >= 12) throw;
        for (int j = 0; j < n; ++j) e[j] = 0.5 * (e[j] + e_prev[j]);
      }
    }
    std::vector<double> br(n);
    std::vector<char> split(n, 0);
    // inner passes track the previous responses with a windowed search; the
    // convergence claim below always rests on a full multi-start pass
    bool warm_pass = have_warm && prev_resid < 0.5;
    double inner_tol = std::max(1e-8, std::min(1e-4, 0.02 * prev_resid));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
      int dj = static_cast<int>(j);
      if (is_fixed(dj)) {
        br[j] = e[j];
        return;
      }
      if (warm_pass) {
        double window = std::max(0.05, 6.0 * std::abs(br_prev[j] - e[j]));
        br[j] = best_response_warm(econ, dj, e, ctx, options.adjustment, bounds_for(dj),
                                   br_prev[j], window, inner_tol);
      } else {
        auto res = best_response_detail(econ, dj, e, ctx, options.adjustment, bounds_for(dj));
        br[j] = res.argmax;
        split[j] = res.split_optima ? 1 : 0;
      }
    });
    double resid = 0.0;
    for (int j = 0; j < n; ++j) resid = std::max(resid, std::abs(br[j] - e[j]));
    if (options.damping * resid <= options.tol && warm_pass) {
      // verify against the full search before declaring convergence
      parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        int dj = static_cast<int>(j);
        if (is_fixed(dj)) return;
        auto res = best_response_detail(econ, dj, e, ctx, options.adjustment, bounds_for(dj));
        br[j] = res.argmax;
        split[j] = res.split_optima ? 1 : 0;
      });
      resid = 0.0;
      for (int j = 0; j < n; ++j) resid = std::max(resid, std::abs(br[j] - e[j]));
    }
    residual_trace.push_back(resid);
    if (residual_trace.size() > 8) residual_trace.pop_front();
    sol.iterations = it + 1;
    sol.br_residual = resid;
    for (int j = 0; j < n; ++j) sol.multiple_optima = sol.multiple_optima || split[j] != 0;
    if (options.trace) {
      std::fprintf(stderr, "[nash] it=%d resid=%.3e damping=%.4f e=(", it, resid, damping);
      for (int j = 0; j < n; ++j) std::fprintf(stderr, "%s%.6f", j ? ", " : "", e[j]);
      std::fprintf(stderr, ") br=(");
      for (int j = 0; j < n; ++j) std::fprintf(stderr, "%s%.6f", j ? ", " : "", br[j]);
      std::fprintf(stderr, ")\n");
    }
    if (options.damping * resid <= options.tol) {
      converged = true;
      break;
    }
    // steep best-response slopes make the damped map cycle; halve the step
    // when the residual stops shrinking, and recover once it contracts again
    ++stall_window;
    if (resid < 0.7 * stall_best) {
      if (resid < 0.35 * stall_best && damping < options.damping) damping *= 2.0;
      stall_best = resid;
      stall_window = 0;
    }
    if (stall_window >= 10 && damping > 0.02) {
      damping *= 0.5;
      stall_window = 0;
      stall_best = resid;
    }
    br_prev = br;
    prev_resid = resid;
    have_warm = true;
    e_prev = e;
    for (int j = 0; j < n; ++j) e[j] = (1.0 - damping) * e[j] + damping * br[j];
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "nash_equilibrium: no convergence after " << options.max_iterations
        << " iterations; recent residuals:";
    for (double r : residual_trace) msg << ' ' << r;
    throw NoConvergence(msg.str());
  }

  sol.expenditure = e;
  sol.context = std::move(ctx);
  sol.taxes.resize(n);
  sol.objectives.resize(n);
  for (int j = 0; j < n; ++j) {
    const DistrictContext& d = sol.context.district[j];
    sol.taxes[j] =
        optimal_tax_schedule(econ, j, options.adjustment.required_revenue(j, e[j]), d.grid, d.pdv,
                             d.resale_price, d.incumbent_wealth);
    sol.objectives[j] = district_objective(econ, j, e, sol.context, options.adjustment);
  }
  return sol;
}

}  // namespace ftb
