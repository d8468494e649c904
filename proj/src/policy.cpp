#include "ftb/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftb/parallel.hpp"

namespace ftb {

namespace {

constexpr double kParetoSlack = 1e-9;  // absorbs solver noise in "weakly better off"

std::vector<DistrictDelta> objective_deltas(const Economy& econ, const GameSolution& base,
                                            const GameSolution& treated) {
  std::vector<DistrictDelta> out(econ.n_districts());
  for (std::size_t j = 0; j < econ.n_districts(); ++j) {
    out[j].id = econ.districts[j].id;
    out[j].baseline = base.objectives[j].total();
    out[j].treated = treated.objectives[j].total();
  }
  return out;
}

void finish_report(PolicyReport& rep) {
  rep.pareto = true;
  rep.strict_gainers.clear();
  for (std::size_t j = 0; j < rep.objective_delta.size(); ++j) {
    double d = rep.objective_delta[j].delta();
    if (d < -kParetoSlack) rep.pareto = false;
    if (d > kParetoSlack) rep.strict_gainers.push_back(static_cast<int>(j));
  }
}

}  // namespace

PolicyReport solve_capped_equilibrium(const Economy& econ, const CapPolicy& policy,
                                      const GameSolution& baseline, const GameOptions& base_opt) {
  const int n = static_cast<int>(econ.n_districts());
  if (static_cast<int>(policy.caps.size()) != n)
    throw ValidationError("cap policy: need one cap per district");
  for (double c : policy.caps)
    if (!(c >= 0.0)) throw ValidationError("cap policy: caps must be nonnegative");

  GameOptions opt = base_opt;
  opt.caps = policy.caps;
  opt.initial = baseline.expenditure;
  // the policy verdict concerns the residents in place at the baseline
  opt.incumbents.resize(n);
  for (int j = 0; j < n; ++j)
    opt.incumbents[j] = baseline.context.district[j].incumbent_wealth;
  std::vector<char> is_target(n, 0);
  for (int j : policy.targets) is_target[j] = 1;
  if (!policy.reoptimize_others && !policy.targets.empty()) {
    opt.fixed.assign(n, 0);
    for (int j = 0; j < n; ++j) opt.fixed[j] = is_target[j] ? 0 : 1;
  }
  for (int j = 0; j < n; ++j) opt.initial[j] = std::min(opt.initial[j], policy.caps[j]);

  PolicyReport rep;
  rep.baseline = baseline;
  rep.treated = nash_equilibrium(econ, opt);
  rep.objective_delta = objective_deltas(econ, baseline, rep.treated);
  finish_report(rep);
  rep.verdict = rep.pareto ? "pareto improvement" : "not a pareto improvement";
  return rep;
}

PolicyReport find_pareto_caps(const Economy& econ, const std::vector<int>& targets,
                              const GameSolution& baseline, const GameOptions& base_opt,
                              int reduction_steps) {
  if (targets.empty()) throw ValidationError("find_pareto_caps: empty target set");
  const int n = static_cast<int>(econ.n_districts());

  // the searchable reductions stop at the fixed-gap optimum of the most
  // constrained target district
  double reduction_cap = std::numeric_limits<double>::infinity();
  for (int j : targets) {
    double tilde = fixed_gap_best_response(econ, j, baseline.context, base_opt.adjustment);
    reduction_cap = std::min(reduction_cap, baseline.expenditure[j] - tilde);
  }
  double scale = 1.0;
  for (int j : targets) scale = std::max(scale, baseline.expenditure[j]);

  PolicyReport rep;
  rep.baseline = baseline;
  if (!(reduction_cap > 1e-4 * scale)) {
    // equilibrium and fixed-gap spending coincide up to solver noise
    rep.treated = baseline;
    rep.objective_delta = objective_deltas(econ, baseline, baseline);
    rep.found = false;
    rep.pareto = false;
    rep.verdict = "no improving cap: equilibrium already at the fixed-gap benchmark";
    return rep;
  }

  struct Candidate {
    bool valid = false;
    double reduction = 0.0;
    double min_delta = -std::numeric_limits<double>::infinity();
    PolicyReport report;
  };
  std::vector<Candidate> cand(reduction_steps);
  parallel_for(static_cast<std::size_t>(reduction_steps), [&](std::size_t k) {
    double reduction = reduction_cap * static_cast<double>(k + 1) / reduction_steps;
    CapPolicy pol;
    pol.caps.assign(n, std::numeric_limits<double>::infinity());
    pol.targets = targets;
    pol.common_reduction = reduction;
    for (int j : targets) pol.caps[j] = baseline.expenditure[j] - reduction;
    try {
      Candidate c;
      c.report = solve_capped_equilibrium(econ, pol, baseline, base_opt);
      c.reduction = reduction;
      c.min_delta = std::numeric_limits<double>::infinity();
      for (const auto& d : c.report.objective_delta)
        c.min_delta = std::min(c.min_delta, d.delta());
      c.valid = true;
      cand[k] = std::move(c);
    } catch (const SolverError&) {
      // leave invalid; other reductions may still solve
    }
  });

  int best = -1;
  std::vector<SweepPoint> sweep;
  for (int k = 0; k < reduction_steps; ++k) {
    if (!cand[k].valid) continue;
    SweepPoint pt;
    pt.reduction = cand[k].reduction;
    for (const auto& d : cand[k].report.objective_delta) pt.delta.push_back(d.delta());
    sweep.push_back(std::move(pt));
    if (best < 0 || cand[k].min_delta > cand[best].min_delta) best = k;
  }
  if (best < 0) throw NoConvergence("find_pareto_caps: no cap reduction produced a solution");

  rep = std::move(cand[best].report);
  rep.baseline = baseline;
  rep.sweep = std::move(sweep);
  rep.chosen_reduction = cand[best].reduction;
  rep.found = cand[best].min_delta >= -kParetoSlack;
  if (!rep.found) rep.verdict = "no improving cap: every tested reduction harms some district";
  return rep;
}

PolicyReport solve_fee_policy(const Economy& econ, const FeePolicy& policy,
                              const GameSolution& baseline, const GameOptions& base_opt) {
  const int n = static_cast<int>(econ.n_districts());
  if (static_cast<int>(policy.threshold.size()) != n)
    throw ValidationError("fee policy: need one threshold per district");
  if (static_cast<int>(policy.transfer_weights.size()) != n)
    throw ValidationError("fee policy: need one transfer weight per district");
  if (!(policy.fee_rate >= 0.0 && policy.fee_rate <= 1.0))
    throw ValidationError("fee policy: rate must lie in [0, 1]");
  double wsum = 0.0;
  for (double w : policy.transfer_weights) {
    if (w < 0.0) throw ValidationError("fee policy: transfer weights must be nonnegative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw ValidationError("fee policy: transfer weights must sum to 1");

  RevenueAdjustment adj;
  adj.fee_threshold = policy.threshold;
  adj.fee_rate = policy.fee_rate;
  adj.transfer_in.assign(n, 0.0);

  // transfers feed back into budgets: iterate fee collection to a fixed point
  GameOptions opt = base_opt;
  opt.initial = baseline.expenditure;
  opt.incumbents.resize(n);
  for (int j = 0; j < n; ++j)
    opt.incumbents[j] = baseline.context.district[j].incumbent_wealth;
  GameSolution sol = baseline;
  for (int round = 0; round < 80; ++round) {
    opt.adjustment = adj;
    sol = nash_equilibrium(econ, opt);
    double collected = 0.0;
    for (int j = 0; j < n; ++j) collected += adj.fee_paid(j, sol.expenditure[j]);
    double drift = 0.0;
    for (int j = 0; j < n; ++j) {
      double target = policy.transfer_weights[j] * collected;
      drift = std::max(drift, std::abs(target - adj.transfer_in[j]));
      adj.transfer_in[j] = target;
    }
    opt.initial = sol.expenditure;
    if (drift <= 1e-9) break;
    if (round == 79)
      throw NoConvergence("solve_fee_policy: transfer fixed point did not settle");
  }

  PolicyReport rep;
  rep.baseline = baseline;
  rep.treated = std::move(sol);
  rep.objective_delta = objective_deltas(econ, baseline, rep.treated);
  finish_report(rep);
  rep.verdict = rep.pareto ? "pareto improvement" : "not a pareto improvement";
  return rep;
}

RentalOutcome rental_rates(std::span<const double> quality, std::span<const double> pdv,
                           std::span<const double> tax, double rate) {
  if (quality.size() != pdv.size() || quality.size() != tax.size())
    throw ValidationError("rental_rates: schedule length mismatch");
  RentalOutcome out;
  out.quality.assign(quality.begin(), quality.end());
  out.rent1.resize(quality.size());
  for (std::size_t i = 0; i < quality.size(); ++i)
    out.rent1[i] = -pdv[i] * (1.0 + rate) / (2.0 + rate) - tax[i];
  out.rent2 = out.rent1;  // stationary: both periods share one rate
  return out;
}

FloorCheckReport expenditure_floor_check(const Economy& econ, const GameOptions& base_opt) {
  GameSolution base = nash_equilibrium(econ, base_opt);
  const int n = static_cast<int>(econ.n_districts());

  FloorCheckReport rep;
  rep.district.resize(n);
  rep.applicable = true;
  double floor_lo = 0.0, floor_hi = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    auto& d = rep.district[j];
    d.id = econ.districts[j].id;
    d.equilibrium = base.expenditure[j];
    d.fixed_gap = fixed_gap_best_response(econ, j, base.context, base_opt.adjustment);
    d.underspends = d.equilibrium < d.fixed_gap - 1e-6;
    rep.applicable = rep.applicable && d.underspends;
    floor_lo = std::max(floor_lo, d.equilibrium);
    floor_hi = std::min(floor_hi, d.fixed_gap);
  }
  if (!rep.applicable || !(floor_hi > floor_lo)) return rep;

  rep.floor_tested = floor_lo + 0.5 * (floor_hi - floor_lo);
  GameOptions opt = base_opt;
  opt.floors.assign(n, rep.floor_tested);
  opt.incumbents.resize(n);
  for (int j = 0; j < n; ++j)
    opt.incumbents[j] = base.context.district[j].incumbent_wealth;
  opt.initial = base.expenditure;
  for (int j = 0; j < n; ++j) opt.initial[j] = std::max(opt.initial[j], rep.floor_tested);
  GameSolution floored = nash_equilibrium(econ, opt);

  rep.objective_delta.resize(n);
  rep.floor_improves_all = true;
  for (int j = 0; j < n; ++j) {
    rep.objective_delta[j] = floored.objectives[j].total() - base.objectives[j].total();
    rep.floor_improves_all = rep.floor_improves_all && rep.objective_delta[j] > kParetoSlack;
  }
  return rep;
}

CompStatReport comparative_statics_audit(const Economy& econ, int j,
                                         std::span<const double> base_profile,
                                         std::span<const double> e_steps, int probe_points) {
  const int n = static_cast<int>(econ.n_districts());
  std::vector<double> base(base_profile.begin(), base_profile.end());
  Allocation alloc0 = assign_locations(econ, base);
  MoneyValueSolution mvs0 = money_values(econ, alloc0, base);

  const double equality_tol = 5e-8;
  const double strict_margin = 1e-7;
  const double edge = 0.02;  // stay clear of case cutoffs when asserting strictness

  CompStatReport rep;
  rep.all_hold = true;
  for (double step : e_steps) {
    std::vector<double> raised = base;
    raised[j] += step;
    Allocation alloc1 = assign_locations(econ, raised);
    MoneyValueSolution mvs1 = money_values(econ, alloc1, raised);

    double s_old = econ.school_quality(j, base[j]);
    double s_new = econ.school_quality(j, raised[j]);
    double j_lo = econ.districts[j].housing.lo(), j_hi = econ.districts[j].housing.hi();

    // the raiser's own homes are insulated only below the lowest competing
    // entry across all other districts
    double min_other_bottom = std::numeric_limits<double>::infinity();
    double max_other_top = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      double sk = econ.school_quality(k, base[k]);
      min_other_bottom = std::min(min_other_bottom, econ.districts[k].housing.lo() + sk);
      max_other_top = std::max(max_other_top, econ.districts[k].housing.hi() + sk);
    }
    bool raiser_below_everyone = j_hi + s_new < min_other_bottom + 1e-12;
    double own_equal_to_global, own_strict_from_global;
    if (raiser_below_everyone) {
      own_equal_to_global = j_hi;  // fully insulated
      own_strict_from_global = j_hi + 1.0;
    } else if (j_lo + s_new >= min_other_bottom) {
      own_equal_to_global = -std::numeric_limits<double>::infinity();
      own_strict_from_global = j_lo;  // every own home repriced
    } else {
      own_equal_to_global = min_other_bottom - s_new;
      own_strict_from_global = min_other_bottom - s_old;
    }

    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      CompStatStep st;
      st.other = k;
      st.e_step = step;
      double sk = econ.school_quality(k, base[k]);
      double k_lo = econ.districts[k].housing.lo(), k_hi = econ.districts[k].housing.hi();

      double j_span = j_hi - j_lo, k_span = k_hi - k_lo;
      bool dominates_before = j_lo + s_old >= k_hi + sk - 1e-12;
      bool dominated_after = j_hi + s_new < k_lo + sk + 1e-12;
      if (dominates_before)
        st.kind = CompStatCase::raiser_dominates;
      else if (dominated_after)
        st.kind = CompStatCase::raiser_dominated;
      else if (j_lo + s_new >= k_lo + sk)
        st.kind = CompStatCase::overlap_above;
      else
        st.kind = CompStatCase::overlap_below;

      double worst_eq = 0.0;
      double best_strict = std::numeric_limits<double>::infinity();
      auto diff_at = [&](int district, double q) {
        return mvs1.pdv_at_quality(district, q) - mvs0.pdv_at_quality(district, q);
      };

      // own homes: strictly worse terms above the global cutoff, untouched
      // below it
      double own_strict_from = own_strict_from_global;
      double own_equal_to = own_equal_to_global;
      for (int i = 0; i < probe_points; ++i) {
        double q = j_lo + j_span * (i + 0.5) / probe_points;
        double d = diff_at(j, q);
        if (q <= own_equal_to - edge * j_span) worst_eq = std::max(worst_eq, std::abs(d));
        if (q >= own_strict_from + edge * j_span) best_strict = std::min(best_strict, -d);
      }
      if (!raiser_below_everyone) {
        double q_probe = std::min(j_hi - 0.05 * j_span,
                                  std::max(own_strict_from + edge * j_span, j_lo));
        st.own_quotient = diff_at(j, q_probe) / step;
      }

      // the other district's homes: strictly better terms above the case
      // cutoff, untouched below the pre-step cutoff
      double other_strict_from = k_lo;
      double other_equal_to = -std::numeric_limits<double>::infinity();
      if (st.kind == CompStatCase::raiser_dominates) {
        other_strict_from = k_hi + 1.0;
        other_equal_to = k_hi;
      } else if (st.kind == CompStatCase::overlap_above) {
        other_equal_to = j_lo + s_old - sk;
        other_strict_from = j_lo + s_new - sk;
      }
      for (int i = 0; i < probe_points; ++i) {
        double q = k_lo + k_span * (i + 0.5) / probe_points;
        double d = diff_at(k, q);
        if (q <= other_equal_to - edge * k_span) worst_eq = std::max(worst_eq, std::abs(d));
        if (q >= other_strict_from + edge * k_span) best_strict = std::min(best_strict, d);
      }
      if (st.kind != CompStatCase::raiser_dominates) {
        double q_probe = std::min(k_hi - 0.05 * k_span,
                                  std::max(other_strict_from + edge * k_span, k_lo));
        st.cross_quotient = diff_at(k, q_probe) / step;
      }

      st.max_equality_violation = worst_eq;
      st.min_strict_margin = std::isfinite(best_strict) ? best_strict : 0.0;
      bool strict_ok = !std::isfinite(best_strict) || best_strict > strict_margin;
      bool quotient_ok = true;
      if (!raiser_below_everyone) quotient_ok = st.own_quotient < -1e-9;
      if (st.kind != CompStatCase::raiser_dominates)
        quotient_ok = quotient_ok && st.cross_quotient > 1e-9;
      st.pattern_holds = worst_eq <= equality_tol && strict_ok && quotient_ok;
      rep.all_hold = rep.all_hold && st.pattern_holds;
      rep.steps.push_back(st);
    }
  }
  return rep;
}

}  // namespace ftb
