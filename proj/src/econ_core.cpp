#include "ftb/econ_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ftb {

namespace {
constexpr double kConsumptionFloor = 1e-12;  // guards u at the (repelling) boundary
constexpr double kSavingsTol = 1e-12;
}  // namespace

double UtilitySpec::value(double c) const {
  double cc = std::max(c, kConsumptionFloor);
  if (kind == UtilityKind::log_utility) return std::log(cc);
  return (std::pow(cc, 1.0 - gamma) - 1.0) / (1.0 - gamma);
}

double UtilitySpec::marginal(double c) const {
  double cc = std::max(c, kConsumptionFloor);
  if (kind == UtilityKind::log_utility) return 1.0 / cc;
  return std::pow(cc, -gamma);
}

double UtilitySpec::marginal_inverse(double mu) const {
  if (kind == UtilityKind::log_utility) return 1.0 / mu;
  return std::pow(mu, -1.0 / gamma);
}

void UtilitySpec::validate() const {
  if (kind == UtilityKind::crra) {
    if (!(gamma > 0.0)) throw ValidationError("utility: gamma must be positive");
    if (std::abs(gamma - 1.0) < 1e-12)
      throw ValidationError("utility: gamma = 1 is the log case; set kind = log");
  }
}

double pdv(const PaymentPriceVector& z, double rate) {
  if (!(1.0 + rate > 0.0)) throw ValidationError("pdv: need 1 + r > 0");
  return -z.buy_price - z.tax + z.sell_price / (1.0 + rate);
}

SavingsSolution solve_savings(double income, const PaymentPriceVector& z, double rate,
                              const UtilitySpec& u) {
  if (!(1.0 + rate > 0.0)) throw ValidationError("solve_savings: need 1 + r > 0");
  const double gross = 1.0 + rate;
  // c1 = income - buy - tax - b > 0  and  c2 = income + sell + (1+r) b > 0
  const double b_hi = income - z.buy_price - z.tax;
  const double b_lo = -(income + z.sell_price) / gross;
  if (!(b_hi > b_lo))
    throw InfeasibleBudget("solve_savings: no savings level gives positive consumption");

  auto c1_at = [&](double b) { return income - z.buy_price - z.tax - b; };
  auto c2_at = [&](double b) { return income + z.sell_price + gross * b; };
  // Euler residual u'(c1) - (1+r) u'(c2); strictly increasing in b.
  auto residual = [&](double b) { return u.marginal(c1_at(b)) - gross * u.marginal(c2_at(b)); };

  double lo = b_lo, hi = b_hi;
  // Bisect until the bracket collapses to kSavingsTol (or machine resolution).
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (residual(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= kSavingsTol * std::max(1.0, std::abs(mid))) break;
  }
  double b = 0.5 * (lo + hi);

  SavingsSolution sol;
  sol.savings = b;
  sol.c1 = c1_at(b);
  sol.c2 = c2_at(b);
  sol.value = u.value(sol.c1) + u.value(sol.c2);
  return sol;
}

double money_value(double income, const PaymentPriceVector& z, double rate, const UtilitySpec& u) {
  return solve_savings(income, z, rate, u).value;
}

double money_value_of_pdv(double income, double pdv_m, double rate, const UtilitySpec& u) {
  return money_value(income, PaymentPriceVector{-pdv_m, 0.0, 0.0}, rate, u);
}

double marginal_value(double income, const PaymentPriceVector& z, double rate,
                      const UtilitySpec& u) {
  SavingsSolution sol = solve_savings(income, z, rate, u);
  return (2.0 + rate) * u.marginal(sol.c2);
}

double invert_value_in_money(double income, double target, double rate, const UtilitySpec& u,
                             double warm_start, SavingsSolution* solution) {
  const double gross = 1.0 + rate;
  // Feasibility boundary: total resources income (2+r)/(1+r) + m must be positive.
  const double m_floor = -income * (2.0 + rate) / gross;

  auto eval = [&](double m) {
    return solve_savings(income, PaymentPriceVector{-m, 0.0, 0.0}, rate, u);
  };
  auto finish = [&](double m, const SavingsSolution& s) {
    if (solution) *solution = s;
    return m;
  };

  double m = std::max(warm_start, m_floor + std::max(1e-10, 1e-10 * std::abs(m_floor)));
  // Safeguarded Newton on V(w, m) = target; dV/dm = u'(c1) by the envelope theorem.
  double lo = m_floor, hi = std::numeric_limits<double>::infinity();
  bool saw_low_side = false;
  const double tol = 1e-12;
  for (int it = 0; it < 200; ++it) {
    SavingsSolution s = eval(m);
    double f = s.value - target;
    if (std::abs(f) <= tol) return finish(m, s);
    double d = u.marginal(s.c1);
    if (f > 0.0)
      hi = std::min(hi, m);
    else {
      lo = std::max(lo, m);
      saw_low_side = true;
    }
    double next = m - f / d;
    bool inside = std::isfinite(next) && next > lo && next < hi;
    if (!inside) {
      if (std::isinf(hi))
        next = m + std::max(1.0, 2.0 * std::abs(m - m_floor));  // expand upward
      else
        next = 0.5 * (lo + hi);
    }
    if (std::isfinite(hi) && hi - lo <= 1e-15 * std::max(1.0, std::abs(hi))) break;
    m = next;
  }
  // Distinguish an unattainable target from slow convergence.
  if (saw_low_side || std::isinf(hi)) {
    double cand = std::isfinite(hi) ? 0.5 * (lo + hi) : m;
    SavingsSolution s = eval(cand);
    if (std::abs(s.value - target) <= 1e-8) return finish(cand, s);
  }
  double boundary_value = eval(m_floor + std::max(1e-12, 1e-12 * std::abs(m_floor))).value;
  if (target < boundary_value)
    throw Unattainable("invert_value_in_money: target below the infeasibility boundary");
  throw SolverError("invert_value_in_money: did not converge");
}

}  // namespace ftb
