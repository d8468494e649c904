#pragma once

#include <string>

#include "ftb/errors.hpp"

namespace ftb {

enum class UtilityKind { log_utility, crra };

// Per-period felicity. Strictly increasing, strictly concave, u'(0+) = inf.
struct UtilitySpec {
  UtilityKind kind = UtilityKind::log_utility;
  double gamma = 2.0;  // CRRA curvature, gamma != 1; ignored for log

  double value(double c) const;
  double marginal(double c) const;
  double marginal_inverse(double mu) const;
  void validate() const;
};

// (tax bill, purchase price, resale price) attached to a location.
struct PaymentPriceVector {
  double tax = 0.0;
  double buy_price = 0.0;
  double sell_price = 0.0;
};

// Present discounted value: -buy - tax + sell / (1 + r).
double pdv(const PaymentPriceVector& z, double rate);

struct SavingsSolution {
  double savings = 0.0;  // negative = borrowing
  double c1 = 0.0;
  double c2 = 0.0;
  double value = 0.0;  // u(c1) + u(c2)
};

// Optimal consumption smoothing for an individual with per-period income w who
// trades the bundle z and borrows/saves at `rate`. Bisection on the
// Euler-equation residual, which is strictly monotone in savings.
SavingsSolution solve_savings(double income, const PaymentPriceVector& z, double rate,
                              const UtilitySpec& u);

// V(w, z): indirect utility of money for the bundle z.
double money_value(double income, const PaymentPriceVector& z, double rate, const UtilitySpec& u);

// V(w, m) at the canonical bundle (tax = -m, prices 0). Bundles with equal PDV
// are payoff-equivalent, so one representative per class suffices.
double money_value_of_pdv(double income, double pdv_m, double rate, const UtilitySpec& u);

// dV/dw = (2 + r) u'(c2) at the optimal plan.
double marginal_value(double income, const PaymentPriceVector& z, double rate,
                      const UtilitySpec& u);

// Inverse of m -> V(w, m): the PDV delivering a target money value. When
// `solution` is given, the savings solution at the returned PDV is stored there.
double invert_value_in_money(double income, double target, double rate, const UtilitySpec& u,
                             double warm_start = 0.0, SavingsSolution* solution = nullptr);

}  // namespace ftb
