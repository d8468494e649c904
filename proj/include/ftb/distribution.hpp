#pragma once

#include <vector>

#include "ftb/errors.hpp"

namespace ftb {

enum class DistKind { uniform, piecewise_linear_cdf };

struct DistKnot {
  double x = 0.0;
  double cum = 0.0;  // cumulative mass at x
};

// Continuous distribution with piecewise-linear CDF, strictly increasing on its
// support (density bounded away from zero). A uniform distribution is the
// two-knot special case, so one code path serves both kinds.
class Distribution {
 public:
  Distribution() = default;

  static Distribution uniform(double lo, double hi, double mass = 1.0);
  static Distribution piecewise_linear(std::vector<DistKnot> knots);

  double cdf(double x) const;       // cumulative mass, clamped to [0, mass]
  double quantile(double m) const;  // inverse of cdf on [0, mass]
  double density(double x) const;   // one-sided from the right inside, left at hi

  double lo() const { return knots_.front().x; }
  double hi() const { return knots_.back().x; }
  double mass() const { return knots_.back().cum; }
  const std::vector<DistKnot>& knots() const { return knots_; }
  DistKind kind() const { return kind_; }

  Distribution scaled(double factor) const;  // multiply total mass

 private:
  std::vector<DistKnot> knots_;
  DistKind kind_ = DistKind::uniform;
};

}  // namespace ftb
