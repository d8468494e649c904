#include "ftb/distribution.hpp"

#include <algorithm>
#include <cmath>

namespace ftb {

Distribution Distribution::uniform(double lo, double hi, double mass) {
  if (!(hi > lo)) throw ValidationError("distribution: support must have positive length");
  if (!(mass > 0.0)) throw ValidationError("distribution: mass must be positive");
  Distribution d;
  d.kind_ = DistKind::uniform;
  d.knots_ = {{lo, 0.0}, {hi, mass}};
  return d;
}

Distribution Distribution::piecewise_linear(std::vector<DistKnot> knots) {
  if (knots.size() < 2) throw ValidationError("distribution: need at least two knots");
  if (std::abs(knots.front().cum) > 0.0)
    throw ValidationError("distribution: CDF must start at zero");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].x > knots[i - 1].x))
      throw ValidationError("distribution: knot positions must be strictly increasing");
    if (!(knots[i].cum > knots[i - 1].cum))
      throw ValidationError("distribution: CDF must be strictly increasing on the support");
  }
  Distribution d;
  d.kind_ = DistKind::piecewise_linear_cdf;
  d.knots_ = std::move(knots);
  return d;
}

double Distribution::cdf(double x) const {
  if (x <= knots_.front().x) return 0.0;
  if (x >= knots_.back().x) return knots_.back().cum;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                             [](double v, const DistKnot& k) { return v < k.x; });
  const DistKnot& hi = *it;
  const DistKnot& lo = *(it - 1);
  double t = (x - lo.x) / (hi.x - lo.x);
  return lo.cum + t * (hi.cum - lo.cum);
}

double Distribution::quantile(double m) const {
  if (m <= 0.0) return knots_.front().x;
  if (m >= knots_.back().cum) return knots_.back().x;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), m,
                             [](double v, const DistKnot& k) { return v < k.cum; });
  const DistKnot& hi = *it;
  const DistKnot& lo = *(it - 1);
  double t = (m - lo.cum) / (hi.cum - lo.cum);
  return lo.x + t * (hi.x - lo.x);
}

double Distribution::density(double x) const {
  if (x < knots_.front().x || x > knots_.back().x) return 0.0;
  std::size_t i = 1;
  while (i + 1 < knots_.size() && x >= knots_[i].x) ++i;
  return (knots_[i].cum - knots_[i - 1].cum) / (knots_[i].x - knots_[i - 1].x);
}

Distribution Distribution::scaled(double factor) const {
  if (!(factor > 0.0)) throw ValidationError("distribution: scale factor must be positive");
  Distribution d = *this;
  for (auto& k : d.knots_) k.cum *= factor;
  return d;
}

}  // namespace ftb
