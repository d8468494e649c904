#include "ftb/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ftb/parallel.hpp"
#include "ftb/rng.hpp"

namespace ftb {

Allocation::Allocation(const Economy& econ, std::span<const double> expenditure) {
  econ.validate();
  const int n = static_cast<int>(econ.n_districts());
  if (static_cast<int>(expenditure.size()) != n)
    throw ValidationError("assign_locations: expenditure profile size mismatch");
  for (double e : expenditure)
    if (!(e >= 0.0)) throw ValidationError("assign_locations: expenditure must be nonnegative");

  school_.resize(n);
  q_lo_.resize(n);
  q_hi_.resize(n);
  for (int j = 0; j < n; ++j) {
    school_[j] = econ.school_quality(j, expenditure[j]);
    q_lo_[j] = econ.districts[j].housing.lo();
    q_hi_[j] = econ.districts[j].housing.hi();
  }
  econ_ = &econ;

  double total_housing = 0.0;
  for (int j = 0; j < n; ++j) total_housing += econ.districts[j].housing.mass();
  if (std::abs(total_housing - econ.income.mass()) > 1e-12)
    throw MassMismatch("assign_locations: housing and population masses differ");

  // Breakpoints on the location-quality axis: every housing knot, shifted by
  // the district's school quality. Between breakpoints the pooled density is
  // constant.
  std::vector<double> cuts;
  for (int j = 0; j < n; ++j)
    for (const auto& k : econ.districts[j].housing.knots()) cuts.push_back(k.x + school_[j]);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) {
                           return std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(a));
                         }),
             cuts.end());

  auto pooled_mass = [&](double x) {
    double h = 0.0;
    for (int j = 0; j < n; ++j) h += econ.districts[j].housing.cdf(x - school_[j]);
    return h;
  };

  const Distribution& income = econ.income;
  double pending_jump = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double x0 = cuts[k], x1 = cuts[k + 1];
    if (!(x1 > x0)) continue;
    double xm = 0.5 * (x0 + x1);
    std::vector<int> active;
    double density = 0.0;
    for (int j = 0; j < n; ++j) {
      if (xm > q_lo_[j] + school_[j] && xm < q_hi_[j] + school_[j]) {
        active.push_back(j);
        density += econ.districts[j].housing.density(xm - school_[j]);
      }
    }
    if (active.empty() || density <= 0.0) {
      pending_jump += x1 - x0;  // quality-dominance gap: no homes here
      continue;
    }
    double h0 = pooled_mass(x0), h1 = pooled_mass(x1);
    if (!(h1 > h0)) continue;

    // refine at income knots so location quality is linear in type per segment
    std::vector<double> inner_mass = {h0};
    for (const auto& fk : income.knots())
      if (fk.cum > h0 + 1e-15 && fk.cum < h1 - 1e-15) inner_mass.push_back(fk.cum);
    inner_mass.push_back(h1);
    std::sort(inner_mass.begin(), inner_mass.end());

    for (std::size_t i = 0; i + 1 < inner_mass.size(); ++i) {
      double m0 = inner_mass[i], m1 = inner_mass[i + 1];
      if (!(m1 > m0)) continue;
      AllocationSegment seg;
      seg.mass_lo = m0;
      seg.mass_hi = m1;
      seg.ell_lo = x0 + (m0 - h0) / density;
      seg.ell_hi = x0 + (m1 - h0) / density;
      seg.w_lo = income.quantile(m0);
      seg.w_hi = income.quantile(m1);
      seg.pooled_density = density;
      double fd = income.density(0.5 * (seg.w_lo + seg.w_hi));
      seg.ell_slope = fd / density;
      seg.active = active;
      seg.jump_before = pending_jump;
      pending_jump = 0.0;
      segments_.push_back(std::move(seg));
    }
  }
  if (segments_.empty()) throw ValidationError("assign_locations: empty assignment");

  cutoff_low_ = segments_.back().w_hi;
  cutoff_high_ = segments_.back().w_hi;
  bool found_multi = false;
  for (const auto& s : segments_) {
    if (s.active.size() >= 2) {
      if (!found_multi) cutoff_low_ = s.w_lo;
      cutoff_high_ = s.w_hi;
      found_multi = true;
    }
  }
  if (!found_multi) {
    // fully segregated: report the type at which the active set first changes
    for (std::size_t i = 0; i + 1 < segments_.size(); ++i) {
      if (segments_[i].active != segments_[i + 1].active) {
        cutoff_low_ = cutoff_high_ = segments_[i].w_hi;
        break;
      }
    }
  }
}

const AllocationSegment& Allocation::segment_of_type(double w) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), w,
                             [](double v, const AllocationSegment& s) { return v < s.w_hi; });
  if (it == segments_.end()) return segments_.back();
  return *it;
}

const AllocationSegment& Allocation::segment_of_mass(double m) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), m,
                             [](double v, const AllocationSegment& s) { return v < s.mass_hi; });
  if (it == segments_.end()) return segments_.back();
  return *it;
}

double Allocation::location_quality(double w) const {
  const AllocationSegment& s = segment_of_type(w);
  double m = econ_->income.cdf(w);
  double mm = std::clamp(m, s.mass_lo, s.mass_hi);
  return s.ell_lo + (mm - s.mass_lo) / s.pooled_density;
}

double Allocation::location_slope(double w) const {
  const AllocationSegment& s = segment_of_type(w);
  return s.ell_slope;
}

double Allocation::arrivals(int j, double w) const {
  return econ_->districts[j].housing.cdf(location_quality(w) - school_[j]);
}

double Allocation::house_choice(int j, double w) const {
  return std::clamp(location_quality(w) - school_[j], q_lo_[j], q_hi_[j]);
}

double Allocation::type_at(int j, double q) const {
  double ell = q + school_[j];
  // first segment containing ell among those where j is active
  for (const auto& s : segments_) {
    if (ell <= s.ell_hi + 1e-12 &&
        std::find(s.active.begin(), s.active.end(), j) != s.active.end()) {
      double e = std::clamp(ell, s.ell_lo, s.ell_hi);
      double m = s.mass_lo + (e - s.ell_lo) * s.pooled_density;
      return econ_->income.quantile(m);
    }
  }
  return segments_.back().w_hi;
}

bool Allocation::district_active_at(int j, double w) const {
  const auto& a = segment_of_type(w).active;
  return std::find(a.begin(), a.end(), j) != a.end();
}

Allocation assign_locations(const Economy& econ, std::span<const double> expenditure) {
  return Allocation(econ, expenditure);
}

// ---------------------------------------------------------------------------
// money values

namespace {

struct OdeRhs {
  const UtilitySpec& u;
  double rate;
  double ell_slope;
  mutable double warm_pdv;

  // dM/dw = V_1(w, m(w)) - ell'(w), with m(w) inverted from V(w, m) = M
  double operator()(double w, double M) const {
    SavingsSolution sol;
    try {
      warm_pdv = invert_value_in_money(w, M, rate, u, warm_pdv, &sol);
    } catch (const Error& e) {
      throw OdeStepFailure(std::string("money_values: inner inversion failed: ") + e.what());
    }
    return (2.0 + rate) * u.marginal(sol.c2) - ell_slope;
  }
};

double rk4_step(const OdeRhs& f, double w, double M, double h, double f0) {
  double k1 = f0;
  double k2 = f(w + 0.5 * h, M + 0.5 * h * k1);
  double k3 = f(w + 0.5 * h, M + 0.5 * h * k2);
  double k4 = f(w + h, M + h * k3);
  return M + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

MoneyValueSolution::MoneyValueSolution(const Economy& econ, const Allocation& alloc,
                                       std::span<const double> expenditure)
    : alloc_(alloc), utility_(econ.utility), rate_(econ.rate) {
  (void)expenditure;
  const double rtol = 1e-11, atol = 1e-13;

  double M = econ.outside_money_value;
  double warm = 0.0;
  {
    SavingsSolution sol;
    double w0 = alloc_.segments().front().w_lo;
    warm = invert_value_in_money(w0, M, rate_, utility_, 0.0, &sol);
  }

  for (const auto& seg : alloc_.segments()) {
    M -= seg.jump_before;  // location quality jumps up across a gap, U stays continuous
    OdeRhs f{utility_, rate_, seg.ell_slope, warm};
    double w = seg.w_lo;
    double f0 = f(w, M);
    double pdv0 = f.warm_pdv;
    nodes_.push_back({w, M, f0, pdv0});
    double span = seg.w_hi - seg.w_lo;
    if (span <= 0.0) continue;
    double h = span;
    int guard = 0;
    while (w < seg.w_hi) {
      if (++guard > 100000) throw OdeStepFailure("money_values: step count exceeded");
      h = std::min(h, seg.w_hi - w);
      double full = rk4_step(f, w, M, h, f0);
      double half = rk4_step(f, w, M, 0.5 * h, f0);
      double fh = f(w + 0.5 * h, half);
      double pdv_h = f.warm_pdv;
      double two = rk4_step(f, w + 0.5 * h, half, 0.5 * h, fh);
      double err = std::abs(full - two) / 15.0;
      double M1 = two + (two - full) / 15.0;
      double f1 = f(w + h, M1);
      double pdv1 = f.warm_pdv;
      // dense-output control: the cubic Hermite between the step endpoints
      // must reproduce the computed midpoint (midpoints are stored as nodes,
      // shrinking the realized interpolation error by a further factor of 16)
      double mid_pred = 0.5 * (M + M1) + 0.125 * h * (f0 - f1);
      double interp_err = std::abs(mid_pred - half);
      double scale = atol + rtol * std::max(std::abs(M), std::abs(M1));
      if ((err <= scale && interp_err <= 8.0 * scale) ||
          h <= 1e-13 * std::max(1.0, std::abs(w))) {
        w += h;
        M = M1;
        f0 = f1;
        nodes_.push_back({w - 0.5 * h, half, fh, pdv_h});
        nodes_.push_back({w, M, f0, pdv1});
        double grow_end = err > 0.0 ? 0.9 * std::pow(scale / err, 0.2) : 4.0;
        double grow_mid =
            interp_err > 0.0 ? 0.9 * std::pow(8.0 * scale / interp_err, 0.25) : 4.0;
        h *= std::clamp(std::min(grow_end, grow_mid), 0.5, 4.0);
      } else {
        double shrink_end = err > scale ? 0.9 * std::pow(scale / err, 0.2) : 1.0;
        double shrink_mid =
            interp_err > 8.0 * scale ? 0.9 * std::pow(8.0 * scale / interp_err, 0.25) : 1.0;
        h *= std::max(0.2, std::min(shrink_end, shrink_mid));
      }
    }
    warm = f.warm_pdv;
  }
}

std::size_t MoneyValueSolution::node_before(double w) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), w,
                             [](double v, const Node& n) { return v < n.w; });
  if (it == nodes_.begin()) return 0;
  return static_cast<std::size_t>(it - nodes_.begin()) - 1;
}

double MoneyValueSolution::money_value(double w) const {
  std::size_t i = node_before(w);
  if (i + 1 >= nodes_.size()) return nodes_.back().value;
  const Node& a = nodes_[i];
  const Node& b = nodes_[i + 1];
  double h = b.w - a.w;
  if (h <= 0.0) return b.value;
  double t = (w - a.w) / h;
  double t2 = t * t, t3 = t2 * t;
  return (2.0 * t3 - 3.0 * t2 + 1.0) * a.value + (t3 - 2.0 * t2 + t) * h * a.slope +
         (-2.0 * t3 + 3.0 * t2) * b.value + (t3 - t2) * h * b.slope;
}

double MoneyValueSolution::pdv_at_type(double w) const {
  std::size_t i = node_before(w);
  double warm = nodes_[std::min(i, nodes_.size() - 1)].pdv;
  return invert_value_in_money(w, money_value(w), rate_, utility_, warm);
}

double MoneyValueSolution::total_value(double w) const {
  return alloc_.location_quality(w) + money_value(w);
}

double MoneyValueSolution::pdv_at_quality(int j, double q) const {
  double ell = q + alloc_.school_quality(j);
  // evaluate on the segment owning this home so a boundary home on the low side
  // of a quality-dominance gap reads the pre-jump money value
  const AllocationSegment* seg = nullptr;
  for (const auto& s : alloc_.segments()) {
    if (std::find(s.active.begin(), s.active.end(), j) == s.active.end()) continue;
    if (ell <= s.ell_hi + 1e-12) {
      seg = &s;
      break;
    }
  }
  if (!seg) seg = &alloc_.segments().back();
  double w = std::clamp(alloc_.type_at(j, q), seg->w_lo, seg->w_hi);

  std::size_t i = node_before(w);
  // at a shared boundary, step back to the node belonging to this segment
  if (w >= seg->w_hi && i > 0 && nodes_[i].w == nodes_[i - 1].w) --i;
  const Node& a = nodes_[i];
  double Mw = a.value;
  if (i + 1 < nodes_.size() && nodes_[i + 1].w > a.w && w > a.w) {
    const Node& b = nodes_[i + 1];
    double h = b.w - a.w;
    double t = (w - a.w) / h;
    double t2 = t * t, t3 = t2 * t;
    Mw = (2.0 * t3 - 3.0 * t2 + 1.0) * a.value + (t3 - 2.0 * t2 + t) * h * a.slope +
         (-2.0 * t3 + 3.0 * t2) * b.value + (t3 - t2) * h * b.slope;
  }
  return invert_value_in_money(w, Mw, rate_, utility_, a.pdv);
}

MoneyValueSolution money_values(const Economy& econ, const Allocation& alloc,
                                std::span<const double> expenditure) {
  return MoneyValueSolution(econ, alloc, expenditure);
}

// ---------------------------------------------------------------------------
// prices

double steady_state_price(double tax, double pdv_m, double rate) {
  if (!(rate > 0.0)) throw RateRequired("steady_state_price: stationary formula needs r > 0");
  return (1.0 + rate) / rate * (-tax - pdv_m);
}

std::vector<double> steady_state_prices(std::span<const double> pdv, std::span<const double> tax,
                                        double rate) {
  if (pdv.size() != tax.size())
    throw ValidationError("steady_state_prices: schedule length mismatch");
  std::vector<double> p(pdv.size());
  for (std::size_t i = 0; i < pdv.size(); ++i) p[i] = steady_state_price(tax[i], pdv[i], rate);
  return p;
}

double two_period_price(double tax1, double resale, double pdv_m, double rate) {
  return -tax1 + resale / (1.0 + rate) - pdv_m;
}

// ---------------------------------------------------------------------------
// incentive-compatibility audit

IcAuditReport ic_audit(const Economy& econ, const Allocation& alloc,
                       const MoneyValueSolution& mvs, std::size_t sample_count,
                       std::uint64_t seed, const std::function<double(int, double)>& pdv_override) {
  const int n = alloc.n_districts();
  const double w_lo = alloc.type_lo(), w_hi = alloc.type_hi();
  std::vector<double> gain(sample_count, -std::numeric_limits<double>::infinity());
  std::vector<double> types(sample_count), targets(sample_count);
  std::vector<int> dists(sample_count);

  parallel_for(sample_count, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    double w = rng.uniform(w_lo, w_hi);
    double w_target = rng.uniform(w_lo, w_hi);
    int j = static_cast<int>(rng.index(static_cast<std::size_t>(n)));
    double q_dev = alloc.house_choice(j, w_target);
    double m_dev =
        pdv_override ? pdv_override(j, q_dev) : mvs.pdv_at_quality(j, q_dev);
    types[i] = w;
    targets[i] = w_target;
    dists[i] = j;
    double own = mvs.total_value(w);
    try {
      double dev = q_dev + alloc.school_quality(j) +
                   money_value_of_pdv(w, m_dev, econ.rate, econ.utility);
      gain[i] = dev - own;
    } catch (const InfeasibleBudget&) {
      // unaffordable deviation can never be profitable
    }
  });

  IcAuditReport rep;
  rep.samples = sample_count;
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sample_count; ++i) {
    if (gain[i] > rep.max_violation) {
      rep.max_violation = gain[i];
      rep.worst_type = types[i];
      rep.worst_target_type = targets[i];
      rep.worst_district = dists[i];
    }
  }
  return rep;
}

}  // namespace ftb
