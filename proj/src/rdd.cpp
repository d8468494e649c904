#include "ftb/rdd.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "ftb/csv.hpp"
#include "ftb/rng.hpp"

namespace ftb {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_p(double t) { return 2.0 * (1.0 - normal_cdf(std::abs(t))); }

double field_value(const MunicipalityYear& row, const std::string& field) {
  if (field == "avg_tax") return row.avg_tax;
  if (field == "income_pc") return row.income_pc;
  if (field == "home_value") return row.home_value;
  throw ValidationError("unknown outcome field: " + field);
}

}  // namespace

const MunicipalityYear& Panel::at(int muni, int year) const {
  std::size_t idx = static_cast<std::size_t>(muni) * years + (year - first_year);
  if (idx >= rows.size() || rows[idx].muni_id != muni || rows[idx].year != year)
    throw ValidationError("panel: row lookup out of range");
  return rows[idx];
}

void PanelParams::validate() const {
  if (n_muni < 2 || years < 3) throw InvalidParams("panel: need at least 2 towns and 3 years");
  if (!(referendum_propensity >= 0.0 && referendum_propensity <= 1.0))
    throw InvalidParams("panel: referendum propensity must lie in [0, 1]");
  if (!(multi_referendum_share >= 0.0 && multi_referendum_share <= 1.0))
    throw InvalidParams("panel: multi-referendum share must lie in [0, 1]");
  if (!(margin_beta_a > 0.0 && margin_beta_b > 0.0))
    throw InvalidParams("panel: margin beta parameters must be positive");
  if (!(loss_underreport >= 0.0 && loss_underreport <= 1.0))
    throw InvalidParams("panel: loss underreporting must lie in [0, 1]");
  if (!(levy_growth_sd >= 0.0 && home_growth_sd >= 0.0 && income_sd >= 0.0))
    throw InvalidParams("panel: noise scales must be nonnegative");
  if (!(levy0_lo > 0.0 && levy0_hi > levy0_lo && home0_lo > 0.0 && home0_hi > home0_lo))
    throw InvalidParams("panel: level ranges must be positive and ordered");
  if (school_district_size < 1) throw InvalidParams("panel: school district size must be >= 1");
  if (neighbor_links < 1) throw InvalidParams("panel: need at least one neighbor link");
}

Panel generate_panel(const PanelParams& p, std::uint64_t seed) {
  p.validate();
  Panel panel;
  panel.n_muni = p.n_muni;
  panel.years = p.years;
  panel.first_year = p.first_year;
  panel.dgp_truth =
      DgpTruth{p.levy_jump, p.home_value_effect, p.income_per_tax, p.neighbor_spillover};

  // contiguity: towns on the unit square, linked to their nearest neighbors
  Rng geo(derive_seed(seed, 0));
  std::vector<double> px(p.n_muni), py(p.n_muni);
  for (int i = 0; i < p.n_muni; ++i) {
    px[i] = geo.uniform();
    py[i] = geo.uniform();
  }
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < p.n_muni; ++i) {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(p.n_muni - 1);
    for (int k = 0; k < p.n_muni; ++k) {
      if (k == i) continue;
      double dx = px[i] - px[k], dy = py[i] - py[k];
      dist.push_back({dx * dx + dy * dy, k});
    }
    std::size_t links = std::min<std::size_t>(p.neighbor_links, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + links, dist.end());
    for (std::size_t l = 0; l < links; ++l) {
      int a = std::min(i, dist[l].second), b = std::max(i, dist[l].second);
      edges.push_back({a, b});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  panel.adjacency = std::move(edges);

  std::vector<std::vector<int>> neighbors(p.n_muni);
  for (auto [a, b] : panel.adjacency) {
    neighbors[a].push_back(b);
    neighbors[b].push_back(a);
  }

  Rng rng(derive_seed(seed, 1));
  std::vector<double> log_levy(p.n_muni), log_home(p.n_muni);
  std::vector<char> won_now(p.n_muni, 0), ever_won(p.n_muni, 0);
  for (int i = 0; i < p.n_muni; ++i) {
    log_levy[i] = std::log(rng.uniform(p.levy0_lo, p.levy0_hi));
    log_home[i] = std::log(rng.uniform(p.home0_lo, p.home0_hi));
  }

  panel.rows.resize(static_cast<std::size_t>(p.n_muni) * p.years);
  for (int t = 0; t < p.years; ++t) {
    // levy evolution driven by last year's referenda and neighbor wins
    if (t > 0) {
      std::vector<double> growth(p.n_muni);
      for (int i = 0; i < p.n_muni; ++i) {
        double g = p.levy_growth_mean + rng.normal(0.0, p.levy_growth_sd);
        if (p.cumulative_levy_effect ? ever_won[i] != 0 : won_now[i] != 0) g += p.levy_jump;
        if (p.neighbor_spillover != 0.0)
          for (int k : neighbors[i])
            if (won_now[k]) g += p.neighbor_spillover;
        growth[i] = g;
      }
      for (int i = 0; i < p.n_muni; ++i) {
        log_levy[i] += growth[i];
        log_home[i] += p.home_growth_mean + p.home_value_effect * growth[i] +
                       rng.normal(0.0, p.home_growth_sd);
      }
      std::fill(won_now.begin(), won_now.end(), 0);
    }

    for (int i = 0; i < p.n_muni; ++i) {
      MunicipalityYear row;
      row.muni_id = i;
      row.year = p.first_year + t;
      row.school_district_id = i / p.school_district_size;
      row.avg_tax = std::exp(log_levy[i]);
      row.home_value = std::exp(log_home[i]);
      row.income_pc = std::max(
          1.0, p.income_base + p.income_per_tax * row.avg_tax + rng.normal(0.0, p.income_sd));

      if (rng.bernoulli(p.referendum_propensity)) {
        int count = rng.bernoulli(p.multi_referendum_share) ? 2 : 1;
        double sum = 0.0;
        int wins = 0;
        for (int v = 0; v < count; ++v) {
          double m = rng.beta(p.margin_beta_a, p.margin_beta_b) - 0.5;
          sum += m;
          if (m >= 0.0) ++wins;
        }
        bool reported_loss = rng.bernoulli(1.0 - p.loss_underreport);
        if (wins > 0) {
          won_now[i] = 1;
          ever_won[i] = 1;
        }
        // mixed win/loss years and unreported losses leave no usable margin
        if (wins == count) {
          row.has_margin = true;
          row.margin = sum / count;
          row.win = true;
        } else if (wins == 0 && reported_loss) {
          row.has_margin = true;
          row.margin = sum / count;
          row.win = false;
        }
      }
      panel.rows[static_cast<std::size_t>(i) * p.years + t] = row;
    }
  }
  return panel;
}

// ---------------------------------------------------------------------------
// estimation samples

namespace {

struct Sample {
  std::vector<double> margin;
  std::vector<double> outcome;
  std::vector<double> treatment;  // fuzzy only
  long n_left = 0, n_right = 0;
};

double transformed(const Panel& panel, const MunicipalityYear& row, const OutcomeSpec& spec,
                   int lag) {
  const MunicipalityYear& later = panel.at(row.muni_id, row.year + lag);
  double now = field_value(row, spec.field);
  double fut = field_value(later, spec.field);
  switch (spec.transform) {
    case Transform::level:
      return fut;
    case Transform::pct_change:
      return (fut - now) / now;
    case Transform::log_change:
      return std::log(fut / now);
  }
  return 0.0;
}

Sample build_sample(const Panel& panel, const OutcomeSpec& outcome, const OutcomeSpec* treatment,
                    int lag) {
  Sample s;
  for (const auto& row : panel.rows) {
    if (!row.has_margin) continue;
    if (row.year + lag > panel.first_year + panel.years - 1) continue;
    double y = transformed(panel, row, outcome, lag);
    if (!std::isfinite(y)) continue;
    double d = 0.0;
    if (treatment) {
      d = transformed(panel, row, *treatment, lag);
      if (!std::isfinite(d)) continue;
    }
    s.margin.push_back(row.margin);
    s.outcome.push_back(y);
    if (treatment) s.treatment.push_back(d);
    if (row.margin >= 0.0)
      ++s.n_right;
    else
      ++s.n_left;
  }
  return s;
}

// cubic-with-interactions design: [1, m, m^2, m^3, W m, W m^2, W m^3, W]
Eigen::MatrixXd poly3_design(const std::vector<double>& margin) {
  const long n = static_cast<long>(margin.size());
  Eigen::MatrixXd X(n, 8);
  for (long i = 0; i < n; ++i) {
    double m = margin[i];
    double w = m >= 0.0 ? 1.0 : 0.0;
    X(i, 0) = 1.0;
    X(i, 1) = m;
    X(i, 2) = m * m;
    X(i, 3) = m * m * m;
    X(i, 4) = w * m;
    X(i, 5) = w * m * m;
    X(i, 6) = w * m * m * m;
    X(i, 7) = w;
  }
  return X;
}

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residual;
  Eigen::MatrixXd bread;  // (X'X)^{-1}
};

OlsFit ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::MatrixXd xtx = X.transpose() * X;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
  if (!lu.isInvertible()) throw SingularDesign("regression design matrix is singular");
  OlsFit fit;
  fit.bread = lu.inverse();
  fit.beta = fit.bread * (X.transpose() * y);
  fit.residual = y - X * fit.beta;
  return fit;
}

// HC1 covariance between two coefficient vectors sharing the design
Eigen::MatrixXd hc1_cov(const Eigen::MatrixXd& X, const OlsFit& a, const OlsFit& b) {
  const long n = X.rows(), k = X.cols();
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(k, k);
  for (long i = 0; i < n; ++i) {
    Eigen::VectorXd xi = X.row(i).transpose();
    meat += a.residual(i) * b.residual(i) * xi * xi.transpose();
  }
  double scale = static_cast<double>(n) / std::max<long>(1, n - k);
  return scale * a.bread * meat * b.bread;
}

}  // namespace

RddEstimate sharp_rdd_poly(const Panel& panel, const OutcomeSpec& outcome, int lag) {
  Sample s = build_sample(panel, outcome, nullptr, lag);
  if (s.n_left < 50 || s.n_right < 50)
    throw InsufficientData("sharp_rdd_poly: need at least 50 observations per side");
  Eigen::MatrixXd X = poly3_design(s.margin);
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(s.outcome.data(), s.outcome.size());
  OlsFit fit = ols(X, y);
  Eigen::MatrixXd cov = hc1_cov(X, fit, fit);

  RddEstimate est;
  est.spec = RddSpec::poly3;
  est.estimate = fit.beta(7);
  est.std_error = std::sqrt(std::max(0.0, cov(7, 7)));
  est.p_value = two_sided_p(est.estimate / est.std_error);
  est.n_effective = s.n_left + s.n_right;
  return est;
}

RddEstimate fuzzy_rdd(const Panel& panel, const OutcomeSpec& outcome,
                      const OutcomeSpec& treatment, int lag) {
  Sample s = build_sample(panel, outcome, &treatment, lag);
  if (s.n_left < 50 || s.n_right < 50)
    throw InsufficientData("fuzzy_rdd: need at least 50 observations per side");
  Eigen::MatrixXd X = poly3_design(s.margin);
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(s.outcome.data(), s.outcome.size());
  Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(s.treatment.data(), s.treatment.size());
  OlsFit fy = ols(X, y);
  OlsFit fd = ols(X, d);

  double jump_y = fy.beta(7);
  double jump_d = fd.beta(7);
  double vy = hc1_cov(X, fy, fy)(7, 7);
  double vd = hc1_cov(X, fd, fd)(7, 7);
  double cyd = hc1_cov(X, fy, fd)(7, 7);

  RddEstimate est;
  est.spec = RddSpec::poly3;
  est.estimate = jump_y / jump_d;
  double r = est.estimate;
  double var = (vy + r * r * vd - 2.0 * r * cyd) / (jump_d * jump_d);
  est.std_error = std::sqrt(std::max(0.0, var));
  est.p_value = two_sided_p(est.estimate / est.std_error);
  est.n_effective = s.n_left + s.n_right;
  est.first_stage_t = jump_d / std::sqrt(std::max(1e-300, vd));
  est.weak_first_stage = std::abs(est.first_stage_t) < 2.0;
  return est;
}

// ---------------------------------------------------------------------------
// local linear with plug-in bandwidth

namespace {

struct SideFit {
  double intercept = 0.0;
  double var_intercept = 0.0;
  long n = 0;
};

SideFit triangular_side_fit(const std::vector<double>& x, const std::vector<double>& y, bool right,
                            double h) {
  // weighted linear regression y ~ 1 + x with triangular weights
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  std::vector<std::size_t> used;
  std::vector<double> wts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    bool side = x[i] >= 0.0;
    if (side != right) continue;
    double u = std::abs(x[i]) / h;
    if (u >= 1.0) continue;
    double w = 1.0 - u;
    used.push_back(i);
    wts.push_back(w);
    s0 += w;
    s1 += w * x[i];
    s2 += w * x[i] * x[i];
    t0 += w * y[i];
    t1 += w * x[i] * y[i];
  }
  SideFit fit;
  fit.n = static_cast<long>(used.size());
  if (fit.n < 4) throw InsufficientData("local_linear_rdd: too few observations in bandwidth");
  double det = s0 * s2 - s1 * s1;
  if (std::abs(det) < 1e-300) throw SingularDesign("local_linear_rdd: degenerate side fit");
  double a = (s2 * t0 - s1 * t1) / det;
  double b = (s0 * t1 - s1 * t0) / det;
  fit.intercept = a;

  // sandwich variance of the intercept
  double m00 = 0, m01 = 0, m11 = 0;
  for (std::size_t k = 0; k < used.size(); ++k) {
    std::size_t i = used[k];
    double e = y[i] - a - b * x[i];
    double w2e2 = wts[k] * wts[k] * e * e;
    m00 += w2e2;
    m01 += w2e2 * x[i];
    m11 += w2e2 * x[i] * x[i];
  }
  // first row of (X'WX)^{-1} is (s2, -s1) / det
  double va = (s2 * s2 * m00 - 2.0 * s2 * s1 * m01 + s1 * s1 * m11) / (det * det);
  double dof = static_cast<double>(fit.n) / std::max<long>(1, fit.n - 2);
  fit.var_intercept = va * dof;
  return fit;
}

double global_cubic_third_derivative(const std::vector<double>& x, const std::vector<double>& y) {
  // cubic with an intercept shift at the cutoff, fitted between the side medians
  std::vector<double> left, right;
  for (double v : x) (v < 0 ? left : right).push_back(v);
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  if (left.empty() || right.empty())
    throw InsufficientData("ik_bandwidth: need data on both sides");
  double med_l = left[left.size() / 2];
  double med_r = right[right.size() / 2];

  std::vector<long> keep;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= med_l && x[i] <= med_r) keep.push_back(static_cast<long>(i));
  if (keep.size() < 10) throw InsufficientData("ik_bandwidth: too few interior observations");
  Eigen::MatrixXd X(keep.size(), 5);
  Eigen::VectorXd Y(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    double v = x[keep[r]];
    X(r, 0) = 1.0;
    X(r, 1) = v >= 0.0 ? 1.0 : 0.0;
    X(r, 2) = v;
    X(r, 3) = v * v;
    X(r, 4) = v * v * v;
    Y(r) = y[keep[r]];
  }
  OlsFit fit = ols(X, Y);
  return 6.0 * fit.beta(4);
}

struct QuadFit {
  double second_derivative = 0.0;
  long n = 0;
};

QuadFit side_quadratic(const std::vector<double>& x, const std::vector<double>& y, bool right,
                       double h) {
  std::vector<long> keep;
  for (std::size_t i = 0; i < x.size(); ++i) {
    bool side = x[i] >= 0.0;
    if (side != right) continue;
    if (std::abs(x[i]) > h) continue;
    keep.push_back(static_cast<long>(i));
  }
  if (keep.size() < 4) throw InsufficientData("ik_bandwidth: too few points for curvature");
  Eigen::MatrixXd X(keep.size(), 3);
  Eigen::VectorXd Y(keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    double v = x[keep[r]];
    X(r, 0) = 1.0;
    X(r, 1) = v;
    X(r, 2) = v * v;
    Y(r) = y[keep[r]];
  }
  OlsFit fit = ols(X, Y);
  QuadFit q;
  q.second_derivative = 2.0 * fit.beta(2);
  q.n = static_cast<long>(keep.size());
  return q;
}

}  // namespace

double ik_bandwidth(const std::vector<double>& running, const std::vector<double>& outcome,
                    const IkConstants& c) {
  const std::size_t n = running.size();
  if (n < 20 || outcome.size() != n)
    throw InsufficientData("ik_bandwidth: need a nontrivial sample");

  double mean = 0.0;
  for (double v : running) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : running) var += (v - mean) * (v - mean);
  var /= (n - 1);
  double sx = std::sqrt(var);

  // step 1: pilot window around the cutoff
  double h1 = c.pilot * sx * std::pow(static_cast<double>(n), -0.2);
  double sum_l = 0, sum_r = 0, ss_l = 0, ss_r = 0;
  long n_l = 0, n_r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (running[i] >= -h1 && running[i] < 0) {
      sum_l += outcome[i];
      ++n_l;
    } else if (running[i] >= 0 && running[i] <= h1) {
      sum_r += outcome[i];
      ++n_r;
    }
  }
  if (n_l < 2 || n_r < 2) throw InsufficientData("ik_bandwidth: empty pilot window");
  double mean_l = sum_l / n_l, mean_r = sum_r / n_r;
  for (std::size_t i = 0; i < n; ++i) {
    if (running[i] >= -h1 && running[i] < 0) ss_l += (outcome[i] - mean_l) * (outcome[i] - mean_l);
    if (running[i] >= 0 && running[i] <= h1) ss_r += (outcome[i] - mean_r) * (outcome[i] - mean_r);
  }
  double sigma2 = (ss_l + ss_r) / (n_l + n_r);
  double density = static_cast<double>(n_l + n_r) / (2.0 * n * h1);

  // step 2: third derivative from a global cubic, then curvature windows
  double m3 = global_cubic_third_derivative(running, outcome);
  long n_left_all = 0, n_right_all = 0;
  for (double v : running) (v < 0 ? n_left_all : n_right_all) += 1;
  double denom3 = std::max(m3 * m3, 1e-12);
  double base2 = std::pow(sigma2 / (density * denom3), 1.0 / 7.0);
  double h2_r = c.derivative * base2 * std::pow(static_cast<double>(n_right_all), -1.0 / 7.0);
  double h2_l = c.derivative * base2 * std::pow(static_cast<double>(n_left_all), -1.0 / 7.0);
  double span = *std::max_element(running.begin(), running.end()) -
                *std::min_element(running.begin(), running.end());
  h2_r = std::min(h2_r, span);
  h2_l = std::min(h2_l, span);

  QuadFit qr = side_quadratic(running, outcome, true, h2_r);
  QuadFit ql = side_quadratic(running, outcome, false, h2_l);

  // step 3: regularized curvature difference
  double reg_r = c.regularization * sigma2 / (qr.n * std::pow(h2_r, 4));
  double reg_l = c.regularization * sigma2 / (ql.n * std::pow(h2_l, 4));
  double curv = qr.second_derivative - ql.second_derivative;
  double denom = density * (curv * curv + reg_r + reg_l);
  double h =
      c.final * std::pow(2.0 * sigma2 / denom, 0.2) * std::pow(static_cast<double>(n), -0.2);
  if (!std::isfinite(h) || h <= 0.0) throw SolverError("ik_bandwidth: degenerate plug-in value");
  return h;
}

RddEstimate local_linear_rdd(const Panel& panel, const OutcomeSpec& outcome, int lag,
                             std::optional<double> bandwidth, const IkConstants& constants) {
  Sample s = build_sample(panel, outcome, nullptr, lag);
  if (s.n_left < 50 || s.n_right < 50)
    throw InsufficientData("local_linear_rdd: need at least 50 observations per side");
  double h = bandwidth ? *bandwidth : ik_bandwidth(s.margin, s.outcome, constants);

  SideFit right = triangular_side_fit(s.margin, s.outcome, true, h);
  SideFit left = triangular_side_fit(s.margin, s.outcome, false, h);

  RddEstimate est;
  est.spec = RddSpec::local_linear;
  est.bandwidth = h;
  est.estimate = right.intercept - left.intercept;
  est.std_error = std::sqrt(right.var_intercept + left.var_intercept);
  est.p_value = two_sided_p(est.estimate / est.std_error);
  est.n_effective = right.n + left.n;
  return est;
}

// ---------------------------------------------------------------------------
// neighbor aggregation

Panel neighbor_outcomes(const Panel& panel, bool exclude_shared_school) {
  std::vector<std::vector<int>> neighbors(panel.n_muni);
  for (auto [a, b] : panel.adjacency) {
    neighbors[a].push_back(b);
    neighbors[b].push_back(a);
  }
  Panel out = panel;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto& row : out.rows) {
    double tax = 0, inc = 0, home = 0;
    int used = 0;
    for (int k : neighbors[row.muni_id]) {
      const MunicipalityYear& other = panel.at(k, row.year);
      if (exclude_shared_school && other.school_district_id == row.school_district_id) continue;
      tax += other.avg_tax;
      inc += other.income_pc;
      home += other.home_value;
      ++used;
    }
    if (used == 0) {
      row.avg_tax = nan;
      row.income_pc = nan;
      row.home_value = nan;
    } else {
      row.avg_tax = tax / used;
      row.income_pc = inc / used;
      row.home_value = home / used;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV interchange

void write_panel_csv(const Panel& panel, const std::string& panel_path,
                     const std::string& adjacency_path) {
  CsvWriter rows(panel_path, {"muni_id", "year", "margin", "win", "avg_tax", "income_pc",
                              "home_value", "school_district_id"});
  for (const auto& r : panel.rows) {
    rows.cell(static_cast<long long>(r.muni_id)).cell(static_cast<long long>(r.year));
    if (r.has_margin)
      rows.cell(r.margin).cell(static_cast<long long>(r.win ? 1 : 0));
    else
      rows.cell_blank().cell_blank();
    rows.cell(r.avg_tax).cell(r.income_pc).cell(r.home_value);
    rows.cell(static_cast<long long>(r.school_district_id));
    rows.end_row();
  }
  CsvWriter adj(adjacency_path, {"muni_a", "muni_b"});
  for (auto [a, b] : panel.adjacency) {
    adj.cell(static_cast<long long>(a)).cell(static_cast<long long>(b));
    adj.end_row();
  }
}

Panel read_panel_csv(const std::string& panel_path, const std::string& adjacency_path) {
  CsvTable table = read_csv(panel_path);
  int c_muni = table.column("muni_id"), c_year = table.column("year");
  int c_margin = table.column("margin"), c_win = table.column("win");
  int c_tax = table.column("avg_tax"), c_inc = table.column("income_pc");
  int c_home = table.column("home_value"), c_school = table.column("school_district_id");

  Panel panel;
  int min_year = std::numeric_limits<int>::max(), max_year = std::numeric_limits<int>::min();
  for (const auto& r : table.rows) {
    MunicipalityYear row;
    row.muni_id = std::stoi(r[c_muni]);
    row.year = std::stoi(r[c_year]);
    if (!r[c_margin].empty()) {
      row.has_margin = true;
      row.margin = std::stod(r[c_margin]);
      row.win = std::stoi(r[c_win]) != 0;
      if (row.win != (row.margin >= 0.0))
        throw ValidationError("panel CSV: win flag inconsistent with margin");
    }
    row.avg_tax = std::stod(r[c_tax]);
    row.income_pc = std::stod(r[c_inc]);
    row.home_value = std::stod(r[c_home]);
    if (!(row.avg_tax > 0.0 && row.income_pc > 0.0 && row.home_value > 0.0))
      throw ValidationError("panel CSV: outcome fields must be positive");
    row.school_district_id = std::stoi(r[c_school]);
    panel.rows.push_back(row);
    panel.n_muni = std::max(panel.n_muni, row.muni_id + 1);
    min_year = std::min(min_year, row.year);
    max_year = std::max(max_year, row.year);
  }
  panel.first_year = min_year;
  panel.years = max_year - min_year + 1;
  std::sort(panel.rows.begin(), panel.rows.end(),
            [](const MunicipalityYear& a, const MunicipalityYear& b) {
              if (a.muni_id != b.muni_id) return a.muni_id < b.muni_id;
              return a.year < b.year;
            });
  if (panel.rows.size() != static_cast<std::size_t>(panel.n_muni) * panel.years)
    throw ValidationError("panel CSV: panel must be balanced");

  CsvTable adj = read_csv(adjacency_path);
  int c_a = adj.column("muni_a"), c_b = adj.column("muni_b");
  for (const auto& r : adj.rows) {
    int a = std::stoi(r[c_a]), b = std::stoi(r[c_b]);
    if (a == b) throw ValidationError("adjacency CSV: self loops not allowed");
    panel.adjacency.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(panel.adjacency.begin(), panel.adjacency.end());
  panel.adjacency.erase(std::unique(panel.adjacency.begin(), panel.adjacency.end()),
                        panel.adjacency.end());
  return panel;
}

}  // namespace ftb
