#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ftb/rdd.hpp"
#include "ftb/rng.hpp"

using namespace ftb;

namespace {

PanelParams quick_params() {
  PanelParams p;
  p.n_muni = 400;
  p.years = 16;
  return p;
}

// independent plug-in bandwidth implementation for the dual check: plain
// arithmetic and a small Gaussian-elimination solver, no shared code path
namespace ik_oracle {

std::vector<double> solve_normal_equations(std::vector<std::vector<double>> A,
                                           std::vector<double> b) {
  const int k = static_cast<int>(b.size());
  for (int col = 0; col < k; ++col) {
    int piv = col;
    for (int r = col + 1; r < k; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    std::swap(b[col], b[piv]);
    for (int r = col + 1; r < k; ++r) {
      double f = A[r][col] / A[col][col];
      for (int c2 = col; c2 < k; ++c2) A[r][c2] -= f * A[col][c2];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(k);
  for (int r = k - 1; r >= 0; --r) {
    double s = b[r];
    for (int c2 = r + 1; c2 < k; ++c2) s -= A[r][c2] * x[c2];
    x[r] = s / A[r][r];
  }
  return x;
}

std::vector<double> fit(const std::vector<std::vector<double>>& rows,
                        const std::vector<double>& y) {
  const int k = static_cast<int>(rows[0].size());
  std::vector<std::vector<double>> xtx(k, std::vector<double>(k, 0.0));
  std::vector<double> xty(k, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int a = 0; a < k; ++a) {
      xty[a] += rows[i][a] * y[i];
      for (int b = 0; b < k; ++b) xtx[a][b] += rows[i][a] * rows[i][b];
    }
  }
  return solve_normal_equations(xtx, xty);
}

double bandwidth(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mean = 0;
  for (double v : x) mean += v;
  mean /= n;
  double
      sx = 0;
  for (double v : x) sx += (v - mean) * (v - mean);
  sx = std::sqrt(sx / (n - 1));

  double h1 = 1.84 * sx * std::pow(n, -0.2);
  std::vector<double> yl, yr;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] >= -h1 && x[i] < 0) yl.push_back(y[i]);
    if (x[i] >= 0 && x[i] <= h1) yr.push_back(y[i]);
  }
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0;
    for (double u : v) s += u;
    return s / v.size();
  };
  double ml = mean_of(yl), mr = mean_of(yr);
  double ss = 0;
  for (double u : yl) ss += (u - ml) * (u - ml);
  for (double u : yr) ss += (u - mr) * (u - mr);
  double sigma2 = ss / (yl.size() + yr.size());
  double fhat = (yl.size() + yr.size()) / (2.0 * n * h1);

  // global cubic between side medians
  std::vector<double> xl, xr;
  for (double v : x) (v < 0 ? xl : xr).push_back(v);
  std::sort(xl.begin(), xl.end());
  std::sort(xr.begin(), xr.end());
  double med_l = xl[xl.size() / 2], med_r = xr[xr.size() / 2];
  std::vector<std::vector<double>> rows;
  std::vector<double> ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < med_l || x[i] > med_r) continue;
    double v = x[i];
    rows.push_back({1.0, v >= 0 ? 1.0 : 0.0, v, v * v, v * v * v});
    ys.push_back(y[i]);
  }
  double m3 = 6.0 * fit(rows, ys)[4];
  double n_left = xl.size(), n_right = xr.size();
  double denom3 = std::max(m3 * m3, 1e-12);
  double base = std::pow(sigma2 / (fhat * denom3), 1.0 / 7.0);
  double span = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
  double h2r = std::min(3.56 * base * std::pow(n_right, -1.0 / 7.0), span);
  double h2l = std::min(3.56 * base * std::pow(n_left, -1.0 / 7.0), span);

  auto curvature = [&](bool right_side, double h2) {
    std::vector<std::vector<double>> rr;
    std::vector<double> yy;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if ((x[i] >= 0) != right_side || std::abs(x[i]) > h2) continue;
      rr.push_back({1.0, x[i], x[i] * x[i]});
      yy.push_back(y[i]);
    }
    return std::pair<double, double>(2.0 * fit(rr, yy)[2], static_cast<double>(rr.size()));
  };
  auto [m2r, nr2] = curvature(true, h2r);
  auto [m2l, nl2] = curvature(false, h2l);
  double rr = 2160.0 * sigma2 / (nr2 * std::pow(h2r, 4));
  double rl = 2160.0 * sigma2 / (nl2 * std::pow(h2l, 4));
  double diff = m2r - m2l;
  return 3.4375 * std::pow(2.0 * sigma2 / (fhat * (diff * diff + rr + rl)), 0.2) *
         std::pow(n, -0.2);
}

}  // namespace ik_oracle

// hand-built panel: one municipality-year per row, outcomes in levels at lag 0
Panel linear_jump_panel(int per_side, double slope, double jump) {
  Panel panel;
  panel.n_muni = 2 * per_side;
  panel.years = 1;
  panel.first_year = 2000;
  for (int i = 0; i < 2 * per_side; ++i) {
    MunicipalityYear row;
    row.muni_id = i;
    row.year = 2000;
    row.has_margin = true;
    row.margin = -0.45 + 0.9 * (i + 0.5) / (2 * per_side);
    row.win = row.margin >= 0.0;
    row.avg_tax = 5.0 + slope * row.margin + (row.win ? jump : 0.0);
    row.income_pc = 1.0;
    row.home_value = 1.0;
    panel.rows.push_back(row);
  }
  return panel;
}

}  // namespace

TEST_SUITE("rdd") {
  TEST_CASE("fixed seed reproduces the panel exactly") {
    PanelParams p = quick_params();
    Panel a = generate_panel(p, 77);
    Panel b = generate_panel(p, 77);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].avg_tax == b.rows[i].avg_tax);
      CHECK(a.rows[i].margin == b.rows[i].margin);
      CHECK(a.rows[i].has_margin == b.rows[i].has_margin);
    }
    CHECK(a.adjacency == b.adjacency);
  }

  TEST_CASE("parameter validation") {
    PanelParams p = quick_params();
    p.referendum_propensity = 1.4;
    CHECK_THROWS_AS(generate_panel(p, 1), InvalidParams);
    p = quick_params();
    p.margin_beta_a = -1.0;
    CHECK_THROWS_AS(generate_panel(p, 1), InvalidParams);
  }

  TEST_CASE("null generating process shows no discontinuity") {
    PanelParams p = quick_params();
    p.levy_jump = 0.0;
    p.home_value_effect = 0.0;
    p.neighbor_spillover = 0.0;
    Panel panel = generate_panel(p, 20260810);
    auto est = sharp_rdd_poly(panel, {"avg_tax", Transform::log_change}, 1);
    CHECK(std::abs(est.estimate) < 3.0 * est.std_error);
  }

  TEST_CASE("planted levy jump is recovered") {
    PanelParams p = quick_params();
    Panel panel = generate_panel(p, 4242);
    auto est = sharp_rdd_poly(panel, {"avg_tax", Transform::log_change}, 1);
    CHECK(std::abs(est.estimate - p.levy_jump) < 3.0 * est.std_error);
    CHECK(est.n_effective > 1000);
    CHECK(est.p_value < 0.01);
  }

  TEST_CASE("cumulative effects grow with the horizon") {
    PanelParams p = quick_params();
    p.years = 20;
    p.cumulative_levy_effect = true;
    Panel panel = generate_panel(p, 99);
    double prev = 0.0;
    for (int lag : {1, 4, 8}) {
      auto est = sharp_rdd_poly(panel, {"avg_tax", Transform::log_change}, lag);
      CHECK(est.estimate > prev);
      prev = est.estimate;
    }
  }

  TEST_CASE("self-instrumenting fuzzy design returns one") {
    PanelParams p = quick_params();
    Panel panel = generate_panel(p, 5);
    OutcomeSpec levy{"avg_tax", Transform::log_change};
    auto est = fuzzy_rdd(panel, levy, levy, 1);
    CHECK(est.estimate == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("fuzzy design recovers the home-value response") {
    PanelParams p = quick_params();
    Panel panel = generate_panel(p, 31);
    auto est = fuzzy_rdd(panel, {"home_value", Transform::log_change},
                         {"avg_tax", Transform::log_change}, 1);
    CHECK(std::abs(est.estimate - p.home_value_effect) < 3.0 * est.std_error);
    CHECK_FALSE(est.weak_first_stage);
  }

  TEST_CASE("fuzzy estimate equals the ratio of sharp discontinuities") {
    PanelParams p = quick_params();
    Panel panel = generate_panel(p, 8);
    OutcomeSpec y{"home_value", Transform::log_change};
    OutcomeSpec d{"avg_tax", Transform::log_change};
    auto f = fuzzy_rdd(panel, y, d, 1);
    auto sy = sharp_rdd_poly(panel, y, 1);
    auto sd = sharp_rdd_poly(panel, d, 1);
    CHECK(std::abs(f.estimate - sy.estimate / sd.estimate) <= 1e-10);
  }

  TEST_CASE("noiseless linear outcome gives the exact jump at any bandwidth") {
    Panel panel = linear_jump_panel(200, 0.5, 0.1);
    for (double h : {0.1, 0.25, 0.4}) {
      auto est = local_linear_rdd(panel, {"avg_tax", Transform::level}, 0, h);
      CHECK(est.estimate == doctest::Approx(0.1).epsilon(1e-10));
    }
  }

  TEST_CASE("plug-in bandwidth matches an independent reimplementation") {
    Rng rng(314159);
    std::vector<double> x, y;
    for (int i = 0; i < 4000; ++i) {
      double m = rng.beta(2.0, 2.0) - 0.5;
      double noise = rng.normal(0.0, 0.05);
      double jump = m >= 0 ? 0.04 : 0.0;
      x.push_back(m);
      y.push_back(0.3 * m + 0.8 * m * m + jump + noise);
    }
    double mine = ik_bandwidth(x, y);
    double theirs = ik_oracle::bandwidth(x, y);
    CHECK(std::abs(mine - theirs) <= 1e-6 * theirs);
    CHECK(mine > 0.01);
    CHECK(mine < 0.5);
  }

  TEST_CASE("local linear and polynomial specifications agree") {
    PanelParams p = quick_params();
    Panel panel = generate_panel(p, 2718);
    OutcomeSpec levy{"avg_tax", Transform::log_change};
    auto poly = sharp_rdd_poly(panel, levy, 1);
    auto ll = local_linear_rdd(panel, levy, 1);
    double joint = std::sqrt(poly.std_error * poly.std_error + ll.std_error * ll.std_error);
    CHECK(std::abs(poly.estimate - ll.estimate) <= 2.0 * joint);
    CHECK(ll.bandwidth > 0.0);
  }

  TEST_CASE("neighbor averages against a five-node hand graph") {
    Panel panel;
    panel.n_muni = 5;
    panel.years = 1;
    panel.first_year = 2001;
    for (int i = 0; i < 5; ++i) {
      MunicipalityYear row;
      row.muni_id = i;
      row.year = 2001;
      row.avg_tax = 100.0 * (i + 1);
      row.income_pc = 10.0 * (i + 1);
      row.home_value = 1000.0 * (i + 1);
      row.school_district_id = i / 2;  // {0,0,1,1,2}
      panel.rows.push_back(row);
    }
    panel.adjacency = {{0, 1}, {0, 2}, {2, 3}, {3, 4}};

    Panel all = neighbor_outcomes(panel, false);
    CHECK(all.at(0, 2001).avg_tax == doctest::Approx((200.0 + 300.0) / 2));
    CHECK(all.at(2, 2001).avg_tax == doctest::Approx((100.0 + 400.0) / 2));
    CHECK(all.at(4, 2001).avg_tax == doctest::Approx(400.0));

    Panel excl = neighbor_outcomes(panel, true);
    // 0 and 1 share a school district, so each other's values drop out
    CHECK(excl.at(0, 2001).avg_tax == doctest::Approx(300.0));
    CHECK(excl.at(2, 2001).avg_tax == doctest::Approx(100.0));
    CHECK(excl.at(4, 2001).avg_tax == doctest::Approx(400.0));
    // 1's only neighbor shares its district: no usable outcome remains
    CHECK(std::isnan(excl.at(1, 2001).avg_tax));
  }

  TEST_CASE("levy spillovers to neighbors are detected") {
    PanelParams p = quick_params();
    p.neighbor_spillover = 0.02;
    Panel panel = generate_panel(p, 606);
    Panel nbr = neighbor_outcomes(panel, true);
    auto est = sharp_rdd_poly(nbr, {"avg_tax", Transform::log_change}, 1);
    CHECK(est.estimate > 0.0);
    CHECK(est.estimate / est.std_error > 3.0);
  }

  TEST_CASE("random loss underreporting leaves estimates unbiased") {
    PanelParams p = quick_params();
    p.loss_underreport = 0.6;
    Panel panel = generate_panel(p, 11);
    auto est = sharp_rdd_poly(panel, {"avg_tax", Transform::log_change}, 1);
    CHECK(std::abs(est.estimate - p.levy_jump) < 3.0 * est.std_error);

    // negative control: dropping losses by outcome biases the estimate up
    PanelParams p2 = quick_params();
    p2.loss_underreport = 0.0;
    Panel full = generate_panel(p2, 11);
    Panel censored = full;
    std::vector<double> growths;
    for (const auto& row : full.rows) {
      if (!row.has_margin || row.win) continue;
      if (row.year + 1 > full.first_year + full.years - 1) continue;
      growths.push_back(std::log(full.at(row.muni_id, row.year + 1).avg_tax / row.avg_tax));
    }
    std::nth_element(growths.begin(), growths.begin() + growths.size() / 2, growths.end());
    double cut = growths[growths.size() / 2];
    for (auto& row : censored.rows) {
      if (!row.has_margin || row.win) continue;
      if (row.year + 1 > full.first_year + full.years - 1) continue;
      double g = std::log(full.at(row.muni_id, row.year + 1).avg_tax / row.avg_tax);
      if (g > cut) row.has_margin = false;
    }
    auto biased = sharp_rdd_poly(censored, {"avg_tax", Transform::log_change}, 1);
    CHECK(std::abs(biased.estimate - p2.levy_jump) > 3.0 * biased.std_error);
  }

  TEST_CASE("multi-referendum years aggregate by mean margin or drop out") {
    PanelParams p = quick_params();
    p.multi_referendum_share = 1.0;  // always two votes
    p.loss_underreport = 0.0;
    Panel panel = generate_panel(p, 404);
    long held = 0, usable = 0;
    for (const auto& row : panel.rows) {
      if (row.has_margin) {
        ++usable;
        CHECK(row.win == (row.margin >= 0.0));
        CHECK(row.margin >= -0.5);
        CHECK(row.margin <= 0.5);
      }
    }
    held = static_cast<long>(panel.rows.size());
    // symmetric margins: both-wins or both-losses each happen 1/4 of the time,
    // so half the referendum years keep a usable margin
    double expected = p.referendum_propensity * 0.5;
    double frac = static_cast<double>(usable) / held;
    CHECK(frac == doctest::Approx(expected).epsilon(0.08));
  }

  TEST_CASE("panel CSV round trip") {
    PanelParams p = quick_params();
    p.n_muni = 60;
    p.years = 6;
    Panel panel = generate_panel(p, 9);
    write_panel_csv(panel, "/tmp/ftb_test_panel.csv", "/tmp/ftb_test_adj.csv");
    Panel back = read_panel_csv("/tmp/ftb_test_panel.csv", "/tmp/ftb_test_adj.csv");
    REQUIRE(back.rows.size() == panel.rows.size());
    CHECK(back.adjacency == panel.adjacency);
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
      CHECK(back.rows[i].muni_id == panel.rows[i].muni_id);
      CHECK(back.rows[i].year == panel.rows[i].year);
      CHECK(back.rows[i].has_margin == panel.rows[i].has_margin);
      if (panel.rows[i].has_margin)
        CHECK(back.rows[i].margin == doctest::Approx(panel.rows[i].margin).epsilon(1e-15));
      CHECK(back.rows[i].avg_tax == doctest::Approx(panel.rows[i].avg_tax).epsilon(1e-15));
    }
  }
}
