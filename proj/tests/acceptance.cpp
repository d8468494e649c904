// Acceptance suite: one pass/fail line per criterion, exit 0 only if all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ftb/config.hpp"
#include "ftb/parallel.hpp"
#include "ftb/policy.hpp"
#include "ftb/rng.hpp"
#include "oracles.hpp"
#include "scenarios.hpp"

using namespace ftb;
using namespace ftb::scenarios;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli = FTB_CLI_PATH;
std::string g_configs = FTB_CONFIG_DIR;
int g_passed = 0, g_failed = 0;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

template <typename Fn>
void criterion(int id, const std::string& name, double time_budget_s, Fn&& body) {
  Outcome out;
  auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.note(std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (time_budget_s > 0 && secs > time_budget_s) {
    out.pass = false;
    out.note("over time budget");
  }
  std::printf("[%2d/10] %s  %s (%.1fs)%s%s\n", id, out.pass ? "PASS" : "FAIL", name.c_str(),
              secs, out.detail.empty() ? "" : " -- ", out.detail.c_str());
  std::fflush(stdout);
  (out.pass ? g_passed : g_failed) += 1;
}

struct NamedScenario {
  std::string name;
  Economy econ;
  std::vector<double> profile;
};

std::vector<NamedScenario> market_scenarios() {
  std::vector<NamedScenario> list;
  list.push_back({"two-district owner", default_two_district(), {1.0, 0.6}});
  list.push_back({"two-district mixed", default_two_district(0.3, 0.6), {1.0, 0.6}});
  list.push_back({"three-district owner", three_district(), {1.2, 0.9, 0.5}});
  list.push_back({"four-district renter mix", four_district(0.4), {1.3, 1.0, 0.7, 0.4}});
  list.push_back({"symmetric half-rented", symmetric_two_district(0.5), {0.8, 0.8}});
  return list;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool dirs_identical(const fs::path& a, const fs::path& b) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const auto& n : names)
    if (!fs::exists(b / n) || slurp(a / n) != slurp(b / n)) return false;
  return true;
}

int run_cli(const std::string& args) {
  std::string cmd = g_cli + " " + args + " > /dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli = argv[1];
  if (argc > 2) g_configs = argv[2];

  // 1. continuous equilibrium vs brute-force discrete economy
  criterion(1, "oracle equivalence (discrete brute force)", 10.0, [](Outcome& out) {
    Economy econ = uniform_two_district();
    auto e = uniform_profile_with_gap(econ, 0.2);
    Allocation alloc = assign_locations(econ, e);
    MoneyValueSolution mvs = money_values(econ, alloc, e);

    out.require(std::abs(alloc.cutoff_low() - 0.1) <= 1e-9, "low cutoff != 0.1");
    out.require(std::abs(alloc.cutoff_high() - 0.9) <= 1e-9, "high cutoff != 0.9");

    auto eq = oracle::discrete_equilibrium(econ, e, 200);
    out.require(std::abs(eq.district_min_type(0) - alloc.cutoff_low()) <= eq.grid_cell,
                "low cutoff off the discrete economy");
    out.require(std::abs(eq.district_max_type(1) - alloc.cutoff_high()) <= eq.grid_cell,
                "high cutoff off the discrete economy");
    double worst = 0.0;
    for (const auto& h : eq.homes) {
      double m_cont = mvs.pdv_at_quality(h.district, h.quality);
      worst = std::max(worst, std::abs(h.pdv - m_cont) / std::max(1.0, std::abs(m_cont)));
    }
    out.require(worst <= 1e-3, "pdv mismatch " + std::to_string(worst));
    out.note("max pdv error " + std::to_string(worst));
  });

  // 2. market clearing and monotone location quality
  criterion(2, "market clearing and monotonicity (5 scenarios)", 5.0, [](Outcome& out) {
    for (const auto& sc : market_scenarios()) {
      Allocation alloc = assign_locations(sc.econ, sc.profile);
      double w_lo = alloc.type_lo(), w_hi = alloc.type_hi();
      double prev = -1e300, worst = 0.0;
      bool monotone = true;
      for (int i = 0; i <= 1000; ++i) {
        double w = w_lo + (w_hi - w_lo) * i / 1000.0;
        double total = 0.0;
        for (int j = 0; j < alloc.n_districts(); ++j) total += alloc.arrivals(j, w);
        worst = std::max(worst, std::abs(total - sc.econ.income.cdf(w)));
        double ell = alloc.location_quality(w);
        monotone = monotone && ell >= prev - 1e-12;
        prev = ell;
      }
      out.require(worst <= 1e-9, sc.name + ": clearing error " + std::to_string(worst));
      out.require(monotone, sc.name + ": location quality not monotone");
    }
  });

  // 3. incentive-compatibility audit
  criterion(3, "incentive compatibility (1e4 deviations/scenario)", 60.0, [](Outcome& out) {
    double worst = -1e300;
    for (const auto& sc : market_scenarios()) {
      Allocation alloc = assign_locations(sc.econ, sc.profile);
      MoneyValueSolution mvs = money_values(sc.econ, alloc, sc.profile);
      auto rep = ic_audit(sc.econ, alloc, mvs, 10000, 20260810);
      worst = std::max(worst, rep.max_violation);
      out.require(rep.max_violation <= 1e-6,
                  sc.name + ": violation " + std::to_string(rep.max_violation));
    }
    out.note("max violation " + std::to_string(worst));
  });

  // 4. gap invariance and the stationary price dividend factor
  criterion(4, "gap invariance and price level shift", 30.0, [](Outcome& out) {
    Economy econ = default_two_district();
    std::vector<double> e1{1.0, 0.6};
    const double shift = 0.15;
    std::vector<double> e2{
        econ.expenditure_for_quality(0, econ.school_quality(0, e1[0]) + shift),
        econ.expenditure_for_quality(1, econ.school_quality(1, e1[1]) + shift)};
    Allocation a1 = assign_locations(econ, e1);
    Allocation a2 = assign_locations(econ, e2);
    MoneyValueSolution m1 = money_values(econ, a1, e1);
    MoneyValueSolution m2 = money_values(econ, a2, e2);
    double worst_alloc = 0.0, worst_value = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      double w = 5.0 + 10.0 * i / 1000.0;
      for (int j = 0; j < 2; ++j)
        worst_alloc = std::max(worst_alloc, std::abs(a1.arrivals(j, w) - a2.arrivals(j, w)));
      worst_value = std::max(worst_value, std::abs(m1.money_value(w) - m2.money_value(w)));
    }
    out.require(worst_alloc <= 1e-9, "allocation differs " + std::to_string(worst_alloc));
    out.require(worst_value <= 1e-9, "money value differs " + std::to_string(worst_value));

    const double eps = 0.01;
    double factor = (1.0 + econ.rate) / econ.rate;
    for (double tax : {0.3, 1.0}) {
      for (double m : {-2.0, -4.5}) {
        double dp = steady_state_price(tax + eps, m, econ.rate) -
                    steady_state_price(tax, m, econ.rate);
        out.require(std::abs(dp + factor * eps) <= 1e-6, "price shift off the dividend factor");
      }
    }
  });

  // 5. comparative statics case structure
  criterion(5, "comparative statics sign patterns", 60.0, [](Outcome& out) {
    std::vector<double> steps{0.08, 0.16, 0.24, 0.32, 0.4};
    struct Setup {
      std::string name;
      Economy econ;
      int raiser;
      std::vector<double> base;
    };
    std::vector<Setup> setups;
    setups.push_back({"two-district overlap, top raiser", default_two_district(), 0, {1.0, 0.8}});
    setups.push_back({"two-district overlap, bottom raiser", default_two_district(), 1, {2.0, 0.3}});
    setups.push_back({"two-district dominance", default_two_district(), 0, {40.0, 0.2}});
    setups.push_back({"four-district, top raiser", four_district(), 0, {1.0, 0.8, 0.6, 0.4}});
    setups.push_back({"four-district, bottom raiser", four_district(), 3, {1.0, 0.8, 0.6, 0.4}});
    bool saw_dominance = false;
    for (const auto& s : setups) {
      auto rep = comparative_statics_audit(s.econ, s.raiser, s.base, steps);
      out.require(rep.all_hold, s.name + ": predicted sign pattern failed");
      for (const auto& st : rep.steps)
        saw_dominance = saw_dominance || st.kind == CompStatCase::raiser_dominates;
    }
    out.require(saw_dominance, "no quality-dominance case exercised");
  });

  // 6. equilibrium over-taxation and the renter reversal
  criterion(6, "over-taxation vs fixed-gap benchmark", 180.0, [](Outcome& out) {
    Economy econ = default_two_district();
    auto sol = nash_equilibrium(econ);
    for (int j = 0; j < 2; ++j) {
      double tilde = fixed_gap_best_response(econ, j, sol.context);
      double margin = sol.expenditure[j] - tilde;
      out.require(margin > 1e-4, "district margin not positive");
      out.note(econ.districts[j].id + " margin " + std::to_string(margin));
    }
    Economy renter = all_renter_two_district();
    auto rsol = nash_equilibrium(renter, [] {
      GameOptions o;
      o.initial = {0.3, 0.3};
      return o;
    }());
    for (int j = 0; j < 2; ++j) {
      double tilde = fixed_gap_best_response(renter, j, rsol.context);
      out.require(tilde > rsol.expenditure[j] + 1e-4, "renter reversal failed");
    }
  });

  // 7. pareto-improving caps on the three-district scenario
  criterion(7, "pareto caps with monotone gains", 300.0, [](Outcome& out) {
    Economy econ = three_district();
    auto base = nash_equilibrium(econ);
    auto rep = find_pareto_caps(econ, {0, 1}, base, {}, 8);
    out.require(rep.found, "no improving cap found");
    out.require(rep.pareto, "not pareto");
    out.require(rep.objective_delta[0].delta() > 1e-9, "capped district A not strictly better");
    out.require(rep.objective_delta[1].delta() > 1e-9, "capped district B not strictly better");
    out.require(rep.objective_delta[2].delta() >= -1e-9, "uncapped district harmed");
    // deeper common reductions keep helping the capped districts
    for (int j = 0; j < 2; ++j)
      for (std::size_t k = 1; k < rep.sweep.size(); ++k)
        out.require(rep.sweep[k].delta[j] >= rep.sweep[k - 1].delta[j] - 1e-7,
                    "gain not monotone in the reduction");
    out.note("chosen reduction " + std::to_string(rep.chosen_reduction));
  });

  // 8. homogeneous-home negative control
  criterion(8, "homogeneous homes: insulation and no improving cap", 180.0, [](Outcome& out) {
    Economy econ = homogeneous_two_district();
    econ.districts[0].school_scale = 1.6;

    std::vector<double> e1{2.0, 0.5}, e2{3.0, 0.5};
    Allocation a1 = assign_locations(econ, e1);
    Allocation a2 = assign_locations(econ, e2);
    MoneyValueSolution m1 = money_values(econ, a1, e1);
    MoneyValueSolution m2 = money_values(econ, a2, e2);
    double drift = std::abs(m1.pdv_at_quality(1, 0.5) - m2.pdv_at_quality(1, 0.5));
    out.require(drift <= 1e-9, "dominated district's pdv moved " + std::to_string(drift));

    GameOptions opt;
    opt.initial = {1.0, 0.5};
    opt.tol = 2e-5;
    auto base = nash_equilibrium(econ, opt);
    auto rep = find_pareto_caps(econ, {0, 1}, base, opt, 6);
    out.require(!rep.found, "expected no improving cap");
  });

  // 9. planted-effect recovery and estimator calibration
  criterion(9, "rdd recovery, null size, estimator agreement", 300.0, [](Outcome& out) {
    const int reps = 200;
    PanelParams planted;  // defaults: levy jump 0.05, home-value effect 2.0
    planted.loss_underreport = 0.5;

    std::vector<int> sharp_cover(reps, 0), fuzzy_cover(reps, 0);
    parallel_for(reps, [&](std::size_t r) {
      Panel panel = generate_panel(planted, derive_seed(901, r));
      auto sharp = sharp_rdd_poly(panel, {"avg_tax", Transform::log_change}, 1);
      sharp_cover[r] =
          std::abs(sharp.estimate - planted.levy_jump) <= 1.96 * sharp.std_error ? 1 : 0;
      auto fuzzy = fuzzy_rdd(panel, {"home_value", Transform::log_change},
                             {"avg_tax", Transform::log_change}, 1);
      fuzzy_cover[r] =
          std::abs(fuzzy.estimate - planted.home_value_effect) <= 1.96 * fuzzy.std_error ? 1 : 0;
    });
    int sc = 0, fc = 0;
    for (int r = 0; r < reps; ++r) {
      sc += sharp_cover[r];
      fc += fuzzy_cover[r];
    }
    out.require(sc >= 180, "sharp coverage " + std::to_string(sc) + "/200");
    out.require(fc >= 180, "fuzzy coverage " + std::to_string(fc) + "/200");
    out.note("coverage sharp " + std::to_string(sc) + "/200, fuzzy " + std::to_string(fc) +
             "/200");

    PanelParams null_dgp = planted;
    null_dgp.levy_jump = 0.0;
    null_dgp.home_value_effect = 0.0;
    std::vector<int> reject(reps, 0);
    parallel_for(reps, [&](std::size_t r) {
      Panel panel = generate_panel(null_dgp, derive_seed(902, r));
      auto est = sharp_rdd_poly(panel, {"avg_tax", Transform::log_change}, 1);
      reject[r] = est.p_value < 0.05 ? 1 : 0;
    });
    int rj = 0;
    for (int r = 0; r < reps; ++r) rj += reject[r];
    out.require(rj <= 14, "null rejections " + std::to_string(rj) + "/200");
    out.note("null rejections " + std::to_string(rj) + "/200");

    for (int r = 0; r < 10; ++r) {
      Panel panel = generate_panel(planted, derive_seed(903, r));
      OutcomeSpec levy{"avg_tax", Transform::log_change};
      auto poly = sharp_rdd_poly(panel, levy, 1);
      auto ll = local_linear_rdd(panel, levy, 1);
      double joint =
          std::sqrt(poly.std_error * poly.std_error + ll.std_error * ll.std_error);
      out.require(std::abs(poly.estimate - ll.estimate) <= 2.0 * joint,
                  "estimators disagree on replication " + std::to_string(r));
    }
  });

  // 10. command-level determinism
  criterion(10, "cli determinism across reruns and thread counts", 300.0, [](Outcome& out) {
    fs::path root = fs::temp_directory_path() / "ftb_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    auto dir = [&](const std::string& n) {
      fs::path p = root / n;
      fs::create_directories(p);
      return p.string();
    };
    std::string cfg = g_configs + "/default.cfg";
    out.require(run_cli("equilibrium --config " + cfg + " --out " + dir("a") +
                        " --threads 1") == 0,
                "equilibrium run failed");
    out.require(run_cli("equilibrium --config " + cfg + " --out " + dir("b") +
                        " --threads 1") == 0,
                "equilibrium rerun failed");
    out.require(run_cli("equilibrium --config " + cfg + " --out " + dir("c") +
                        " --threads 4") == 0,
                "equilibrium threaded run failed");
    out.require(dirs_identical(root / "a", root / "b"), "rerun differs");
    out.require(dirs_identical(root / "a", root / "c"), "thread count changed outputs");

    std::string rcfg = g_configs + "/rdd.cfg";
    out.require(run_cli("rdd simulate --config " + rcfg + " --out " + dir("ra")) == 0,
                "simulate failed");
    out.require(run_cli("rdd simulate --config " + rcfg + " --out " + dir("rb")) == 0,
                "simulate rerun failed");
    out.require(dirs_identical(root / "ra", root / "rb"), "panel rerun differs");
    out.require(run_cli("rdd estimate --config " + rcfg + " --out " + dir("ea") + " --panel " +
                        (root / "ra" / "panel.csv").string() + " --threads 1") == 0,
                "estimate failed");
    out.require(run_cli("rdd estimate --config " + rcfg + " --out " + dir("eb") + " --panel " +
                        (root / "ra" / "panel.csv").string() + " --threads 4") == 0,
                "estimate rerun failed");
    out.require(dirs_identical(root / "ea", root / "eb"), "estimate outputs differ");
  });

  std::printf("ACCEPTANCE: %d/10 passed\n", g_passed);
  return g_failed == 0 ? 0 : 1;
}
