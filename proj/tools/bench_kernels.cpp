// Benchmark comparing the serial reference path against the OpenMP path for
// the sweep-level kernels. Results must be identical; only time may differ.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "ftb/market.hpp"
#include "ftb/parallel.hpp"
#include "ftb/rdd.hpp"
#include "ftb/rng.hpp"

using namespace ftb;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Economy bench_economy() {
  Economy econ;
  District a, b;
  a.id = "A";
  a.housing = Distribution::uniform(0.3, 1.0, 0.5);
  b.id = "B";
  b.housing = Distribution::uniform(0.0, 0.7, 0.5);
  econ.districts = {a, b};
  econ.income = Distribution::uniform(5.0, 15.0);
  econ.utility = {UtilityKind::log_utility, 0.0};
  econ.rate = 0.05;
  econ.school = {SchoolTech::Kind::log1p, 0.3, 0.5};
  econ.school_weight = 0.08;
  econ.outside_money_value = money_value_of_pdv(5.0, -3.0, econ.rate, econ.utility);
  return econ;
}

struct Row {
  const char* name;
  double serial_s;
  double parallel_s;
  bool identical;
};

Row bench_ic_audit() {
  Economy econ = bench_economy();
  std::vector<double> e{1.0, 0.6};
  Allocation alloc = assign_locations(econ, e);
  MoneyValueSolution mvs = money_values(econ, alloc, e);
  const std::size_t samples = 200000;

  default_exec_mode() = ExecMode::serial;
  auto t0 = Clock::now();
  auto serial = ic_audit(econ, alloc, mvs, samples, 42);
  double ts = seconds_since(t0);

  default_exec_mode() = ExecMode::openmp;
  t0 = Clock::now();
  auto parallel = ic_audit(econ, alloc, mvs, samples, 42);
  double tp = seconds_since(t0);

  return {"ic_audit (2e5 deviations)", ts, tp, serial.max_violation == parallel.max_violation};
}

Row bench_mc_replications() {
  PanelParams params;
  params.n_muni = 300;
  params.years = 18;
  const int reps = 48;

  auto run = [&](ExecMode mode) {
    default_exec_mode() = mode;
    std::vector<double> est(reps);
    parallel_for(reps, [&](std::size_t r) {
      Panel panel = generate_panel(params, derive_seed(7, r));
      est[r] = sharp_rdd_poly(panel, {"avg_tax", Transform::log_change}, 1).estimate;
    });
    return est;
  };

  auto t0 = Clock::now();
  auto serial = run(ExecMode::serial);
  double ts = seconds_since(t0);
  t0 = Clock::now();
  auto parallel = run(ExecMode::openmp);
  double tp = seconds_since(t0);
  return {"monte carlo replications (48)", ts, tp, serial == parallel};
}

Row bench_profile_sweep() {
  Economy econ = bench_economy();
  const int points = 24;

  auto run = [&](ExecMode mode) {
    default_exec_mode() = mode;
    std::vector<double> out(points);
    parallel_for(points, [&](std::size_t i) {
      std::vector<double> e{0.4 + 0.05 * static_cast<double>(i), 0.6};
      Allocation alloc = assign_locations(econ, e);
      MoneyValueSolution mvs = money_values(econ, alloc, e);
      out[i] = mvs.pdv_at_type(10.0);
    });
    return out;
  };

  auto t0 = Clock::now();
  auto serial = run(ExecMode::serial);
  double ts = seconds_since(t0);
  t0 = Clock::now();
  auto parallel = run(ExecMode::openmp);
  double tp = seconds_since(t0);
  return {"expenditure sweep (24 solves)", ts, tp, serial == parallel};
}

}  // namespace

int main() {
  std::printf("%-34s %10s %10s %9s %10s\n", "kernel", "serial s", "openmp s", "speedup",
              "identical");
  for (Row row : {bench_ic_audit(), bench_mc_replications(), bench_profile_sweep()}) {
    std::printf("%-34s %10.3f %10.3f %8.2fx %10s\n", row.name, row.serial_s, row.parallel_s,
                row.serial_s / row.parallel_s, row.identical ? "yes" : "NO");
  }
  default_exec_mode() = ExecMode::openmp;
  return 0;
}
