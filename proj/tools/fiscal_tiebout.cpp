#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftb/config.hpp"
#include "ftb/outputs.hpp"
#include "ftb/parallel.hpp"
#include "ftb/policy.hpp"
#include "ftb/rng.hpp"

using namespace ftb;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "scenario configuration file")->required();
  cmd->add_option("--out", args.out_dir, "output directory")->required();
  cmd->add_option("--seed", args.seed, "override the configured seed")
      ->each([&](const std::string&) { args.seed_given = true; });
  cmd->add_option("--threads", args.threads, "worker threads (outputs are unaffected)");
}

ScenarioConfig prepare(const CommonArgs& args, RunInfo& info, const std::string& command) {
  ScenarioConfig cfg = load_config(args.config_path);
  if (args.seed_given) cfg.seed = args.seed;
  if (args.threads > 0) set_thread_count(args.threads);
  std::filesystem::create_directories(args.out_dir);
  info.command = command;
  info.config_path = args.config_path;
  info.config_hash = fnv1a_hash(cfg.normalized);
  info.seed = cfg.seed;
  return cfg;
}

GameSolution solve_scenario(const ScenarioConfig& cfg) {
  if (cfg.fixed_expenditures) {
    // evaluate the market and district objectives at the given profile
    GameSolution sol;
    sol.expenditure = cfg.expenditures;
    sol.context = make_stationary_context(cfg.economy, cfg.expenditures, cfg.game.adjustment,
                                          cfg.game.grid_points);
    sol.iterations = 0;
    sol.br_residual = 0.0;
    const int n = static_cast<int>(cfg.economy.n_districts());
    sol.taxes.resize(n);
    sol.objectives.resize(n);
    for (int j = 0; j < n; ++j) {
      const DistrictContext& d = sol.context.district[j];
      sol.taxes[j] = optimal_tax_schedule(cfg.economy, j, cfg.expenditures[j], d.grid, d.pdv,
                                          d.resale_price, d.incumbent_wealth);
      sol.objectives[j] = district_objective(cfg.economy, j, cfg.expenditures, sol.context);
    }
    return sol;
  }
  return nash_equilibrium(cfg.economy, cfg.game);
}

int run_equilibrium(const CommonArgs& args) {
  RunInfo info;
  ScenarioConfig cfg = prepare(args, info, "equilibrium");
  std::vector<std::string> files;
  try {
    GameSolution sol = solve_scenario(cfg);
    Allocation alloc = assign_locations(cfg.economy, sol.expenditure);
    MoneyValueSolution mvs = money_values(cfg.economy, alloc, sol.expenditure);
    IcAuditReport audit =
        ic_audit(cfg.economy, alloc, mvs, 10000, derive_seed(cfg.seed, 0xA0D17));
    files = write_equilibrium_outputs(args.out_dir, cfg.economy, sol, audit);
  } catch (const RevenueInfeasible& e) {
    // a fixed profile can price the market even when no stationary tax
    // schedule exists; fall back to the market layer alone
    if (!cfg.fixed_expenditures) throw;
    Allocation alloc = assign_locations(cfg.economy, cfg.expenditures);
    MoneyValueSolution mvs = money_values(cfg.economy, alloc, cfg.expenditures);
    IcAuditReport audit =
        ic_audit(cfg.economy, alloc, mvs, 10000, derive_seed(cfg.seed, 0xA0D17));
    files = write_market_outputs(args.out_dir, cfg.economy, cfg.expenditures, audit,
                                 std::string("stationary fiscal layer infeasible: ") + e.what());
  }
  write_manifest(args.out_dir, info, files);
  return 0;
}

int run_policy(const CommonArgs& args, const std::string& kind) {
  RunInfo info;
  ScenarioConfig cfg = prepare(args, info, "policy " + kind);
  std::vector<std::string> files;
  if (kind == "caps") {
    if (!cfg.caps) throw ValidationError("config has no policy.caps block");
    GameSolution base = nash_equilibrium(cfg.economy, cfg.game);
    std::vector<int> targets;
    for (const auto& id : cfg.caps->targets) targets.push_back(cfg.district_index(id));
    GameOptions opt = cfg.game;
    PolicyReport rep = find_pareto_caps(cfg.economy, targets, base, opt,
                                        cfg.caps->reduction_steps);
    files = write_policy_outputs(args.out_dir, cfg.economy, rep, "caps");
  } else if (kind == "fees") {
    if (!cfg.fees) throw ValidationError("config has no policy.fees block");
    GameSolution base = nash_equilibrium(cfg.economy, cfg.game);
    FeePolicy pol;
    pol.fee_rate = cfg.fees->rate;
    pol.transfer_weights = cfg.fees->transfer_weights;
    pol.threshold = cfg.fees->thresholds;
    if (cfg.fees->thresholds_at_fixed_gap) {
      pol.threshold.assign(cfg.economy.n_districts(), 0.0);
      for (std::size_t j = 0; j < cfg.economy.n_districts(); ++j)
        pol.threshold[j] =
            fixed_gap_best_response(cfg.economy, static_cast<int>(j), base.context);
    }
    PolicyReport rep = solve_fee_policy(cfg.economy, pol, base, cfg.game);
    files = write_policy_outputs(args.out_dir, cfg.economy, rep, "fees");
  } else {
    FloorCheckReport rep = expenditure_floor_check(cfg.economy, cfg.game);
    files = write_floor_outputs(args.out_dir, cfg.economy, rep);
  }
  write_manifest(args.out_dir, info, files);
  return 0;
}

int run_rdd_simulate(const CommonArgs& args) {
  RunInfo info;
  ScenarioConfig cfg = prepare(args, info, "rdd simulate");
  if (!cfg.rdd) throw ValidationError("config has no rdd block");
  Panel panel = generate_panel(*cfg.rdd, cfg.seed);
  auto files = write_panel_outputs(args.out_dir, panel);
  write_manifest(args.out_dir, info, files);
  return 0;
}

int run_rdd_estimate(const CommonArgs& args, const std::string& panel_path,
                     const std::string& adjacency_path) {
  RunInfo info;
  ScenarioConfig cfg = prepare(args, info, "rdd estimate");
  if (!cfg.rdd) throw ValidationError("config has no rdd block");
  if (panel_path.empty()) throw ValidationError("rdd estimate needs --panel");
  std::string adj = adjacency_path;
  if (adj.empty())
    adj = (std::filesystem::path(panel_path).parent_path() / "adjacency.csv").string();
  Panel panel = read_panel_csv(panel_path, adj);

  std::vector<EstimateRow> rows;
  auto run_for = [&](const Panel& sample, const std::string& label) {
    for (const auto& o : cfg.rdd_estimate.outcomes) {
      std::string tr = o.transform == Transform::level
                           ? "level"
                           : (o.transform == Transform::pct_change ? "pct_change" : "log_change");
      for (int lag : cfg.rdd_estimate.lags) {
        if (cfg.rdd_estimate.poly3) {
          EstimateRow row{label, o.field, tr, lag, sharp_rdd_poly(sample, o, lag)};
          rows.push_back(row);
        }
        if (cfg.rdd_estimate.local_linear) {
          EstimateRow row{label, o.field, tr, lag, local_linear_rdd(sample, o, lag)};
          rows.push_back(row);
        }
      }
    }
  };
  run_for(panel, "own");
  if (cfg.rdd_estimate.neighbors) {
    Panel nbr = neighbor_outcomes(panel, cfg.rdd_estimate.exclude_shared_school);
    run_for(nbr, "neighbor");
  }
  auto files = write_estimate_outputs(args.out_dir, rows, panel, cfg.rdd_estimate);
  write_manifest(args.out_dir, info, files);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inter-district competition simulator and referendum-panel estimators"};
  app.require_subcommand(1);

  CommonArgs eq_args;
  CLI::App* eq = app.add_subcommand("equilibrium", "solve and export a scenario equilibrium");
  add_common(eq, eq_args);

  CLI::App* policy = app.add_subcommand("policy", "evaluate a policy against the baseline");
  policy->require_subcommand(1);
  CommonArgs caps_args, fees_args, floor_args;
  add_common(policy->add_subcommand("caps", "expenditure caps"), caps_args);
  add_common(policy->add_subcommand("fees", "expenditure fees with transfers"), fees_args);
  add_common(policy->add_subcommand("floor", "expenditure floor check"), floor_args);

  CLI::App* rdd = app.add_subcommand("rdd", "synthetic referendum panels and estimators");
  rdd->require_subcommand(1);
  CommonArgs sim_args, est_args;
  add_common(rdd->add_subcommand("simulate", "generate a synthetic panel"), sim_args);
  CLI::App* est = rdd->add_subcommand("estimate", "run the estimator grid on a panel");
  add_common(est, est_args);
  std::string panel_path, adjacency_path;
  est->add_option("--panel", panel_path, "panel CSV produced by 'rdd simulate'");
  est->add_option("--adjacency", adjacency_path, "adjacency CSV (defaults next to the panel)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (eq->parsed()) return run_equilibrium(eq_args);
    if (policy->parsed()) {
      if (policy->get_subcommand("caps")->parsed()) return run_policy(caps_args, "caps");
      if (policy->get_subcommand("fees")->parsed()) return run_policy(fees_args, "fees");
      return run_policy(floor_args, "floor");
    }
    if (rdd->get_subcommand("simulate")->parsed()) return run_rdd_simulate(sim_args);
    return run_rdd_estimate(est_args, panel_path, adjacency_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.error_class());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
