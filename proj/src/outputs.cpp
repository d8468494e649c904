#include "ftb/outputs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "ftb/csv.hpp"
#include "json.hpp"

namespace ftb {

namespace {

std::string join_ids(const std::vector<int>& active, const Economy& econ) {
  std::string s;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (i) s += '|';
    s += econ.districts[active[i]].id;
  }
  return s;
}

std::ofstream open_text(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

std::vector<std::string> write_equilibrium_outputs(const std::string& out_dir,
                                                   const Economy& econ, const GameSolution& sol,
                                                   const IcAuditReport& audit) {
  std::vector<std::string> files;
  const int n = static_cast<int>(econ.n_districts());
  const StationaryContext& ctx = sol.context;
  Allocation alloc = assign_locations(econ, sol.expenditure);
  MoneyValueSolution mvs = money_values(econ, alloc, sol.expenditure);

  {
    std::string p = path_in(out_dir, "expenditures.csv");
    CsvWriter w(p, {"district", "expenditure", "school_quality"});
    for (int j = 0; j < n; ++j) {
      w.cell(econ.districts[j].id)
          .cell(sol.expenditure[j])
          .cell(econ.school_quality(j, sol.expenditure[j]));
      w.end_row();
    }
    files.push_back("expenditures.csv");
  }
  {
    std::string p = path_in(out_dir, "tax_schedules.csv");
    CsvWriter w(p, {"district", "quality", "tax"});
    for (int j = 0; j < n; ++j)
      for (std::size_t i = 0; i < sol.taxes[j].quality.size(); ++i) {
        w.cell(econ.districts[j].id).cell(sol.taxes[j].quality[i]).cell(sol.taxes[j].tax[i]);
        w.end_row();
      }
    files.push_back("tax_schedules.csv");
  }
  {
    std::string p = path_in(out_dir, "allocation_segments.csv");
    CsvWriter w(p, {"type_lo", "type_hi", "location_quality_lo", "location_quality_hi",
                    "active_districts"});
    for (const auto& s : alloc.segments()) {
      w.cell(s.w_lo).cell(s.w_hi).cell(s.ell_lo).cell(s.ell_hi).cell(join_ids(s.active, econ));
      w.end_row();
    }
    files.push_back("allocation_segments.csv");
  }
  {
    std::string p = path_in(out_dir, "allocation_cutoffs.csv");
    CsvWriter w(p, {"name", "value"});
    w.cell("cutoff_low_type").cell(alloc.cutoff_low());
    w.end_row();
    w.cell("cutoff_high_type").cell(alloc.cutoff_high());
    w.end_row();
    files.push_back("allocation_cutoffs.csv");
  }
  {
    std::string p = path_in(out_dir, "money_values.csv");
    CsvWriter w(p, {"type", "money_value", "total_value", "pdv"});
    double lo = alloc.type_lo(), hi = alloc.type_hi();
    for (int i = 0; i <= 1000; ++i) {
      double t = lo + (hi - lo) * i / 1000.0;
      w.cell(t).cell(mvs.money_value(t)).cell(mvs.total_value(t)).cell(mvs.pdv_at_type(t));
      w.end_row();
    }
    files.push_back("money_values.csv");
  }
  {
    std::string p = path_in(out_dir, "pdv_schedules.csv");
    CsvWriter w(p, {"district", "quality", "pdv"});
    for (int j = 0; j < n; ++j) {
      const auto& d = ctx.district[j];
      for (std::size_t i = 0; i < d.grid.quality.size(); ++i) {
        w.cell(econ.districts[j].id).cell(d.grid.quality[i]).cell(d.pdv[i]);
        w.end_row();
      }
    }
    files.push_back("pdv_schedules.csv");
  }
  {
    std::string p = path_in(out_dir, "prices.csv");
    CsvWriter w(p, {"district", "quality", "tax", "pdv", "price", "gross_rent"});
    for (int j = 0; j < n; ++j) {
      const auto& d = ctx.district[j];
      for (std::size_t i = 0; i < d.grid.quality.size(); ++i) {
        w.cell(econ.districts[j].id)
            .cell(d.grid.quality[i])
            .cell(d.tax[i])
            .cell(d.pdv[i])
            .cell(d.resale_price[i])
            .cell(d.gross_rent[i]);
        w.end_row();
      }
    }
    files.push_back("prices.csv");
  }
  {
    std::string p = path_in(out_dir, "objectives.csv");
    CsvWriter w(p, {"district", "total", "school_term", "owner_welfare", "renter_welfare"});
    for (int j = 0; j < n; ++j) {
      const auto& o = sol.objectives[j];
      w.cell(econ.districts[j].id)
          .cell(o.total())
          .cell(o.school_term)
          .cell(o.owner_welfare)
          .cell(o.renter_welfare);
      w.end_row();
    }
    files.push_back("objectives.csv");
  }
  {
    auto out = open_text(path_in(out_dir, "summary.md"));
    out << "# Equilibrium summary\n\n";
    out << "- districts: " << n << "\n";
    out << "- iterations: " << sol.iterations << "\n";
    out << "- best-response residual: " << format_double(sol.br_residual) << "\n";
    out << "- assignment cutoffs: low " << format_double(alloc.cutoff_low()) << ", high "
        << format_double(alloc.cutoff_high()) << "\n";
    out << "- incentive audit: max violation " << format_double(audit.max_violation) << " over "
        << audit.samples << " sampled deviations\n";
    if (sol.multiple_optima)
      out << "- note: distinct near-optimal expenditure levels were found; the smallest "
             "maximizer was kept\n";
    out << "\n| district | expenditure | school quality | objective |\n";
    out << "|---|---|---|---|\n";
    for (int j = 0; j < n; ++j)
      out << "| " << econ.districts[j].id << " | " << format_double(sol.expenditure[j]) << " | "
          << format_double(econ.school_quality(j, sol.expenditure[j])) << " | "
          << format_double(sol.objectives[j].total()) << " |\n";
    files.push_back("summary.md");
  }
  return files;
}

std::vector<std::string> write_market_outputs(const std::string& out_dir,
                                              const Economy& econ,
                                              const std::vector<double>& expenditure,
                                              const IcAuditReport& audit,
                                              const std::string& note) {
  std::vector<std::string> files;
  const int n = static_cast<int>(econ.n_districts());
  Allocation alloc = assign_locations(econ, expenditure);
  MoneyValueSolution mvs = money_values(econ, alloc, expenditure);
  {
    CsvWriter w(path_in(out_dir, "expenditures.csv"), {"district", "expenditure", "school_quality"});
    for (int j = 0; j < n; ++j) {
      w.cell(econ.districts[j].id)
          .cell(expenditure[j])
          .cell(econ.school_quality(j, expenditure[j]));
      w.end_row();
    }
    files.push_back("expenditures.csv");
  }
  {
    CsvWriter w(path_in(out_dir, "allocation_segments.csv"),
                {"type_lo", "type_hi", "location_quality_lo", "location_quality_hi",
                 "active_districts"});
    for (const auto& s : alloc.segments()) {
      w.cell(s.w_lo).cell(s.w_hi).cell(s.ell_lo).cell(s.ell_hi).cell(join_ids(s.active, econ));
      w.end_row();
    }
    files.push_back("allocation_segments.csv");
  }
  {
    CsvWriter w(path_in(out_dir, "allocation_cutoffs.csv"), {"name", "value"});
    w.cell("cutoff_low_type").cell(alloc.cutoff_low());
    w.end_row();
    w.cell("cutoff_high_type").cell(alloc.cutoff_high());
    w.end_row();
    files.push_back("allocation_cutoffs.csv");
  }
  {
    CsvWriter w(path_in(out_dir, "money_values.csv"), {"type", "money_value", "total_value", "pdv"});
    double lo = alloc.type_lo(), hi = alloc.type_hi();
    for (int i = 0; i <= 1000; ++i) {
      double t = lo + (hi - lo) * i / 1000.0;
      w.cell(t).cell(mvs.money_value(t)).cell(mvs.total_value(t)).cell(mvs.pdv_at_type(t));
      w.end_row();
    }
    files.push_back("money_values.csv");
  }
  {
    CsvWriter w(path_in(out_dir, "pdv_schedules.csv"), {"district", "quality", "pdv"});
    for (int j = 0; j < n; ++j) {
      const Distribution& housing = econ.districts[j].housing;
      for (int i = 0; i <= 160; ++i) {
        double q = housing.quantile(housing.mass() * i / 160.0);
        w.cell(econ.districts[j].id).cell(q).cell(mvs.pdv_at_quality(j, q));
        w.end_row();
      }
    }
    files.push_back("pdv_schedules.csv");
  }
  {
    auto out = open_text(path_in(out_dir, "summary.md"));
    out << "# Market equilibrium summary\n\n";
    out << "- districts: " << n << "\n";
    out << "- assignment cutoffs: low " << format_double(alloc.cutoff_low()) << ", high "
        << format_double(alloc.cutoff_high()) << "\n";
    out << "- incentive audit: max violation " << format_double(audit.max_violation) << " over "
        << audit.samples << " sampled deviations\n";
    if (!note.empty()) out << "- note: " << note << "\n";
    files.push_back("summary.md");
  }
  return files;
}

std::vector<std::string> write_policy_outputs(const std::string& out_dir, const Economy& econ,
                                              const PolicyReport& report,
                                              const std::string& policy_kind) {
  std::vector<std::string> files;
  const int n = static_cast<int>(econ.n_districts());
  {
    CsvWriter w(path_in(out_dir, "policy_report.csv"),
                {"district", "baseline_expenditure", "treated_expenditure",
                 "baseline_objective", "treated_objective", "delta", "strict_gain"});
    for (int j = 0; j < n; ++j) {
      bool strict = false;
      for (int g : report.strict_gainers) strict = strict || g == j;
      w.cell(econ.districts[j].id)
          .cell(report.baseline.expenditure[j])
          .cell(report.treated.expenditure[j])
          .cell(report.objective_delta[j].baseline)
          .cell(report.objective_delta[j].treated)
          .cell(report.objective_delta[j].delta())
          .cell(static_cast<long long>(strict ? 1 : 0));
      w.end_row();
    }
    files.push_back("policy_report.csv");
  }
  {
    auto out = open_text(path_in(out_dir, "policy_summary.md"));
    out << "# Policy report: " << policy_kind << "\n\n";
    out << "- verdict: " << report.verdict << "\n";
    out << "- pareto: " << (report.pareto ? "yes" : "no") << "\n";
    out << "- improving policy found: " << (report.found ? "yes" : "no") << "\n";
    if (report.chosen_reduction > 0.0)
      out << "- chosen common reduction: " << format_double(report.chosen_reduction) << "\n";
    out << "\n| district | baseline e | treated e | objective delta |\n|---|---|---|---|\n";
    for (int j = 0; j < n; ++j)
      out << "| " << econ.districts[j].id << " | "
          << format_double(report.baseline.expenditure[j]) << " | "
          << format_double(report.treated.expenditure[j]) << " | "
          << format_double(report.objective_delta[j].delta()) << " |\n";
    files.push_back("policy_summary.md");
  }
  return files;
}

std::vector<std::string> write_floor_outputs(const std::string& out_dir, const Economy& econ,
                                             const FloorCheckReport& report) {
  std::vector<std::string> files;
  {
    CsvWriter w(path_in(out_dir, "floor_report.csv"),
                {"district", "equilibrium", "fixed_gap", "underspends", "objective_delta"});
    for (std::size_t j = 0; j < report.district.size(); ++j) {
      const auto& d = report.district[j];
      w.cell(d.id).cell(d.equilibrium).cell(d.fixed_gap).cell(
          static_cast<long long>(d.underspends ? 1 : 0));
      if (report.objective_delta.empty())
        w.cell_blank();
      else
        w.cell(report.objective_delta[j]);
      w.end_row();
    }
    files.push_back("floor_report.csv");
  }
  {
    auto out = open_text(path_in(out_dir, "policy_summary.md"));
    out << "# Policy report: floor\n\n";
    out << "- applicable (every district underspends): " << (report.applicable ? "yes" : "no")
        << "\n";
    if (report.applicable) {
      out << "- floor tested: " << format_double(report.floor_tested) << "\n";
      out << "- floor improves every district: " << (report.floor_improves_all ? "yes" : "no")
          << "\n";
    }
    files.push_back("policy_summary.md");
  }
  (void)econ;
  return files;
}

std::vector<std::string> write_panel_outputs(const std::string& out_dir, const Panel& panel) {
  std::vector<std::string> files;
  write_panel_csv(panel, path_in(out_dir, "panel.csv"), path_in(out_dir, "adjacency.csv"));
  files.push_back("panel.csv");
  files.push_back("adjacency.csv");
  if (panel.dgp_truth) {
    nlohmann::json truth;
    truth["levy_jump"] = panel.dgp_truth->levy_jump;
    truth["home_value_effect"] = panel.dgp_truth->home_value_effect;
    truth["income_per_tax"] = panel.dgp_truth->income_per_tax;
    truth["neighbor_spillover"] = panel.dgp_truth->neighbor_spillover;
    auto out = open_text(path_in(out_dir, "dgp_truth.json"));
    out << truth.dump(2) << "\n";
    files.push_back("dgp_truth.json");
  }
  return files;
}

std::vector<std::string> write_estimate_outputs(const std::string& out_dir,
                                                const std::vector<EstimateRow>& rows,
                                                const Panel& panel,
                                                const RddEstimateConfig& cfg) {
  std::vector<std::string> files;
  {
    CsvWriter w(path_in(out_dir, "estimates.csv"),
                {"sample", "outcome", "transform", "lag", "spec", "estimate", "se", "p", "n",
                 "bandwidth"});
    for (const auto& r : rows) {
      w.cell(r.sample).cell(r.outcome).cell(r.transform).cell(static_cast<long long>(r.lag));
      w.cell(r.estimate.spec == RddSpec::poly3 ? "poly3" : "local_linear");
      w.cell(r.estimate.estimate).cell(r.estimate.std_error).cell(r.estimate.p_value);
      w.cell(static_cast<long long>(r.estimate.n_effective));
      if (r.estimate.spec == RddSpec::local_linear)
        w.cell(r.estimate.bandwidth);
      else
        w.cell_blank();
      w.end_row();
    }
    files.push_back("estimates.csv");
  }
  {
    // binned means of each outcome against the margin, for external plotting
    CsvWriter w(path_in(out_dir, "binned_scatter.csv"),
                {"outcome", "transform", "lag", "bin_center", "count", "mean_outcome"});
    for (const auto& o : cfg.outcomes) {
      for (int lag : cfg.lags) {
        std::vector<double> sums(cfg.scatter_bins, 0.0);
        std::vector<long> counts(cfg.scatter_bins, 0);
        for (const auto& row : panel.rows) {
          if (!row.has_margin) continue;
          if (row.year + lag > panel.first_year + panel.years - 1) continue;
          const auto& later = panel.at(row.muni_id, row.year + lag);
          double now = o.field == "avg_tax"    ? row.avg_tax
                       : o.field == "income_pc" ? row.income_pc
                                                : row.home_value;
          double fut = o.field == "avg_tax"    ? later.avg_tax
                       : o.field == "income_pc" ? later.income_pc
                                                : later.home_value;
          if (!(now > 0.0) || !std::isfinite(fut)) continue;
          double y = o.transform == Transform::level
                         ? fut
                         : (o.transform == Transform::pct_change ? (fut - now) / now
                                                                 : std::log(fut / now));
          if (!std::isfinite(y)) continue;
          int bin = static_cast<int>((row.margin + 0.5) * cfg.scatter_bins);
          bin = std::min(std::max(bin, 0), cfg.scatter_bins - 1);
          sums[bin] += y;
          counts[bin] += 1;
        }
        std::string tr = o.transform == Transform::level
                             ? "level"
                             : (o.transform == Transform::pct_change ? "pct_change"
                                                                     : "log_change");
        for (int b = 0; b < cfg.scatter_bins; ++b) {
          if (counts[b] == 0) continue;
          double center = -0.5 + (b + 0.5) / cfg.scatter_bins;
          w.cell(o.field).cell(tr).cell(static_cast<long long>(lag)).cell(center);
          w.cell(static_cast<long long>(counts[b])).cell(sums[b] / counts[b]);
          w.end_row();
        }
      }
    }
    files.push_back("binned_scatter.csv");
  }
  return files;
}

void write_manifest(const std::string& out_dir, const RunInfo& info,
                    const std::vector<std::string>& outputs) {
  nlohmann::json m;
  m["artifact_version"] = "1.0.0";
  m["command"] = info.command;
  m["config"] = info.config_path;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(info.config_hash));
  m["config_hash"] = hash;
  m["seed"] = info.seed;
  m["outputs"] = outputs;
  // wall-clock stamps are opt-in so re-runs stay byte-identical
  if (const char* stamp = std::getenv("FISCAL_TIEBOUT_STAMP"); stamp && stamp[0] == '1') {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["generated_at"] = buf;
  }
  auto out = open_text(path_in(out_dir, "manifest.json"));
  out << m.dump(2) << "\n";
}

}  // namespace ftb
