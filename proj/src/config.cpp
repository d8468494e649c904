#include "ftb/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace ftb {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("config " + where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
}

double need_number(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) fail(where, "missing '" + key + "'");
  if (!obj[key].is_number()) fail(where + "." + key, "expected a number");
  return obj[key].get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  return obj[key].get<double>();
}

std::string need_string(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key) || !obj[key].is_string()) fail(where, "missing string '" + key + "'");
  return obj[key].get<std::string>();
}

Distribution parse_distribution(const json& d, const std::string& where, double mass) {
  reject_unknown(d, where, {"kind", "lo", "hi", "knots"});
  std::string kind = need_string(d, where, "kind");
  if (kind == "uniform") {
    return Distribution::uniform(need_number(d, where, "lo"), need_number(d, where, "hi"), mass);
  }
  if (kind == "piecewise_linear_cdf") {
    if (!d.contains("knots") || !d["knots"].is_array()) fail(where, "missing 'knots' array");
    std::vector<DistKnot> knots;
    for (const auto& k : d["knots"]) {
      if (!k.is_array() || k.size() != 2) fail(where + ".knots", "each knot is [x, cumulative]");
      knots.push_back({k[0].get<double>(), k[1].get<double>()});
    }
    // config knots carry cumulative fractions; rescale to the requested mass
    if (knots.empty()) fail(where + ".knots", "need at least two knots");
    double total = knots.back().cum;
    if (!(total > 0)) fail(where + ".knots", "cumulative values must increase to a positive total");
    for (auto& k : knots) k.cum *= mass / total;
    return Distribution::piecewise_linear(std::move(knots));
  }
  fail(where + ".kind", "expected 'uniform' or 'piecewise_linear_cdf'");
}

json emit_distribution(const Distribution& d) {
  json out;
  if (d.kind() == DistKind::uniform) {
    out["kind"] = "uniform";
    out["lo"] = d.lo();
    out["hi"] = d.hi();
  } else {
    out["kind"] = "piecewise_linear_cdf";
    json knots = json::array();
    for (const auto& k : d.knots()) knots.push_back({k.x, k.cum / d.mass()});
    out["knots"] = knots;
  }
  return out;
}

}  // namespace

int ScenarioConfig::district_index(const std::string& id) const {
  for (std::size_t j = 0; j < economy.districts.size(); ++j)
    if (economy.districts[j].id == id) return static_cast<int>(j);
  throw ValidationError("config: unknown district id '" + id + "'");
}

ScenarioConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  reject_unknown(root, "(top)", {"economy", "solver", "policy", "rdd"});
  if (!root.contains("economy")) fail("(top)", "missing 'economy'");

  ScenarioConfig cfg;
  const json& eco = root["economy"];
  reject_unknown(eco, "economy",
                 {"income", "utility", "rate", "school_tech", "school_weight", "outside",
                  "districts"});

  cfg.economy.rate = need_number(eco, "economy", "rate");
  cfg.economy.school_weight = need_number(eco, "economy", "school_weight");

  {
    if (!eco.contains("utility")) fail("economy", "missing 'utility'");
    const json& u = eco["utility"];
    reject_unknown(u, "economy.utility", {"kind", "gamma"});
    std::string kind = need_string(u, "economy.utility", "kind");
    if (kind == "log") {
      cfg.economy.utility = {UtilityKind::log_utility, 0.0};
    } else if (kind == "crra") {
      cfg.economy.utility = {UtilityKind::crra, need_number(u, "economy.utility", "gamma")};
    } else {
      fail("economy.utility.kind", "expected 'log' or 'crra'");
    }
  }
  {
    if (!eco.contains("school_tech")) fail("economy", "missing 'school_tech'");
    const json& s = eco["school_tech"];
    reject_unknown(s, "economy.school_tech", {"kind", "alpha", "beta"});
    std::string kind = need_string(s, "economy.school_tech", "kind");
    if (kind == "log1p") {
      cfg.economy.school = {SchoolTech::Kind::log1p, need_number(s, "economy.school_tech", "alpha"),
                            0.5};
    } else if (kind == "power") {
      cfg.economy.school = {SchoolTech::Kind::power, need_number(s, "economy.school_tech", "alpha"),
                            need_number(s, "economy.school_tech", "beta")};
    } else {
      fail("economy.school_tech.kind", "expected 'log1p' or 'power'");
    }
  }
  if (!eco.contains("income")) fail("economy", "missing 'income'");
  cfg.economy.income = parse_distribution(eco["income"], "economy.income", 1.0);

  if (!eco.contains("districts") || !eco["districts"].is_array() || eco["districts"].empty())
    fail("economy", "missing 'districts' array");
  const double district_mass = 1.0 / eco["districts"].size();
  for (std::size_t j = 0; j < eco["districts"].size(); ++j) {
    const json& dj = eco["districts"][j];
    std::string where = "economy.districts[" + std::to_string(j) + "]";
    reject_unknown(dj, where, {"id", "housing", "old_wealth", "renter_share", "school_scale"});
    District d;
    d.id = need_string(dj, where, "id");
    if (!dj.contains("housing")) fail(where, "missing 'housing'");
    d.housing = parse_distribution(dj["housing"], where + ".housing", district_mass);
    d.school_scale = number_or(dj, "school_scale", 1.0);
    if (dj.contains("old_wealth")) {
      const json& w = dj["old_wealth"];
      reject_unknown(w, where + ".old_wealth", {"kind", "value", "intercept", "slope"});
      std::string kind = need_string(w, where + ".old_wealth", "kind");
      if (kind == "assigned_type") {
        d.old_wealth.kind = IncumbentWealthSpec::Kind::assigned_type;
      } else if (kind == "constant") {
        d.old_wealth.kind = IncumbentWealthSpec::Kind::constant;
        d.old_wealth.value = need_number(w, where + ".old_wealth", "value");
      } else if (kind == "affine") {
        d.old_wealth.kind = IncumbentWealthSpec::Kind::affine;
        d.old_wealth.intercept = need_number(w, where + ".old_wealth", "intercept");
        d.old_wealth.slope = need_number(w, where + ".old_wealth", "slope");
      } else {
        fail(where + ".old_wealth.kind", "expected assigned_type, constant, or affine");
      }
    }
    if (dj.contains("renter_share")) {
      const json& r = dj["renter_share"];
      reject_unknown(r, where + ".renter_share", {"kind", "value", "intercept", "slope"});
      std::string kind = need_string(r, where + ".renter_share", "kind");
      if (kind == "constant") {
        d.renter_share.kind = RenterShareSpec::Kind::constant;
        d.renter_share.value = need_number(r, where + ".renter_share", "value");
      } else if (kind == "affine") {
        d.renter_share.kind = RenterShareSpec::Kind::affine;
        d.renter_share.intercept = need_number(r, where + ".renter_share", "intercept");
        d.renter_share.slope = need_number(r, where + ".renter_share", "slope");
      } else {
        fail(where + ".renter_share.kind", "expected constant or affine");
      }
    }
    cfg.economy.districts.push_back(std::move(d));
  }

  {
    if (!eco.contains("outside")) fail("economy", "missing 'outside'");
    const json& o = eco["outside"];
    reject_unknown(o, "economy.outside", {"pdv", "money_value"});
    if (o.contains("money_value")) {
      cfg.economy.outside_money_value = o["money_value"].get<double>();
    } else if (o.contains("pdv")) {
      cfg.economy.outside_money_value = money_value_of_pdv(
          cfg.economy.income.lo(), o["pdv"].get<double>(), cfg.economy.rate, cfg.economy.utility);
    } else {
      fail("economy.outside", "need 'pdv' or 'money_value'");
    }
  }
  cfg.economy.validate();

  if (root.contains("solver")) {
    const json& sol = root["solver"];
    reject_unknown(sol, "solver", {"seed", "game"});
    if (sol.contains("seed")) cfg.seed = sol["seed"].get<std::uint64_t>();
    if (sol.contains("game")) {
      const json& g = sol["game"];
      reject_unknown(g, "solver.game",
                     {"mode", "expenditures", "initial", "damping", "tol", "max_iterations",
                      "grid_points"});
      std::string mode = g.contains("mode") ? g["mode"].get<std::string>() : "nash";
      if (mode == "fixed") {
        cfg.fixed_expenditures = true;
        if (!g.contains("expenditures") || !g["expenditures"].is_array())
          fail("solver.game", "fixed mode needs an 'expenditures' array");
        for (const auto& v : g["expenditures"]) cfg.expenditures.push_back(v.get<double>());
        if (cfg.expenditures.size() != cfg.economy.n_districts())
          fail("solver.game.expenditures", "length must match the district count");
        for (double e : cfg.expenditures)
          if (!(e >= 0.0)) fail("solver.game.expenditures", "must be nonnegative");
      } else if (mode != "nash") {
        fail("solver.game.mode", "expected 'nash' or 'fixed'");
      }
      if (g.contains("initial")) {
        for (const auto& v : g["initial"]) cfg.game.initial.push_back(v.get<double>());
        if (cfg.game.initial.size() != cfg.economy.n_districts())
          fail("solver.game.initial", "length must match the district count");
      }
      cfg.game.damping = number_or(g, "damping", cfg.game.damping);
      if (!(cfg.game.damping > 0.0 && cfg.game.damping <= 1.0))
        fail("solver.game.damping", "must lie in (0, 1]");
      cfg.game.tol = number_or(g, "tol", cfg.game.tol);
      cfg.game.max_iterations =
          static_cast<int>(number_or(g, "max_iterations", cfg.game.max_iterations));
      cfg.game.grid_points = static_cast<int>(number_or(g, "grid_points", cfg.game.grid_points));
    }
  }

  if (root.contains("policy")) {
    const json& pol = root["policy"];
    reject_unknown(pol, "policy", {"caps", "fees", "floor"});
    if (pol.contains("caps")) {
      const json& c = pol["caps"];
      reject_unknown(c, "policy.caps", {"targets", "reduction_steps", "reoptimize_others"});
      CapsConfig cc;
      if (!c.contains("targets") || !c["targets"].is_array() || c["targets"].empty())
        fail("policy.caps", "missing 'targets' array of district ids");
      for (const auto& t : c["targets"]) cc.targets.push_back(t.get<std::string>());
      cc.reduction_steps = static_cast<int>(number_or(c, "reduction_steps", 12));
      if (cc.reduction_steps < 1) fail("policy.caps.reduction_steps", "must be positive");
      cc.reoptimize_others = c.contains("reoptimize_others") && c["reoptimize_others"].get<bool>();
      cfg.caps = cc;
    }
    if (pol.contains("fees")) {
      const json& f = pol["fees"];
      reject_unknown(f, "policy.fees", {"rate", "thresholds", "transfer_weights"});
      FeesConfig fc;
      fc.rate = need_number(f, "policy.fees", "rate");
      if (!(fc.rate >= 0.0 && fc.rate <= 1.0)) fail("policy.fees.rate", "must lie in [0, 1]");
      fc.thresholds.assign(cfg.economy.n_districts(),
                           std::numeric_limits<double>::infinity());
      if (f.contains("thresholds")) {
        if (f["thresholds"].is_string()) {
          if (f["thresholds"].get<std::string>() != "fixed_gap")
            fail("policy.fees.thresholds", "expected 'fixed_gap' or a district map");
          fc.thresholds_at_fixed_gap = true;
        } else {
          fc.thresholds_at_fixed_gap = false;
          for (auto it = f["thresholds"].begin(); it != f["thresholds"].end(); ++it)
            fc.thresholds[cfg.district_index(it.key())] = it.value().get<double>();
        }
      }
      fc.transfer_weights.assign(cfg.economy.n_districts(), 0.0);
      if (!f.contains("transfer_weights")) fail("policy.fees", "missing 'transfer_weights'");
      for (auto it = f["transfer_weights"].begin(); it != f["transfer_weights"].end(); ++it)
        fc.transfer_weights[cfg.district_index(it.key())] = it.value().get<double>();
      cfg.fees = fc;
    }
    if (pol.contains("floor")) {
      reject_unknown(pol["floor"], "policy.floor", {});
      cfg.floor_block = true;
    }
  }

  if (root.contains("rdd")) {
    const json& r = root["rdd"];
    reject_unknown(r, "rdd",
                   {"n_muni", "years", "first_year", "referendum_propensity",
                    "multi_referendum_share", "margin_beta", "levy_jump",
                    "cumulative_levy_effect", "home_value_effect", "income_per_tax",
                    "neighbor_spillover", "loss_underreport", "levy_growth", "home_growth",
                    "income", "levy0", "home0", "school_district_size", "neighbor_links",
                    "estimate"});
    PanelParams p;
    p.n_muni = static_cast<int>(number_or(r, "n_muni", p.n_muni));
    p.years = static_cast<int>(number_or(r, "years", p.years));
    p.first_year = static_cast<int>(number_or(r, "first_year", p.first_year));
    p.referendum_propensity = number_or(r, "referendum_propensity", p.referendum_propensity);
    p.multi_referendum_share = number_or(r, "multi_referendum_share", p.multi_referendum_share);
    if (r.contains("margin_beta")) {
      reject_unknown(r["margin_beta"], "rdd.margin_beta", {"a", "b"});
      p.margin_beta_a = need_number(r["margin_beta"], "rdd.margin_beta", "a");
      p.margin_beta_b = need_number(r["margin_beta"], "rdd.margin_beta", "b");
    }
    p.levy_jump = number_or(r, "levy_jump", p.levy_jump);
    if (r.contains("cumulative_levy_effect"))
      p.cumulative_levy_effect = r["cumulative_levy_effect"].get<bool>();
    p.home_value_effect = number_or(r, "home_value_effect", p.home_value_effect);
    p.income_per_tax = number_or(r, "income_per_tax", p.income_per_tax);
    p.neighbor_spillover = number_or(r, "neighbor_spillover", p.neighbor_spillover);
    p.loss_underreport = number_or(r, "loss_underreport", p.loss_underreport);
    if (r.contains("levy_growth")) {
      reject_unknown(r["levy_growth"], "rdd.levy_growth", {"mean", "sd"});
      p.levy_growth_mean = number_or(r["levy_growth"], "mean", p.levy_growth_mean);
      p.levy_growth_sd = number_or(r["levy_growth"], "sd", p.levy_growth_sd);
    }
    if (r.contains("home_growth")) {
      reject_unknown(r["home_growth"], "rdd.home_growth", {"mean", "sd"});
      p.home_growth_mean = number_or(r["home_growth"], "mean", p.home_growth_mean);
      p.home_growth_sd = number_or(r["home_growth"], "sd", p.home_growth_sd);
    }
    if (r.contains("income")) {
      reject_unknown(r["income"], "rdd.income", {"base", "sd"});
      p.income_base = number_or(r["income"], "base", p.income_base);
      p.income_sd = number_or(r["income"], "sd", p.income_sd);
    }
    if (r.contains("levy0")) {
      reject_unknown(r["levy0"], "rdd.levy0", {"lo", "hi"});
      p.levy0_lo = number_or(r["levy0"], "lo", p.levy0_lo);
      p.levy0_hi = number_or(r["levy0"], "hi", p.levy0_hi);
    }
    if (r.contains("home0")) {
      reject_unknown(r["home0"], "rdd.home0", {"lo", "hi"});
      p.home0_lo = number_or(r["home0"], "lo", p.home0_lo);
      p.home0_hi = number_or(r["home0"], "hi", p.home0_hi);
    }
    p.school_district_size =
        static_cast<int>(number_or(r, "school_district_size", p.school_district_size));
    p.neighbor_links = static_cast<int>(number_or(r, "neighbor_links", p.neighbor_links));
    p.validate();
    cfg.rdd = p;

    cfg.rdd_estimate.outcomes = {{"avg_tax", Transform::log_change},
                                 {"home_value", Transform::log_change}};
    cfg.rdd_estimate.lags = {1, 2, 3, 4, 5, 6, 7, 8};
    if (r.contains("estimate")) {
      const json& e = r["estimate"];
      reject_unknown(e, "rdd.estimate",
                     {"outcomes", "lags", "poly3", "local_linear", "neighbors",
                      "exclude_shared_school", "scatter_bins"});
      if (e.contains("outcomes")) {
        cfg.rdd_estimate.outcomes.clear();
        for (const auto& o : e["outcomes"]) {
          reject_unknown(o, "rdd.estimate.outcomes[]", {"field", "transform"});
          OutcomeSpec spec;
          spec.field = need_string(o, "rdd.estimate.outcomes[]", "field");
          std::string tr =
              o.contains("transform") ? o["transform"].get<std::string>() : "log_change";
          if (tr == "level")
            spec.transform = Transform::level;
          else if (tr == "pct_change")
            spec.transform = Transform::pct_change;
          else if (tr == "log_change")
            spec.transform = Transform::log_change;
          else
            fail("rdd.estimate.outcomes[].transform", "unknown transform '" + tr + "'");
          cfg.rdd_estimate.outcomes.push_back(spec);
        }
      }
      if (e.contains("lags")) {
        cfg.rdd_estimate.lags.clear();
        for (const auto& l : e["lags"]) cfg.rdd_estimate.lags.push_back(l.get<int>());
      }
      if (e.contains("poly3")) cfg.rdd_estimate.poly3 = e["poly3"].get<bool>();
      if (e.contains("local_linear"))
        cfg.rdd_estimate.local_linear = e["local_linear"].get<bool>();
      if (e.contains("neighbors")) cfg.rdd_estimate.neighbors = e["neighbors"].get<bool>();
      if (e.contains("exclude_shared_school"))
        cfg.rdd_estimate.exclude_shared_school = e["exclude_shared_school"].get<bool>();
      cfg.rdd_estimate.scatter_bins =
          static_cast<int>(number_or(e, "scatter_bins", cfg.rdd_estimate.scatter_bins));
    }
  }

  // canonical re-emission: every consumed field in sorted-key order
  json canon;
  canon["economy"]["rate"] = cfg.economy.rate;
  canon["economy"]["school_weight"] = cfg.economy.school_weight;
  canon["economy"]["income"] = emit_distribution(cfg.economy.income);
  if (cfg.economy.utility.kind == UtilityKind::log_utility)
    canon["economy"]["utility"] = {{"kind", "log"}};
  else
    canon["economy"]["utility"] = {{"kind", "crra"}, {"gamma", cfg.economy.utility.gamma}};
  if (cfg.economy.school.kind == SchoolTech::Kind::log1p)
    canon["economy"]["school_tech"] = {{"kind", "log1p"}, {"alpha", cfg.economy.school.alpha}};
  else
    canon["economy"]["school_tech"] = {{"kind", "power"},
                                       {"alpha", cfg.economy.school.alpha},
                                       {"beta", cfg.economy.school.beta}};
  canon["economy"]["outside"] = {{"money_value", cfg.economy.outside_money_value}};
  canon["economy"]["districts"] = json::array();
  for (const auto& d : cfg.economy.districts) {
    json dj;
    dj["id"] = d.id;
    dj["housing"] = emit_distribution(d.housing);
    dj["school_scale"] = d.school_scale;
    switch (d.old_wealth.kind) {
      case IncumbentWealthSpec::Kind::assigned_type:
        dj["old_wealth"] = {{"kind", "assigned_type"}};
        break;
      case IncumbentWealthSpec::Kind::constant:
        dj["old_wealth"] = {{"kind", "constant"}, {"value", d.old_wealth.value}};
        break;
      case IncumbentWealthSpec::Kind::affine:
        dj["old_wealth"] = {{"kind", "affine"},
                            {"intercept", d.old_wealth.intercept},
                            {"slope", d.old_wealth.slope}};
        break;
    }
    if (d.renter_share.kind == RenterShareSpec::Kind::constant)
      dj["renter_share"] = {{"kind", "constant"}, {"value", d.renter_share.value}};
    else
      dj["renter_share"] = {{"kind", "affine"},
                            {"intercept", d.renter_share.intercept},
                            {"slope", d.renter_share.slope}};
    canon["economy"]["districts"].push_back(dj);
  }
  canon["solver"]["seed"] = cfg.seed;
  canon["solver"]["game"]["mode"] = cfg.fixed_expenditures ? "fixed" : "nash";
  if (cfg.fixed_expenditures) canon["solver"]["game"]["expenditures"] = cfg.expenditures;
  if (!cfg.game.initial.empty()) canon["solver"]["game"]["initial"] = cfg.game.initial;
  canon["solver"]["game"]["damping"] = cfg.game.damping;
  canon["solver"]["game"]["tol"] = cfg.game.tol;
  canon["solver"]["game"]["max_iterations"] = cfg.game.max_iterations;
  canon["solver"]["game"]["grid_points"] = cfg.game.grid_points;
  if (cfg.caps) {
    canon["policy"]["caps"]["targets"] = cfg.caps->targets;
    canon["policy"]["caps"]["reduction_steps"] = cfg.caps->reduction_steps;
    canon["policy"]["caps"]["reoptimize_others"] = cfg.caps->reoptimize_others;
  }
  if (cfg.fees) {
    canon["policy"]["fees"]["rate"] = cfg.fees->rate;
    if (cfg.fees->thresholds_at_fixed_gap) {
      canon["policy"]["fees"]["thresholds"] = "fixed_gap";
    } else {
      json th;
      for (std::size_t j = 0; j < cfg.economy.districts.size(); ++j)
        if (std::isfinite(cfg.fees->thresholds[j]))
          th[cfg.economy.districts[j].id] = cfg.fees->thresholds[j];
      canon["policy"]["fees"]["thresholds"] = th;
    }
    json tw;
    for (std::size_t j = 0; j < cfg.economy.districts.size(); ++j)
      if (cfg.fees->transfer_weights[j] != 0.0)
        tw[cfg.economy.districts[j].id] = cfg.fees->transfer_weights[j];
    canon["policy"]["fees"]["transfer_weights"] = tw;
  }
  if (cfg.floor_block) canon["policy"]["floor"] = json::object();
  if (cfg.rdd) {
    const PanelParams& p = *cfg.rdd;
    json r;
    r["n_muni"] = p.n_muni;
    r["years"] = p.years;
    r["first_year"] = p.first_year;
    r["referendum_propensity"] = p.referendum_propensity;
    r["multi_referendum_share"] = p.multi_referendum_share;
    r["margin_beta"] = {{"a", p.margin_beta_a}, {"b", p.margin_beta_b}};
    r["levy_jump"] = p.levy_jump;
    r["cumulative_levy_effect"] = p.cumulative_levy_effect;
    r["home_value_effect"] = p.home_value_effect;
    r["income_per_tax"] = p.income_per_tax;
    r["neighbor_spillover"] = p.neighbor_spillover;
    r["loss_underreport"] = p.loss_underreport;
    r["levy_growth"] = {{"mean", p.levy_growth_mean}, {"sd", p.levy_growth_sd}};
    r["home_growth"] = {{"mean", p.home_growth_mean}, {"sd", p.home_growth_sd}};
    r["income"] = {{"base", p.income_base}, {"sd", p.income_sd}};
    r["levy0"] = {{"lo", p.levy0_lo}, {"hi", p.levy0_hi}};
    r["home0"] = {{"lo", p.home0_lo}, {"hi", p.home0_hi}};
    r["school_district_size"] = p.school_district_size;
    r["neighbor_links"] = p.neighbor_links;
    json est;
    est["outcomes"] = json::array();
    for (const auto& o : cfg.rdd_estimate.outcomes) {
      std::string tr = o.transform == Transform::level
                           ? "level"
                           : (o.transform == Transform::pct_change ? "pct_change" : "log_change");
      est["outcomes"].push_back({{"field", o.field}, {"transform", tr}});
    }
    est["lags"] = cfg.rdd_estimate.lags;
    est["poly3"] = cfg.rdd_estimate.poly3;
    est["local_linear"] = cfg.rdd_estimate.local_linear;
    est["neighbors"] = cfg.rdd_estimate.neighbors;
    est["exclude_shared_school"] = cfg.rdd_estimate.exclude_shared_school;
    est["scatter_bins"] = cfg.rdd_estimate.scatter_bins;
    r["estimate"] = est;
    canon["rdd"] = r;
  }
  cfg.normalized = canon.dump(2) + "\n";
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string normalize_config_text(const std::string& text) {
  return parse_config_text(text).normalized;
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace ftb
