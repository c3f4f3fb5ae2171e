#include "bgsd/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bgsd {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string fmt10(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

namespace {

double num10(double x) { return round_sig10(x); }

GridAxis parse_axis(const ordered_json& j, const std::string& name) {
  if (!j.contains(name)) throw ConfigError("calibrate block missing axis: " + name);
  const auto& a = j.at(name);
  GridAxis axis;
  if (a.is_array() && a.size() == 2) {
    axis.lo = a[0].get<double>();
    axis.hi = a[1].get<double>();
  } else {
    throw ConfigError("axis " + name + " must be [lo, hi]");
  }
  return axis;
}

DecisionRule parse_rule(const ordered_json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "fixed_posterior") {
    return FixedPosterior{j.at("p").get<double>()};
  }
  if (type == "two_phase") {
    return TwoPhasePosterior{j.at("p_early").get<double>(), j.at("p_late").get<double>(),
                             j.value("t_star", 0.5)};
  }
  if (type == "predictive_hybrid") {
    return PredictiveHybrid{j.at("p_final").get<double>(), j.at("q_interim").get<double>()};
  }
  if (type == "z_boundary") {
    return ZBoundary{j.at("critical_z").get<std::vector<double>>()};
  }
  throw ConfigError("unknown rule type: " + type);
}

ordered_json rule_to_json(const DecisionRule& rule) {
  ordered_json j;
  if (const auto* f = std::get_if<FixedPosterior>(&rule)) {
    j["type"] = "fixed_posterior";
    j["p"] = f->p;
  } else if (const auto* t = std::get_if<TwoPhasePosterior>(&rule)) {
    j["type"] = "two_phase";
    j["p_early"] = t->p_early;
    j["p_late"] = t->p_late;
    j["t_star"] = t->t_star;
  } else if (const auto* h = std::get_if<PredictiveHybrid>(&rule)) {
    j["type"] = "predictive_hybrid";
    j["p_final"] = h->p_final;
    j["q_interim"] = h->q_interim;
  } else if (const auto* z = std::get_if<ZBoundary>(&rule)) {
    j["type"] = "z_boundary";
    j["critical_z"] = z->critical_z;
  }
  return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig config;
  try {
    const auto& sc = j.at("scenario");
    config.scenario.control_rate = sc.at("control_rate").get<double>();
    config.scenario.treatment_rate_alt = sc.at("treatment_rate_alt").get<double>();
    config.scenario.one_sided_alpha = sc.value("one_sided_alpha", 0.025);
    config.scenario.target_power = sc.value("target_power", 0.80);

    const auto& d = j.at("design");
    config.n_total = d.at("n_total").get<std::int64_t>();
    config.info_fractions = d.at("info_fractions").get<std::vector<double>>();
    if (d.contains("priors")) {
      const auto& pr = d.at("priors");
      auto read = [](const ordered_json& arr) {
        return BetaParams{arr.at(0).get<double>(), arr.at(1).get<double>()};
      };
      config.priors.control = read(pr.at("control"));
      config.priors.treatment = read(pr.at("treatment"));
    }
    config.rounding = rounding_from_string(d.value("rounding", "nearest"));

    if (j.contains("rule")) config.rule = parse_rule(j.at("rule"));

    if (j.contains("calibrate")) {
      const auto& c = j.at("calibrate");
      CalibrateConfig cc;
      cc.strategy = c.at("strategy").get<std::string>();
      const double step = c.value("step", 0.0005);
      if (cc.strategy == "baseline") {
        cc.n_axis = parse_axis(c, "n_range");
        cc.n_axis.step = c.value("n_step", 2.0);
        cc.p_axis = parse_axis(c, "p_range");
        cc.p_axis.step = step;
      } else if (cc.strategy == "s1") {
        cc.p_early_axis = parse_axis(c, "p_early_range");
        cc.p_early_axis.step = step;
        cc.p_late_axis = parse_axis(c, "p_late_range");
        cc.p_late_axis.step = step;
        cc.t_star = c.value("t_star", 0.5);
      } else if (cc.strategy == "s2") {
        cc.p_axis = parse_axis(c, "p_range");
        cc.p_axis.step = step;
        cc.q_axis = parse_axis(c, "q_range");
        cc.q_axis.step = step;
      } else {
        throw ConfigError("calibrate.strategy must be baseline, s1 or s2");
      }
      cc.power_floor = c.value("power_floor", 0.0);
      cc.refine_step = c.value("refine_step", 1e-4);
      config.calibrate = cc;
    }

    if (j.contains("freq")) {
      const auto& f = j.at("freq");
      FreqConfig fc;
      if (f.contains("kinds")) {
        fc.kinds = f.at("kinds").get<std::vector<std::string>>();
      } else if (f.contains("kind")) {
        fc.kinds = {f.at("kind").get<std::string>()};
      }
      fc.size_for_power = f.value("size_for_power", true);
      config.freq = fc;
    }

    if (j.contains("spending")) {
      const auto& s = j.at("spending");
      SpendingConfig sp;
      sp.truth = s.value("truth", "both");
      if (s.contains("comparators")) {
        sp.comparators = s.at("comparators").get<std::vector<std::string>>();
      }
      if (s.contains("rules")) {
        for (const auto& r : s.at("rules")) sp.rules.push_back(parse_rule(r));
      }
      config.spending = sp;
    }

    if (j.contains("simulate")) {
      SimulateConfig sim;
      sim.replicates = j.at("simulate").value("replicates", std::uint64_t{100000});
      config.simulate = sim;
    }

    if (j.contains("options")) {
      const auto& o = j.at("options");
      config.options.format = o.value("format", "csv");
      config.options.threads = o.value("threads", 0);
      config.options.seed = o.value("seed", std::uint64_t{20260810});
      config.options.out_dir = o.value("out", "out");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  if (config.options.format != "csv" && config.options.format != "json" &&
      config.options.format != "both") {
    throw ConfigError("options.format must be csv, json or both");
  }
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& config) {
  ordered_json j;
  j["scenario"] = {{"control_rate", config.scenario.control_rate},
                   {"treatment_rate_alt", config.scenario.treatment_rate_alt},
                   {"one_sided_alpha", config.scenario.one_sided_alpha},
                   {"target_power", config.scenario.target_power}};
  j["design"] = {{"n_total", config.n_total},
                 {"info_fractions", config.info_fractions},
                 {"priors",
                  {{"control", {config.priors.control.alpha, config.priors.control.beta}},
                   {"treatment",
                    {config.priors.treatment.alpha, config.priors.treatment.beta}}}},
                 {"rounding", to_string(config.rounding)}};
  j["rule"] = rule_to_json(config.rule);
  if (config.calibrate) {
    const auto& c = *config.calibrate;
    ordered_json cj;
    cj["strategy"] = c.strategy;
    if (c.strategy == "baseline") {
      cj["n_range"] = {c.n_axis.lo, c.n_axis.hi};
      cj["n_step"] = c.n_axis.step;
      cj["p_range"] = {c.p_axis.lo, c.p_axis.hi};
      cj["step"] = c.p_axis.step;
    } else if (c.strategy == "s1") {
      cj["p_early_range"] = {c.p_early_axis.lo, c.p_early_axis.hi};
      cj["p_late_range"] = {c.p_late_axis.lo, c.p_late_axis.hi};
      cj["step"] = c.p_early_axis.step;
      cj["t_star"] = c.t_star;
    } else {
      cj["p_range"] = {c.p_axis.lo, c.p_axis.hi};
      cj["q_range"] = {c.q_axis.lo, c.q_axis.hi};
      cj["step"] = c.p_axis.step;
    }
    cj["power_floor"] = c.power_floor;
    cj["refine_step"] = c.refine_step;
    j["calibrate"] = cj;
  }
  if (config.freq) {
    j["freq"] = {{"kinds", config.freq->kinds},
                 {"size_for_power", config.freq->size_for_power}};
  }
  if (config.spending) {
    ordered_json sj;
    sj["truth"] = config.spending->truth;
    sj["comparators"] = config.spending->comparators;
    ordered_json rules = ordered_json::array();
    for (const auto& r : config.spending->rules) rules.push_back(rule_to_json(r));
    sj["rules"] = rules;
    j["spending"] = sj;
  }
  if (config.simulate) {
    j["simulate"] = {{"replicates", config.simulate->replicates}};
  }
  j["options"] = {{"format", config.options.format},
                  {"threads", config.options.threads},
                  {"seed", config.options.seed},
                  {"out", config.options.out_dir}};
  return j.dump(2) + "\n";
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string oc_rows_csv(const std::vector<OcReportRow>& rows) {
  std::ostringstream os;
  const std::size_t K = rows.empty() ? 0 : rows.front().stage_stop_null.size();
  os << "rule_params,alpha,power,early_stop_null,early_stop_alt,e_n_null,e_n_alt";
  for (std::size_t k = 1; k <= K; ++k) os << ",stage_stop_null_" << k;
  for (std::size_t k = 1; k <= K; ++k) os << ",stage_stop_alt_" << k;
  os << "\n";
  for (const auto& row : rows) {
    os << row.rule_params << "," << fmt10(num10(row.alpha)) << "," << fmt10(num10(row.power))
       << "," << fmt10(num10(row.early_stop_null)) << "," << fmt10(num10(row.early_stop_alt))
       << "," << fmt10(num10(row.e_n_null)) << "," << fmt10(num10(row.e_n_alt));
    for (double v : row.stage_stop_null) os << "," << fmt10(num10(v));
    for (double v : row.stage_stop_alt) os << "," << fmt10(num10(v));
    os << "\n";
  }
  return os.str();
}

std::string oc_rows_json(const std::vector<OcReportRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json j;
    j["rule_params"] = row.rule_params;
    j["alpha"] = num10(row.alpha);
    j["power"] = num10(row.power);
    j["early_stop_null"] = num10(row.early_stop_null);
    j["early_stop_alt"] = num10(row.early_stop_alt);
    j["e_n_null"] = num10(row.e_n_null);
    j["e_n_alt"] = num10(row.e_n_alt);
    ordered_json sn = ordered_json::array(), sa = ordered_json::array();
    for (double v : row.stage_stop_null) sn.push_back(num10(v));
    for (double v : row.stage_stop_alt) sa.push_back(num10(v));
    j["stage_stop_null"] = sn;
    j["stage_stop_alt"] = sa;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

std::string spending_csv(const std::vector<NamedProfile>& profiles) {
  std::ostringstream os;
  os << "design_id,info_fraction,cumulative_prob,truth_label\n";
  for (const auto& p : profiles) {
    for (std::size_t k = 0; k < p.profile.info_fractions.size(); ++k) {
      os << p.design_id << "," << fmt10(num10(p.profile.info_fractions[k])) << ","
         << fmt10(num10(p.profile.cumulative[k])) << "," << p.truth_label << "\n";
    }
  }
  return os.str();
}

std::string spending_json(const std::vector<NamedProfile>& profiles) {
  ordered_json arr = ordered_json::array();
  for (const auto& p : profiles) {
    for (std::size_t k = 0; k < p.profile.info_fractions.size(); ++k) {
      arr.push_back({{"design_id", p.design_id},
                     {"info_fraction", num10(p.profile.info_fractions[k])},
                     {"cumulative_prob", num10(p.profile.cumulative[k])},
                     {"truth_label", p.truth_label}});
    }
  }
  return arr.dump(2) + "\n";
}

std::string sweep_csv(const GridSweep& sweep) {
  std::ostringstream os;
  os << "p_axis1,p_axis2,alpha,power,e_n_null,e_n_alt,early_stop_null,early_stop_alt,skipped\n";
  for (const auto& cell : sweep.cells) {
    os << fmt10(cell.x1) << "," << fmt10(cell.x2) << ",";
    if (cell.skipped) {
      os << ",,,,,,1\n";
    } else {
      os << fmt10(cell.alpha) << "," << fmt10(cell.power) << "," << fmt10(cell.e_n_null) << ","
         << fmt10(cell.e_n_alt) << "," << fmt10(cell.early_stop_null) << ","
         << fmt10(cell.early_stop_alt) << ",0\n";
    }
  }
  return os.str();
}

GridSweep sweep_from_csv(const std::string& text, const std::string& axis1_name,
                         const std::string& axis2_name) {
  GridSweep sweep;
  sweep.axis1_name = axis1_name;
  sweep.axis2_name = axis2_name;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("sweep csv is empty");
  std::vector<SweepCell> cells;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    while (fields.size() < 9) fields.emplace_back();
    SweepCell cell;
    cell.x1 = std::strtod(fields[0].c_str(), nullptr);
    cell.x2 = std::strtod(fields[1].c_str(), nullptr);
    cell.skipped = fields[8] == "1";
    if (!cell.skipped) {
      cell.alpha = std::strtod(fields[2].c_str(), nullptr);
      cell.power = std::strtod(fields[3].c_str(), nullptr);
      cell.e_n_null = std::strtod(fields[4].c_str(), nullptr);
      cell.e_n_alt = std::strtod(fields[5].c_str(), nullptr);
      cell.early_stop_null = std::strtod(fields[6].c_str(), nullptr);
      cell.early_stop_alt = std::strtod(fields[7].c_str(), nullptr);
    }
    cells.push_back(cell);
  }
  for (const auto& cell : cells) {
    if (sweep.axis1.empty() || std::abs(cell.x1 - sweep.axis1.back()) > 1e-12) {
      if (std::find_if(sweep.axis1.begin(), sweep.axis1.end(), [&](double v) {
            return std::abs(v - cell.x1) < 1e-12;
          }) == sweep.axis1.end()) {
        sweep.axis1.push_back(cell.x1);
      }
    }
  }
  const std::size_t rows = sweep.axis1.size();
  if (rows == 0 || cells.size() % rows != 0) {
    throw ConfigError("sweep csv does not form a rectangular grid");
  }
  const std::size_t cols = cells.size() / rows;
  sweep.axis2.reserve(cols);
  for (std::size_t c = 0; c < cols; ++c) sweep.axis2.push_back(cells[c].x2);
  sweep.cells = std::move(cells);
  return sweep;
}

std::string selection_csv(const std::string& x1_name, const std::string& x2_name,
                          const std::vector<CalibrationResult>& rows) {
  std::ostringstream os;
  os << x1_name << "," << x2_name
     << ",alpha,power,early_stop_null,early_stop_alt,e_n_null,e_n_alt\n";
  for (const auto& r : rows) {
    os << fmt10(r.x1) << "," << fmt10(r.x2) << "," << fmt10(num10(r.row.alpha)) << ","
       << fmt10(num10(r.row.power)) << "," << fmt10(num10(r.row.early_stop_null)) << ","
       << fmt10(num10(r.row.early_stop_alt)) << "," << fmt10(num10(r.row.e_n_null)) << ","
       << fmt10(num10(r.row.e_n_alt)) << "\n";
  }
  return os.str();
}

std::string selection_json(const std::string& x1_name, const std::string& x2_name,
                           const std::vector<CalibrationResult>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{x1_name, r.x1},
                   {x2_name, r.x2},
                   {"alpha", num10(r.row.alpha)},
                   {"power", num10(r.row.power)},
                   {"early_stop_null", num10(r.row.early_stop_null)},
                   {"early_stop_alt", num10(r.row.early_stop_alt)},
                   {"e_n_null", num10(r.row.e_n_null)},
                   {"e_n_alt", num10(r.row.e_n_alt)},
                   {"alpha_ok", r.alpha_ok},
                   {"power_ok", r.power_ok}});
  }
  return arr.dump(2) + "\n";
}

std::string freq_design_csv(const std::string& kind, std::int64_t n_total,
                            const FrequentistDesign& design) {
  std::ostringstream os;
  os << "kind,n_total,stage,info_fraction,critical_z,cumulative_spend\n";
  for (std::size_t k = 0; k < design.info_fractions.size(); ++k) {
    os << kind << "," << n_total << "," << (k + 1) << ","
       << fmt10(num10(design.info_fractions[k])) << "," << fmt10(num10(design.critical_z[k]))
       << "," << fmt10(num10(design.cumulative_spend[k])) << "\n";
  }
  return os.str();
}

std::string sim_csv(const std::string& rule_params, const std::string& truth_label,
                    const SimResult& result) {
  std::ostringstream os;
  const std::size_t K = result.stage_stop_freq.size();
  os << "rule_params,truth_label,reject_freq,reject_se,mean_n_total,replicates,seed";
  for (std::size_t k = 1; k <= K; ++k) os << ",stage_stop_" << k << ",stage_se_" << k;
  os << "\n";
  os << rule_params << "," << truth_label << "," << fmt10(num10(result.reject_freq)) << ","
     << fmt10(num10(result.reject_se)) << "," << fmt10(num10(result.mean_n_total)) << ","
     << result.replicates << "," << result.seed;
  for (std::size_t k = 0; k < K; ++k) {
    os << "," << fmt10(num10(result.stage_stop_freq[k])) << ","
       << fmt10(num10(result.stage_stop_se[k]));
  }
  os << "\n";
  return os.str();
}

std::string sim_json(const std::string& rule_params, const std::string& truth_label,
                     const SimResult& result) {
  ordered_json j;
  j["rule_params"] = rule_params;
  j["truth_label"] = truth_label;
  j["reject_freq"] = num10(result.reject_freq);
  j["reject_se"] = num10(result.reject_se);
  j["mean_n_total"] = num10(result.mean_n_total);
  j["replicates"] = result.replicates;
  j["seed"] = result.seed;
  ordered_json freq = ordered_json::array(), se = ordered_json::array();
  for (std::size_t k = 0; k < result.stage_stop_freq.size(); ++k) {
    freq.push_back(num10(result.stage_stop_freq[k]));
    se.push_back(num10(result.stage_stop_se[k]));
  }
  j["stage_stop_freq"] = freq;
  j["stage_stop_se"] = se;
  return j.dump(2) + "\n";
}

}  // namespace bgsd
