#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bgsd/io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumerical = 4;

struct CliOverrides {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> rounding;
  std::optional<std::uint64_t> replicates;
};

bgsd::RunConfig load_config(const CliOverrides& cli) {
  auto config = bgsd::load_run_config(cli.config_path);
  if (cli.out_dir) config.options.out_dir = *cli.out_dir;
  if (cli.format) config.options.format = *cli.format;
  if (cli.threads) config.options.threads = *cli.threads;
  if (cli.seed) config.options.seed = *cli.seed;
  if (cli.rounding) config.rounding = bgsd::rounding_from_string(*cli.rounding);
  if (cli.replicates) {
    if (!config.simulate) config.simulate = bgsd::SimulateConfig{};
    config.simulate->replicates = *cli.replicates;
  }
  const auto problems = bgsd::validate(config.design_spec());
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw bgsd::ConfigError(msg);
  }
  return config;
}

void write_artifact(const bgsd::RunConfig& config, const std::string& stem,
                    const std::string& csv, const std::string& json) {
  const fs::path dir(config.options.out_dir);
  if (config.options.format == "csv" || config.options.format == "both") {
    bgsd::write_text_atomic(dir / (stem + ".csv"), csv);
  }
  if ((config.options.format == "json" || config.options.format == "both") && !json.empty()) {
    bgsd::write_text_atomic(dir / (stem + ".json"), json);
  }
}

int cmd_evaluate(const bgsd::RunConfig& config) {
  const auto spec = config.design_spec();
  const auto boundary = bgsd::compile(spec);
  const auto oc_null = bgsd::evaluate(spec, boundary, config.scenario.null_point());
  const auto oc_alt = bgsd::evaluate(spec, boundary, config.scenario.alt_point());
  const auto row = bgsd::stagewise_report(bgsd::rule_label(config.rule), oc_null, oc_alt);
  write_artifact(config, "oc", bgsd::oc_rows_csv({row}), bgsd::oc_rows_json({row}));
  bgsd::write_text_atomic(fs::path(config.options.out_dir) / "boundary.csv",
                          bgsd::boundary_csv(boundary));
  std::cout << "alpha=" << bgsd::fmt10(row.alpha) << " power=" << bgsd::fmt10(row.power)
            << " e_n_null=" << bgsd::fmt10(row.e_n_null)
            << " e_n_alt=" << bgsd::fmt10(row.e_n_alt) << "\n";
  return kExitOk;
}

int cmd_spending(const bgsd::RunConfig& config) {
  bgsd::SpendingConfig spending =
      config.spending.value_or(bgsd::SpendingConfig{"both", {}, {}});
  if (spending.rules.empty()) spending.rules = {config.rule};

  const bool want_null = spending.truth == "null" || spending.truth == "both";
  const bool want_alt = spending.truth == "alternative" || spending.truth == "both";
  if (!want_null && !want_alt) {
    throw bgsd::ConfigError("spending.truth must be null, alternative or both");
  }

  std::vector<bgsd::NamedProfile> profiles;
  for (const auto& rule : spending.rules) {
    bgsd::DesignSpec spec{config.schedule(), config.priors, rule};
    const auto boundary = bgsd::compile(spec);
    const auto [null_profile, alt_profile] = bgsd::spending_profiles(
        spec, boundary, config.scenario.null_point(), config.scenario.alt_point());
    if (want_null) profiles.push_back({bgsd::rule_label(rule), "null", null_profile});
    if (want_alt) profiles.push_back({bgsd::rule_label(rule), "alternative", alt_profile});
  }

  const auto ts = config.schedule().info_fractions();
  for (const auto& name : spending.comparators) {
    const auto kind = bgsd::spending_kind_from_string(name);
    bgsd::FrequentistDesign design;
    if (kind == bgsd::SpendingKind::kHaybittlePeto) {
      design = bgsd::haybittle_peto(ts, config.scenario.one_sided_alpha);
    } else {
      std::vector<double> cum(ts.size());
      for (std::size_t k = 0; k < ts.size(); ++k) {
        cum[k] = bgsd::spend(kind, config.scenario.one_sided_alpha, ts[k]);
      }
      design = bgsd::solve_boundaries(ts, cum);
    }
    const double n_arm = static_cast<double>(config.n_total) / 2.0;
    const double info_max = bgsd::binary_info_max(config.scenario, n_arm);
    if (want_null) {
      const auto oc = bgsd::oc_normal(design, 0.0, info_max,
                                      static_cast<double>(config.n_total),
                                      config.scenario.null_point());
      profiles.push_back({bgsd::to_string(kind), "null", oc.cumulative_profile});
    }
    if (want_alt) {
      const double effect = config.scenario.control_rate - config.scenario.treatment_rate_alt;
      const auto oc = bgsd::oc_normal(design, effect, info_max,
                                      static_cast<double>(config.n_total),
                                      config.scenario.alt_point());
      profiles.push_back({bgsd::to_string(kind), "alternative", oc.cumulative_profile});
    }
  }
  write_artifact(config, "spending", bgsd::spending_csv(profiles),
                 bgsd::spending_json(profiles));
  std::cout << "wrote " << profiles.size() << " profiles\n";
  return kExitOk;
}

int cmd_calibrate(const bgsd::RunConfig& config) {
  if (!config.calibrate) throw bgsd::ConfigError("config has no calibrate block");
  const auto& cal = *config.calibrate;
  const auto problem = config.calibration_problem();
  const fs::path dir(config.options.out_dir);
  const fs::path sweep_path = dir / "sweep.csv";
  const int threads = config.options.threads;

  auto load_or_run = [&](const std::string& a1, const std::string& a2,
                         auto&& runner) -> bgsd::GridSweep {
    if (fs::exists(sweep_path)) {
      std::ifstream in(sweep_path);
      std::stringstream ss;
      ss << in.rdbuf();
      std::cout << "resuming from persisted sweep " << sweep_path << "\n";
      return bgsd::sweep_from_csv(ss.str(), a1, a2);
    }
    bgsd::GridSweep sweep = runner();
    bgsd::write_text_atomic(sweep_path, bgsd::sweep_csv(sweep));
    return sweep;
  };

  if (cal.strategy == "baseline") {
    // the baseline search owns its sweep (n on the first axis)
    bgsd::BaselineCalibration result;
    if (fs::exists(sweep_path)) {
      std::cout << "note: baseline calibration recomputes its sweep\n";
    }
    result = bgsd::calibrate_baseline(problem, cal.n_axis, cal.p_axis, threads);
    bgsd::write_text_atomic(sweep_path, bgsd::sweep_csv(result.sweep));
    std::vector<bgsd::CalibrationResult> rows;
    if (result.feasible) rows.push_back(result.result);
    write_artifact(config, "selected", bgsd::selection_csv("n_total", "p", rows),
                   bgsd::selection_json("n_total", "p", rows));
    if (!result.feasible) {
      std::cerr << "no feasible (n, p) pair in range; closest miss n="
                << bgsd::fmt10(result.result.x1) << " p=" << bgsd::fmt10(result.result.x2)
                << " power=" << bgsd::fmt10(result.result.row.power) << "\n";
      return kExitInfeasible;
    }
    std::cout << "selected n_total=" << result.n_total << " p=" << bgsd::fmt10(result.p)
              << " alpha=" << bgsd::fmt10(result.result.row.alpha)
              << " power=" << bgsd::fmt10(result.result.row.power) << "\n";
    return kExitOk;
  }

  if (cal.strategy == "s1") {
    const auto sweep = load_or_run("p_early", "p_late", [&] {
      return bgsd::sweep_strategy1(problem, config.n_total, cal.p_early_axis, cal.p_late_axis,
                                   cal.t_star, threads);
    });
    const auto rows =
        bgsd::select_strategy1(problem, config.n_total, sweep, cal.t_star,
                               config.scenario.one_sided_alpha, cal.power_floor, cal.refine_step);
    write_artifact(config, "selected", bgsd::selection_csv("p_early", "p_late", rows),
                   bgsd::selection_json("p_early", "p_late", rows));
    if (rows.empty()) {
      std::cerr << "no calibrated pair satisfies the constraints\n";
      return kExitInfeasible;
    }
    std::cout << "selected " << rows.size() << " designs\n";
    return kExitOk;
  }

  if (cal.strategy == "s2") {
    const auto sweep = load_or_run("p", "q", [&] {
      return bgsd::sweep_strategy2(problem, config.n_total, cal.p_axis, cal.q_axis, threads);
    });
    const auto rows =
        bgsd::select_strategy2(problem, config.n_total, sweep, config.scenario.one_sided_alpha,
                               cal.power_floor, cal.refine_step);
    write_artifact(config, "selected", bgsd::selection_csv("p", "q", rows),
                   bgsd::selection_json("p", "q", rows));
    if (rows.empty()) {
      std::cerr << "no calibrated pair satisfies the constraints\n";
      return kExitInfeasible;
    }
    std::cout << "selected " << rows.size() << " designs\n";
    return kExitOk;
  }
  throw bgsd::ConfigError("unknown calibrate strategy: " + cal.strategy);
}

int cmd_freq(const bgsd::RunConfig& config) {
  const bgsd::FreqConfig freq = config.freq.value_or(bgsd::FreqConfig{});
  const fs::path dir(config.options.out_dir);
  std::vector<bgsd::OcReportRow> rows;
  std::string designs_csv;
  for (const auto& name : freq.kinds) {
    const auto kind = bgsd::spending_kind_from_string(name);
    std::int64_t n_total = config.n_total;
    bgsd::FrequentistDesign design;
    if (freq.size_for_power) {
      std::tie(n_total, design) =
          bgsd::size_frequentist(kind, config.scenario, config.info_fractions);
    } else {
      std::vector<double> ts = config.info_fractions;
      ts.push_back(1.0);
      if (kind == bgsd::SpendingKind::kHaybittlePeto) {
        design = bgsd::haybittle_peto(ts, config.scenario.one_sided_alpha);
      } else {
        std::vector<double> cum(ts.size());
        for (std::size_t k = 0; k < ts.size(); ++k) {
          cum[k] = bgsd::spend(kind, config.scenario.one_sided_alpha, ts[k]);
        }
        design = bgsd::solve_boundaries(ts, cum);
      }
    }
    const double n_arm = static_cast<double>(n_total) / 2.0;
    const double info_max = bgsd::binary_info_max(config.scenario, n_arm);
    const double effect = config.scenario.control_rate - config.scenario.treatment_rate_alt;
    const auto oc_null = bgsd::oc_normal(design, 0.0, info_max, static_cast<double>(n_total),
                                         config.scenario.null_point());
    const auto oc_alt = bgsd::oc_normal(design, effect, info_max, static_cast<double>(n_total),
                                        config.scenario.alt_point());
    rows.push_back(bgsd::stagewise_report(bgsd::to_string(kind) + "(n=" +
                                              std::to_string(n_total) + ")",
                                          oc_null, oc_alt));
    const std::string csv = bgsd::freq_design_csv(bgsd::to_string(kind), n_total, design);
    if (designs_csv.empty()) {
      designs_csv = csv;
    } else {
      designs_csv += csv.substr(csv.find('\n') + 1);  // drop duplicate header
    }
    std::cout << bgsd::to_string(kind) << ": n_total=" << n_total
              << " power=" << bgsd::fmt10(oc_alt.reject_prob)
              << " e_n_alt=" << bgsd::fmt10(oc_alt.expected_n_total) << "\n";
  }
  bgsd::write_text_atomic(dir / "freq_design.csv", designs_csv);
  write_artifact(config, "oc", bgsd::oc_rows_csv(rows), bgsd::oc_rows_json(rows));
  return kExitOk;
}

int cmd_simulate(const bgsd::RunConfig& config) {
  const bgsd::SimulateConfig sim = config.simulate.value_or(bgsd::SimulateConfig{});
  const auto spec = config.design_spec();
  const auto boundary = bgsd::compile(spec);
  const fs::path dir(config.options.out_dir);
  const auto r_null = bgsd::simulate(spec, boundary, config.scenario.null_point(),
                                     sim.replicates, config.options.seed,
                                     config.options.threads);
  const auto r_alt = bgsd::simulate(spec, boundary, config.scenario.alt_point(),
                                    sim.replicates, config.options.seed + 1,
                                    config.options.threads);
  const std::string label = bgsd::rule_label(config.rule);
  std::string csv = bgsd::sim_csv(label, "null", r_null);
  const std::string alt_csv = bgsd::sim_csv(label, "alternative", r_alt);
  csv += alt_csv.substr(alt_csv.find('\n') + 1);
  bgsd::write_text_atomic(dir / "sim.csv", csv);
  if (config.options.format == "json" || config.options.format == "both") {
    bgsd::write_text_atomic(dir / "sim_null.json", bgsd::sim_json(label, "null", r_null));
    bgsd::write_text_atomic(dir / "sim_alt.json", bgsd::sim_json(label, "alternative", r_alt));
  }
  std::cout << "null reject=" << bgsd::fmt10(r_null.reject_freq)
            << " alt reject=" << bgsd::fmt10(r_alt.reject_freq) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact evaluation and calibration for Bayesian group sequential designs"};
  app.require_subcommand(1);

  CliOverrides cli;
  app.add_option("--config", cli.config_path, "Path to the JSON run configuration")
      ->required();
  std::string out_dir, format, rounding;
  int threads = 0;
  std::uint64_t seed = 0, replicates = 0;
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* fmt_opt = app.add_option("--format", format, "csv | json | both");
  auto* thr_opt = app.add_option("--threads", threads, "Worker threads (0 = hardware)");
  auto* seed_opt = app.add_option("--seed", seed, "Master RNG seed");
  auto* rnd_opt = app.add_option("--rounding", rounding, "nearest | floor | ceil");
  auto* rep_opt = app.add_option("--replicates", replicates, "Simulation replicates");

  auto* evaluate = app.add_subcommand("evaluate", "Exact operating characteristics");
  auto* spending = app.add_subcommand("spending", "Cumulative stopping profiles");
  auto* calibrate = app.add_subcommand("calibrate", "Grid sweep and threshold selection");
  auto* freq = app.add_subcommand("freq", "Frequentist comparator designs");
  auto* simulate = app.add_subcommand("simulate", "Seeded Monte Carlo verification");
  auto* print_config = app.add_subcommand("print-config", "Echo the normalized configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (out_opt->count()) cli.out_dir = out_dir;
    if (fmt_opt->count()) cli.format = format;
    if (thr_opt->count()) cli.threads = threads;
    if (seed_opt->count()) cli.seed = seed;
    if (rnd_opt->count()) cli.rounding = rounding;
    if (rep_opt->count()) cli.replicates = replicates;
    const auto config = load_config(cli);

    if (evaluate->parsed()) return cmd_evaluate(config);
    if (spending->parsed()) return cmd_spending(config);
    if (calibrate->parsed()) return cmd_calibrate(config);
    if (freq->parsed()) return cmd_freq(config);
    if (simulate->parsed()) return cmd_simulate(config);
    if (print_config->parsed()) {
      std::cout << bgsd::serialize_run_config(config);
      return kExitOk;
    }
    return kExitConfig;
  } catch (const bgsd::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const bgsd::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const bgsd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}
