#ifndef BGSD_IO_HPP
#define BGSD_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bgsd/calibrate.hpp"
#include "bgsd/freq.hpp"
#include "bgsd/oc.hpp"
#include "bgsd/simulate.hpp"

namespace bgsd {

// Numbers serialize with 10 significant digits everywhere (CSV and JSON).
std::string fmt10(double x);

struct CalibrateConfig {
  std::string strategy;  // baseline | s1 | s2
  GridAxis n_axis;       // baseline only
  GridAxis p_axis;       // baseline + s2 final threshold
  GridAxis q_axis;       // s2 interim threshold
  GridAxis p_early_axis; // s1
  GridAxis p_late_axis;  // s1
  double t_star = 0.5;
  double power_floor = 0.0;
  double refine_step = 1e-4;
};

struct FreqConfig {
  std::vector<std::string> kinds{"obf_like"};
  bool size_for_power = true;
};

struct SpendingConfig {
  std::string truth = "both";  // null | alternative | both
  std::vector<std::string> comparators;
  std::vector<DecisionRule> rules;  // defaults to the config's rule block
};

struct SimulateConfig {
  std::uint64_t replicates = 100000;
};

struct RunOptions {
  std::string format = "csv";  // csv | json | both
  int threads = 0;
  std::uint64_t seed = 20260810;
  std::string out_dir = "out";
};

struct RunConfig {
  TrialScenario scenario;
  std::int64_t n_total = 0;
  std::vector<double> info_fractions;
  PriorPair priors;
  Rounding rounding = Rounding::kNearest;
  DecisionRule rule;
  std::optional<CalibrateConfig> calibrate;
  std::optional<FreqConfig> freq;
  std::optional<SpendingConfig> spending;
  std::optional<SimulateConfig> simulate;
  RunOptions options;

  AnalysisSchedule schedule() const {
    return build_schedule(n_total, info_fractions, rounding);
  }
  DesignSpec design_spec() const { return DesignSpec{schedule(), priors, rule}; }
  CalibrationProblem calibration_problem() const {
    return CalibrationProblem{scenario, info_fractions, rounding, priors};
  }
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
// Normalized JSON echo; reparsing yields an equivalent RunConfig.
std::string serialize_run_config(const RunConfig& config);

// Atomic write: temp file in the target directory, then rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

// ---- artifact serializers ---------------------------------------------------

std::string oc_rows_csv(const std::vector<OcReportRow>& rows);
std::string oc_rows_json(const std::vector<OcReportRow>& rows);

struct NamedProfile {
  std::string design_id;
  std::string truth_label;
  SpendingProfile profile;
};
std::string spending_csv(const std::vector<NamedProfile>& profiles);
std::string spending_json(const std::vector<NamedProfile>& profiles);

std::string sweep_csv(const GridSweep& sweep);
GridSweep sweep_from_csv(const std::string& text, const std::string& axis1_name,
                         const std::string& axis2_name);

std::string selection_csv(const std::string& x1_name, const std::string& x2_name,
                          const std::vector<CalibrationResult>& rows);
std::string selection_json(const std::string& x1_name, const std::string& x2_name,
                           const std::vector<CalibrationResult>& rows);

std::string freq_design_csv(const std::string& kind, std::int64_t n_total,
                            const FrequentistDesign& design);

std::string sim_csv(const std::string& rule_params, const std::string& truth_label,
                    const SimResult& result);
std::string sim_json(const std::string& rule_params, const std::string& truth_label,
                     const SimResult& result);

}  // namespace bgsd

#endif  // BGSD_IO_HPP
