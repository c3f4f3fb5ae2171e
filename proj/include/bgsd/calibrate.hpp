#ifndef BGSD_CALIBRATE_HPP
#define BGSD_CALIBRATE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bgsd/oc.hpp"

namespace bgsd {

// Rounds to 10 significant digits; sweep cells and selection comparisons
// all pass through this so a selection replayed from a persisted sweep is
// byte-identical to one run in process.
double round_sig10(double x);

// Shared calibration inputs: the scenario, the interim schedule template
// and the priors.
struct CalibrationProblem {
  TrialScenario scenario;
  std::vector<double> fractions;  // interim info fractions, final excluded
  Rounding rounding = Rounding::kNearest;
  PriorPair priors;
};

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;

  std::vector<double> values() const;
};

struct SweepCell {
  double x1 = 0.0;
  double x2 = 0.0;
  bool skipped = false;
  double alpha = 0.0;
  double power = 0.0;
  double e_n_null = 0.0;
  double e_n_alt = 0.0;
  double early_stop_null = 0.0;
  double early_stop_alt = 0.0;
};

struct GridSweep {
  std::string axis1_name;
  std::string axis2_name;
  std::vector<double> axis1;
  std::vector<double> axis2;
  std::vector<SweepCell> cells;  // row-major over (axis1, axis2)

  const SweepCell& at(std::size_t i1, std::size_t i2) const {
    return cells[i1 * axis2.size() + i2];
  }
};

struct CalibrationResult {
  double x1 = 0.0;  // outer threshold (p_l, p, or n_total)
  double x2 = 0.0;  // calibrated companion (p_e, q, or p)
  OcReportRow row;
  bool alpha_ok = false;
  bool power_ok = false;
};

// ---- baseline: joint (n_total, p) search ----------------------------------

struct BaselineCalibration {
  bool feasible = false;
  std::int64_t n_total = 0;
  double p = 0.0;
  CalibrationResult result;   // closest miss when infeasible
  GridSweep sweep;            // full (n, p) grid, feeds the surface figures
};

// Scans n ascending (even steps); per n takes the smallest grid p with
// alpha <= nominal; accepts the first n whose calibrated p reaches the
// target power.
BaselineCalibration calibrate_baseline(const CalibrationProblem& problem, GridAxis n_axis,
                                       GridAxis p_axis, int threads = 0);

// ---- strategy 1: two-phase thresholds --------------------------------------

GridSweep sweep_strategy1(const CalibrationProblem& problem, std::int64_t n_total,
                          GridAxis p_early_axis, GridAxis p_late_axis, double t_star,
                          int threads = 0);

// Per p_late: smallest alpha-feasible p_early (>= p_late), refined between
// bracketing grid cells to `refine_step` resolution; rows below the power
// floor are dropped.  refine_step = 0 selects on the raw grid.
std::vector<CalibrationResult> select_strategy1(const CalibrationProblem& problem,
                                                std::int64_t n_total, const GridSweep& sweep,
                                                double t_star, double nominal_alpha,
                                                double power_floor, double refine_step = 1e-4);

// ---- strategy 2: predictive interims ---------------------------------------

GridSweep sweep_strategy2(const CalibrationProblem& problem, std::int64_t n_total,
                          GridAxis p_axis, GridAxis q_axis, int threads = 0);

// Per p: smallest alpha-feasible q, refined to `refine_step`; when the
// grid floor itself is feasible the search extends below it (coarse steps
// down to 0.5) before refining.  Rows with no feasible q are dropped.
std::vector<CalibrationResult> select_strategy2(const CalibrationProblem& problem,
                                                std::int64_t n_total, const GridSweep& sweep,
                                                double nominal_alpha, double power_floor = 0.0,
                                                double refine_step = 1e-4);

// Single-cell evaluation helpers shared by sweeps, selection refinement and
// the acceptance suite.
OcReportRow evaluate_two_phase(const CalibrationProblem& problem, std::int64_t n_total,
                               double p_early, double p_late, double t_star);
OcReportRow evaluate_predictive(const CalibrationProblem& problem, std::int64_t n_total,
                                double p_final, double q_interim);
OcReportRow evaluate_fixed(const CalibrationProblem& problem, std::int64_t n_total, double p);

}  // namespace bgsd

#endif  // BGSD_CALIBRATE_HPP
