#include "bgsd/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "bgsd/parallel.hpp"

namespace bgsd {

double round_sig10(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9e", x);
  return std::strtod(buf, nullptr);
}

std::vector<double> GridAxis::values() const {
  if (!(step > 0.0)) throw ConfigError("grid axis step must be positive");
  if (hi < lo) throw ConfigError("grid axis upper end below lower end");
  const auto count = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = lo + static_cast<double>(k) * step;
  if (std::abs(out.back() - hi) < 0.25 * step) out.back() = hi;
  return out;
}

namespace {

// Per-stage posterior tables for one schedule, shared across grid cells.
struct StageSet {
  AnalysisSchedule schedule;
  PriorPair priors;
  std::vector<StageCriterionTable> posterior;

  StageSet(const CalibrationProblem& problem, std::int64_t n_total)
      : schedule(build_schedule(n_total, problem.fractions, problem.rounding)),
        priors(problem.priors) {
    posterior.reserve(schedule.looks());
    for (std::size_t k = 0; k < schedule.looks(); ++k) {
      posterior.emplace_back(posterior_table(schedule.per_arm_cumulative[k], priors));
    }
  }
};

void check_nondecreasing(const std::vector<std::int32_t>& b, std::size_t stage) {
  for (std::size_t i = 1; i < b.size(); ++i) {
    if (b[i] < b[i - 1]) {
      throw NumericalError("stage " + std::to_string(stage + 1) +
                           " boundary not nondecreasing in control count");
    }
  }
}

OcReportRow eval_boundary(const CalibrationProblem& problem, const StageSet& stages,
                          StoppingBoundary boundary, const std::string& label) {
  DesignSpec spec{stages.schedule, stages.priors, FixedPosterior{0.5}};
  const auto oc_null = evaluate(spec, boundary, problem.scenario.null_point());
  const auto oc_alt = evaluate(spec, boundary, problem.scenario.alt_point());
  return stagewise_report(label, oc_null, oc_alt);
}

SweepCell cell_from_row(double x1, double x2, const OcReportRow& row) {
  SweepCell cell;
  cell.x1 = x1;
  cell.x2 = x2;
  cell.alpha = round_sig10(row.alpha);
  cell.power = round_sig10(row.power);
  cell.e_n_null = round_sig10(row.e_n_null);
  cell.e_n_alt = round_sig10(row.e_n_alt);
  cell.early_stop_null = round_sig10(row.early_stop_null);
  cell.early_stop_alt = round_sig10(row.early_stop_alt);
  return cell;
}

OcReportRow eval_two_phase_impl(const CalibrationProblem& problem, const StageSet& stages,
                                double p_early, double p_late, double t_star) {
  StoppingBoundary boundary;
  for (std::size_t k = 0; k < stages.schedule.looks(); ++k) {
    const double p = stages.schedule.info_fraction(k) < t_star ? p_early : p_late;
    auto b = stages.posterior[k].boundary(p, &boundary.diagnostics);
    check_nondecreasing(b, k);
    boundary.per_stage.push_back(std::move(b));
  }
  char label[96];
  std::snprintf(label, sizeof(label), "two_phase(%.4f,%.4f)", p_early, p_late);
  return eval_boundary(problem, stages, std::move(boundary), label);
}

// Predictive tables for one final threshold, reused over the q axis.
struct PredictiveContext {
  const CalibrationProblem& problem;
  const StageSet& stages;
  double p_final;
  std::vector<std::int32_t> final_boundary;
  std::vector<StageCriterionTable> pp;

  PredictiveContext(const CalibrationProblem& prob, const StageSet& s, double p)
      : problem(prob), stages(s), p_final(p) {
    std::vector<std::string> diag;
    final_boundary = s.posterior.back().boundary(p, &diag);
    check_nondecreasing(final_boundary, s.schedule.looks() - 1);
    for (std::size_t k = 0; k + 1 < s.schedule.looks(); ++k) {
      pp.emplace_back(predictive_table(s.schedule.per_arm_cumulative[k],
                                       s.schedule.per_arm_max(), s.priors, final_boundary));
    }
  }

  OcReportRow eval(double q) const {
    StoppingBoundary boundary;
    for (std::size_t k = 0; k + 1 < stages.schedule.looks(); ++k) {
      auto b = pp[k].boundary(q, &boundary.diagnostics);
      check_nondecreasing(b, k);
      boundary.per_stage.push_back(std::move(b));
    }
    boundary.per_stage.push_back(final_boundary);
    char label[96];
    std::snprintf(label, sizeof(label), "predictive_hybrid(%.4f,%.4f)", p_final, q);
    return eval_boundary(problem, stages, std::move(boundary), label);
  }
};

// Smallest alpha-feasible inner threshold for one outer value, refined to
// `refine_step` between the bracketing grid cells.  `eval` returns the OC
// row at an arbitrary inner threshold; `grid_alpha(idx)` reads the sweep.
// Returns the refined threshold or nullopt when nothing feasible.
template <typename EvalFn>
std::optional<double> select_inner(const std::vector<double>& inner_grid,
                                   const std::vector<std::optional<double>>& grid_alpha,
                                   double nominal_alpha, double refine_step,
                                   bool extend_below_floor, double inner_hard_floor,
                                   const EvalFn& eval) {
  std::optional<std::size_t> first_feasible;
  for (std::size_t idx = 0; idx < inner_grid.size(); ++idx) {
    if (grid_alpha[idx] && *grid_alpha[idx] <= nominal_alpha) {
      first_feasible = idx;
      break;
    }
  }
  if (!first_feasible) return std::nullopt;

  double hi = inner_grid[*first_feasible];
  double lo;  // last known infeasible (or hard floor)
  const double step = inner_grid.size() > 1 ? inner_grid[1] - inner_grid[0] : refine_step;
  if (*first_feasible > 0 && grid_alpha[*first_feasible - 1]) {
    lo = inner_grid[*first_feasible - 1];
  } else if (*first_feasible == 0 && extend_below_floor) {
    lo = hi;
    while (lo - step >= inner_hard_floor) {
      const double cand = lo - step;
      if (round_sig10(eval(cand).alpha) <= nominal_alpha) {
        hi = cand;
        lo = cand;
      } else {
        lo = cand;
        break;
      }
    }
    if (lo == hi) return hi;  // feasible all the way to the floor
  } else {
    return hi;  // ordering bound sits directly below; nothing to refine
  }

  if (!(refine_step > 0.0)) return hi;
  // candidates: multiples of refine_step in (lo, hi]
  const auto lo_k = static_cast<std::int64_t>(std::floor(lo / refine_step + 0.5)) + 1;
  const auto hi_k = static_cast<std::int64_t>(std::floor(hi / refine_step + 0.5));
  if (hi_k <= lo_k) return hi;
  std::int64_t a = lo_k, b = hi_k;  // feasibility is monotone in the threshold
  while (a < b) {
    const std::int64_t mid = a + (b - a) / 2;
    const double cand = static_cast<double>(mid) * refine_step;
    if (round_sig10(eval(cand).alpha) <= nominal_alpha) {
      b = mid;
    } else {
      a = mid + 1;
    }
  }
  return static_cast<double>(a) * refine_step;
}

}  // namespace

OcReportRow evaluate_two_phase(const CalibrationProblem& problem, std::int64_t n_total,
                               double p_early, double p_late, double t_star) {
  StageSet stages(problem, n_total);
  return eval_two_phase_impl(problem, stages, p_early, p_late, t_star);
}

OcReportRow evaluate_fixed(const CalibrationProblem& problem, std::int64_t n_total, double p) {
  return evaluate_two_phase(problem, n_total, p, p, 1.0);
}

OcReportRow evaluate_predictive(const CalibrationProblem& problem, std::int64_t n_total,
                                double p_final, double q_interim) {
  StageSet stages(problem, n_total);
  PredictiveContext ctx(problem, stages, p_final);
  return ctx.eval(q_interim);
}

BaselineCalibration calibrate_baseline(const CalibrationProblem& problem, GridAxis n_axis,
                                       GridAxis p_axis, int threads) {
  BaselineCalibration out;
  out.sweep.axis1_name = "n_total";
  out.sweep.axis2_name = "p";
  out.sweep.axis1 = n_axis.values();
  out.sweep.axis2 = p_axis.values();
  for (double n : out.sweep.axis1) {
    const auto ni = static_cast<std::int64_t>(std::llround(n));
    if (ni % 2 != 0) throw ConfigError("baseline n grid must contain even totals");
  }
  const std::size_t rows = out.sweep.axis1.size();
  const std::size_t cols = out.sweep.axis2.size();
  out.sweep.cells.assign(rows * cols, SweepCell{});

  parallel_for_index(rows, threads, [&](std::size_t r) {
    const auto n_total = static_cast<std::int64_t>(std::llround(out.sweep.axis1[r]));
    StageSet stages(problem, n_total);
    for (std::size_t c = 0; c < cols; ++c) {
      const double p = out.sweep.axis2[c];
      const auto row = eval_two_phase_impl(problem, stages, p, p, 1.0);
      out.sweep.cells[r * cols + c] = cell_from_row(static_cast<double>(n_total), p, row);
    }
  });

  const double nominal = problem.scenario.one_sided_alpha;
  const double target = problem.scenario.target_power;
  double best_power = -1.0;
  double min_alpha = 2.0;  // closest miss fallback when nothing is feasible
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const SweepCell& cell = out.sweep.at(r, c);
      if (cell.alpha > nominal) {
        if (best_power < 0.0 && cell.alpha < min_alpha) {
          min_alpha = cell.alpha;
          out.result.x1 = cell.x1;
          out.result.x2 = cell.x2;
          out.result.alpha_ok = false;
          out.result.power_ok = false;
        }
        continue;
      }
      // smallest feasible p for this n
      if (!out.feasible && cell.power >= target) {
        out.feasible = true;
        out.n_total = static_cast<std::int64_t>(std::llround(cell.x1));
        out.p = cell.x2;
        out.result.x1 = cell.x1;
        out.result.x2 = cell.x2;
        out.result.row = evaluate_fixed(problem, out.n_total, out.p);
        out.result.alpha_ok = true;
        out.result.power_ok = true;
        return out;
      }
      if (cell.power > best_power) {
        best_power = cell.power;
        out.result.x1 = cell.x1;
        out.result.x2 = cell.x2;
        out.result.alpha_ok = true;
        out.result.power_ok = false;
      }
      break;  // only the smallest feasible p per n competes
    }
  }
  if (best_power >= 0.0 || min_alpha < 2.0) {
    out.result.row = evaluate_fixed(
        problem, static_cast<std::int64_t>(std::llround(out.result.x1)), out.result.x2);
  }
  return out;
}

GridSweep sweep_strategy1(const CalibrationProblem& problem, std::int64_t n_total,
                          GridAxis p_early_axis, GridAxis p_late_axis, double t_star,
                          int threads) {
  if (!(t_star > 0.0 && t_star <= 1.0)) throw ConfigError("t_star must lie in (0,1]");
  GridSweep sweep;
  sweep.axis1_name = "p_early";
  sweep.axis2_name = "p_late";
  sweep.axis1 = p_early_axis.values();
  sweep.axis2 = p_late_axis.values();
  const std::size_t cols = sweep.axis2.size();
  sweep.cells.assign(sweep.axis1.size() * cols, SweepCell{});

  StageSet stages(problem, n_total);
  parallel_for_index(sweep.cells.size(), threads, [&](std::size_t idx) {
    const double pe = sweep.axis1[idx / cols];
    const double pl = sweep.axis2[idx % cols];
    SweepCell& cell = sweep.cells[idx];
    if (pl > pe + 1e-12) {
      cell = SweepCell{};
      cell.x1 = pe;
      cell.x2 = pl;
      cell.skipped = true;
      return;
    }
    cell = cell_from_row(pe, pl, eval_two_phase_impl(problem, stages, pe, pl, t_star));
  });
  return sweep;
}

std::vector<CalibrationResult> select_strategy1(const CalibrationProblem& problem,
                                                std::int64_t n_total, const GridSweep& sweep,
                                                double t_star, double nominal_alpha,
                                                double power_floor, double refine_step) {
  StageSet stages(problem, n_total);
  std::vector<CalibrationResult> out;
  for (std::size_t c = 0; c < sweep.axis2.size(); ++c) {
    const double pl = sweep.axis2[c];
    std::vector<std::optional<double>> alphas(sweep.axis1.size());
    for (std::size_t r = 0; r < sweep.axis1.size(); ++r) {
      const SweepCell& cell = sweep.at(r, c);
      if (!cell.skipped) alphas[r] = cell.alpha;
    }
    auto eval = [&](double pe) { return eval_two_phase_impl(problem, stages, pe, pl, t_star); };
    const auto selected = select_inner(sweep.axis1, alphas, nominal_alpha, refine_step,
                                       /*extend_below_floor=*/false, pl, eval);
    if (!selected) continue;
    CalibrationResult result;
    result.x1 = pl;
    result.x2 = *selected;
    result.row = eval(*selected);
    result.alpha_ok = round_sig10(result.row.alpha) <= nominal_alpha;
    result.power_ok = result.row.power >= power_floor;
    if (result.power_ok) out.push_back(std::move(result));
  }
  return out;
}

GridSweep sweep_strategy2(const CalibrationProblem& problem, std::int64_t n_total,
                          GridAxis p_axis, GridAxis q_axis, int threads) {
  GridSweep sweep;
  sweep.axis1_name = "p";
  sweep.axis2_name = "q";
  sweep.axis1 = p_axis.values();
  sweep.axis2 = q_axis.values();
  const std::size_t cols = sweep.axis2.size();
  sweep.cells.assign(sweep.axis1.size() * cols, SweepCell{});

  StageSet stages(problem, n_total);
  parallel_for_index(sweep.axis1.size(), threads, [&](std::size_t r) {
    const double p = sweep.axis1[r];
    PredictiveContext ctx(problem, stages, p);
    for (std::size_t c = 0; c < cols; ++c) {
      sweep.cells[r * cols + c] = cell_from_row(p, sweep.axis2[c], ctx.eval(sweep.axis2[c]));
    }
  });
  return sweep;
}

std::vector<CalibrationResult> select_strategy2(const CalibrationProblem& problem,
                                                std::int64_t n_total, const GridSweep& sweep,
                                                double nominal_alpha, double power_floor,
                                                double refine_step) {
  StageSet stages(problem, n_total);
  std::vector<CalibrationResult> out;
  for (std::size_t r = 0; r < sweep.axis1.size(); ++r) {
    const double p = sweep.axis1[r];
    PredictiveContext ctx(problem, stages, p);
    std::vector<std::optional<double>> alphas(sweep.axis2.size());
    for (std::size_t c = 0; c < sweep.axis2.size(); ++c) alphas[c] = sweep.at(r, c).alpha;
    auto eval = [&](double q) { return ctx.eval(q); };
    const auto selected = select_inner(sweep.axis2, alphas, nominal_alpha, refine_step,
                                       /*extend_below_floor=*/true, 0.5, eval);
    if (!selected) continue;
    CalibrationResult result;
    result.x1 = p;
    result.x2 = *selected;
    result.row = ctx.eval(*selected);
    result.alpha_ok = round_sig10(result.row.alpha) <= nominal_alpha;
    result.power_ok = result.row.power >= power_floor;
    if (result.power_ok) out.push_back(std::move(result));
  }
  return out;
}

}  // namespace bgsd
