#include <doctest.h>

#include <cmath>

#include "bgsd/calibrate.hpp"
#include "bgsd/io.hpp"

using namespace bgsd;

namespace {

// Small, fast scenario for calibration mechanics: one interim at 1/2.
CalibrationProblem small_problem() {
  CalibrationProblem problem;
  problem.scenario = TrialScenario{0.4, 0.15, 0.05, 0.60};
  problem.fractions = {0.5};
  problem.rounding = Rounding::kNearest;
  return problem;
}

}  // namespace

TEST_CASE("grid axis enumeration") {
  GridAxis axis{0.980, 0.999, 0.0005};
  const auto values = axis.values();
  REQUIRE(values.size() == 39);
  CHECK(values.front() == doctest::Approx(0.980));
  CHECK(values.back() == doctest::Approx(0.999));
  CHECK(values[1] - values[0] == doctest::Approx(0.0005));
  CHECK_THROWS_AS((GridAxis{0.9, 0.8, 0.1}.values()), ConfigError);
}

TEST_CASE("round_sig10 keeps ten significant digits") {
  CHECK(round_sig10(0.123456789012345) == doctest::Approx(0.1234567890).epsilon(1e-12));
  CHECK(round_sig10(0.0) == 0.0);
  CHECK(round_sig10(-352.62267086482206) == doctest::Approx(-352.6226709).epsilon(1e-12));
}

TEST_CASE("strategy-1 sweep marks ordering-violating cells skipped") {
  const auto problem = small_problem();
  const auto sweep = sweep_strategy1(problem, 40, GridAxis{0.90, 0.96, 0.02},
                                     GridAxis{0.90, 0.96, 0.02}, 0.5, 1);
  REQUIRE(sweep.axis1.size() == 4);
  REQUIRE(sweep.axis2.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      const auto& cell = sweep.at(r, c);
      CHECK(cell.skipped == (sweep.axis2[c] > sweep.axis1[r] + 1e-12));
      if (!cell.skipped) {
        CHECK(cell.alpha >= 0.0);
        CHECK(cell.power <= 1.0);
      }
    }
  }
}

TEST_CASE("sweeps are deterministic across worker counts") {
  const auto problem = small_problem();
  const auto a = sweep_strategy1(problem, 40, GridAxis{0.90, 0.97, 0.01},
                                 GridAxis{0.90, 0.97, 0.01}, 0.5, 1);
  const auto b = sweep_strategy1(problem, 40, GridAxis{0.90, 0.97, 0.01},
                                 GridAxis{0.90, 0.97, 0.01}, 0.5, 4);
  CHECK(sweep_csv(a) == sweep_csv(b));

  const auto sa = sweep_strategy2(problem, 40, GridAxis{0.90, 0.94, 0.02},
                                  GridAxis{0.70, 0.90, 0.05}, 1);
  const auto sb = sweep_strategy2(problem, 40, GridAxis{0.90, 0.94, 0.02},
                                  GridAxis{0.70, 0.90, 0.05}, 4);
  CHECK(sweep_csv(sa) == sweep_csv(sb));
}

TEST_CASE("strategy-1 selection: literal guarantee on the grid") {
  const auto problem = small_problem();
  const GridAxis axis{0.90, 0.99, 0.005};
  const auto sweep = sweep_strategy1(problem, 40, axis, axis, 0.5, 0);
  const double nominal = problem.scenario.one_sided_alpha;
  // pure-grid selection (no refinement) so every selected cell is a sweep cell
  const auto rows = select_strategy1(problem, 40, sweep, 0.5, nominal, 0.0, 0.0);
  CHECK(!rows.empty());
  for (const auto& row : rows) {
    CHECK(row.row.alpha <= nominal + 1e-12);
    CHECK(row.alpha_ok);
    // no smaller feasible p_e on the grid for this p_l
    for (std::size_t r = 0; r < sweep.axis1.size(); ++r) {
      const double pe = sweep.axis1[r];
      if (pe >= row.x2 - 1e-12) continue;
      bool found = false;
      std::size_t c = 0;
      for (; c < sweep.axis2.size(); ++c) {
        if (std::abs(sweep.axis2[c] - row.x1) < 1e-12) {
          found = true;
          break;
        }
      }
      REQUIRE(found);
      const auto& cell = sweep.at(r, c);
      if (!cell.skipped) CHECK(cell.alpha > nominal);
    }
  }
}

TEST_CASE("strategy-1 selection honors the power floor") {
  const auto problem = small_problem();
  const GridAxis axis{0.90, 0.99, 0.01};
  const auto sweep = sweep_strategy1(problem, 40, axis, axis, 0.5, 0);
  const auto none = select_strategy1(problem, 40, sweep, 0.5,
                                     problem.scenario.one_sided_alpha, 1.0, 0.0);
  CHECK(none.empty());
}

TEST_CASE("strategy-2 selection refines between grid cells") {
  auto problem = small_problem();
  const GridAxis p_axis{0.93, 0.95, 0.01};
  const GridAxis q_axis{0.55, 0.95, 0.05};
  const auto sweep = sweep_strategy2(problem, 40, p_axis, q_axis, 0);
  const double nominal = problem.scenario.one_sided_alpha;
  const auto rows = select_strategy2(problem, 40, sweep, nominal, 0.0, 1e-4);
  for (const auto& row : rows) {
    CHECK(row.row.alpha <= nominal + 1e-12);
    // the refined threshold is a 1e-4 multiple and one refinement step
    // below it the constraint fails (unless the coarse floor was feasible)
    const double q = row.x2;
    CHECK(std::abs(q * 1e4 - std::round(q * 1e4)) <= 1e-6);
    if (q > q_axis.lo + 1e-9) {
      const auto below = evaluate_predictive(problem, 40, row.x1, q - 1e-4);
      CHECK(round_sig10(below.alpha) > nominal);
    }
  }
}

TEST_CASE("selection from a persisted sweep is byte-identical") {
  const auto problem = small_problem();
  const GridAxis axis{0.90, 0.99, 0.01};
  const auto sweep = sweep_strategy1(problem, 40, axis, axis, 0.5, 0);
  const std::string csv = sweep_csv(sweep);
  const auto reloaded = sweep_from_csv(csv, "p_early", "p_late");
  CHECK(sweep_csv(reloaded) == csv);
  const double nominal = problem.scenario.one_sided_alpha;
  const auto rows_mem = select_strategy1(problem, 40, sweep, 0.5, nominal, 0.0, 1e-4);
  const auto rows_csv = select_strategy1(problem, 40, reloaded, 0.5, nominal, 0.0, 1e-4);
  CHECK(selection_csv("p_early", "p_late", rows_mem) ==
        selection_csv("p_early", "p_late", rows_csv));
}

TEST_CASE("baseline search accepts the first n whose calibrated p reaches power") {
  auto problem = small_problem();
  problem.scenario.target_power = 0.55;
  const auto result = calibrate_baseline(problem, GridAxis{20, 60, 4},
                                         GridAxis{0.90, 0.98, 0.01}, 0);
  REQUIRE(result.feasible);
  CHECK(result.result.row.alpha <= problem.scenario.one_sided_alpha + 1e-12);
  CHECK(result.result.row.power >= 0.55);
  // every smaller n in the range fails: its smallest feasible p lacks power
  for (std::size_t r = 0; r < result.sweep.axis1.size(); ++r) {
    const auto n = static_cast<std::int64_t>(result.sweep.axis1[r]);
    if (n >= result.n_total) continue;
    for (std::size_t c = 0; c < result.sweep.axis2.size(); ++c) {
      const auto& cell = result.sweep.at(r, c);
      if (cell.alpha <= problem.scenario.one_sided_alpha) {
        CHECK(cell.power < 0.55);
        break;
      }
    }
  }
}

TEST_CASE("baseline search: vacuous power constraint takes the smallest n") {
  auto problem = small_problem();
  problem.scenario.target_power = 0.0;
  const auto result = calibrate_baseline(problem, GridAxis{20, 40, 4},
                                         GridAxis{0.90, 0.98, 0.01}, 0);
  REQUIRE(result.feasible);
  CHECK(result.n_total == 20);
  // smallest feasible p for that n (the power-maximizing choice)
  for (std::size_t c = 0; c < result.sweep.axis2.size(); ++c) {
    const auto& cell = result.sweep.at(0, c);
    if (cell.alpha <= problem.scenario.one_sided_alpha) {
      CHECK(result.p == doctest::Approx(cell.x2));
      break;
    }
  }
}

TEST_CASE("baseline search reports infeasibility with the closest miss") {
  auto problem = small_problem();
  problem.scenario.target_power = 0.999;
  const auto result = calibrate_baseline(problem, GridAxis{20, 28, 4},
                                         GridAxis{0.90, 0.95, 0.01}, 0);
  CHECK(!result.feasible);
  CHECK(result.result.row.power < 0.999);
  CHECK(result.result.row.power > 0.0);
}
