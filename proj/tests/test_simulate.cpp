#include <doctest.h>

#include <cmath>

#include "bgsd/oc.hpp"
#include "bgsd/simulate.hpp"

using namespace bgsd;

namespace {

AnalysisSchedule schedule_of(std::vector<std::int64_t> per_arm) {
  AnalysisSchedule s;
  s.per_arm_cumulative = std::move(per_arm);
  return s;
}

}  // namespace

TEST_CASE("never-stopping boundary gives zero rejections and full enrolment") {
  DesignSpec spec{schedule_of({3, 6}), PriorPair{}, FixedPosterior{0.9}};
  StoppingBoundary boundary;
  boundary.per_stage = {std::vector<std::int32_t>(4, -1), std::vector<std::int32_t>(7, -1)};
  const auto result = simulate(spec, boundary, TruthPoint{0.4, 0.2, "custom"}, 20000, 7);
  CHECK(result.reject_freq == 0.0);
  CHECK(result.mean_n_total == doctest::Approx(12.0));
}

TEST_CASE("hand-enumerated single look within Monte Carlo error") {
  DesignSpec spec{schedule_of({2}), PriorPair{}, FixedPosterior{0.9}};
  const auto boundary = compile(spec);
  const auto result =
      simulate(spec, boundary, TruthPoint{0.5, 0.5, "custom"}, 1000000, 20260810);
  CHECK(std::abs(result.reject_freq - 0.0625) <= 3.5 * result.reject_se);
}

TEST_CASE("seed determinism across worker counts") {
  DesignSpec spec{schedule_of({5, 10, 15}), PriorPair{}, FixedPosterior{0.93}};
  const auto boundary = compile(spec);
  const TruthPoint truth{0.4, 0.25, "alternative"};
  const auto one = simulate(spec, boundary, truth, 50000, 99, 1);
  const auto four = simulate(spec, boundary, truth, 50000, 99, 4);
  const auto sixteen = simulate(spec, boundary, truth, 50000, 99, 16);
  CHECK(one.reject_freq == four.reject_freq);
  CHECK(one.reject_freq == sixteen.reject_freq);
  CHECK(one.mean_n_total == four.mean_n_total);
  CHECK(one.mean_n_total == sixteen.mean_n_total);
  for (std::size_t k = 0; k < one.stage_stop_freq.size(); ++k) {
    CHECK(one.stage_stop_freq[k] == four.stage_stop_freq[k]);
    CHECK(one.stage_stop_freq[k] == sixteen.stage_stop_freq[k]);
  }
  // different seed, different stream
  const auto other = simulate(spec, boundary, truth, 50000, 100, 4);
  CHECK(other.reject_freq != one.reject_freq);
}

TEST_CASE("simulator agrees with the exact engine on a regression set") {
  TrialScenario scenario;
  std::vector<DesignSpec> designs;
  designs.push_back({schedule_of({10, 20}), PriorPair{}, FixedPosterior{0.95}});
  designs.push_back({schedule_of({8, 16, 24}), PriorPair{}, TwoPhasePosterior{0.99, 0.95, 0.5}});
  designs.push_back({schedule_of({6, 12, 18}), PriorPair{}, PredictiveHybrid{0.95, 0.8}});
  designs.push_back({schedule_of({12, 24}), PriorPair{}, ZBoundary{{2.5, 1.96}}});
  designs.push_back({schedule_of({15, 30}), PriorPair{}, FixedPosterior{0.90}});
  designs.push_back({schedule_of({5, 10, 20}), PriorPair{}, PredictiveHybrid{0.97, 0.9}});
  std::uint64_t seed = 11;
  for (const auto& spec : designs) {
    const auto boundary = compile(spec);
    for (const auto& truth : {scenario.null_point(), scenario.alt_point()}) {
      const auto exact = evaluate(spec, boundary, truth);
      const auto sim = simulate(spec, boundary, truth, 200000, seed++);
      const double se = std::max(sim.reject_se, 1e-6);
      CHECK(std::abs(sim.reject_freq - exact.reject_prob) <= 3.5 * se);
      for (std::size_t k = 0; k < exact.stage_stop_prob.size(); ++k) {
        const double sse = std::max(sim.stage_stop_se[k], 1e-6);
        CHECK(std::abs(sim.stage_stop_freq[k] - exact.stage_stop_prob[k]) <= 3.5 * sse);
      }
    }
  }
}

TEST_CASE("replicate count validation") {
  DesignSpec spec{schedule_of({2}), PriorPair{}, FixedPosterior{0.9}};
  const auto boundary = compile(spec);
  CHECK_THROWS_AS(simulate(spec, boundary, TruthPoint{}, 0, 1), ConfigError);
}
