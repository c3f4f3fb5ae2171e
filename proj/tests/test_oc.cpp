#include <doctest.h>

#include <cmath>
#include <random>

#include "bgsd/oc.hpp"
#include "support/enumerate.hpp"

using namespace bgsd;

namespace {

AnalysisSchedule schedule_of(std::vector<std::int64_t> per_arm) {
  AnalysisSchedule s;
  s.per_arm_cumulative = std::move(per_arm);
  return s;
}

StoppingBoundary never_stop(const AnalysisSchedule& schedule) {
  StoppingBoundary b;
  for (std::size_t k = 0; k < schedule.looks(); ++k) {
    b.per_stage.emplace_back(schedule.per_arm_cumulative[k] + 1, -1);
  }
  return b;
}

}  // namespace

TEST_CASE("single look, two per arm, hand enumeration") {
  DesignSpec spec{schedule_of({2}), PriorPair{}, FixedPosterior{0.9}};
  const auto boundary = compile(spec);
  const auto oc = evaluate(spec, boundary, TruthPoint{0.5, 0.5, "custom"});
  // stops only at (i=2, j=0): 0.25 * 0.25
  CHECK(oc.reject_prob == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(oc.expected_n_total == doctest::Approx(4.0));
}

TEST_CASE("never-stopping design") {
  DesignSpec spec{schedule_of({3, 6, 9}), PriorPair{}, FixedPosterior{0.9}};
  const auto oc = evaluate(spec, never_stop(spec.schedule), TruthPoint{0.3, 0.2, "custom"});
  CHECK(oc.reject_prob == 0.0);
  CHECK(oc.expected_n_total == doctest::Approx(18.0));
  CHECK(oc.early_stop_prob() == 0.0);
}

TEST_CASE("reject probability equals the stage sum and the profile endpoint") {
  DesignSpec spec{schedule_of({4, 8}), PriorPair{}, FixedPosterior{0.85}};
  const auto boundary = compile(spec);
  const auto oc = evaluate(spec, boundary, TruthPoint{0.4, 0.25, "alternative"});
  double total = 0.0;
  for (double s : oc.stage_stop_prob) total += s;
  CHECK(std::abs(oc.reject_prob - total) <= 1e-15);
  CHECK(oc.cumulative_profile.cumulative.back() == doctest::Approx(oc.reject_prob));
}

TEST_CASE("DP equals brute-force path enumeration on 50 randomized designs") {
  std::mt19937_64 rng(8899);
  std::uniform_int_distribution<int> k_dist(1, 3);
  std::uniform_real_distribution<double> rate(0.1, 0.9);
  std::uniform_real_distribution<double> thr(0.55, 0.99);
  for (int rep = 0; rep < 50; ++rep) {
    const int K = k_dist(rng);
    std::vector<std::int64_t> per_arm;
    std::int64_t n = 0;
    for (int k = 0; k < K; ++k) {
      n += 1 + static_cast<std::int64_t>(rng() % 2);  // per-arm n_K <= 6
      per_arm.push_back(n);
    }
    DesignSpec spec{schedule_of(per_arm), PriorPair{}, FixedPosterior{0.9}};
    switch (rep % 4) {
      case 0: spec.rule = FixedPosterior{thr(rng)}; break;
      case 1: {
        double pl = thr(rng), pe = std::min(0.999, pl + 0.02);
        spec.rule = TwoPhasePosterior{pe, pl, 0.5};
        break;
      }
      case 2: spec.rule = PredictiveHybrid{thr(rng), thr(rng)}; break;
      default: {
        std::vector<double> zs;
        for (std::size_t k = 0; k < per_arm.size(); ++k) zs.push_back(0.5 + 2.0 * rate(rng));
        spec.rule = ZBoundary{zs};
        break;
      }
    }
    const auto boundary = compile(spec);
    const TruthPoint truth{rate(rng), rate(rng), "custom"};
    const auto oc = evaluate(spec, boundary, truth);
    const auto brute = bgsd_tests::enumerate_paths(spec, boundary, truth);
    REQUIRE(oc.stage_stop_prob.size() == brute.stage_stop.size());
    for (std::size_t k = 0; k < brute.stage_stop.size(); ++k) {
      CHECK(std::abs(oc.stage_stop_prob[k] - brute.stage_stop[k]) <= 1e-12);
    }
    CHECK(std::abs(oc.reject_prob - brute.reject) <= 1e-12);
    CHECK(std::abs(oc.expected_n_total - brute.expected_n_total) <= 1e-9);
  }
}

TEST_CASE("regression: two-interim reference design, exact kernel values") {
  DesignSpec spec{build_schedule(356, {1.0 / 3.0, 2.0 / 3.0}, Rounding::kNearest), PriorPair{},
                  FixedPosterior{0.9890}};
  const auto boundary = compile(spec);
  TrialScenario scenario;
  const auto oc_null = evaluate(spec, boundary, scenario.null_point());
  const auto oc_alt = evaluate(spec, boundary, scenario.alt_point());
  // frozen from an independent implementation of the same exact recursion
  CHECK(oc_null.reject_prob == doctest::Approx(0.02386116345106813).epsilon(1e-10));
  CHECK(oc_null.stage_stop_prob[0] == doctest::Approx(0.01034088529050057).epsilon(1e-10));
  CHECK(oc_null.stage_stop_prob[1] == doctest::Approx(0.007764393525752419).epsilon(1e-10));
  CHECK(oc_null.expected_n_total == doctest::Approx(352.62267086482206).epsilon(1e-12));
  CHECK(oc_alt.reject_prob == doctest::Approx(0.8009049084189924).epsilon(1e-10));
  CHECK(oc_alt.stage_stop_prob[0] == doctest::Approx(0.2904553173307088).epsilon(1e-10));
  CHECK(oc_alt.expected_n_total == doctest::Approx(249.97106366049255).epsilon(1e-12));
}

TEST_CASE("regression: four-interim reference design, exact kernel values") {
  DesignSpec spec{build_schedule(368, {0.2, 0.4, 0.6, 0.8}, Rounding::kNearest), PriorPair{},
                  FixedPosterior{0.9920}};
  const auto boundary = compile(spec);
  TrialScenario scenario;
  const auto oc_null = evaluate(spec, boundary, scenario.null_point());
  const auto oc_alt = evaluate(spec, boundary, scenario.alt_point());
  CHECK(oc_null.reject_prob == doctest::Approx(0.02462502282266165).epsilon(1e-10));
  CHECK(oc_null.early_stop_prob() == doctest::Approx(0.02129093974106408).epsilon(1e-10));
  CHECK(oc_null.expected_n_total == doctest::Approx(363.6154122214963).epsilon(1e-12));
  CHECK(oc_alt.reject_prob == doctest::Approx(0.7955474974281802).epsilon(1e-10));
  CHECK(oc_alt.early_stop_prob() == doctest::Approx(0.6856205364965526).epsilon(1e-10));
  CHECK(oc_alt.expected_n_total == doctest::Approx(241.10000393093742).epsilon(1e-12));
}

TEST_CASE("tightening every threshold weakly lowers the rejection probability") {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> rate(0.15, 0.85);
  const auto schedule = schedule_of({10, 20, 30});
  for (int rep = 0; rep < 10; ++rep) {
    const double p = 0.7 + 0.02 * static_cast<double>(rep);
    DesignSpec low{schedule, PriorPair{}, FixedPosterior{p}};
    DesignSpec high{schedule, PriorPair{}, FixedPosterior{p + 0.015}};
    const TruthPoint truth{rate(rng), rate(rng), "custom"};
    CHECK(evaluate(high, compile(high), truth).reject_prob <=
          evaluate(low, compile(low), truth).reject_prob + 1e-15);
  }
}

TEST_CASE("stagewise report layout") {
  DesignSpec spec{schedule_of({4, 8}), PriorPair{}, FixedPosterior{0.85}};
  const auto boundary = compile(spec);
  TrialScenario scenario;
  const auto row = stagewise_report("demo", evaluate(spec, boundary, scenario.null_point()),
                                    evaluate(spec, boundary, scenario.alt_point()));
  CHECK(row.rule_params == "demo");
  CHECK(row.stage_stop_null.size() == 2);
  CHECK(row.early_stop_null == doctest::Approx(row.stage_stop_null[0]));
  CHECK(row.alpha <= 1.0);
  // single-look design has no early stopping
  DesignSpec single{schedule_of({6}), PriorPair{}, FixedPosterior{0.85}};
  const auto b1 = compile(single);
  const auto r1 = stagewise_report("one", evaluate(single, b1, scenario.null_point()),
                                   evaluate(single, b1, scenario.alt_point()));
  CHECK(r1.early_stop_null == 0.0);
  CHECK(r1.early_stop_alt == 0.0);
}
