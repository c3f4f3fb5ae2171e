#include <doctest.h>

#include <cmath>
#include <vector>

#include "bgsd/freq.hpp"
#include "bgsd/prob.hpp"

using namespace bgsd;

namespace {

// Independent fine-grid recursion oracle: trapezoid sub-density carried on
// the score scale, used to cross-check the module's Gauss-Legendre path.
double oracle_total_crossing(const std::vector<double>& ts, const std::vector<double>& cs) {
  const int G = 4001;
  const double width = 8.0;
  std::vector<double> x(G), g(G);
  double total = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double sI = std::sqrt(ts[k]);
    if (k == 0) {
      total += 1.0 - normal_cdf(cs[0]);
      const double lo = -width, hi = std::min(cs[0], width);
      const double h = (hi - lo) / (G - 1);
      for (int i = 0; i < G; ++i) {
        x[i] = lo + h * i;
        g[i] = std::exp(-0.5 * x[i] * x[i]) / std::sqrt(2.0 * M_PI) * h *
               (i == 0 || i == G - 1 ? 0.5 : 1.0);
      }
      continue;
    }
    const double sIp = std::sqrt(ts[k - 1]);
    const double sdI = std::sqrt(ts[k] - ts[k - 1]);
    double cross = 0.0;
    for (int i = 0; i < G; ++i) {
      cross += g[i] * (1.0 - normal_cdf((cs[k] * sI - x[i] * sIp) / sdI));
    }
    total += cross;
    if (k + 1 == ts.size()) break;
    const double lo = -width, hi = std::min(cs[k], width);
    const double h = (hi - lo) / (G - 1);
    std::vector<double> nx(G), ng(G);
    for (int i = 0; i < G; ++i) {
      const double z = lo + h * i;
      double density = 0.0;
      for (int s = 0; s < G; ++s) {
        const double u = (z * sI - x[s] * sIp) / sdI;
        density += g[s] * std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
      }
      nx[i] = z;
      ng[i] = density * (sI / sdI) * h * (i == 0 || i == G - 1 ? 0.5 : 1.0);
    }
    x = std::move(nx);
    g = std::move(ng);
  }
  return total;
}

}  // namespace

TEST_CASE("spending function anchors") {
  CHECK(spend(SpendingKind::kPocockLike, 0.013, 1.0) == doctest::Approx(0.013).epsilon(1e-12));
  CHECK(spend(SpendingKind::kObfLike, 0.025, 1.0) == doctest::Approx(0.025).epsilon(1e-10));
  CHECK(spend(SpendingKind::kObfLike, 0.025, 0.2) ==
        doctest::Approx(5.388712629450509e-07).epsilon(1e-6));
  CHECK(spend(SpendingKind::kPocockLike, 0.025, 1.0 / 3.0) ==
        doctest::Approx(0.011320810631598533).epsilon(1e-12));
  CHECK_THROWS_AS(spend(SpendingKind::kObfLike, 0.025, 0.0), std::domain_error);
}

TEST_CASE("single-look boundary reduces to the normal quantile") {
  const auto design = solve_boundaries({1.0}, {0.025});
  CHECK(design.critical_z[0] == doctest::Approx(1.959964).epsilon(1e-6));
}

TEST_CASE("five equal looks, conservative-early spending: published boundary values") {
  std::vector<double> ts{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> cum;
  for (double t : ts) cum.push_back(spend(SpendingKind::kObfLike, 0.025, t));
  const auto design = solve_boundaries(ts, cum);
  const std::vector<double> expect{4.8769, 3.3569, 2.6803, 2.2898, 2.0310};
  for (std::size_t k = 0; k < 5; ++k) {
    CHECK(design.critical_z[k] == doctest::Approx(expect[k]).epsilon(2e-3));
  }
}

TEST_CASE("first Pocock-type look is closed form") {
  std::vector<double> ts{0.5, 1.0};
  std::vector<double> cum{spend(SpendingKind::kPocockLike, 0.025, 0.5),
                          spend(SpendingKind::kPocockLike, 0.025, 1.0)};
  const auto design = solve_boundaries(ts, cum);
  CHECK(design.critical_z[0] == doctest::Approx(normal_quantile(1.0 - cum[0])).epsilon(1e-9));
}

TEST_CASE("boundary recursion round-trips its own spend increments") {
  for (auto kind : {SpendingKind::kPocockLike, SpendingKind::kObfLike}) {
    std::vector<double> ts{1.0 / 3.0, 2.0 / 3.0, 1.0};
    std::vector<double> cum;
    for (double t : ts) cum.push_back(spend(kind, 0.025, t));
    const auto design = solve_boundaries(ts, cum);
    const auto oc = oc_normal(design, 0.0, 1.0, 1.0, TruthPoint{});
    double running = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
      running += oc.stage_stop_prob[k];
      CHECK(std::abs(running - cum[k]) <= 1e-8);
    }
    CHECK(std::abs(oc.reject_prob - 0.025) <= 1e-8);
  }
}

TEST_CASE("conservatism ordering of first looks") {
  for (std::size_t K : {3u, 5u}) {
    std::vector<double> ts;
    for (std::size_t k = 1; k <= K; ++k) ts.push_back(static_cast<double>(k) / K);
    auto make = [&](SpendingKind kind) {
      std::vector<double> cum;
      for (double t : ts) cum.push_back(spend(kind, 0.025, t));
      return solve_boundaries(ts, cum);
    };
    CHECK(make(SpendingKind::kObfLike).critical_z[0] >
          make(SpendingKind::kPocockLike).critical_z[0]);
  }
}

TEST_CASE("doubling quadrature nodes moves no critical value by 1e-6") {
  std::vector<double> ts{0.2, 0.4, 0.6, 0.8, 1.0};
  for (auto kind : {SpendingKind::kPocockLike, SpendingKind::kObfLike}) {
    std::vector<double> cum;
    for (double t : ts) cum.push_back(spend(kind, 0.025, t));
    const auto coarse = solve_boundaries(ts, cum, 512);
    const auto fine = solve_boundaries(ts, cum, 1024);
    for (std::size_t k = 0; k < ts.size(); ++k) {
      if (std::isfinite(coarse.critical_z[k])) {
        CHECK(std::abs(coarse.critical_z[k] - fine.critical_z[k]) < 1e-6);
      }
    }
  }
}

TEST_CASE("fixed-z interim boundaries at three standard errors") {
  const auto one = haybittle_peto({1.0}, 0.025);
  CHECK(one.critical_z[0] == doctest::Approx(normal_quantile(0.975)).epsilon(1e-9));

  std::vector<double> ts{1.0 / 3.0, 2.0 / 3.0, 1.0};
  const auto design = haybittle_peto(ts, 0.025);
  CHECK(design.cumulative_spend[0] == doctest::Approx(1.0 - normal_cdf(3.0)).epsilon(1e-6));
  CHECK(design.critical_z[2] > normal_quantile(0.975));
  // total spend is alpha by construction; cross-check with the trapezoid oracle
  const double oracle = oracle_total_crossing(ts, design.critical_z);
  CHECK(std::abs(oracle - 0.025) <= 1e-6);
}

TEST_CASE("total spend equals alpha for every solved design") {
  std::vector<double> ts{0.25, 0.5, 0.75, 1.0};
  for (auto kind : {SpendingKind::kPocockLike, SpendingKind::kObfLike}) {
    std::vector<double> cum;
    for (double t : ts) cum.push_back(spend(kind, 0.025, t));
    const auto design = solve_boundaries(ts, cum);
    CHECK(std::abs(oracle_total_crossing(ts, design.critical_z) - 0.025) <= 1e-6);
  }
}

TEST_CASE("comparator sizing for the two-interim scenario") {
  TrialScenario scenario;  // 0.40 vs 0.25, alpha 0.025, power 0.80
  const std::vector<double> fractions{1.0 / 3.0, 2.0 / 3.0};

  const auto [n_hp, hp] = size_frequentist(SpendingKind::kHaybittlePeto, scenario, fractions);
  CHECK(n_hp == 306);
  const auto [n_p, pocock] = size_frequentist(SpendingKind::kPocockLike, scenario, fractions);
  CHECK(n_p == 356);
  const auto [n_o, obf] = size_frequentist(SpendingKind::kObfLike, scenario, fractions);
  CHECK(n_o == 308);

  // power lands at (or barely above) the target at the sized n
  const double effect = scenario.control_rate - scenario.treatment_rate_alt;
  for (const auto& [n, design] :
       {std::pair{n_hp, hp}, std::pair{n_p, pocock}, std::pair{n_o, obf}}) {
    const double info = binary_info_max(scenario, static_cast<double>(n) / 2.0);
    const auto oc = oc_normal(design, effect, info, static_cast<double>(n),
                              scenario.alt_point());
    CHECK(oc.reject_prob >= 0.79);
    CHECK(oc.reject_prob <= 0.82);
  }
}
