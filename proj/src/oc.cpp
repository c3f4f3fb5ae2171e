#include "bgsd/oc.hpp"

#include <algorithm>
#include <cmath>

namespace bgsd {

namespace {

constexpr double kFlushThreshold = 1e-300;
constexpr double kMassBreach = 1e-9;

struct Kahan {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

double kahan_total(const std::vector<double>& v, std::size_t count) {
  Kahan acc;
  for (std::size_t k = 0; k < count; ++k) acc.add(v[k]);
  return acc.sum;
}

}  // namespace

OperatingCharacteristics evaluate(const DesignSpec& spec, const StoppingBoundary& boundary,
                                  const TruthPoint& truth) {
  const auto& ns = spec.schedule.per_arm_cumulative;
  const std::size_t K = ns.size();
  if (boundary.per_stage.size() != K) {
    throw ConfigError("evaluate: boundary and schedule disagree on the number of looks");
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (static_cast<std::int64_t>(boundary.per_stage[k].size()) != ns[k] + 1) {
      throw ConfigError("evaluate: stage " + std::to_string(k + 1) +
                        " boundary has the wrong length");
    }
  }

  const double th0 = truth.control_rate;
  const double th1 = truth.treatment_rate;

  // reach[i * (n_k + 1) + j] = P(arrive at look k at (i, j), no earlier stop)
  const std::size_t max_dim = static_cast<std::size_t>(ns.back()) + 1;
  std::vector<double> reach(max_dim * max_dim, 0.0);
  std::vector<double> scratch(max_dim * max_dim, 0.0);

  {
    const auto rows = binomial_pmf_table(ns[0], th0);
    const auto cols = binomial_pmf_table(ns[0], th1);
    const std::size_t dim = static_cast<std::size_t>(ns[0]) + 1;
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) reach[i * dim + j] = rows[i] * cols[j];
    }
  }

  std::vector<double> stage_stop(K, 0.0);
  double stopped_mass = 0.0;
  double flushed_mass = 0.0;
  double worst_defect = 0.0;

  for (std::size_t k = 0; k < K; ++k) {
    const std::int64_t n = ns[k];
    const std::size_t dim = static_cast<std::size_t>(n) + 1;
    const auto& b = boundary.per_stage[k];

    Kahan stop_acc;
    for (std::size_t i = 0; i < dim; ++i) {
      const std::int32_t jstar = b[i];
      double* row = &reach[i * dim];
      for (std::int32_t j = 0; j <= jstar; ++j) {
        stop_acc.add(row[j]);
        row[j] = 0.0;
      }
    }
    stage_stop[k] = stop_acc.sum;
    stopped_mass += stop_acc.sum;

    // mass audit: stopped so far + surviving + flushed must stay at 1
    const double live = kahan_total(reach, dim * dim);
    const double defect = std::abs(stopped_mass + live + flushed_mass - 1.0);
    worst_defect = std::max(worst_defect, defect);
    if (defect > kMassBreach) {
      throw NumericalError("evaluate: mass conservation breached at look " +
                           std::to_string(k + 1));
    }

    if (k + 1 == K) break;

    const std::int64_t m = ns[k + 1] - n;
    const std::size_t dim2 = static_cast<std::size_t>(ns[k + 1]) + 1;
    const auto ctrl_inc = binomial_pmf_table(m, th0);
    const auto trt_inc = binomial_pmf_table(m, th1);

    // control-arm pass: rows scatter downward, columns unchanged
    std::fill(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(dim2 * dim), 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      const double* src = &reach[i * dim];
      for (std::int64_t di = 0; di <= m; ++di) {
        const double w = ctrl_inc[static_cast<std::size_t>(di)];
        double* dst = &scratch[(i + static_cast<std::size_t>(di)) * dim];
        for (std::size_t j = 0; j < dim; ++j) dst[j] += w * src[j];
      }
    }
    // treatment-arm pass: columns scatter rightward within each row
    std::fill(reach.begin(), reach.begin() + static_cast<std::ptrdiff_t>(dim2 * dim2), 0.0);
    for (std::size_t i = 0; i < dim2; ++i) {
      const double* src = &scratch[i * dim];
      double* dst = &reach[i * dim2];
      for (std::int64_t dj = 0; dj <= m; ++dj) {
        const double w = trt_inc[static_cast<std::size_t>(dj)];
        double* shifted = dst + dj;
        for (std::size_t j = 0; j < dim; ++j) shifted[j] += w * src[j];
      }
    }
    for (std::size_t s = 0; s < dim2 * dim2; ++s) {
      if (reach[s] != 0.0 && reach[s] < kFlushThreshold) {
        flushed_mass += reach[s];
        reach[s] = 0.0;
      }
    }
  }

  OperatingCharacteristics oc;
  oc.truth = truth;
  oc.mass_defect = worst_defect;
  oc.stage_stop_prob = stage_stop;
  Kahan reject;
  for (double s : stage_stop) reject.add(s);
  oc.reject_prob = reject.sum;

  oc.cumulative_profile.info_fractions = spec.schedule.info_fractions();
  double cum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    cum += stage_stop[k];
    oc.cumulative_profile.cumulative.push_back(cum);
  }

  double en = 0.0;
  double early = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    en += static_cast<double>(2 * ns[k]) * stage_stop[k];
    early += stage_stop[k];
  }
  en += static_cast<double>(2 * ns.back()) * (1.0 - early);
  oc.expected_n_total = en;
  return oc;
}

std::pair<SpendingProfile, SpendingProfile> spending_profiles(const DesignSpec& spec,
                                                              const StoppingBoundary& boundary,
                                                              const TruthPoint& null_point,
                                                              const TruthPoint& alt_point) {
  const auto oc_null = evaluate(spec, boundary, null_point);
  const auto oc_alt = evaluate(spec, boundary, alt_point);
  return {oc_null.cumulative_profile, oc_alt.cumulative_profile};
}

OcReportRow stagewise_report(const std::string& rule_params,
                             const OperatingCharacteristics& under_null,
                             const OperatingCharacteristics& under_alt) {
  OcReportRow row;
  row.rule_params = rule_params;
  row.alpha = under_null.reject_prob;
  row.power = under_alt.reject_prob;
  row.early_stop_null = under_null.early_stop_prob();
  row.early_stop_alt = under_alt.early_stop_prob();
  row.e_n_null = under_null.expected_n_total;
  row.e_n_alt = under_alt.expected_n_total;
  row.stage_stop_null = under_null.stage_stop_prob;
  row.stage_stop_alt = under_alt.stage_stop_prob;
  return row;
}

}  // namespace bgsd
