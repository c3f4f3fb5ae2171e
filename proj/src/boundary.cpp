#include "bgsd/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bgsd {

namespace {

constexpr double kMonotoneSlack = 1e-12;

void verify_boundary_monotone(const std::vector<std::int32_t>& b, std::size_t stage) {
  for (std::size_t i = 1; i < b.size(); ++i) {
    if (b[i] < b[i - 1]) {
      throw NumericalError("stage " + std::to_string(stage + 1) +
                           " boundary is not nondecreasing in the control count at i=" +
                           std::to_string(i));
    }
  }
}

}  // namespace

StageCriterionTable::StageCriterionTable(std::int64_t n_per_arm, std::vector<double> values)
    : n_(n_per_arm), values_(std::move(values)) {
  rows_monotone_ = true;
  for (std::int64_t i = 0; i <= n_ && rows_monotone_; ++i) {
    for (std::int64_t j = 1; j <= n_; ++j) {
      if (at(i, j) > at(i, j - 1) + kMonotoneSlack) {
        rows_monotone_ = false;
        break;
      }
    }
  }
}

std::vector<std::int32_t> StageCriterionTable::boundary(
    double threshold, std::vector<std::string>* diagnostics) const {
  std::vector<std::int32_t> out(static_cast<std::size_t>(n_) + 1, -1);
  for (std::int64_t i = 0; i <= n_; ++i) {
    if (rows_monotone_) {
      // last j with value > threshold; rows are nonincreasing in j
      std::int64_t lo = 0, hi = n_, ans = -1;
      while (lo <= hi) {
        const std::int64_t mid = (lo + hi) / 2;
        if (at(i, mid) > threshold) {
          ans = mid;
          lo = mid + 1;
        } else {
          hi = mid - 1;
        }
      }
      out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(ans);
    } else {
      std::int64_t ans = -1;
      for (std::int64_t j = 0; j <= n_; ++j) {
        if (at(i, j) > threshold) ans = j;
      }
      out[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(ans);
    }
  }
  if (!rows_monotone_ && diagnostics) {
    diagnostics->push_back("criterion not monotone in j at n=" + std::to_string(n_) +
                           "; boundary located by linear scan");
  }
  return out;
}

StageCriterionTable posterior_table(std::int64_t n, const PriorPair& priors) {
  std::vector<double> values(static_cast<std::size_t>((n + 1) * (n + 1)));
  const bool fast = priors.treatment.is_integer();
  if (fast) {
    const auto a1 = static_cast<std::int64_t>(std::llround(priors.treatment.alpha));
    const auto b1 = static_cast<std::int64_t>(std::llround(priors.treatment.beta));
    const std::int64_t m = a1 + b1 + n - 1;  // future-trials length of the tail identity
    for (std::int64_t i = 0; i <= n; ++i) {
      const BetaParams ctrl{priors.control.alpha + static_cast<double>(i),
                            priors.control.beta + static_cast<double>(n - i)};
      const std::vector<double> pmf = beta_binomial_pmf_table(ctrl, m);
      // suffix sums: P(i,j) = Pr(S >= a1 + j), S ~ BetaBinomial(ctrl posterior, m)
      std::vector<double> suffix(pmf.size() + 1, 0.0);
      for (std::size_t s = pmf.size(); s-- > 0;) suffix[s] = suffix[s + 1] + pmf[s];
      for (std::int64_t j = 0; j <= n; ++j) {
        const std::int64_t start = a1 + j;
        values[static_cast<std::size_t>(i * (n + 1) + j)] =
            start <= m ? std::min(1.0, suffix[static_cast<std::size_t>(start)]) : 0.0;
      }
    }
  } else {
    for (std::int64_t i = 0; i <= n; ++i) {
      const BetaParams ctrl{priors.control.alpha + static_cast<double>(i),
                            priors.control.beta + static_cast<double>(n - i)};
      for (std::int64_t j = 0; j <= n; ++j) {
        const BetaParams trt{priors.treatment.alpha + static_cast<double>(j),
                             priors.treatment.beta + static_cast<double>(n - j)};
        values[static_cast<std::size_t>(i * (n + 1) + j)] = beta_superiority_prob(ctrl, trt);
      }
    }
  }
  return StageCriterionTable(n, std::move(values));
}

StageCriterionTable predictive_table(std::int64_t n, std::int64_t n_final,
                                     const PriorPair& priors,
                                     const std::vector<std::int32_t>& final_boundary) {
  if (static_cast<std::int64_t>(final_boundary.size()) != n_final + 1) {
    throw ConfigError("predictive_table: final boundary has wrong length");
  }
  const std::int64_t m = n_final - n;  // per-arm future patients
  const std::size_t cols = static_cast<std::size_t>(m) + 1;
  std::vector<double> values(static_cast<std::size_t>((n + 1) * (n + 1)));

  // Treatment-side future CDF per current j, control-side future pmf per i.
  std::vector<double> trt_cdf(static_cast<std::size_t>(n + 1) * cols);
  for (std::int64_t j = 0; j <= n; ++j) {
    const BetaParams trt{priors.treatment.alpha + static_cast<double>(j),
                         priors.treatment.beta + static_cast<double>(n - j)};
    std::vector<double> pmf = beta_binomial_pmf_table(trt, m);
    double run = 0.0;
    for (std::size_t y = 0; y < cols; ++y) {
      run += pmf[y];
      trt_cdf[static_cast<std::size_t>(j) * cols + y] = std::min(1.0, run);
    }
  }
  for (std::int64_t i = 0; i <= n; ++i) {
    const BetaParams ctrl{priors.control.alpha + static_cast<double>(i),
                          priors.control.beta + static_cast<double>(n - i)};
    const std::vector<double> ctrl_pmf = beta_binomial_pmf_table(ctrl, m);
    for (std::int64_t j = 0; j <= n; ++j) {
      const double* cdf_row = &trt_cdf[static_cast<std::size_t>(j) * cols];
      double pp = 0.0;
      for (std::int64_t di = 0; di <= m; ++di) {
        const std::int64_t limit =
            static_cast<std::int64_t>(final_boundary[static_cast<std::size_t>(i + di)]) - j;
        if (limit >= 0) {
          pp += ctrl_pmf[static_cast<std::size_t>(di)] *
                cdf_row[static_cast<std::size_t>(std::min(limit, m))];
        }
      }
      values[static_cast<std::size_t>(i * (n + 1) + j)] = std::min(1.0, pp);
    }
  }
  return StageCriterionTable(n, std::move(values));
}

std::vector<std::int32_t> posterior_boundary(const AnalysisSchedule& schedule,
                                             const PriorPair& priors, std::size_t stage,
                                             double p, std::vector<std::string>* diagnostics) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("posterior threshold must lie in (0,1)");
  auto b = posterior_table(schedule.per_arm_cumulative[stage], priors).boundary(p, diagnostics);
  verify_boundary_monotone(b, stage);
  return b;
}

std::vector<std::int32_t> predictive_boundary(const AnalysisSchedule& schedule,
                                              const PriorPair& priors, std::size_t stage,
                                              double q,
                                              const std::vector<std::int32_t>& final_boundary,
                                              std::vector<std::string>* diagnostics) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("predictive threshold must lie in (0,1)");
  auto b = predictive_table(schedule.per_arm_cumulative[stage], schedule.per_arm_max(), priors,
                            final_boundary)
               .boundary(q, diagnostics);
  verify_boundary_monotone(b, stage);
  return b;
}

StoppingBoundary two_phase_boundary(const AnalysisSchedule& schedule, const PriorPair& priors,
                                    double p_early, double p_late, double t_star) {
  if (p_late > p_early) throw ConfigError("two-phase rule requires p_late <= p_early");
  StoppingBoundary out;
  for (std::size_t k = 0; k < schedule.looks(); ++k) {
    const double p = schedule.info_fraction(k) < t_star ? p_early : p_late;
    out.per_stage.push_back(posterior_boundary(schedule, priors, k, p, &out.diagnostics));
  }
  return out;
}

StoppingBoundary z_to_event_boundary(const AnalysisSchedule& schedule,
                                     const std::vector<double>& critical_z) {
  if (critical_z.size() != schedule.looks()) {
    throw ConfigError("z boundary needs one critical value per look");
  }
  StoppingBoundary out;
  for (std::size_t k = 0; k < schedule.looks(); ++k) {
    const std::int64_t n = schedule.per_arm_cumulative[k];
    const double c = critical_z[k];
    std::vector<std::int32_t> b(static_cast<std::size_t>(n) + 1, -1);
    for (std::int64_t i = 0; i <= n; ++i) {
      std::int32_t best = -1;
      for (std::int64_t j = 0; j <= n; ++j) {
        const std::int64_t events = i + j;
        if (events == 0 || events == 2 * n) continue;  // zero pooled variance
        const double pooled = static_cast<double>(events) / static_cast<double>(2 * n);
        const double se = std::sqrt(pooled * (1.0 - pooled) * 2.0 / static_cast<double>(n));
        const double z = (static_cast<double>(j) - static_cast<double>(i)) /
                         (static_cast<double>(n) * se);
        if (z <= -c) {
          best = static_cast<std::int32_t>(j);
        } else if (best >= 0) {
          break;  // stop region is a lower set in j
        }
      }
      b[static_cast<std::size_t>(i)] = best;
    }
    verify_boundary_monotone(b, k);
    out.per_stage.push_back(std::move(b));
  }
  return out;
}

StoppingBoundary compile(const DesignSpec& spec) {
  const auto problems = validate(spec);
  if (!problems.empty()) {
    std::string msg = "invalid design:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  const auto& schedule = spec.schedule;
  if (const auto* f = std::get_if<FixedPosterior>(&spec.rule)) {
    return two_phase_boundary(schedule, spec.priors, f->p, f->p, 1.0);
  }
  if (const auto* t = std::get_if<TwoPhasePosterior>(&spec.rule)) {
    return two_phase_boundary(schedule, spec.priors, t->p_early, t->p_late, t->t_star);
  }
  if (const auto* h = std::get_if<PredictiveHybrid>(&spec.rule)) {
    StoppingBoundary out;
    const std::size_t K = schedule.looks();
    auto final_b =
        posterior_boundary(schedule, spec.priors, K - 1, h->p_final, &out.diagnostics);
    for (std::size_t k = 0; k + 1 < K; ++k) {
      out.per_stage.push_back(predictive_boundary(schedule, spec.priors, k, h->q_interim,
                                                  final_b, &out.diagnostics));
    }
    out.per_stage.push_back(std::move(final_b));
    return out;
  }
  const auto& z = std::get<ZBoundary>(spec.rule);
  return z_to_event_boundary(schedule, z.critical_z);
}

std::string boundary_csv(const StoppingBoundary& boundary) {
  std::ostringstream os;
  os << "stage,i,j_star\n";
  for (std::size_t k = 0; k < boundary.per_stage.size(); ++k) {
    const auto& b = boundary.per_stage[k];
    for (std::size_t i = 0; i < b.size(); ++i) {
      os << (k + 1) << "," << i << "," << b[i] << "\n";
    }
  }
  return os.str();
}

}  // namespace bgsd
