#ifndef BGSD_FREQ_HPP
#define BGSD_FREQ_HPP

#include <string>
#include <vector>

#include "bgsd/design.hpp"

namespace bgsd {

enum class SpendingKind { kObfLike, kPocockLike, kHaybittlePeto };

SpendingKind spending_kind_from_string(const std::string& s);
std::string to_string(SpendingKind k);

// Cumulative one-sided error spent by information fraction t.
//   obf_like:    2 (1 - Phi(Phi^{-1}(1 - alpha/2) / sqrt(t)))
//   pocock_like: alpha ln(1 + (e - 1) t)
double spend(SpendingKind kind, double alpha, double t);

struct FrequentistDesign {
  std::vector<double> info_fractions;   // ends at 1
  std::vector<double> critical_z;       // +inf sentinel where spend is zero
  std::vector<double> cumulative_spend; // nondecreasing, ends at alpha
};

// Critical values by recursive sub-density integration under the canonical
// joint normal (Corr(Z_k, Z_l) = sqrt(t_k / t_l)), Gauss-Legendre grid on a
// +-8 standardized window, root-finding tolerance 1e-9.
FrequentistDesign solve_boundaries(const std::vector<double>& info_fractions,
                                   const std::vector<double>& cumulative_spend,
                                   int nodes = 512);

// z = 3 at every interim; the final critical value absorbs the remaining
// error so the total equals alpha exactly.
FrequentistDesign haybittle_peto(const std::vector<double>& info_fractions, double alpha,
                                 int nodes = 512);

// Stage-wise crossing probabilities under drift.  Per-look mean of Z_k is
// effect * sqrt(t_k * info_max); expected sample size uses N_k = t_k * n_total.
OperatingCharacteristics oc_normal(const FrequentistDesign& design, double effect,
                                   double info_max, double n_total, const TruthPoint& truth,
                                   int nodes = 512);

// Unpooled per-arm information at n per arm for the scenario's rates.
double binary_info_max(const TrialScenario& scenario, double n_per_arm);

// Smallest (to the even patient) n_total reaching the target power:
// pooled-H0/unpooled-H1 fixed-design size scaled by the design's
// canonical inflation factor.
std::pair<std::int64_t, FrequentistDesign> size_frequentist(SpendingKind kind,
                                                            const TrialScenario& scenario,
                                                            const std::vector<double>& fractions,
                                                            int nodes = 512);

}  // namespace bgsd

#endif  // BGSD_FREQ_HPP
