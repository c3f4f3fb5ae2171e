#ifndef BGSD_BOUNDARY_HPP
#define BGSD_BOUNDARY_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "bgsd/design.hpp"

namespace bgsd {

// Per-analysis integer stopping boundaries: stop for efficacy at look k
// when treatment events j <= per_stage[k][i] given control events i.
// Entry -1 means no treatment count stops at that control count.
struct StoppingBoundary {
  std::vector<std::vector<std::int32_t>> per_stage;
  std::vector<std::string> diagnostics;  // monotonicity fallbacks etc.

  std::size_t looks() const { return per_stage.size(); }
};

// Dense table of a stage criterion value over the (i, j) lattice,
// nonincreasing in j and nondecreasing in i (verified, not assumed).
class StageCriterionTable {
 public:
  StageCriterionTable(std::int64_t n_per_arm, std::vector<double> values);

  std::int64_t n() const { return n_; }
  double at(std::int64_t i, std::int64_t j) const {
    return values_[static_cast<std::size_t>(i * (n_ + 1) + j)];
  }

  // Largest j with value > threshold per i (-1 if none), by binary search
  // after a monotonicity pass; non-monotone rows fall back to a linear
  // scan and are reported in `diagnostics`.
  std::vector<std::int32_t> boundary(double threshold,
                                     std::vector<std::string>* diagnostics = nullptr) const;

 private:
  std::int64_t n_;
  std::vector<double> values_;
  bool rows_monotone_;
};

// Posterior criterion values Pr(theta_t < theta_c | i, j) for a stage of
// per-arm size n.  Integer priors use the exact Beta-Binomial tail route.
StageCriterionTable posterior_table(std::int64_t n_per_arm, const PriorPair& priors);

// Predictive criterion values at an interim of per-arm size n: the
// probability, over both arms' Beta-Binomial futures of m = n_final - n
// patients each, that the final state lands inside `final_boundary`.
StageCriterionTable predictive_table(std::int64_t n_per_arm, std::int64_t n_final_per_arm,
                                     const PriorPair& priors,
                                     const std::vector<std::int32_t>& final_boundary);

// Stage boundary from the posterior criterion at threshold p.
std::vector<std::int32_t> posterior_boundary(const AnalysisSchedule& schedule,
                                             const PriorPair& priors, std::size_t stage,
                                             double p,
                                             std::vector<std::string>* diagnostics = nullptr);

// Stage boundary from the predictive criterion at threshold q, given the
// compiled final-analysis boundary.
std::vector<std::int32_t> predictive_boundary(const AnalysisSchedule& schedule,
                                              const PriorPair& priors, std::size_t stage,
                                              double q,
                                              const std::vector<std::int32_t>& final_boundary,
                                              std::vector<std::string>* diagnostics = nullptr);

// Full two-phase boundary: threshold p_early while t_k < t_star, p_late after.
StoppingBoundary two_phase_boundary(const AnalysisSchedule& schedule, const PriorPair& priors,
                                    double p_early, double p_late, double t_star);

// Frequentist z boundaries mapped onto the event lattice: stop at look k
// iff the pooled two-proportion z statistic favours treatment beyond
// critical_z[k].  Degenerate states (zero pooled variance) never stop.
StoppingBoundary z_to_event_boundary(const AnalysisSchedule& schedule,
                                     const std::vector<double>& critical_z);

// Compiles any decision rule; throws ConfigError on invalid specs.
StoppingBoundary compile(const DesignSpec& spec);

// CSV export (stage, i, j_star), one row per lattice column.
std::string boundary_csv(const StoppingBoundary& boundary);

}  // namespace bgsd

#endif  // BGSD_BOUNDARY_HPP
