#ifndef BGSD_DESIGN_HPP
#define BGSD_DESIGN_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "bgsd/prob.hpp"

namespace bgsd {

// Invalid configuration detected while assembling or parsing a design.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// No design in the searched range satisfies the constraints.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// Two-arm superiority scenario: event rates, one-sided level, target power.
struct TrialScenario {
  double control_rate = 0.40;
  double treatment_rate_alt = 0.25;
  double one_sided_alpha = 0.025;
  double target_power = 0.80;

  struct TruthPoint null_point() const;
  struct TruthPoint alt_point() const;
};

struct TruthPoint {
  double control_rate = 0.5;
  double treatment_rate = 0.5;
  std::string label = "custom";  // null | alternative | custom
};

enum class Rounding { kNearest, kFloor, kCeil };

Rounding rounding_from_string(const std::string& s);
std::string to_string(Rounding r);

// Cumulative per-arm analysis sizes (1:1 allocation).  Information
// fractions derive from the realized sizes, t_k = n_k / n_K.
struct AnalysisSchedule {
  std::vector<std::int64_t> per_arm_cumulative;

  std::size_t looks() const { return per_arm_cumulative.size(); }
  std::int64_t per_arm_max() const { return per_arm_cumulative.back(); }
  std::int64_t n_total() const { return 2 * per_arm_max(); }
  double info_fraction(std::size_t k) const {
    return static_cast<double>(per_arm_cumulative[k]) /
           static_cast<double>(per_arm_max());
  }
  std::vector<double> info_fractions() const;
};

// Builds the per-arm schedule from interim fractions of total enrolment.
// `fractions` excludes the final analysis; the final per-arm size
// n_total/2 is appended.  Collisions after rounding are configuration
// errors.
AnalysisSchedule build_schedule(std::int64_t n_total, const std::vector<double>& fractions,
                                Rounding rounding);

struct PriorPair {
  BetaParams control{1.0, 1.0};
  BetaParams treatment{1.0, 1.0};
};

// Decision rules.  Thresholds are all strict (">").
struct FixedPosterior {
  double p = 0.99;
};
struct TwoPhasePosterior {
  double p_early = 0.999;
  double p_late = 0.99;
  double t_star = 0.5;  // early phase is t_k < t_star
};
struct PredictiveHybrid {
  double p_final = 0.99;    // posterior threshold at the final analysis
  double q_interim = 0.90;  // predictive threshold at interim looks
};
struct ZBoundary {
  std::vector<double> critical_z;  // one per look
};

using DecisionRule = std::variant<FixedPosterior, TwoPhasePosterior, PredictiveHybrid, ZBoundary>;

std::string rule_label(const DecisionRule& rule);

struct DesignSpec {
  AnalysisSchedule schedule;
  PriorPair priors;
  DecisionRule rule;
};

// All invariant violations at once; empty means valid.
std::vector<std::string> validate(const DesignSpec& spec);

// (info fraction, cumulative probability) pairs under one truth point.
struct SpendingProfile {
  std::vector<double> info_fractions;
  std::vector<double> cumulative;
};

struct OperatingCharacteristics {
  std::vector<double> stage_stop_prob;  // efficacy declaration at look k
  double reject_prob = 0.0;
  SpendingProfile cumulative_profile;
  double expected_n_total = 0.0;  // patients, both arms
  double mass_defect = 0.0;       // worst |stopped + live + flushed - 1| seen
  TruthPoint truth;

  double early_stop_prob() const {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < stage_stop_prob.size(); ++k) s += stage_stop_prob[k];
    return s;
  }
};

inline TruthPoint TrialScenario::null_point() const {
  return TruthPoint{control_rate, control_rate, "null"};
}
inline TruthPoint TrialScenario::alt_point() const {
  return TruthPoint{control_rate, treatment_rate_alt, "alternative"};
}

}  // namespace bgsd

#endif  // BGSD_DESIGN_HPP
