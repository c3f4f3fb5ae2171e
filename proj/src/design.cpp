#include "bgsd/design.hpp"

#include <cmath>
#include <sstream>

namespace bgsd {

Rounding rounding_from_string(const std::string& s) {
  if (s == "nearest") return Rounding::kNearest;
  if (s == "floor") return Rounding::kFloor;
  if (s == "ceil") return Rounding::kCeil;
  throw ConfigError("unknown rounding convention: " + s);
}

std::string to_string(Rounding r) {
  switch (r) {
    case Rounding::kNearest: return "nearest";
    case Rounding::kFloor: return "floor";
    case Rounding::kCeil: return "ceil";
  }
  return "nearest";
}

std::vector<double> AnalysisSchedule::info_fractions() const {
  std::vector<double> out(looks());
  for (std::size_t k = 0; k < looks(); ++k) out[k] = info_fraction(k);
  return out;
}

AnalysisSchedule build_schedule(std::int64_t n_total, const std::vector<double>& fractions,
                                Rounding rounding) {
  if (n_total < 2 || n_total % 2 != 0) {
    throw ConfigError("n_total must be a positive even count (1:1 allocation)");
  }
  const double per_arm_max = static_cast<double>(n_total) / 2.0;
  double prev = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("interim fractions must lie in (0,1)");
    if (f <= prev) throw ConfigError("interim fractions must be strictly increasing");
    prev = f;
  }
  AnalysisSchedule schedule;
  for (double f : fractions) {
    const double x = per_arm_max * f;
    std::int64_t n = 0;
    switch (rounding) {
      case Rounding::kNearest: n = static_cast<std::int64_t>(std::floor(x + 0.5)); break;
      case Rounding::kFloor: n = static_cast<std::int64_t>(std::floor(x)); break;
      case Rounding::kCeil: n = static_cast<std::int64_t>(std::ceil(x)); break;
    }
    schedule.per_arm_cumulative.push_back(n);
  }
  schedule.per_arm_cumulative.push_back(static_cast<std::int64_t>(per_arm_max));
  for (std::size_t k = 0; k < schedule.per_arm_cumulative.size(); ++k) {
    if (schedule.per_arm_cumulative[k] < 1) {
      throw ConfigError("analysis " + std::to_string(k + 1) + " rounds to an empty stage");
    }
    if (k > 0 && schedule.per_arm_cumulative[k] <= schedule.per_arm_cumulative[k - 1]) {
      throw ConfigError("rounding collision: analysis sizes are not strictly increasing");
    }
  }
  return schedule;
}

std::string rule_label(const DecisionRule& rule) {
  std::ostringstream os;
  if (const auto* f = std::get_if<FixedPosterior>(&rule)) {
    os << "fixed_posterior(p=" << f->p << ")";
  } else if (const auto* t = std::get_if<TwoPhasePosterior>(&rule)) {
    os << "two_phase(p_early=" << t->p_early << ",p_late=" << t->p_late
       << ",t_star=" << t->t_star << ")";
  } else if (const auto* h = std::get_if<PredictiveHybrid>(&rule)) {
    os << "predictive_hybrid(p_final=" << h->p_final << ",q_interim=" << h->q_interim << ")";
  } else if (const auto* z = std::get_if<ZBoundary>(&rule)) {
    os << "z_boundary(";
    for (std::size_t k = 0; k < z->critical_z.size(); ++k) {
      if (k) os << ",";
      os << z->critical_z[k];
    }
    os << ")";
  }
  return os.str();
}

namespace {

void check_threshold(std::vector<std::string>& out, double v, const std::string& name) {
  if (!(v > 0.0 && v < 1.0)) {
    out.push_back(name + " must lie strictly in (0,1), got " + std::to_string(v));
  }
}

}  // namespace

std::vector<std::string> validate(const DesignSpec& spec) {
  std::vector<std::string> out;
  const auto& sizes = spec.schedule.per_arm_cumulative;
  if (sizes.empty()) {
    out.push_back("schedule has no analyses");
  } else {
    if (sizes.front() < 1) out.push_back("first analysis must enrol at least one per arm");
    for (std::size_t k = 1; k < sizes.size(); ++k) {
      if (sizes[k] <= sizes[k - 1]) {
        out.push_back("per-arm sizes must be strictly increasing at analysis " +
                      std::to_string(k + 1));
      }
    }
  }
  if (!spec.priors.control.valid()) out.push_back("control prior shapes must be positive");
  if (!spec.priors.treatment.valid()) out.push_back("treatment prior shapes must be positive");

  if (const auto* f = std::get_if<FixedPosterior>(&spec.rule)) {
    check_threshold(out, f->p, "posterior threshold p");
  } else if (const auto* t = std::get_if<TwoPhasePosterior>(&spec.rule)) {
    check_threshold(out, t->p_early, "early-phase threshold p_early");
    check_threshold(out, t->p_late, "late-phase threshold p_late");
    if (t->p_late > t->p_early) {
      out.push_back("two-phase rule requires p_late <= p_early (late relaxes, never tightens)");
    }
    if (!(t->t_star > 0.0 && t->t_star <= 1.0)) {
      out.push_back("phase cutpoint t_star must lie in (0,1]");
    }
  } else if (const auto* h = std::get_if<PredictiveHybrid>(&spec.rule)) {
    check_threshold(out, h->p_final, "final posterior threshold p_final");
    check_threshold(out, h->q_interim, "interim predictive threshold q_interim");
  } else if (const auto* z = std::get_if<ZBoundary>(&spec.rule)) {
    if (z->critical_z.size() != sizes.size()) {
      out.push_back("z boundary needs one critical value per analysis (" +
                    std::to_string(sizes.size()) + " analyses, " +
                    std::to_string(z->critical_z.size()) + " values)");
    }
  }
  return out;
}

}  // namespace bgsd
