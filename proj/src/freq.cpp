#include "bgsd/freq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bgsd/prob.hpp"

namespace bgsd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroSpend = 1e-15;
constexpr double kWindow = 8.0;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

// Gauss-Legendre nodes/weights on [-1, 1] (Newton on Legendre polynomials).
void gauss_legendre(int n, std::vector<double>* x, std::vector<double>* w) {
  x->assign(n, 0.0);
  w->assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * z * p1 - k * p2) / (k + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    (*x)[i] = -z;
    (*x)[n - 1 - i] = z;
    (*w)[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    (*w)[n - 1 - i] = (*w)[i];
  }
}

struct Grid {
  std::vector<double> x;  // node positions on the z scale
  std::vector<double> g;  // sub-density times quadrature weight
};

// Carries the no-stop sub-density of Z_k across looks.  All quantities on
// the standardized per-look z scale.
class Recursion {
 public:
  Recursion(std::vector<double> info, double drift_effect, int nodes)
      : info_(std::move(info)), drift_(drift_effect) {
    gauss_legendre(nodes, &gl_x_, &gl_w_);
  }

  // Crossing probability at look k (0-based) for critical value c, given
  // the stored sub-density at look k-1.
  double crossing(std::size_t k, double c) const {
    if (c == kInf) return 0.0;
    if (k == 0) return 1.0 - normal_cdf(c - mean(0));
    const double sI = std::sqrt(info_[k]);
    const double sIp = std::sqrt(info_[k - 1]);
    const double dI = info_[k] - info_[k - 1];
    const double sdI = std::sqrt(dI);
    const double dmu = drift_ * dI;
    double total = 0.0;
    for (std::size_t i = 0; i < grid_.x.size(); ++i) {
      total += grid_.g[i] * (1.0 - normal_cdf((c * sI - grid_.x[i] * sIp - dmu) / sdI));
    }
    return total;
  }

  // Installs the continuing sub-density below c at look k.
  void advance(std::size_t k, double c) {
    const double lo = mean(k) - kWindow;
    const double hi = std::min(c, mean(k) + kWindow);
    Grid next;
    next.x.resize(gl_x_.size());
    next.g.resize(gl_x_.size());
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    if (k == 0) {
      for (std::size_t i = 0; i < gl_x_.size(); ++i) {
        next.x[i] = mid + half * gl_x_[i];
        next.g[i] = normal_pdf(next.x[i] - mean(0)) * gl_w_[i] * half;
      }
    } else {
      const double sI = std::sqrt(info_[k]);
      const double sIp = std::sqrt(info_[k - 1]);
      const double dI = info_[k] - info_[k - 1];
      const double sdI = std::sqrt(dI);
      const double dmu = drift_ * dI;
      for (std::size_t i = 0; i < gl_x_.size(); ++i) {
        const double z = mid + half * gl_x_[i];
        double density = 0.0;
        for (std::size_t s = 0; s < grid_.x.size(); ++s) {
          density += grid_.g[s] * normal_pdf((z * sI - grid_.x[s] * sIp - dmu) / sdI);
        }
        next.x[i] = z;
        next.g[i] = density * (sI / sdI) * gl_w_[i] * half;
      }
    }
    grid_ = std::move(next);
  }

 private:
  double mean(std::size_t k) const { return drift_ * std::sqrt(info_[k]); }

  std::vector<double> info_;
  double drift_;
  std::vector<double> gl_x_, gl_w_;
  Grid grid_;
};

// c solving crossing(k, c) = target, bisection to 1e-9.
double solve_critical(const Recursion& rec, std::size_t k, double target) {
  double lo = -10.0, hi = 15.0;
  for (int it = 0; it < 120; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rec.crossing(k, mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-9) break;
  }
  if (hi - lo > 1e-8) throw NumericalError("solve_boundaries: root finding failed");
  return 0.5 * (lo + hi);
}

std::vector<double> with_final(const std::vector<double>& fractions) {
  std::vector<double> ts = fractions;
  if (ts.empty() || std::abs(ts.back() - 1.0) > 1e-12) ts.push_back(1.0);
  return ts;
}

}  // namespace

SpendingKind spending_kind_from_string(const std::string& s) {
  if (s == "obf_like" || s == "obf") return SpendingKind::kObfLike;
  if (s == "pocock_like" || s == "pocock") return SpendingKind::kPocockLike;
  if (s == "haybittle_peto" || s == "hp") return SpendingKind::kHaybittlePeto;
  throw ConfigError("unknown spending kind: " + s);
}

std::string to_string(SpendingKind k) {
  switch (k) {
    case SpendingKind::kObfLike: return "obf_like";
    case SpendingKind::kPocockLike: return "pocock_like";
    case SpendingKind::kHaybittlePeto: return "haybittle_peto";
  }
  return "obf_like";
}

double spend(SpendingKind kind, double alpha, double t) {
  if (!(t > 0.0)) throw std::domain_error("spend: information fraction must be positive");
  t = std::min(t, 1.0);
  switch (kind) {
    case SpendingKind::kObfLike:
      return 2.0 * (1.0 - normal_cdf(normal_quantile(1.0 - alpha / 2.0) / std::sqrt(t)));
    case SpendingKind::kPocockLike:
      return alpha * std::log(1.0 + (M_E - 1.0) * t);
    case SpendingKind::kHaybittlePeto:
      throw ConfigError("haybittle_peto is boundary-based, not a spending function");
  }
  return 0.0;
}

FrequentistDesign solve_boundaries(const std::vector<double>& info_fractions,
                                   const std::vector<double>& cumulative_spend, int nodes) {
  const std::size_t K = info_fractions.size();
  if (cumulative_spend.size() != K) {
    throw ConfigError("solve_boundaries: one cumulative spend value per look required");
  }
  FrequentistDesign design;
  design.info_fractions = info_fractions;
  design.cumulative_spend = cumulative_spend;
  design.critical_z.assign(K, kInf);

  Recursion rec(info_fractions, 0.0, nodes);
  double prev_cum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double inc = cumulative_spend[k] - prev_cum;
    if (inc < -1e-12) throw ConfigError("solve_boundaries: spend increments must be nonnegative");
    prev_cum = cumulative_spend[k];
    double c = kInf;
    if (inc > kZeroSpend) {
      if (k == 0) {
        c = normal_quantile(1.0 - inc);
      } else {
        c = solve_critical(rec, k, inc);
      }
    }
    design.critical_z[k] = c;
    if (k + 1 < K) rec.advance(k, c);
  }
  return design;
}

FrequentistDesign haybittle_peto(const std::vector<double>& info_fractions, double alpha,
                                 int nodes) {
  const std::size_t K = info_fractions.size();
  FrequentistDesign design;
  design.info_fractions = info_fractions;
  design.critical_z.assign(K, 3.0);

  Recursion rec(info_fractions, 0.0, nodes);
  design.cumulative_spend.clear();
  double cum = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    cum += rec.crossing(k, 3.0);
    design.cumulative_spend.push_back(cum);
    rec.advance(k, 3.0);
  }
  const double remaining = alpha - cum;
  if (remaining <= 0.0) {
    throw InfeasibleError("haybittle_peto: interim spend already exceeds alpha");
  }
  design.critical_z[K - 1] = K == 1 ? normal_quantile(1.0 - alpha)
                                    : solve_critical(rec, K - 1, remaining);
  design.cumulative_spend.push_back(alpha);
  return design;
}

OperatingCharacteristics oc_normal(const FrequentistDesign& design, double effect,
                                   double info_max, double n_total, const TruthPoint& truth,
                                   int nodes) {
  if (!(info_max > 0.0)) throw std::domain_error("oc_normal: info_max must be positive");
  const std::size_t K = design.info_fractions.size();
  std::vector<double> info(K);
  for (std::size_t k = 0; k < K; ++k) info[k] = design.info_fractions[k] * info_max;

  Recursion rec(info, effect, nodes);
  OperatingCharacteristics oc;
  oc.truth = truth;
  oc.stage_stop_prob.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    oc.stage_stop_prob[k] = rec.crossing(k, design.critical_z[k]);
    if (k + 1 < K) rec.advance(k, design.critical_z[k]);
  }
  double cum = 0.0;
  oc.cumulative_profile.info_fractions = design.info_fractions;
  for (std::size_t k = 0; k < K; ++k) {
    cum += oc.stage_stop_prob[k];
    oc.cumulative_profile.cumulative.push_back(cum);
  }
  oc.reject_prob = cum;
  double en = 0.0, early = 0.0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    en += design.info_fractions[k] * n_total * oc.stage_stop_prob[k];
    early += oc.stage_stop_prob[k];
  }
  en += n_total * (1.0 - early);
  oc.expected_n_total = en;
  return oc;
}

double binary_info_max(const TrialScenario& scenario, double n_per_arm) {
  const double v0 = scenario.control_rate * (1.0 - scenario.control_rate) / n_per_arm;
  const double v1 = scenario.treatment_rate_alt * (1.0 - scenario.treatment_rate_alt) / n_per_arm;
  return 1.0 / (v0 + v1);
}

std::pair<std::int64_t, FrequentistDesign> size_frequentist(SpendingKind kind,
                                                            const TrialScenario& scenario,
                                                            const std::vector<double>& fractions,
                                                            int nodes) {
  const std::vector<double> ts = with_final(fractions);
  FrequentistDesign design;
  if (kind == SpendingKind::kHaybittlePeto) {
    design = haybittle_peto(ts, scenario.one_sided_alpha, nodes);
  } else {
    std::vector<double> cum(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
      cum[k] = spend(kind, scenario.one_sided_alpha, ts[k]);
    }
    design = solve_boundaries(ts, cum, nodes);
  }

  // canonical inflation factor: information multiple of the fixed design
  // needed to reach the target power with these boundaries
  const double za = normal_quantile(1.0 - scenario.one_sided_alpha);
  const double zb = normal_quantile(scenario.target_power);
  const double info_fixed = (za + zb) * (za + zb);  // unit effect
  auto power_at = [&](double info) {
    return oc_normal(design, 1.0, info, 1.0, TruthPoint{}, nodes).reject_prob;
  };
  double lo = info_fixed * 0.8, hi = info_fixed * 4.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (power_at(mid) < scenario.target_power) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double inflation = 0.5 * (lo + hi) / info_fixed;

  // fixed-design size for two proportions: pooled variance under H0,
  // unpooled under H1
  const double p0 = scenario.control_rate;
  const double p1 = scenario.treatment_rate_alt;
  const double delta = std::abs(p0 - p1);
  const double pbar = 0.5 * (p0 + p1);
  const double n_arm_fixed =
      std::pow(za * std::sqrt(2.0 * pbar * (1.0 - pbar)) +
                   zb * std::sqrt(p0 * (1.0 - p0) + p1 * (1.0 - p1)),
               2.0) /
      (delta * delta);
  const double n_total_cont = 2.0 * n_arm_fixed * inflation;
  auto n_total = static_cast<std::int64_t>(2.0 * std::floor(n_total_cont / 2.0 + 0.5));
  if (n_total < 2) n_total = 2;
  return {n_total, design};
}

}  // namespace bgsd
