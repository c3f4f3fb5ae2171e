#include "bgsd/prob.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

namespace bgsd {

namespace {

constexpr double kIntegerTol = 1e-9;
constexpr std::size_t kLogFactorialTableSize = 1 << 14;

bool near_integer(double x) { return std::abs(x - std::round(x)) < kIntegerTol; }

const std::vector<double>& log_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kLogFactorialTableSize);
    t[0] = 0.0;
    double sum = 0.0, comp = 0.0;  // compensated running sum
    for (std::size_t n = 1; n < t.size(); ++n) {
      const double y = std::log(static_cast<double>(n)) - comp;
      const double next = sum + y;
      comp = (next - sum) - y;
      sum = next;
      t[n] = sum;
    }
    return t;
  }();
  return table;
}

// Kahan-compensated accumulator for long sums of small positive terms.
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

}  // namespace

bool BetaParams::is_integer() const {
  return near_integer(alpha) && near_integer(beta) && alpha >= 1.0 - kIntegerTol &&
         beta >= 1.0 - kIntegerTol;
}

double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error("log_gamma: argument must be positive and finite");
  }
  if (near_integer(x)) {
    auto n = static_cast<std::int64_t>(std::llround(x));
    if (n >= 1 && static_cast<std::size_t>(n) <= log_factorial_table().size()) {
      return log_factorial(n - 1);
    }
  }
  if (x >= 12.0) {
    // Stirling series; truncation below 1e-19 in this range
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        inv * (1.0 / 12.0 +
               inv2 * (-1.0 / 360.0 +
                       inv2 * (1.0 / 1260.0 + inv2 * (-1.0 / 1680.0 + inv2 / 1188.0))));
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * M_PI) + series;
  }
  // Lanczos approximation, g = 7, n = 9 (Godfrey coefficients).
  static const double coeff[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // reflection keeps the series argument away from 0
    return std::log(M_PI / std::sin(M_PI * x)) - log_gamma(1.0 - x);
  }
  double z = x - 1.0;
  double a = coeff[0];
  for (int i = 1; i < 9; ++i) a += coeff[i] / (z + i);
  double t = z + 7.5;
  return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(a);
}

double log_factorial(std::int64_t n) {
  if (n < 0) throw std::domain_error("log_factorial: negative argument");
  const auto& table = log_factorial_table();
  if (static_cast<std::size_t>(n) < table.size()) return table[static_cast<std::size_t>(n)];
  return log_gamma(static_cast<double>(n) + 1.0);
}

double log_beta(double a, double b) {
  if (near_integer(a) && near_integer(b) && a >= 1.0 - kIntegerTol && b >= 1.0 - kIntegerTol) {
    auto ia = static_cast<std::int64_t>(std::llround(a));
    auto ib = static_cast<std::int64_t>(std::llround(b));
    if (static_cast<std::size_t>(ia + ib) <= log_factorial_table().size()) {
      return log_factorial(ia - 1) + log_factorial(ib - 1) - log_factorial(ia + ib - 1);
    }
  }
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double log_choose(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) throw std::domain_error("log_choose: k out of range");
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / M_SQRT2); }

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie strictly in (0,1)");
  }
  // Wichura's algorithm AS 241, PPND16.
  const double q = p - 0.5;
  double r, z;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    z = q *
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
  } else {
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
      r -= 1.6;
      z = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
    } else {
      r -= 5.0;
      z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
    }
    if (q < 0.0) z = -z;
  }
  // one Newton step against the erfc-backed cdf
  double f = normal_cdf(z) - p;
  double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  if (pdf > 1e-300) z -= f / pdf;
  return z;
}

namespace {

// Continued fraction for the incomplete beta (Lentz's method).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("regularized_incomplete_beta: continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double x, const BetaParams& p) {
  if (!p.valid()) throw std::domain_error("regularized_incomplete_beta: invalid shape");
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("regularized_incomplete_beta: x outside [0,1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double a = p.alpha;
  const double b = p.beta;
  const double ln_front =
      a * std::log(x) + b * std::log1p(-x) - std::log(a) - log_beta(a, b);
  if (!std::isfinite(ln_front)) {
    throw NumericalError("regularized_incomplete_beta: parameter overflow");
  }
  // symmetry split keeps the continued fraction in its fast region
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(ln_front) * beta_continued_fraction(a, b, x);
  }
  const double ln_front_c =
      b * std::log1p(-x) + a * std::log(x) - std::log(b) - log_beta(a, b);
  return 1.0 - std::exp(ln_front_c) * beta_continued_fraction(b, a, 1.0 - x);
}

namespace {

// Exact route: Pr(T < C) = sum_{s = at}^{at+bt-1} BetaBinomial(control; m, s)
// with m = at + bt - 1, valid for integer treatment shapes.  The normalized
// pmf table keeps the tail sum accurate to ~1e-14 even for large shapes.
double superiority_integer_treatment(const BetaParams& control, const BetaParams& treatment) {
  const auto at = static_cast<std::int64_t>(std::llround(treatment.alpha));
  const auto bt = static_cast<std::int64_t>(std::llround(treatment.beta));
  const std::int64_t m = at + bt - 1;
  const std::vector<double> pmf = beta_binomial_pmf_table(control, m);
  Kahan acc;
  if (m - at + 1 <= at) {
    for (std::int64_t s = at; s <= m; ++s) acc.add(pmf[static_cast<std::size_t>(s)]);
    return std::min(1.0, acc.sum);
  }
  for (std::int64_t s = 0; s < at; ++s) acc.add(pmf[static_cast<std::size_t>(s)]);
  return std::max(0.0, 1.0 - acc.sum);
}

struct GaussKronrod15 {
  // 15-point Kronrod nodes/weights on [-1,1] with embedded 7-point Gauss.
  static constexpr double xk[15] = {
      -0.991455371120813, -0.949107912342759, -0.864864423359769,
      -0.741531185599394, -0.586087235467691, -0.405845151377397,
      -0.207784955007898, 0.0,                0.207784955007898,
      0.405845151377397,  0.586087235467691,  0.741531185599394,
      0.864864423359769,  0.949107912342759,  0.991455371120813};
  static constexpr double wk[15] = {
      0.022935322010529, 0.063092092629979, 0.104790010322250,
      0.140653259715525, 0.169004726639267, 0.190350578064785,
      0.204432940075298, 0.209482141084728, 0.204432940075298,
      0.190350578064785, 0.169004726639267, 0.140653259715525,
      0.104790010322250, 0.063092092629979, 0.022935322010529};
  static constexpr double wg[7] = {
      0.129484966168870, 0.279705391489277, 0.381830050505119,
      0.417959183673469, 0.381830050505119, 0.279705391489277,
      0.129484966168870};
};

constexpr double GaussKronrod15::xk[];
constexpr double GaussKronrod15::wk[];
constexpr double GaussKronrod15::wg[];

template <typename F>
void gk15(const F& f, double lo, double hi, double* value, double* err) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  double vk = 0.0, vg = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double y = f(mid + half * GaussKronrod15::xk[i]);
    vk += GaussKronrod15::wk[i] * y;
    if (i % 2 == 1) vg += GaussKronrod15::wg[i / 2] * y;
  }
  *value = vk * half;
  *err = std::abs((vk - vg) * half);
}

template <typename F>
double adaptive_gk(const F& f, double lo, double hi, double tol, int depth) {
  double v, e;
  gk15(f, lo, hi, &v, &e);
  if (e <= tol || depth >= 48) {
    if (e > std::max(tol, 1e-6)) {
      throw NumericalError(
          "beta_superiority_prob: quadrature failed to converge (interval [" +
          std::to_string(lo) + "," + std::to_string(hi) + "], err " + std::to_string(e) + ")");
    }
    return v;
  }
  const double mid = 0.5 * (lo + hi);
  return adaptive_gk(f, lo, mid, 0.5 * tol, depth + 1) +
         adaptive_gk(f, mid, hi, 0.5 * tol, depth + 1);
}

}  // namespace

double beta_superiority_prob_quadrature(const BetaParams& control,
                                        const BetaParams& treatment) {
  const double la = control.alpha;
  const double lb = control.beta;
  const double lnorm = log_beta(la, lb);
  auto integrand = [&](double x) -> double {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double lpdf = (la - 1.0) * std::log(x) + (lb - 1.0) * std::log1p(-x) - lnorm;
    if (lpdf < -700.0) return 0.0;
    return regularized_incomplete_beta(x, treatment) * std::exp(lpdf);
  };
  return std::clamp(adaptive_gk(integrand, 0.0, 1.0, 1e-12, 0), 0.0, 1.0);
}

double beta_superiority_prob(const BetaParams& control, const BetaParams& treatment) {
  if (!control.valid() || !treatment.valid()) {
    throw std::domain_error("beta_superiority_prob: shape parameters must be positive");
  }
  if (treatment.is_integer()) return superiority_integer_treatment(control, treatment);
  if (control.is_integer()) return 1.0 - superiority_integer_treatment(treatment, control);
  return beta_superiority_prob_quadrature(control, treatment);
}

double beta_binomial_pmf(const BetaParams& prior, std::int64_t m, std::int64_t x) {
  if (!prior.valid()) throw std::domain_error("beta_binomial_pmf: invalid prior");
  if (x < 0 || x > m) throw std::domain_error("beta_binomial_pmf: x outside [0, m]");
  return std::exp(log_choose(m, x) + log_beta(prior.alpha + x, prior.beta + m - x) -
                  log_beta(prior.alpha, prior.beta));
}

double beta_binomial_cdf(const BetaParams& prior, std::int64_t m, std::int64_t x) {
  if (x < 0) return 0.0;
  if (x >= m) return 1.0;
  Kahan acc;
  const double lb0 = log_beta(prior.alpha, prior.beta);
  for (std::int64_t y = 0; y <= x; ++y) {
    acc.add(std::exp(log_choose(m, y) + log_beta(prior.alpha + y, prior.beta + m - y) - lb0));
  }
  return std::min(1.0, acc.sum);
}

std::vector<double> beta_binomial_pmf_table(const BetaParams& prior, std::int64_t m) {
  if (!prior.valid()) throw std::domain_error("beta_binomial_pmf_table: invalid prior");
  std::vector<double> out(static_cast<std::size_t>(m) + 1, 0.0);
  if (m == 0) {
    out[0] = 1.0;
    return out;
  }
  const double a = prior.alpha;
  const double b = prior.beta;
  // log anchor at the mode, ratio recurrence outward, then normalization;
  // dividing by the summed total cancels the shared log-scale rounding
  const auto anchor = std::clamp<std::int64_t>(
      static_cast<std::int64_t>(static_cast<double>(m + 1) * a / (a + b)), 0, m);
  out[static_cast<std::size_t>(anchor)] =
      std::exp(log_choose(m, anchor) + log_beta(a + anchor, b + m - anchor) - log_beta(a, b));
  for (std::int64_t s = anchor; s < m; ++s) {
    const double ratio = (static_cast<double>(m - s) * (a + static_cast<double>(s))) /
                         (static_cast<double>(s + 1) * (b + static_cast<double>(m - s - 1)));
    out[static_cast<std::size_t>(s + 1)] = out[static_cast<std::size_t>(s)] * ratio;
  }
  for (std::int64_t s = anchor; s > 0; --s) {
    const double ratio = (static_cast<double>(s) * (b + static_cast<double>(m - s))) /
                         (static_cast<double>(m - s + 1) * (a + static_cast<double>(s - 1)));
    out[static_cast<std::size_t>(s - 1)] = out[static_cast<std::size_t>(s)] * ratio;
  }
  Kahan total;
  for (double v : out) total.add(v);
  for (double& v : out) v /= total.sum;
  return out;
}

std::vector<double> binomial_pmf_table(std::int64_t n, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw std::domain_error("binomial_pmf_table: theta outside [0,1]");
  }
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  if (theta == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (theta == 1.0) {
    out.back() = 1.0;
    return out;
  }
  const double lt = std::log(theta);
  const double lq = std::log1p(-theta);
  for (std::int64_t k = 0; k <= n; ++k) {
    out[static_cast<std::size_t>(k)] = std::exp(log_choose(n, k) + k * lt + (n - k) * lq);
  }
  return out;
}

}  // namespace bgsd
