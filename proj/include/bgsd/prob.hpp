#ifndef BGSD_PROB_HPP
#define BGSD_PROB_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bgsd {

// Thrown when an iterative numerical routine fails to converge or a value
// leaves the representable range.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Shape parameters of a Beta distribution.  Doubles throughout; integer
// values take fast closed-form paths where available.
struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;

  bool valid() const { return alpha > 0.0 && beta > 0.0; }
  bool is_integer() const;
  double mean() const { return alpha / (alpha + beta); }
};

// ln Gamma(x), Lanczos g=7 n=9.  Thread-safe (no global state).
double log_gamma(double x);

// ln B(a, b); integer arguments resolve through the cached log-factorial
// table.
double log_beta(double a, double b);

// ln C(n, k) for integer 0 <= k <= n.
double log_choose(std::int64_t n, std::int64_t k);

// ln(n!), table-backed (initialize-once, read-many).
double log_factorial(std::int64_t n);

// log(exp(a) + exp(b)) without overflow.
double log_sum_exp(double a, double b);

// Standard normal CDF / quantile.  cdf is erfc-backed (abs err ~1e-16);
// quantile is Wichura's PPND16 with a Newton polish so that
// |cdf(quantile(p)) - p| <= 1e-12.
double normal_cdf(double z);
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b) by continued fraction with the
// usual symmetry split.
double regularized_incomplete_beta(double x, const BetaParams& p);

// Pr(theta_trt < theta_ctrl) for independent posteriors
// theta_ctrl ~ Beta(control), theta_trt ~ Beta(treatment), i.e.
// the integral of F_treatment(x) f_control(x) dx on [0,1].
// Integer parameters use the exact Beta-Binomial tail sum; otherwise
// adaptive Gauss-Kronrod quadrature at 1e-12 absolute tolerance.
double beta_superiority_prob(const BetaParams& control, const BetaParams& treatment);

// Quadrature path exposed for the dual-route agreement tests.
double beta_superiority_prob_quadrature(const BetaParams& control,
                                        const BetaParams& treatment);

// Beta-Binomial pmf  C(m,x) B(a+x, b+m-x) / B(a,b), log-space inside.
double beta_binomial_pmf(const BetaParams& prior, std::int64_t m, std::int64_t x);

// Sum of the pmf over y <= x; 0 for x < 0, 1 for x >= m.
double beta_binomial_cdf(const BetaParams& prior, std::int64_t m, std::int64_t x);

// pmf over x = 0..m in one pass (shared normalizing constant).
std::vector<double> beta_binomial_pmf_table(const BetaParams& prior, std::int64_t m);

// Binomial pmf over k = 0..n at success probability theta.
std::vector<double> binomial_pmf_table(std::int64_t n, double theta);

}  // namespace bgsd

#endif  // BGSD_PROB_HPP
