#ifndef BGSD_TESTS_ENUMERATE_HPP
#define BGSD_TESTS_ENUMERATE_HPP

// Brute-force path enumeration over all per-stage increment sequences.
// Independent of the DP evaluator: only the binomial pmf is shared.

#include <vector>

#include "bgsd/boundary.hpp"
#include "bgsd/design.hpp"

namespace bgsd_tests {

struct EnumResult {
  std::vector<double> stage_stop;
  double reject = 0.0;
  double expected_n_total = 0.0;
};

inline EnumResult enumerate_paths(const bgsd::DesignSpec& spec,
                                  const bgsd::StoppingBoundary& boundary,
                                  const bgsd::TruthPoint& truth) {
  const auto& ns = spec.schedule.per_arm_cumulative;
  const std::size_t K = ns.size();
  std::vector<std::vector<double>> ctrl(K), trt(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::int64_t m = k == 0 ? ns[0] : ns[k] - ns[k - 1];
    ctrl[k] = bgsd::binomial_pmf_table(m, truth.control_rate);
    trt[k] = bgsd::binomial_pmf_table(m, truth.treatment_rate);
  }
  EnumResult out;
  out.stage_stop.assign(K, 0.0);
  double continue_mass_n = 0.0;

  struct Frame {
    std::int64_t i, j;
    double prob;
  };
  std::vector<Frame> current{{0, 0, 1.0}};
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<Frame> next;
    for (const auto& f : current) {
      for (std::size_t di = 0; di < ctrl[k].size(); ++di) {
        for (std::size_t dj = 0; dj < trt[k].size(); ++dj) {
          Frame g{f.i + static_cast<std::int64_t>(di), f.j + static_cast<std::int64_t>(dj),
                  f.prob * ctrl[k][di] * trt[k][dj]};
          if (g.prob == 0.0) continue;
          if (g.j <= boundary.per_stage[k][static_cast<std::size_t>(g.i)]) {
            out.stage_stop[k] += g.prob;
            out.expected_n_total += g.prob * static_cast<double>(2 * ns[k]);
          } else if (k + 1 < K) {
            next.push_back(g);
          } else {
            continue_mass_n += g.prob;
          }
        }
      }
    }
    current = std::move(next);
  }
  out.expected_n_total += continue_mass_n * static_cast<double>(2 * ns.back());
  for (double s : out.stage_stop) out.reject += s;
  return out;
}

}  // namespace bgsd_tests

#endif  // BGSD_TESTS_ENUMERATE_HPP
