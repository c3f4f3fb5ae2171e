#ifndef BGSD_SIMULATE_HPP
#define BGSD_SIMULATE_HPP

#include <cstdint>
#include <vector>

#include "bgsd/boundary.hpp"
#include "bgsd/design.hpp"

namespace bgsd {

struct SimResult {
  std::vector<double> stage_stop_freq;  // efficacy stop frequency per look
  std::vector<double> stage_stop_se;
  double reject_freq = 0.0;
  double reject_se = 0.0;
  double mean_n_total = 0.0;
  std::uint64_t replicates = 0;
  std::uint64_t seed = 0;
};

// Seeded trial walker over a compiled boundary.  Each replicate draws its
// own counter-based RNG stream (master seed mixed with the replicate
// index), so results are bit-identical regardless of worker count.
SimResult simulate(const DesignSpec& spec, const StoppingBoundary& boundary,
                   const TruthPoint& truth, std::uint64_t replicates, std::uint64_t seed,
                   int threads = 0);

}  // namespace bgsd

#endif  // BGSD_SIMULATE_HPP
