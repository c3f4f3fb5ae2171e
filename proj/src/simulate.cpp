#include "bgsd/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "bgsd/parallel.hpp"

namespace bgsd {

namespace {

// splitmix64: one independent stream per replicate
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t s) : state(s) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t replicate) {
  SplitMix64 s(seed ^ (replicate * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL));
  return s.next();
}

struct Tally {
  std::vector<std::uint64_t> stage_stops;
  std::uint64_t rejects = 0;
  std::uint64_t total_n = 0;

  explicit Tally(std::size_t K) : stage_stops(K, 0) {}
  void merge(const Tally& other) {
    for (std::size_t k = 0; k < stage_stops.size(); ++k) stage_stops[k] += other.stage_stops[k];
    rejects += other.rejects;
    total_n += other.total_n;
  }
};

}  // namespace

SimResult simulate(const DesignSpec& spec, const StoppingBoundary& boundary,
                   const TruthPoint& truth, std::uint64_t replicates, std::uint64_t seed,
                   int threads) {
  if (replicates < 1) throw ConfigError("simulate: at least one replicate required");
  const auto& ns = spec.schedule.per_arm_cumulative;
  const std::size_t K = ns.size();
  if (boundary.per_stage.size() != K) {
    throw ConfigError("simulate: boundary and schedule disagree on the number of looks");
  }

  // per-stage increment CDF tables, shared by all replicates
  std::vector<std::vector<double>> ctrl_cdf(K), trt_cdf(K);
  for (std::size_t k = 0; k < K; ++k) {
    const std::int64_t m = k == 0 ? ns[0] : ns[k] - ns[k - 1];
    auto build = [&](double theta) {
      auto pmf = binomial_pmf_table(m, theta);
      double run = 0.0;
      for (auto& v : pmf) {
        run += v;
        v = run;
      }
      pmf.back() = 1.0;
      return pmf;
    };
    ctrl_cdf[k] = build(truth.control_rate);
    trt_cdf[k] = build(truth.treatment_rate);
  }

  auto draw = [](SplitMix64& rng, const std::vector<double>& cdf) -> std::int64_t {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf.begin(), cdf.end() - 1, u);
    return static_cast<std::int64_t>(it - cdf.begin());
  };

  const int workers = threads <= 0 ? 0 : threads;
  const std::size_t blocks = 64;
  std::vector<Tally> block_tallies(blocks, Tally(K));
  parallel_for_index(blocks, workers, [&](std::size_t blk) {
    const std::uint64_t begin = replicates * blk / blocks;
    const std::uint64_t end = replicates * (blk + 1) / blocks;
    Tally tally(K);
    for (std::uint64_t r = begin; r < end; ++r) {
      SplitMix64 rng(mix_seed(seed, r));
      std::int64_t i = 0, j = 0;
      bool stopped = false;
      for (std::size_t k = 0; k < K; ++k) {
        i += draw(rng, ctrl_cdf[k]);
        j += draw(rng, trt_cdf[k]);
        if (j <= boundary.per_stage[k][static_cast<std::size_t>(i)]) {
          tally.stage_stops[k] += 1;
          tally.rejects += 1;
          tally.total_n += static_cast<std::uint64_t>(2 * ns[k]);
          stopped = true;
          break;
        }
      }
      if (!stopped) tally.total_n += static_cast<std::uint64_t>(2 * ns.back());
    }
    block_tallies[blk] = tally;
  });

  Tally total(K);
  for (const auto& t : block_tallies) total.merge(t);

  SimResult out;
  out.replicates = replicates;
  out.seed = seed;
  const double R = static_cast<double>(replicates);
  out.stage_stop_freq.resize(K);
  out.stage_stop_se.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double f = static_cast<double>(total.stage_stops[k]) / R;
    out.stage_stop_freq[k] = f;
    out.stage_stop_se[k] = std::sqrt(f * (1.0 - f) / R);
  }
  out.reject_freq = static_cast<double>(total.rejects) / R;
  out.reject_se = std::sqrt(out.reject_freq * (1.0 - out.reject_freq) / R);
  out.mean_n_total = static_cast<double>(total.total_n) / R;
  return out;
}

}  // namespace bgsd
