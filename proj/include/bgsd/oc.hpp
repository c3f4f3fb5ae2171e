#ifndef BGSD_OC_HPP
#define BGSD_OC_HPP

#include <string>
#include <vector>

#include "bgsd/boundary.hpp"
#include "bgsd/design.hpp"

namespace bgsd {

// Exact operating characteristics by dynamic programming over the joint
// (control events, treatment events) lattice.  Deterministic, no sampling.
OperatingCharacteristics evaluate(const DesignSpec& spec, const StoppingBoundary& boundary,
                                  const TruthPoint& truth);

// Cumulative stopping profiles under the null (alpha spending) and the
// alternative (power spending).
std::pair<SpendingProfile, SpendingProfile> spending_profiles(const DesignSpec& spec,
                                                              const StoppingBoundary& boundary,
                                                              const TruthPoint& null_point,
                                                              const TruthPoint& alt_point);

// One table row combining both truth points.
struct OcReportRow {
  std::string rule_params;
  double alpha = 0.0;
  double power = 0.0;
  double early_stop_null = 0.0;
  double early_stop_alt = 0.0;
  double e_n_null = 0.0;
  double e_n_alt = 0.0;
  std::vector<double> stage_stop_null;
  std::vector<double> stage_stop_alt;
};

OcReportRow stagewise_report(const std::string& rule_params,
                             const OperatingCharacteristics& under_null,
                             const OperatingCharacteristics& under_alt);

}  // namespace bgsd

#endif  // BGSD_OC_HPP
