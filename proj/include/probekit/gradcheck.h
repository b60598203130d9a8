#ifndef PROBEKIT_GRADCHECK_H_
#define PROBEKIT_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

#include "probekit/matrix.h"

namespace probekit::nn {

class GradCheckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loss closure. When `with_grads` is true it must zero and then populate the
// gradients of every checked parameter before returning the loss.
using LossClosure = std::function<double(bool with_grads)>;

struct GradCheckOptions {
  double step = 1e-5;
  // Coordinates sampled per parameter; 0 checks every coordinate.
  size_t coords_per_param = 0;
  // Relative errors use max(|analytic|, |numeric|, denom_floor) as denominator.
  double denom_floor = 1e-6;
  uint64_t seed = 13;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t coords_checked = 0;
};

// Central-difference check of the analytic gradient. Throws GradCheckError if
// two evaluations at the same point disagree.
GradCheckReport GradCheck(const LossClosure& loss, const ParamRefs& params,
                          const GradCheckOptions& options = {});

}  // namespace probekit::nn

#endif  // PROBEKIT_GRADCHECK_H_
