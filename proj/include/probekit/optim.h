#ifndef PROBEKIT_OPTIM_H_
#define PROBEKIT_OPTIM_H_

#include <cstddef>
#include <vector>

#include "probekit/matrix.h"

namespace probekit::nn {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  size_t t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

// Bias-corrected Adam update of every parameter, then zeroes the gradients.
// Moment buffers are created on the first call.
void AdamStep(AdamState& state, const ParamRefs& params);

struct AdadeltaHyper {
  double lr = 1e-5;
  double rho = 0.95;
  double eps = 1e-6;
};

struct AdadeltaState {
  AdadeltaHyper hyper;
  std::vector<Matrix> sq_grad;    // running E[g^2]
  std::vector<Matrix> sq_update;  // running E[dx^2]
};

// x += lr * dx, dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g.
void AdadeltaStep(AdadeltaState& state, const ParamRefs& params);

void ZeroGrads(const ParamRefs& params);

}  // namespace probekit::nn

#endif  // PROBEKIT_OPTIM_H_
