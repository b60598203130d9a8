#include "probekit/optim.h"

#include <cmath>
#include <stdexcept>

namespace probekit::nn {
namespace {

void EnsureBuffers(std::vector<Matrix>& buffers, const ParamRefs& params) {
  if (buffers.empty()) {
    for (const Parameter* p : params) {
      buffers.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (buffers.size() != params.size()) {
    throw std::invalid_argument("optimizer state does not match parameter list");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (!buffers[i].SameShape(params[i]->value)) {
      throw std::invalid_argument("optimizer state shape mismatch for " +
                                  params[i]->name);
    }
  }
}

}  // namespace

void ZeroGrads(const ParamRefs& params) {
  for (Parameter* p : params) p->ZeroGrad();
}

void AdamStep(AdamState& state, const ParamRefs& params) {
  EnsureBuffers(state.m, params);
  EnsureBuffers(state.v, params);
  const AdamHyper& h = state.hyper;
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correct1 = 1.0 - std::pow(h.beta1, t);
  const double correct2 = 1.0 - std::pow(h.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    auto x = params[i]->value.values();
    auto g = params[i]->grad.values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (size_t k = 0; k < x.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correct1;
      const double v_hat = v[k] / correct2;
      x[k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
    params[i]->ZeroGrad();
  }
}

void AdadeltaStep(AdadeltaState& state, const ParamRefs& params) {
  EnsureBuffers(state.sq_grad, params);
  EnsureBuffers(state.sq_update, params);
  const AdadeltaHyper& h = state.hyper;
  for (size_t i = 0; i < params.size(); ++i) {
    auto x = params[i]->value.values();
    auto g = params[i]->grad.values();
    auto eg = state.sq_grad[i].values();
    auto ex = state.sq_update[i].values();
    for (size_t k = 0; k < x.size(); ++k) {
      eg[k] = h.rho * eg[k] + (1.0 - h.rho) * g[k] * g[k];
      const double dx = -std::sqrt(ex[k] + h.eps) / std::sqrt(eg[k] + h.eps) * g[k];
      ex[k] = h.rho * ex[k] + (1.0 - h.rho) * dx * dx;
      x[k] += h.lr * dx;
    }
    params[i]->ZeroGrad();
  }
}

}  // namespace probekit::nn
