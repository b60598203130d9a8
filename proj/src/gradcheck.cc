#include "probekit/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "probekit/rng.h"

namespace probekit::nn {

GradCheckReport GradCheck(const LossClosure& loss, const ParamRefs& params,
                          const GradCheckOptions& options) {
  const double base = loss(true);
  if (loss(false) != base) {
    throw GradCheckError("loss closure is not deterministic");
  }
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);

  Rng rng(options.seed);
  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    auto values = p.value.values();
    std::vector<size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), size_t{0});
    if (options.coords_per_param > 0 && coords.size() > options.coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (size_t k : coords) {
      const double saved = values[k];
      values[k] = saved + options.step;
      const double up = loss(false);
      values[k] = saved - options.step;
      const double down = loss(false);
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[pi].values()[k];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.denom_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error || report.worst_param.empty()) {
        report.max_rel_error = std::max(rel, report.max_rel_error);
        if (rel >= report.max_rel_error) {
          report.worst_param = p.name;
          report.worst_index = k;
          report.worst_analytic = a;
          report.worst_numeric = numeric;
        }
      }
    }
  }
  // Leave the caller's gradients as the analytic ones at the base point.
  for (size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
  return report;
}

}  // namespace probekit::nn
