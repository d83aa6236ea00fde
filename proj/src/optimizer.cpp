#include "trinorm/optimizer.hpp"

#include <cmath>

#include "trinorm/common.hpp"
#include "trinorm/kernels.hpp"

namespace trinorm {

void SgdOptimizer::init(const std::vector<ParamRef>& params) {
  velocity.clear();
  velocity.reserve(params.size());
  for (const ParamRef& p : params) velocity.emplace_back(p.n, 0.0);
}

bool SgdOptimizer::step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw DataError("sgd step: parameter/gradient shape mismatch");
  }
  for (std::size_t t = 0; t < grads.size(); ++t) {
    if (grads[t].n != params[t].n || velocity[t].size() != params[t].n) {
      throw DataError("sgd step: tensor size mismatch");
    }
    for (std::size_t i = 0; i < grads[t].n; ++i) {
      if (!std::isfinite(grads[t].data[i])) return false;
    }
  }
  const auto& k = kernels::ops();
  for (std::size_t t = 0; t < params.size(); ++t) {
    k.sgd_update(params[t].data, velocity[t].data(), grads[t].data, params[t].n,
                 learning_rate, momentum);
  }
  return true;
}

double PlateauScheduler::update(double epoch_metric) {
  if (!std::isfinite(epoch_metric)) throw NumericError("plateau metric is not finite");
  if (!has_best || epoch_metric < best_metric - 1e-12) {
    best_metric = epoch_metric;
    has_best = true;
    stagnant_count = 0;
    return learning_rate;
  }
  ++stagnant_count;
  if (stagnant_count >= patience) {
    learning_rate *= factor;
    stagnant_count = 0;
  }
  return learning_rate;
}

}  // namespace trinorm
