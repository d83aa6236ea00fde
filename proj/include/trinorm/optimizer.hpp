#pragma once

// SGD with classic momentum plus the reduce-on-plateau learning-rate policy
// (factor 0.1 after `patience` consecutive epochs without improvement).

#include <cstddef>
#include <vector>

#include "trinorm/nn.hpp"

namespace trinorm {

struct SgdOptimizer {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::vector<std::vector<double>> velocity;  // one buffer per ParamRef

  void init(const std::vector<ParamRef>& params);

  // v <- momentum * v + g;  p <- p - lr * v. Returns false (and leaves
  // parameters and velocities untouched) when any gradient is non-finite.
  bool step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads);
};

struct PlateauScheduler {
  double factor = 0.1;
  int patience = 3;
  double learning_rate = 0.01;
  double best_metric = 0.0;
  int stagnant_count = 0;
  bool has_best = false;

  // Feed one epoch metric; reduces the rate on the `patience`-th consecutive
  // stagnant epoch. Returns the (possibly reduced) learning rate.
  double update(double epoch_metric);
};

}  // namespace trinorm
