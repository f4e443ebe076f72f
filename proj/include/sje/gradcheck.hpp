#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sje/tensor.hpp"

namespace sje {

struct GradCheckOptions {
  double step = 1e-5;
  // Total parameter coordinates to probe, sampled uniformly across all
  // parameters; if the model has fewer, every coordinate is checked.
  int coordinates = 50;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int coordinates_checked = 0;
  std::string worst_parameter;
};

// Compares tape gradients of a scalar loss against central finite
// differences. `forward` must rebuild the loss from the current parameter
// values on every call; it is invoked once under an active tape for the
// analytic pass and twice per probed coordinate without one.
GradCheckResult finite_difference_check(const std::function<Tensor()>& forward,
                                        ParameterSet& params,
                                        std::mt19937_64& rng,
                                        const GradCheckOptions& options = {});

}  // namespace sje
