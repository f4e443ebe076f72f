#pragma once

#include <map>
#include <string>
#include <vector>

#include "sje/tensor.hpp"

namespace sje {

struct RmsPropConfig {
  double learning_rate = 0.0007;
  double decay = 0.95;
  double epsilon = 1e-6;
  // Global-norm gradient clipping; 0 disables it.
  double clip_norm = 0.0;
};

// Keeps one squared-gradient accumulator per parameter, keyed by name.
// step() applies: acc <- decay*acc + (1-decay)*g^2,
//                 p   <- p - lr * g / (sqrt(acc) + eps)
// and zeroes the gradients afterwards.
class RmsProp {
 public:
  explicit RmsProp(RmsPropConfig config = {});

  void step(ParameterSet& params);

  const RmsPropConfig& config() const { return config_; }
  std::map<std::string, std::vector<double>>& accumulators() { return acc_; }
  const std::map<std::string, std::vector<double>>& accumulators() const {
    return acc_;
  }

 private:
  RmsPropConfig config_;
  std::map<std::string, std::vector<double>> acc_;
};

}  // namespace sje
