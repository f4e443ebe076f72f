#include "sje/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sje {

RmsProp::RmsProp(RmsPropConfig config) : config_(config) {
  if (config_.learning_rate <= 0.0) {
    throw std::invalid_argument("rmsprop: learning rate must be positive");
  }
  if (config_.decay <= 0.0 || config_.decay >= 1.0) {
    throw std::invalid_argument("rmsprop: decay must lie in (0,1)");
  }
  if (config_.epsilon <= 0.0) {
    throw std::invalid_argument("rmsprop: epsilon must be positive");
  }
}

void RmsProp::step(ParameterSet& params) {
  for (auto& [name, p] : params) {
    if (!p.has_grad()) {
      throw std::runtime_error("rmsprop: parameter '" + name +
                               "' has no gradient; run backward first");
    }
  }

  double clip_scale = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (auto& [name, p] : params) {
      for (double g : p.grad_data()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) clip_scale = config_.clip_norm / norm;
  }

  for (auto& [name, p] : params) {
    auto it = acc_.find(name);
    if (it == acc_.end()) {
      it = acc_.emplace(name, std::vector<double>(p.size(), 0.0)).first;
    }
    auto& acc = it->second;
    if (acc.size() != p.size()) {
      throw std::runtime_error("rmsprop: accumulator size mismatch for '" +
                               name + "'");
    }
    auto& values = p.values();
    auto& grad = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i] * clip_scale;
      acc[i] = config_.decay * acc[i] + (1.0 - config_.decay) * g * g;
      values[i] -= config_.learning_rate * g / (std::sqrt(acc[i]) + config_.epsilon);
    }
    p.zero_grad();
  }
}

}  // namespace sje
