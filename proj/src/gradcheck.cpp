#include "sje/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sje {

namespace {

double rel_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradCheckResult finite_difference_check(const std::function<Tensor()>& forward,
                                        ParameterSet& params,
                                        std::mt19937_64& rng,
                                        const GradCheckOptions& options) {
  params.zero_grads();

  // Analytic gradients for the whole parameter set in one backward pass.
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = forward();
    tape.backward(loss);
    for (auto& [name, p] : params) {
      analytic.push_back(p.grad_data().empty()
                             ? std::vector<double>(p.size(), 0.0)
                             : p.grad_data());
      p.zero_grad();
    }
  }

  // Flat list of (parameter, coordinate) pairs to probe.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  {
    std::size_t pi = 0;
    for (auto& [name, p] : params) {
      for (std::size_t i = 0; i < p.size(); ++i) coords.emplace_back(pi, i);
      ++pi;
    }
  }
  if (coords.empty()) {
    throw std::invalid_argument("gradcheck: parameter set is empty");
  }
  if (static_cast<int>(coords.size()) > options.coordinates) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(static_cast<std::size_t>(options.coordinates));
  }

  std::vector<std::pair<std::string, Tensor>*> items;
  std::vector<std::string> names;
  for (auto& item : params) {
    items.push_back(&item);
    names.push_back(item.first);
  }

  GradCheckResult result;
  const double h = options.step;
  for (const auto& [pi, ci] : coords) {
    Tensor& p = items[pi]->second;
    const double original = p.values()[ci];
    p.values()[ci] = original + h;
    const double up = forward().item();
    p.values()[ci] = original - h;
    const double down = forward().item();
    p.values()[ci] = original;
    const double numeric = (up - down) / (2.0 * h);
    const double err = rel_error(analytic[pi][ci], numeric);
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_parameter =
          names[pi] + "[" + std::to_string(ci) + "]";
    }
    ++result.coordinates_checked;
  }
  return result;
}

}  // namespace sje
