#include "sje/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sje {

namespace {

std::size_t checked_numel(const std::vector<int>& shape) {
  if (shape.empty()) {
    throw std::invalid_argument("tensor shape must have at least one dimension");
  }
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) {
      throw std::invalid_argument("tensor dimensions must be positive, got " +
                                  shape_string(shape));
    }
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

thread_local Tape* g_active_tape = nullptr;

}  // namespace

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  std::size_t n = checked_numel(shape);
  auto s = std::make_shared<Storage>();
  s->shape = std::move(shape);
  s->values.assign(n, 0.0);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values,
                           bool requires_grad) {
  std::size_t n = checked_numel(shape);
  if (values.size() != n) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not match shape " + shape_string(shape));
  }
  auto s = std::make_shared<Storage>();
  s->shape = std::move(shape);
  s->values = std::move(values);
  s->requires_grad = requires_grad;
  return Tensor(std::move(s));
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}); }

Tensor Tensor::uniform(std::vector<int> shape, double lo, double hi,
                       std::mt19937_64& rng, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.values()) v = dist(rng);
  return t;
}

double Tensor::item() const {
  if (size() != 1) {
    throw std::invalid_argument("item() requires a scalar tensor, got shape " +
                                shape_string(shape()));
  }
  return s_->values[0];
}

std::vector<double>& Tensor::grad() const {
  if (s_->grad.empty()) s_->grad.assign(s_->values.size(), 0.0);
  return s_->grad;
}

void Tensor::zero_grad() const {
  std::fill(s_->grad.begin(), s_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  auto s = std::make_shared<Storage>(*s_);
  return Tensor(std::move(s));
}

void Tensor::enable_grad_nonleaf() {
  s_->requires_grad = true;
  s_->leaf = false;
}

bool Tensor::all_finite() const {
  for (double v : s_->values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor& ParameterSet::add(const std::string& name, Tensor t) {
  if (find(name) != nullptr) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  items_.emplace_back(name, std::move(t));
  return items_.back().second;
}

Tensor* ParameterSet::find(const std::string& name) {
  for (auto& [n, t] : items_) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Tensor* ParameterSet::find(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return &t;
  }
  return nullptr;
}

std::size_t ParameterSet::total_values() const {
  std::size_t n = 0;
  for (const auto& [name, t] : items_) n += t.size();
  return n;
}

void ParameterSet::append(const ParameterSet& other) {
  for (const auto& [name, t] : other) add(name, t);
}

void ParameterSet::zero_grads() {
  for (auto& [name, t] : items_) t.zero_grad();
}

Tape::~Tape() = default;

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::function<void()> backward_fn) {
  records_.push_back(std::move(backward_fn));
}

void Tape::track(const Tensor& t) { tracked_.push_back(t); }

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument(
        "backward requires a scalar loss, got shape " +
        (loss.defined() ? shape_string(loss.shape()) : std::string("<empty>")));
  }
  if (!loss.requires_grad()) {
    throw std::runtime_error("backward: loss is not connected to this tape");
  }
  Tensor seed = loss;
  seed.grad()[0] = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
  records_.clear();
  for (Tensor& t : tracked_) {
    if (!t.is_leaf()) t.free_grad();
  }
  tracked_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) {
  g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out,
                      std::mt19937_64& rng) {
  double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Tensor::uniform(std::move(shape), -a, a, rng, true);
}

}  // namespace sje
