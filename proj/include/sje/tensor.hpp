#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace sje {

// Dense double-precision tensor with an optional gradient buffer.
// A Tensor is a cheap handle: copying it aliases the same storage, so a
// parameter captured by an op's backward closure and the parameter held by
// an encoder are the same memory. Use clone() for a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double value);
  // Uniform values in [lo, hi).
  static Tensor uniform(std::vector<int> shape, double lo, double hi,
                        std::mt19937_64& rng, bool requires_grad = false);

  bool defined() const { return s_ != nullptr; }
  const std::vector<int>& shape() const { return s_->shape; }
  int ndim() const { return static_cast<int>(s_->shape.size()); }
  int dim(int i) const { return s_->shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return s_->values.size(); }

  std::vector<double>& values() { return s_->values; }
  const std::vector<double>& values() const { return s_->values; }

  // Scalar access; throws unless the tensor holds exactly one value.
  double item() const;

  bool requires_grad() const { return s_->requires_grad; }
  bool is_leaf() const { return s_->leaf; }
  bool has_grad() const { return !s_->grad.empty(); }

  // Grad buffer, allocated (zero-filled) on first use. Grad mutators are
  // const because a Tensor is a handle: const-ness protects the handle,
  // not the shared storage, and backward closures hold const copies.
  std::vector<double>& grad() const;
  const std::vector<double>& grad_data() const { return s_->grad; }

  void zero_grad() const;
  void free_grad() const { s_->grad.clear(); s_->grad.shrink_to_fit(); }

  Tensor clone() const;

  // Marks an op output as grad-carrying without making it a leaf. Called by
  // the primitive ops when recording onto a tape.
  void enable_grad_nonleaf();

  bool all_finite() const;

  // Identity of the underlying storage, for keying optimizer state etc.
  const void* storage_id() const { return s_.get(); }

  bool same_storage(const Tensor& other) const { return s_ == other.s_; }

 private:
  struct Storage {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    bool leaf = true;
  };
  std::shared_ptr<Storage> s_;

  explicit Tensor(std::shared_ptr<Storage> s) : s_(std::move(s)) {}
};

// Ordered collection of named parameters. Iteration order is insertion
// order, which keeps checkpoints and optimizer updates deterministic.
class ParameterSet {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor* find(const std::string& name);
  const Tensor* find(const std::string& name) const;

  std::size_t size() const { return items_.size(); }
  std::size_t total_values() const;

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  void append(const ParameterSet& other);
  void zero_grads();

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

// Record of the primitive ops executed during a forward pass. Ops are
// appended in execution order, so running the records in reverse replays
// adjoints in reverse topological order. backward() consumes the records
// and frees the grad buffers of intermediate (non-leaf) tensors.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  void record(std::function<void()> backward_fn);
  void track(const Tensor& t);
  void backward(const Tensor& loss);

  std::size_t num_records() const { return records_.size(); }

  static Tape* active();

 private:
  std::vector<std::function<void()>> records_;
  std::vector<Tensor> tracked_;
  friend class TapeScope;
};

// Makes a tape the active recording target for the current thread.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// ---- Primitive ops -------------------------------------------------------
// Each op computes its forward result eagerly and, when a tape is active and
// an input requires grad, records a backward closure onto the tape.

// [m x k] . [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m x n] . [n] -> [m]
Tensor matvec(const Tensor& w, const Tensor& x);
// Valid cross-correlation along the time axis.
// input [in_ch x len], kernels [out_ch x in_ch x width] -> [out_ch x out_len]
Tensor conv1d(const Tensor& input, const Tensor& kernels, int stride = 1);
// Non-overlapping windowed max per channel; remainder columns are dropped.
Tensor maxpool1d(const Tensor& input, int window);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
// x [c x t] + bias [c] broadcast over time.
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor dot(const Tensor& a, const Tensor& b);
// Mean over a sequence of same-shaped tensors; gradient spreads 1/L to each.
Tensor temporal_mean(const std::vector<Tensor>& steps);
// Max over scalar tensors; subgradient goes to the first maximal entry.
Tensor max_of(const std::vector<Tensor>& scalars);
// Row of a matrix (embedding lookup): w [r x c], index -> [c]
Tensor row(const Tensor& w, int index);
// Column of a matrix: x [r x c], index -> [r]
Tensor column(const Tensor& x, int index);
Tensor flatten(const Tensor& x);

// Uniform init in [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(std::vector<int> shape, int fan_in, int fan_out,
                      std::mt19937_64& rng);

std::string shape_string(const std::vector<int>& shape);

}  // namespace sje
