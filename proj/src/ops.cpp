#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "sje/tensor.hpp"

namespace sje {

namespace {

bool tape_wants(std::initializer_list<const Tensor*> inputs) {
  if (Tape::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Registers the backward closure and keeps the involved tensors alive until
// backward has run.
void record_op(Tensor& out, std::initializer_list<Tensor> inputs,
               std::function<void()> backward_fn) {
  Tape* tape = Tape::active();
  out.enable_grad_nonleaf();
  for (const Tensor& t : inputs) tape->track(t);
  tape->track(out);
  tape->record(std::move(backward_fn));
}

void check_2d(const Tensor& t, const char* op) {
  if (t.ndim() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected a 2-d tensor, got " +
                                shape_string(t.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_2d(a, "matmul");
  check_2d(b, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: inner dimensions disagree, " +
                                shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out = Tensor::zeros({m, n});
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      for (int j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
    }
  }
  if (tape_wants({&a, &b})) {
    record_op(out, {a, b}, [a, b, out, m, k, n]() mutable {
      if (!out.has_grad()) return;
      const auto& go = out.grad_data();
      if (a.requires_grad()) {
        auto& da = a.grad();
        const auto& bv = b.values();
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += go[i * n + j] * bv[p * n + j];
            da[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        auto& db = b.grad();
        const auto& av = a.values();
        for (int p = 0; p < k; ++p)
          for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += av[i * k + p] * go[i * n + j];
            db[p * n + j] += acc;
          }
      }
    });
  }
  return out;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  check_2d(w, "matvec");
  if (x.ndim() != 1 || w.dim(1) != x.dim(0)) {
    throw std::invalid_argument("matvec: shapes disagree, " +
                                shape_string(w.shape()) + " vs " +
                                shape_string(x.shape()));
  }
  const int m = w.dim(0), n = w.dim(1);
  Tensor out = Tensor::zeros({m});
  const auto& wv = w.values();
  const auto& xv = x.values();
  auto& ov = out.values();
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += wv[i * n + j] * xv[j];
    ov[i] = acc;
  }
  if (tape_wants({&w, &x})) {
    record_op(out, {w, x}, [w, x, out, m, n]() mutable {
      if (!out.has_grad()) return;
      const auto& go = out.grad_data();
      if (w.requires_grad()) {
        auto& dw = w.grad();
        const auto& xv = x.values();
        for (int i = 0; i < m; ++i) {
          if (go[i] == 0.0) continue;
          for (int j = 0; j < n; ++j) dw[i * n + j] += go[i] * xv[j];
        }
      }
      if (x.requires_grad()) {
        auto& dx = x.grad();
        const auto& wv = w.values();
        for (int i = 0; i < m; ++i) {
          if (go[i] == 0.0) continue;
          for (int j = 0; j < n; ++j) dx[j] += wv[i * n + j] * go[i];
        }
      }
    });
  }
  return out;
}

Tensor conv1d(const Tensor& input, const Tensor& kernels, int stride) {
  check_2d(input, "conv1d");
  if (kernels.ndim() != 3) {
    throw std::invalid_argument("conv1d: kernels must be 3-d, got " +
                                shape_string(kernels.shape()));
  }
  if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  const int in_ch = input.dim(0), length = input.dim(1);
  const int out_ch = kernels.dim(0), k_ch = kernels.dim(1), width = kernels.dim(2);
  if (k_ch != in_ch) {
    throw std::invalid_argument("conv1d: channel mismatch, input " +
                                shape_string(input.shape()) + " vs kernels " +
                                shape_string(kernels.shape()));
  }
  if (width > length) {
    throw std::invalid_argument(
        "conv1d: kernel width " + std::to_string(width) +
        " exceeds input length " + std::to_string(length));
  }
  const int out_len = (length - width) / stride + 1;
  Tensor out = Tensor::zeros({out_ch, out_len});
  const auto& iv = input.values();
  const auto& kv = kernels.values();
  auto& ov = out.values();
  for (int o = 0; o < out_ch; ++o) {
    for (int t = 0; t < out_len; ++t) {
      double acc = 0.0;
      const int base = t * stride;
      for (int c = 0; c < in_ch; ++c)
        for (int w = 0; w < width; ++w)
          acc += iv[c * length + base + w] * kv[(o * in_ch + c) * width + w];
      ov[o * out_len + t] = acc;
    }
  }
  if (tape_wants({&input, &kernels})) {
    record_op(out, {input, kernels},
              [input, kernels, out, in_ch, length, out_ch, width, out_len,
               stride]() mutable {
                if (!out.has_grad()) return;
                const auto& go = out.grad_data();
                const auto& iv = input.values();
                const auto& kv = kernels.values();
                if (input.requires_grad()) {
                  auto& din = input.grad();
                  for (int o = 0; o < out_ch; ++o)
                    for (int t = 0; t < out_len; ++t) {
                      const double g = go[o * out_len + t];
                      if (g == 0.0) continue;
                      const int base = t * stride;
                      for (int c = 0; c < in_ch; ++c)
                        for (int w = 0; w < width; ++w)
                          din[c * length + base + w] +=
                              g * kv[(o * in_ch + c) * width + w];
                    }
                }
                if (kernels.requires_grad()) {
                  auto& dk = kernels.grad();
                  for (int o = 0; o < out_ch; ++o)
                    for (int t = 0; t < out_len; ++t) {
                      const double g = go[o * out_len + t];
                      if (g == 0.0) continue;
                      const int base = t * stride;
                      for (int c = 0; c < in_ch; ++c)
                        for (int w = 0; w < width; ++w)
                          dk[(o * in_ch + c) * width + w] +=
                              g * iv[c * length + base + w];
                    }
                }
              });
  }
  return out;
}

Tensor maxpool1d(const Tensor& input, int window) {
  check_2d(input, "maxpool1d");
  if (window < 1) throw std::invalid_argument("maxpool1d: window must be >= 1");
  const int ch = input.dim(0), length = input.dim(1);
  const int out_len = length / window;
  if (out_len < 1) {
    throw std::invalid_argument("maxpool1d: window " + std::to_string(window) +
                                " exceeds input length " + std::to_string(length));
  }
  Tensor out = Tensor::zeros({ch, out_len});
  std::vector<int> argmax(static_cast<std::size_t>(ch) * out_len);
  const auto& iv = input.values();
  auto& ov = out.values();
  for (int c = 0; c < ch; ++c) {
    for (int t = 0; t < out_len; ++t) {
      int best = t * window;
      double bestv = iv[c * length + best];
      for (int w = 1; w < window; ++w) {
        const int pos = t * window + w;
        if (iv[c * length + pos] > bestv) {
          bestv = iv[c * length + pos];
          best = pos;
        }
      }
      ov[c * out_len + t] = bestv;
      argmax[static_cast<std::size_t>(c) * out_len + t] = best;
    }
  }
  if (tape_wants({&input})) {
    record_op(out, {input},
              [input, out, argmax = std::move(argmax), ch, length, out_len]() mutable {
                if (!out.has_grad() || !input.requires_grad()) return;
                const auto& go = out.grad_data();
                auto& din = input.grad();
                for (int c = 0; c < ch; ++c)
                  for (int t = 0; t < out_len; ++t)
                    din[c * length + argmax[static_cast<std::size_t>(c) * out_len + t]] +=
                        go[c * out_len + t];
              });
  }
  return out;
}

Tensor relu(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  if (tape_wants({&x})) {
    record_op(out, {x}, [x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const auto& go = out.grad_data();
      const auto& xv = x.values();
      auto& dx = x.grad();
      for (std::size_t i = 0; i < xv.size(); ++i) {
        if (xv[i] > 0.0) dx[i] += go[i];
      }
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = stable_sigmoid(xv[i]);
  if (tape_wants({&x})) {
    record_op(out, {x}, [x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const auto& go = out.grad_data();
      const auto& ov = out.values();
      auto& dx = x.grad();
      for (std::size_t i = 0; i < ov.size(); ++i)
        dx[i] += go[i] * ov[i] * (1.0 - ov[i]);
    });
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = std::tanh(xv[i]);
  if (tape_wants({&x})) {
    record_op(out, {x}, [x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const auto& go = out.grad_data();
      const auto& ov = out.values();
      auto& dx = x.grad();
      for (std::size_t i = 0; i < ov.size(); ++i)
        dx[i] += go[i] * (1.0 - ov[i] * ov[i]);
    });
  }
  return out;
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch, " +
                                shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  if (tape_wants({&a, &b})) {
    record_op(out, {a, b}, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& go = out.grad_data();
      if (a.requires_grad()) {
        auto& da = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) da[i] += go[i];
      }
      if (b.requires_grad()) {
        auto& db = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) db[i] += go[i];
      }
    });
  }
  return out;
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  check_2d(x, "add_channel_bias");
  if (bias.ndim() != 1 || bias.dim(0) != x.dim(0)) {
    throw std::invalid_argument("add_channel_bias: bias " +
                                shape_string(bias.shape()) +
                                " does not match channels of " +
                                shape_string(x.shape()));
  }
  const int ch = x.dim(0), len = x.dim(1);
  Tensor out = Tensor::zeros(x.shape());
  const auto& xv = x.values();
  const auto& bv = bias.values();
  auto& ov = out.values();
  for (int c = 0; c < ch; ++c)
    for (int t = 0; t < len; ++t) ov[c * len + t] = xv[c * len + t] + bv[c];
  if (tape_wants({&x, &bias})) {
    record_op(out, {x, bias}, [x, bias, out, ch, len]() mutable {
      if (!out.has_grad()) return;
      const auto& go = out.grad_data();
      if (x.requires_grad()) {
        auto& dx = x.grad();
        for (std::size_t i = 0; i < go.size(); ++i) dx[i] += go[i];
      }
      if (bias.requires_grad()) {
        auto& db = bias.grad();
        for (int c = 0; c < ch; ++c) {
          double acc = 0.0;
          for (int t = 0; t < len; ++t) acc += go[c * len + t];
          db[c] += acc;
        }
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
  if (tape_wants({&a, &b})) {
    record_op(out, {a, b}, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& go = out.grad_data();
      if (a.requires_grad()) {
        auto& da = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) da[i] += go[i];
      }
      if (b.requires_grad()) {
        auto& db = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) db[i] -= go[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  if (tape_wants({&a, &b})) {
    record_op(out, {a, b}, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const auto& go = out.grad_data();
      if (a.requires_grad()) {
        auto& da = a.grad();
        const auto& bv = b.values();
        for (std::size_t i = 0; i < go.size(); ++i) da[i] += go[i] * bv[i];
      }
      if (b.requires_grad()) {
        auto& db = b.grad();
        const auto& av = a.values();
        for (std::size_t i = 0; i < go.size(); ++i) db[i] += go[i] * av[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * c;
  if (tape_wants({&a})) {
    record_op(out, {a}, [a, out, c]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const auto& go = out.grad_data();
      auto& da = a.grad();
      for (std::size_t i = 0; i < go.size(); ++i) da[i] += go[i] * c;
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& a, double c) {
  Tensor out = Tensor::zeros(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + c;
  if (tape_wants({&a})) {
    record_op(out, {a}, [a, out]() mutable {
      if (!out.has_grad() || !a.requires_grad()) return;
      const auto& go = out.grad_data();
      auto& da = a.grad();
      for (std::size_t i = 0; i < go.size(); ++i) da[i] += go[i];
    });
  }
  return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "dot");
  const auto& av = a.values();
  const auto& bv = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  Tensor out = Tensor::scalar(acc);
  if (tape_wants({&a, &b})) {
    record_op(out, {a, b}, [a, b, out]() mutable {
      if (!out.has_grad()) return;
      const double g = out.grad_data()[0];
      if (g == 0.0) return;
      if (a.requires_grad()) {
        auto& da = a.grad();
        const auto& bv = b.values();
        for (std::size_t i = 0; i < bv.size(); ++i) da[i] += g * bv[i];
      }
      if (b.requires_grad()) {
        auto& db = b.grad();
        const auto& av = a.values();
        for (std::size_t i = 0; i < av.size(); ++i) db[i] += g * av[i];
      }
    });
  }
  return out;
}

Tensor temporal_mean(const std::vector<Tensor>& steps) {
  if (steps.empty()) {
    throw std::invalid_argument("temporal_mean: empty sequence");
  }
  const std::size_t n = steps.front().size();
  for (const Tensor& t : steps) check_same_shape(steps.front(), t, "temporal_mean");
  Tensor out = Tensor::zeros(steps.front().shape());
  auto& ov = out.values();
  for (const Tensor& t : steps) {
    const auto& tv = t.values();
    for (std::size_t i = 0; i < n; ++i) ov[i] += tv[i];
  }
  const double inv = 1.0 / static_cast<double>(steps.size());
  for (std::size_t i = 0; i < n; ++i) ov[i] *= inv;

  bool any = false;
  for (const Tensor& t : steps) any = any || t.requires_grad();
  if (Tape::active() && any) {
    Tape* tape = Tape::active();
    for (const Tensor& t : steps) tape->track(t);
    out.enable_grad_nonleaf();
    tape->track(out);
    tape->record([steps, out, inv]() mutable {
      if (!out.has_grad()) return;
      const auto& go = out.grad_data();
      for (const Tensor& t : steps) {
        if (!t.requires_grad()) continue;
        auto& dt = t.grad();
        for (std::size_t i = 0; i < go.size(); ++i) dt[i] += go[i] * inv;
      }
    });
  }
  return out;
}

Tensor max_of(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) {
    throw std::invalid_argument("max_of: empty candidate list");
  }
  std::size_t best = 0;
  double bestv = scalars[0].item();
  for (std::size_t i = 1; i < scalars.size(); ++i) {
    const double v = scalars[i].item();
    if (v > bestv) {
      bestv = v;
      best = i;
    }
  }
  Tensor out = Tensor::scalar(bestv);
  bool any = false;
  for (const Tensor& t : scalars) any = any || t.requires_grad();
  if (Tape::active() && any) {
    Tape* tape = Tape::active();
    Tensor winner = scalars[best];
    for (const Tensor& t : scalars) tape->track(t);
    out.enable_grad_nonleaf();
    tape->track(out);
    tape->record([winner, out]() mutable {
      if (!out.has_grad() || !winner.requires_grad()) return;
      winner.grad()[0] += out.grad_data()[0];
    });
  }
  return out;
}

Tensor row(const Tensor& w, int index) {
  check_2d(w, "row");
  const int rows = w.dim(0), cols = w.dim(1);
  if (index < 0 || index >= rows) {
    throw std::out_of_range("row: index " + std::to_string(index) +
                            " out of range for " + shape_string(w.shape()));
  }
  Tensor out = Tensor::zeros({cols});
  const auto& wv = w.values();
  auto& ov = out.values();
  for (int j = 0; j < cols; ++j) ov[j] = wv[index * cols + j];
  if (tape_wants({&w})) {
    record_op(out, {w}, [w, out, index, cols]() mutable {
      if (!out.has_grad() || !w.requires_grad()) return;
      const auto& go = out.grad_data();
      auto& dw = w.grad();
      for (int j = 0; j < cols; ++j) dw[index * cols + j] += go[j];
    });
  }
  return out;
}

Tensor column(const Tensor& x, int index) {
  check_2d(x, "column");
  const int rows = x.dim(0), cols = x.dim(1);
  if (index < 0 || index >= cols) {
    throw std::out_of_range("column: index " + std::to_string(index) +
                            " out of range for " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros({rows});
  const auto& xv = x.values();
  auto& ov = out.values();
  for (int i = 0; i < rows; ++i) ov[i] = xv[i * cols + index];
  if (tape_wants({&x})) {
    record_op(out, {x}, [x, out, index, rows, cols]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const auto& go = out.grad_data();
      auto& dx = x.grad();
      for (int i = 0; i < rows; ++i) dx[i * cols + index] += go[i];
    });
  }
  return out;
}

Tensor flatten(const Tensor& x) {
  Tensor out = Tensor::from_values({static_cast<int>(x.size())}, x.values());
  if (tape_wants({&x})) {
    record_op(out, {x}, [x, out]() mutable {
      if (!out.has_grad() || !x.requires_grad()) return;
      const auto& go = out.grad_data();
      auto& dx = x.grad();
      for (std::size_t i = 0; i < go.size(); ++i) dx[i] += go[i];
    });
  }
  return out;
}

}  // namespace sje
