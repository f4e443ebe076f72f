#pragma once

// Brute-force reference implementations used only by the tests. These stay
// deliberately naive (plain loops, no shared code with the library) so they
// can serve as independent oracles for the real kernels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  const std::size_t m = a.size(), k = b.size(), n = b[0].size();
  Matrix out(m, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) out[i][j] += a[i][p] * b[p][j];
  return out;
}

// input[c][t], kernels[o][c][w]
inline Matrix conv1d(const Matrix& input,
                     const std::vector<Matrix>& kernels, int stride) {
  const int in_ch = static_cast<int>(input.size());
  const int length = static_cast<int>(input[0].size());
  const int out_ch = static_cast<int>(kernels.size());
  const int width = static_cast<int>(kernels[0][0].size());
  const int out_len = (length - width) / stride + 1;
  Matrix out(out_ch, std::vector<double>(out_len, 0.0));
  for (int o = 0; o < out_ch; ++o)
    for (int t = 0; t < out_len; ++t)
      for (int c = 0; c < in_ch; ++c)
        for (int w = 0; w < width; ++w)
          out[o][t] += input[c][t * stride + w] * kernels[o][c][w];
  return out;
}

inline Matrix maxpool1d(const Matrix& input, int window) {
  const int ch = static_cast<int>(input.size());
  const int length = static_cast<int>(input[0].size());
  const int out_len = length / window;
  Matrix out(ch, std::vector<double>(out_len, 0.0));
  for (int c = 0; c < ch; ++c)
    for (int t = 0; t < out_len; ++t) {
      double best = input[c][t * window];
      for (int w = 1; w < window; ++w)
        best = std::max(best, input[c][t * window + w]);
      out[c][t] = best;
    }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline std::vector<double> mean(const std::vector<std::vector<double>>& vs) {
  std::vector<double> out(vs[0].size(), 0.0);
  for (const auto& v : vs)
    for (std::size_t i = 0; i < v.size(); ++i) out[i] += v[i];
  for (double& x : out) x /= static_cast<double>(vs.size());
  return out;
}

// Exhaustive per-anchor structured hinge, image side:
// mean_n max(0, max_{y != y_n} (1 + F(v_n,t_y) - F(v_n,t_n)))
// where F(v_i, t_j) = image_emb[i] . text_emb[j] and entry n holds class
// labels[n]. The text-side loss swaps the roles of the two embeddings.
inline double hinge_image_side(const std::vector<std::vector<double>>& image_emb,
                               const std::vector<std::vector<double>>& text_emb,
                               const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double match = dot(image_emb[a], text_emb[a]);
    double worst = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (labels[y] == labels[a]) continue;
      worst = std::max(worst, 1.0 + dot(image_emb[a], text_emb[y]) - match);
    }
    total += worst;
  }
  return total / static_cast<double>(n);
}

inline double hinge_text_side(const std::vector<std::vector<double>>& image_emb,
                              const std::vector<std::vector<double>>& text_emb,
                              const std::vector<int>& labels) {
  const std::size_t n = labels.size();
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double match = dot(image_emb[a], text_emb[a]);
    double worst = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (labels[y] == labels[a]) continue;
      worst = std::max(worst, 1.0 + dot(image_emb[y], text_emb[a]) - match);
    }
    total += worst;
  }
  return total / static_cast<double>(n);
}

// Precision within the top-k of a ranked candidate list, as a percentage.
// Candidates are (score, image_id, class_id); ranking is by descending score
// with ascending image_id breaking ties.
struct RankedImage {
  double score;
  int image_id;
  int class_id;
};

inline double precision_at_k(std::vector<RankedImage> candidates,
                             int query_class, int k) {
  std::sort(candidates.begin(), candidates.end(),
            [](const RankedImage& a, const RankedImage& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.image_id < b.image_id;
            });
  const int top = std::min<int>(k, static_cast<int>(candidates.size()));
  int hits = 0;
  for (int i = 0; i < top; ++i) {
    if (candidates[i].class_id == query_class) ++hits;
  }
  return 100.0 * hits / top;
}

inline int argmax_class(
    const std::vector<double>& query,
    const std::vector<std::pair<int, std::vector<double>>>& class_embs) {
  int best_class = class_embs[0].first;
  double best = dot(query, class_embs[0].second);
  for (std::size_t i = 1; i < class_embs.size(); ++i) {
    const double s = dot(query, class_embs[i].second);
    if (s > best) {
      best = s;
      best_class = class_embs[i].first;
    }
  }
  return best_class;
}

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, std::vector<double>(cols));
  for (auto& r : m)
    for (auto& v : r) v = dist(rng);
  return m;
}

inline std::vector<double> flat(const Matrix& m) {
  std::vector<double> out;
  for (const auto& r : m) out.insert(out.end(), r.begin(), r.end());
  return out;
}

}  // namespace oracle
