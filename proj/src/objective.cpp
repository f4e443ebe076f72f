#include "sje/objective.hpp"

#include <stdexcept>

namespace sje {
namespace {

void check_batch(const BatchEmbeddings& batch) {
  if (batch.image.empty() || batch.image.size() != batch.text.size() ||
      batch.image.size() != batch.labels.size()) {
    throw std::invalid_argument("batch needs equal nonzero counts of image "
                                "embeddings, text embeddings and labels");
  }
}

// Shared skeleton of the two hinge sides: per anchor n, rank the matching
// pair against every other batch class, with the anchor's own term pinned at
// zero through the explicit floor.
Tensor ranking_hinge(const BatchEmbeddings& batch, bool image_side) {
  check_batch(batch);
  const std::size_t n = batch.labels.size();
  Tensor total = Tensor::scalar(0.0);
  for (std::size_t a = 0; a < n; ++a) {
    const Tensor match = compatibility(batch.image[a], batch.text[a]);
    std::vector<Tensor> terms;
    terms.push_back(Tensor::scalar(0.0));
    for (std::size_t y = 0; y < n; ++y) {
      const double margin = zero_one_loss(batch.labels[a], batch.labels[y]);
      if (margin == 0.0) continue;  // the anchor's own class contributes 0
      const Tensor wrong = image_side
                               ? compatibility(batch.image[a], batch.text[y])
                               : compatibility(batch.image[y], batch.text[a]);
      terms.push_back(add_scalar(sub(wrong, match), margin));
    }
    total = add(total, max_of(terms));
  }
  return scale(total, 1.0 / static_cast<double>(n));
}

}  // namespace

Objective objective_from_string(const std::string& s) {
  if (s == "ds-sje") return Objective::ds_sje;
  if (s == "da-sje-image") return Objective::da_sje_image;
  if (s == "da-sje-text") return Objective::da_sje_text;
  throw std::invalid_argument("unknown objective: '" + s + "'");
}

std::string to_string(Objective objective) {
  switch (objective) {
    case Objective::ds_sje: return "ds-sje";
    case Objective::da_sje_image: return "da-sje-image";
    case Objective::da_sje_text: return "da-sje-text";
  }
  throw std::logic_error("unreachable objective");
}

Tensor compatibility(const Tensor& image_embedding,
                     const Tensor& text_embedding) {
  return dot(image_embedding, text_embedding);
}

double zero_one_loss(int y1, int y2) { return y1 == y2 ? 0.0 : 1.0; }

Tensor loss_image_side(const BatchEmbeddings& batch) {
  return ranking_hinge(batch, true);
}

Tensor loss_text_side(const BatchEmbeddings& batch) {
  return ranking_hinge(batch, false);
}

Tensor objective_loss(const BatchEmbeddings& batch, Objective objective) {
  switch (objective) {
    case Objective::ds_sje:
      return add(loss_image_side(batch), loss_text_side(batch));
    case Objective::da_sje_image:
      return loss_image_side(batch);
    case Objective::da_sje_text:
      return loss_text_side(batch);
  }
  throw std::logic_error("unreachable objective");
}

std::vector<double> class_text_embedding(
    const TextEncoder& encoder, const std::vector<TextInstance>& captions) {
  if (captions.empty()) {
    throw std::invalid_argument("class_text_embedding needs >= 1 caption");
  }
  std::vector<double> mean(
      static_cast<std::size_t>(encoder.spec().embed_dim), 0.0);
  for (const auto& caption : captions) {
    const Tensor phi = encoder.encode(caption);
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += phi.values()[d];
  }
  for (double& v : mean) v /= static_cast<double>(captions.size());
  return mean;
}

namespace {

int argmax_by_dot(const std::vector<double>& query,
                  const std::vector<std::pair<int, std::vector<double>>>&
                      class_embeddings) {
  if (class_embeddings.empty()) {
    throw std::invalid_argument("classification needs >= 1 class embedding");
  }
  int best_class = 0;
  double best_score = 0.0;
  bool first = true;
  for (const auto& [class_id, embedding] : class_embeddings) {
    if (embedding.size() != query.size()) {
      throw std::invalid_argument(
          "class embedding dimension " + std::to_string(embedding.size()) +
          " does not match query dimension " + std::to_string(query.size()));
    }
    double score = 0.0;
    for (std::size_t d = 0; d < query.size(); ++d) {
      score += query[d] * embedding[d];
    }
    if (first || score > best_score ||
        (score == best_score && class_id < best_class)) {
      best_class = class_id;
      best_score = score;
      first = false;
    }
  }
  return best_class;
}

}  // namespace

int classify_image(const std::vector<double>& image_embedding,
                   const std::vector<std::pair<int, std::vector<double>>>&
                       class_text_embeddings) {
  return argmax_by_dot(image_embedding, class_text_embeddings);
}

int classify_text(const std::vector<double>& text_embedding,
                  const std::vector<std::pair<int, std::vector<double>>>&
                      class_image_embeddings) {
  return argmax_by_dot(text_embedding, class_image_embeddings);
}

}  // namespace sje
