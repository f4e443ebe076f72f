#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sje/encoders.hpp"
#include "sje/tensor.hpp"

namespace sje {

// Which misclassification terms are trained: the symmetric objective sums
// both sides, the asymmetric variants keep only one.
enum class Objective { ds_sje, da_sje_image, da_sje_text };

Objective objective_from_string(const std::string& s);
std::string to_string(Objective objective);

// F(v, t): inner product of the two embeddings.
Tensor compatibility(const Tensor& image_embedding,
                     const Tensor& text_embedding);

double zero_one_loss(int y1, int y2);

// One anchor per class: embedding pairs with their (distinct) class labels.
// The expectation over a class's descriptions/images is estimated by the
// single sample the batch holds for that class.
struct BatchEmbeddings {
  std::vector<Tensor> image;  // theta(v_n)
  std::vector<Tensor> text;   // phi(t_n)
  std::vector<int> labels;    // y_n
};

// Image-side ranking hinge, averaged over anchors:
//   mean_n max(0, max_{y != y_n} (Delta(y_n, y) + F(v_n, t_y) - F(v_n, t_n)))
Tensor loss_image_side(const BatchEmbeddings& batch);
// Mirror with the roles of images and texts swapped.
Tensor loss_text_side(const BatchEmbeddings& batch);
// ds_sje -> image side + text side; da variants keep a single side.
Tensor objective_loss(const BatchEmbeddings& batch, Objective objective);

// Mean of phi over the given captions of one class (no gradients needed at
// evaluation time, so plain vectors suffice).
std::vector<double> class_text_embedding(const TextEncoder& encoder,
                                         const std::vector<TextInstance>& captions);

// Argmax of inner product against per-class embeddings; ties resolve to the
// smallest class id.
int classify_image(const std::vector<double>& image_embedding,
                   const std::vector<std::pair<int, std::vector<double>>>&
                       class_text_embeddings);
int classify_text(const std::vector<double>& text_embedding,
                  const std::vector<std::pair<int, std::vector<double>>>&
                      class_image_embeddings);

}  // namespace sje
