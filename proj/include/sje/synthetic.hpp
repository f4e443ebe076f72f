#pragma once

#include <cstdint>

#include "sje/dataset.hpp"

namespace sje {

// Desk-scale stand-in for a fine-grained image/caption corpus. Each class is a
// distinct nonzero binary attribute code; image features are a fixed random
// linear projection of the code plus Gaussian noise; captions describe the
// active attributes through fixed part-color phrases, so novel classes are
// novel combinations of seen phrases and zero-shot transfer is possible in
// principle.
struct SyntheticConfig {
  int n_classes = 10;
  int n_train_classes = 6;
  int n_val_classes = 0;  // remaining classes after train and val go to test
  int images_per_class = 5;
  int captions_per_image = 10;
  int n_attributes = 8;
  int feature_dim = 32;
  double noise_sigma = 0.05;
  // When true (the default), each caption with at least two active attributes
  // randomly omits one, so captions of one image differ in informativeness.
  bool phrase_dropout = true;
  int word_vector_dim = 16;
  std::uint64_t seed = 1;
};

ClassSplitDataset generate_synthetic(const SyntheticConfig& config);

// The fixed phrase describing attribute k, e.g. "crest is crimson".
std::string attribute_phrase(int k);

}  // namespace sje
