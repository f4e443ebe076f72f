#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sje/text.hpp"

namespace sje {

// Image features are precomputed and fixed: the image side of the model only
// ever projects them, never updates them.
struct ImageFeature {
  int image_id = 0;
  int class_id = 0;
  std::vector<double> vector;
};

struct Caption {
  int image_id = 0;
  int class_id = 0;
  std::string raw_text;
};

// One vector per class (class-averaged attributes).
struct AttributeVector {
  int class_id = 0;
  std::vector<double> values;
};

struct ClassSplits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

using WordVectorTable = std::map<std::string, std::vector<double>>;

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A dataset split by class: train/val/test share no classes, so evaluation on
// test classes is zero-shot by construction.
struct ClassSplitDataset {
  std::vector<ImageFeature> images;
  std::vector<Caption> captions;
  ClassSplits splits;
  std::vector<AttributeVector> attributes;  // empty when the dataset has none
  WordVectorTable word_vectors;             // empty when the dataset has none

  int feature_dim() const;
  int attribute_dim() const;  // 0 when attributes are absent
  bool has_attributes() const { return !attributes.empty(); }
  bool has_word_vectors() const { return !word_vectors.empty(); }
  std::vector<int> all_class_ids() const;  // sorted union of the three splits

  // Checks every structural invariant; throws DatasetError with a message
  // naming the first violation found.
  void validate() const;
};

// Lookup structure over a validated dataset. Indices refer to positions in
// dataset.images / dataset.captions.
struct DatasetIndex {
  explicit DatasetIndex(const ClassSplitDataset& dataset);

  const std::vector<int>& image_rows(int class_id) const;
  const std::vector<int>& caption_rows(int class_id) const;
  const std::vector<int>& caption_rows_of_image(int image_id) const;
  const AttributeVector& attributes_of(int class_id) const;

 private:
  std::map<int, std::vector<int>> images_by_class_;
  std::map<int, std::vector<int>> captions_by_class_;
  std::map<int, std::vector<int>> captions_by_image_;
  std::map<int, int> attribute_row_;
  const ClassSplitDataset* dataset_;
};

// On-disk layout under a directory: features.csv, captions.tsv, splits.json,
// and optionally attributes.csv and wordvecs.txt.
ClassSplitDataset load_dataset(const std::string& root);
void save_dataset(const ClassSplitDataset& dataset, const std::string& root);

// wordvecs.txt format: one entry per line, "word v0 v1 ... v{k-1}".
WordVectorTable load_word_vectors(const std::string& path);
void save_word_vectors(const WordVectorTable& table, const std::string& path);

// Zero vector of the table's dimension for words not present.
std::vector<double> word_vector_or_zero(const WordVectorTable& table,
                                        const std::string& word);
int word_vector_dim(const WordVectorTable& table);

}  // namespace sje
