#pragma once

#include <functional>
#include <memory>
#include <random>

#include "sje/dataset.hpp"
#include "sje/encoders.hpp"
#include "sje/gradcheck.hpp"
#include "sje/objective.hpp"
#include "sje/optim.hpp"

namespace sje {

// Both encoders plus the tables they were built against. `trainable` aliases
// the encoders' parameters under "text." / "image." prefixes, so one
// optimizer step updates the whole model.
struct JointModel {
  EncoderSpec spec;
  ImageEncoderMode image_mode = ImageEncoderMode::identity;
  Alphabet alphabet = Alphabet::standard();
  Vocabulary vocabulary;
  WordVectorTable word_vectors;
  int attribute_dim = 0;  // width of the class attribute vectors, 0 = none
  std::unique_ptr<TextEncoder> text_encoder;
  std::unique_ptr<ImageEncoder> image_encoder;
  ParameterSet trainable;
};

// Builds the vocabulary over every caption in the dataset, then both
// encoders. The image encoder projects when the feature width differs from
// embed_dim and image_mode is linear-projection; identity requires equality.
JointModel build_joint_model(const EncoderSpec& spec,
                             ImageEncoderMode image_mode,
                             const ClassSplitDataset& dataset);

// Same assembly from explicit tables instead of a dataset, e.g. when
// restoring a checkpoint. Freshly initialized parameters.
JointModel assemble_joint_model(const EncoderSpec& spec,
                                ImageEncoderMode image_mode,
                                Alphabet alphabet, Vocabulary vocabulary,
                                WordVectorTable word_vectors,
                                int attribute_dim, int feature_dim);

// Tokenized captions (plus class attributes) for every caption row, computed
// once so batch assembly and evaluation never re-tokenize.
class TextInstanceCache {
 public:
  TextInstanceCache(const ClassSplitDataset& dataset, const JointModel& model);

  const TextInstance& at(int caption_row) const {
    return instances_[static_cast<std::size_t>(caption_row)];
  }
  std::size_t size() const { return instances_.size(); }

 private:
  std::vector<TextInstance> instances_;
};

struct TrainingConfig {
  Objective objective = Objective::ds_sje;
  RmsPropConfig optimizer;  // lr 0.0007, decay 0.95 by default
  int minibatch_classes = 40;
  int epochs = 1;
  std::uint64_t seed = 0;
};

// One sampled (image, caption-of-that-image) pair per distinct class.
struct MiniBatchItem {
  int class_id = 0;
  int image_row = 0;
  int caption_row = 0;
};

struct MiniBatch {
  std::vector<MiniBatchItem> items;
};

// Samples one image of each given class, then one of that image's captions.
MiniBatch sample_minibatch(const ClassSplitDataset& dataset,
                           const DatasetIndex& index,
                           const std::vector<int>& class_ids,
                           std::mt19937_64& rng);

// Encodes every batch item under the active tape.
BatchEmbeddings encode_batch(const MiniBatch& batch,
                             const ClassSplitDataset& dataset,
                             const TextInstanceCache& cache,
                             const JointModel& model);

struct TrainResult {
  std::vector<double> epoch_mean_loss;
};

// Epochs of seeded class shuffling, minibatch assembly, backprop and RMSprop
// updates. `on_epoch` (optional) runs after each epoch, e.g. to checkpoint.
TrainResult train(const ClassSplitDataset& dataset, JointModel& model,
                  const TrainingConfig& config,
                  const std::function<void(int epoch, double mean_loss)>&
                      on_epoch = {});

// Variant driven by a caller-owned optimizer, so its accumulators can come
// from a checkpoint and survive for the next one. config.optimizer is
// ignored in favor of the optimizer's own settings.
TrainResult train(const ClassSplitDataset& dataset, JointModel& model,
                  const TrainingConfig& config, RmsProp& optimizer,
                  const std::function<void(int epoch, double mean_loss)>&
                      on_epoch = {});

// Finite-difference check of the full objective gradient w.r.t. every
// trainable parameter, on one minibatch sampled with `seed`.
GradCheckResult joint_gradcheck(const ClassSplitDataset& dataset,
                                JointModel& model, Objective objective,
                                int minibatch_classes, std::uint64_t seed,
                                const GradCheckOptions& options = {});

}  // namespace sje
