#include "sje/train.hpp"

#include <algorithm>
#include <stdexcept>

namespace sje {

JointModel build_joint_model(const EncoderSpec& spec,
                             ImageEncoderMode image_mode,
                             const ClassSplitDataset& dataset) {
  const Alphabet alphabet = Alphabet::standard();
  std::vector<std::string> normalized;
  normalized.reserve(dataset.captions.size());
  for (const auto& caption : dataset.captions) {
    normalized.push_back(
        normalize_text(caption.raw_text, TextLevel::word, alphabet));
  }
  return assemble_joint_model(spec, image_mode, alphabet,
                              Vocabulary::build(normalized),
                              dataset.word_vectors, dataset.attribute_dim(),
                              dataset.feature_dim());
}

JointModel assemble_joint_model(const EncoderSpec& spec,
                                ImageEncoderMode image_mode,
                                Alphabet alphabet, Vocabulary vocabulary,
                                WordVectorTable word_vectors,
                                int attribute_dim, int feature_dim) {
  JointModel model;
  model.spec = spec;
  model.image_mode = image_mode;
  model.alphabet = std::move(alphabet);
  model.vocabulary = std::move(vocabulary);
  model.word_vectors = std::move(word_vectors);
  model.attribute_dim = attribute_dim;

  model.text_encoder =
      build_text_encoder(spec, model.vocabulary, model.alphabet,
                         model.word_vectors, attribute_dim);
  model.image_encoder = std::make_unique<ImageEncoder>(
      image_mode, feature_dim, spec.embed_dim, spec.seed + 1);

  for (auto& [name, tensor] : model.text_encoder->params()) {
    model.trainable.add("text." + name, tensor);
  }
  for (auto& [name, tensor] : model.image_encoder->params()) {
    model.trainable.add("image." + name, tensor);
  }
  return model;
}

TextInstanceCache::TextInstanceCache(const ClassSplitDataset& dataset,
                                     const JointModel& model) {
  const DatasetIndex index(dataset);
  const EncoderSpec& spec = model.spec;
  instances_.reserve(dataset.captions.size());
  for (const auto& caption : dataset.captions) {
    TextInstance inst;
    if (spec.level == TextLevel::word) {
      inst.sequence =
          tokenize_words(caption.raw_text, model.vocabulary, model.alphabet,
                         spec.effective_max_len());
    } else {
      inst.sequence = tokenize_chars(caption.raw_text, model.alphabet,
                                     spec.effective_max_len());
    }
    if (dataset.has_attributes()) {
      inst.attributes = index.attributes_of(caption.class_id).values;
    }
    instances_.push_back(std::move(inst));
  }
}

MiniBatch sample_minibatch(const ClassSplitDataset& dataset,
                           const DatasetIndex& index,
                           const std::vector<int>& class_ids,
                           std::mt19937_64& rng) {
  MiniBatch batch;
  batch.items.reserve(class_ids.size());
  for (std::size_t i = 0; i < class_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < class_ids.size(); ++j) {
      if (class_ids[i] == class_ids[j]) {
        throw std::invalid_argument("minibatch classes must be distinct");
      }
    }
  }
  for (int class_id : class_ids) {
    const auto& image_rows = index.image_rows(class_id);
    std::uniform_int_distribution<std::size_t> pick_image(
        0, image_rows.size() - 1);
    const int image_row = image_rows[pick_image(rng)];
    const auto& caption_rows = index.caption_rows_of_image(
        dataset.images[static_cast<std::size_t>(image_row)].image_id);
    std::uniform_int_distribution<std::size_t> pick_caption(
        0, caption_rows.size() - 1);
    batch.items.push_back(
        {class_id, image_row, caption_rows[pick_caption(rng)]});
  }
  return batch;
}

BatchEmbeddings encode_batch(const MiniBatch& batch,
                             const ClassSplitDataset& dataset,
                             const TextInstanceCache& cache,
                             const JointModel& model) {
  BatchEmbeddings out;
  out.image.reserve(batch.items.size());
  out.text.reserve(batch.items.size());
  out.labels.reserve(batch.items.size());
  for (const auto& item : batch.items) {
    const auto& image = dataset.images[static_cast<std::size_t>(item.image_row)];
    out.image.push_back(model.image_encoder->encode(image.vector));
    out.text.push_back(model.text_encoder->encode(cache.at(item.caption_row)));
    out.labels.push_back(item.class_id);
  }
  return out;
}

TrainResult train(const ClassSplitDataset& dataset, JointModel& model,
                  const TrainingConfig& config,
                  const std::function<void(int epoch, double mean_loss)>&
                      on_epoch) {
  RmsProp optimizer(config.optimizer);
  return train(dataset, model, config, optimizer, on_epoch);
}

TrainResult train(const ClassSplitDataset& dataset, JointModel& model,
                  const TrainingConfig& config, RmsProp& optimizer,
                  const std::function<void(int epoch, double mean_loss)>&
                      on_epoch) {
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  const int n_train = static_cast<int>(dataset.splits.train.size());
  if (n_train < 2) {
    throw std::invalid_argument(
        "training needs at least 2 train classes to rank against");
  }
  if (config.minibatch_classes < 1 || config.minibatch_classes > n_train) {
    throw std::invalid_argument(
        "minibatch_classes (" + std::to_string(config.minibatch_classes) +
        ") must be in 1.." + std::to_string(n_train));
  }

  const DatasetIndex index(dataset);
  const TextInstanceCache cache(dataset, model);
  std::mt19937_64 rng(config.seed);

  TrainResult result;
  std::vector<int> classes = dataset.splits.train;
  std::sort(classes.begin(), classes.end());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(classes.begin(), classes.end(), rng);
    double loss_sum = 0.0;
    int n_batches = 0;
    for (int start = 0; start < n_train; start += config.minibatch_classes) {
      const int end = std::min(n_train, start + config.minibatch_classes);
      // A trailing chunk of one class defines no ranking constraint.
      if (end - start < 2) continue;
      const std::vector<int> chunk(classes.begin() + start,
                                   classes.begin() + end);
      const MiniBatch batch = sample_minibatch(dataset, index, chunk, rng);

      Tape tape;
      double batch_loss = 0.0;
      {
        TapeScope scope(tape);
        const BatchEmbeddings embeddings =
            encode_batch(batch, dataset, cache, model);
        const Tensor loss = objective_loss(embeddings, config.objective);
        if (!loss.all_finite()) {
          throw std::runtime_error(
              "non-finite loss in epoch " + std::to_string(epoch) +
              ", batch starting at class index " + std::to_string(start));
        }
        batch_loss = loss.item();
        tape.backward(loss);
      }
      optimizer.step(model.trainable);
      loss_sum += batch_loss;
      ++n_batches;
    }
    const double mean_loss = loss_sum / static_cast<double>(n_batches);
    result.epoch_mean_loss.push_back(mean_loss);
    if (on_epoch) on_epoch(epoch, mean_loss);
  }
  return result;
}

GradCheckResult joint_gradcheck(const ClassSplitDataset& dataset,
                                JointModel& model, Objective objective,
                                int minibatch_classes, std::uint64_t seed,
                                const GradCheckOptions& options) {
  const int n_train = static_cast<int>(dataset.splits.train.size());
  if (n_train < 2) {
    throw std::invalid_argument("gradient check needs at least 2 train classes");
  }
  const DatasetIndex index(dataset);
  const TextInstanceCache cache(dataset, model);
  std::mt19937_64 rng(seed);

  std::vector<int> classes = dataset.splits.train;
  std::sort(classes.begin(), classes.end());
  std::shuffle(classes.begin(), classes.end(), rng);
  const int width = std::clamp(minibatch_classes, 2, n_train);
  classes.resize(static_cast<std::size_t>(width));
  const MiniBatch batch = sample_minibatch(dataset, index, classes, rng);

  const auto forward = [&] {
    const BatchEmbeddings embeddings =
        encode_batch(batch, dataset, cache, model);
    return objective_loss(embeddings, objective);
  };
  return finite_difference_check(forward, model.trainable, rng, options);
}

}  // namespace sje
