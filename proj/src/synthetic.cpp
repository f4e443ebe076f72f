#include "sje/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace sje {
namespace {

const char* kParts[16] = {"beak",  "crest",  "wing",  "tail", "breast", "eye",
                          "throat", "back",  "belly", "crown", "nape",  "leg",
                          "foot",  "bill",   "cheek", "flank"};
const char* kColors[16] = {"crimson", "azure",  "golden", "emerald",
                           "ivory",   "ebony",  "amber",  "violet",
                           "scarlet", "teal",   "russet", "silver",
                           "olive",   "coral",  "indigo", "slate"};

// Distinct nonzero binary codes, one per class. Small attribute counts are
// enumerated and shuffled; larger ones are rejection-sampled (collisions are
// vanishingly rare there).
std::vector<std::vector<int>> draw_codes(int n_classes, int n_attributes,
                                         std::mt19937_64& rng) {
  std::vector<std::vector<int>> codes;
  if (n_attributes <= 20) {
    const std::uint64_t total = (std::uint64_t{1} << n_attributes) - 1;
    if (static_cast<std::uint64_t>(n_classes) > total) {
      throw std::invalid_argument(
          "cannot draw " + std::to_string(n_classes) +
          " distinct nonzero codes from " + std::to_string(n_attributes) +
          " attributes (only " + std::to_string(total) + " exist)");
    }
    std::vector<std::uint64_t> all(total);
    for (std::uint64_t i = 0; i < total; ++i) all[i] = i + 1;
    std::shuffle(all.begin(), all.end(), rng);
    for (int c = 0; c < n_classes; ++c) {
      std::vector<int> code(static_cast<std::size_t>(n_attributes));
      for (int k = 0; k < n_attributes; ++k) {
        code[static_cast<std::size_t>(k)] =
            static_cast<int>((all[static_cast<std::size_t>(c)] >> k) & 1);
      }
      codes.push_back(std::move(code));
    }
  } else {
    std::set<std::vector<int>> seen;
    std::bernoulli_distribution bit(0.5);
    while (static_cast<int>(codes.size()) < n_classes) {
      std::vector<int> code(static_cast<std::size_t>(n_attributes));
      bool any = false;
      for (int k = 0; k < n_attributes; ++k) {
        code[static_cast<std::size_t>(k)] = bit(rng) ? 1 : 0;
        any = any || code[static_cast<std::size_t>(k)];
      }
      if (any && seen.insert(code).second) codes.push_back(std::move(code));
    }
  }
  return codes;
}

}  // namespace

std::string attribute_phrase(int k) {
  if (k < 0 || k >= 256) {
    throw std::invalid_argument("attribute index " + std::to_string(k) +
                                " outside the phrase table (0..255)");
  }
  return std::string(kParts[k % 16]) + " is " + kColors[(k / 16) % 16];
}

ClassSplitDataset generate_synthetic(const SyntheticConfig& config) {
  if (config.n_classes < 2) {
    throw std::invalid_argument("need at least 2 classes");
  }
  if (config.n_train_classes < 1 ||
      config.n_train_classes + config.n_val_classes >= config.n_classes) {
    throw std::invalid_argument(
        "train (" + std::to_string(config.n_train_classes) + ") + val (" +
        std::to_string(config.n_val_classes) +
        ") classes must leave at least one test class out of " +
        std::to_string(config.n_classes));
  }
  if (config.images_per_class < 1 || config.captions_per_image < 1) {
    throw std::invalid_argument("images_per_class and captions_per_image "
                                "must be >= 1");
  }
  if (config.n_attributes < 1 || config.n_attributes > 256) {
    throw std::invalid_argument("n_attributes must be in 1..256");
  }
  if (config.feature_dim < 1) {
    throw std::invalid_argument("feature_dim must be >= 1");
  }
  if (config.noise_sigma < 0.0) {
    throw std::invalid_argument("noise_sigma must be >= 0");
  }

  std::mt19937_64 rng(config.seed);
  const auto codes = draw_codes(config.n_classes, config.n_attributes, rng);

  // Fixed projection from attribute space to feature space, scaled so feature
  // magnitudes stay O(1) regardless of the attribute count.
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double proj_scale = 1.0 / std::sqrt(config.n_attributes);
  std::vector<std::vector<double>> projection(
      static_cast<std::size_t>(config.feature_dim),
      std::vector<double>(static_cast<std::size_t>(config.n_attributes)));
  for (auto& prow : projection) {
    for (double& v : prow) v = gauss(rng) * proj_scale;
  }

  ClassSplitDataset ds;
  for (int c = 0; c < config.n_classes; ++c) {
    const int class_id = c + 1;
    if (c < config.n_train_classes) {
      ds.splits.train.push_back(class_id);
    } else if (c < config.n_train_classes + config.n_val_classes) {
      ds.splits.val.push_back(class_id);
    } else {
      ds.splits.test.push_back(class_id);
    }
    AttributeVector attr;
    attr.class_id = class_id;
    for (int bit : codes[static_cast<std::size_t>(c)]) {
      attr.values.push_back(static_cast<double>(bit));
    }
    ds.attributes.push_back(std::move(attr));
  }

  int next_image_id = 1;
  for (int c = 0; c < config.n_classes; ++c) {
    const int class_id = c + 1;
    const auto& code = codes[static_cast<std::size_t>(c)];

    std::vector<std::string> phrases;
    for (int k = 0; k < config.n_attributes; ++k) {
      if (code[static_cast<std::size_t>(k)]) {
        phrases.push_back(attribute_phrase(k));
      }
    }

    for (int i = 0; i < config.images_per_class; ++i) {
      ImageFeature img;
      img.image_id = next_image_id++;
      img.class_id = class_id;
      img.vector.resize(static_cast<std::size_t>(config.feature_dim));
      for (int d = 0; d < config.feature_dim; ++d) {
        double v = 0.0;
        for (int k = 0; k < config.n_attributes; ++k) {
          v += projection[static_cast<std::size_t>(d)]
                         [static_cast<std::size_t>(k)] *
               code[static_cast<std::size_t>(k)];
        }
        if (config.noise_sigma > 0.0) v += gauss(rng) * config.noise_sigma;
        img.vector[static_cast<std::size_t>(d)] = v;
      }

      for (int j = 0; j < config.captions_per_image; ++j) {
        auto mentioned = phrases;
        std::shuffle(mentioned.begin(), mentioned.end(), rng);
        if (config.phrase_dropout && mentioned.size() >= 2) {
          std::uniform_int_distribution<std::size_t> pick(
              0, mentioned.size() - 1);
          mentioned.erase(mentioned.begin() +
                          static_cast<std::ptrdiff_t>(pick(rng)));
        }
        std::string text = "the ";
        for (std::size_t p = 0; p < mentioned.size(); ++p) {
          if (p) text += " and ";
          text += mentioned[p];
        }
        Caption cap;
        cap.image_id = img.image_id;
        cap.class_id = class_id;
        cap.raw_text = std::move(text);
        ds.captions.push_back(std::move(cap));
      }
      ds.images.push_back(std::move(img));
    }
  }

  // Random word vectors covering the caption vocabulary, so the fixed-table
  // encoder runs on generated data out of the box.
  const Alphabet alphabet = Alphabet::standard();
  std::vector<std::string> normalized;
  normalized.reserve(ds.captions.size());
  for (const auto& cap : ds.captions) {
    normalized.push_back(normalize_text(cap.raw_text, TextLevel::word,
                                        alphabet));
  }
  const Vocabulary vocab = Vocabulary::build(normalized);
  for (int id = 2; id < vocab.size(); ++id) {
    std::vector<double> vec(static_cast<std::size_t>(config.word_vector_dim));
    for (double& v : vec) v = gauss(rng);
    ds.word_vectors.emplace(vocab.word_of(id), std::move(vec));
  }

  ds.validate();
  return ds;
}

}  // namespace sje
