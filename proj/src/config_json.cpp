#include "config_json.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "sje/text.hpp"

namespace sje {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("double formatting failed");
  return std::string(buf, ptr);
}

void reject_unknown_keys(const nlohmann::json& j, const char* context,
                         const std::vector<std::string>& allowed) {
  if (!j.is_object()) {
    throw std::invalid_argument(std::string(context) +
                                " must be a JSON object");
  }
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) ==
        allowed.end()) {
      throw std::invalid_argument("unknown key \"" + item.key() + "\" in " +
                                  context);
    }
  }
}

nlohmann::json encoder_spec_to_json(const EncoderSpec& spec) {
  nlohmann::json j;
  j["family"] = to_string(spec.family);
  j["level"] = to_string(spec.level);
  j["embed_dim"] = spec.embed_dim;
  j["max_len"] = spec.max_len;
  j["conv_blocks"] = nlohmann::json::array();
  for (const ConvBlock& block : spec.conv_blocks) {
    j["conv_blocks"].push_back({{"channels", block.channels},
                                {"kernel", block.kernel},
                                {"pool", block.pool}});
  }
  j["fc_widths"] = spec.fc_widths;
  j["hidden_dim"] = spec.hidden_dim;
  j["token_embed_dim"] = spec.token_embed_dim;
  j["rnn_cell"] = to_string(spec.rnn_cell);
  j["rnn_steps"] = spec.rnn_steps;
  j["seed"] = spec.seed;
  return j;
}

EncoderSpec encoder_spec_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, "encoder spec",
                      {"family", "level", "embed_dim", "max_len",
                       "conv_blocks", "fc_widths", "hidden_dim",
                       "token_embed_dim", "rnn_cell", "rnn_steps", "seed"});
  EncoderSpec spec;
  if (j.contains("family")) {
    spec.family = encoder_family_from_string(j.at("family").get<std::string>());
  }
  if (j.contains("level")) {
    spec.level = text_level_from_string(j.at("level").get<std::string>());
  }
  spec.embed_dim = j.value("embed_dim", spec.embed_dim);
  spec.max_len = j.value("max_len", spec.max_len);
  if (j.contains("conv_blocks")) {
    for (const auto& b : j.at("conv_blocks")) {
      reject_unknown_keys(b, "conv block", {"channels", "kernel", "pool"});
      ConvBlock block;
      block.channels = b.at("channels").get<int>();
      block.kernel = b.at("kernel").get<int>();
      block.pool = b.value("pool", 1);
      spec.conv_blocks.push_back(block);
    }
  }
  if (j.contains("fc_widths")) {
    spec.fc_widths = j.at("fc_widths").get<std::vector<int>>();
  }
  spec.hidden_dim = j.value("hidden_dim", spec.hidden_dim);
  spec.token_embed_dim = j.value("token_embed_dim", spec.token_embed_dim);
  if (j.contains("rnn_cell")) {
    spec.rnn_cell = rnn_cell_from_string(j.at("rnn_cell").get<std::string>());
  }
  spec.rnn_steps = j.value("rnn_steps", spec.rnn_steps);
  spec.seed = j.value("seed", spec.seed);
  return spec;
}

nlohmann::json rmsprop_config_to_json(const RmsPropConfig& config) {
  return {{"learning_rate", config.learning_rate},
          {"decay", config.decay},
          {"epsilon", config.epsilon},
          {"clip_norm", config.clip_norm}};
}

RmsPropConfig rmsprop_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, "optimizer config",
                      {"learning_rate", "decay", "epsilon", "clip_norm"});
  RmsPropConfig config;
  config.learning_rate = j.value("learning_rate", config.learning_rate);
  config.decay = j.value("decay", config.decay);
  config.epsilon = j.value("epsilon", config.epsilon);
  config.clip_norm = j.value("clip_norm", config.clip_norm);
  return config;
}

nlohmann::json synthetic_config_to_json(const SyntheticConfig& config) {
  return {{"n_classes", config.n_classes},
          {"n_train_classes", config.n_train_classes},
          {"n_val_classes", config.n_val_classes},
          {"images_per_class", config.images_per_class},
          {"captions_per_image", config.captions_per_image},
          {"n_attributes", config.n_attributes},
          {"feature_dim", config.feature_dim},
          {"noise_sigma", config.noise_sigma},
          {"phrase_dropout", config.phrase_dropout},
          {"word_vector_dim", config.word_vector_dim},
          {"seed", config.seed}};
}

SyntheticConfig synthetic_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(
      j, "synthetic dataset config",
      {"n_classes", "n_train_classes", "n_val_classes", "images_per_class",
       "captions_per_image", "n_attributes", "feature_dim", "noise_sigma",
       "phrase_dropout", "word_vector_dim", "seed"});
  SyntheticConfig config;
  config.n_classes = j.value("n_classes", config.n_classes);
  config.n_train_classes = j.value("n_train_classes", config.n_train_classes);
  config.n_val_classes = j.value("n_val_classes", config.n_val_classes);
  config.images_per_class =
      j.value("images_per_class", config.images_per_class);
  config.captions_per_image =
      j.value("captions_per_image", config.captions_per_image);
  config.n_attributes = j.value("n_attributes", config.n_attributes);
  config.feature_dim = j.value("feature_dim", config.feature_dim);
  config.noise_sigma = j.value("noise_sigma", config.noise_sigma);
  config.phrase_dropout = j.value("phrase_dropout", config.phrase_dropout);
  config.word_vector_dim = j.value("word_vector_dim", config.word_vector_dim);
  config.seed = j.value("seed", config.seed);
  return config;
}

nlohmann::json training_config_to_json(const TrainingConfig& config) {
  return {{"objective", to_string(config.objective)},
          {"optimizer", rmsprop_config_to_json(config.optimizer)},
          {"minibatch_classes", config.minibatch_classes},
          {"epochs", config.epochs},
          {"seed", config.seed}};
}

TrainingConfig training_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(
      j, "training config",
      {"objective", "optimizer", "minibatch_classes", "epochs", "seed"});
  TrainingConfig config;
  if (j.contains("objective")) {
    config.objective =
        objective_from_string(j.at("objective").get<std::string>());
  }
  if (j.contains("optimizer")) {
    config.optimizer = rmsprop_config_from_json(j.at("optimizer"));
  }
  config.minibatch_classes =
      j.value("minibatch_classes", config.minibatch_classes);
  config.epochs = j.value("epochs", config.epochs);
  config.seed = j.value("seed", config.seed);
  return config;
}

nlohmann::json caption_count_to_json(int count) {
  if (count == 0) return "all";
  return count;
}

int caption_count_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "all") return 0;
    throw std::invalid_argument("caption count must be an integer or \"all\"");
  }
  const int count = j.get<int>();
  if (count < 0) throw std::invalid_argument("caption count must be >= 0");
  return count;
}

}  // namespace sje
