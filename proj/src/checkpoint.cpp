#include "sje/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "config_json.hpp"

namespace sje {

std::string checkpoint_to_json_string(const JointModel& model,
                                      const RmsProp& optimizer) {
  nlohmann::json j;
  j["version"] = kCheckpointVersion;
  j["encoder"] = encoder_spec_to_json(model.spec);
  j["image_mode"] = to_string(model.image_mode);
  j["feature_dim"] = model.image_encoder->feature_dim();
  j["attribute_dim"] = model.attribute_dim;
  j["alphabet"] = model.alphabet.chars();
  j["vocabulary"] = model.vocabulary.words();
  j["word_vectors"] = model.word_vectors;
  j["parameters"] = nlohmann::json::array();
  for (const auto& [name, tensor] : model.trainable) {
    j["parameters"].push_back({{"name", name},
                               {"shape", tensor.shape()},
                               {"values", tensor.values()}});
  }
  j["optimizer"] = {{"config", rmsprop_config_to_json(optimizer.config())},
                    {"accumulators", optimizer.accumulators()}};
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json_string(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("version")) {
      throw CheckpointError("checkpoint is missing the version field");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " +
                            j.at("version").dump() + ", expected " +
                            std::to_string(kCheckpointVersion));
    }

    const EncoderSpec spec = encoder_spec_from_json(j.at("encoder"));
    const auto image_mode =
        image_encoder_mode_from_string(j.at("image_mode").get<std::string>());
    Alphabet alphabet(j.at("alphabet").get<std::string>());
    Vocabulary vocabulary(
        j.at("vocabulary").get<std::vector<std::string>>());
    WordVectorTable word_vectors;
    if (j.contains("word_vectors")) {
      word_vectors = j.at("word_vectors").get<WordVectorTable>();
    }

    Checkpoint checkpoint{
        assemble_joint_model(spec, image_mode, std::move(alphabet),
                             std::move(vocabulary), std::move(word_vectors),
                             j.at("attribute_dim").get<int>(),
                             j.at("feature_dim").get<int>()),
        RmsProp(rmsprop_config_from_json(j.at("optimizer").at("config")))};

    const auto& params = j.at("parameters");
    if (params.size() != checkpoint.model.trainable.size()) {
      throw CheckpointError(
          "checkpoint stores " + std::to_string(params.size()) +
          " parameters, model has " +
          std::to_string(checkpoint.model.trainable.size()));
    }
    for (const auto& p : params) {
      const std::string name = p.at("name").get<std::string>();
      Tensor* tensor = checkpoint.model.trainable.find(name);
      if (tensor == nullptr) {
        throw CheckpointError("checkpoint parameter \"" + name +
                              "\" does not exist in the model");
      }
      const auto shape = p.at("shape").get<std::vector<int>>();
      if (shape != tensor->shape()) {
        throw CheckpointError("shape mismatch for parameter \"" + name +
                              "\": checkpoint " + shape_string(shape) +
                              ", model " + shape_string(tensor->shape()));
      }
      tensor->values() = p.at("values").get<std::vector<double>>();
      if (tensor->values().size() != tensor->size()) {
        throw CheckpointError("value count mismatch for parameter \"" + name +
                              "\"");
      }
    }

    auto accumulators = j.at("optimizer")
                            .at("accumulators")
                            .get<std::map<std::string, std::vector<double>>>();
    for (const auto& [name, acc] : accumulators) {
      const Tensor* tensor = checkpoint.model.trainable.find(name);
      if (tensor == nullptr) {
        throw CheckpointError("optimizer accumulator \"" + name +
                              "\" does not match any parameter");
      }
      if (acc.size() != tensor->size()) {
        throw CheckpointError("optimizer accumulator \"" + name +
                              "\" has the wrong size");
      }
    }
    checkpoint.optimizer.accumulators() = std::move(accumulators);
    return checkpoint;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const JointModel& model,
                     const RmsProp& optimizer) {
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint file " + path);
  out << checkpoint_to_json_string(model, optimizer);
  if (!out) throw CheckpointError("failed writing checkpoint file " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot read checkpoint file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json_string(buffer.str());
}

}  // namespace sje
