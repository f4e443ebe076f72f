#include "sje/experiment.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "config_json.hpp"
#include "sje/checkpoint.hpp"

namespace sje {

namespace {

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& input) {
  reject_unknown_keys(input, "experiment config",
                      {"seed", "output_dir", "dataset", "encoder",
                       "image_mode", "training", "eval", "sweep"});
  ExperimentConfig config;
  config.seed = input.value("seed", config.seed);
  config.output_dir = input.value("output_dir", config.output_dir);

  nlohmann::json dataset_j = input.value("dataset", nlohmann::json::object());
  reject_unknown_keys(dataset_j, "dataset source", {"path", "synthetic"});
  config.dataset.path = dataset_j.value("path", std::string());
  nlohmann::json synthetic_j =
      dataset_j.value("synthetic", nlohmann::json::object());
  if (!synthetic_j.contains("seed")) synthetic_j["seed"] = config.seed;
  config.dataset.synthetic = synthetic_config_from_json(synthetic_j);

  nlohmann::json encoder_j = input.value("encoder", nlohmann::json::object());
  if (!encoder_j.contains("seed")) encoder_j["seed"] = config.seed;
  config.encoder = encoder_spec_from_json(encoder_j);

  if (input.contains("image_mode")) {
    config.image_mode =
        image_encoder_mode_from_string(input.at("image_mode").get<std::string>());
  }

  nlohmann::json training_j =
      input.value("training", nlohmann::json::object());
  if (!training_j.contains("seed")) training_j["seed"] = config.seed;
  config.training = training_config_from_json(training_j);

  const nlohmann::json eval_j = input.value("eval", nlohmann::json::object());
  reject_unknown_keys(eval_j, "eval config", {"captions_per_class", "seed"});
  if (eval_j.contains("captions_per_class")) {
    config.eval.captions_per_class =
        caption_count_from_json(eval_j.at("captions_per_class"));
  }
  config.eval.seed = eval_j.value("seed", config.seed);

  const nlohmann::json sweep_j =
      input.value("sweep", nlohmann::json::object());
  reject_unknown_keys(sweep_j, "sweep config",
                      {"axis", "counts", "repeats", "seed"});
  config.sweep.axis = sweep_j.value("axis", config.sweep.axis);
  if (config.sweep.axis != "test" && config.sweep.axis != "train") {
    throw std::invalid_argument("sweep axis must be \"test\" or \"train\"");
  }
  if (sweep_j.contains("counts")) {
    config.sweep.counts.clear();
    for (const auto& c : sweep_j.at("counts")) {
      config.sweep.counts.push_back(caption_count_from_json(c));
    }
  }
  config.sweep.repeats = sweep_j.value("repeats", config.sweep.repeats);
  config.sweep.seed = sweep_j.value("seed", config.seed);
  return config;
}

}  // namespace

std::string experiment_config_to_json_string(const ExperimentConfig& config) {
  nlohmann::json j;
  j["seed"] = config.seed;
  j["output_dir"] = config.output_dir;
  j["dataset"] = {{"path", config.dataset.path},
                  {"synthetic", synthetic_config_to_json(config.dataset.synthetic)}};
  j["encoder"] = encoder_spec_to_json(config.encoder);
  j["image_mode"] = to_string(config.image_mode);
  j["training"] = training_config_to_json(config.training);
  j["eval"] = {{"captions_per_class",
                caption_count_to_json(config.eval.captions_per_class)},
               {"seed", config.eval.seed}};
  nlohmann::json counts = nlohmann::json::array();
  for (int c : config.sweep.counts) counts.push_back(caption_count_to_json(c));
  j["sweep"] = {{"axis", config.sweep.axis},
                {"counts", counts},
                {"repeats", config.sweep.repeats},
                {"seed", config.sweep.seed}};
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                e.what());
  }
  return experiment_config_from_json(j);
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return experiment_config_from_json_string(buffer.str());
}

std::string resolve_output_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* root = std::getenv("EMBED_OUTPUT_ROOT")) {
    return std::string(root) + "/experiment";
  }
  return "runs/experiment";
}

ClassSplitDataset obtain_dataset(const DatasetSource& source) {
  if (!source.path.empty()) return load_dataset(source.path);
  return generate_synthetic(source.synthetic);
}

namespace {

struct PipelineState {
  std::string out_dir;
  ClassSplitDataset dataset;
  JointModel model;
  RmsProp optimizer;
  TrainResult trained;
};

PipelineState train_pipeline(const ExperimentConfig& config,
                             bool require_test_split) {
  PipelineState state;
  state.out_dir = resolve_output_dir(config.output_dir);
  std::filesystem::create_directories(state.out_dir);
  state.dataset = obtain_dataset(config.dataset);
  if (require_test_split && state.dataset.splits.test.empty()) {
    throw std::invalid_argument("dataset has no test classes to evaluate");
  }

  ExperimentConfig echo = config;
  echo.output_dir = state.out_dir;
  write_text_file(state.out_dir + "/config.json",
                  experiment_config_to_json_string(echo));

  state.model =
      build_joint_model(config.encoder, config.image_mode, state.dataset);
  state.optimizer = RmsProp(config.training.optimizer);
  state.trained =
      train(state.dataset, state.model, config.training, state.optimizer);

  std::string csv = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < state.trained.epoch_mean_loss.size(); ++e) {
    csv += std::to_string(e) + "," +
           format_double(state.trained.epoch_mean_loss[e]) + "\n";
  }
  write_text_file(state.out_dir + "/loss.csv", csv);
  save_checkpoint(state.out_dir + "/checkpoint.json", state.model,
                  state.optimizer);
  return state;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  PipelineState state = train_pipeline(config, true);

  EvalOptions options;
  options.captions_per_class = config.eval.captions_per_class;
  options.seed = config.eval.seed;
  options.objective = to_string(config.training.objective);
  EvalReport report = evaluate_classes(state.dataset, state.model,
                                       state.dataset.splits.test, options);
  write_text_file(state.out_dir + "/report.txt", report_to_text(report));
  write_text_file(state.out_dir + "/report.json",
                  report_to_json_string(report));
  return {state.out_dir, std::move(state.trained), std::move(report)};
}

ExperimentResult run_training(const ExperimentConfig& config) {
  PipelineState state = train_pipeline(config, false);
  return {state.out_dir, std::move(state.trained), EvalReport{}};
}

SweepTable run_sweep(const ExperimentConfig& config) {
  if (config.sweep.axis != "test" && config.sweep.axis != "train") {
    throw std::invalid_argument("sweep axis must be \"test\" or \"train\"");
  }
  SweepTable table;
  std::string out_dir;
  if (config.sweep.axis == "test") {
    PipelineState state = train_pipeline(config, true);
    table = caption_sweep_test(state.dataset, state.model,
                               config.sweep.counts, config.sweep.repeats,
                               config.sweep.seed);
    out_dir = state.out_dir;
  } else {
    out_dir = resolve_output_dir(config.output_dir);
    std::filesystem::create_directories(out_dir);
    const ClassSplitDataset dataset = obtain_dataset(config.dataset);
    ExperimentConfig echo = config;
    echo.output_dir = out_dir;
    write_text_file(out_dir + "/config.json",
                    experiment_config_to_json_string(echo));
    table = caption_sweep_train(dataset, config.encoder, config.image_mode,
                                config.training, config.sweep.counts,
                                config.sweep.repeats, config.sweep.seed);
  }
  write_text_file(out_dir + "/sweep.csv", sweep_to_csv(table));
  return table;
}

}  // namespace sje
