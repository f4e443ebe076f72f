#pragma once

#include <string>
#include <vector>

#include "sje/eval.hpp"
#include "sje/synthetic.hpp"
#include "sje/train.hpp"

namespace sje {

// Where the experiment's dataset comes from: a directory written by
// save_dataset, or (when path is empty) the synthetic generator.
struct DatasetSource {
  std::string path;
  SyntheticConfig synthetic;
};

struct EvalConfig {
  int captions_per_class = 0;  // 0 = all
  std::uint64_t seed = 0;
};

struct SweepConfig {
  std::string axis = "test";            // "test" or "train"
  std::vector<int> counts = {1, 2, 4, 0};  // 0 = all
  int repeats = 10;
  std::uint64_t seed = 0;
};

// Everything one run needs, round-trippable through JSON. The global seed
// fills in any component seed the config file does not set explicitly.
struct ExperimentConfig {
  DatasetSource dataset;
  EncoderSpec encoder;
  ImageEncoderMode image_mode = ImageEncoderMode::linear_projection;
  TrainingConfig training;
  EvalConfig eval;
  SweepConfig sweep;
  std::string output_dir;  // empty: $EMBED_OUTPUT_ROOT/experiment
  std::uint64_t seed = 0;
};

// Serialization echoes every field, including untouched defaults.
std::string experiment_config_to_json_string(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json_string(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Explicit dir if set, else $EMBED_OUTPUT_ROOT/experiment, else
// runs/experiment.
std::string resolve_output_dir(const std::string& configured);

ClassSplitDataset obtain_dataset(const DatasetSource& source);

struct ExperimentResult {
  std::string output_dir;
  TrainResult training;
  EvalReport report;
};

// Full pipeline: dataset, model build, training, zero-shot evaluation.
// Writes config.json (echo), loss.csv, checkpoint.json, report.txt and
// report.json into the output dir. Same config, same bytes.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Training only: config.json, loss.csv and checkpoint.json.
ExperimentResult run_training(const ExperimentConfig& config);

// Caption-count sweep on the configured axis; writes config.json and
// sweep.csv. The test axis trains one model first, the train axis retrains
// per cell.
SweepTable run_sweep(const ExperimentConfig& config);

}  // namespace sje
