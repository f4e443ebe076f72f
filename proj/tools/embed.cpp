#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sje/checkpoint.hpp"
#include "sje/experiment.hpp"

namespace {

// "all" or a positive integer; stored as 0 for "all".
int parse_caption_count(const std::string& text) {
  if (text == "all") return 0;
  std::size_t consumed = 0;
  const int count = std::stoi(text, &consumed);
  if (consumed != text.size() || count < 1) {
    throw std::invalid_argument("caption count must be a positive integer or \"all\", got \"" +
                                text + "\"");
  }
  return count;
}

std::vector<int> parse_count_list(const std::string& text) {
  std::vector<int> counts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) counts.push_back(parse_caption_count(item));
  if (counts.empty()) throw std::invalid_argument("empty caption count list");
  return counts;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "experiment config JSON file");
    cmd.add_option("--out", out_dir,
                   "output directory (default: $EMBED_OUTPUT_ROOT/experiment)");
    cmd.add_option("--seed", seed,
                   "global seed; fills every component seed the config file "
                   "leaves unset");
  }

  sje::ExperimentConfig load() const {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw std::runtime_error("cannot read config file " + config_path);
      std::ostringstream buffer;
      buffer << in.rdbuf();
      try {
        j = nlohmann::json::parse(buffer.str());
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") +
                                    e.what());
      }
      if (!j.is_object()) {
        throw std::invalid_argument("config root must be a JSON object");
      }
    }
    if (seed) j["seed"] = *seed;  // before parsing, so the cascade sees it
    sje::ExperimentConfig config =
        sje::experiment_config_from_json_string(j.dump());
    if (!out_dir.empty()) config.output_dir = out_dir;
    return config;
  }
};

struct TrainingOverrides {
  std::optional<int> epochs;
  std::optional<std::string> objective;
  std::optional<std::string> family;
  std::optional<std::string> level;
  std::optional<int> embed_dim;
  std::optional<int> minibatch;

  void attach(CLI::App& cmd) {
    cmd.add_option("--epochs", epochs, "training epochs");
    cmd.add_option("--objective", objective,
                   "ds-sje, da-sje-image or da-sje-text");
    cmd.add_option("--encoder", family,
                   "text encoder family (bow, wordvec-avg, attributes, cnn, "
                   "lstm, cnn-rnn)");
    cmd.add_option("--level", level, "text granularity (word or character)");
    cmd.add_option("--embed-dim", embed_dim, "joint embedding width");
    cmd.add_option("--minibatch", minibatch, "distinct classes per minibatch");
  }

  void apply(sje::ExperimentConfig& config) const {
    if (epochs) config.training.epochs = *epochs;
    if (objective) config.training.objective = sje::objective_from_string(*objective);
    if (family) config.encoder.family = sje::encoder_family_from_string(*family);
    if (level) config.encoder.level = sje::text_level_from_string(*level);
    if (embed_dim) config.encoder.embed_dim = *embed_dim;
    if (minibatch) config.training.minibatch_classes = *minibatch;
  }
};

int cmd_gen_data(const sje::ExperimentConfig& config) {
  const std::string dir = sje::resolve_output_dir(config.output_dir);
  std::filesystem::create_directories(dir);
  const sje::ClassSplitDataset dataset =
      sje::generate_synthetic(config.dataset.synthetic);
  sje::save_dataset(dataset, dir);
  std::cout << "wrote " << dataset.images.size() << " images, "
            << dataset.captions.size() << " captions, "
            << dataset.splits.train.size() << "/" << dataset.splits.val.size()
            << "/" << dataset.splits.test.size()
            << " train/val/test classes to " << dir << "\n";
  return 0;
}

int cmd_train(const sje::ExperimentConfig& config) {
  const sje::ExperimentResult result = sje::run_training(config);
  if (result.training.epoch_mean_loss.empty()) {
    std::cout << "trained 0 epochs";
  } else {
    std::cout << "trained " << result.training.epoch_mean_loss.size()
              << " epochs, final mean loss "
              << result.training.epoch_mean_loss.back();
  }
  std::cout << "; outputs in " << result.output_dir << "\n";
  return 0;
}

int cmd_run(const sje::ExperimentConfig& config) {
  const sje::ExperimentResult result = sje::run_experiment(config);
  std::cout << "top-1 accuracy " << result.report.top1 << "%, ap@"
            << result.report.effective_k << " " << result.report.ap50
            << "%; outputs in " << result.output_dir << "\n";
  return 0;
}

int cmd_eval(const sje::ExperimentConfig& config,
             const std::string& checkpoint_path) {
  sje::Checkpoint checkpoint = sje::load_checkpoint(checkpoint_path);
  const sje::ClassSplitDataset dataset = sje::obtain_dataset(config.dataset);
  sje::EvalOptions options;
  options.captions_per_class = config.eval.captions_per_class;
  options.seed = config.eval.seed;
  options.objective = sje::to_string(config.training.objective);
  const sje::EvalReport report = sje::evaluate_classes(
      dataset, checkpoint.model, dataset.splits.test, options);

  const std::string dir = sje::resolve_output_dir(config.output_dir);
  std::filesystem::create_directories(dir);
  std::ofstream text(dir + "/report.txt");
  text << sje::report_to_text(report);
  std::ofstream json(dir + "/report.json");
  json << sje::report_to_json_string(report);
  std::cout << "top-1 accuracy " << report.top1 << "%, ap@"
            << report.effective_k << " " << report.ap50 << "%; reports in "
            << dir << "\n";
  return 0;
}

int cmd_sweep(const sje::ExperimentConfig& config) {
  const sje::SweepTable table = sje::run_sweep(config);
  std::cout << "swept " << table.cells.size() << " cells on the "
            << config.sweep.axis << " axis; sweep.csv in "
            << sje::resolve_output_dir(config.output_dir) << "\n";
  return 0;
}

int cmd_gradcheck(const sje::ExperimentConfig& config, int coordinates,
                  double tolerance) {
  const sje::ClassSplitDataset dataset = sje::obtain_dataset(config.dataset);
  sje::JointModel model =
      sje::build_joint_model(config.encoder, config.image_mode, dataset);
  sje::GradCheckOptions options;
  options.coordinates = coordinates;
  const sje::GradCheckResult result = sje::joint_gradcheck(
      dataset, model, config.training.objective,
      config.training.minibatch_classes, config.training.seed, options);
  std::cout << "max relative gradient error " << result.max_rel_error
            << " over " << result.coordinates_checked
            << " coordinates (worst: " << result.worst_parameter << ")\n";
  if (result.max_rel_error > tolerance) {
    std::cerr << "error: exceeds tolerance " << tolerance << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint embedding of images and fine-grained text descriptions"};
  app.require_subcommand(1);

  CommonFlags run_flags, gen_flags, train_flags, eval_flags, sweep_flags,
      grad_flags;
  TrainingOverrides run_overrides, train_overrides;

  CLI::App* run = app.add_subcommand(
      "run", "generate/load data, train and evaluate in one go");
  run_flags.attach(*run);
  run_overrides.attach(*run);
  std::optional<std::string> run_captions;
  run->add_option("--captions", run_captions,
                  "captions per class for evaluation (count or \"all\")");

  CLI::App* gen = app.add_subcommand(
      "gen-data", "write a synthetic dataset to the output directory");
  gen_flags.attach(*gen);
  std::optional<int> gen_classes, gen_train, gen_images, gen_captions,
      gen_attributes;
  std::optional<double> gen_noise;
  gen->add_option("--classes", gen_classes, "total classes");
  gen->add_option("--train-classes", gen_train, "classes in the train split");
  gen->add_option("--images-per-class", gen_images, "images per class");
  gen->add_option("--captions-per-image", gen_captions, "captions per image");
  gen->add_option("--attributes", gen_attributes, "attribute vector width");
  gen->add_option("--noise", gen_noise, "feature noise sigma");

  CLI::App* train = app.add_subcommand(
      "train", "train a model; writes loss curve and checkpoint");
  train_flags.attach(*train);
  train_overrides.attach(*train);

  CLI::App* eval = app.add_subcommand(
      "eval", "evaluate a checkpoint on the configured dataset");
  eval_flags.attach(*eval);
  std::string eval_checkpoint;
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint JSON file")
      ->required();
  std::optional<std::string> eval_captions;
  eval->add_option("--captions", eval_captions,
                   "captions per class (count or \"all\")");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "caption-count sweep; writes sweep.csv");
  sweep_flags.attach(*sweep);
  std::optional<std::string> sweep_axis, sweep_counts;
  std::optional<int> sweep_repeats;
  sweep->add_option("--axis", sweep_axis, "test or train");
  sweep->add_option("--counts", sweep_counts,
                    "comma-separated counts, e.g. 1,2,4,all");
  sweep->add_option("--repeats", sweep_repeats, "repeats per count");

  CLI::App* grad = app.add_subcommand(
      "gradcheck", "finite-difference check of the objective gradient");
  grad_flags.attach(*grad);
  int grad_coordinates = 50;
  double grad_tolerance = 1e-4;
  grad->add_option("--coordinates", grad_coordinates,
                   "parameter coordinates to probe");
  grad->add_option("--tolerance", grad_tolerance,
                   "max relative error before exiting nonzero");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    std::cerr << "\n" << app.help();
    return code;
  }

  try {
    if (run->parsed()) {
      sje::ExperimentConfig config = run_flags.load();
      run_overrides.apply(config);
      if (run_captions) {
        config.eval.captions_per_class = parse_caption_count(*run_captions);
      }
      return cmd_run(config);
    }
    if (gen->parsed()) {
      sje::ExperimentConfig config = gen_flags.load();
      auto& synthetic = config.dataset.synthetic;
      if (gen_classes) synthetic.n_classes = *gen_classes;
      if (gen_train) synthetic.n_train_classes = *gen_train;
      if (gen_images) synthetic.images_per_class = *gen_images;
      if (gen_captions) synthetic.captions_per_image = *gen_captions;
      if (gen_attributes) synthetic.n_attributes = *gen_attributes;
      if (gen_noise) synthetic.noise_sigma = *gen_noise;
      return cmd_gen_data(config);
    }
    if (train->parsed()) {
      sje::ExperimentConfig config = train_flags.load();
      train_overrides.apply(config);
      return cmd_train(config);
    }
    if (eval->parsed()) {
      sje::ExperimentConfig config = eval_flags.load();
      if (eval_captions) {
        config.eval.captions_per_class = parse_caption_count(*eval_captions);
      }
      return cmd_eval(config, eval_checkpoint);
    }
    if (sweep->parsed()) {
      sje::ExperimentConfig config = sweep_flags.load();
      if (sweep_axis) config.sweep.axis = *sweep_axis;
      if (sweep_counts) config.sweep.counts = parse_count_list(*sweep_counts);
      if (sweep_repeats) config.sweep.repeats = *sweep_repeats;
      return cmd_sweep(config);
    }
    if (grad->parsed()) {
      return cmd_gradcheck(grad_flags.load(), grad_coordinates,
                           grad_tolerance);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand given\n" << app.help();
  return 1;
}
