// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier end-to-end runs live here rather than in the unit suite.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sje/eval.hpp"
#include "sje/objective.hpp"
#include "sje/synthetic.hpp"
#include "sje/train.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int g_failures = 0;

void report(int criterion, bool ok, const std::string& details) {
  if (!ok) ++g_failures;
  std::printf("criterion %d: %s — %s\n", criterion, ok ? "PASS" : "FAIL",
              details.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: finite-difference gradients of the full ds-sje objective for
// every encoder family; max rel error < 1e-4 over >= 50 coordinates, 3 seeds,
// under 2 minutes total.

sje::ClassSplitDataset gradcheck_dataset() {
  sje::SyntheticConfig config;
  config.n_classes = 6;
  config.n_train_classes = 4;
  config.images_per_class = 2;
  config.captions_per_image = 3;
  config.n_attributes = 6;
  config.feature_dim = 10;
  config.noise_sigma = 0.05;
  config.seed = 77;
  return sje::generate_synthetic(config);
}

std::vector<sje::EncoderSpec> family_specs() {
  std::vector<sje::EncoderSpec> specs;
  {
    sje::EncoderSpec s;
    s.family = sje::EncoderFamily::bow;
    s.level = sje::TextLevel::word;
    s.embed_dim = 8;
    specs.push_back(s);
  }
  {
    sje::EncoderSpec s;
    s.family = sje::EncoderFamily::wordvec_avg;
    s.level = sje::TextLevel::word;
    s.embed_dim = 8;
    specs.push_back(s);
  }
  {
    sje::EncoderSpec s;
    s.family = sje::EncoderFamily::attributes;
    s.level = sje::TextLevel::word;
    s.embed_dim = 8;
    specs.push_back(s);
  }
  {
    sje::EncoderSpec s;
    s.family = sje::EncoderFamily::cnn;
    s.level = sje::TextLevel::character;
    s.embed_dim = 8;
    s.max_len = 24;
    s.conv_blocks = {{8, 5, 3}, {6, 3, 2}};
    s.fc_widths = {10};
    specs.push_back(s);
  }
  {
    sje::EncoderSpec s;
    s.family = sje::EncoderFamily::lstm;
    s.level = sje::TextLevel::word;
    s.embed_dim = 8;
    s.max_len = 12;
    s.hidden_dim = 6;
    s.token_embed_dim = 4;
    specs.push_back(s);
  }
  {
    sje::EncoderSpec s;
    s.family = sje::EncoderFamily::cnn_rnn;
    s.level = sje::TextLevel::word;
    s.embed_dim = 8;
    s.max_len = 12;
    s.conv_blocks = {{6, 5, 2}, {4, 2, 1}};
    s.rnn_steps = 3;
    s.rnn_cell = sje::RnnCell::lstm;
    s.hidden_dim = 5;
    specs.push_back(s);
  }
  return specs;
}

void criterion_gradients() {
  const auto start = Clock::now();
  const auto dataset = gradcheck_dataset();
  double worst = 0.0;
  std::string worst_name;
  int min_coords = 1 << 30;
  for (const auto& base : family_specs()) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      sje::EncoderSpec spec = base;
      spec.seed = seed;
      sje::JointModel model = sje::build_joint_model(
          spec, sje::ImageEncoderMode::linear_projection, dataset);
      const auto result =
          sje::joint_gradcheck(dataset, model, sje::Objective::ds_sje, 4,
                               seed, {1e-5, 50});
      min_coords = std::min(min_coords, result.coordinates_checked);
      if (result.max_rel_error > worst) {
        worst = result.max_rel_error;
        worst_name = sje::to_string(spec.family) + "/" +
                     result.worst_parameter + " seed " + std::to_string(seed);
      }
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = worst < 1e-4 && min_coords >= 50 && elapsed < 120.0;
  report(1, ok,
         "ds-sje gradients, 6 families x 3 seeds: max rel error " +
             fmt(worst) + " (" + worst_name + "), min coordinates " +
             std::to_string(min_coords) + ", " + fmt(elapsed) + "s");
}

// ---------------------------------------------------------------------------
// criterion 2: primitive ops and metrics match naive oracles on 100 random
// instances each (numeric agreement 1e-12, counting metrics exact).

void criterion_oracles() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  double worst = 0.0;
  int count_mismatches = 0;

  for (int trial = 0; trial < 100; ++trial) {
    // matmul
    {
      const int m = dim(rng), k = dim(rng), n = dim(rng);
      const auto a = oracle::random_matrix(m, k, rng);
      const auto b = oracle::random_matrix(k, n, rng);
      const auto expect = oracle::matmul(a, b);
      const sje::Tensor ta =
          sje::Tensor::from_values({m, k}, oracle::flat(a), false);
      const sje::Tensor tb =
          sje::Tensor::from_values({k, n}, oracle::flat(b), false);
      const sje::Tensor tc = sje::matmul(ta, tb);
      const auto got = tc.values();
      const auto want = oracle::flat(expect);
      for (std::size_t i = 0; i < want.size(); ++i) {
        worst = std::max(worst, std::abs(got[i] - want[i]));
      }
    }
    // conv1d
    {
      const int in_ch = dim(rng) % 4 + 1;
      const int out_ch = dim(rng) % 4 + 1;
      const int len = dim(rng) + 4;
      std::uniform_int_distribution<int> kdist(1, 4);
      const int width = std::min(kdist(rng), len);
      std::uniform_int_distribution<int> sdist(1, 2);
      const int stride = sdist(rng);
      const auto input = oracle::random_matrix(in_ch, len, rng);
      std::vector<oracle::Matrix> kernels;
      std::vector<double> kernel_flat;
      for (int o = 0; o < out_ch; ++o) {
        kernels.push_back(oracle::random_matrix(in_ch, width, rng));
        const auto piece = oracle::flat(kernels.back());
        kernel_flat.insert(kernel_flat.end(), piece.begin(), piece.end());
      }
      const auto expect = oracle::flat(oracle::conv1d(input, kernels, stride));
      const sje::Tensor t = sje::conv1d(
          sje::Tensor::from_values({in_ch, len}, oracle::flat(input), false),
          sje::Tensor::from_values({out_ch, in_ch, width}, kernel_flat, false),
          stride);
      const auto got = t.values();
      for (std::size_t i = 0; i < expect.size(); ++i) {
        worst = std::max(worst, std::abs(got[i] - expect[i]));
      }
    }
    // maxpool1d
    {
      const int ch = dim(rng) % 4 + 1;
      const int len = dim(rng) + 3;
      std::uniform_int_distribution<int> wdist(1, len);
      const int w = wdist(rng);
      const auto input = oracle::random_matrix(ch, len, rng);
      const auto expect = oracle::flat(oracle::maxpool1d(input, w));
      const sje::Tensor t = sje::maxpool1d(
          sje::Tensor::from_values({ch, len}, oracle::flat(input), false), w);
      const auto got = t.values();
      for (std::size_t i = 0; i < expect.size(); ++i) {
        worst = std::max(worst, std::abs(got[i] - expect[i]));
      }
    }
    // structured hinge, both sides
    {
      std::uniform_int_distribution<int> ndist(2, 5);
      const int n = ndist(rng);
      const int d = dim(rng);
      std::vector<std::vector<double>> images, texts;
      std::vector<int> labels;
      sje::BatchEmbeddings batch;
      for (int i = 0; i < n; ++i) {
        std::vector<double> vi(static_cast<std::size_t>(d)), ti(vi);
        for (auto& v : vi) v = val(rng);
        for (auto& v : ti) v = val(rng);
        images.push_back(vi);
        texts.push_back(ti);
        labels.push_back(i + 1);
        batch.image.push_back(sje::Tensor::from_values({d}, vi, false));
        batch.text.push_back(sje::Tensor::from_values({d}, ti, false));
      }
      batch.labels = labels;
      const double img_expect = oracle::hinge_image_side(images, texts, labels);
      const double txt_expect = oracle::hinge_text_side(images, texts, labels);
      worst = std::max(
          worst, std::abs(sje::loss_image_side(batch).item() - img_expect));
      worst = std::max(
          worst, std::abs(sje::loss_text_side(batch).item() - txt_expect));
    }
    // ap@50
    {
      std::uniform_int_distribution<int> ndist(1, 70);
      std::uniform_int_distribution<int> cdist(1, 4);
      const int n = ndist(rng);
      sje::ClassSplitDataset ds;
      std::vector<oracle::RankedImage> candidates;
      for (int i = 0; i < n; ++i) {
        const double score = std::round(val(rng) * 4.0) / 4.0;
        const int cls = cdist(rng);
        candidates.push_back({score, i, cls});
        ds.images.push_back({i, cls, {}});
      }
      const int query = cdist(rng);
      sje::RetrievalRanking ranking;
      ranking.query_class_id = query;
      for (const auto& c : candidates) {
        ranking.ranked.emplace_back(c.image_id, c.score);
      }
      std::sort(ranking.ranked.begin(), ranking.ranked.end(),
                [](const auto& a, const auto& b) {
                  if (a.second != b.second) return a.second > b.second;
                  return a.first < b.first;
                });
      if (sje::ap_at_50(ranking, ds) !=
          oracle::precision_at_k(candidates, query, 50)) {
        ++count_mismatches;
      }
    }
  }
  const bool ok = worst <= 1e-12 && count_mismatches == 0;
  report(2, ok,
         "matmul/conv1d/maxpool/hinge vs oracles: max abs diff " + fmt(worst) +
             " (tol 1e-12); ap@50 mismatches " +
             std::to_string(count_mismatches) + "/100");
}

// ---------------------------------------------------------------------------
// criterion 3: the symmetric objective equals the sum of the two asymmetric
// ones exactly, losses are never negative, and zero loss holds exactly when
// every margin is satisfied (shown constructively in both directions).

void criterion_objective_identities() {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> val(-1.5, 1.5);
  std::uniform_int_distribution<int> ndist(2, 6);
  std::uniform_int_distribution<int> ddist(2, 6);

  double worst_identity = 0.0;
  bool nonnegative = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = ndist(rng);
    const int d = ddist(rng);
    sje::BatchEmbeddings batch;
    for (int i = 0; i < n; ++i) {
      std::vector<double> vi(static_cast<std::size_t>(d)), ti(vi);
      for (auto& v : vi) v = val(rng);
      for (auto& v : ti) v = val(rng);
      batch.image.push_back(sje::Tensor::from_values({d}, vi, false));
      batch.text.push_back(sje::Tensor::from_values({d}, ti, false));
      batch.labels.push_back(10 + i);
    }
    const double ds = sje::objective_loss(batch, sje::Objective::ds_sje).item();
    const double di =
        sje::objective_loss(batch, sje::Objective::da_sje_image).item();
    const double dt =
        sje::objective_loss(batch, sje::Objective::da_sje_text).item();
    worst_identity = std::max(worst_identity, std::abs(ds - (di + dt)));
    if (ds < 0.0 || di < 0.0 || dt < 0.0) nonnegative = false;
  }

  // Satisfied margins by construction: matched pairs on orthogonal axes with
  // gain > 1 beat every mismatched score (0) by more than the unit margin.
  sje::BatchEmbeddings separated;
  const int n_sep = 4;
  for (int i = 0; i < n_sep; ++i) {
    std::vector<double> axis(n_sep, 0.0);
    axis[static_cast<std::size_t>(i)] = 1.2;
    separated.image.push_back(sje::Tensor::from_values({n_sep}, axis, false));
    separated.text.push_back(sje::Tensor::from_values({n_sep}, axis, false));
    separated.labels.push_back(i + 1);
  }
  const double satisfied_loss =
      sje::objective_loss(separated, sje::Objective::ds_sje).item();

  // One violated margin forces a strictly positive loss.
  sje::BatchEmbeddings violated = separated;
  violated.text[0] = violated.text[1];
  const double violated_loss =
      sje::objective_loss(violated, sje::Objective::ds_sje).item();

  const bool ok = worst_identity == 0.0 && nonnegative &&
                  satisfied_loss == 0.0 && violated_loss > 0.0;
  report(3, ok,
         "ds == da_image + da_text (max diff " + fmt(worst_identity) +
             ", exact), losses >= 0: " + (nonnegative ? "yes" : "NO") +
             ", satisfied margins -> loss " + fmt(satisfied_loss) +
             ", violated margin -> loss " + fmt(violated_loss));
}

// ---------------------------------------------------------------------------
// criterion 4: a word-level cnn-rnn trained with ds-sje and default optimizer
// settings (batch of 5 classes) reaches 100% train accuracy on a clean
// 5-class set within 500 epochs and 5 minutes.

double train_split_accuracy(const sje::ClassSplitDataset& dataset,
                            const sje::JointModel& model) {
  const sje::DatasetIndex index(dataset);
  const sje::TextInstanceCache cache(dataset, model);
  std::vector<std::pair<int, std::vector<double>>> class_embeddings;
  std::vector<int> classes = dataset.splits.train;
  std::sort(classes.begin(), classes.end());
  for (int c : classes) {
    std::vector<sje::TextInstance> instances;
    for (int row : index.caption_rows(c)) instances.push_back(cache.at(row));
    class_embeddings.emplace_back(
        c, sje::class_text_embedding(*model.text_encoder, instances));
  }
  int hits = 0, total = 0;
  for (int c : classes) {
    for (int row : index.image_rows(c)) {
      const sje::Tensor theta = model.image_encoder->encode(
          dataset.images[static_cast<std::size_t>(row)].vector);
      if (sje::classify_image(theta.values(), class_embeddings) == c) ++hits;
      ++total;
    }
  }
  return 100.0 * hits / static_cast<double>(total);
}

sje::EncoderSpec compact_cnn_rnn(std::uint64_t seed) {
  sje::EncoderSpec spec;
  spec.family = sje::EncoderFamily::cnn_rnn;
  spec.level = sje::TextLevel::word;
  spec.embed_dim = 32;
  spec.max_len = 30;
  spec.conv_blocks = {{32, 3, 1}, {32, 3, 3}};  // 30 -> 8 frames
  spec.rnn_steps = 8;
  spec.rnn_cell = sje::RnnCell::vanilla;
  spec.hidden_dim = 32;
  spec.seed = seed;
  return spec;
}

void criterion_overfit() {
  const auto start = Clock::now();
  sje::SyntheticConfig data_config;
  data_config.n_classes = 6;
  data_config.n_train_classes = 5;
  data_config.images_per_class = 10;
  data_config.captions_per_image = 10;
  data_config.n_attributes = 8;
  data_config.feature_dim = 32;
  data_config.noise_sigma = 0.0;
  data_config.seed = 11;
  const auto dataset = sje::generate_synthetic(data_config);

  sje::JointModel model = sje::build_joint_model(
      compact_cnn_rnn(1), sje::ImageEncoderMode::linear_projection, dataset);
  sje::TrainingConfig config;
  config.objective = sje::Objective::ds_sje;
  config.minibatch_classes = 5;
  config.seed = 1;
  sje::RmsProp optimizer(config.optimizer);

  double accuracy = 0.0;
  int epochs_run = 0;
  const int check_every = 25;
  while (epochs_run < 500) {
    config.epochs = std::min(check_every, 500 - epochs_run);
    sje::train(dataset, model, config, optimizer);
    epochs_run += config.epochs;
    config.seed += 1;  // fresh shuffling each continuation
    accuracy = train_split_accuracy(dataset, model);
    if (accuracy == 100.0) break;
    if (seconds_since(start) > 290.0) break;
  }
  const double elapsed = seconds_since(start);
  const bool ok = accuracy == 100.0 && epochs_run <= 500 && elapsed < 300.0;
  report(4, ok,
         "word cnn-rnn ds-sje overfit: " + fmt(accuracy) +
             "% train accuracy after " + std::to_string(epochs_run) +
             " epochs, " + fmt(elapsed) + "s");
}

// ---------------------------------------------------------------------------
// criteria 5-7 share one 30-class dataset (20 train / 10 test, 12
// attributes) and cnn-rnn models trained from three seeds.

// 50 images per class keeps the top-50 retrieval ceiling at 100%: with
// fewer than 25 images per test class the 50% precision bar could not be
// reached even by a perfect ranking (10 classes share the pool).
sje::ClassSplitDataset zero_shot_dataset() {
  sje::SyntheticConfig config;
  config.n_classes = 30;
  config.n_train_classes = 20;
  config.images_per_class = 50;
  config.captions_per_image = 5;
  config.n_attributes = 12;
  config.feature_dim = 32;
  config.noise_sigma = 0.25;
  config.seed = 5;
  return sje::generate_synthetic(config);
}

struct TrainedRun {
  sje::JointModel model;
  double top1 = 0.0;
  double ap50 = 0.0;
};

TrainedRun train_zero_shot(const sje::ClassSplitDataset& dataset,
                           sje::Objective objective, std::uint64_t seed,
                           int epochs) {
  TrainedRun run;
  run.model = sje::build_joint_model(
      compact_cnn_rnn(seed), sje::ImageEncoderMode::linear_projection,
      dataset);
  sje::TrainingConfig config;
  config.objective = objective;
  config.minibatch_classes = 20;
  config.epochs = epochs;
  config.seed = seed;
  sje::train(dataset, run.model, config);
  sje::EvalOptions options;
  options.objective = sje::to_string(objective);
  const auto report_data = sje::evaluate_classes(
      dataset, run.model, dataset.splits.test, options);
  run.top1 = report_data.top1;
  run.ap50 = report_data.ap50;
  return run;
}

void criteria_zero_shot_and_sweep() {
  const auto dataset = zero_shot_dataset();
  const int epochs = 250;

  std::vector<TrainedRun> ds_runs;
  std::vector<TrainedRun> da_runs;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ds_runs.push_back(
        train_zero_shot(dataset, sje::Objective::ds_sje, seed, epochs));
    da_runs.push_back(
        train_zero_shot(dataset, sje::Objective::da_sje_image, seed, epochs));
  }

  double mean_top1 = 0.0, mean_ap = 0.0;
  for (const auto& run : ds_runs) {
    mean_top1 += run.top1;
    mean_ap += run.ap50;
  }
  mean_top1 /= 3.0;
  mean_ap /= 3.0;
  report(5, mean_top1 >= 60.0 && mean_ap >= 50.0,
         "zero-shot cnn-rnn ds-sje over 3 seeds: mean top-1 " +
             fmt(mean_top1) + "% (>= 60), mean ap@50 " + fmt(mean_ap) +
             "% (>= 50)");

  int ds_wins = 0;
  std::string per_seed;
  for (std::size_t s = 0; s < 3; ++s) {
    if (ds_runs[s].ap50 > da_runs[s].ap50) ++ds_wins;
    per_seed += " seed" + std::to_string(s) + " " + fmt(ds_runs[s].ap50) +
                " vs " + fmt(da_runs[s].ap50) + ";";
  }
  report(6, ds_wins == 3,
         "ds-sje ap@50 beats da-sje-image in " + std::to_string(ds_wins) +
             "/3 seeds:" + per_seed);

  // criterion 7: caption-count sweep on the first trained model.
  const auto table =
      sje::caption_sweep_test(dataset, ds_runs[0].model, {1, 0}, 10, 0);
  const auto [mean_one, std_one] = sje::sweep_cell_stats(table, "test", 1, true);
  const auto [mean_all, std_all] = sje::sweep_cell_stats(table, "test", 0, true);
  const bool ok7 = mean_all >= mean_one && std_one > std_all;
  report(7, ok7,
         "caption sweep: top-1 at all captions " + fmt(mean_all) +
             "% >= at one caption " + fmt(mean_one) + "%, std " +
             fmt(std_one) + " (count 1) > " + fmt(std_all) + " (all)");
}

// ---------------------------------------------------------------------------
// criterion 8: encoders ignore padding and are deterministic across rebuilds
// on 200 random inputs.

void criterion_padding_and_determinism() {
  const auto dataset = gradcheck_dataset();
  std::mt19937_64 rng(99);

  const auto specs = family_specs();
  int checked = 0;
  double worst_pad = 0.0;
  bool deterministic = true;

  while (checked < 200) {
    for (const auto& base : specs) {
      if (checked >= 200) break;
      sje::EncoderSpec spec = base;
      spec.seed = rng();
      sje::JointModel model = sje::build_joint_model(
          spec, sje::ImageEncoderMode::linear_projection, dataset);
      sje::JointModel rebuilt = sje::build_joint_model(
          spec, sje::ImageEncoderMode::linear_projection, dataset);
      const sje::TextInstanceCache cache(dataset, model);

      const int row = static_cast<int>(
          rng() % static_cast<std::uint64_t>(dataset.captions.size()));
      const sje::TextInstance& instance = cache.at(row);

      const sje::Tensor out_a = model.text_encoder->encode(instance);
      const sje::Tensor out_b = rebuilt.text_encoder->encode(instance);
      if (out_a.values() != out_b.values()) deterministic = false;

      // Padding variants: variable-length families get extra trailing pad
      // ids; fixed-length conv stacks keep their ids but shrink the true
      // length (their forward depends on the id grid only).
      if (spec.family == sje::EncoderFamily::bow ||
          spec.family == sje::EncoderFamily::wordvec_avg ||
          spec.family == sje::EncoderFamily::lstm) {
        sje::TextInstance wide = instance;
        wide.sequence.ids.resize(wide.sequence.ids.size() + 13, 0);
        const sje::Tensor out_wide = model.text_encoder->encode(wide);
        const auto a = out_a.values();
        const auto b = out_wide.values();
        for (std::size_t i = 0; i < a.size(); ++i) {
          worst_pad = std::max(worst_pad, std::abs(a[i] - b[i]));
        }
      } else if (spec.family == sje::EncoderFamily::cnn ||
                 spec.family == sje::EncoderFamily::cnn_rnn) {
        sje::TextInstance trimmed = instance;
        if (trimmed.sequence.true_length > 1) {
          trimmed.sequence.true_length -= 1;  // forward depends on ids only
        }
        const sje::Tensor out_trim = model.text_encoder->encode(trimmed);
        const auto a = out_a.values();
        const auto b = out_trim.values();
        for (std::size_t i = 0; i < a.size(); ++i) {
          worst_pad = std::max(worst_pad, std::abs(a[i] - b[i]));
        }
      }
      ++checked;
    }
  }
  const bool ok = worst_pad <= 1e-12 && deterministic;
  report(8, ok,
         std::to_string(checked) +
             " random inputs: padding difference max " + fmt(worst_pad) +
             " (tol 1e-12), rebuild determinism " +
             (deterministic ? "exact" : "BROKEN"));
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_oracles();
  criterion_objective_identities();
  criterion_overfit();
  criteria_zero_shot_and_sweep();
  criterion_padding_and_determinism();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria passed\n");
  return 0;
}
