#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "oracles.hpp"
#include "sje/eval.hpp"
#include "sje/objective.hpp"
#include "sje/synthetic.hpp"
#include "sje/train.hpp"

namespace {

// Classes 1..train+test; one-hot features, attributes and captions per class.
// Every class gets `images_per_class` images and one caption on its first
// image, so a hand-set identity attribute projection is a perfect model.
sje::ClassSplitDataset one_hot_dataset(int train_classes, int test_classes,
                                       int images_per_class) {
  const int n = train_classes + test_classes;
  sje::ClassSplitDataset ds;
  for (int c = 1; c <= n; ++c) {
    std::vector<double> code(static_cast<std::size_t>(n), 0.0);
    code[static_cast<std::size_t>(c - 1)] = 1.0;
    for (int i = 0; i < images_per_class; ++i) {
      ds.images.push_back({1000 * c + i, c, code});
    }
    ds.captions.push_back({1000 * c, c, "group number " + std::to_string(c)});
    ds.attributes.push_back({c, code});
    if (c <= train_classes) {
      ds.splits.train.push_back(c);
    } else {
      ds.splits.test.push_back(c);
    }
  }
  ds.validate();
  return ds;
}

sje::JointModel identity_attribute_model(const sje::ClassSplitDataset& ds) {
  sje::EncoderSpec spec;
  spec.family = sje::EncoderFamily::attributes;
  spec.level = sje::TextLevel::word;
  spec.embed_dim = ds.attribute_dim();
  spec.seed = 5;
  sje::JointModel model =
      sje::build_joint_model(spec, sje::ImageEncoderMode::identity, ds);
  sje::Tensor* w = model.text_encoder->params().find("proj.weight");
  REQUIRE(w != nullptr);
  std::fill(w->values().begin(), w->values().end(), 0.0);
  const int dim = spec.embed_dim;
  for (int i = 0; i < dim; ++i) {
    w->values()[static_cast<std::size_t>(i * dim + i)] = 1.0;
  }
  return model;
}

sje::JointModel random_bow_model(const sje::ClassSplitDataset& ds, int embed,
                                 std::uint64_t seed) {
  sje::EncoderSpec spec;
  spec.family = sje::EncoderFamily::bow;
  spec.level = sje::TextLevel::word;
  spec.embed_dim = embed;
  spec.seed = seed;
  const auto mode = ds.feature_dim() == embed
                        ? sje::ImageEncoderMode::identity
                        : sje::ImageEncoderMode::linear_projection;
  return sje::build_joint_model(spec, mode, ds);
}

sje::SyntheticConfig chance_config() {
  sje::SyntheticConfig config;
  config.n_classes = 11;
  config.n_train_classes = 1;
  config.images_per_class = 20;
  config.captions_per_image = 2;
  config.n_attributes = 8;
  config.feature_dim = 16;
  config.noise_sigma = 1.0;
  config.seed = 123;
  return config;
}

}  // namespace

TEST_CASE("ap_at_50 matches the counting oracle on random rankings") {
  std::mt19937_64 rng(401);
  std::uniform_int_distribution<int> size_dist(1, 80);
  std::uniform_int_distribution<int> class_dist(1, 5);
  std::uniform_real_distribution<double> score_dist(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size_dist(rng);
    sje::ClassSplitDataset ds;
    std::vector<oracle::RankedImage> candidates;
    for (int i = 0; i < n; ++i) {
      // Quantized scores force ties; the id order must break them.
      const double score = std::round(score_dist(rng) * 4.0) / 4.0;
      const int class_id = class_dist(rng);
      candidates.push_back({score, 70 + i, class_id});
      ds.images.push_back({70 + i, class_id, {}});
    }
    const int query = class_dist(rng);

    sje::RetrievalRanking ranking;
    ranking.query_class_id = query;
    for (const auto& c : candidates) ranking.ranked.emplace_back(c.image_id, c.score);
    std::sort(ranking.ranked.begin(), ranking.ranked.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
              });

    CHECK(sje::ap_at_50(ranking, ds) ==
          oracle::precision_at_k(candidates, query, 50));
  }
}

TEST_CASE("ap_at_50 rejects malformed rankings") {
  sje::ClassSplitDataset ds;
  ds.images.push_back({1, 1, {}});
  ds.images.push_back({2, 2, {}});

  sje::RetrievalRanking empty;
  empty.query_class_id = 1;
  CHECK_THROWS_AS(sje::ap_at_50(empty, ds), std::invalid_argument);

  sje::RetrievalRanking increasing;
  increasing.query_class_id = 1;
  increasing.ranked = {{1, 0.0}, {2, 1.0}};
  CHECK_THROWS_AS(sje::ap_at_50(increasing, ds), std::invalid_argument);

  sje::RetrievalRanking repeated;
  repeated.query_class_id = 1;
  repeated.ranked = {{1, 1.0}, {1, 0.5}};
  CHECK_THROWS_AS(sje::ap_at_50(repeated, ds), std::invalid_argument);

  sje::RetrievalRanking unknown;
  unknown.query_class_id = 1;
  unknown.ranked = {{1, 1.0}, {99, 0.5}};
  CHECK_THROWS_AS(sje::ap_at_50(unknown, ds), std::invalid_argument);
}

TEST_CASE("ap_at_50 uses k = min(50, pool size)") {
  // 3 relevant images in a pool of 4: k=4, precision 75%.
  sje::ClassSplitDataset ds;
  for (int i = 0; i < 4; ++i) ds.images.push_back({i, i == 3 ? 2 : 1, {}});
  sje::RetrievalRanking ranking;
  ranking.query_class_id = 1;
  ranking.ranked = {{0, 4.0}, {1, 3.0}, {2, 2.0}, {3, 1.0}};
  CHECK(sje::ap_at_50(ranking, ds) == doctest::Approx(75.0));
}

TEST_CASE("perfect one-hot model scores 100% on both metrics") {
  const auto ds = one_hot_dataset(1, 4, 60);
  const auto model = identity_attribute_model(ds);
  sje::EvalOptions options;
  const auto report = sje::evaluate_classes(ds, model, ds.splits.test, options);
  CHECK(report.effective_k == 50);
  CHECK(report.per_class.size() == 4);
  for (const auto& row : report.per_class) {
    CHECK(row.top1 == doctest::Approx(100.0));
    CHECK(row.ap50 == doctest::Approx(100.0));
    CHECK(row.images == 60);
    CHECK(row.captions_used == 1);
  }
  CHECK(report.top1 == doctest::Approx(100.0));
  CHECK(report.ap50 == doctest::Approx(100.0));
}

TEST_CASE("constant class embeddings collapse accuracy to 100/C") {
  // Zeroing the bag-of-words table except the column of a word shared by
  // every caption makes all class embeddings identical, so ties send every
  // image to the smallest test class id.
  sje::SyntheticConfig config;
  config.n_classes = 5;
  config.n_train_classes = 1;
  config.images_per_class = 3;
  config.captions_per_image = 2;
  config.n_attributes = 6;
  config.feature_dim = 8;
  config.noise_sigma = 0.0;
  config.seed = 9;
  const auto ds = sje::generate_synthetic(config);

  auto model = random_bow_model(ds, 8, 17);
  sje::Tensor* w = model.text_encoder->params().find("proj.weight");
  REQUIRE(w != nullptr);
  std::fill(w->values().begin(), w->values().end(), 0.0);
  const int vocab_cols = static_cast<int>(w->size()) / 8;
  const int the_col = model.vocabulary.id_of("the") - 2;
  REQUIRE(the_col >= 0);
  REQUIRE(the_col < vocab_cols);
  for (int i = 0; i < 8; ++i) {
    w->values()[static_cast<std::size_t>(i * vocab_cols + the_col)] =
        (i % 2 == 0) ? 1.0 : -1.0;
  }

  sje::EvalOptions options;
  const auto report = sje::evaluate_classes(ds, model, ds.splits.test, options);
  CHECK(report.top1 == doctest::Approx(100.0 / 4.0));
  CHECK(report.per_class.front().top1 == doctest::Approx(100.0));
  for (std::size_t i = 1; i < report.per_class.size(); ++i) {
    CHECK(report.per_class[i].top1 == doctest::Approx(0.0));
  }
}

TEST_CASE("headline metrics equal the unweighted per-class means") {
  const auto ds = sje::generate_synthetic(chance_config());
  const auto model = random_bow_model(ds, 16, 3);
  sje::EvalOptions options;
  options.captions_per_class = 3;
  options.seed = 21;
  const auto report = sje::evaluate_classes(ds, model, ds.splits.test, options);
  double top1 = 0.0;
  double ap50 = 0.0;
  for (const auto& row : report.per_class) {
    top1 += row.top1;
    ap50 += row.ap50;
  }
  top1 /= static_cast<double>(report.per_class.size());
  ap50 /= static_cast<double>(report.per_class.size());
  CHECK(std::abs(report.top1 - top1) <= 1e-12);
  CHECK(std::abs(report.ap50 - ap50) <= 1e-12);
}

TEST_CASE("evaluation is invariant to image presentation order") {
  const auto ds = sje::generate_synthetic(chance_config());
  const auto model = random_bow_model(ds, 16, 3);
  sje::EvalOptions options;
  const auto base = sje::evaluate_classes(ds, model, ds.splits.test, options);

  auto shuffled = ds;
  std::mt19937_64 rng(77);
  std::shuffle(shuffled.images.begin(), shuffled.images.end(), rng);
  shuffled.validate();
  const auto moved =
      sje::evaluate_classes(shuffled, model, shuffled.splits.test, options);

  CHECK(base.top1 == moved.top1);
  CHECK(base.ap50 == moved.ap50);
  REQUIRE(base.per_class.size() == moved.per_class.size());
  for (std::size_t i = 0; i < base.per_class.size(); ++i) {
    CHECK(base.per_class[i].class_id == moved.per_class[i].class_id);
    CHECK(base.per_class[i].top1 == moved.per_class[i].top1);
    CHECK(base.per_class[i].ap50 == moved.per_class[i].ap50);
  }
}

TEST_CASE("caption subsampling is seeded and clamps oversized requests") {
  sje::SyntheticConfig config = chance_config();
  config.images_per_class = 3;
  const auto ds = sje::generate_synthetic(config);
  const auto model = random_bow_model(ds, 16, 3);

  sje::EvalOptions one;
  one.captions_per_class = 1;
  one.seed = 4;
  const auto a = sje::evaluate_classes(ds, model, ds.splits.test, one);
  const auto b = sje::evaluate_classes(ds, model, ds.splits.test, one);
  CHECK(a.top1 == b.top1);
  CHECK(a.ap50 == b.ap50);
  for (const auto& row : a.per_class) CHECK(row.captions_used == 1);

  // 3 images x 2 captions = 6 per class; asking for more uses all 6.
  sje::EvalOptions oversized;
  oversized.captions_per_class = 7;
  const auto clamped =
      sje::evaluate_classes(ds, model, ds.splits.test, oversized);
  for (const auto& row : clamped.per_class) CHECK(row.captions_used == 6);

  sje::EvalOptions all;
  all.captions_per_class = 0;
  all.seed = 1;
  sje::EvalOptions all_other_seed;
  all_other_seed.captions_per_class = 0;
  all_other_seed.seed = 999;
  const auto full = sje::evaluate_classes(ds, model, ds.splits.test, all);
  const auto full2 =
      sje::evaluate_classes(ds, model, ds.splits.test, all_other_seed);
  CHECK(full.top1 == full2.top1);  // "all" never samples
  CHECK(full.ap50 == full2.ap50);
  CHECK(full.top1 == clamped.top1);
}

TEST_CASE("evaluate_classes validates its inputs") {
  const auto ds = one_hot_dataset(1, 4, 2);
  const auto model = identity_attribute_model(ds);
  sje::EvalOptions options;
  CHECK_THROWS_AS(sje::evaluate_classes(ds, model, {}, options),
                  std::invalid_argument);
  CHECK_THROWS_AS(sje::evaluate_classes(ds, model, {2, 2}, options),
                  std::invalid_argument);
  sje::EvalOptions negative;
  negative.captions_per_class = -1;
  CHECK_THROWS_AS(
      sje::evaluate_classes(ds, model, ds.splits.test, negative),
      std::invalid_argument);

  auto no_test = ds;
  no_test.splits.train.insert(no_test.splits.train.end(),
                              no_test.splits.test.begin(),
                              no_test.splits.test.end());
  no_test.splits.test.clear();
  no_test.validate();
  CHECK_THROWS_AS(sje::zero_shot_accuracy(no_test, model, 0, 0),
                  std::invalid_argument);
}

TEST_CASE("zero_shot_accuracy and retrieval_eval mirror the full report") {
  const auto ds = sje::generate_synthetic(chance_config());
  const auto model = random_bow_model(ds, 16, 8);
  sje::EvalOptions options;
  options.captions_per_class = 2;
  options.seed = 6;
  const auto report = sje::evaluate_classes(ds, model, ds.splits.test, options);
  CHECK(sje::zero_shot_accuracy(ds, model, 2, 6) == report.top1);
  CHECK(sje::retrieval_eval(ds, model, 2, 6) == report.ap50);
}

TEST_CASE("random models sit at chance level on both metrics") {
  const auto ds = sje::generate_synthetic(chance_config());
  std::vector<double> top1s;
  std::vector<double> ap50s;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto model = random_bow_model(ds, 16, seed);
    sje::EvalOptions options;
    const auto report =
        sje::evaluate_classes(ds, model, ds.splits.test, options);
    top1s.push_back(report.top1);
    ap50s.push_back(report.ap50);
  }
  const auto check_chance = [](const std::vector<double>& values,
                               double expected) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    const double se =
        std::sqrt(var / static_cast<double>(values.size() - 1)) /
        std::sqrt(static_cast<double>(values.size()));
    CHECK(std::abs(mean - expected) <= std::max(3.0 * se, 1.0));
  };
  check_chance(top1s, 10.0);   // 10 test classes
  check_chance(ap50s, 10.0);   // equal class sizes in the pool
}

TEST_CASE("report serializers carry the per-class table and config echo") {
  const auto ds = one_hot_dataset(1, 4, 60);
  const auto model = identity_attribute_model(ds);
  sje::EvalOptions options;
  options.objective = "da-sje-image";
  options.seed = 12;
  const auto report = sje::evaluate_classes(ds, model, ds.splits.test, options);

  const std::string text = sje::report_to_text(report);
  CHECK(text.find("attributes") != std::string::npos);
  CHECK(text.find("da-sje-image") != std::string::npos);
  CHECK(text.find("all") != std::string::npos);
  CHECK(text.find("mean") != std::string::npos);
  for (const auto& row : report.per_class) {
    CHECK(text.find(std::to_string(row.class_id)) != std::string::npos);
  }

  const auto j = nlohmann::json::parse(sje::report_to_json_string(report));
  CHECK(j["top1"].get<double>() == report.top1);
  CHECK(j["ap50"].get<double>() == report.ap50);
  CHECK(j["effective_k"].get<int>() == 50);
  CHECK(j["captions_per_class"] == "all");
  CHECK(j["seed"].get<std::uint64_t>() == 12);
  CHECK(j["per_class"].size() == 4);
  CHECK(j["per_class"][0]["class_id"].get<int>() ==
        report.per_class[0].class_id);

  sje::EvalOptions counted;
  counted.captions_per_class = 1;
  const auto counted_report =
      sje::evaluate_classes(ds, model, ds.splits.test, counted);
  const auto jc = nlohmann::json::parse(sje::report_to_json_string(counted_report));
  CHECK(jc["captions_per_class"].get<int>() == 1);
}

TEST_CASE("single-count single-repeat sweep reduces to one evaluation") {
  const auto ds = sje::generate_synthetic(chance_config());
  const auto model = random_bow_model(ds, 16, 2);
  const auto table = sje::caption_sweep_test(ds, model, {0}, 1, 3);
  REQUIRE(table.cells.size() == 1);
  CHECK(table.cells[0].axis == "test");
  CHECK(table.cells[0].count == 0);
  CHECK(table.cells[0].repeat == 0);
  sje::EvalOptions options;
  options.seed = 3;
  const auto report = sje::evaluate_classes(ds, model, ds.splits.test, options);
  CHECK(table.cells[0].top1 == report.top1);
  CHECK(table.cells[0].ap50 == report.ap50);
}

TEST_CASE("test-axis sweeps vary with count 1 but are exact at count all") {
  const auto ds = sje::generate_synthetic(chance_config());
  const auto model = random_bow_model(ds, 16, 2);
  const auto table = sje::caption_sweep_test(ds, model, {1, 0}, 10, 0);
  CHECK(table.cells.size() == 20);
  const auto [mean_one, std_one] = sje::sweep_cell_stats(table, "test", 1, true);
  const auto [mean_all, std_all] = sje::sweep_cell_stats(table, "test", 0, true);
  CHECK(std_all == 0.0);
  CHECK(std_one > 0.0);
  CHECK(mean_one >= 0.0);
  CHECK(mean_all >= 0.0);
}

TEST_CASE("train-axis sweeps retrain per cell and stay deterministic") {
  sje::SyntheticConfig config;
  config.n_classes = 6;
  config.n_train_classes = 4;
  config.images_per_class = 2;
  config.captions_per_image = 3;
  config.n_attributes = 6;
  config.feature_dim = 8;
  config.noise_sigma = 0.0;
  config.seed = 31;
  const auto ds = sje::generate_synthetic(config);

  sje::EncoderSpec spec;
  spec.family = sje::EncoderFamily::bow;
  spec.level = sje::TextLevel::word;
  spec.embed_dim = 8;
  spec.seed = 1;
  sje::TrainingConfig train_config;
  train_config.epochs = 3;
  train_config.minibatch_classes = 4;

  const auto run = [&] {
    return sje::caption_sweep_train(ds, spec, sje::ImageEncoderMode::identity,
                                    train_config, {1, 0}, 2, 11);
  };
  const auto table = run();
  REQUIRE(table.cells.size() == 4);
  for (const auto& cell : table.cells) {
    CHECK(cell.axis == "train");
    CHECK(cell.top1 >= 0.0);
    CHECK(cell.top1 <= 100.0);
  }
  CHECK(table.cells[0].count == 1);
  CHECK(table.cells[1].repeat == 1);
  CHECK(table.cells[2].count == 0);

  const auto again = run();
  for (std::size_t i = 0; i < table.cells.size(); ++i) {
    CHECK(table.cells[i].top1 == again.cells[i].top1);
    CHECK(table.cells[i].ap50 == again.cells[i].ap50);
  }
}

TEST_CASE("sweep CSV lists one row per cell with 'all' for count zero") {
  sje::SweepTable table;
  table.cells.push_back({"test", 0, 0, 12.5, 50.0});
  table.cells.push_back({"train", 3, 1, 100.0, 7.25});
  const std::string csv = sje::sweep_to_csv(table);

  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < csv.size()) {
    const std::size_t end = csv.find('\n', start);
    lines.push_back(csv.substr(start, end - start));
    start = end + 1;
  }
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == "axis,count,repeat,top1,ap50");
  CHECK(lines[1] == "test,all,0,12.5,50");
  CHECK(lines[2] == "train,3,1,100,7.25");
}

TEST_CASE("sweep_cell_stats computes mean and sample deviation") {
  sje::SweepTable table;
  table.cells.push_back({"test", 1, 0, 10.0, 1.0});
  table.cells.push_back({"test", 1, 1, 20.0, 2.0});
  table.cells.push_back({"test", 1, 2, 30.0, 3.0});
  table.cells.push_back({"test", 5, 0, 99.0, 9.0});
  const auto [mean, stddev] = sje::sweep_cell_stats(table, "test", 1, true);
  CHECK(mean == doctest::Approx(20.0));
  CHECK(stddev == doctest::Approx(10.0));
  const auto [mean_ap, std_ap] = sje::sweep_cell_stats(table, "test", 1, false);
  CHECK(mean_ap == doctest::Approx(2.0));
  CHECK(std_ap == doctest::Approx(1.0));
  const auto [mean_single, std_single] =
      sje::sweep_cell_stats(table, "test", 5, true);
  CHECK(mean_single == doctest::Approx(99.0));
  CHECK(std_single == 0.0);
  CHECK_THROWS_AS(sje::sweep_cell_stats(table, "train", 1, true),
                  std::invalid_argument);
}

TEST_CASE("sweep argument validation") {
  const auto ds = one_hot_dataset(1, 4, 2);
  const auto model = identity_attribute_model(ds);
  CHECK_THROWS_AS(sje::caption_sweep_test(ds, model, {}, 1, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sje::caption_sweep_test(ds, model, {-1}, 1, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sje::caption_sweep_test(ds, model, {1}, 0, 0),
                  std::invalid_argument);
}
