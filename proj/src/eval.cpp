#include "sje/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "config_json.hpp"
#include "sje/objective.hpp"

namespace sje {

namespace {

double dot_plain(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot of mismatched vectors");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<int> sorted_distinct_classes(const std::vector<int>& class_ids) {
  if (class_ids.empty()) {
    throw std::invalid_argument("evaluation needs at least one class");
  }
  std::vector<int> sorted = class_ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("duplicate class id in evaluation set");
  }
  return sorted;
}

// Caption rows representing one class: all of them, or a seeded sample of
// `count` without replacement (ascending row order either way).
std::vector<int> choose_caption_rows(const std::vector<int>& rows, int count,
                                     int class_id, std::mt19937_64& rng) {
  if (count == 0 || count >= static_cast<int>(rows.size())) {
    if (count > static_cast<int>(rows.size())) {
      std::cerr << "warning: class " << class_id << " has only " << rows.size()
                << " captions, requested " << count << "; using all\n";
    }
    return rows;
  }
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(count));
  std::sample(rows.begin(), rows.end(), std::back_inserter(chosen), count,
              rng);
  return chosen;
}

struct PoolEntry {
  int image_id = 0;
  int class_id = 0;
  std::vector<double> embedding;
};

}  // namespace

double ap_at_50(const RetrievalRanking& ranking,
                const ClassSplitDataset& dataset) {
  if (ranking.ranked.empty()) {
    throw std::invalid_argument("ap_at_50 needs a non-empty ranking");
  }
  std::set<int> seen;
  for (std::size_t i = 0; i < ranking.ranked.size(); ++i) {
    if (i > 0 && ranking.ranked[i].second > ranking.ranked[i - 1].second) {
      throw std::invalid_argument("ranking scores must be non-increasing");
    }
    if (!seen.insert(ranking.ranked[i].first).second) {
      throw std::invalid_argument("image id repeated in ranking");
    }
  }
  std::map<int, int> class_of;
  for (const auto& img : dataset.images) class_of[img.image_id] = img.class_id;
  const std::size_t k = std::min<std::size_t>(50, ranking.ranked.size());
  int hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    auto it = class_of.find(ranking.ranked[i].first);
    if (it == class_of.end()) {
      throw std::invalid_argument("ranking references unknown image id " +
                                  std::to_string(ranking.ranked[i].first));
    }
    if (it->second == ranking.query_class_id) ++hits;
  }
  return 100.0 * hits / static_cast<double>(k);
}

EvalReport evaluate_classes(const ClassSplitDataset& dataset,
                            const JointModel& model,
                            const std::vector<int>& class_ids,
                            const EvalOptions& options) {
  if (options.captions_per_class < 0) {
    throw std::invalid_argument("captions_per_class must be >= 0");
  }
  const std::vector<int> classes = sorted_distinct_classes(class_ids);
  const DatasetIndex index(dataset);
  const TextInstanceCache cache(dataset, model);

  // One embedding per class: the mean over its sampled captions.
  std::mt19937_64 rng(options.seed);
  std::vector<std::pair<int, std::vector<double>>> class_embeddings;
  std::map<int, int> captions_used;
  for (int c : classes) {
    const std::vector<int> rows = choose_caption_rows(
        index.caption_rows(c), options.captions_per_class, c, rng);
    std::vector<TextInstance> instances;
    instances.reserve(rows.size());
    for (int r : rows) instances.push_back(cache.at(r));
    class_embeddings.emplace_back(
        c, class_text_embedding(*model.text_encoder, instances));
    captions_used[c] = static_cast<int>(rows.size());
  }

  // Classify every image of the evaluated classes and keep its embedding
  // around as the retrieval pool.
  std::vector<PoolEntry> pool;
  std::map<int, std::pair<int, int>> correct_total;  // class -> (hits, n)
  for (int c : classes) {
    for (int row : index.image_rows(c)) {
      const ImageFeature& img = dataset.images[static_cast<std::size_t>(row)];
      const Tensor theta = model.image_encoder->encode(img.vector);
      PoolEntry entry{img.image_id, c, theta.values()};
      const int predicted = classify_image(entry.embedding, class_embeddings);
      auto& [hits, total] = correct_total[c];
      if (predicted == c) ++hits;
      ++total;
      pool.push_back(std::move(entry));
    }
  }

  EvalReport report;
  report.effective_k = static_cast<int>(std::min<std::size_t>(50, pool.size()));
  report.objective = options.objective;
  report.encoder_family = to_string(model.spec.family);
  report.level = to_string(model.spec.level);
  report.captions_per_class = options.captions_per_class;
  report.seed = options.seed;

  for (const auto& [c, embedding] : class_embeddings) {
    RetrievalRanking ranking;
    ranking.query_class_id = c;
    ranking.ranked.reserve(pool.size());
    for (const PoolEntry& entry : pool) {
      ranking.ranked.emplace_back(entry.image_id,
                                  dot_plain(embedding, entry.embedding));
    }
    std::sort(ranking.ranked.begin(), ranking.ranked.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return a.first < b.first;
              });

    PerClassResult row;
    row.class_id = c;
    const auto [hits, total] = correct_total.at(c);
    row.top1 = 100.0 * hits / static_cast<double>(total);
    row.ap50 = ap_at_50(ranking, dataset);
    row.images = total;
    row.captions_used = captions_used.at(c);
    report.per_class.push_back(row);
  }

  for (const PerClassResult& row : report.per_class) {
    report.top1 += row.top1;
    report.ap50 += row.ap50;
  }
  report.top1 /= static_cast<double>(report.per_class.size());
  report.ap50 /= static_cast<double>(report.per_class.size());
  return report;
}

namespace {

const std::vector<int>& require_test_split(const ClassSplitDataset& dataset) {
  if (dataset.splits.test.empty()) {
    throw std::invalid_argument("dataset has no test classes to evaluate");
  }
  return dataset.splits.test;
}

}  // namespace

double zero_shot_accuracy(const ClassSplitDataset& dataset,
                          const JointModel& model, int captions_per_class,
                          std::uint64_t seed) {
  EvalOptions options;
  options.captions_per_class = captions_per_class;
  options.seed = seed;
  return evaluate_classes(dataset, model, require_test_split(dataset), options)
      .top1;
}

double retrieval_eval(const ClassSplitDataset& dataset,
                      const JointModel& model, int captions_per_class,
                      std::uint64_t seed) {
  EvalOptions options;
  options.captions_per_class = captions_per_class;
  options.seed = seed;
  return evaluate_classes(dataset, model, require_test_split(dataset), options)
      .ap50;
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "joint embedding evaluation\n";
  out << "  encoder: " << report.encoder_family << " (" << report.level
      << " level)   objective: " << report.objective << "\n";
  out << "  captions per class: ";
  if (report.captions_per_class == 0) {
    out << "all";
  } else {
    out << report.captions_per_class;
  }
  out << "   seed: " << report.seed
      << "   retrieval window: " << report.effective_k << "\n\n";
  out << std::setw(8) << "class" << std::setw(10) << "images" << std::setw(10)
      << "captions" << std::setw(10) << "top-1" << std::setw(10) << "ap@50"
      << "\n";
  for (const PerClassResult& row : report.per_class) {
    out << std::setw(8) << row.class_id << std::setw(10) << row.images
        << std::setw(10) << row.captions_used << std::setw(10) << row.top1
        << std::setw(10) << row.ap50 << "\n";
  }
  out << "\n";
  out << std::setw(8) << "mean" << std::setw(10) << "" << std::setw(10) << ""
      << std::setw(10) << report.top1 << std::setw(10) << report.ap50 << "\n";
  return out.str();
}

std::string report_to_json_string(const EvalReport& report) {
  nlohmann::json j;
  j["top1"] = report.top1;
  j["ap50"] = report.ap50;
  j["effective_k"] = report.effective_k;
  j["objective"] = report.objective;
  j["encoder_family"] = report.encoder_family;
  j["level"] = report.level;
  j["captions_per_class"] =
      report.captions_per_class == 0
          ? nlohmann::json("all")
          : nlohmann::json(report.captions_per_class);
  j["seed"] = report.seed;
  j["per_class"] = nlohmann::json::array();
  for (const PerClassResult& row : report.per_class) {
    j["per_class"].push_back({{"class_id", row.class_id},
                              {"top1", row.top1},
                              {"ap50", row.ap50},
                              {"images", row.images},
                              {"captions_used", row.captions_used}});
  }
  return j.dump(2) + "\n";
}

namespace {

void check_sweep_args(const std::vector<int>& counts, int repeats) {
  if (counts.empty()) throw std::invalid_argument("sweep needs >= 1 count");
  for (int c : counts) {
    if (c < 0) throw std::invalid_argument("sweep counts must be >= 0");
  }
  if (repeats < 1) throw std::invalid_argument("sweep needs >= 1 repeat");
}

// Copy of the dataset keeping only `count` captions per train/val image;
// test-class captions always survive so evaluation sees the full set.
ClassSplitDataset truncate_train_captions(const ClassSplitDataset& dataset,
                                          int count, std::uint64_t seed) {
  if (count == 0) return dataset;
  std::set<int> test_classes(dataset.splits.test.begin(),
                             dataset.splits.test.end());
  std::map<int, std::vector<int>> rows_by_image;
  for (std::size_t i = 0; i < dataset.captions.size(); ++i) {
    rows_by_image[dataset.captions[i].image_id].push_back(
        static_cast<int>(i));
  }
  std::mt19937_64 rng(seed);
  std::vector<char> keep(dataset.captions.size(), 0);
  for (const auto& [image_id, rows] : rows_by_image) {
    const int class_id =
        dataset.captions[static_cast<std::size_t>(rows.front())].class_id;
    if (test_classes.count(class_id) ||
        count >= static_cast<int>(rows.size())) {
      for (int r : rows) keep[static_cast<std::size_t>(r)] = 1;
      continue;
    }
    std::vector<int> chosen;
    std::sample(rows.begin(), rows.end(), std::back_inserter(chosen), count,
                rng);
    for (int r : chosen) keep[static_cast<std::size_t>(r)] = 1;
  }
  ClassSplitDataset truncated = dataset;
  truncated.captions.clear();
  for (std::size_t i = 0; i < dataset.captions.size(); ++i) {
    if (keep[i]) truncated.captions.push_back(dataset.captions[i]);
  }
  truncated.validate();
  return truncated;
}

}  // namespace

SweepTable caption_sweep_test(const ClassSplitDataset& dataset,
                              const JointModel& model,
                              const std::vector<int>& counts, int repeats,
                              std::uint64_t base_seed) {
  check_sweep_args(counts, repeats);
  const std::vector<int>& test = require_test_split(dataset);
  SweepTable table;
  for (int count : counts) {
    for (int repeat = 0; repeat < repeats; ++repeat) {
      EvalOptions options;
      options.captions_per_class = count;
      options.seed = base_seed + static_cast<std::uint64_t>(repeat);
      const EvalReport report =
          evaluate_classes(dataset, model, test, options);
      table.cells.push_back(
          {"test", count, repeat, report.top1, report.ap50});
    }
  }
  return table;
}

SweepTable caption_sweep_train(const ClassSplitDataset& dataset,
                               const EncoderSpec& spec,
                               ImageEncoderMode image_mode,
                               const TrainingConfig& train_config,
                               const std::vector<int>& counts, int repeats,
                               std::uint64_t base_seed) {
  check_sweep_args(counts, repeats);
  require_test_split(dataset);
  SweepTable table;
  for (int count : counts) {
    for (int repeat = 0; repeat < repeats; ++repeat) {
      const std::uint64_t repeat_seed =
          base_seed + static_cast<std::uint64_t>(repeat);
      const ClassSplitDataset truncated =
          truncate_train_captions(dataset, count, repeat_seed);
      EncoderSpec repeat_spec = spec;
      repeat_spec.seed = spec.seed + static_cast<std::uint64_t>(repeat);
      JointModel model =
          build_joint_model(repeat_spec, image_mode, truncated);
      TrainingConfig repeat_config = train_config;
      repeat_config.seed = train_config.seed + static_cast<std::uint64_t>(repeat);
      train(truncated, model, repeat_config);

      EvalOptions options;
      options.captions_per_class = 0;  // all test captions
      options.seed = base_seed;
      const EvalReport report = evaluate_classes(
          truncated, model, truncated.splits.test, options);
      table.cells.push_back(
          {"train", count, repeat, report.top1, report.ap50});
    }
  }
  return table;
}

std::string sweep_to_csv(const SweepTable& table) {
  std::ostringstream out;
  out << "axis,count,repeat,top1,ap50\n";
  for (const SweepCell& cell : table.cells) {
    out << cell.axis << ",";
    if (cell.count == 0) {
      out << "all";
    } else {
      out << cell.count;
    }
    out << "," << cell.repeat << "," << format_double(cell.top1) << ","
        << format_double(cell.ap50) << "\n";
  }
  return out.str();
}

std::pair<double, double> sweep_cell_stats(const SweepTable& table,
                                           const std::string& axis, int count,
                                           bool top1_column) {
  std::vector<double> values;
  for (const SweepCell& cell : table.cells) {
    if (cell.axis == axis && cell.count == count) {
      values.push_back(top1_column ? cell.top1 : cell.ap50);
    }
  }
  if (values.empty()) {
    throw std::invalid_argument("no sweep cells for axis " + axis +
                                " count " + std::to_string(count));
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double variance = 0.0;
  for (double v : values) variance += (v - mean) * (v - mean);
  const double stddev =
      values.size() > 1
          ? std::sqrt(variance / static_cast<double>(values.size() - 1))
          : 0.0;
  return {mean, stddev};
}

}  // namespace sje
