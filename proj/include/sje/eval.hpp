#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sje/dataset.hpp"
#include "sje/train.hpp"

namespace sje {

struct PerClassResult {
  int class_id = 0;
  double top1 = 0.0;  // percent
  double ap50 = 0.0;  // percent
  int images = 0;
  int captions_used = 0;
};

struct EvalReport {
  double top1 = 0.0;  // unweighted mean of per_class top1
  double ap50 = 0.0;  // unweighted mean of per_class ap50
  int effective_k = 0;  // retrieval window, min(50, pool size)
  std::vector<PerClassResult> per_class;
  // Config echo.
  std::string objective;
  std::string encoder_family;
  std::string level;
  int captions_per_class = 0;  // 0 = all
  std::uint64_t seed = 0;
};

struct EvalOptions {
  int captions_per_class = 0;  // 0 = all; counts above availability clamp
  std::uint64_t seed = 0;      // drives the caption subsampling only
  std::string objective = "ds-sje";  // echoed into the report
};

// Ranked candidates for one text query, descending score; image-id ascending
// breaks ties. Every pool image appears exactly once.
struct RetrievalRanking {
  int query_class_id = 0;
  std::vector<std::pair<int, double>> ranked;  // (image_id, score)
};

// Percent of the top-k ranked images whose class matches the query class,
// with k = min(50, pool size).
double ap_at_50(const RetrievalRanking& ranking,
                const ClassSplitDataset& dataset);

// Full protocol over the given classes: per-class averaged text embeddings
// from a seeded caption sample, classification of every image of those
// classes, and retrieval over the same image pool.
EvalReport evaluate_classes(const ClassSplitDataset& dataset,
                            const JointModel& model,
                            const std::vector<int>& class_ids,
                            const EvalOptions& options);

// The zero-shot protocol: evaluate_classes over the test split.
double zero_shot_accuracy(const ClassSplitDataset& dataset,
                          const JointModel& model, int captions_per_class,
                          std::uint64_t seed);
double retrieval_eval(const ClassSplitDataset& dataset,
                      const JointModel& model, int captions_per_class,
                      std::uint64_t seed);

std::string report_to_text(const EvalReport& report);
std::string report_to_json_string(const EvalReport& report);

struct SweepCell {
  std::string axis;  // "train" or "test"
  int count = 0;     // captions per class (test) or per image (train); 0 = all
  int repeat = 0;
  double top1 = 0.0;
  double ap50 = 0.0;
};

struct SweepTable {
  std::vector<SweepCell> cells;
};

// Test axis: one trained model, vary how many captions represent each test
// class; repeats re-draw the caption sample.
SweepTable caption_sweep_test(const ClassSplitDataset& dataset,
                              const JointModel& model,
                              const std::vector<int>& counts, int repeats,
                              std::uint64_t base_seed);

// Train axis: retrain per count on a copy of the dataset truncated to
// `count` captions per image; repeats re-draw the kept captions and the
// training seed. Evaluation always uses all test captions.
SweepTable caption_sweep_train(const ClassSplitDataset& dataset,
                               const EncoderSpec& spec,
                               ImageEncoderMode image_mode,
                               const TrainingConfig& train_config,
                               const std::vector<int>& counts, int repeats,
                               std::uint64_t base_seed);

std::string sweep_to_csv(const SweepTable& table);

// Mean and standard deviation of a metric column across the repeats of one
// (axis, count) cell.
std::pair<double, double> sweep_cell_stats(const SweepTable& table,
                                           const std::string& axis, int count,
                                           bool top1_column);

}  // namespace sje
