#pragma once

#include <stdexcept>
#include <string>

#include "sje/optim.hpp"
#include "sje/train.hpp"

namespace sje {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A restored model plus the optimizer state needed to resume training.
struct Checkpoint {
  JointModel model;
  RmsProp optimizer;
};

// Versioned JSON holding the encoder spec, the tables the model was built
// against (alphabet, vocabulary, word vectors), every named parameter with
// its shape and values, and the optimizer accumulators.
std::string checkpoint_to_json_string(const JointModel& model,
                                      const RmsProp& optimizer);
Checkpoint checkpoint_from_json_string(const std::string& text);

void save_checkpoint(const std::string& path, const JointModel& model,
                     const RmsProp& optimizer);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace sje
