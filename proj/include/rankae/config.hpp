#pragma once

#include <iosfwd>
#include <string>

#include "rankae/model.hpp"

namespace rankae {

/// Everything a training run needs beyond the model hyper-parameters:
/// file paths and preprocessing switches. Loaded from a flat `key = value`
/// file (`#` starts a comment); command-line flags override file values.
struct RunConfig {
  ModelConfig model;
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  std::string vocab_path;
  std::string embeddings_path;
  bool tfidf = false;
  bool one_based = false;
  double valid_fraction = 0.2;
  int threads = 0;  // 0 = all available cores
};

/// Parses a run-config file. Unknown keys are an error.
void apply_config_file(std::istream& in, RunConfig& cfg);
void apply_config_file_path(const std::string& path, RunConfig& cfg);

/// Canonical text form of a ModelConfig, one `key=value` per line in fixed
/// key order. This is the block embedded in checkpoints, so the rendering
/// must stay byte-stable for identical configs.
std::string model_config_to_text(const ModelConfig& cfg);
ModelConfig model_config_from_text(const std::string& text);

const char* loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);

}  // namespace rankae
