#pragma once

#include "covermodal/corpus.hpp"
#include "covermodal/evalsuite.hpp"
#include "covermodal/fusion.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

namespace covermodal {

// Every field has an explicit default and every key appears in the
// serialized form, so emitted artifacts carry no implicit settings.
// Sub-stage seeds derive from `seed`: data generation uses seed, the split
// uses seed+1, training uses seed+2.
struct ExperimentConfig {
  std::string model = "concat";    // concat | dcca
  std::string data = "synthetic";  // synthetic | manifest
  std::string manifest_path;
  std::string features_path;
  std::string out_dir = "out";
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  std::uint64_t seed = 42;
  int min_count = 5;
  int visual_hidden = 32;
  int visual_feature_dim = 16;
  int embed_dim = 16;
  int text_feature_dim = 16;
  double lr = 0.001;
  int epochs = 300;
  std::string modality = "both";  // both | visual_only | text_only
  int cca_k = 0;                  // 0 selects min of the two feature widths
  double cca_r = 1e-4;
  double svm_l2 = 1e-3;
  int svm_epochs = 200;
  double svm_lr = 0.1;
  int factor_a = 2;
  int factor_b = 2;
  int n_per_class = 200;
  double noise_sd = 0.1;
  double inconsistent_fraction = 0.0;

  std::uint64_t data_seed() const { return seed; }
  std::uint64_t split_seed() const { return seed + 1; }
  std::uint64_t train_seed() const { return seed + 2; }
};

// key=value lines, '#' comment lines; unknown keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

// Canonical serialized form: fixed key order, shortest round-trip numbers.
std::string config_to_text(const ExperimentConfig& config);

struct PreparedData {
  Dataset train, val, test;
  Vocabulary vocab;
};

// Load or generate, split, fit the vocabulary on the training part only,
// and encode every part. The overload taking a vocabulary skips the fit and
// encodes with the one given.
PreparedData prepare_data(const ExperimentConfig& config);
PreparedData prepare_data(const ExperimentConfig& config, const Vocabulary& vocab);

// Single binary artifact: magic CMCK, version, length-prefixed config and
// vocabulary sections, then each parameter tensor as dims plus raw 64-bit
// little-endian values. Round-trips bit for bit.
struct Checkpoint {
  ExperimentConfig config;
  Vocabulary vocab;
  std::optional<ConcatModel> concat;
  std::optional<DccaModel> dcca;
};

std::string checkpoint_to_bytes(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_bytes(const std::string& bytes);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::pair<Checkpoint, TrainingLog> train_model(const ExperimentConfig& config,
                                               const PreparedData& prepared);

EvalReport evaluate_checkpoint(const Checkpoint& checkpoint);

struct RunArtifacts {
  std::string checkpoint_path;
  std::string metrics_path;
  std::string confusion_path;
  std::string log_path;
};

// prepare -> train -> evaluate on the test part, emitting the checkpoint,
// metrics, confusion matrix, and training log under config.out_dir.
RunArtifacts run_experiment(const ExperimentConfig& config);

}  // namespace covermodal
