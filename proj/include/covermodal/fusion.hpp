#pragma once

#include "covermodal/cca.hpp"
#include "covermodal/corpus.hpp"
#include "covermodal/encoders.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace covermodal {

enum class Modality { kBoth, kVisualOnly, kTextOnly };

Modality modality_from_string(const std::string& name);
std::string to_string(Modality modality);

struct TowerConfig {
  int visual_hidden = 32;
  int visual_feature_dim = 16;
  int embed_dim = 16;
  int text_feature_dim = 16;
  int vocab_rows = 1;  // V + 1; set once the vocabulary is known
};

struct ConcatConfig {
  TowerConfig towers;
  double lr = 0.001;
  int epochs = 300;
  Modality modality = Modality::kBoth;
};

struct DccaConfig {
  TowerConfig towers;
  double lr = 0.001;
  int epochs = 100;    // encoder alignment stage
  int cca_k = 0;       // 0 selects min of the two feature widths
  double cca_r = 1e-4;
  double svm_l2 = 1e-3;
  int svm_epochs = 200;
  double svm_lr = 0.1;
};

struct TrainingLog {
  struct Row {
    int epoch;
    double train_loss;
    double val_loss;
    double val_top1;
  };
  std::vector<Row> rows;
  std::string to_csv() const;  // epoch,train_loss,val_loss,val_top1
};

// Per-modality encoders feeding one softmax over the concatenated features.
struct ConcatModel {
  Modality modality = Modality::kBoth;
  MlpEncoder visual;
  TextEmbedder embedder;
  MlpEncoder text;
  SoftmaxHead head;
};

// One-vs-rest linear max-margin classifier.
struct SvmModel {
  int n_classes = 0;
  Matrix weight;  // n_classes x d
  Vector bias;
  double l2 = 0.0;
};

// Per-modality encoders aligned by correlation, a fitted CcaSolution, and an
// SVM over the concatenated 2k-dim projections.
struct DccaModel {
  MlpEncoder visual;
  TextEmbedder embedder;
  MlpEncoder text;
  CcaSolution cca;
  SvmModel svm;
};

// Row-wise concatenation, f1 columns first.
Matrix concat_features(const Matrix& f1, const Matrix& f2);

Matrix visual_matrix(std::span<const Sample> samples, int visual_dim);
std::vector<std::vector<int>> token_sequences(std::span<const Sample> samples);

// Joint full-batch Adam over encoders and head on cross-entropy.
std::pair<ConcatModel, TrainingLog> train_concat_model(const Dataset& train, const Dataset& val,
                                                       const ConcatConfig& config,
                                                       std::uint64_t seed);

// Stage 1 aligns the encoders by full-batch Adam on the correlation loss;
// stage 2 fits CCA on the final features, projects, concatenates, and trains
// the SVM.
std::pair<DccaModel, TrainingLog> train_dcca_model(const Dataset& train, const Dataset& val,
                                                   const DccaConfig& config, std::uint64_t seed);

// One-vs-rest hinge loss with an l2/2 penalty, minimized by deterministic
// subgradient descent with lr/sqrt(t) steps; the returned weights average
// the iterates of the second half. objective_trace, when given, records the
// summed objective of the running average at each averaged step.
SvmModel svm_fit(const Matrix& features, const std::vector<int>& labels, int n_classes,
                 double l2, int epochs, double lr, std::uint64_t seed,
                 std::vector<double>* objective_trace = nullptr);

Matrix svm_scores(const SvmModel& svm, const Matrix& features);

// ConcatModel returns softmax probabilities, DccaModel returns SVM decision
// scores; both rank classes for top-k evaluation.
Matrix predict(const ConcatModel& model, std::span<const Sample> samples);
Matrix predict(const DccaModel& model, std::span<const Sample> samples);

}  // namespace covermodal
