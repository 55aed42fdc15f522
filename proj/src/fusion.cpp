#include "covermodal/fusion.hpp"

#include "covermodal/evalsuite.hpp"
#include "covermodal/fileio.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace covermodal {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct BatchViews {
  Matrix xv;
  std::vector<std::vector<int>> seqs;
  std::vector<int> labels;
  bool empty() const { return labels.empty(); }
};

BatchViews assemble_views(const Dataset& ds, int visual_dim) {
  BatchViews batch;
  batch.xv = visual_matrix(ds.samples, visual_dim);
  batch.seqs = token_sequences(ds.samples);
  batch.labels.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) batch.labels.push_back(s.label);
  return batch;
}

struct TowerCaches {
  MlpCache visual;
  MlpCache text;
};

void forward_towers(const MlpEncoder& visual, const TextEmbedder& embedder,
                    const MlpEncoder& text, const BatchViews& batch, Modality modality,
                    Matrix* f1, Matrix* f2, TowerCaches* caches) {
  if (modality != Modality::kTextOnly) {
    *f1 = caches ? mlp_forward(visual, batch.xv, caches->visual)
                 : mlp_forward(visual, batch.xv);
  }
  if (modality != Modality::kVisualOnly) {
    const Matrix pooled = embed_mean(embedder, batch.seqs);
    *f2 = caches ? mlp_forward(text, pooled, caches->text) : mlp_forward(text, pooled);
  }
}

Matrix fused_features(Modality modality, const Matrix& f1, const Matrix& f2) {
  switch (modality) {
    case Modality::kBoth:
      return concat_features(f1, f2);
    case Modality::kVisualOnly:
      return f1;
    case Modality::kTextOnly:
      return f2;
  }
  throw std::logic_error("fused_features: bad modality");
}

void push_mlp_params(MlpEncoder& enc, std::vector<ParamRef>& out) {
  for (std::size_t l = 0; l < enc.weights.size(); ++l) {
    out.push_back({enc.weights[l].data(), enc.weights[l].size()});
    out.push_back({enc.biases[l].data(), enc.biases[l].size()});
  }
}

void push_mlp_grads(const MlpGradients& grads, std::vector<GradRef>& out) {
  for (std::size_t l = 0; l < grads.d_weights.size(); ++l) {
    out.push_back({grads.d_weights[l].data(), grads.d_weights[l].size()});
    out.push_back({grads.d_biases[l].data(), grads.d_biases[l].size()});
  }
}

void check_shared_classes(const Dataset& train, const Dataset& val, const char* who) {
  if (train.samples.empty()) throw std::invalid_argument(std::string(who) + ": empty training set");
  if (!val.samples.empty() && val.class_names != train.class_names) {
    throw std::invalid_argument(std::string(who) + ": train and val class alphabets differ");
  }
}

double svm_objective(const Matrix& x, const Matrix& sign_targets, const Matrix& w,
                     const Vector& b, double l2) {
  Matrix scores = x * w.transpose();
  scores.rowwise() += b.transpose();
  const double hinge =
      (1.0 - sign_targets.cwiseProduct(scores).array()).max(0.0).sum() /
      static_cast<double>(x.rows());
  return 0.5 * l2 * w.squaredNorm() + hinge;
}

}  // namespace

Modality modality_from_string(const std::string& name) {
  if (name == "both") return Modality::kBoth;
  if (name == "visual_only") return Modality::kVisualOnly;
  if (name == "text_only") return Modality::kTextOnly;
  throw std::invalid_argument("unknown modality '" + name +
                              "' (expected both, visual_only, or text_only)");
}

std::string to_string(Modality modality) {
  switch (modality) {
    case Modality::kBoth:
      return "both";
    case Modality::kVisualOnly:
      return "visual_only";
    case Modality::kTextOnly:
      return "text_only";
  }
  throw std::logic_error("to_string: bad modality");
}

std::string TrainingLog::to_csv() const {
  std::string out = "epoch,train_loss,val_loss,val_top1\n";
  for (const Row& row : rows) {
    out += std::to_string(row.epoch);
    out.push_back(',');
    out += format_double(row.train_loss);
    out.push_back(',');
    out += format_double(row.val_loss);
    out.push_back(',');
    out += format_double(row.val_top1);
    out.push_back('\n');
  }
  return out;
}

Matrix concat_features(const Matrix& f1, const Matrix& f2) {
  if (f1.rows() != f2.rows()) {
    throw std::invalid_argument("concat_features: row counts differ (" +
                                std::to_string(f1.rows()) + " vs " + std::to_string(f2.rows()) +
                                ")");
  }
  Matrix out(f1.rows(), f1.cols() + f2.cols());
  out.leftCols(f1.cols()) = f1;
  out.rightCols(f2.cols()) = f2;
  return out;
}

Matrix visual_matrix(std::span<const Sample> samples, int visual_dim) {
  Matrix x(static_cast<Eigen::Index>(samples.size()), visual_dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (static_cast<int>(samples[i].visual.size()) != visual_dim) {
      throw std::invalid_argument("visual_matrix: sample '" + samples[i].id + "' has width " +
                                  std::to_string(samples[i].visual.size()) + ", expected " +
                                  std::to_string(visual_dim));
    }
    for (int j = 0; j < visual_dim; ++j) {
      x(static_cast<Eigen::Index>(i), j) = samples[i].visual[j];
    }
  }
  return x;
}

std::vector<std::vector<int>> token_sequences(std::span<const Sample> samples) {
  std::vector<std::vector<int>> seqs;
  seqs.reserve(samples.size());
  for (const Sample& s : samples) seqs.push_back(s.tokens);
  return seqs;
}

std::pair<ConcatModel, TrainingLog> train_concat_model(const Dataset& train, const Dataset& val,
                                                       const ConcatConfig& config,
                                                       std::uint64_t seed) {
  check_shared_classes(train, val, "train_concat_model");
  if (config.epochs < 0) throw std::invalid_argument("train_concat_model: negative epochs");
  if (config.lr <= 0.0) throw std::invalid_argument("train_concat_model: lr must be positive");

  const TowerConfig& tc = config.towers;
  Rng rng(seed);
  ConcatModel model;
  model.modality = config.modality;
  model.visual = make_mlp({train.visual_dim, tc.visual_hidden, tc.visual_feature_dim}, rng);
  model.embedder = make_embedder(tc.vocab_rows, tc.embed_dim, rng);
  model.text = make_mlp({tc.embed_dim, tc.text_feature_dim}, rng);

  int feature_dim = 0;
  if (config.modality != Modality::kTextOnly) feature_dim += tc.visual_feature_dim;
  if (config.modality != Modality::kVisualOnly) feature_dim += tc.text_feature_dim;
  model.head = make_softmax_head(feature_dim, train.n_classes(), rng);

  const BatchViews tb = assemble_views(train, train.visual_dim);
  const BatchViews vb = assemble_views(val, train.visual_dim);

  AdamState opt;
  opt.lr = config.lr;
  TrainingLog log;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    TowerCaches caches;
    Matrix f1, f2;
    forward_towers(model.visual, model.embedder, model.text, tb, config.modality, &f1, &f2,
                   &caches);
    const Matrix feats = fused_features(config.modality, f1, f2);
    const Matrix logits = head_logits(model.head, feats);
    const SoftmaxCeResult ce = softmax_cross_entropy(logits, tb.labels);

    double val_loss = kNan;
    double val_top1 = kNan;
    if (!vb.empty()) {
      Matrix v1, v2;
      forward_towers(model.visual, model.embedder, model.text, vb, config.modality, &v1, &v2,
                     nullptr);
      const Matrix val_logits =
          head_logits(model.head, fused_features(config.modality, v1, v2));
      val_loss = softmax_cross_entropy(val_logits, vb.labels).loss;
      val_top1 = topk_accuracy(val_logits, vb.labels, 1);
    }
    log.rows.push_back({epoch, ce.loss, val_loss, val_top1});

    const Matrix d_head_weight = ce.grad.transpose() * feats;
    const Vector d_head_bias = ce.grad.colwise().sum().transpose();
    const Matrix d_feats = ce.grad * model.head.weight;

    std::vector<ParamRef> params;
    std::vector<GradRef> grads;
    MlpGradients visual_grads, text_grads;
    Matrix d_table;
    if (config.modality != Modality::kTextOnly) {
      const Matrix d_f1 = d_feats.leftCols(tc.visual_feature_dim);
      visual_grads = mlp_backward(model.visual, caches.visual, d_f1);
      push_mlp_params(model.visual, params);
      push_mlp_grads(visual_grads, grads);
    }
    if (config.modality != Modality::kVisualOnly) {
      const Matrix d_f2 = d_feats.rightCols(tc.text_feature_dim);
      text_grads = mlp_backward(model.text, caches.text, d_f2);
      d_table = embed_mean_backward(model.embedder, tb.seqs, text_grads.d_input);
      params.push_back({model.embedder.table.data(), model.embedder.table.size()});
      grads.push_back({d_table.data(), d_table.size()});
      push_mlp_params(model.text, params);
      push_mlp_grads(text_grads, grads);
    }
    params.push_back({model.head.weight.data(), model.head.weight.size()});
    grads.push_back({d_head_weight.data(), d_head_weight.size()});
    params.push_back({model.head.bias.data(), model.head.bias.size()});
    grads.push_back({d_head_bias.data(), d_head_bias.size()});

    adam_step(opt, params, grads);
  }
  return {std::move(model), std::move(log)};
}

std::pair<DccaModel, TrainingLog> train_dcca_model(const Dataset& train, const Dataset& val,
                                                   const DccaConfig& config, std::uint64_t seed) {
  check_shared_classes(train, val, "train_dcca_model");
  if (config.epochs < 0) throw std::invalid_argument("train_dcca_model: negative epochs");
  if (config.lr <= 0.0) throw std::invalid_argument("train_dcca_model: lr must be positive");

  const TowerConfig& tc = config.towers;
  const int k_full = std::min(tc.visual_feature_dim, tc.text_feature_dim);

  Rng rng(seed);
  DccaModel model;
  model.visual = make_mlp({train.visual_dim, tc.visual_hidden, tc.visual_feature_dim}, rng);
  model.embedder = make_embedder(tc.vocab_rows, tc.embed_dim, rng);
  model.text = make_mlp({tc.embed_dim, tc.text_feature_dim}, rng);

  const BatchViews tb = assemble_views(train, train.visual_dim);
  const BatchViews vb = assemble_views(val, train.visual_dim);

  AdamState opt;
  opt.lr = config.lr;
  TrainingLog log;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    TowerCaches caches;
    Matrix f1, f2;
    forward_towers(model.visual, model.embedder, model.text, tb, Modality::kBoth, &f1, &f2,
                   &caches);
    const double train_loss = dcca_loss(f1, f2, k_full, config.cca_r);

    double val_loss = kNan;
    if (vb.labels.size() >= 2) {
      Matrix v1, v2;
      forward_towers(model.visual, model.embedder, model.text, vb, Modality::kBoth, &v1, &v2,
                     nullptr);
      val_loss = dcca_loss(v1, v2, k_full, config.cca_r);
    }
    log.rows.push_back({epoch, train_loss, val_loss, kNan});

    DccaGradient dg;
    try {
      dg = dcca_grad(f1, f2, config.cca_r);
    } catch (const IllConditionedGradient& e) {
      throw IllConditionedGradient("alignment stage, epoch " + std::to_string(epoch) + ": " +
                                   e.what());
    }

    const MlpGradients visual_grads = mlp_backward(model.visual, caches.visual, dg.g1);
    const MlpGradients text_grads = mlp_backward(model.text, caches.text, dg.g2);
    const Matrix d_table = embed_mean_backward(model.embedder, tb.seqs, text_grads.d_input);

    std::vector<ParamRef> params;
    std::vector<GradRef> grads;
    push_mlp_params(model.visual, params);
    push_mlp_grads(visual_grads, grads);
    params.push_back({model.embedder.table.data(), model.embedder.table.size()});
    grads.push_back({d_table.data(), d_table.size()});
    push_mlp_params(model.text, params);
    push_mlp_grads(text_grads, grads);

    adam_step(opt, params, grads);
  }

  Matrix f1, f2;
  forward_towers(model.visual, model.embedder, model.text, tb, Modality::kBoth, &f1, &f2,
                 nullptr);
  const int k = config.cca_k > 0 ? config.cca_k : k_full;
  model.cca = cca_fit(f1, f2, k, config.cca_r);
  const Matrix projected =
      concat_features(cca_project(model.cca, f1, 1), cca_project(model.cca, f2, 2));
  model.svm = svm_fit(projected, tb.labels, train.n_classes(), config.svm_l2, config.svm_epochs,
                      config.svm_lr, rng.next_u64());
  return {std::move(model), std::move(log)};
}

SvmModel svm_fit(const Matrix& features, const std::vector<int>& labels, int n_classes,
                 double l2, int epochs, double lr, std::uint64_t seed,
                 std::vector<double>* objective_trace) {
  const Eigen::Index n = features.rows();
  if (n_classes < 2) throw std::invalid_argument("svm_fit: need at least 2 classes");
  if (n < n_classes) {
    throw std::invalid_argument("svm_fit: need at least as many samples as classes");
  }
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("svm_fit: label count does not match rows");
  }
  if (l2 <= 0.0) throw std::invalid_argument("svm_fit: l2 must be positive");
  if (epochs < 1) throw std::invalid_argument("svm_fit: epochs must be positive");
  if (lr <= 0.0) throw std::invalid_argument("svm_fit: lr must be positive");

  Matrix sign_targets = Matrix::Constant(n, n_classes, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw std::invalid_argument("svm_fit: label out of range");
    }
    sign_targets(i, labels[i]) = 1.0;
  }

  Rng rng(seed);
  Matrix w(n_classes, features.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      w(i, j) = rng.uniform(-0.01, 0.01);
    }
  }
  Vector b = Vector::Zero(n_classes);

  Matrix w_sum = Matrix::Zero(n_classes, features.cols());
  Vector b_sum = Vector::Zero(n_classes);
  long averaged = 0;
  const int average_from = epochs / 2 + 1;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int t = 1; t <= epochs; ++t) {
    Matrix scores = features * w.transpose();
    scores.rowwise() += b.transpose();
    const Matrix active_signs =
        ((sign_targets.cwiseProduct(scores).array() < 1.0).cast<double>() *
         sign_targets.array())
            .matrix();
    const Matrix grad_w = l2 * w - inv_n * (active_signs.transpose() * features);
    const Vector grad_b = -inv_n * active_signs.colwise().sum().transpose();
    const double step = lr / std::sqrt(static_cast<double>(t));
    w -= step * grad_w;
    b -= step * grad_b;
    if (t >= average_from) {
      w_sum += w;
      b_sum += b;
      ++averaged;
      if (objective_trace) {
        const double inv_avg = 1.0 / static_cast<double>(averaged);
        objective_trace->push_back(
            svm_objective(features, sign_targets, inv_avg * w_sum, inv_avg * b_sum, l2));
      }
    }
  }

  SvmModel model;
  model.n_classes = n_classes;
  model.l2 = l2;
  model.weight = w_sum / static_cast<double>(averaged);
  model.bias = b_sum / static_cast<double>(averaged);
  return model;
}

Matrix svm_scores(const SvmModel& svm, const Matrix& features) {
  if (features.cols() != svm.weight.cols()) {
    throw std::invalid_argument("svm_scores: feature width " + std::to_string(features.cols()) +
                                " does not match model width " +
                                std::to_string(svm.weight.cols()));
  }
  Matrix scores = features * svm.weight.transpose();
  scores.rowwise() += svm.bias.transpose();
  return scores;
}

Matrix predict(const ConcatModel& model, std::span<const Sample> samples) {
  BatchViews batch;
  batch.xv = visual_matrix(samples, model.visual.layer_dims.front());
  batch.seqs = token_sequences(samples);
  batch.labels.assign(samples.size(), 0);
  Matrix f1, f2;
  forward_towers(model.visual, model.embedder, model.text, batch, model.modality, &f1, &f2,
                 nullptr);
  return softmax_rows(head_logits(model.head, fused_features(model.modality, f1, f2)));
}

Matrix predict(const DccaModel& model, std::span<const Sample> samples) {
  BatchViews batch;
  batch.xv = visual_matrix(samples, model.visual.layer_dims.front());
  batch.seqs = token_sequences(samples);
  batch.labels.assign(samples.size(), 0);
  Matrix f1, f2;
  forward_towers(model.visual, model.embedder, model.text, batch, Modality::kBoth, &f1, &f2,
                 nullptr);
  const Matrix projected =
      concat_features(cca_project(model.cca, f1, 1), cca_project(model.cca, f2, 2));
  return svm_scores(model.svm, projected);
}

}  // namespace covermodal
