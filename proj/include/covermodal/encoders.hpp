#pragma once

#include "covermodal/numkernel.hpp"
#include "covermodal/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace covermodal {

// Fully-connected stack with ReLU after every layer, output layer included.
struct MlpEncoder {
  std::vector<int> layer_dims;  // input, hidden..., output
  std::vector<Matrix> weights;  // layer l: dims[l] x dims[l+1]
  std::vector<Vector> biases;   // layer l: dims[l+1]
};

// Glorot-uniform weights; biases at a small positive constant so ReLU units
// start alive.
MlpEncoder make_mlp(const std::vector<int>& layer_dims, Rng& rng);

struct MlpCache {
  Matrix input;
  std::vector<Matrix> pre_activations;  // one per layer
};

Matrix mlp_forward(const MlpEncoder& enc, const Matrix& x);
Matrix mlp_forward(const MlpEncoder& enc, const Matrix& x, MlpCache& cache);

struct MlpGradients {
  std::vector<Matrix> d_weights;
  std::vector<Vector> d_biases;
  Matrix d_input;
};

MlpGradients mlp_backward(const MlpEncoder& enc, const MlpCache& cache, const Matrix& d_output);

// Token embedding table; sequences pool by the mean of their rows and empty
// sequences pool to the zero vector. Row 0 is the unknown token.
struct TextEmbedder {
  int vocab_rows = 0;  // V + 1
  int embed_dim = 0;
  Matrix table;  // vocab_rows x embed_dim
};

TextEmbedder make_embedder(int vocab_rows, int embed_dim, Rng& rng);

Matrix embed_mean(const TextEmbedder& emb, std::span<const std::vector<int>> sequences);

// Gradient of the pooled output with respect to the table.
Matrix embed_mean_backward(const TextEmbedder& emb, std::span<const std::vector<int>> sequences,
                           const Matrix& d_pooled);

struct SoftmaxHead {
  int in_dim = 0;
  int n_classes = 0;
  Matrix weight;  // n_classes x in_dim
  Vector bias;    // n_classes
};

SoftmaxHead make_softmax_head(int in_dim, int n_classes, Rng& rng);

Matrix head_logits(const SoftmaxHead& head, const Matrix& features);

Matrix softmax_rows(const Matrix& logits);

struct SoftmaxCeResult {
  double loss;
  Matrix grad;  // gradient with respect to the logits, averaged over rows
};

// Mean negative log-likelihood of integer labels under row-wise softmax,
// computed with max-shift stabilization.
SoftmaxCeResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long t = 0;
  std::vector<Vector> m;  // first moments, flat, one entry per tensor
  std::vector<Vector> v;  // second moments
};

struct ParamRef {
  double* data;
  Eigen::Index size;
};
struct GradRef {
  const double* data;
  Eigen::Index size;
};

// One bias-corrected Adam update over a fixed list of parameter tensors.
void adam_step(AdamState& state, const std::vector<ParamRef>& params,
               const std::vector<GradRef>& grads);

// Full-batch Adam on softmax cross-entropy. Weights start seeded uniform in
// [-0.05, 0.05], biases at zero.
SoftmaxHead train_softmax_classifier(const Matrix& features, const std::vector<int>& labels,
                                     int n_classes, int epochs, double lr, std::uint64_t seed);

}  // namespace covermodal
