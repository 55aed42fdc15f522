#include "covermodal/encoders.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace covermodal {

namespace {

constexpr double kBiasInit = 0.1;

void check_finite_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw std::invalid_argument("make_mlp: need at least input and output dims");
  for (int d : dims) {
    if (d < 1) throw std::invalid_argument("make_mlp: layer dims must be positive");
  }
}

}  // namespace

MlpEncoder make_mlp(const std::vector<int>& layer_dims, Rng& rng) {
  check_finite_dims(layer_dims);
  MlpEncoder enc;
  enc.layer_dims = layer_dims;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double scale = std::sqrt(6.0 / (fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        w(i, j) = rng.uniform(-scale, scale);
      }
    }
    enc.weights.push_back(std::move(w));
    enc.biases.push_back(Vector::Constant(fan_out, kBiasInit));
  }
  return enc;
}

Matrix mlp_forward(const MlpEncoder& enc, const Matrix& x, MlpCache& cache) {
  if (x.cols() != enc.layer_dims.front()) {
    throw std::invalid_argument("mlp_forward: input width " + std::to_string(x.cols()) +
                                " does not match layer width " +
                                std::to_string(enc.layer_dims.front()));
  }
  cache.input = x;
  cache.pre_activations.clear();
  Matrix a = x;
  for (std::size_t l = 0; l < enc.weights.size(); ++l) {
    Matrix z = a * enc.weights[l];
    z.rowwise() += enc.biases[l].transpose();
    cache.pre_activations.push_back(z);
    a = z.cwiseMax(0.0);
  }
  return a;
}

Matrix mlp_forward(const MlpEncoder& enc, const Matrix& x) {
  MlpCache cache;
  return mlp_forward(enc, x, cache);
}

MlpGradients mlp_backward(const MlpEncoder& enc, const MlpCache& cache, const Matrix& d_output) {
  const std::size_t n_layers = enc.weights.size();
  if (cache.pre_activations.size() != n_layers) {
    throw std::invalid_argument("mlp_backward: cache does not match encoder");
  }
  MlpGradients grads;
  grads.d_weights.resize(n_layers);
  grads.d_biases.resize(n_layers);

  Matrix upstream = d_output;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& z = cache.pre_activations[l];
    const Matrix dz = (z.array() > 0.0).cast<double>() * upstream.array();
    const Matrix& below =
        l == 0 ? cache.input : Matrix(cache.pre_activations[l - 1].cwiseMax(0.0));
    grads.d_weights[l] = below.transpose() * dz;
    grads.d_biases[l] = dz.colwise().sum().transpose();
    upstream = dz * enc.weights[l].transpose();
  }
  grads.d_input = upstream;
  return grads;
}

TextEmbedder make_embedder(int vocab_rows, int embed_dim, Rng& rng) {
  if (vocab_rows < 1 || embed_dim < 1) {
    throw std::invalid_argument("make_embedder: dimensions must be positive");
  }
  TextEmbedder emb;
  emb.vocab_rows = vocab_rows;
  emb.embed_dim = embed_dim;
  emb.table.resize(vocab_rows, embed_dim);
  for (Eigen::Index i = 0; i < emb.table.rows(); ++i) {
    for (Eigen::Index j = 0; j < emb.table.cols(); ++j) {
      emb.table(i, j) = rng.uniform(-0.05, 0.05);
    }
  }
  return emb;
}

Matrix embed_mean(const TextEmbedder& emb, std::span<const std::vector<int>> sequences) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(sequences.size()), emb.embed_dim);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& seq = sequences[i];
    if (seq.empty()) continue;
    for (int tok : seq) {
      if (tok < 0 || tok >= emb.vocab_rows) {
        throw std::invalid_argument("embed_mean: token id " + std::to_string(tok) +
                                    " outside table of " + std::to_string(emb.vocab_rows) +
                                    " rows");
      }
      out.row(static_cast<Eigen::Index>(i)) += emb.table.row(tok);
    }
    out.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(seq.size());
  }
  return out;
}

Matrix embed_mean_backward(const TextEmbedder& emb, std::span<const std::vector<int>> sequences,
                           const Matrix& d_pooled) {
  Matrix d_table = Matrix::Zero(emb.vocab_rows, emb.embed_dim);
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& seq = sequences[i];
    if (seq.empty()) continue;
    const double inv = 1.0 / static_cast<double>(seq.size());
    for (int tok : seq) {
      d_table.row(tok) += inv * d_pooled.row(static_cast<Eigen::Index>(i));
    }
  }
  return d_table;
}

SoftmaxHead make_softmax_head(int in_dim, int n_classes, Rng& rng) {
  if (in_dim < 1 || n_classes < 2) {
    throw std::invalid_argument("make_softmax_head: need in_dim >= 1 and n_classes >= 2");
  }
  SoftmaxHead head;
  head.in_dim = in_dim;
  head.n_classes = n_classes;
  head.weight.resize(n_classes, in_dim);
  for (Eigen::Index i = 0; i < head.weight.rows(); ++i) {
    for (Eigen::Index j = 0; j < head.weight.cols(); ++j) {
      head.weight(i, j) = rng.uniform(-0.05, 0.05);
    }
  }
  head.bias = Vector::Zero(n_classes);
  return head;
}

Matrix head_logits(const SoftmaxHead& head, const Matrix& features) {
  if (features.cols() != head.in_dim) {
    throw std::invalid_argument("head_logits: feature width " + std::to_string(features.cols()) +
                                " does not match head input " + std::to_string(head.in_dim));
  }
  Matrix logits = features * head.weight.transpose();
  logits.rowwise() += head.bias.transpose();
  return logits;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - shift).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

SoftmaxCeResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  const Eigen::Index n = logits.rows();
  const Eigen::Index c = logits.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("softmax_cross_entropy: label count does not match rows");
  }
  Matrix grad(n, c);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= c) {
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(y) +
                                  " outside [0, " + std::to_string(c) + ")");
    }
    const double shift = logits.row(i).maxCoeff();
    const Eigen::ArrayXd shifted = logits.row(i).transpose().array() - shift;
    const Eigen::ArrayXd e = shifted.exp();
    const double z = e.sum();
    grad.row(i) = (e / z).transpose();
    loss -= shifted(y) - std::log(z);
  }
  loss /= static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) grad(i, labels[i]) -= 1.0;
  grad /= static_cast<double>(n);
  return SoftmaxCeResult{loss, std::move(grad)};
}

void adam_step(AdamState& state, const std::vector<ParamRef>& params,
               const std::vector<GradRef>& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: parameter and gradient counts differ");
  }
  if (state.m.empty()) {
    for (const ParamRef& p : params) {
      state.m.push_back(Vector::Zero(p.size));
      state.v.push_back(Vector::Zero(p.size));
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: state was initialized for a different parameter list");
  }

  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].size != grads[p].size || params[p].size != state.m[p].size()) {
      throw std::invalid_argument("adam_step: tensor " + std::to_string(p) + " changed size");
    }
    Eigen::Map<Vector> w(params[p].data, params[p].size);
    Eigen::Map<const Vector> g(grads[p].data, grads[p].size);
    state.m[p] = state.beta1 * state.m[p] + (1.0 - state.beta1) * g;
    state.v[p] = state.beta2 * state.v[p] + (1.0 - state.beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXd m_hat = state.m[p].array() / bc1;
    const Eigen::ArrayXd v_hat = state.v[p].array() / bc2;
    w.array() -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
  }
}

SoftmaxHead train_softmax_classifier(const Matrix& features, const std::vector<int>& labels,
                                     int n_classes, int epochs, double lr, std::uint64_t seed) {
  if (features.rows() < 1) throw std::invalid_argument("train_softmax_classifier: empty training set");
  if (epochs < 1) throw std::invalid_argument("train_softmax_classifier: epochs must be positive");

  Rng rng(seed);
  SoftmaxHead head = make_softmax_head(static_cast<int>(features.cols()), n_classes, rng);
  AdamState opt;
  opt.lr = lr;

  Matrix d_weight(head.weight.rows(), head.weight.cols());
  Vector d_bias(head.bias.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const Matrix logits = head_logits(head, features);
    const SoftmaxCeResult ce = softmax_cross_entropy(logits, labels);
    d_weight = ce.grad.transpose() * features;
    d_bias = ce.grad.colwise().sum().transpose();
    adam_step(opt,
              {{head.weight.data(), head.weight.size()}, {head.bias.data(), head.bias.size()}},
              {{d_weight.data(), d_weight.size()}, {d_bias.data(), d_bias.size()}});
  }
  return head;
}

}  // namespace covermodal
