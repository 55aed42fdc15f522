#include "covermodal/cca.hpp"

#include "covermodal/fileio.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace covermodal {

namespace {

struct WhitenedCross {
  Vector mean1, mean2;
  Matrix centered1, centered2;
  Matrix w1, w2;  // inverse square roots of the ridged self-covariances
  Matrix t;       // w1 * s12 * w2
};

WhitenedCross assemble_t(const Matrix& h1, const Matrix& h2, double r) {
  const CovariancePair cov = covariance_pair(h1, h2, r);
  WhitenedCross out;
  out.mean1 = h1.colwise().mean().transpose();
  out.mean2 = h2.colwise().mean().transpose();
  out.centered1 = h1.rowwise() - out.mean1.transpose();
  out.centered2 = h2.rowwise() - out.mean2.transpose();
  out.w1 = inv_sqrt_sym(cov.s11);
  out.w2 = inv_sqrt_sym(cov.s22);
  out.t = out.w1 * cov.s12 * out.w2;
  return out;
}

void check_k(int k, const Matrix& h1, const Matrix& h2, const char* who) {
  const int kmax = static_cast<int>(std::min(h1.cols(), h2.cols()));
  if (k < 1 || k > kmax) {
    throw std::invalid_argument(std::string(who) + ": k=" + std::to_string(k) +
                                " outside [1, " + std::to_string(kmax) + "]");
  }
}

}  // namespace

CcaSolution cca_fit(const Matrix& h1, const Matrix& h2, int k, double r) {
  check_k(k, h1, h2, "cca_fit");
  const WhitenedCross wc = assemble_t(h1, h2, r);
  const SvdTriplets svd = singular_triplets(wc.t);

  CcaSolution sol;
  sol.k = k;
  sol.r = r;
  sol.correlations = svd.sigma.head(k).cwiseMin(1.0).cwiseMax(0.0);
  sol.proj1 = wc.w1 * svd.u.leftCols(k);
  sol.proj2 = wc.w2 * svd.v.leftCols(k);
  sol.means1 = wc.mean1;
  sol.means2 = wc.mean2;
  return sol;
}

Matrix cca_project(const CcaSolution& sol, const Matrix& h, int view) {
  if (view != 1 && view != 2) throw std::invalid_argument("cca_project: view must be 1 or 2");
  const Vector& means = view == 1 ? sol.means1 : sol.means2;
  const Matrix& proj = view == 1 ? sol.proj1 : sol.proj2;
  if (h.cols() != means.size()) {
    throw std::invalid_argument("cca_project: input has " + std::to_string(h.cols()) +
                                " columns, view expects " + std::to_string(means.size()));
  }
  return (h.rowwise() - means.transpose()) * proj;
}

double dcca_loss(const Matrix& h1, const Matrix& h2, int k, double r) {
  check_k(k, h1, h2, "dcca_loss");
  if (r <= 0.0) throw std::invalid_argument("dcca_loss: r must be positive");
  const WhitenedCross wc = assemble_t(h1, h2, r);
  const SvdTriplets svd = singular_triplets(wc.t);
  return -svd.sigma.head(k).cwiseMin(1.0).cwiseMax(0.0).sum();
}

DccaGradient dcca_grad(const Matrix& h1, const Matrix& h2, double r) {
  if (r <= 0.0) throw std::invalid_argument("dcca_grad: r must be positive");
  const Eigen::Index n = h1.rows();
  const WhitenedCross wc = assemble_t(h1, h2, r);
  const SvdTriplets svd = singular_triplets(wc.t);

  for (Eigen::Index i = 0; i + 1 < svd.sigma.size(); ++i) {
    const double gap = svd.sigma(i) - svd.sigma(i + 1);
    if (gap < 1e-8) {
      throw IllConditionedGradient("dcca_grad: singular values " + std::to_string(i) +
                                   " and " + std::to_string(i + 1) + " are within 1e-8 (" +
                                   format_double(svd.sigma(i)) + ", " +
                                   format_double(svd.sigma(i + 1)) + ")");
    }
  }

  const Matrix uvt = svd.u * svd.v.transpose();
  const Matrix delta12 = wc.w1 * uvt * wc.w2;
  const Matrix delta11 =
      -0.5 * wc.w1 * svd.u * svd.sigma.asDiagonal() * svd.u.transpose() * wc.w1;
  const Matrix delta22 =
      -0.5 * wc.w2 * svd.v * svd.sigma.asDiagonal() * svd.v.transpose() * wc.w2;

  const double scale = 1.0 / static_cast<double>(n - 1);
  DccaGradient grad;
  // The expressions below are the gradient of the total correlation; the loss
  // is its negation.
  grad.g1 = -scale * (2.0 * wc.centered1 * delta11 + wc.centered2 * delta12.transpose());
  grad.g2 = -scale * (2.0 * wc.centered2 * delta22 + wc.centered1 * delta12);
  return grad;
}

}  // namespace covermodal
