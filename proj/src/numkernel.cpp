#include "covermodal/numkernel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <stdexcept>
#include <string>

namespace covermodal {

CovariancePair covariance_pair(const Matrix& h1, const Matrix& h2, double r) {
  const Eigen::Index n = h1.rows();
  if (n < 2) {
    throw std::invalid_argument("covariance_pair: need at least 2 rows, got " +
                                std::to_string(n));
  }
  if (h2.rows() != n) throw std::invalid_argument("covariance_pair: row counts differ");
  if (r < 0.0) throw std::invalid_argument("covariance_pair: negative ridge");

  const Matrix c1 = h1.rowwise() - h1.colwise().mean();
  const Matrix c2 = h2.rowwise() - h2.colwise().mean();
  const double scale = 1.0 / static_cast<double>(n - 1);

  CovariancePair out;
  out.s11 = scale * (c1.transpose() * c1);
  out.s22 = scale * (c2.transpose() * c2);
  out.s12 = scale * (c1.transpose() * c2);
  out.s11 = (0.5 * (out.s11 + Matrix(out.s11.transpose()))).eval();
  out.s22 = (0.5 * (out.s22 + Matrix(out.s22.transpose()))).eval();
  out.s11.diagonal().array() += r;
  out.s22.diagonal().array() += r;
  return out;
}

Matrix inv_sqrt_sym(const Matrix& m, double eps) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw std::invalid_argument("inv_sqrt_sym: matrix must be square and non-empty");
  }
  if (eps <= 0.0) throw std::invalid_argument("inv_sqrt_sym: eps must be positive");
  const double asym = (m - Matrix(m.transpose())).cwiseAbs().maxCoeff();
  if (asym > 1e-10) {
    throw std::invalid_argument("inv_sqrt_sym: input asymmetric by " + std::to_string(asym));
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("inv_sqrt_sym: eigendecomposition failed");
  }
  const Vector lam = es.eigenvalues().cwiseMax(eps);
  const Matrix& q = es.eigenvectors();
  Matrix w = q * lam.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  return (0.5 * (w + Matrix(w.transpose()))).eval();
}

SvdTriplets singular_triplets(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SvdTriplets{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = f(probe);
      probe(i, j) = orig - h;
      const double down = f(probe);
      probe(i, j) = orig;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace covermodal
