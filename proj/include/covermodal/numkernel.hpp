#pragma once

#include <Eigen/Core>

#include <functional>

namespace covermodal {

// Row-major 64-bit matrices everywhere; 32-bit floats appear only at file
// boundaries.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct CovariancePair {
  Matrix s11;  // d1 x d1, ridge added
  Matrix s22;  // d2 x d2, ridge added
  Matrix s12;  // d1 x d2, cross term, no ridge
};

// Column-centered covariance blocks with 1/(n-1) scaling; r*I is added to the
// two self-covariance blocks only. Requires n >= 2.
CovariancePair covariance_pair(const Matrix& h1, const Matrix& h2, double r);

// Symmetric inverse square root via eigendecomposition with eigenvalues
// clamped at eps from below. Input must be symmetric within 1e-10 entrywise.
Matrix inv_sqrt_sym(const Matrix& m, double eps = 1e-12);

struct SvdTriplets {
  Matrix u;      // p x k, column-orthonormal
  Vector sigma;  // k, non-negative, non-increasing
  Matrix v;      // q x k, column-orthonormal
};

// Thin SVD, k = min(p, q).
SvdTriplets singular_triplets(const Matrix& m);

// Central-difference gradient of a scalar function, entry by entry.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                        double h);

}  // namespace covermodal
