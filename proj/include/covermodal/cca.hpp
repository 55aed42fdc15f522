#pragma once

#include "covermodal/numkernel.hpp"

#include <stdexcept>

namespace covermodal {

// Raised when the correlation spectrum has (near-)repeated singular values,
// where the analytic gradient is not well defined. Callers may retry with
// jittered inputs.
class IllConditionedGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed-form canonical correlation analysis of two views. The whitened
// cross-covariance T = S11^{-1/2} S12 S22^{-1/2} carries the spectrum: its
// singular values are the canonical correlations and its singular vectors,
// mapped back through the whitening, give the per-view projections.
struct CcaSolution {
  int k = 0;
  Vector correlations;  // k values, non-increasing, in [0, 1]
  Matrix proj1;         // d1 x k
  Matrix proj2;         // d2 x k
  double r = 0.0;       // ridge used on the self-covariances
  Vector means1;        // centering vector of view 1
  Vector means2;        // centering vector of view 2
};

CcaSolution cca_fit(const Matrix& h1, const Matrix& h2, int k, double r);

// (H - means) * proj for the chosen view (1 or 2).
Matrix cca_project(const CcaSolution& sol, const Matrix& h, int view);

// Negative sum of the top-k canonical correlations of the batch; lies in
// [-k, 0]. Requires r > 0.
double dcca_loss(const Matrix& h1, const Matrix& h2, int k, double r);

struct DccaGradient {
  Matrix g1;  // n x d1, gradient of dcca_loss with respect to h1
  Matrix g2;  // n x d2
};

// Analytic gradient of the full-spectrum loss (k = min(d1, d2)). Throws
// IllConditionedGradient when two singular values of T are within 1e-8.
DccaGradient dcca_grad(const Matrix& h1, const Matrix& h2, double r);

}  // namespace covermodal
