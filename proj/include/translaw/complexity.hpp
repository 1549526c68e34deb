#pragma once
// Gaussian surrogate for the representation complexity of a set of
// activation vectors: fit a Gaussian to the rows and report its negative
// differential entropy
//   -(d/2) ln(2 pi e) - (1/2) ln det(Sigma + eps I),
// which grows as the point cloud concentrates.

#include <optional>

#include <Eigen/Core>

namespace translaw {

struct EntropyReport {
  double neg_entropy = 0.0;
  double logdet = 0.0;   // ln det of the ridged covariance
  double epsilon = 0.0;  // ridge actually applied
  int dims = 0;
  int count = 0;              // rows the covariance was estimated from
  bool degenerate = false;    // ridged covariance not positive definite
};

// Rows of `data` are samples, columns are coordinates. The covariance uses
// the N-1 normalizer, so at least two rows are required. When `epsilon` is
// unset a relative ridge 1e-6 * trace(Sigma)/d is applied; pass 0 to forbid
// ridging, in which case a rank-deficient cloud yields logdet = -infinity,
// neg_entropy = +infinity and degenerate = true instead of a throw.
EntropyReport gaussian_negative_entropy(const Eigen::MatrixXd& data,
                                        std::optional<double> epsilon = std::nullopt);

}  // namespace translaw
