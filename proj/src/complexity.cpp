#include "translaw/complexity.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace translaw {

EntropyReport gaussian_negative_entropy(const Eigen::MatrixXd& data,
                                        std::optional<double> epsilon) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) throw std::invalid_argument("negative entropy: need at least two rows");
  if (d < 1) throw std::invalid_argument("negative entropy: need at least one column");
  if (!data.allFinite()) throw std::invalid_argument("negative entropy: data must be finite");
  if (epsilon && (!std::isfinite(*epsilon) || *epsilon < 0.0))
    throw std::invalid_argument("negative entropy: epsilon must be finite and >= 0");

  const Eigen::RowVectorXd mean = data.colwise().mean();
  const Eigen::MatrixXd centered = data.rowwise() - mean;
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(n - 1);

  EntropyReport rep;
  rep.dims = static_cast<int>(d);
  rep.count = static_cast<int>(n);
  rep.epsilon = epsilon ? *epsilon : 1e-6 * cov.trace() / static_cast<double>(d);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("negative entropy: eigendecomposition failed");

  const double inf = std::numeric_limits<double>::infinity();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double v = es.eigenvalues()[i] + rep.epsilon;
    if (v <= 0.0) {
      logdet = -inf;
      break;
    }
    logdet += std::log(v);
  }

  rep.logdet = logdet;
  rep.degenerate = !std::isfinite(logdet);
  const double two_pi_e = 2.0 * M_PI * std::exp(1.0);
  rep.neg_entropy = rep.degenerate ? inf
                                   : -0.5 * static_cast<double>(d) * std::log(two_pi_e) -
                                         0.5 * logdet;
  return rep;
}

}  // namespace translaw
