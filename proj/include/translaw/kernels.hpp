#pragma once
// Kernels attached to the two-layer architecture: the wide limit estimated
// by Monte Carlo over sphere weights, its width-M counterpart read off a
// network snapshot, and a hand-designed circle kernel whose spectrum decays
// at a chosen power.

#include <cstdint>
#include <memory>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "translaw/network.hpp"

namespace translaw::theory {

struct NtkEstimate {
  double value = 0.0;
  double std_error = 0.0;  // Monte Carlo standard error of the mean
};

// Monte Carlo estimate of
//   E_b[ sigma(b.x) sigma(b.x') ] + (x.x') E_b[ sigma'(b.x) sigma'(b.x') ]
// with b uniform on the unit sphere. A given seed reproduces its draws, so
// the estimate is exactly symmetric in (x, x').
NtkEstimate ntk_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                     std::int64_t mc_samples, std::uint64_t seed,
                     Activation act = Activation::tanh);

// Batch variant sharing one draw stream across every pair: the whole table
// costs O(mc_samples * #points) activations instead of O(mc_samples * #pairs).
// pairs index rows of `points` (#points x d).
Eigen::VectorXd ntk_eval_batch(const Eigen::MatrixXd& points,
                               const std::vector<std::pair<int, int>>& pairs,
                               std::int64_t mc_samples, std::uint64_t seed,
                               Activation act = Activation::tanh);

// The width-M kernel of a snapshot: the same two expectations replaced by
// averages over the snapshot rows b0.
double rf_kernel_eval(const NetworkState& st, const Eigen::VectorXd& x, const Eigen::VectorXd& xp);

// sum_{l=1..modes} scale * l^(-xi) * cos(l (theta - thetap)); needs xi > 1
// so the sum stays summable as modes grows. Angles may be any finite reals.
double designed_kernel_eval(double xi, int modes, double theta, double thetap, double scale = 1.0);

struct NtkMonteCarlo {
  std::int64_t mc_samples = 1000000;
  std::uint64_t seed = 1;
};
struct RandomFeature {
  std::shared_ptr<const NetworkState> snapshot;
};
struct DesignedSpectrum {
  double xi = 2.0;
  int modes = 32;
  double scale = 1.0;
};
using KernelSpec = std::variant<NtkMonteCarlo, RandomFeature, DesignedSpectrum>;

// Evaluates any backend between two circle angles (d = 2).
double kernel_eval_circle(const KernelSpec& k, double theta, double thetap);

}  // namespace translaw::theory
