#pragma once
// Averaged SGD for kernel regression run directly in function space:
//   g_{t+1} = (1 - eta lambda) g_t - eta (g_t(x_t) - y_t) k(., x_t),
// returning the uniform average of the iterates g_0..g_T.
//
// With the designed kernel the update lives in its finite eigenbasis, so the
// whole run is an exact recursion on 2L+1 coefficients. With a width-M
// kernel the iterate is the decayed initial function plus a growing span of
// k(., x_t) anchors, kept alongside a collapsed feature form for evaluation.

#include <cstdint>
#include <memory>
#include <variant>

#include <Eigen/Core>

#include "translaw/function_rep.hpp"
#include "translaw/kernels.hpp"

namespace translaw::theory {

struct KernelExpansion {
  std::shared_ptr<const NetworkState> snapshot;
  Eigen::MatrixXd anchors;  // T x d, the visited sample points
  Eigen::VectorXd weights;  // averaged coefficient of k(., anchor_t)
  FourierRep init;
  double init_scale = 1.0;  // averaged decay factor multiplying init

  double eval(double theta) const;

  // Collapsed features: eval(x) = init_scale*init + u(x).cu + v(x).(CV x),
  // where u, v are the snapshot's activation and derivative features. Built
  // once from anchors/weights; mathematically equal to the expansion sum.
  Eigen::VectorXd cu;
  Eigen::MatrixXd cv;
};

using RefFunction = std::variant<FourierRep, KernelExpansion>;

double ref_eval(const RefFunction& f, double theta);

// init is the function the run starts from (the decay pulls toward zero, not
// toward init). A Monte Carlo kernel backend cannot drive the recursion
// exactly and is rejected. Sample angles are drawn from `seed`; labels come
// from `target`.
RefFunction reference_asgd(const KernelSpec& kernel, const FourierRep& target, int steps,
                           double eta, double lambda, const FourierRep& init,
                           std::uint64_t seed);

}  // namespace translaw::theory
