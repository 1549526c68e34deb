#pragma once
// Two-stage averaged-SGD experiments on the circle: pre-train on phi0 for T0
// steps, fine-tune from the averaged result on phi = phi0 + phi1 for T1
// steps, and record mean-square errors against phi. Runs either in function
// space with the designed kernel (exact coefficient recursion) or on an
// actual width-M network.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "translaw/law.hpp"
#include "translaw/network.hpp"

namespace translaw::theory {

struct TargetSpec {
  double r0 = 1.0;   // source exponent of the pre-training target
  double r1 = 0.5;   // source exponent of the fine-tuning shift
  enum class Profile { inverse, flat } profile = Profile::inverse;  // c_l = 1/l or 1
  double phi1_scale = 0.5;  // shrink applied to the shift before the joint sup rescale
};

struct TransferConfig {
  std::vector<int> t0_grid = {128, 256, 512, 1024, 2048, 4096};
  std::vector<int> t1_grid = {64, 128, 256, 512, 1024};
  double eta0 = 0.25;
  double eta1_base = 0.25;       // eta1 = eta1_base * T1^(-zeta)
  double zeta = 1.0 / 3.0;
  std::optional<double> lambda0;  // unset: T0^(-xi/(2 r0 xi + 1))
  std::optional<double> lambda1;  // unset: rate-table rule fed the measured R0
  double xi = 2.0;
  int modes = 32;
  double scale = 1.0;
  TargetSpec targets;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8};
  int eval_q = 256;  // quadrature resolution for network-mode errors
  int m = 1024;      // width (network mode)
  enum class Mode { rkhs, network } mode = Mode::rkhs;
};

struct TransferRow {
  int t0 = 0, t1 = 0;
  std::uint64_t seed = 0;
  double error = 0.0;    // mean-square distance of the averaged output to phi
  double r0_error = 0.0; // pre-training mean-square error the stage started from
  double lambda0 = 0.0, lambda1 = 0.0, eta1 = 0.0;
};

struct TransferResult {
  std::vector<TransferRow> rows;  // ordered by (seed, t0, t1)
  std::vector<std::string> warnings;
};

TransferResult transfer_experiment(const TransferConfig& cfg);

// Learning-curve view of the rows: n = T0, s = T1, one group per seed.
// T0 = 0 rows (no pre-training) are mapped to n = 1.
std::vector<Observation> to_observations(const TransferResult& result);

struct PropGapConfig {
  int steps = 200;
  double eta = 0.1;
  double lambda = 0.01;
  double xi = 2.0;
  int modes = 32;
  double scale = 1.0;
  TargetSpec target;  // r0/profile generate the data, r1 unused here
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8};
  int grid_q = 64;    // angles the two trajectories are compared on
};

struct PropGapResult {
  std::vector<int> widths;
  std::vector<double> median_gap;  // per width, median over seeds
  Eigen::MatrixXd per_seed;        // widths x seeds
};

// Couples a width-M network ASGD run to the exact width-M kernel recursion
// on an identical sample stream (both start from zero) and records the
// largest pointwise deviation over all iterates and grid angles.
PropGapResult width_coupling_gap(const PropGapConfig& cfg, const std::vector<int>& widths);

}  // namespace translaw::theory
