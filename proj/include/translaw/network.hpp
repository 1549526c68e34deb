#pragma once
// Two-layer network in the width-averaged parameterization
//   g(x) = M^(-1/2) * sum_r a_r * sigma(b_r . x)
// together with single-sample SGD that regularizes toward the parameter
// snapshot taken at construction, and uniform iterate averaging.

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "translaw/rng.hpp"

namespace translaw::theory {

enum class Activation { tanh };

double act_eval(Activation a, double u);
double act_deriv(Activation a, double u);

struct NetworkState {
  Eigen::VectorXd a;   // output weights, size M
  Eigen::MatrixXd b;   // hidden rows, M x d
  Eigen::VectorXd a0;  // snapshot the regularizer pulls toward; never updated
  Eigen::MatrixXd b0;
  Activation act = Activation::tanh;

  int width() const { return static_cast<int>(a.size()); }
  int dim() const { return static_cast<int>(b.cols()); }
};

// Fresh state: rows drawn uniformly on the unit sphere in duplicated pairs
// with output signs +1/-1, so the initial function is exactly zero. M must
// be even and positive, d positive.
NetworkState init_network(int m, int d, std::uint64_t seed);

// g at a unit-norm point (norm checked to 1e-8). The sum runs pair by pair
// so the signed initialization cancels without roundoff.
double network_eval(const NetworkState& st, const Eigen::VectorXd& x);

struct Sample {
  Eigen::VectorXd x;
  double y = 0.0;
};

// One stochastic step on 1/2 (g(x) - y)^2 + lambda/2 |theta - theta0|^2.
// Both layers read the same pre-step parameters.
NetworkState asgd_step(const NetworkState& st, const Sample& sample, double eta, double lambda);

using Sampler = std::function<Sample(Rng&)>;

struct AsgdResult {
  NetworkState final_state;
  // Uniform average over iterates 0..T. Its snapshot fields are reset to the
  // averaged values so it can seed a later run as a fresh anchor.
  NetworkState averaged;
};

AsgdResult run_asgd(const NetworkState& init, const Sampler& sampler, int steps, double eta,
                    double lambda, std::uint64_t seed);

// Data on the unit circle: x = (cos theta, sin theta), y = f(theta).
Eigen::Vector2d circle_point(double theta);
Sampler circle_sampler(std::function<double(double)> f);

}  // namespace translaw::theory
