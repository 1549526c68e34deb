#pragma once
// Least-squares fitting of learning-curve laws in log space.
//
// The objective for observations {(n_i, s_i, L_i)} and a candidate law is
//   sum_i (log L_i - log pred_i)^2,
// minimized by a damped Gauss-Newton loop over internally transformed
// parameters: rates and scales move in log coordinates, nonnegative offsets
// through a softplus. The landscape has a curved alpha-D ridge, so every fit
// is multistarted from log-uniform draws and the best restart wins.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "translaw/law.hpp"

namespace translaw {

struct FitOptions {
  std::optional<double> fixed_D;      // simple law: hold D at this value
  std::optional<double> fixed_alpha;  // simple law: hold alpha at this value
  bool fix_eps_zero = true;           // full law: pin eps_irr at 0
  int multistart = 8;                 // >= 1; first start is a heuristic, the rest are draws
  int max_iter = 500;
  double tol = 1e-10;       // relative objective decrease at an accepted step
  double step_tol = 1e-12;  // infinity norm of the internal step
  std::uint64_t seed = 1;   // drives the multistart draws only
};

struct FitReport {
  std::variant<SimpleLawParams, FullLawParams> params{SimpleLawParams(0.0, 1.0, 0.0)};

  std::vector<std::string> names;  // parameter names in law order
  std::vector<double> values;      // same order
  std::vector<bool> held;          // true entries were fixed by the caller
  std::vector<double> stderrs;     // 0 for held entries, +inf when not identified
  std::vector<double> residuals;   // log L_i - log pred_i, input order
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;  // iterations used by the winning restart
  std::vector<std::string> warnings;

  const SimpleLawParams& simple() const;
  const FullLawParams& full() const;
};

// Sum of squared log residuals. Throws if any prediction is nonpositive or
// non-finite, naming the offending observation. Compensated summation keeps
// the value independent of observation order to well below 1e-12 relative.
double objective_value(const std::vector<Observation>& obs,
                       const std::function<double(const Observation&)>& pred);

// Simple-law fit. Needs observations at >= 3 distinct n (one fewer per held
// parameter) that all share one s.
FitReport fit_simple(const std::vector<Observation>& obs, const FitOptions& opt = {});

// Full-law fit over a (n, s) grid; needs >= 2 distinct n and >= 2 distinct s.
FitReport fit_full(const std::vector<Observation>& obs, const FitOptions& opt = {});

// Gauss-Newton standard errors at the fitted point:
//   sqrt(sigma2 * diag((J^T J)^(-1))),
// J the Jacobian of log predictions in the original free parameters and
// sigma2 the residual variance objective/(N - P). Held entries get 0; a
// singular J^T J marks every free entry +inf.
std::vector<double> standard_errors(const FitReport& report, const std::vector<Observation>& obs);

struct LoglogFit {
  double slope = 0.0;
  double intercept = 0.0;  // of log y on log x
  double r2 = 0.0;
};

// Ordinary least squares of log y on log x; x and y must be positive and
// x must not be constant. A constant y gives slope 0 with r2 = 1.
LoglogFit fit_loglog_linear(const std::vector<double>& x, const std::vector<double>& y);

struct LinearizedPoint {
  double n = 0.0;
  double value = 0.0;  // L_i - C
};

struct Linearization {
  std::vector<LinearizedPoint> points;  // only observations with L_i > C
  std::size_t omitted = 0;
};

// Subtracting C turns the simple law into a pure power law, so these points
// fall on a line in log-log axes when the law holds.
Linearization linearize(const std::vector<Observation>& obs, const SimpleLawParams& p);

struct LandscapeOptions {
  double alpha_lo = 0.0, alpha_hi = 0.0;
  int alpha_steps = 0;
  double d_lo = 0.0, d_hi = 0.0;
  int d_steps = 0;
};

struct LandscapeCell {
  double alpha = 0.0, D = 0.0, C = 0.0, loss = 0.0;
};

struct Landscape {
  Eigen::VectorXd alpha_axis, d_axis;  // linear spacing, endpoints included
  Eigen::MatrixXd loss;                // alpha_steps x d_steps
  Eigen::MatrixXd c_opt;               // the profiled C per cell
  LandscapeCell argmin;
};

// Loss surface over an (alpha, D) grid with C minimized out at every node.
// The optimal C always lies in [0, max L_i]: once the prediction clears every
// observation, pushing C further only grows each residual.
Landscape landscape(const std::vector<Observation>& obs, const LandscapeOptions& opt);

struct StabilizeOptions {
  FitOptions fit;  // inner single-curve fits
  int max_rounds = 20;
  double round_tol = 1e-3;  // max change of (alpha_hat, d_hat) per round
  double init_alpha = 0.5;
  double init_d = 0.5;
};

struct StabilizeRound {
  double alpha_hat = 0.0, d_hat = 0.0;  // shared values after the round
  std::vector<double> alphas, ds;       // per-group estimates within the round
};

struct StabilizeResult {
  double alpha_hat = 0.0, d_hat = 0.0;
  std::vector<StabilizeRound> rounds;
  bool converged = false;
  std::vector<std::string> warnings;
};

// Median-alternation estimate of a rate/scale pair shared across curve
// groups. Each round first fits every group with D held at the shared value
// and replaces alpha_hat by the median of the per-group alpha estimates,
// then fits every group with alpha held at that fresh alpha_hat and replaces
// d_hat by the median of the D estimates.
StabilizeResult stabilize_d(const std::vector<std::vector<Observation>>& groups,
                            const StabilizeOptions& opt = {});

// Median that returns the lower-middle order statistic for even counts.
double median_lower(std::vector<double> v);

}  // namespace translaw
