#include "translaw/law.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace translaw {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

Observation::Observation(std::int64_t n_, std::int64_t s_, double error_, std::string group_)
    : n(n_), s(s_), error(error_), group(std::move(group_)) {
  require(n >= 1, "observation: n must be a positive count, got " + std::to_string(n));
  require(s >= 1, "observation: s must be a positive count, got " + std::to_string(s));
  require(finite(error) && error > 0.0,
          "observation: error must be finite and > 0, got " + std::to_string(error));
}

SimpleLawParams::SimpleLawParams(double alpha_, double d_, double c_)
    : alpha(alpha_), D(d_), C(c_) {
  require(finite(alpha) && alpha >= 0.0, "simple law: alpha must be >= 0");
  require(finite(D) && D > 0.0, "simple law: D must be > 0");
  require(finite(C) && C >= 0.0, "simple law: C must be >= 0");
}

FullLawParams::FullLawParams(double alpha_, double beta_, double gamma_, double delta_,
                             double eps_irr_)
    : alpha(alpha_), beta(beta_), gamma(gamma_), delta(delta_), eps_irr(eps_irr_) {
  require(finite(alpha) && alpha >= 0.0, "full law: alpha must be >= 0");
  require(finite(beta) && beta >= 0.0, "full law: beta must be >= 0");
  require(finite(gamma) && gamma >= 0.0, "full law: gamma must be >= 0");
  require(finite(delta) && delta > 0.0, "full law: delta must be > 0");
  require(finite(eps_irr) && eps_irr >= 0.0, "full law: eps_irr must be >= 0");
}

double simple_law_eval(const SimpleLawParams& p, double n) {
  require(finite(n) && n >= 1.0, "simple law: n must be >= 1, got " + std::to_string(n));
  return p.D * std::pow(n, -p.alpha) + p.C;
}

double full_law_eval(const FullLawParams& p, double n, double s) {
  require(finite(n) && n >= 1.0, "full law: n must be >= 1, got " + std::to_string(n));
  require(finite(s) && s >= 1.0, "full law: s must be >= 1, got " + std::to_string(s));
  return p.delta * (std::pow(n, -p.alpha) + p.gamma) * std::pow(s, -p.beta) + p.eps_irr;
}

SimpleLawParams reduce_full_to_simple(const FullLawParams& p, double s) {
  require(finite(s) && s >= 1.0, "reduce: s must be >= 1, got " + std::to_string(s));
  const double shrink = p.delta * std::pow(s, -p.beta);
  return SimpleLawParams(p.alpha, shrink, shrink * p.gamma + p.eps_irr);
}

}  // namespace translaw
