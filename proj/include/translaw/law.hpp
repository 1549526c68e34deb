#pragma once
// Learning-curve laws.
//
// Simple law:  L(n)    = D * n^(-alpha) + C
// Full law:    L(n, s) = delta * (n^(-alpha) + gamma) * s^(-beta) + eps_irr
//
// n is the pre-training sample count, s the fine-tuning sample count.
// Restricting the full law to one s collapses it to a simple law; see
// reduce_full_to_simple.

#include <cstdint>
#include <string>

namespace translaw {

// One learning-curve measurement. error must be strictly positive so that
// log-space objectives are defined. group is an optional curve label used
// when several curves are pooled.
struct Observation {
  std::int64_t n = 1;
  std::int64_t s = 1;
  double error = 1.0;
  std::string group;

  Observation() = default;
  Observation(std::int64_t n_, std::int64_t s_, double error_, std::string group_ = {});
};

// Rates admit 0 (a flat curve) so that degenerate surfaces remain
// representable; the fitters keep them strictly positive.
struct SimpleLawParams {
  double alpha;  // n-decay rate, >= 0
  double D;      // scale of the n term, > 0
  double C;      // offset the curve levels off at, >= 0

  SimpleLawParams(double alpha_, double d_, double c_);
};

struct FullLawParams {
  double alpha;    // n-decay rate, >= 0
  double beta;     // s-decay rate, >= 0
  double gamma;    // transfer gap inside the bracket, >= 0
  double delta;    // overall scale, > 0
  double eps_irr;  // irreducible floor, >= 0

  FullLawParams(double alpha_, double beta_, double gamma_, double delta_, double eps_irr_);
};

// Both evaluators require n, s >= 1 (fractional values are fine; they arise
// when sampling fitted curves on a dense grid).
double simple_law_eval(const SimpleLawParams& p, double n);
double full_law_eval(const FullLawParams& p, double n, double s);

// The simple law induced by the full law at a fixed s:
//   D = delta * s^(-beta),  C = delta * gamma * s^(-beta) + eps_irr.
SimpleLawParams reduce_full_to_simple(const FullLawParams& p, double s);

}  // namespace translaw
