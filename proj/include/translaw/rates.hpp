#pragma once
// Closed-form rate predictions for the two-stage averaged-SGD pipeline.
// Conventions: xi > 1 is the spectrum decay, r0 and r1 in [1/2, 1] are the
// source exponents of the pre-training and composite targets, zeta in [0, 1)
// sets the fine-tuning step size eta1 ~ T1^(-zeta), and R0 is the realized
// pre-training error the fine-tuning stage starts from.

#include <array>
#include <string>

namespace translaw::theory {

// Mean-square pre-training error decays as T0^(-pretrain_rate) under the
// matching regularization schedule optimal_lambda0.
double pretrain_rate(double r0, double xi);                // 2 r0 xi / (2 r0 xi + 1)
double optimal_lambda0(double t0, double r0, double xi);   // T0^(-xi / (2 r0 xi + 1))

struct BoundTerm {
  std::string label;
  double value = 0.0;
};

struct BoundTerms {
  std::array<BoundTerm, 9> terms;
  int dominant = 0;    // index of the largest term
  double total = 0.0;  // plain sum, constants dropped
};

// The nine magnitudes whose maximum drives the fine-tuning error bound:
//   a0: lambda1^(2 r0)                    bias against the pre-training target
//   a1: lambda1^(2 r1)                    bias against the composite target
//   b:  R0 / (T1 lambda1)                 carried-over error, variance part
//   c:  lambda1^(2 r1 - 1) / T1           shift bias through the variance
//   d:  1 / T1                            label-independent variance floor
//   e:  R0 / (T1 eta1)^2 / lambda1^2      carried-over error, averaging tail
//   f:  lambda1^(2 r1 - 2) / (T1 eta1)^2  shift bias, averaging tail
//   g:  1 / ((T1 eta1)^2 lambda1)         averaging tail floor
//   h:  lambda1^(-1/xi) / T1              effective-dimension variance
BoundTerms bound_terms(double t1, double lambda1, double eta1, double xi, double r0, double r1,
                       double R0);

struct RatePrediction {
  std::string case_label;  // "I-A", "I-B", "II-A", "II-B"
  bool condition_ok = true;
  std::string violated;  // the failed inequality when condition_ok is false

  // lambda1 = T1^lambda1_t1_exp * R0^lambda1_r0_exp
  double lambda1_t1_exp = 0.0;
  double lambda1_r0_exp = 0.0;
  // error ~ T1^(-t1_exp) * R0^(r0_exp)
  double t1_exp = 0.0;
  double r0_exp = 0.0;
  // exponent in T0 once R0 is driven at its own optimal rate
  double t0_exp = 0.0;

  bool on_boundary = false;  // zeta sits exactly on a case threshold
};

// Selects the rate-table row for (r0, r1, zeta) and returns its tuned
// regularization rule and error exponents. When no row's side conditions
// hold, the nearest row is still returned with condition_ok = false and the
// violated inequality spelled out.
RatePrediction rate_predict(double r0, double r1, double xi, double zeta);

// Sufficient (not necessary) step-size condition for the averaged iterate
// bounds: 4 (6 + lambda1) eta1 <= 1.
bool averaging_step_ok(double eta1, double lambda1);

}  // namespace translaw::theory
