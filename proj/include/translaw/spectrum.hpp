#pragma once
// Integral-operator spectrum of a circle kernel under the uniform measure.
//
// Stationary backends (designed, Monte Carlo wide limit) go through the
// profile's Fourier coefficients on a q-point grid: mode l of the operator
// has eigenvalue (cos coefficient)/2, carried twice (cos and sin). The
// width-M kernel is not stationary, so it falls back to the eigenvalues of
// the grid Gram matrix scaled by 1/q, reported per rank instead of per mode.

#include <Eigen/Core>

#include "translaw/kernels.hpp"

namespace translaw::theory {

struct SpectrumReport {
  // Stationary path: entry l-1 is the eigenvalue of angular mode l (each
  // such eigenvalue has multiplicity two). Gram path: descending positive
  // eigenvalues by rank, duplicates appearing individually.
  Eigen::VectorXd eigenvalues;
  double fitted_xi = 0.0;  // negative log-log slope of eigenvalue against index
  double fit_r2 = 0.0;
  int fit_lo = 0, fit_hi = 0;  // 1-based inclusive index window used by the fit
  bool gram_fallback = false;
};

// q must be a power of two, >= 8, and for the designed backend at least 4x
// its mode count so the profile is sampled alias-free.
SpectrumReport spectrum(const KernelSpec& kernel, int q);

}  // namespace translaw::theory
