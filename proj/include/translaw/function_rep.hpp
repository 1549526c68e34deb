#pragma once
// Functions on the unit circle in the orthonormal Fourier basis under the
// uniform probability measure:
//   e_0 = 1,  e_{c,l} = sqrt(2) cos(l theta),  e_{s,l} = sqrt(2) sin(l theta).
// For the designed kernel these are exactly the integral-operator
// eigenfunctions, with the cos/sin pair of mode l sharing one eigenvalue.

#include <cstdint>
#include <functional>
#include <limits>

#include <Eigen/Core>

namespace translaw::theory {

struct FourierRep {
  double c0 = 0.0;
  Eigen::VectorXd cos_coef;  // entry l-1 multiplies sqrt(2) cos(l theta)
  Eigen::VectorXd sin_coef;

  // Filled by make_target: r and |profile| carried through any rescaling,
  // i.e. the norm of the function pulled back through the r-th power of the
  // kernel operator. NaN when the rep was not built from a source condition.
  double source_r = std::numeric_limits<double>::quiet_NaN();
  double source_norm = std::numeric_limits<double>::quiet_NaN();

  int modes() const { return static_cast<int>(cos_coef.size()); }
  double eval(double theta) const;
  double l2_norm2() const;  // Parseval: c0^2 + sum of squared coefficients

  static FourierRep zero(int modes);
};

FourierRep operator+(const FourierRep& f, const FourierRep& g);
FourierRep operator*(double c, const FourierRep& f);

// Target with amplitude gamma_l^r * profile_l in mode l (phase seeded), then
// rescaled, only ever downward, so that sup |phi| <= 1. eigenvalues holds the
// per-mode operator spectrum, profile the square-summable coefficient vector;
// r must lie in [1/2, 1]. source_norm tracks |profile| through the rescale.
FourierRep make_target(const Eigen::VectorXd& eigenvalues, double r,
                       const Eigen::VectorXd& profile, std::uint64_t seed);

// Coefficient-wise shrinkage gamma_l / (gamma_l + lambda); the constant
// component lies outside the kernel's range and maps to zero. lambda > 0.
FourierRep regularized_target(const Eigen::VectorXd& eigenvalues, const FourierRep& f,
                              double lambda);

// Sup of |f| located on a fine grid and polished by golden-section ascent.
double sup_abs(const FourierRep& f);

// Mean-square distance under the uniform measure, by the q-point periodic
// rectangle rule; exact once q exceeds twice the bandwidth of f - g.
double l2_error(const std::function<double(double)>& f, const std::function<double(double)>& g,
                int q);

// Exact coefficient-space distance (Parseval).
double l2_error(const FourierRep& f, const FourierRep& g);

}  // namespace translaw::theory
