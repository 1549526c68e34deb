#include "translaw/function_rep.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "translaw/rng.hpp"

namespace translaw::theory {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double FourierRep::eval(double theta) const {
  double v = c0;
  for (int l = 1; l <= modes(); ++l)
    v += kSqrt2 * (cos_coef[l - 1] * std::cos(l * theta) + sin_coef[l - 1] * std::sin(l * theta));
  return v;
}

double FourierRep::l2_norm2() const {
  return c0 * c0 + cos_coef.squaredNorm() + sin_coef.squaredNorm();
}

FourierRep FourierRep::zero(int modes) {
  FourierRep f;
  f.cos_coef = Eigen::VectorXd::Zero(modes);
  f.sin_coef = Eigen::VectorXd::Zero(modes);
  return f;
}

FourierRep operator+(const FourierRep& f, const FourierRep& g) {
  const int m = std::max(f.modes(), g.modes());
  FourierRep out = FourierRep::zero(m);
  out.c0 = f.c0 + g.c0;
  out.cos_coef.head(f.modes()) = f.cos_coef;
  out.sin_coef.head(f.modes()) = f.sin_coef;
  out.cos_coef.head(g.modes()) += g.cos_coef;
  out.sin_coef.head(g.modes()) += g.sin_coef;
  return out;
}

FourierRep operator*(double c, const FourierRep& f) {
  FourierRep out = f;
  out.c0 *= c;
  out.cos_coef *= c;
  out.sin_coef *= c;
  if (!std::isnan(out.source_norm)) out.source_norm *= std::abs(c);
  return out;
}

double sup_abs(const FourierRep& f) {
  const int grid = std::max(512, 32 * std::max(f.modes(), 1));
  double best = 0.0;
  int best_i = 0;
  for (int i = 0; i < grid; ++i) {
    const double v = std::abs(f.eval(2.0 * M_PI * i / grid));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  // Polish the located maximum; |f| is smooth near a strict max of f^2.
  double lo = 2.0 * M_PI * (best_i - 1) / grid;
  double hi = 2.0 * M_PI * (best_i + 1) / grid;
  constexpr double kGolden = 0.6180339887498949;
  double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
  double f1 = std::abs(f.eval(x1)), f2 = std::abs(f.eval(x2));
  for (int k = 0; k < 60; ++k) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kGolden * (hi - lo);
      f1 = std::abs(f.eval(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kGolden * (hi - lo);
      f2 = std::abs(f.eval(x2));
    }
  }
  return std::max(best, std::max(f1, f2));
}

FourierRep make_target(const Eigen::VectorXd& eigenvalues, double r,
                       const Eigen::VectorXd& profile, std::uint64_t seed) {
  require(r >= 0.5 && r <= 1.0, "target: r must lie in [1/2, 1], got " + std::to_string(r));
  require(eigenvalues.size() >= 1, "target: empty spectrum");
  require(profile.size() >= 1, "target: empty profile");
  require(profile.size() <= eigenvalues.size(),
          "target: profile has more modes than the spectrum");
  for (int l = 0; l < eigenvalues.size(); ++l)
    require(eigenvalues[l] > 0.0 && std::isfinite(eigenvalues[l]),
            "target: eigenvalues must be positive and finite");
  require(profile.norm() > 0.0, "target: profile is identically zero");

  FourierRep f = FourierRep::zero(static_cast<int>(profile.size()));
  Rng rng(derive_seed(seed, "target-phase"));
  for (int l = 0; l < profile.size(); ++l) {
    const double amp = std::pow(eigenvalues[l], r) * profile[l];
    const double psi = rng.uniform(0.0, 2.0 * M_PI);
    f.cos_coef[l] = amp * std::cos(psi);
    f.sin_coef[l] = amp * std::sin(psi);
  }
  f.source_r = r;
  f.source_norm = profile.norm();

  const double sup = sup_abs(f);
  if (sup > 1.0) {
    const double s = 1.0 / sup;
    f.cos_coef *= s;
    f.sin_coef *= s;
    f.source_norm *= s;
  }
  return f;
}

FourierRep regularized_target(const Eigen::VectorXd& eigenvalues, const FourierRep& f,
                              double lambda) {
  require(lambda > 0.0 && std::isfinite(lambda), "regularized target: lambda must be > 0");
  require(f.modes() <= eigenvalues.size(),
          "regularized target: function has modes beyond the spectrum");
  FourierRep out = f;
  out.source_r = std::numeric_limits<double>::quiet_NaN();
  out.source_norm = std::numeric_limits<double>::quiet_NaN();
  out.c0 = 0.0;  // the constant function is orthogonal to the kernel's range
  for (int l = 0; l < f.modes(); ++l) {
    const double shrink = eigenvalues[l] / (eigenvalues[l] + lambda);
    out.cos_coef[l] *= shrink;
    out.sin_coef[l] *= shrink;
  }
  return out;
}

double l2_error(const std::function<double(double)>& f, const std::function<double(double)>& g,
                int q) {
  require(q >= 1, "l2 error: q must be >= 1");
  require(static_cast<bool>(f) && static_cast<bool>(g), "l2 error: empty function");
  double sum = 0.0, comp = 0.0;
  for (int i = 0; i < q; ++i) {
    const double theta = 2.0 * M_PI * i / q;
    const double d = f(theta) - g(theta);
    const double x = d * d;
    const double t = sum + x;
    comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + comp) / q;
}

double l2_error(const FourierRep& f, const FourierRep& g) {
  const int m = std::max(f.modes(), g.modes());
  double acc = (f.c0 - g.c0) * (f.c0 - g.c0);
  for (int l = 0; l < m; ++l) {
    const double dc = (l < f.modes() ? f.cos_coef[l] : 0.0) - (l < g.modes() ? g.cos_coef[l] : 0.0);
    const double ds = (l < f.modes() ? f.sin_coef[l] : 0.0) - (l < g.modes() ? g.sin_coef[l] : 0.0);
    acc += dc * dc + ds * ds;
  }
  return acc;
}

}  // namespace translaw::theory
