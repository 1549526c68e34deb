#include "translaw/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "translaw/fit.hpp"

namespace translaw::theory {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool power_of_two(int q) { return q > 0 && (q & (q - 1)) == 0; }

// Largest leading window over which the sequence stays above the floor and
// does not increase (beyond roundoff); this is the part a power law can fit.
std::pair<int, int> fit_window(const Eigen::VectorXd& ev, double rel_floor) {
  require(ev.size() >= 2 && ev[0] > 0.0, "spectrum: leading eigenvalue is not positive");
  const double floor = ev[0] * rel_floor;
  int hi = 1;
  while (hi < ev.size() && ev[hi] > floor && ev[hi] <= ev[hi - 1] * (1.0 + 1e-9)) ++hi;
  require(hi >= 2, "spectrum: no decaying window to fit");
  return {1, hi};  // 1-based inclusive
}

}  // namespace

SpectrumReport spectrum(const KernelSpec& kernel, int q) {
  require(power_of_two(q) && q >= 8, "spectrum: q must be a power of two >= 8");

  SpectrumReport rep;
  double rel_floor = 1e-10;

  if (const auto* rf = std::get_if<RandomFeature>(&kernel)) {
    require(rf->snapshot != nullptr, "spectrum: empty snapshot");
    require(rf->snapshot->dim() == 2, "spectrum: circle quadrature needs a 2-d snapshot");
    // Width-M kernels are not rotation invariant, so mode extraction via the
    // profile does not apply; use the grid Gram eigenvalues instead.
    rep.gram_fallback = true;
    Eigen::MatrixXd gram(q, q);
    std::vector<Eigen::Vector2d> pts(q);
    for (int i = 0; i < q; ++i) pts[i] = circle_point(2.0 * M_PI * i / q);
    for (int i = 0; i < q; ++i)
      for (int j = i; j < q; ++j) {
        const double v = rf_kernel_eval(*rf->snapshot, pts[i], pts[j]);
        gram(i, j) = v;
        gram(j, i) = v;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram / double(q));
    std::vector<double> pos;
    for (int i = static_cast<int>(eig.eigenvalues().size()) - 1; i >= 0; --i)
      if (eig.eigenvalues()[i] > 0.0) pos.push_back(eig.eigenvalues()[i]);
    std::sort(pos.begin(), pos.end(), std::greater<>());
    require(pos.size() >= 2, "spectrum: Gram matrix has fewer than two positive eigenvalues");
    rep.eigenvalues = Eigen::Map<Eigen::VectorXd>(pos.data(), pos.size());
  } else {
    Eigen::VectorXd profile(q);
    if (const auto* des = std::get_if<DesignedSpectrum>(&kernel)) {
      require(q >= 4 * des->modes,
              "spectrum: q must be >= 4x the designed mode count (alias-free sampling)");
      for (int j = 0; j < q; ++j)
        profile[j] = designed_kernel_eval(des->xi, des->modes, 0.0, 2.0 * M_PI * j / q, des->scale);
    } else {
      const auto& mc = std::get<NtkMonteCarlo>(kernel);
      rel_floor = 1e-6;  // Monte Carlo noise floor sits far above roundoff
      Eigen::MatrixXd points(q, 2);
      for (int j = 0; j < q; ++j) points.row(j) = circle_point(2.0 * M_PI * j / q);
      std::vector<std::pair<int, int>> pairs(q);
      for (int j = 0; j < q; ++j) pairs[j] = {0, j};
      profile = ntk_eval_batch(points, pairs, mc.mc_samples, mc.seed);
    }
    // Cosine coefficients of the profile; mode l of the operator carries
    // coefficient/2, once for cos and once for sin.
    const int lmax = q / 2 - 1;
    rep.eigenvalues.resize(lmax);
    for (int l = 1; l <= lmax; ++l) {
      double acc = 0.0;
      for (int j = 0; j < q; ++j) acc += profile[j] * std::cos(2.0 * M_PI * l * j / q);
      rep.eigenvalues[l - 1] = acc / q;  // (2/q * sum) / 2
    }
  }

  const auto [lo, hi] = fit_window(rep.eigenvalues, rel_floor);
  rep.fit_lo = lo;
  rep.fit_hi = hi;
  std::vector<double> xs, ys;
  for (int l = lo; l <= hi; ++l) {
    xs.push_back(double(l));
    ys.push_back(rep.eigenvalues[l - 1]);
  }
  const LoglogFit f = fit_loglog_linear(xs, ys);
  rep.fitted_xi = -f.slope;
  rep.fit_r2 = f.r2;
  return rep;
}

}  // namespace translaw::theory
