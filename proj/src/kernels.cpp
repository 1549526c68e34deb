#include "translaw/kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace translaw::theory {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_unit(const Eigen::VectorXd& x, const char* what) {
  require(std::abs(x.norm() - 1.0) <= 1e-8, std::string(what) + ": input must be unit-norm");
}

}  // namespace

NtkEstimate ntk_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& xp,
                     std::int64_t mc_samples, std::uint64_t seed, Activation act) {
  require(x.size() == xp.size(), "ntk: point dimensions differ");
  require(mc_samples >= 2, "ntk: need at least 2 Monte Carlo samples");
  check_unit(x, "ntk");
  check_unit(xp, "ntk");
  const int d = static_cast<int>(x.size());
  const double dot = x.dot(xp);
  Rng rng(derive_seed(seed, "ntk-mc"));

  double mean = 0.0, m2 = 0.0;  // Welford, for the standard error
  for (std::int64_t i = 0; i < mc_samples; ++i) {
    const Eigen::VectorXd b = rng.unit_sphere(d);
    const double u = b.dot(x), v = b.dot(xp);
    const double val = act_eval(act, u) * act_eval(act, v) +
                       dot * act_deriv(act, u) * act_deriv(act, v);
    const double delta = val - mean;
    mean += delta / double(i + 1);
    m2 += delta * (val - mean);
  }
  NtkEstimate est;
  est.value = mean;
  est.std_error = std::sqrt(m2 / double(mc_samples - 1) / double(mc_samples));
  return est;
}

Eigen::VectorXd ntk_eval_batch(const Eigen::MatrixXd& points,
                               const std::vector<std::pair<int, int>>& pairs,
                               std::int64_t mc_samples, std::uint64_t seed, Activation act) {
  const int np = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  require(np >= 1, "ntk batch: no points");
  require(mc_samples >= 1, "ntk batch: need at least 1 sample");
  for (int i = 0; i < np; ++i) {
    require(std::abs(points.row(i).norm() - 1.0) <= 1e-8,
            "ntk batch: point " + std::to_string(i) + " is not unit-norm");
  }
  for (const auto& [i, j] : pairs)
    require(i >= 0 && i < np && j >= 0 && j < np, "ntk batch: pair index out of range");

  Rng rng(derive_seed(seed, "ntk-mc"));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(pairs.size());
  Eigen::VectorXd s(np), ds(np);
  for (std::int64_t t = 0; t < mc_samples; ++t) {
    const Eigen::VectorXd b = rng.unit_sphere(d);
    const Eigen::VectorXd z = points * b;
    for (int i = 0; i < np; ++i) {
      s[i] = act_eval(act, z[i]);
      ds[i] = act_deriv(act, z[i]);
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [i, j] = pairs[k];
      acc[k] += s[i] * s[j] + points.row(i).dot(points.row(j)) * ds[i] * ds[j];
    }
  }
  return acc / double(mc_samples);
}

double rf_kernel_eval(const NetworkState& st, const Eigen::VectorXd& x, const Eigen::VectorXd& xp) {
  require(x.size() == st.dim() && xp.size() == st.dim(), "width-M kernel: dimension mismatch");
  check_unit(x, "width-M kernel");
  check_unit(xp, "width-M kernel");
  const int m = st.width();
  const Eigen::VectorXd zx = st.b0 * x;
  const Eigen::VectorXd zp = st.b0 * xp;
  double s1 = 0.0, s2 = 0.0;
  for (int r = 0; r < m; ++r) {
    s1 += act_eval(st.act, zx[r]) * act_eval(st.act, zp[r]);
    s2 += act_deriv(st.act, zx[r]) * act_deriv(st.act, zp[r]);
  }
  return s1 / double(m) + x.dot(xp) * s2 / double(m);
}

double designed_kernel_eval(double xi, int modes, double theta, double thetap, double scale) {
  require(xi > 1.0, "designed kernel: xi must be > 1, got " + std::to_string(xi));
  require(modes >= 1, "designed kernel: need at least one mode");
  require(scale > 0.0, "designed kernel: scale must be > 0");
  require(std::isfinite(theta) && std::isfinite(thetap), "designed kernel: angles must be finite");
  const double delta = theta - thetap;
  double sum = 0.0;
  for (int l = 1; l <= modes; ++l) sum += std::pow(double(l), -xi) * std::cos(double(l) * delta);
  return scale * sum;
}

double kernel_eval_circle(const KernelSpec& k, double theta, double thetap) {
  if (const auto* des = std::get_if<DesignedSpectrum>(&k))
    return designed_kernel_eval(des->xi, des->modes, theta, thetap, des->scale);
  const Eigen::VectorXd x = circle_point(theta);
  const Eigen::VectorXd xp = circle_point(thetap);
  if (const auto* rf = std::get_if<RandomFeature>(&k)) {
    require(rf->snapshot != nullptr, "kernel: empty snapshot");
    require(rf->snapshot->dim() == 2, "kernel: circle evaluation needs a 2-d snapshot");
    return rf_kernel_eval(*rf->snapshot, x, xp);
  }
  const auto& mc = std::get<NtkMonteCarlo>(k);
  return ntk_eval(x, xp, mc.mc_samples, mc.seed).value;
}

}  // namespace translaw::theory
