#include "translaw/reference_asgd.hpp"

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

void check_run_args(int steps, double eta, double lambda) {
  require(steps >= 0, "reference run: steps must be >= 0");
  require(eta >= 0.0 && std::isfinite(eta), "reference run: eta must be >= 0");
  require(lambda >= 0.0 && std::isfinite(lambda), "reference run: lambda must be >= 0");
}

FourierRep run_designed(const DesignedSpectrum& des, const FourierRep& target, int steps,
                        double eta, double lambda, const FourierRep& init, std::uint64_t seed) {
  const int lrep = std::max(des.modes, init.modes());
  FourierRep cur = FourierRep::zero(lrep);
  cur.c0 = init.c0;
  cur.cos_coef.head(init.modes()) = init.cos_coef;
  cur.sin_coef.head(init.modes()) = init.sin_coef;

  FourierRep sum = cur;
  Eigen::VectorXd gamma(des.modes);
  for (int l = 1; l <= des.modes; ++l)
    gamma[l - 1] = des.scale * std::pow(double(l), -des.xi) / 2.0;

  Rng rng(derive_seed(seed, "ref-data"));
  const double rho = 1.0 - eta * lambda;
  for (int t = 0; t < steps; ++t) {
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    double g = cur.c0;
    for (int l = 1; l <= lrep; ++l)
      g += kSqrt2 * (cur.cos_coef[l - 1] * std::cos(l * theta) +
                     cur.sin_coef[l - 1] * std::sin(l * theta));
    const double delta = eta * (g - target.eval(theta));

    cur.c0 *= rho;
    cur.cos_coef *= rho;
    cur.sin_coef *= rho;
    for (int l = 1; l <= des.modes; ++l) {
      cur.cos_coef[l - 1] -= delta * gamma[l - 1] * kSqrt2 * std::cos(l * theta);
      cur.sin_coef[l - 1] -= delta * gamma[l - 1] * kSqrt2 * std::sin(l * theta);
    }
    sum.c0 += cur.c0;
    sum.cos_coef += cur.cos_coef;
    sum.sin_coef += cur.sin_coef;
  }
  sum.c0 /= double(steps + 1);
  sum.cos_coef /= double(steps + 1);
  sum.sin_coef /= double(steps + 1);
  return sum;
}

KernelExpansion run_width_m(const RandomFeature& rf, const FourierRep& target, int steps,
                            double eta, double lambda, const FourierRep& init,
                            std::uint64_t seed) {
  require(rf.snapshot != nullptr, "reference run: empty snapshot");
  const NetworkState& st = *rf.snapshot;
  require(st.dim() == 2, "reference run: circle targets need a 2-d snapshot");
  const int m = st.width();
  const double root_m = std::sqrt(double(m));

  double s = 1.0;
  Eigen::VectorXd cu = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd cv = Eigen::MatrixXd::Zero(m, 2);
  double s_sum = s;
  Eigen::VectorXd cu_sum = cu;
  Eigen::MatrixXd cv_sum = cv;

  Eigen::MatrixXd anchors(steps, 2);
  Eigen::VectorXd deltas(steps);

  Rng rng(derive_seed(seed, "ref-data"));
  const double rho = 1.0 - eta * lambda;
  Eigen::VectorXd uf(m), vf(m);
  for (int t = 0; t < steps; ++t) {
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    const Eigen::Vector2d x = circle_point(theta);
    const Eigen::VectorXd z = st.b0 * x;
    for (int r = 0; r < m; ++r) {
      uf[r] = act_eval(st.act, z[r]) / root_m;
      vf[r] = act_deriv(st.act, z[r]) / root_m;
    }
    const double g = s * init.eval(theta) + uf.dot(cu) + (cv * x).dot(vf);
    const double delta = g - target.eval(theta);

    s *= rho;
    cu = rho * cu - eta * delta * uf;
    cv = rho * cv - (eta * delta) * (vf * x.transpose());
    anchors.row(t) = x;
    deltas[t] = delta;

    s_sum += s;
    cu_sum += cu;
    cv_sum += cv;
  }

  KernelExpansion out;
  out.snapshot = rf.snapshot;
  out.anchors = anchors;
  out.init = init;
  out.init_scale = s_sum / double(steps + 1);
  out.cu = cu_sum / double(steps + 1);
  out.cv = cv_sum / double(steps + 1);
  // Anchor t first appears in iterate t+1 and then decays by rho per step;
  // its weight in the uniform average is the geometric partial sum below.
  out.weights.resize(steps);
  for (int t = 0; t < steps; ++t) {
    const int reach = steps - t;  // iterates t+1 .. steps
    const double geom =
        (rho == 1.0) ? double(reach) : (1.0 - std::pow(rho, reach)) / (1.0 - rho);
    out.weights[t] = -eta * deltas[t] * geom / double(steps + 1);
  }
  return out;
}

}  // namespace

double KernelExpansion::eval(double theta) const {
  require(snapshot != nullptr, "kernel expansion: empty snapshot");
  const NetworkState& st = *snapshot;
  const int m = st.width();
  const Eigen::Vector2d x = circle_point(theta);
  const Eigen::VectorXd z = st.b0 * x;
  double acc_u = 0.0, acc_v = 0.0;
  const Eigen::VectorXd cvx = cv * x;
  for (int r = 0; r < m; ++r) {
    acc_u += act_eval(st.act, z[r]) * cu[r];
    acc_v += act_deriv(st.act, z[r]) * cvx[r];
  }
  return init_scale * init.eval(theta) + (acc_u + acc_v) / std::sqrt(double(m));
}

double ref_eval(const RefFunction& f, double theta) {
  if (const auto* four = std::get_if<FourierRep>(&f)) return four->eval(theta);
  return std::get<KernelExpansion>(f).eval(theta);
}

RefFunction reference_asgd(const KernelSpec& kernel, const FourierRep& target, int steps,
                           double eta, double lambda, const FourierRep& init,
                           std::uint64_t seed) {
  check_run_args(steps, eta, lambda);
  if (const auto* des = std::get_if<DesignedSpectrum>(&kernel))
    return run_designed(*des, target, steps, eta, lambda, init, seed);
  if (const auto* rf = std::get_if<RandomFeature>(&kernel))
    return run_width_m(*rf, target, steps, eta, lambda, init, seed);
  throw std::invalid_argument(
      "reference run: a Monte Carlo kernel backend cannot drive the recursion exactly; "
      "use the designed or width-M kernel");
}

}  // namespace translaw::theory
