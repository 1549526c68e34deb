#include "translaw/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace translaw::theory {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_unit(const Eigen::VectorXd& x) {
  require(std::abs(x.norm() - 1.0) <= 1e-8,
          "network: input must be unit-norm (|x| = " + std::to_string(x.norm()) + ")");
}

}  // namespace

double act_eval(Activation a, double u) {
  switch (a) {
    case Activation::tanh:
      return std::tanh(u);
  }
  throw std::logic_error("unknown activation");
}

double act_deriv(Activation a, double u) {
  switch (a) {
    case Activation::tanh: {
      const double t = std::tanh(u);
      return 1.0 - t * t;
    }
  }
  throw std::logic_error("unknown activation");
}

NetworkState init_network(int m, int d, std::uint64_t seed) {
  require(m >= 2 && m % 2 == 0, "network: width must be even and >= 2, got " + std::to_string(m));
  require(d >= 1, "network: input dimension must be >= 1");
  NetworkState st;
  st.a.resize(m);
  st.b.resize(m, d);
  Rng rng(derive_seed(seed, "net-init"));
  for (int r = 0; r < m; r += 2) {
    const Eigen::VectorXd row = rng.unit_sphere(d);
    st.b.row(r) = row;
    st.b.row(r + 1) = row;
    st.a[r] = 1.0;
    st.a[r + 1] = -1.0;
  }
  st.a0 = st.a;
  st.b0 = st.b;
  return st;
}

double network_eval(const NetworkState& st, const Eigen::VectorXd& x) {
  require(x.size() == st.dim(), "network: input dimension mismatch");
  check_unit(x);
  const int m = st.width();
  const Eigen::VectorXd z = st.b * x;
  // Adjacent pairs are summed together: at initialization the two rows of a
  // pair carry identical activations with opposite signs, so each pair
  // contributes exactly zero.
  double sum = 0.0;
  int r = 0;
  for (; r + 1 < m; r += 2)
    sum += st.a[r] * act_eval(st.act, z[r]) + st.a[r + 1] * act_eval(st.act, z[r + 1]);
  if (r < m) sum += st.a[r] * act_eval(st.act, z[r]);
  return sum / std::sqrt(double(m));
}

NetworkState asgd_step(const NetworkState& st, const Sample& sample, double eta, double lambda) {
  require(eta >= 0.0 && std::isfinite(eta), "asgd: eta must be >= 0");
  require(lambda >= 0.0 && std::isfinite(lambda), "asgd: lambda must be >= 0");
  require(std::isfinite(sample.y), "asgd: sample label must be finite");
  const int m = st.width();
  const double g = network_eval(st, sample.x);
  const double coef = eta * (g - sample.y) / std::sqrt(double(m));
  const Eigen::VectorXd z = st.b * sample.x;

  NetworkState next = st;
  for (int r = 0; r < m; ++r) {
    next.a[r] = st.a[r] - eta * lambda * (st.a[r] - st.a0[r]) - coef * act_eval(st.act, z[r]);
    const double w = coef * st.a[r] * act_deriv(st.act, z[r]);
    next.b.row(r) =
        st.b.row(r) - eta * lambda * (st.b.row(r) - st.b0.row(r)) - w * sample.x.transpose();
  }
  return next;
}

AsgdResult run_asgd(const NetworkState& init, const Sampler& sampler, int steps, double eta,
                    double lambda, std::uint64_t seed) {
  require(steps >= 0, "asgd: steps must be >= 0");
  require(static_cast<bool>(sampler), "asgd: sampler is empty");
  Rng rng(derive_seed(seed, "asgd-data"));

  NetworkState cur = init;
  Eigen::VectorXd a_sum = cur.a;
  Eigen::MatrixXd b_sum = cur.b;
  for (int t = 0; t < steps; ++t) {
    cur = asgd_step(cur, sampler(rng), eta, lambda);
    a_sum += cur.a;
    b_sum += cur.b;
  }
  AsgdResult out;
  out.final_state = cur;
  out.averaged.act = cur.act;
  out.averaged.a = a_sum / double(steps + 1);
  out.averaged.b = b_sum / double(steps + 1);
  out.averaged.a0 = out.averaged.a;
  out.averaged.b0 = out.averaged.b;
  return out;
}

Eigen::Vector2d circle_point(double theta) { return {std::cos(theta), std::sin(theta)}; }

Sampler circle_sampler(std::function<double(double)> f) {
  if (!f) throw std::invalid_argument("circle sampler: target function is empty");
  return [f = std::move(f)](Rng& rng) {
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    Sample s;
    s.x = circle_point(theta);
    s.y = f(theta);
    return s;
  };
}

}  // namespace translaw::theory
