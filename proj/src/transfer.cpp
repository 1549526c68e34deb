#include "translaw/transfer.hpp"

#include <cmath>
#include <memory>
#include <set>
#include <stdexcept>

#include "translaw/fit.hpp"
#include "translaw/function_rep.hpp"
#include "translaw/kernels.hpp"
#include "translaw/rates.hpp"
#include "translaw/reference_asgd.hpp"
#include "translaw/rng.hpp"

namespace translaw::theory {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Eigen::VectorXd designed_eigenvalues(double xi, int modes, double scale) {
  Eigen::VectorXd g(modes);
  for (int l = 1; l <= modes; ++l) g[l - 1] = scale * std::pow(double(l), -xi) / 2.0;
  return g;
}

Eigen::VectorXd profile_vector(TargetSpec::Profile p, int modes) {
  Eigen::VectorXd c(modes);
  for (int l = 1; l <= modes; ++l)
    c[l - 1] = (p == TargetSpec::Profile::inverse) ? 1.0 / double(l) : 1.0;
  return c;
}

struct TaskPair {
  FourierRep phi0;  // pre-training target
  FourierRep phi;   // composite fine-tuning target phi0 + phi1
};

// Builds phi0 and phi0 + phi1 with seeded phases, then rescales both
// together (downward only) so the composite stays within [-1, 1].
TaskPair build_tasks(double xi, int modes, double scale, const TargetSpec& spec,
                     std::uint64_t seed) {
  require(spec.phi1_scale >= 0.0, "targets: phi1_scale must be >= 0");
  const Eigen::VectorXd eig = designed_eigenvalues(xi, modes, scale);
  const Eigen::VectorXd prof = profile_vector(spec.profile, modes);
  TaskPair tasks;
  tasks.phi0 = make_target(eig, spec.r0, prof, derive_seed(seed, "phi0"));
  const FourierRep phi1 =
      spec.phi1_scale * make_target(eig, spec.r1, prof, derive_seed(seed, "phi1"));
  tasks.phi = tasks.phi0 + phi1;
  const double sup = sup_abs(tasks.phi);
  if (sup > 1.0) {
    tasks.phi0 = (1.0 / sup) * tasks.phi0;
    tasks.phi = (1.0 / sup) * tasks.phi;
  }
  return tasks;
}

class WarningSink {
 public:
  explicit WarningSink(std::vector<std::string>& out) : out_(out) {}
  void add(const std::string& w) {
    if (seen_.insert(w).second) out_.push_back(w);
  }

 private:
  std::vector<std::string>& out_;
  std::set<std::string> seen_;
};

void check_common(const TransferConfig& cfg) {
  require(!cfg.t0_grid.empty() && !cfg.t1_grid.empty(), "transfer: empty T grid");
  for (int t : cfg.t0_grid) require(t >= 0, "transfer: T0 must be >= 0");
  for (int t : cfg.t1_grid) require(t >= 0, "transfer: T1 must be >= 0");
  require(cfg.eta0 > 0.0 && cfg.eta1_base > 0.0, "transfer: step sizes must be > 0");
  require(cfg.zeta >= 0.0 && cfg.zeta < 1.0, "transfer: zeta must lie in [0, 1)");
  require(cfg.xi > 1.0, "transfer: xi must be > 1");
  require(cfg.modes >= 1, "transfer: need at least one mode");
  require(cfg.scale > 0.0, "transfer: scale must be > 0");
  require(!cfg.seeds.empty(), "transfer: no seeds");
  require(cfg.eval_q >= 2, "transfer: eval_q must be >= 2");
  if (cfg.lambda0) require(*cfg.lambda0 >= 0.0, "transfer: lambda0 must be >= 0");
  if (cfg.lambda1) require(*cfg.lambda1 >= 0.0, "transfer: lambda1 must be >= 0");
}

}  // namespace

TransferResult transfer_experiment(const TransferConfig& cfg) {
  check_common(cfg);
  const bool network_mode = cfg.mode == TransferConfig::Mode::network;
  if (network_mode)
    require(cfg.m >= 2 && cfg.m % 2 == 0, "transfer: width must be even and >= 2");

  TransferResult result;
  WarningSink warn(result.warnings);

  const RatePrediction rule = rate_predict(cfg.targets.r0, cfg.targets.r1, cfg.xi, cfg.zeta);
  if (!cfg.lambda1 && !rule.condition_ok)
    warn.add("regularization rule: no rate-table row covers (r0, r1, zeta); nearest row " +
             rule.case_label + " used, needs " + rule.violated);

  const KernelSpec kernel = DesignedSpectrum{cfg.xi, cfg.modes, cfg.scale};
  const FourierRep zero = FourierRep::zero(cfg.modes);

  for (const std::uint64_t seed : cfg.seeds) {
    const TaskPair tasks = build_tasks(cfg.xi, cfg.modes, cfg.scale, cfg.targets, seed);

    for (const int t0 : cfg.t0_grid) {
      const double lam0 = cfg.lambda0
                              ? *cfg.lambda0
                              : (t0 >= 1 ? optimal_lambda0(double(t0), cfg.targets.r0, cfg.xi)
                                         : 0.0);

      FourierRep pre_fn = zero;
      NetworkState pre_net;
      double r0_err = 0.0;
      if (network_mode) {
        const NetworkState fresh = init_network(cfg.m, 2, derive_seed(seed, "net"));
        const auto pre = run_asgd(
            fresh, circle_sampler([&](double th) { return tasks.phi0.eval(th); }), t0, cfg.eta0,
            lam0, derive_seed(seed, "pre-data", std::uint64_t(t0)));
        pre_net = pre.averaged;
        r0_err = l2_error([&](double th) { return network_eval(pre_net, circle_point(th)); },
                          [&](double th) { return tasks.phi0.eval(th); }, cfg.eval_q);
      } else {
        if (t0 >= 1) {
          const RefFunction got =
              reference_asgd(kernel, tasks.phi0, t0, cfg.eta0, lam0, zero,
                             derive_seed(seed, "pre-data", std::uint64_t(t0)));
          pre_fn = std::get<FourierRep>(got);
        }
        r0_err = l2_error(pre_fn, tasks.phi0);
      }

      for (const int t1 : cfg.t1_grid) {
        const double eta1 = t1 >= 1 ? cfg.eta1_base * std::pow(double(t1), -cfg.zeta) : 0.0;
        double lam1 = 0.0;
        if (t1 >= 1) {
          lam1 = cfg.lambda1 ? *cfg.lambda1
                             : std::pow(double(t1), rule.lambda1_t1_exp) *
                                   std::pow(std::max(r0_err, 1e-300), rule.lambda1_r0_exp);
          if (!averaging_step_ok(eta1, lam1))
            warn.add("step size at T1=" + std::to_string(t1) +
                     " misses the sufficient averaging condition 4(6+lambda1)eta1 <= 1; "
                     "the run proceeds regardless");
        }

        TransferRow row;
        row.t0 = t0;
        row.t1 = t1;
        row.seed = seed;
        row.r0_error = r0_err;
        row.lambda0 = lam0;
        row.lambda1 = lam1;
        row.eta1 = eta1;

        if (network_mode) {
          NetworkState tuned = pre_net;
          if (t1 >= 1) {
            const auto fine = run_asgd(
                pre_net, circle_sampler([&](double th) { return tasks.phi.eval(th); }), t1, eta1,
                lam1, derive_seed(seed, "fine-data", std::uint64_t(t0), std::uint64_t(t1)));
            tuned = fine.averaged;
          }
          row.error = l2_error([&](double th) { return network_eval(tuned, circle_point(th)); },
                               [&](double th) { return tasks.phi.eval(th); }, cfg.eval_q);
        } else {
          FourierRep tuned = pre_fn;
          if (t1 >= 1) {
            const RefFunction got =
                reference_asgd(kernel, tasks.phi, t1, eta1, lam1, pre_fn,
                               derive_seed(seed, "fine-data", std::uint64_t(t0), std::uint64_t(t1)));
            tuned = std::get<FourierRep>(got);
          }
          row.error = l2_error(tuned, tasks.phi);
        }
        result.rows.push_back(row);
      }
    }
  }
  return result;
}

std::vector<Observation> to_observations(const TransferResult& result) {
  std::vector<Observation> obs;
  obs.reserve(result.rows.size());
  for (const auto& r : result.rows)
    obs.emplace_back(std::max(r.t0, 1), std::max(r.t1, 1), r.error,
                     "seed-" + std::to_string(r.seed));
  return obs;
}

PropGapResult width_coupling_gap(const PropGapConfig& cfg, const std::vector<int>& widths) {
  require(!widths.empty(), "coupling gap: no widths");
  for (int m : widths) require(m >= 2 && m % 2 == 0, "coupling gap: widths must be even and >= 2");
  require(cfg.steps >= 0, "coupling gap: steps must be >= 0");
  require(cfg.eta > 0.0, "coupling gap: eta must be > 0");
  require(cfg.lambda >= 0.0, "coupling gap: lambda must be >= 0");
  require(cfg.grid_q >= 1, "coupling gap: grid_q must be >= 1");
  require(!cfg.seeds.empty(), "coupling gap: no seeds");
  require(cfg.xi > 1.0 && cfg.modes >= 1 && cfg.scale > 0.0, "coupling gap: bad kernel spec");

  const Eigen::VectorXd eig = designed_eigenvalues(cfg.xi, cfg.modes, cfg.scale);
  const Eigen::VectorXd prof = profile_vector(cfg.target.profile, cfg.modes);

  PropGapResult out;
  out.widths = widths;
  out.per_seed.resize(widths.size(), cfg.seeds.size());

  const int q = cfg.grid_q;
  Eigen::MatrixXd grid_x(q, 2);
  for (int gidx = 0; gidx < q; ++gidx)
    grid_x.row(gidx) = circle_point(2.0 * M_PI * gidx / q).transpose();

  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    const int m = widths[wi];
    const double root_m = std::sqrt(double(m));
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const std::uint64_t seed = cfg.seeds[si];
      const FourierRep phi = make_target(eig, cfg.target.r0, prof, derive_seed(seed, "phi0"));

      NetworkState net = init_network(m, 2, derive_seed(seed, "net", std::uint64_t(m)));
      const Eigen::MatrixXd b0 = net.b0;

      // Reference side: collapsed feature state and incrementally maintained
      // grid values (both trajectories start at the zero function).
      Eigen::VectorXd cu = Eigen::VectorXd::Zero(m);
      Eigen::MatrixXd cv = Eigen::MatrixXd::Zero(m, 2);
      Eigen::VectorXd ref_grid = Eigen::VectorXd::Zero(q);

      const double rho = 1.0 - cfg.eta * cfg.lambda;
      Rng data(derive_seed(seed, "gap-data", std::uint64_t(m)));

      // Grid features of the frozen snapshot, for the kernel column.
      const Eigen::MatrixXd zg0 = grid_x * b0.transpose();  // q x m
      const Eigen::MatrixXd ug = zg0.array().tanh().matrix();
      const Eigen::MatrixXd vg = (1.0 - ug.array().square()).matrix();

      double gap = 0.0;  // t = 0: both sides are identically zero
      for (int t = 0; t < cfg.steps; ++t) {
        const double theta = data.uniform(0.0, 2.0 * M_PI);
        const Eigen::Vector2d x = circle_point(theta);
        const double y = phi.eval(theta);

        // Reference update.
        const Eigen::VectorXd z0 = b0 * x;
        const Eigen::VectorXd su = z0.array().tanh().matrix();
        const Eigen::VectorXd sv = (1.0 - su.array().square()).matrix();
        const double g_ref = (su.dot(cu) + (cv * x).dot(sv)) / root_m;
        const double delta = cfg.eta * (g_ref - y);
        cu = rho * cu - (delta / root_m) * su;
        cv = rho * cv - (delta / root_m) * (sv * x.transpose());
        const Eigen::VectorXd kcol =
            (ug * su + (grid_x * x).cwiseProduct(vg * sv)) / double(m);
        ref_grid = rho * ref_grid - delta * kcol;

        // Network update on the same sample.
        net = asgd_step(net, {x, y}, cfg.eta, cfg.lambda);

        const Eigen::MatrixXd zg = grid_x * net.b.transpose();
        const Eigen::VectorXd net_grid = (zg.array().tanh().matrix() * net.a) / root_m;
        gap = std::max(gap, (ref_grid - net_grid).lpNorm<Eigen::Infinity>());
      }
      out.per_seed(wi, si) = gap;
    }
  }

  out.median_gap.resize(widths.size());
  for (std::size_t wi = 0; wi < widths.size(); ++wi) {
    std::vector<double> v(cfg.seeds.size());
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) v[si] = out.per_seed(wi, si);
    out.median_gap[wi] = median_lower(v);
  }
  return out;
}

}  // namespace translaw::theory
