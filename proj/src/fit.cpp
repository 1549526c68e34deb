#include "translaw/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <Eigen/Dense>

#include "translaw/rng.hpp"

namespace translaw {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

// Neumaier-compensated sum of squares; the tiny correction term makes the
// result independent of summation order far below the tolerances used on it.
double comp_sum_squares(const Eigen::VectorXd& r) {
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double x = r[i] * r[i];
    const double t = sum + x;
    comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double softplus(double u) {
  if (u > 40.0) return u;
  if (u < -40.0) return std::exp(u);
  return std::log1p(std::exp(u));
}

double softplus_inv(double p) {
  if (p > 40.0) return p;
  if (p <= 0.0) return -60.0;
  return std::log(std::expm1(p));
}

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

// One fitted parameter: external value p, internal coordinate u.
// log scale: p = exp(u); softplus scale: p = log1p(exp(u)).
struct ParamSpec {
  const char* name;
  bool log_scale;
  double ulo, uhi;  // clamps on u
};

constexpr ParamSpec kRate{"rate", true, -13.815510557964274, 6.907755278982137};  // [1e-6, 1e3]
constexpr ParamSpec kScale{"scale", true, -18.420680743952367, 18.420680743952367};  // [1e-8, 1e8]
constexpr ParamSpec kOffset{"offset", false, -60.0, 1e6};

double to_external(const ParamSpec& s, double u) { return s.log_scale ? std::exp(u) : softplus(u); }
double to_internal(const ParamSpec& s, double p) {
  return s.log_scale ? std::log(p) : softplus_inv(p);
}
double dext_dint(const ParamSpec& s, double u) {
  return s.log_scale ? std::exp(u) : sigmoid(u);
}

// A law with some parameters held. `full` is the complete parameter vector
// (law order); `free_idx` maps fitting coordinates into it.
struct Model {
  bool is_full_law = false;
  std::vector<double> base;        // complete vector, held slots authoritative
  std::vector<int> free_idx;       // law-order positions of the free parameters
  std::vector<ParamSpec> fspec;    // spec per free parameter
  const std::vector<Observation>* obs = nullptr;

  int nfree() const { return static_cast<int>(free_idx.size()); }

  std::vector<double> assemble(const Eigen::VectorXd& u) const {
    std::vector<double> p = base;
    for (int k = 0; k < nfree(); ++k) p[free_idx[k]] = to_external(fspec[k], u[k]);
    return p;
  }

  static double predict(bool full_law, const std::vector<double>& p, const Observation& o) {
    if (!full_law) return p[1] * std::pow(double(o.n), -p[0]) + p[2];
    return p[3] * (std::pow(double(o.n), -p[0]) + p[2]) * std::pow(double(o.s), -p[1]) + p[4];
  }

  // d pred / d p_k for the complete vector, law order.
  static void dpredict(bool full_law, const std::vector<double>& p, const Observation& o,
                       std::vector<double>& g) {
    const double n = double(o.n);
    if (!full_law) {
      const double np = std::pow(n, -p[0]);
      g[0] = -p[1] * np * std::log(n);
      g[1] = np;
      g[2] = 1.0;
      return;
    }
    const double s = double(o.s);
    const double np = std::pow(n, -p[0]);
    const double sp = std::pow(s, -p[1]);
    g[0] = -p[3] * np * std::log(n) * sp;
    g[1] = -p[3] * (np + p[2]) * sp * std::log(s);
    g[2] = p[3] * sp;
    g[3] = (np + p[2]) * sp;
    g[4] = 1.0;
  }

  // Residuals r_i = log L_i - log pred_i and optionally J = dr/du.
  // Returns false when some prediction is nonpositive or non-finite.
  bool eval(const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd* J) const {
    const auto p = assemble(u);
    const auto& data = *obs;
    const int n = static_cast<int>(data.size());
    r.resize(n);
    if (J) J->resize(n, nfree());
    std::vector<double> g(p.size());
    for (int i = 0; i < n; ++i) {
      const double pred = predict(is_full_law, p, data[i]);
      if (!(pred > 0.0) || !std::isfinite(pred)) return false;
      r[i] = std::log(data[i].error) - std::log(pred);
      if (J) {
        dpredict(is_full_law, p, data[i], g);
        for (int k = 0; k < nfree(); ++k)
          (*J)(i, k) = -(g[free_idx[k]] / pred) * dext_dint(fspec[k], u[k]);
      }
    }
    return true;
  }

  Eigen::VectorXd clamp(Eigen::VectorXd u) const {
    for (int k = 0; k < nfree(); ++k) u[k] = std::clamp(u[k], fspec[k].ulo, fspec[k].uhi);
    return u;
  }
};

struct LmOutcome {
  Eigen::VectorXd u;
  double obj = kInf;
  int iters = 0;
  bool converged = false;
};

LmOutcome levmar(const Model& m, const Eigen::VectorXd& u0, const FitOptions& opt) {
  LmOutcome out;
  out.u = m.clamp(u0);
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  if (!m.eval(out.u, r, &J)) return out;  // infeasible start, obj stays +inf
  out.obj = comp_sum_squares(r);

  double mu = -1.0;  // set from the first JtJ diagonal
  double nu = 2.0;
  Eigen::VectorXd r_try;
  for (int it = 1; it <= opt.max_iter; ++it) {
    out.iters = it;
    const Eigen::MatrixXd jtj = J.transpose() * J;
    const Eigen::VectorXd grad = J.transpose() * r;
    if (mu < 0.0) mu = 1e-3 * std::max(jtj.diagonal().maxCoeff(), 1e-12);

    Eigen::MatrixXd damped = jtj;
    for (int k = 0; k < m.nfree(); ++k)
      damped(k, k) += mu * std::max(jtj(k, k), 1e-12);
    const Eigen::VectorXd step = damped.ldlt().solve(-grad);
    const Eigen::VectorXd u_try = m.clamp(out.u + step);
    const double moved = (u_try - out.u).lpNorm<Eigen::Infinity>();

    bool ok = m.eval(u_try, r_try, nullptr);
    const double obj_try = ok ? comp_sum_squares(r_try) : kInf;
    if (ok && obj_try < out.obj) {
      const double rel = (out.obj - obj_try) / std::max(out.obj, 1e-300);
      out.u = u_try;
      out.obj = obj_try;
      m.eval(out.u, r, &J);
      mu = std::max(mu / 3.0, 1e-14);
      nu = 2.0;
      if (rel < opt.tol || moved < opt.step_tol || out.obj == 0.0) {
        out.converged = true;
        break;
      }
    } else {
      mu *= nu;
      nu = std::min(nu * 2.0, 1e8);
      if (mu > 1e15) {
        // No descent direction left at this scale; converged if the gradient
        // is flat (e.g. a parameter pinned at its clamp), else stuck.
        out.converged = grad.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + out.obj);
        break;
      }
    }
  }
  return out;
}

struct Prepared {
  Model model;
  std::vector<ParamSpec> all_spec;  // law order
  std::vector<std::string> names;
  std::vector<bool> held;
};

Prepared prepare_simple(const std::vector<Observation>& obs, const FitOptions& opt) {
  Prepared prep;
  prep.model.is_full_law = false;
  prep.model.obs = &obs;
  prep.names = {"alpha", "D", "C"};
  prep.all_spec = {kRate, kScale, kOffset};
  prep.held = {opt.fixed_alpha.has_value(), opt.fixed_D.has_value(), false};
  prep.model.base = {opt.fixed_alpha.value_or(0.5), opt.fixed_D.value_or(0.5), 0.0};
  if (opt.fixed_alpha) require(*opt.fixed_alpha >= 0.0, "fit: fixed alpha must be >= 0");
  if (opt.fixed_D) require(*opt.fixed_D > 0.0, "fit: fixed D must be > 0");
  for (int k = 0; k < 3; ++k)
    if (!prep.held[k]) {
      prep.model.free_idx.push_back(k);
      prep.model.fspec.push_back(prep.all_spec[k]);
    }
  return prep;
}

Prepared prepare_full(const std::vector<Observation>& obs, const FitOptions& opt) {
  Prepared prep;
  prep.model.is_full_law = true;
  prep.model.obs = &obs;
  prep.names = {"alpha", "beta", "gamma", "delta", "eps_irr"};
  prep.all_spec = {kRate, kRate, kOffset, kScale, kOffset};
  prep.held = {false, false, false, false, opt.fix_eps_zero};
  prep.model.base = {0.5, 0.5, 0.5, 1.0, 0.0};
  for (int k = 0; k < 5; ++k)
    if (!prep.held[k]) {
      prep.model.free_idx.push_back(k);
      prep.model.fspec.push_back(prep.all_spec[k]);
    }
  return prep;
}

void check_options(const FitOptions& opt) {
  require(opt.multistart >= 1, "fit: multistart must be >= 1");
  require(opt.max_iter >= 1, "fit: max_iter must be >= 1");
  require(opt.tol > 0.0 && opt.step_tol > 0.0, "fit: tolerances must be > 0");
}

std::size_t distinct_n(const std::vector<Observation>& obs) {
  std::set<std::int64_t> v;
  for (const auto& o : obs) v.insert(o.n);
  return v.size();
}

std::size_t distinct_s(const std::vector<Observation>& obs) {
  std::set<std::int64_t> v;
  for (const auto& o : obs) v.insert(o.s);
  return v.size();
}

double max_error(const std::vector<Observation>& obs) {
  double m = 0.0;
  for (const auto& o : obs) m = std::max(m, o.error);
  return m;
}

double min_error(const std::vector<Observation>& obs) {
  double m = kInf;
  for (const auto& o : obs) m = std::min(m, o.error);
  return m;
}

// Heuristic start plus seeded log-uniform draws, in internal coordinates.
std::vector<Eigen::VectorXd> start_points(const Prepared& prep,
                                          const std::vector<Observation>& obs,
                                          const FitOptions& opt) {
  const double lmax = max_error(obs);
  const double lmin = min_error(obs);
  std::vector<Eigen::VectorXd> starts;

  std::vector<double> h = prep.model.base;
  if (!prep.model.is_full_law) {
    const double c0 = 0.5 * lmin;
    double nmin = kInf, at_nmin = lmax;
    for (const auto& o : obs)
      if (double(o.n) < nmin) {
        nmin = double(o.n);
        at_nmin = o.error;
      }
    if (!prep.held[0]) h[0] = 0.5;
    if (!prep.held[2]) h[2] = c0;
    if (!prep.held[1])
      h[1] = std::max(at_nmin - (prep.held[2] ? 0.0 : c0), 1e-3 * lmax) * std::pow(nmin, h[0]);
  } else {
    double mean_log_l = 0.0, mean_log_s = 0.0;
    for (const auto& o : obs) {
      mean_log_l += std::log(o.error);
      mean_log_s += std::log(double(o.s));
    }
    mean_log_l /= double(obs.size());
    mean_log_s /= double(obs.size());
    h[0] = 0.5;
    h[1] = 0.5;
    h[2] = 0.5;
    h[3] = std::exp(mean_log_l + 0.5 * mean_log_s);
    if (!prep.held[4]) h[4] = 1e-3 * lmin;
  }
  Eigen::VectorXd u0(prep.model.nfree());
  for (int k = 0; k < prep.model.nfree(); ++k)
    u0[k] = to_internal(prep.model.fspec[k], h[prep.model.free_idx[k]]);
  starts.push_back(prep.model.clamp(u0));

  const double off_hi = std::max(lmax, 2e-4);
  Rng rng(derive_seed(opt.seed, "fit-start"));
  for (int t = 1; t < opt.multistart; ++t) {
    Eigen::VectorXd u(prep.model.nfree());
    for (int k = 0; k < prep.model.nfree(); ++k) {
      const int slot = prep.model.free_idx[k];
      double v = 0.0;
      if (!prep.model.is_full_law) {
        v = (slot == 0) ? rng.log_uniform(0.05, 2.0)
            : (slot == 1) ? rng.log_uniform(0.01, 10.0)
                          : rng.log_uniform(1e-4, off_hi);
      } else {
        v = (slot <= 1)    ? rng.log_uniform(0.05, 2.0)
            : (slot == 2)  ? rng.log_uniform(1e-3, 10.0)
            : (slot == 3)  ? rng.log_uniform(0.01, 100.0)
                           : rng.log_uniform(1e-4, off_hi);
      }
      u[k] = to_internal(prep.model.fspec[k], v);
    }
    starts.push_back(prep.model.clamp(u));
  }
  return starts;
}

FitReport run_fit(const Prepared& prep, const std::vector<Observation>& obs,
                  const FitOptions& opt) {
  LmOutcome best;
  bool any = false;
  for (const auto& u0 : start_points(prep, obs, opt)) {
    LmOutcome got = levmar(prep.model, u0, opt);
    if (!any || got.obj < best.obj) {
      best = got;
      any = true;
    }
  }
  require(any && std::isfinite(best.obj), "fit: no feasible start produced a finite objective");

  FitReport rep;
  const auto p = prep.model.assemble(best.u);
  rep.names = prep.names;
  rep.values = p;
  rep.held = prep.held;
  rep.objective = best.obj;
  rep.converged = best.converged;
  rep.iterations = best.iters;
  if (prep.model.is_full_law)
    rep.params = FullLawParams(p[0], p[1], p[2], p[3], p[4]);
  else
    rep.params = SimpleLawParams(p[0], p[1], p[2]);

  Eigen::VectorXd r;
  prep.model.eval(best.u, r, nullptr);
  rep.residuals.assign(r.data(), r.data() + r.size());

  for (int k = 0; k < prep.model.nfree(); ++k) {
    const auto& sp = prep.model.fspec[k];
    if (sp.log_scale && best.u[k] <= sp.ulo + 1e-9) {
      rep.warnings.push_back(std::string(rep.names[prep.model.free_idx[k]]) +
                             " reached its lower bound; the data do not identify it");
    }
  }
  if (!best.converged) rep.warnings.push_back("best restart stopped at max_iter without converging");

  rep.stderrs = standard_errors(rep, obs);
  bool singular = false;
  for (std::size_t k = 0; k < rep.stderrs.size(); ++k)
    if (!rep.held[k] && std::isinf(rep.stderrs[k])) singular = true;
  if (singular)
    rep.warnings.push_back("standard errors not identified (singular normal matrix)");
  return rep;
}

}  // namespace

const SimpleLawParams& FitReport::simple() const { return std::get<SimpleLawParams>(params); }
const FullLawParams& FitReport::full() const { return std::get<FullLawParams>(params); }

double objective_value(const std::vector<Observation>& obs,
                       const std::function<double(const Observation&)>& pred) {
  Eigen::VectorXd r(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double p = pred(obs[i]);
    if (!(p > 0.0) || !std::isfinite(p))
      throw std::invalid_argument("objective: prediction at observation " + std::to_string(i) +
                                  " is not positive and finite (" + std::to_string(p) + ")");
    r[i] = std::log(obs[i].error) - std::log(p);
  }
  return comp_sum_squares(r);
}

FitReport fit_simple(const std::vector<Observation>& obs, const FitOptions& opt) {
  check_options(opt);
  require(!obs.empty(), "fit: no observations");
  require(distinct_s(obs) <= 1,
          "simple-law fit: observations span " + std::to_string(distinct_s(obs)) +
              " distinct s; fit the full law instead");
  const std::size_t need =
      1 + (opt.fixed_alpha ? 0 : 1) + (opt.fixed_D ? 0 : 1);
  require(distinct_n(obs) >= need, "simple-law fit: need observations at >= " +
                                       std::to_string(need) + " distinct n, got " +
                                       std::to_string(distinct_n(obs)));
  return run_fit(prepare_simple(obs, opt), obs, opt);
}

FitReport fit_full(const std::vector<Observation>& obs, const FitOptions& opt) {
  check_options(opt);
  require(!obs.empty(), "fit: no observations");
  require(distinct_n(obs) >= 2, "full-law fit: only " + std::to_string(distinct_n(obs)) +
                                    " distinct n; the n-decay (alpha) is not identifiable");
  require(distinct_s(obs) >= 2, "full-law fit: only " + std::to_string(distinct_s(obs)) +
                                    " distinct s; the s-decay (beta) is not identifiable");
  const std::size_t nfree = opt.fix_eps_zero ? 4 : 5;
  require(obs.size() >= nfree, "full-law fit: fewer observations than free parameters");
  return run_fit(prepare_full(obs, opt), obs, opt);
}

std::vector<double> standard_errors(const FitReport& report, const std::vector<Observation>& obs) {
  require(!obs.empty(), "standard errors: no observations");
  const bool full_law = std::holds_alternative<FullLawParams>(report.params);
  const auto& p = report.values;
  std::vector<int> free_idx;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (!report.held[k]) free_idx.push_back(static_cast<int>(k));
  const int nf = static_cast<int>(free_idx.size());
  std::vector<double> out(p.size(), 0.0);
  if (nf == 0) return out;

  const int n = static_cast<int>(obs.size());
  Eigen::MatrixXd J(n, nf);
  std::vector<double> g(p.size());
  for (int i = 0; i < n; ++i) {
    const double pred = Model::predict(full_law, p, obs[i]);
    require(pred > 0.0 && std::isfinite(pred),
            "standard errors: model predicts a nonpositive value at observation " +
                std::to_string(i));
    Model::dpredict(full_law, p, obs[i], g);
    for (int k = 0; k < nf; ++k) J(i, k) = g[free_idx[k]] / pred;
  }
  const double dof = std::max(1, n - nf);
  const double sigma2 = report.objective / dof;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J.transpose() * J);
  const auto& ev = eig.eigenvalues();
  if (ev.minCoeff() <= std::max(ev.maxCoeff(), 0.0) * 1e-13) {
    for (int k = 0; k < nf; ++k) out[free_idx[k]] = kInf;
    return out;
  }
  const Eigen::MatrixXd inv =
      eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  for (int k = 0; k < nf; ++k) out[free_idx[k]] = std::sqrt(sigma2 * inv(k, k));
  return out;
}

LoglogFit fit_loglog_linear(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "loglog fit: x and y differ in length");
  require(x.size() >= 2, "loglog fit: need at least 2 points");
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd lx(n), ly(n);
  for (int i = 0; i < n; ++i) {
    require(x[i] > 0.0 && std::isfinite(x[i]), "loglog fit: x must be positive and finite");
    require(y[i] > 0.0 && std::isfinite(y[i]), "loglog fit: y must be positive and finite");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = lx.mean(), my = ly.mean();
  const double sxx = (lx.array() - mx).square().sum();
  require(sxx > 0.0, "loglog fit: x is constant");
  const double sxy = ((lx.array() - mx) * (ly.array() - my)).sum();
  LoglogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_tot = (ly.array() - my).square().sum();
  if (ss_tot == 0.0) {
    f.r2 = 1.0;  // constant y is fit exactly by the constant line
    return f;
  }
  const double ss_res = (ly.array() - (f.intercept + f.slope * lx.array())).square().sum();
  f.r2 = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return f;
}

Linearization linearize(const std::vector<Observation>& obs, const SimpleLawParams& p) {
  Linearization lin;
  for (const auto& o : obs) {
    const double v = o.error - p.C;
    if (v > 0.0)
      lin.points.push_back({double(o.n), v});
    else
      ++lin.omitted;
  }
  return lin;
}

Landscape landscape(const std::vector<Observation>& obs, const LandscapeOptions& opt) {
  require(!obs.empty(), "landscape: no observations");
  require(distinct_s(obs) <= 1, "landscape: observations span several s; use one curve");
  require(opt.alpha_steps >= 1 && opt.d_steps >= 1, "landscape: steps must be >= 1");
  require(opt.alpha_lo > 0.0 && opt.alpha_hi >= opt.alpha_lo,
          "landscape: alpha range must be positive and ascending");
  require(opt.d_lo > 0.0 && opt.d_hi >= opt.d_lo,
          "landscape: D range must be positive and ascending");

  const auto axis = [](double lo, double hi, int k) {
    Eigen::VectorXd a(k);
    for (int i = 0; i < k; ++i) a[i] = (k == 1) ? lo : lo + (hi - lo) * double(i) / double(k - 1);
    return a;
  };
  Landscape ls;
  ls.alpha_axis = axis(opt.alpha_lo, opt.alpha_hi, opt.alpha_steps);
  ls.d_axis = axis(opt.d_lo, opt.d_hi, opt.d_steps);
  ls.loss.resize(opt.alpha_steps, opt.d_steps);
  ls.c_opt.resize(opt.alpha_steps, opt.d_steps);

  const int n = static_cast<int>(obs.size());
  Eigen::VectorXd logl(n), nn(n);
  for (int i = 0; i < n; ++i) {
    logl[i] = std::log(obs[i].error);
    nn[i] = double(obs[i].n);
  }
  const double lmax = max_error(obs);

  Eigen::VectorXd powers(n), a_i(n);
  const auto loss_at = [&](double c) {
    double sum = 0.0, comp = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = logl[i] - std::log(a_i[i] + c);
      const double x = r * r;
      const double t = sum + x;
      comp += (std::abs(sum) >= std::abs(x)) ? (sum - t) + x : (x - t) + sum;
      sum = t;
    }
    return sum + comp;
  };

  ls.argmin.loss = kInf;
  for (int ia = 0; ia < opt.alpha_steps; ++ia) {
    for (int i = 0; i < n; ++i) powers[i] = std::pow(nn[i], -ls.alpha_axis[ia]);
    for (int id = 0; id < opt.d_steps; ++id) {
      const double dval = ls.d_axis[id];
      a_i = powers * dval;

      // Coarse scan over C in [0, max L], then golden-section refinement
      // around the best bracket. The optimum cannot exceed max L: beyond it
      // every residual grows monotonically.
      constexpr int kCoarse = 64;
      double best_c = 0.0, best_f = loss_at(0.0);
      const double c_lo = std::max(lmax * 1e-12, 1e-300);
      std::vector<double> cs(kCoarse + 1);
      cs[0] = 0.0;
      for (int k = 1; k <= kCoarse; ++k)
        cs[k] = c_lo * std::pow(lmax / c_lo, double(k - 1) / double(kCoarse - 1));
      int best_k = 0;
      for (int k = 1; k <= kCoarse; ++k) {
        const double f = loss_at(cs[k]);
        if (f < best_f) {
          best_f = f;
          best_c = cs[k];
          best_k = k;
        }
      }
      double lo = (best_k == 0) ? 0.0 : cs[best_k - 1];
      double hi = (best_k == kCoarse) ? lmax : cs[best_k + 1];
      constexpr double kGolden = 0.6180339887498949;
      double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
      double f1 = loss_at(x1), f2 = loss_at(x2);
      for (int k = 0; k < 80; ++k) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - kGolden * (hi - lo);
          f1 = loss_at(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + kGolden * (hi - lo);
          f2 = loss_at(x2);
        }
      }
      if (f1 < best_f) {
        best_f = f1;
        best_c = x1;
      }
      if (f2 < best_f) {
        best_f = f2;
        best_c = x2;
      }

      ls.loss(ia, id) = best_f;
      ls.c_opt(ia, id) = best_c;
      if (best_f < ls.argmin.loss)
        ls.argmin = {ls.alpha_axis[ia], dval, best_c, best_f};
    }
  }
  return ls;
}

double median_lower(std::vector<double> v) {
  require(!v.empty(), "median: empty input");
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

StabilizeResult stabilize_d(const std::vector<std::vector<Observation>>& groups,
                            const StabilizeOptions& opt) {
  require(!groups.empty(), "stabilize: no groups");
  require(opt.max_rounds >= 1, "stabilize: max_rounds must be >= 1");
  require(opt.round_tol > 0.0, "stabilize: round_tol must be > 0");
  require(opt.init_alpha > 0.0 && opt.init_d > 0.0, "stabilize: initial values must be > 0");

  StabilizeResult res;
  res.alpha_hat = opt.init_alpha;
  res.d_hat = opt.init_d;
  std::set<std::string> seen;

  for (int round = 1; round <= opt.max_rounds; ++round) {
    StabilizeRound r;
    // alpha first against the incoming d_hat, then D against the fresh
    // alpha_hat. A held D leaves each group's alpha exactly identified, so
    // this ordering walks along the alpha-D valley; the reverse order gets
    // trapped at a spurious shelf, and updating both from the previous
    // round flips between two states and never settles.
    // A group whose fit is rejected (too few points, say) drops out of the
    // round with a warning instead of sinking the whole estimate; the medians
    // run over whatever fits succeeded.
    const auto warn = [&](std::size_t g, const std::string& w) {
      const std::string line = "group " + std::to_string(g) + ": " + w;
      if (seen.insert(line).second) res.warnings.push_back(line);
    };
    for (std::size_t g = 0; g < groups.size(); ++g) {
      FitOptions fo = opt.fit;
      fo.fixed_D = res.d_hat;
      fo.fixed_alpha.reset();
      fo.seed = derive_seed(opt.fit.seed, "stab-a", round, g);
      try {
        const FitReport fa = fit_simple(groups[g], fo);
        r.alphas.push_back(fa.simple().alpha);
        for (const auto& w : fa.warnings) warn(g, w);
      } catch (const std::exception& e) {
        warn(g, std::string("skipped: ") + e.what());
      }
    }
    if (r.alphas.empty()) throw std::invalid_argument("stabilize: no group admits a fit");
    const double na = median_lower(r.alphas);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      FitOptions fo = opt.fit;
      fo.fixed_alpha = na;
      fo.fixed_D.reset();
      fo.seed = derive_seed(opt.fit.seed, "stab-d", round, g);
      try {
        const FitReport fd = fit_simple(groups[g], fo);
        r.ds.push_back(fd.simple().D);
        for (const auto& w : fd.warnings) warn(g, w);
      } catch (const std::exception& e) {
        warn(g, std::string("skipped: ") + e.what());
      }
    }
    if (r.ds.empty()) throw std::invalid_argument("stabilize: no group admits a fit");
    const double nd = median_lower(r.ds);
    const double moved = std::max(std::abs(na - res.alpha_hat), std::abs(nd - res.d_hat));
    r.alpha_hat = na;
    r.d_hat = nd;
    res.rounds.push_back(std::move(r));
    res.alpha_hat = na;
    res.d_hat = nd;
    if (moved < opt.round_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace translaw
