#include "translaw/rates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace translaw::theory {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

void check_source(double r, const char* name) {
  require(r >= 0.5 && r <= 1.0, std::string(name) + " must lie in [1/2, 1]");
}

}  // namespace

double pretrain_rate(double r0, double xi) {
  check_source(r0, "r0");
  require(xi > 1.0, "xi must be > 1");
  return 2.0 * r0 * xi / (2.0 * r0 * xi + 1.0);
}

double optimal_lambda0(double t0, double r0, double xi) {
  check_source(r0, "r0");
  require(xi > 1.0, "xi must be > 1");
  require(t0 >= 1.0, "t0 must be >= 1");
  return std::pow(t0, -xi / (2.0 * r0 * xi + 1.0));
}

BoundTerms bound_terms(double t1, double lambda1, double eta1, double xi, double r0, double r1,
                       double R0) {
  require(t1 >= 1.0, "bound terms: t1 must be >= 1");
  require(lambda1 > 0.0, "bound terms: lambda1 must be > 0");
  require(eta1 > 0.0, "bound terms: eta1 must be > 0");
  require(xi > 1.0, "bound terms: xi must be > 1");
  check_source(r0, "r0");
  check_source(r1, "r1");
  require(R0 >= 0.0, "bound terms: R0 must be >= 0");

  const double te2 = t1 * t1 * eta1 * eta1;
  BoundTerms out;
  out.terms = {{
      {"a0", std::pow(lambda1, 2.0 * r0)},
      {"a1", std::pow(lambda1, 2.0 * r1)},
      {"b", R0 / (t1 * lambda1)},
      {"c", std::pow(lambda1, 2.0 * r1 - 1.0) / t1},
      {"d", 1.0 / t1},
      {"e", R0 / (te2 * lambda1 * lambda1)},
      {"f", std::pow(lambda1, 2.0 * r1 - 2.0) / te2},
      {"g", 1.0 / (te2 * lambda1)},
      {"h", std::pow(lambda1, -1.0 / xi) / t1},
  }};
  out.total = 0.0;
  for (int i = 0; i < 9; ++i) {
    out.total += out.terms[i].value;
    if (out.terms[i].value > out.terms[out.dominant].value) out.dominant = i;
  }
  return out;
}

RatePrediction rate_predict(double r0, double r1, double xi, double zeta) {
  check_source(r0, "r0");
  check_source(r1, "r1");
  require(xi > 1.0, "xi must be > 1");
  require(zeta >= 0.0 && zeta < 1.0, "zeta must lie in [0, 1)");

  RatePrediction p;
  const auto fill_I = [&](double r) {
    p.lambda1_t1_exp = -(1.0 - zeta) / (r + 1.0);
    p.lambda1_r0_exp = 1.0 / (2.0 * r + 2.0);
    p.t1_exp = 2.0 * r * (1.0 - zeta) / (r + 1.0);
    p.r0_exp = r / (r + 1.0);
  };
  const auto fill_II = [&](double r) {
    p.lambda1_t1_exp = -1.0 / (2.0 * r + 1.0);
    p.lambda1_r0_exp = 1.0 / (2.0 * r + 1.0);
    p.t1_exp = 2.0 * r / (2.0 * r + 1.0);
    p.r0_exp = 2.0 * r / (2.0 * r + 1.0);
  };

  if (r0 >= r1) {
    const double thr = r1 / (2.0 * r1 + 1.0);
    p.on_boundary = (zeta == thr);
    if (zeta >= thr) {
      p.case_label = "I-A";
      fill_I(r1);
    } else {
      p.case_label = "II-A";
      fill_II(r1);
    }
  } else {
    const double thr_small = r0 / (2.0 * r0 + 1.0);
    const double thr_shift = ((2.0 * r1 - r0) * xi + 1.0 - xi) / (2.0 * r1 * xi + 1.0);
    const double thr_big = std::max(thr_small, thr_shift);
    p.on_boundary = (zeta == thr_big || zeta == thr_small);
    if (zeta >= thr_big) {
      p.case_label = "I-B";
      fill_I(r0);
    } else if (zeta <= thr_small) {
      p.case_label = "II-B";
      fill_II(r0);
      const double reach = r0 + (xi - 1.0) / (2.0 * xi);
      if (r1 > reach) {
        p.condition_ok = false;
        p.violated = "r1 <= r0 + (xi - 1)/(2 xi)";
      }
    } else {
      // Between the two thresholds no row applies; report against the large-
      // step row, whose missing inequality this is.
      p.case_label = "I-B";
      fill_I(r0);
      p.condition_ok = false;
      p.violated = "zeta >= max(r0/(2 r0 + 1), ((2 r1 - r0) xi + 1 - xi)/(2 r1 xi + 1))";
    }
  }
  p.t0_exp = pretrain_rate(r0, xi) * p.r0_exp;
  return p;
}

bool averaging_step_ok(double eta1, double lambda1) {
  require(eta1 > 0.0 && lambda1 >= 0.0, "step check: eta1 > 0 and lambda1 >= 0 required");
  return 4.0 * (6.0 + lambda1) * eta1 <= 1.0;
}

}  // namespace translaw::theory
