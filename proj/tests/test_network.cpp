#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "translaw/network.hpp"
#include "translaw/rng.hpp"

using namespace translaw;
using namespace translaw::theory;

TEST_CASE("initialization: paired rows, signed outputs, exact zero function") {
    NetworkState st = init_network(64, 2, 42);
    CHECK(st.width() == 64);
    CHECK(st.dim() == 2);
    for (int r = 0; r < 64; r += 2) {
        CHECK(st.b.row(r) == st.b.row(r + 1));
        CHECK(st.b.row(r).norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(st.a[r] * st.a[r + 1] == -1.0);
    }
    CHECK(st.a == st.a0);
    CHECK(st.b == st.b0);
    for (double theta : {0.0, 0.7, 2.9, 5.5}) {
        CHECK(network_eval(st, circle_point(theta)) == 0.0);
    }
    CHECK_THROWS_AS(init_network(7, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_network(0, 2, 1), std::invalid_argument);
}

TEST_CASE("same seed gives bitwise identical networks") {
    NetworkState a = init_network(32, 3, 123);
    NetworkState b = init_network(32, 3, 123);
    CHECK(a.a == b.a);
    CHECK(a.b == b.b);
    NetworkState c = init_network(32, 3, 124);
    CHECK(a.b != c.b);
}

TEST_CASE("two-unit network value matches hand arithmetic") {
    // a = (1, 1), b rows e1 and e2, x = e1: (tanh 1 + tanh 0) / sqrt 2.
    NetworkState st = init_network(2, 2, 1);
    st.a << 1.0, 1.0;
    st.b << 1.0, 0.0, 0.0, 1.0;
    Eigen::Vector2d x(1.0, 0.0);
    CHECK(network_eval(st, x) == doctest::Approx(0.538528392188366).epsilon(1e-14));
}

TEST_CASE("network_eval rejects off-sphere inputs") {
    NetworkState st = init_network(4, 2, 9);
    Eigen::Vector2d bad(0.5, 0.0);
    CHECK_THROWS_AS(network_eval(st, bad), std::invalid_argument);
}

TEST_CASE("one step from the signed start moves a by the label direction") {
    // At the start g = 0, so the residual is -y and each a_r gains
    // (eta/sqrt M) * y * sigma(b_r . x); b rows move along -residual * a_r x.
    const int m = 8;
    NetworkState st = init_network(m, 2, 5);
    Eigen::Vector2d x = circle_point(1.1);
    const double y = 0.7, eta = 0.25;
    NetworkState next = asgd_step(st, {x, y}, eta, 0.0);
    const double scale = eta * y / std::sqrt(double(m));
    for (int r = 0; r < m; ++r) {
        double want_a = st.a[r] + scale * std::tanh(st.b.row(r).dot(x));
        CHECK(next.a[r] == doctest::Approx(want_a).epsilon(1e-14));
        double su = std::tanh(st.b.row(r).dot(x));
        Eigen::Vector2d want_b =
            st.b.row(r).transpose() + scale * st.a[r] * (1.0 - su * su) * x;
        CHECK((next.b.row(r).transpose() - want_b).norm() < 1e-15);
    }
    // Snapshot fields never move.
    CHECK(next.a0 == st.a0);
    CHECK(next.b0 == st.b0);
}

TEST_CASE("zero residual with decay contracts toward the snapshot") {
    NetworkState st = init_network(6, 2, 8);
    // Drift the live parameters away from the snapshot first.
    st.a.array() += 0.3;
    st.b.array() *= 1.2;
    Eigen::Vector2d x = circle_point(0.4);
    const double y = network_eval(st, x);  // zero residual by construction
    const double eta = 0.1, lambda = 0.5;
    NetworkState next = asgd_step(st, {x, y}, eta, lambda);
    const double rho = 1.0 - eta * lambda;
    for (int r = 0; r < 6; ++r) {
        CHECK(next.a[r]
              == doctest::Approx(st.a0[r] + rho * (st.a[r] - st.a0[r])).epsilon(1e-12));
    }
}

TEST_CASE("asgd with no decay leaves an exactly fitted target alone") {
    NetworkState st = init_network(16, 2, 77);
    auto zero_target = circle_sampler([](double) { return 0.0; });
    AsgdResult res = run_asgd(st, zero_target, 50, 0.3, 0.0, 901);
    CHECK(res.final_state.a == st.a);
    CHECK(res.final_state.b == st.b);
    CHECK(res.averaged.a == st.a);
}

TEST_CASE("zero steps averages to the initial state") {
    NetworkState st = init_network(8, 2, 3);
    AsgdResult res = run_asgd(st, circle_sampler([](double t) { return std::sin(t); }), 0, 0.2,
                              0.01, 11);
    CHECK(res.averaged.a == st.a);
    CHECK(res.averaged.b == st.b);
    CHECK(res.final_state.a == st.a);
}

TEST_CASE("asgd runs are reproducible and seed sensitive") {
    NetworkState st = init_network(32, 2, 19);
    auto f = circle_sampler([](double t) { return std::cos(t); });
    AsgdResult r1 = run_asgd(st, f, 100, 0.2, 0.01, 555);
    AsgdResult r2 = run_asgd(st, f, 100, 0.2, 0.01, 555);
    AsgdResult r3 = run_asgd(st, f, 100, 0.2, 0.01, 556);
    CHECK(r1.final_state.a == r2.final_state.a);
    CHECK(r1.averaged.b == r2.averaged.b);
    CHECK(r1.final_state.a != r3.final_state.a);
}

TEST_CASE("step gradient matches finite differences of the regularized loss") {
    // loss(theta) = 1/2 (g(x) - y)^2 + lambda/2 |theta - theta0|^2; a step with
    // eta must equal theta - eta * grad evaluated at the pre-step parameters.
    Rng rng(derive_seed(4, "fd"));
    for (int trial = 0; trial < 10; ++trial) {
        NetworkState st = init_network(8, 2, derive_seed(4, "fd-net", trial));
        // Random drift so the regularizer term is active.
        for (int r = 0; r < st.width(); ++r) {
            st.a[r] += 0.2 * rng.gaussian();
            st.b.row(r) += 0.1 * Eigen::RowVector2d(rng.gaussian(), rng.gaussian());
        }
        Eigen::Vector2d x = circle_point(rng.uniform(0.0, 2.0 * M_PI));
        double y = rng.gaussian();
        const double lambda = 0.3, eta = 1.0;
        NetworkState stepped = asgd_step(st, {x, y}, eta, lambda);

        auto loss = [&](const NetworkState& q) {
            double g = 0.0;
            for (int r = 0; r < q.width(); ++r)
                g += q.a[r] * std::tanh(q.b.row(r).dot(x));
            g /= std::sqrt(double(q.width()));
            double reg = (q.a - q.a0).squaredNorm() + (q.b - q.b0).squaredNorm();
            return 0.5 * (g - y) * (g - y) + 0.5 * lambda * reg;
        };
        const double h = 1e-6;
        for (int r = 0; r < st.width(); ++r) {
            NetworkState up = st, dn = st;
            up.a[r] += h;
            dn.a[r] -= h;
            double grad = (loss(up) - loss(dn)) / (2.0 * h);
            double moved = st.a[r] - stepped.a[r];
            CHECK(moved == doctest::Approx(eta * grad).epsilon(1e-5));
        }
        NetworkState up = st, dn = st;
        up.b(0, 0) += h;
        dn.b(0, 0) -= h;
        double gradb = (loss(up) - loss(dn)) / (2.0 * h);
        CHECK(st.b(0, 0) - stepped.b(0, 0) == doctest::Approx(eta * gradb).epsilon(1e-5));
    }
}

TEST_CASE("circle helpers produce unit points and matching labels") {
    Eigen::Vector2d p = circle_point(2.2);
    CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p[0] == doctest::Approx(std::cos(2.2)));
    CHECK(p[1] == doctest::Approx(std::sin(2.2)));

    Rng rng(17);
    Sample s = circle_sampler([](double t) { return 3.0 * t; })(rng);
    CHECK(s.x.norm() == doctest::Approx(1.0).epsilon(1e-12));
    double theta = std::atan2(s.x[1], s.x[0]);
    if (theta < 0) theta += 2.0 * M_PI;
    CHECK(s.y == doctest::Approx(3.0 * theta).epsilon(1e-12));
}
