#include "doctest.h"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "translaw/kernels.hpp"
#include "translaw/network.hpp"
#include "translaw/rng.hpp"

using namespace translaw;
using namespace translaw::theory;

TEST_CASE("monte carlo estimate is exactly symmetric under a shared seed") {
    Eigen::Vector2d x = circle_point(0.3), y = circle_point(2.1);
    NtkEstimate ab = ntk_eval(x, y, 20000, 7);
    NtkEstimate ba = ntk_eval(y, x, 20000, 7);
    CHECK(ab.value == ba.value);
    CHECK(ab.std_error > 0.0);
}

TEST_CASE("monte carlo error shrinks like the reported standard error") {
    Eigen::Vector2d x = circle_point(1.0), y = circle_point(1.9);
    // Reference from a separate long run.
    double ref = ntk_eval(x, y, 4000000, 1001).value;
    double within = 0;
    const int tries = 20;
    for (int i = 0; i < tries; ++i) {
        NtkEstimate e = ntk_eval(x, y, 20000, 2000 + i);
        if (std::fabs(e.value - ref) <= 3.0 * e.std_error) within += 1;
    }
    CHECK(within >= tries - 2);  // 3-sigma misses should be rare
}

TEST_CASE("batch estimator agrees with itself across pair order and points") {
    Rng rng(derive_seed(5, "pts"));
    Eigen::MatrixXd pts(6, 2);
    for (int i = 0; i < 6; ++i) pts.row(i) = circle_point(rng.uniform(0.0, 6.28)).transpose();
    std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 3}, {1, 1}, {4, 5}};
    Eigen::VectorXd v = ntk_eval_batch(pts, pairs, 200000, 99);
    REQUIRE(v.size() == 4);
    // The shared draw stream makes each entry equal an ntk_eval value only in
    // expectation, but batch output must be invariant to pair order.
    std::vector<std::pair<int, int>> swapped = {{4, 5}, {1, 1}, {2, 3}, {0, 1}};
    Eigen::VectorXd w = ntk_eval_batch(pts, swapped, 200000, 99);
    CHECK(v[0] == w[3]);
    CHECK(v[1] == w[2]);
    CHECK(v[2] == w[1]);
    CHECK(v[3] == w[0]);
    // And close to the single-pair estimator on a long run.
    NtkEstimate single = ntk_eval(pts.row(0).transpose(), pts.row(1).transpose(), 200000, 2);
    CHECK(v[0] == doctest::Approx(single.value).epsilon(0.02));
}

TEST_CASE("width-M kernel approaches the wide reference as M grows") {
    Eigen::Vector2d x = circle_point(0.4), y = circle_point(1.3);
    double ref = ntk_eval(x, y, 4000000, 31).value;
    auto avg_abs_err = [&](int m) {
        double s = 0;
        const int reps = 24;
        for (int i = 0; i < reps; ++i) {
            NetworkState st = init_network(m, 2, derive_seed(6, "grow", m, i));
            s += std::fabs(rf_kernel_eval(st, x, y) - ref);
        }
        return s / reps;
    };
    double at64 = avg_abs_err(64), at4096 = avg_abs_err(4096);
    CHECK(at4096 < 0.5 * at64);  // expect roughly an 8x drop
}

TEST_CASE("designed kernel sums the stated cosine series") {
    // xi = 2, two modes: k = cos(d) + cos(2d)/4, scaled.
    for (double scale : {1.0, 2.0}) {
        for (double d : {0.0, 0.5, 2.0}) {
            double want = scale * (std::cos(d) + std::cos(2 * d) / 4.0);
            CHECK(designed_kernel_eval(2.0, 2, 0.7, 0.7 - d, scale)
                  == doctest::Approx(want).epsilon(1e-12));
        }
    }
    // Diagonal value approaches scale * pi^2/6 as modes grow at xi = 2.
    CHECK(designed_kernel_eval(2.0, 4000, 1.0, 1.0, 2.0)
          == doctest::Approx(2.0 * 1.64493406684823).epsilon(1e-3));
    CHECK_THROWS_AS(designed_kernel_eval(1.0, 8, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(designed_kernel_eval(2.0, 0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("kernel_eval_circle dispatches every backend") {
    DesignedSpectrum ds{2.0, 8, 1.0};
    CHECK(kernel_eval_circle(KernelSpec{ds}, 0.9, 0.9 - 0.4)
          == doctest::Approx(designed_kernel_eval(2.0, 8, 0.9, 0.5)).epsilon(1e-15));

    auto snap = std::make_shared<const NetworkState>(init_network(128, 2, 12));
    RandomFeature rf{snap};
    CHECK(kernel_eval_circle(KernelSpec{rf}, 0.2, 1.4)
          == doctest::Approx(rf_kernel_eval(*snap, circle_point(0.2), circle_point(1.4)))
                 .epsilon(1e-15));

    NtkMonteCarlo mc{50000, 5};
    double v1 = kernel_eval_circle(KernelSpec{mc}, 0.2, 1.4);
    double v2 = kernel_eval_circle(KernelSpec{mc}, 1.4, 0.2);
    CHECK(v1 == v2);
}

TEST_CASE("gram matrices of both kernels are positive semidefinite") {
    Rng rng(derive_seed(8, "psd"));
    for (int trial = 0; trial < 20; ++trial) {
        const int npts = 12;
        std::vector<double> th(npts);
        for (auto& t : th) t = rng.uniform(0.0, 2.0 * M_PI);

        Eigen::MatrixXd gd(npts, npts), gm(npts, npts);
        NetworkState st = init_network(64, 2, derive_seed(8, "psd-net", trial));
        for (int i = 0; i < npts; ++i) {
            for (int j = 0; j < npts; ++j) {
                gd(i, j) = designed_kernel_eval(2.0, 16, th[i], th[j]);
                gm(i, j) = rf_kernel_eval(st, circle_point(th[i]), circle_point(th[j]));
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sd(gd), sm(gm);
        CHECK(sd.eigenvalues().minCoeff() >= -1e-8);
        CHECK(sm.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("monte carlo kernel input validation") {
    Eigen::Vector2d x = circle_point(0.0);
    CHECK_THROWS_AS(ntk_eval(x, Eigen::Vector3d(1, 0, 0), 100, 1), std::invalid_argument);
    CHECK_THROWS_AS(ntk_eval(x, x, 1, 1), std::invalid_argument);
    Eigen::Vector2d off(2.0, 0.0);
    CHECK_THROWS_AS(ntk_eval(off, x, 100, 1), std::invalid_argument);
}
