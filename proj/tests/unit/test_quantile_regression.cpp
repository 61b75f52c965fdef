#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "qmode/errors.hpp"
#include "qmode/quantile_regression.hpp"
#include "qmode/simulation.hpp"

using namespace qmode;

TEST_CASE("intercept-only median") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(5, 1);
    Eigen::VectorXd Y(5);
    Y << 4, 1, 5, 3, 2;
    const auto beta = fit_quantile(Dataset::make(X, Y), 0.5);
    CHECK(beta(0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("exact fit is recovered at every tau") {
    Eigen::MatrixXd X(8, 2);
    Eigen::VectorXd Y(8);
    for (int i = 0; i < 8; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = 0.1 * i * i - 0.3;
        Y(i) = 2.0 + 5.0 * X(i, 1);
    }
    const Dataset data = Dataset::make(X, Y);
    for (double tau : {0.05, 0.3, 0.5, 0.9}) {
        const auto beta = fit_quantile(data, tau);
        CHECK(std::abs(beta(0) - 2.0) < 1e-8);
        CHECK(std::abs(beta(1) - 5.0) < 1e-8);
    }
    const QuantilePath path = fit_path(data, {0.2, 0.5, 0.8});
    for (int k = 0; k < 3; ++k) {
        CHECK(std::abs(path.betas(k, 0) - 2.0) < 1e-8);
        CHECK(std::abs(path.betas(k, 1) - 5.0) < 1e-8);
    }
    CHECK(crossing_diagnostic(path, Eigen::Vector2d(1.0, 0.4)).empty());
}

TEST_CASE("matches the basic-solution enumeration oracle") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> nd(3, 8);
    std::uniform_int_distribution<int> dd(1, 3);
    std::uniform_real_distribution<double> td(0.02, 0.98);
    for (int trial = 0; trial < 100; ++trial) {
        const long n = nd(rng);
        const long d = std::min<long>(dd(rng), n);
        const Dataset data = testing::random_dataset(rng, n, d);
        const double tau = td(rng);
        const double oracle = testing::brute_force_loss(data, tau);
        const double loss = check_loss(data, fit_quantile(data, tau), tau);
        CHECK(loss <= oracle * (1.0 + 1e-8) + 1e-12);
    }
}

TEST_CASE("n = 6, d = 2 at tau = 0.25 against enumeration") {
    std::mt19937_64 rng(2);
    const Dataset data = testing::random_dataset(rng, 6, 2);
    const double oracle = testing::brute_force_loss(data, 0.25);
    CHECK(check_loss(data, fit_quantile(data, 0.25), 0.25) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("optimality: subgradient, counting and perturbations") {
    std::mt19937_64 rng(11);
    const Dataset data = testing::random_dataset(rng, 300, 3);
    std::normal_distribution<double> z;
    for (double tau : {0.1, 0.37, 0.5, 0.83}) {
        const Eigen::VectorXd beta = fit_quantile(data, tau);
        const Eigen::VectorXd r = data.Y - data.X * beta;
        long below = 0;
        long at_or_below = 0;
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            below += r(i) < -1e-9;
            at_or_below += r(i) <= 1e-9;
        }
        const double nt = tau * static_cast<double>(data.n());
        CHECK(static_cast<double>(below) <= nt + 1e-9);
        CHECK(nt <= static_cast<double>(at_or_below) + 1e-9);

        const double loss = check_loss(data, beta, tau);
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd delta(3);
            for (int j = 0; j < 3; ++j) delta(j) = z(rng);
            delta *= 1e-3 / delta.norm();
            CHECK(check_loss(data, beta + delta, tau) >= loss - 1e-9);
        }
    }
}

TEST_CASE("warm-started path matches independent solves") {
    const Dataset data = generate(SimModel{ModelKind::lm_normal, 400, 3, 0.0});
    const auto taus = uniform_grid(0.05, 0.95, 0.01);
    const QuantilePath path = fit_path(data, taus);
    const Eigen::Vector2d x(1.0, 0.5);
    const auto fitted = path.fitted(x);
    for (std::size_t k = 0; k < taus.size(); k += 7) {
        const double single = x.dot(fit_quantile(data, taus[k]));
        CHECK(std::abs(single - fitted[k]) < 1e-7);
        const double loss_path = check_loss(data, path.betas.row(static_cast<Eigen::Index>(k)).transpose(), taus[k]);
        const double loss_single = check_loss(data, fit_quantile(data, taus[k]), taus[k]);
        CHECK(loss_path <= loss_single * (1.0 + 1e-10));
    }
    const QuantilePath one = fit_path(data, {0.4});
    CHECK((one.betas.row(0).transpose() - fit_quantile(data, 0.4)).norm() < 1e-9);
}

TEST_CASE("affine equivariance of fitted quantiles") {
    const Dataset data = generate(SimModel{ModelKind::lm_lognormal, 300, 5, 0.0});
    const Dataset moved = data.affine_response(2.5, -4.0);
    const Eigen::Vector2d x(1.0, 0.3);
    for (double tau : {0.2, 0.5, 0.7}) {
        const double a = x.dot(fit_quantile(data, tau));
        const double b = x.dot(fit_quantile(moved, tau));
        CHECK(std::abs(b - (2.5 * a - 4.0)) < 1e-7);
    }
}

TEST_CASE("crossing diagnostic") {
    QuantilePath path;
    path.taus = {0.1, 0.2, 0.3, 0.4};
    path.betas = Eigen::MatrixXd(4, 1);
    path.betas << 1.0, 2.0, 1.5, 3.0;
    const auto idx = crossing_diagnostic(path, Eigen::VectorXd::Ones(1));
    REQUIRE(idx.size() == 1);
    CHECK(idx[0] == 1);
    CHECK_THROWS_AS(crossing_diagnostic(path, Eigen::VectorXd::Ones(2)), ArgumentError);

    const Dataset small = generate(SimModel{ModelKind::lm_normal, 200, 9, 0.0});
    const QuantilePath p = fit_path(small, uniform_grid(0.05, 0.95, 0.005));
    const auto a = crossing_diagnostic(p, Eigen::Vector2d(1.0, 0.5));
    const auto fitted = p.fitted(Eigen::Vector2d(1.0, 0.5));
    std::size_t recount = 0;
    for (std::size_t k = 0; k + 1 < fitted.size(); ++k) recount += fitted[k + 1] < fitted[k];
    CHECK(a.size() == recount);
    CHECK(crossing_diagnostic(fit_path(small, uniform_grid(0.05, 0.95, 0.005)), Eigen::Vector2d(1.0, 0.5)) == a);
}

TEST_CASE("argument and rank errors") {
    Eigen::MatrixXd X(4, 2);
    X << 1, 2, 1, 2, 1, 2, 1, 2;
    CHECK_THROWS_AS(Dataset::make(X, Eigen::VectorXd::Ones(4)), EstimationError);
    Eigen::MatrixXd Z = Eigen::MatrixXd::Ones(3, 1);
    Eigen::VectorXd Y(3);
    Y << 1, 2, std::nan("");
    CHECK_THROWS_AS(Dataset::make(Z, Y), ArgumentError);
    const Dataset ok = Dataset::make(Z, Eigen::Vector3d(1, 2, 3));
    CHECK_THROWS_AS(fit_quantile(ok, 0.0), ArgumentError);
    CHECK_THROWS_AS(fit_quantile(ok, 1.0), ArgumentError);
    CHECK_THROWS_AS(fit_path(ok, {0.5, 0.4}), ArgumentError);
}

TEST_CASE("iteration cap raises a convergence error with the count") {
    std::mt19937_64 rng(3);
    const Dataset data = testing::random_dataset(rng, 200, 3);
    QuantileSolver solver(data, 1);
    try {
        solver.solve(0.3);
        FAIL("expected a convergence error");
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() >= 1);
    }
}
