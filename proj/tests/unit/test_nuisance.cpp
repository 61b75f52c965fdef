#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qmode/errors.hpp"
#include "qmode/nuisance.hpp"
#include "qmode/random.hpp"
#include "qmode/simulation.hpp"

using namespace qmode;

namespace {

Dataset intercept_only(const std::vector<double>& y) {
    Eigen::VectorXd Y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return Dataset::make(Eigen::MatrixXd::Ones(Y.size(), 1), Y);
}

Dataset independent_normal(long n, std::uint64_t seed) {
    Rng rng = make_stream(seed, 1);
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd Y(n);
    for (long i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = uniform01(rng);
        Y(i) = z(rng);
    }
    return Dataset::make(X, Y);
}

}  // namespace

TEST_CASE("Powell J by hand count") {
    const Dataset d = intercept_only({-0.5, 0.1, 0.4});
    const JHat J = powell_J(d, Eigen::VectorXd::Zero(1), 0.3);
    CHECK(J.matrix(0, 0) == doctest::Approx(1.0 / 1.8).epsilon(1e-14));

    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    Eigen::MatrixXd X(15, 3);
    Eigen::VectorXd Y(15);
    for (int i = 0; i < 15; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = z(rng);
        X(i, 2) = z(rng);
        Y(i) = z(rng);
    }
    const Dataset data = Dataset::make(X, Y);
    const Eigen::Vector3d beta(0.1, 0.2, -0.1);
    const Eigen::VectorXd r = Y - X * beta;
    for (double h : {0.4, 0.9, 100.0}) {
        Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
        for (int i = 0; i < 15; ++i) {
            if (std::abs(r(i)) <= h) sum += X.row(i).transpose() * X.row(i);
        }
        const JHat Jh = powell_J(data, beta, h);
        CHECK((Jh.matrix - sum / (2.0 * 15.0 * h)).norm() < 1e-14);
        CHECK((Jh.matrix - Jh.matrix.transpose()).norm() == 0.0);
        CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Jh.matrix).eigenvalues().minCoeff() >= -1e-10);
    }
    CHECK_THROWS_AS(powell_J(d, Eigen::VectorXd::Zero(1), 0.0), ArgumentError);
    CHECK_THROWS_AS(powell_J(d, Eigen::VectorXd::Constant(1, 10.0), 0.3), DegenerateEstimateError);
}

TEST_CASE("Powell J approximates the density at the median") {
    Rng rng = make_stream(3, 0);
    std::normal_distribution<double> z;
    std::vector<double> y(100000);
    for (auto& v : y) v = z(rng);
    const Dataset d = intercept_only(y);
    std::vector<double> sorted = y;
    std::nth_element(sorted.begin(), sorted.begin() + 50000, sorted.end());
    const JHat J = estimate_J(d, Eigen::VectorXd::Constant(1, sorted[50000]), 0.5);
    CHECK(std::abs(J.matrix(0, 0) - 0.398942) < 0.02);
    CHECK(J.bandwidth_check > 0.0);
}

TEST_CASE("Hall-Sheather rule") {
    // n^{-1/3} z^{2/3} (1.5 phi(0)^2)^{1/3} at tau = 0.5
    const double expected = 0.1 * std::pow(1.959963984540054, 2.0 / 3.0) *
                            std::cbrt(1.5 * std::pow(0.3989422804014327, 2));
    CHECK(hall_sheather_bandwidth(1000, 0.5) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(hall_sheather_bandwidth(2000, 0.3) < hall_sheather_bandwidth(1000, 0.3));
    for (double t : {0.1, 0.25, 0.4}) {
        CHECK(hall_sheather_bandwidth(500, t) == doctest::Approx(hall_sheather_bandwidth(500, 1.0 - t)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(hall_sheather_bandwidth(1000, 1.0), ArgumentError);
    CHECK_THROWS_AS(hall_sheather_bandwidth(1, 0.5), ArgumentError);
}

TEST_CASE("solve_J with and without ridge") {
    JHat J;
    J.matrix = Eigen::Matrix2d{{2.0, 0.5}, {0.5, 1.0}};
    const Eigen::Vector2d x(1.0, 0.3);
    std::vector<std::string> warnings;
    CHECK((solve_J(J, x, &warnings) - J.matrix.inverse() * x).norm() < 1e-12);
    CHECK(warnings.empty());
    J.matrix = Eigen::Matrix2d{{1.0, 1.0}, {1.0, 1.0}};
    const Eigen::VectorXd v = solve_J(J, x, &warnings);
    CHECK(v.allFinite());
    CHECK(warnings.size() == 1);
}

TEST_CASE("covariate roles are inferred from the design") {
    Eigen::MatrixXd X(4, 4);
    X << 1, 0.1, 1, 5, 1, 0.7, 0, 5, 1, 0.3, 1, 5, 1, 0.9, 0, 5;
    const CovariateRoles r = CovariateRoles::infer(X);
    CHECK(r.continuous == 1);
    CHECK(r.matched == std::vector<int>{2});
}

TEST_CASE("f2 estimate recovers the normal curvature") {
    const Dataset d = independent_normal(100000, 9);
    const double f2 = f2_kernel_estimate(d, Eigen::Vector2d(1.0, 0.5), 0.0, 0.85, CovariateRoles::infer(d.X));
    CHECK(std::abs(f2 + 0.398942) < 0.05);
}

TEST_CASE("f2 estimate is mirror symmetric about m_hat") {
    const Dataset d = independent_normal(500, 2);
    const double m = 0.3;
    const Dataset mirrored = d.affine_response(-1.0, 2.0 * m);
    const auto roles = CovariateRoles::infer(d.X);
    const Eigen::Vector2d x(1.0, 0.4);
    CHECK(std::abs(f2_kernel_estimate(d, x, m, 0.6, roles) - f2_kernel_estimate(mirrored, x, m, 0.6, roles)) < 1e-10);
}

TEST_CASE("f2 estimate on the linear normal model is centred near the truth") {
    double mean = 0.0;
    const auto x = design_point(ModelKind::lm_normal, 0.5);
    for (std::uint64_t s = 1; s <= 40; ++s) {
        const Dataset d = generate(SimModel{ModelKind::lm_normal, 2000, s, 0.0});
        mean += f2_kernel_estimate(d, x, 2.5, 0.85, CovariateRoles::infer(d.X)) / 40.0;
    }
    CHECK(std::abs(mean + 0.04987) < 0.3 * 0.04987);
}

TEST_CASE("f2 estimate errors") {
    const Dataset d = independent_normal(200, 1);
    const auto roles = CovariateRoles::infer(d.X);
    CHECK_THROWS_AS(f2_kernel_estimate(d, Eigen::Vector2d(1.0, 5.0), 0.0, 0.5, roles), DegenerateEstimateError);
    CHECK_THROWS_AS(f2_kernel_estimate(d, Eigen::Vector2d(1.0, 0.5), 0.0, 0.0, roles), ArgumentError);
}

TEST_CASE("omega selection") {
    const Dataset d = generate(SimModel{ModelKind::lm_normal, 1000, 17, 0.0});
    const auto x = design_point(ModelKind::lm_normal, 0.5);
    const auto roles = CovariateRoles::infer(d.X);
    const auto grid = default_omega_grid();
    CHECK(grid.size() == 13);
    CHECK(grid.front() == doctest::Approx(0.05));
    CHECK(grid.back() == doctest::Approx(1.25));
    const OmegaSelection a = select_omega(d, x, 2.5, grid, 3.0, 40, 99, 0.85, roles);
    const OmegaSelection b = select_omega(d, x, 2.5, grid, 3.0, 40, 99, 0.85, roles);
    CHECK(a.omega == b.omega);
    CHECK(a.subgrid == b.subgrid);
    CHECK_FALSE(a.used_fallback);
    CHECK(a.subgrid.size() == 7);
    CHECK(a.omega > 0.0);
    CHECK(std::find(a.subgrid.begin(), a.subgrid.end(), a.omega) != a.subgrid.end());
    CHECK(std::find(grid.begin(), grid.end(), a.step2_omega) != grid.end());

    const OmegaSelection f = select_omega(d, x, 2.5, grid, 1e12, 10, 1, 0.85, roles);
    CHECK(f.used_fallback);
    CHECK(f.omega == 0.85);
    CHECK_FALSE(f.warnings.empty());
}

TEST_CASE("sparsity curvature via the alternative expression") {
    CHECK(sparsity_second_derivative(-1.0, 1.0).value == doctest::Approx(1.0));
    CHECK_FALSE(sparsity_second_derivative(-1.0, 1.0).wrong_sign);
    const double s = 2.0 / 0.3989422804014327;
    CHECK(sparsity_second_derivative(-0.3989422804014327 / 8.0, s).value == doctest::Approx(31.5).epsilon(0.01));
    const auto bad = sparsity_second_derivative(0.1, 1.0);
    CHECK(bad.value == doctest::Approx(-0.1));
    CHECK(bad.wrong_sign);
    CHECK_THROWS_AS(sparsity_second_derivative(-1.0, 0.0), ArgumentError);
    CHECK(floor_curvature(1e-9) == 1e-6);
    CHECK(floor_curvature(-1e-9) == -1e-6);
    CHECK(floor_curvature(-3.0) == -3.0);
}

TEST_CASE("influence function identities") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 50; ++trial) {
        InfluenceSpec spec;
        spec.h = 0.05 + 0.25 * u(rng);
        spec.tau_hat = spec.h + (1.0 - 2.0 * spec.h) * u(rng);
        spec.ratio = -std::exp(z(rng));
        spec.x = Eigen::Vector2d(1.0, u(rng));
        spec.jinv_x = Eigen::Vector2d(z(rng), z(rng));
        const Eigen::Vector2d xp(1.0, z(rng));
        const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double v) { return influence_eval(spec, v, xp); }, spec.tau_hat - spec.h, spec.tau_hat + spec.h, 10, 1e-14);
        CHECK(std::abs(integral) < 1e-9);
        CHECK(influence_eval(spec, spec.tau_hat, xp) == 0.0);
        const double v = 0.7 * spec.h;
        CHECK(influence_eval(spec, spec.tau_hat + v, xp) ==
              doctest::Approx(-influence_eval(spec, spec.tau_hat - v, xp)).epsilon(1e-9));
        if (spec.tau_hat + spec.h < 0.999) CHECK(influence_eval(spec, spec.tau_hat + spec.h + 1e-3, xp) == 0.0);
    }
}

TEST_CASE("influence second moment: Monte Carlo against quadrature") {
    InfluenceSpec spec{Eigen::Vector2d(1.0, 0.5), 0.45, -2.0, Eigen::Vector2d(0.8, -0.3), 0.2};
    const Eigen::Vector2d xp(1.0, 0.25);
    const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double v) { return std::pow(influence_eval(spec, v, xp), 2); }, 0.25, 0.65, 10, 1e-14);
    Rng rng = make_stream(1, 2);
    double mc = 0.0;
    const int R = 1000000;
    for (int r = 0; r < R; ++r) mc += std::pow(influence_eval(spec, uniform01(rng), xp), 2);
    mc /= R;
    CHECK(std::abs(mc - quad) < 0.01 * quad);
}
