#include <algorithm>
#include <doctest.h>

#include <cmath>

#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>

#include "helpers.hpp"
#include "qmode/mode_estimator.hpp"
#include "qmode/simulation.hpp"

using namespace qmode;

TEST_CASE("quadratic sparsity is minimised at its vertex") {
    // Q(t) = t + (t - 0.3)^3 / 3 has s(t) = 1 + (t - 0.3)^2 away from smoothing.
    auto [t, v] = testing::tabulate([](double s) { return s + std::pow(s - 0.3, 3) / 3.0; }, 0.0, 1.0, 2001);
    const SmoothedQuantile sq(t, v, 0.05);
    const TauSearch r = estimate_tau(sq, 0.1);
    CHECK(std::abs(r.tau_hat - 0.3) < 1e-7);
    CHECK_FALSE(r.boundary_flag);
}

TEST_CASE("normal quantile path gives tau_hat = 0.5") {
    const boost::math::normal z;
    auto [t, v] = testing::tabulate([&](double s) { return 2.5 + 2.0 * boost::math::quantile(z, s); }, 0.001, 0.999, 3001);
    const SmoothedQuantile sq(t, v, 0.08);
    CHECK(std::abs(estimate_tau(sq, 0.1).tau_hat - 0.5) < 0.01);
}

TEST_CASE("monotone sparsity hits the boundary and is flagged") {
    auto [t, v] = testing::tabulate([](double s) { return s + s * s; }, 0.0, 1.0, 2001);
    const TauSearch lo = estimate_tau(SmoothedQuantile(t, v, 0.05), 0.1);
    CHECK(lo.boundary_flag);
    CHECK(lo.tau_hat == doctest::Approx(0.1).epsilon(1e-6));
    auto [t2, w] = testing::tabulate([](double s) { return -(1.0 - s) * (1.0 - s); }, 0.0, 1.0, 2001);
    const TauSearch hi = estimate_tau(SmoothedQuantile(t2, w, 0.05), 0.1);
    CHECK(hi.boundary_flag);
    CHECK(hi.tau_hat == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(hi.tau_hat <= 0.9);
    CHECK(lo.tau_hat >= 0.1);
}

TEST_CASE("lognormal error: tau_hat near the analytic sparsity minimiser") {
    const boost::math::lognormal ln(1.0, 0.8);
    double best = 0.0;
    double best_s = 1e300;
    for (int k = 1; k < 100000; ++k) {
        const double tau = k / 100000.0;
        if (tau < 0.1 || tau > 0.9) continue;
        const double s = 1.0 / boost::math::pdf(ln, boost::math::quantile(ln, tau));
        if (s < best_s) {
            best_s = s;
            best = tau;
        }
    }
    auto [t, v] = testing::tabulate([&](double u) { return boost::math::quantile(ln, std::clamp(u, 1e-9, 1.0 - 1e-9)); },
                                    0.0, 1.0, 4001);
    CHECK(std::abs(estimate_tau(SmoothedQuantile(t, v, 0.1), 0.1).tau_hat - best) < 0.02);
    constexpr int reps = 20;
    double mean = 0.0;
    double sq = 0.0;
    for (std::uint64_t s = 1; s <= reps; ++s) {
        const Dataset data = generate(SimModel{ModelKind::lm_lognormal, 2000, s, 0.0});
        const double tau = estimate_mode(data, design_point(ModelKind::lm_lognormal, 0.5), 0.1, 0.1).tau_hat;
        mean += tau / reps;
        sq += tau * tau / reps;
    }
    const double sd = std::sqrt(std::max(sq - mean * mean, 0.0));
    CHECK(std::abs(mean - best) < 0.02 + 3.0 * sd / std::sqrt(double(reps)));
}

TEST_CASE("first-order condition at interior solutions") {
    const Dataset data = generate(SimModel{ModelKind::lm_normal, 1000, 4, 0.0});
    const auto x = design_point(ModelKind::lm_normal, 0.5);
    const QuantilePath path = fit_path(data, path_grid(0.25, 0.25, 0.1));
    const SmoothedQuantile sq(path, x, 0.25);
    const TauSearch r = estimate_tau(sq, 0.1);
    REQUIRE_FALSE(r.boundary_flag);
    CHECK(std::abs(sq.eval(r.tau_hat, 2)) <= 1e-6 * std::abs(sq.eval(r.tau_hat, 3)) + 1e-8);
    const ModeEstimate m = estimate_mode(path, x, 0.25, 0.1);
    CHECK(m.s_hat > 0.0);
    CHECK(m.m_hat == doctest::Approx(sq.eval(m.tau_hat, 0)).epsilon(1e-14));
    CHECK(m.s_hat == doctest::Approx(sq.eval(m.tau_hat, 1)).epsilon(1e-14));
}

TEST_CASE("true modes are recovered on average") {
    struct Case {
        ModelKind kind;
        double x1;
        double tol;
    };
    for (const Case c : {Case{ModelKind::lm_normal, 0.5, 0.25}, Case{ModelKind::lm_lognormal, 0.5, 0.5},
                         Case{ModelKind::nonlinear, 0.9, 0.1}}) {
        const auto x = design_point(c.kind, c.x1);
        double mean_error = 0.0;
        for (std::uint64_t s = 1; s <= 10; ++s) {
            const SimModel model{c.kind, 4000, s, 0.0};
            mean_error += (estimate_mode(generate(model), x, 0.2, 0.1).m_hat - true_mode(model, x)) / 10.0;
        }
        CHECK(std::abs(mean_error) < c.tol);
    }
}

TEST_CASE("location-scale equivariance at fixed bandwidth") {
    const auto x = design_point(ModelKind::lm_normal, 0.3);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset data = generate(SimModel{ModelKind::lm_normal, 500, seed, 0.0});
        const ModeEstimate a = estimate_mode(data, x, 0.2, 0.1);
        const ModeEstimate b = estimate_mode(data.affine_response(3.0, -2.0), x, 0.2, 0.1);
        CHECK(std::abs(a.tau_hat - b.tau_hat) < 1e-6);
        CHECK(std::abs(b.m_hat - (3.0 * a.m_hat - 2.0)) < 1e-6);
    }
}

TEST_CASE("path grid and mode arguments") {
    const auto g = path_grid(0.1, 0.3, 0.1);
    CHECK(g.front() > 0.0);
    CHECK(g.back() < 1.0);
    for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] - g[k - 1] <= 0.1 / 20.0 + 1e-12);
    CHECK_THROWS(path_grid(0.1, 0.5, 0.1));
}

TEST_CASE("mean squared error falls with n") {
    const auto x = design_point(ModelKind::lm_normal, 0.5);
    double mse[2] = {0.0, 0.0};
    const long sizes[2] = {500, 2000};
    for (int k = 0; k < 2; ++k) {
        for (std::uint64_t s = 1; s <= 30; ++s) {
            const SimModel model{ModelKind::lm_normal, sizes[k], 100 + s, 0.0};
            const double h = 0.8 * std::pow(static_cast<double>(sizes[k]), -1.0 / 7.0);
            const double e = estimate_mode(generate(model), x, h, 0.1).m_hat - true_mode(model, x);
            mse[k] += e * e / 30.0;
        }
    }
    CHECK(mse[1] < mse[0]);
}
