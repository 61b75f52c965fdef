#include <doctest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qmode/errors.hpp"
#include "qmode/kernels.hpp"

using qmode::kernels::biweight;

namespace {

template <class F>
double integrate(F f) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 15, 1e-14);
}

}  // namespace

TEST_CASE("biweight point values") {
    CHECK(biweight(0.0, 0) == doctest::Approx(0.9375).epsilon(1e-15));
    CHECK(biweight(0.0, 1) == 0.0);
    CHECK(biweight(0.5, 0) == doctest::Approx(0.52734375).epsilon(1e-15));
    CHECK(biweight(1.5, 2) == 0.0);
    for (int r = 0; r <= 3; ++r) {
        CHECK(biweight(1.0, r) == 0.0);
        CHECK(biweight(-1.0, r) == 0.0);
        CHECK(biweight(3.0, r) == 0.0);
    }
}

TEST_CASE("biweight rejects invalid orders") {
    CHECK_THROWS_AS(biweight(0.1, 4), qmode::ArgumentError);
    CHECK_THROWS_AS(biweight(0.1, -1), qmode::ArgumentError);
}

TEST_CASE("biweight parity and nonnegativity") {
    for (int i = 0; i <= 200; ++i) {
        const double t = -1.2 + 2.4 * i / 200.0;
        CHECK(biweight(t, 0) >= 0.0);
        for (int r = 0; r <= 3; ++r) {
            const double sign = r % 2 == 0 ? 1.0 : -1.0;
            CHECK(biweight(-t, r) == sign * biweight(t, r));
        }
    }
}

TEST_CASE("biweight derivatives agree with central differences") {
    const double delta = 1e-5;
    for (int i = 1; i <= 50; ++i) {
        const double t = -0.98 + 1.96 * i / 51.0;
        for (int r = 0; r < 3; ++r) {
            const double fd = (biweight(t + delta, r) - biweight(t - delta, r)) / (2.0 * delta);
            CHECK(std::abs(fd - biweight(t, r + 1)) <= 100.0 * delta * delta);
        }
    }
}

TEST_CASE("kernel moments by adaptive quadrature") {
    const auto c = qmode::kernels::kernel_constants();
    CHECK(std::abs(c.kappa - 1.0 / 7.0) < 1e-15);
    CHECK(std::abs(c.kappa1 - 15.0 / 7.0) < 1e-15);
    CHECK(std::abs(integrate([](double t) { return biweight(t, 0); }) - 1.0) < 1e-12);
    CHECK(std::abs(integrate([](double t) { return t * t * biweight(t, 0); }) - c.kappa) < 1e-12);
    CHECK(std::abs(integrate([](double t) { return biweight(t, 1) * biweight(t, 1); }) - c.kappa1) < 1e-12);
    CHECK(std::abs(integrate([](double t) { return biweight(t, 1); })) < 1e-12);
    CHECK(std::abs(integrate([](double t) { return t * biweight(t, 1); }) + 1.0) < 1e-12);
}

TEST_CASE("second derivative jumps at the support edge") {
    CHECK(biweight(1.0 - 1e-12, 2) == doctest::Approx(qmode::kernels::kSecondDerivativeEdge).epsilon(1e-9));
}
