#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sdpreg/errors.hpp"
#include "sdpreg/quadrature.hpp"

using namespace sdpreg;

TEST_SUITE("quadrature") {

TEST_CASE("gaussian moments to tight tolerance") {
    const double inv = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    const auto phi = [inv](double x) { return inv * std::exp(-0.5 * x * x); };
    CHECK(integrate_or_throw(phi, -9.0, 9.0, 1e-10) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(integrate_or_throw([&](double x) { return x * x * phi(x); }, -9.0, 9.0, 1e-10) ==
          doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("discontinuous integrand still converges") {
    const auto f = [](double x) { return (x >= -3.0 && x <= 3.0) ? 1.0 / 6.0 : 0.0; };
    const QuadratureResult r = integrate_adaptive(f, -40.0, 40.0, 1e-6, 1e-9, 4000);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("non-convergence raises a structured error with the achieved estimate") {
    // cap the subdivisions so the oscillatory integrand cannot be resolved
    const auto f = [](double x) { return std::cos(500.0 * x * x); };
    CHECK_THROWS_AS(integrate_or_throw(f, 0.0, 10.0, 1e-12, 1e-14, 3), Error);
    try {
        integrate_or_throw(f, 0.0, 10.0, 1e-12, 1e-14, 3);
    } catch (const Error& e) {
        CHECK(e.category() == "quadrature");
        CHECK(std::string(e.what()).find("error estimate") != std::string::npos);
    }
}

TEST_CASE("gauss-hermite nodes integrate hermite test functions") {
    const GaussHermite gh(64);
    REQUIRE(gh.nodes.size() == 64);
    double s0 = 0.0, s2 = 0.0, sc = 0.0;
    for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
        s0 += gh.weights[i];
        s2 += gh.weights[i] * gh.nodes[i] * gh.nodes[i];
        sc += gh.weights[i] * std::cos(gh.nodes[i]);
    }
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    CHECK(s0 == doctest::Approx(sqrt_pi).epsilon(1e-12));
    CHECK(s2 == doctest::Approx(0.5 * sqrt_pi).epsilon(1e-12));
    // int e^{-t^2} cos(t) dt = sqrt(pi) e^{-1/4}
    CHECK(sc == doctest::Approx(sqrt_pi * std::exp(-0.25)).epsilon(1e-12));
}

TEST_CASE("gauss-hermite handles small and odd orders") {
    for (int n : {1, 3, 7, 33}) {
        const GaussHermite gh(n);
        double s0 = 0.0;
        for (double w : gh.weights) s0 += w;
        CHECK(s0 == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-10));
    }
}

}  // TEST_SUITE
