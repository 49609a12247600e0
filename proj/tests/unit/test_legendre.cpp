#include <cmath>
#include <random>

#include "doctest.h"

#include "hyforest/error.hpp"
#include "hyforest/legendre.hpp"

using namespace hyforest;

namespace {

// Explicit closed forms for n <= 5.
double explicit_legendre(int n, double x) {
    switch (n) {
        case 0: return 1.0;
        case 1: return x;
        case 2: return 0.5 * (3 * x * x - 1);
        case 3: return 0.5 * (5 * x * x * x - 3 * x);
        case 4: return (35 * std::pow(x, 4) - 30 * x * x + 3) / 8.0;
        case 5: return (63 * std::pow(x, 5) - 70 * std::pow(x, 3) + 15 * x) / 8.0;
        default: return NAN;
    }
}

}  // namespace

TEST_CASE("eval_legendre examples") {
    CHECK(eval_legendre(0, 0.3) == 1.0);
    CHECK(eval_legendre(1, -1.0) == -1.0);
    CHECK(eval_legendre(3, 0.5) == doctest::Approx(-0.4375).epsilon(1e-15));
}

TEST_CASE("eval_legendre domain") {
    CHECK_THROWS_AS(eval_legendre(2, 1.0 + 1e-9), DomainError);
    CHECK_THROWS_AS(eval_legendre(-1, 0.0), DomainError);
    CHECK_NOTHROW(eval_legendre(2, 1.0 + 1e-13));
}

TEST_CASE("recurrence matches explicit formulas for n <= 5") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng);
        for (int n = 0; n <= 5; ++n) {
            CHECK(std::abs(eval_legendre(n, x) - explicit_legendre(n, x)) < 1e-12);
        }
    }
}

TEST_CASE("|P_n| <= 1 on [-1, 1] for n <= 20") {
    double worst = 0.0;
    for (int n = 0; n <= 20; ++n) {
        for (int k = 0; k <= 4000; ++k) {
            worst = std::max(worst, std::abs(eval_legendre(n, -1.0 + k / 2000.0)));
        }
    }
    CHECK(worst <= 1.0 + 1e-12);
}

TEST_CASE("eval_legendre_all agrees with single evaluations") {
    std::vector<double> out(8);
    eval_legendre_all(0.37, out);
    for (int n = 0; n < 8; ++n) {
        CHECK(out[static_cast<std::size_t>(n)] == doctest::Approx(eval_legendre(n, 0.37)).epsilon(1e-14));
    }
}

TEST_CASE("profile coefficients contract") {
    CHECK(ProfileCoefficients().order() == 7);
    CHECK_THROWS_AS(ProfileCoefficients(0), ValidationError);
    CHECK_THROWS_AS(ProfileCoefficients(std::vector<double>{1.0, NAN}), ValidationError);
    const ProfileCoefficients c(std::vector<double>{0.5, -0.25});
    CHECK(c[1] == 0.5);
    CHECK(c[2] == -0.25);
}

TEST_CASE("eval_profile_raw examples") {
    const ProfileCoefficients zero(7);
    for (int k = 0; k <= 100; ++k) {
        CHECK(eval_profile_raw(zero, k / 100.0) == 1.0);
    }
    CHECK(eval_profile_raw(ProfileCoefficients(std::vector<double>{1, 0, 0, 0, 0, 0, 0}), 1.0) == 2.0);
    CHECK(eval_profile_raw(ProfileCoefficients(std::vector<double>{0.5, -0.25}), 0.5) ==
          doctest::Approx(1.125).epsilon(1e-15));
    CHECK_THROWS_AS(eval_profile_raw(zero, 1.5), DomainError);
    CHECK_THROWS_AS(eval_profile_raw(zero, -0.01), DomainError);
}

TEST_CASE("rectify examples") {
    const RectifierConfig cfg{0.01};
    CHECK(rectify(0.0, cfg).value == doctest::Approx(0.005).epsilon(1e-14));
    CHECK(std::abs(rectify(10.0, cfg).value - 10.0) < 1e-5);
    CHECK(rectify(10.0, cfg).value == doctest::Approx(10.0000025).epsilon(1e-12));
    const auto neg = rectify(-10.0, cfg);
    CHECK(neg.value > 0.0);
    CHECK(neg.value == doctest::Approx(2.5e-6).epsilon(1e-6));
    CHECK(rectify(-1e6, cfg).value > 0.0);
}

TEST_CASE("rectify is positive, increasing, and its derivative matches finite differences") {
    const RectifierConfig cfg{0.01};
    double prev = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        const double f = -1.0 + k / 1000.0;
        const auto r = rectify(f, cfg);
        CHECK(r.value > 0.0);
        CHECK(r.value > prev);
        prev = r.value;
        const double h = 1e-6;
        const double fd = (rectify(f + h, cfg).value - rectify(f - h, cfg).value) / (2 * h);
        CHECK(std::abs(r.derivative - fd) <= 1e-6 * std::max(std::abs(fd), 1e-3));
    }
}
