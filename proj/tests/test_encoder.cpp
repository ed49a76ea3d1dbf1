#include <doctest.h>

#include <cmath>

#include "qkws/encoder.hpp"
#include "support/oracles.hpp"

using namespace qkws;

TEST_SUITE("encoder") {

TEST_CASE("squash maps through tanh into the open unit interval") {
    CHECK(squash({0.0, 0.0}) == FeatureVector{0.0, 0.0});
    // tanh(0.5) = 0.46211715726000974
    CHECK(squash({0.5})[0] == doctest::Approx(0.46211715726000974).epsilon(1e-12));

    const FeatureVector big = squash({1e9, -1e9});
    CHECK(big[0] < 1.0);
    CHECK(big[0] > 0.999999);
    CHECK(big[1] > -1.0);
    CHECK(big[1] < -0.999999);

    CHECK_THROWS_AS(squash({std::nan("")}), std::invalid_argument);
}

TEST_CASE("encode produces the per-wire half-angle amplitudes") {
    const StateVector zeros = encode({0.0, 0.0, 0.0, 0.0});
    CHECK(zeros.amplitudes[0].real() == doctest::Approx(1.0));
    for (std::size_t i = 1; i < zeros.dim(); ++i) {
        CHECK(std::abs(zeros.amplitudes[i]) < 1e-12);
    }

    // x = 0.5 on one wire: RY(pi/2)|0> = [cos(pi/4), sin(pi/4)].
    const StateVector half = encode({0.5});
    CHECK(half.amplitudes[0].real() == doctest::Approx(std::cos(kPi / 4.0)));
    CHECK(half.amplitudes[1].real() == doctest::Approx(std::sin(kPi / 4.0)));

    CHECK_THROWS_AS(encode({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(encode({-1.1}), std::invalid_argument);
}

TEST_CASE("encoded states are normalized") {
    rng::Engine engine(3);
    for (int trial = 0; trial < 50; ++trial) {
        FeatureVector x(4);
        for (auto& v : x) v = rng::uniform(engine, -0.999, 0.999);
        CHECK(std::abs(encode(x).norm_sq() - 1.0) < 1e-12);
    }
}

TEST_CASE("product structure: wire i depends only on feature i") {
    rng::Engine engine(9);
    FeatureVector x(3);
    for (auto& v : x) v = rng::uniform(engine, -0.9, 0.9);
    const double base = expect_z(encode(x), 1);
    for (int other : {0, 2}) {
        FeatureVector y = x;
        y[static_cast<std::size_t>(other)] = rng::uniform(engine, -0.9, 0.9);
        CHECK(std::abs(expect_z(encode(y), 1) - base) < 1e-12);
    }
}

TEST_CASE("expect_z after encode is cos(pi x), strictly decreasing on (0, 1)") {
    CHECK(expect_z(encode({0.5}), 0) == doctest::Approx(0.0).epsilon(1e-12));

    double previous = 1.0;
    for (int i = 1; i <= 100; ++i) {
        const double x = static_cast<double>(i) / 101.0;
        const double z = expect_z(encode({x}), 0);
        CHECK(z == doctest::Approx(std::cos(kPi * x)).epsilon(1e-12));
        CHECK(z < previous);
        previous = z;
    }
}

} // TEST_SUITE
