#include <doctest.h>

#include <cmath>

#include "qkws/noisesim.hpp"
#include "qkws/simcore.hpp"
#include "support/oracles.hpp"

using namespace qkws;

TEST_SUITE("simcore") {

TEST_CASE("ground state puts all weight on basis index 0") {
    const StateVector one = ground_state(1);
    CHECK(one.amplitudes == std::vector<Complex>{{1.0, 0.0}, {0.0, 0.0}});

    const StateVector two = ground_state(2);
    CHECK(two.dim() == 4);
    CHECK(two.amplitudes[0] == Complex{1.0, 0.0});
    for (std::size_t i = 1; i < 4; ++i) CHECK(two.amplitudes[i] == Complex{});

    CHECK_THROWS_AS(ground_state(13), CapacityError);
    CHECK_THROWS_AS(ground_state(0), CapacityError);
}

TEST_CASE("rotations follow the half-angle convention") {
    const Gate1Q ry0 = make_rotation(Axis::Y, 0.0);
    CHECK(ry0.matrix[0] == Complex{1.0, 0.0});
    CHECK(ry0.matrix[1] == Complex{0.0, 0.0});
    CHECK(ry0.matrix[3] == Complex{1.0, 0.0});

    const Gate1Q ry_pi = make_rotation(Axis::Y, kPi);
    CHECK(ry_pi.matrix[0].real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ry_pi.matrix[1].real() == doctest::Approx(-1.0));
    CHECK(ry_pi.matrix[2].real() == doctest::Approx(1.0));

    // RX(pi/2)|0> = [1/sqrt2, -i/sqrt2]
    StateVector s = ground_state(1);
    apply_1q(s, make_rotation(Axis::X, kPi / 2.0), 0);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(s.amplitudes[0].real() == doctest::Approx(inv_sqrt2).epsilon(1e-12));
    CHECK(s.amplitudes[0].imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.amplitudes[1].real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.amplitudes[1].imag() == doctest::Approx(-inv_sqrt2).epsilon(1e-12));

    CHECK_THROWS_AS(make_rotation(Axis::X, std::nan("")),
                    std::invalid_argument);
}

TEST_CASE("constructed gates are unitary and identity at angle zero") {
    rng::Engine engine(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Axis axis = static_cast<Axis>(rng::below(engine, 3));
        const double angle = rng::uniform(engine, -8.0, 8.0);
        const auto& u = make_rotation(axis, angle).matrix;
        // U^dagger U per entry
        const Complex m00 = std::conj(u[0]) * u[0] + std::conj(u[2]) * u[2];
        const Complex m01 = std::conj(u[0]) * u[1] + std::conj(u[2]) * u[3];
        const Complex m10 = std::conj(u[1]) * u[0] + std::conj(u[3]) * u[2];
        const Complex m11 = std::conj(u[1]) * u[1] + std::conj(u[3]) * u[3];
        CHECK(std::abs(m00 - 1.0) < 1e-12);
        CHECK(std::abs(m01) < 1e-12);
        CHECK(std::abs(m10) < 1e-12);
        CHECK(std::abs(m11 - 1.0) < 1e-12);
    }
    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
        const auto& u = make_rotation(axis, 0.0).matrix;
        CHECK(std::abs(u[0] - 1.0) < 1e-12);
        CHECK(std::abs(u[1]) < 1e-12);
        CHECK(std::abs(u[2]) < 1e-12);
        CHECK(std::abs(u[3] - 1.0) < 1e-12);
    }
}

TEST_CASE("apply_1q acts on the addressed wire only") {
    // RY(pi) on wire 0 flips |0> to |1>.
    StateVector s = ground_state(1);
    apply_1q(s, make_rotation(Axis::Y, kPi), 0);
    CHECK(std::abs(s.amplitudes[0]) < 1e-12);
    CHECK(s.amplitudes[1].real() == doctest::Approx(1.0));

    // RY(pi/2) on wire 1 of |00>: amplitudes [1/sqrt2, 1/sqrt2, 0, 0].
    StateVector t = ground_state(2);
    apply_1q(t, make_rotation(Axis::Y, kPi / 2.0), 1);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(t.amplitudes[0].real() == doctest::Approx(inv_sqrt2));
    CHECK(t.amplitudes[1].real() == doctest::Approx(inv_sqrt2));
    CHECK(std::abs(t.amplitudes[2]) < 1e-12);
    CHECK(std::abs(t.amplitudes[3]) < 1e-12);

    CHECK_THROWS_AS(apply_1q(t, make_rotation(Axis::Y, 1.0), 2),
                    std::invalid_argument);
}

TEST_CASE("RZ only changes phases") {
    rng::Engine engine(5);
    StateVector s = oracle::random_state(3, engine);
    std::vector<double> mags(s.dim());
    for (std::size_t i = 0; i < s.dim(); ++i) mags[i] = std::abs(s.amplitudes[i]);
    apply_1q(s, make_rotation(Axis::Z, 1.234), 1);
    for (std::size_t i = 0; i < s.dim(); ++i) {
        CHECK(std::abs(s.amplitudes[i]) == doctest::Approx(mags[i]).epsilon(1e-12));
    }
}

TEST_CASE("cnot flips the target when the control is set") {
    StateVector s = ground_state(2);
    apply_1q(s, make_rotation(Axis::Y, kPi), 0); // |10>
    apply_cnot(s, 0, 1);
    CHECK(std::abs(s.amplitudes[3]) == doctest::Approx(1.0)); // |11>

    StateVector t = ground_state(2); // |00>
    apply_cnot(t, 0, 1);
    CHECK(t.amplitudes[0].real() == doctest::Approx(1.0));

    // Bell state: (|00> + |10>)/sqrt2 -> (|00> + |11>)/sqrt2.
    StateVector bell = ground_state(2);
    apply_1q(bell, make_rotation(Axis::Y, kPi / 2.0), 0);
    apply_cnot(bell, 0, 1);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(bell.amplitudes[0].real() == doctest::Approx(inv_sqrt2));
    CHECK(std::abs(bell.amplitudes[1]) < 1e-12);
    CHECK(std::abs(bell.amplitudes[2]) < 1e-12);
    CHECK(bell.amplitudes[3].real() == doctest::Approx(inv_sqrt2));

    CHECK_THROWS_AS(apply_cnot(t, 1, 1), std::invalid_argument);
}

TEST_CASE("cnot is an involution") {
    rng::Engine engine(7);
    for (int trial = 0; trial < 20; ++trial) {
        StateVector s = oracle::random_state(4, engine);
        const StateVector before = s;
        const int control = static_cast<int>(rng::below(engine, 4));
        int target = static_cast<int>(rng::below(engine, 4));
        if (target == control) target = (target + 1) % 4;
        apply_cnot(s, control, target);
        apply_cnot(s, control, target);
        for (std::size_t i = 0; i < s.dim(); ++i) {
            CHECK(std::abs(s.amplitudes[i] - before.amplitudes[i]) < 1e-12);
        }
    }
}

TEST_CASE("expect_z basics") {
    StateVector zero = ground_state(1);
    CHECK(expect_z(zero, 0) == doctest::Approx(1.0));

    StateVector one = ground_state(1);
    apply_1q(one, make_rotation(Axis::Y, kPi), 0);
    CHECK(expect_z(one, 0) == doctest::Approx(-1.0));

    StateVector plus = ground_state(1);
    apply_1q(plus, make_rotation(Axis::Y, kPi / 2.0), 0);
    CHECK(expect_z(plus, 0) == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(expect_z(zero, 1), std::invalid_argument);
}

TEST_CASE("norm is preserved over long random gate sequences") {
    rng::Engine engine(23);
    StateVector s = oracle::random_state(4, engine);
    for (int g = 0; g < 100; ++g) {
        if (rng::below(engine, 4) == 0) {
            const int control = static_cast<int>(rng::below(engine, 4));
            int target = static_cast<int>(rng::below(engine, 4));
            if (target == control) target = (target + 1) % 4;
            apply_cnot(s, control, target);
        } else {
            const Axis axis = static_cast<Axis>(rng::below(engine, 3));
            apply_1q(s, make_rotation(axis, rng::uniform(engine, -4.0, 4.0)),
                     static_cast<int>(rng::below(engine, 4)));
        }
    }
    CHECK(std::abs(s.norm_sq() - 1.0) < 1e-10);
}

TEST_CASE("rotation composition adds angles on one wire") {
    rng::Engine engine(31);
    for (int trial = 0; trial < 20; ++trial) {
        const double a = rng::uniform(engine, -3.0, 3.0);
        const double b = rng::uniform(engine, -3.0, 3.0);
        StateVector s1 = oracle::random_state(2, engine);
        StateVector s2 = s1;
        apply_1q(s1, make_rotation(Axis::Y, a), 1);
        apply_1q(s1, make_rotation(Axis::Y, b), 1);
        apply_1q(s2, make_rotation(Axis::Y, a + b), 1);
        for (std::size_t i = 0; i < s1.dim(); ++i) {
            CHECK(std::abs(s1.amplitudes[i] - s2.amplitudes[i]) < 1e-10);
        }
    }
}

TEST_CASE("expect_z matches the density-matrix trace") {
    rng::Engine engine(47);
    for (int n = 1; n <= 4; ++n) {
        for (int trial = 0; trial < 10; ++trial) {
            StateVector s = oracle::random_state(n, engine);
            const DensityMatrix rho = to_density(s);
            for (int w = 0; w < n; ++w) {
                CHECK(std::abs(expect_z(s, w) - expect_z(rho, w)) < 1e-10);
            }
        }
    }
}

} // TEST_SUITE
