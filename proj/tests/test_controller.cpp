#include "evospring/controller.hpp"

#include "evospring/rng.hpp"
#include "evospring/simulator.hpp"

#include "doctest.h"

#include <cmath>

using namespace evospring;

namespace {

// Minimal two-mass morphology for sensor checks.
Morphology two_mass_morph() {
    Morphology morph;
    morph.masses = {Vec2{0.0, 0.0}, Vec2{2.0, 0.0}};
    MorphSpring spring;
    spring.i = 0;
    spring.j = 1;
    spring.rest_length = 2.0;
    spring.active = true;
    morph.springs = {spring};
    morph.active_spring_count = 1;
    return morph;
}

SimState state_of(const Morphology& morph) {
    SimState s;
    s.positions = morph.masses;
    s.velocities.assign(morph.masses.size(), Vec2{0, 0});
    return s;
}

} // namespace

TEST_SUITE_BEGIN("controller");

TEST_CASE("cpg values at known phases") {
    const CpgBank bank;
    std::vector<double> out;
    cpg_signals(bank, 0, out);
    CHECK(out.size() == 10);
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(std::fabs(out[5]) < 1e-12); // sin(pi)

    cpg_signals(bank, 25, out);
    CHECK(std::fabs(out[0]) < 1e-12); // sin(2*pi): one full period is 25 steps
}

TEST_CASE("cpg is periodic with period 25") {
    const CpgBank bank;
    std::vector<double> a, b;
    for (int t = 0; t < 100; ++t) {
        cpg_signals(bank, t, a);
        cpg_signals(bank, t + 25, b);
        for (int i = 0; i < bank.n; ++i) {
            CHECK(std::fabs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) <
                  1e-9);
            CHECK(std::fabs(a[static_cast<std::size_t>(i)]) <= 1.0);
        }
    }
}

TEST_CASE("sensing the initial state gives zero proprioception") {
    const Morphology morph = two_mass_morph();
    const SimState initial = state_of(morph);
    const auto sensors = sense(initial, morph, initial);
    REQUIRE(sensors.size() == static_cast<std::size_t>(10 + 4 * morph.mass_count()));
    for (std::size_t k = 10; k < sensors.size(); ++k) CHECK(sensors[k] == 0.0);
}

TEST_CASE("displacement channels ignore rigid translations") {
    const Morphology morph = two_mass_morph();
    const SimState initial = state_of(morph);
    SimState moved = initial;
    for (auto& p : moved.positions) p += Vec2{3.7, -1.2};
    const auto sensors = sense(moved, morph, initial);
    for (int i = 0; i < morph.mass_count(); ++i) {
        CHECK(std::fabs(sensors[static_cast<std::size_t>(10 + 4 * i + 2)]) < 1e-9);
        CHECK(std::fabs(sensors[static_cast<std::size_t>(10 + 4 * i + 3)]) < 1e-9);
    }
}

TEST_CASE("moving one of two masses splits displacement around the CoM") {
    const Morphology morph = two_mass_morph();
    const SimState initial = state_of(morph);
    SimState moved = initial;
    moved.positions[0].x += 1.0;
    const auto sensors = sense(moved, morph, initial);
    CHECK(sensors[10 + 2] == doctest::Approx(0.5));  // moved mass
    CHECK(sensors[14 + 2] == doctest::Approx(-0.5)); // the other mass
}

TEST_CASE("velocity channels are absolute") {
    const Morphology morph = two_mass_morph();
    const SimState initial = state_of(morph);
    SimState moving = initial;
    moving.velocities[1] = Vec2{0.25, -0.75};
    const auto sensors = sense(moving, morph, initial);
    CHECK(sensors[14 + 0] == doctest::Approx(0.25));
    CHECK(sensors[14 + 1] == doctest::Approx(-0.75));
}

TEST_CASE("zero parameters give zero outputs") {
    ControllerParams params;
    params.n_in = 14;
    params.n_out = 3;
    params.w1.assign(static_cast<std::size_t>(params.n_hidden) * params.n_in, 0.0);
    params.b1.assign(static_cast<std::size_t>(params.n_hidden), 0.0);
    params.w2.assign(static_cast<std::size_t>(params.n_out) * params.n_hidden, 0.0);
    params.b2.assign(static_cast<std::size_t>(params.n_out), 0.0);
    const auto out = forward(params, std::vector<double>(14, 0.3));
    REQUIRE(out.size() == 3);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("outputs stay strictly inside (-1, 1)") {
    Rng rng(8);
    ControllerParams params = init_params(rng, 14, 5, 3.0);
    std::vector<double> sensors(14);
    for (int trial = 0; trial < 100; ++trial) {
        for (auto& s : sensors) s = rng.uniform(-10.0, 10.0);
        for (double v : forward(params, sensors)) {
            CHECK(v < 1.0);
            CHECK(v > -1.0);
        }
    }
}

TEST_CASE("scalar network matches hand evaluation") {
    ControllerParams params;
    params.n_in = 1;
    params.n_hidden = 1;
    params.n_out = 1;
    params.w1 = {1.0};
    params.b1 = {0.0};
    params.w2 = {1.0};
    params.b2 = {0.0};
    const auto out = forward(params, {0.5});
    CHECK(out[0] == doctest::Approx(std::tanh(std::tanh(0.5))));
    CHECK(out[0] == doctest::Approx(0.4320).epsilon(1e-3));
}

TEST_CASE("init_params is reproducible and gain-scaled") {
    Rng lhs(42), rhs(42);
    CHECK(init_params(lhs, 42, 7, 1.0) == init_params(rhs, 42, 7, 1.0));

    Rng zero_rng(1);
    const ControllerParams zero = init_params(zero_rng, 42, 7, 0.0);
    for (double w : zero.w1) CHECK(w == 0.0);
    for (double w : zero.w2) CHECK(w == 0.0);
    for (double b : zero.b1) CHECK(b == 0.0);
    for (double b : zero.b2) CHECK(b == 0.0);
}

TEST_CASE("xavier standard deviation matches the fan formula") {
    Rng rng(1234);
    const int fan_in = 42, fan_out = 32;
    double sum = 0.0, sum_sq = 0.0;
    const int samples = 100000;
    for (int i = 0; i < samples;) {
        const ControllerParams draw = init_params(rng, fan_in, 1, 1.0);
        for (double w : draw.w1) {
            sum += w;
            sum_sq += w * w;
            if (++i >= samples) break;
        }
    }
    const double mean = sum / samples;
    const double sd = std::sqrt(sum_sq / samples - mean * mean);
    const double expected = std::sqrt(2.0 / (fan_in + fan_out));
    CHECK(std::fabs(sd - expected) / expected < 0.02);
}

TEST_CASE("sensor length follows 10 + 4 * mass count for decoded robots") {
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const Genome genome = random_genome(rng, {6, 3});
        const Morphology morph = decode(genome);
        const SimState initial = state_of(morph);
        CHECK(sense(initial, morph, initial).size() ==
              static_cast<std::size_t>(10 + 4 * morph.mass_count()));
    }
}

TEST_SUITE_END();
