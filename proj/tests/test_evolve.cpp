#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gsl/gsl_sf_bessel.h>

#include <cmath>
#include <numbers>
#include <random>

#include "crystal/builtins.hpp"
#include "crystal/evolve.hpp"

using namespace crystal;
constexpr double pi = std::numbers::pi;

namespace {

double norm2(const WaveField& f) {
    double s = 0.0;
    for (auto a : f.amp) s += std::norm(a);
    return s;
}

}  // namespace

TEST_CASE("time zero returns the initial state") {
    const State psi = {{0, 0.6}, {3, {0.0, 0.8}}};
    for (const char* name : {"graph_a", "graph_b", "graph_c", "zd:1"}) {
        auto f = propagate(builtin(name), 0.0, 16, 1e-12, {}, psi);
        for (std::int64_t m = -16; m <= 16; ++m) {
            auto want = psi.count(m) ? psi.at(m) : std::complex<double>(0.0);
            CHECK(std::abs(f.at(m) - want) < 1e-13);
        }
    }
}

TEST_CASE("evolution is unitary on a window capturing the mass") {
    const State psi = {{0, 1.0}, {1, -1.0}, {-5, {0.0, 0.5}}};
    for (const char* name : {"graph_b", "graph_c", "zd:1", "adjacency_power:4", "thm1_3"}) {
        const std::string label = name;
        CAPTURE(label);
        auto s = builtin(name);
        auto f = propagate(s, 7.5, 4096, 1e-11, {}, psi);
        REQUIRE(f.converged);
        CHECK(std::abs(norm2(f) - 2.25) < 1e-7);
    }
}

TEST_CASE("composition e^{-i s H} e^{-i t H} = e^{-i (s+t) H}") {
    auto s = builtin("zd:1");
    auto f3 = propagate(s, 3.0, 256, 1e-13);
    State mid;
    for (std::int64_t m = -256; m <= 256; ++m)
        if (std::abs(f3.at(m)) > 1e-300) mid[m] = f3.at(m);
    auto f34 = propagate(s, 4.0, 256, 1e-13, {}, mid);
    auto f7 = propagate(s, 7.0, 256, 1e-13);
    for (std::int64_t m = -100; m <= 100; ++m) CHECK(std::abs(f34.at(m) - f7.at(m)) < 1e-10);
}

TEST_CASE("reflection symmetry of delta_0 evolution") {
    for (const char* name : {"graph_a", "graph_b", "graph_c", "thm1_3"}) {
        auto f = propagate(builtin(name), 11.0, 128);
        for (std::int64_t m = 1; m <= 128; ++m) CHECK(std::abs(f.at(m) - f.at(-m)) < 1e-9);
    }
}

TEST_CASE("graph_b and graph_c match their closed forms") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ut(0.0, 400.0);
    std::uniform_int_distribution<int> um(-60, 60);
    for (const char* name : {"graph_b", "graph_c"}) {
        Propagator prop(builtin(name));
        double worst = 0.0;
        for (int i = 0; i < 100; ++i) {
            double t = ut(rng);
            std::int64_t M = static_cast<std::int64_t>(t / (2 * pi)) + 64;
            auto f = prop.run(t, M, 1e-11);
            for (int k = 0; k < 2; ++k) {
                std::int64_t m = um(rng);
                worst = std::max(worst, std::abs(f.at(m) - closed_form_oracle(name, t, m)));
            }
        }
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("closed forms at reference points") {
    CHECK(std::abs(closed_form_oracle("graph_b", pi, 0)) == doctest::Approx(std::sin(pi / 4) / (pi / 4)));
    CHECK(std::abs(closed_form_oracle("graph_b", pi, 0)) == doctest::Approx(0.9003).epsilon(1e-4));
    // t = 2 pi k: amplitude 2 i (-1)^k k / (pi (k^2 - m^2)) when k - m is odd, zero when even
    CHECK(std::abs(closed_form_oracle("graph_b", 6 * pi, 1)) < 1e-12);
    CHECK(std::abs(closed_form_oracle("graph_b", 6 * pi, 2)) == doctest::Approx(6.0 / (5 * pi)).epsilon(1e-12));
    CHECK(std::abs(closed_form_oracle("graph_b", 6 * pi, 0)) == doctest::Approx(2.0 / (3 * pi)).epsilon(1e-12));
    CHECK_THROWS_AS(closed_form_oracle("graph_a", 1.0, 0), Error);
}

TEST_CASE("nearest-neighbor walk matches Bessel functions") {
    auto s = builtin("zd:1");
    for (double t : {0.5, 3.0, 20.0, 75.0}) {
        auto f = propagate(s, t, 200, 1e-13);
        for (int m = -40; m <= 40; ++m) {
            std::complex<double> phase = std::pow(std::complex<double>(0.0, -1.0), std::abs(m));
            std::complex<double> want = phase * gsl_sf_bessel_Jn(std::abs(m), 2 * t);
            CHECK(std::abs(f.at(m) - want) < 1e-11);
        }
    }
}

TEST_CASE("graph_b peak of height 1/2 at m = k when t = 2 pi k") {
    Propagator prop(builtin("graph_b"));
    for (int k = 1; k <= 10; ++k) {
        double t = 2 * pi * k;
        auto f = prop.run(t, 2 * k + 32, 1e-11);
        CHECK(f.supnorm() >= 0.5 - 1e-7);
        CHECK(std::abs(f.at(k)) == doctest::Approx(0.5).epsilon(1e-7));
    }
}

TEST_CASE("graph_c keeps mass near the origin") {
    Propagator prop(builtin("graph_c"));
    for (double t : {10.0, 100.0, 500.0}) {
        auto f = prop.run(t, static_cast<std::int64_t>(t / (2 * pi)) + 64, 1e-11);
        double near = 0.0;
        for (int m = -4; m <= 4; ++m) near += std::norm(f.at(m));
        CHECK(near >= 0.25);
        CHECK(f.supnorm() <= 1.0 + 1e-12);
    }
}

TEST_CASE("origin amplitude agrees with the field") {
    for (const char* name : {"graph_a", "zd:1", "frac:1:0.5"}) {
        auto s = builtin(name);
        for (double t : {5.0, 40.0}) {
            auto f = propagate(s, t, 256, 1e-12);
            CHECK(origin_amplitude(s, t, 1e-11) == doctest::Approx(std::abs(f.at(0))).epsilon(1e-8));
        }
    }
}

TEST_CASE("geometric times and CSV output") {
    auto ts = geometric_times(1.0, 100.0, 3);
    REQUIRE(ts.size() == 3);
    CHECK(ts[1] == doctest::Approx(10.0));
    auto f = propagate(builtin("graph_b"), 1.0, 2);
    CHECK(field_csv(f).rfind("m,re,im,abs2\n", 0) == 0);
}

TEST_CASE("resolution cap is reported") {
    PropagateOptions o;
    o.Ncap = 64;
    CHECK_THROWS_AS(propagate(builtin("graph_a"), 500.0, 16, 1e-12, o), Error);
}
