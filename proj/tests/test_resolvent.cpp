#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "crystal/builtins.hpp"
#include "crystal/resolvent.hpp"

using namespace crystal;
using cd = std::complex<double>;
constexpr double pi = std::numbers::pi;

namespace {

// 1/(2 cos phi - z) = -zeta/(1 - zeta^2) sum zeta^|n| e^{i n phi}, z = zeta + 1/zeta, |zeta| < 1
cd chain_green(cd z, std::int64_t n) {
    cd s = std::sqrt(z * z - 4.0);
    cd zeta = (z - s) / 2.0;
    if (std::abs(zeta) > 1.0) zeta = (z + s) / 2.0;
    return -std::pow(zeta, static_cast<double>(std::llabs(n) + 1)) / (1.0 - zeta * zeta);
}

}  // namespace

TEST_CASE("nearest-neighbor resolvent matches the geometric closed form") {
    auto s = builtin("zd:1");
    for (cd z : {cd(3.0, 0.0), cd(-2.5, 0.0), cd(0.0, 1.0), cd(1.0, 0.5)}) {
        auto g = green(s, z, 64);
        for (std::int64_t n = -64; n <= 64; ++n) CHECK(std::abs(g.at(n) - chain_green(z, n)) < 1e-12);
        auto fit = decay_fit(g);
        CHECK(fit.model == "exponential");
    }
}

TEST_CASE("conjugation and reflection symmetry") {
    for (const char* name : {"graph_a", "graph_b", "graph_c", "thm1_3"}) {
        auto s = builtin(name);
        cd z(0.1, 0.3);
        auto g = green(s, z, 64);
        auto gc = green(s, std::conj(z), 64);
        for (std::int64_t n = -64; n <= 64; ++n) {
            CHECK(std::abs(gc.at(n) - std::conj(g.at(n))) < 1e-12);
            CHECK(std::abs(g.at(n) - g.at(-n)) < 1e-12);
        }
    }
}

TEST_CASE("diagonal entry is bounded by the inverse distance to the spectrum") {
    // graph_a spectrum is [0, 1/4]
    auto s = builtin("graph_a");
    for (cd z : {cd(-0.5, 0.0), cd(0.125, 0.2), cd(1.0, -1.0), cd(0.4, 0.0)}) {
        double dist = std::abs(z.imag());
        double re = z.real();
        if (re < 0.0) dist = std::hypot(re, z.imag());
        if (re > 0.25) dist = std::hypot(re - 0.25, z.imag());
        CHECK(std::abs(green(s, z, 64).at(0)) <= 1.0 / dist + 1e-12);
    }
}

TEST_CASE("large imaginary spectral parameter follows the Neumann series") {
    // G(0) = -1/z - <h>/z^2 - <h^2>/z^3 - ..., <a> = 1/12, <a^2> = 1/80, |a| <= 1/4
    auto s = builtin("graph_a");
    for (double K : {10.0, 100.0, 1000.0}) {
        cd z(0.0, K);
        cd approx = -1.0 / z - (1.0 / 12) / (z * z) - (1.0 / 80) / (z * z * z);
        double rest = std::pow(0.25, 3) / std::pow(K, 4) / (1.0 - 0.25 / K);
        CHECK(std::abs(green(s, z, 64).at(0) - approx) <= rest + 1e-14);
    }
}

TEST_CASE("spectral parameter too close to the band is rejected") {
    auto s = builtin("graph_b");
    try {
        green(s, cd(0.2, 1e-9), 64);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SpectrumProximity);
    }
}

TEST_CASE("graph_b Green's function has the kink asymptotics") {
    // even n: n^2 G -> (1 - 4/9) / (2 pi^2); even minus odd: 1 / (pi^2 z^2) at z = -1
    auto g = green(builtin("graph_b"), cd(-1.0, 0.0), 1024);
    auto n2g = [&](std::int64_t n) { return static_cast<double>(n * n) * g.at(n).real(); };
    CHECK(n2g(1000) == doctest::Approx(5.0 / (18 * pi * pi)).epsilon(1e-4));
    CHECK(n2g(1000) - n2g(1001) == doctest::Approx(1.0 / (pi * pi)).epsilon(1e-3));
    CHECK(std::abs(g.at(1000).imag()) < 1e-14);
}

TEST_CASE("power-law decay exponents of kinked symbols") {
    for (const char* name : {"graph_a", "graph_b", "graph_c"}) {
        auto fit = decay_fit(green(builtin(name), cd(-1.0, 0.0), 1024));
        CHECK(fit.model == "power");
        CHECK(fit.exponent == doctest::Approx(-2.0).epsilon(0.01));
    }
}

TEST_CASE("resolvent residual stays below its certified bound") {
    for (const char* name : {"graph_a", "graph_b", "graph_c", "zd:1"}) {
        auto r = resolvent_residual(builtin(name), cd(-1.0, 0.5), 64);
        CHECK(r.max_residual <= r.bound + 1e-12);
        CHECK(r.max_residual < 1e-10);
    }
}

TEST_CASE("CSV header") {
    CHECK(green_csv(green(builtin("zd:1"), cd(3.0, 0.0), 2)).rfind("n,re,im,abs\n", 0) == 0);
}
