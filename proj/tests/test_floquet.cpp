#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "crystal/builtins.hpp"
#include "crystal/floquet.hpp"
#include "crystal/floquet_function.hpp"

using namespace crystal;
constexpr double pi = std::numbers::pi;

namespace {

const char* const kAll[] = {"graph_a", "graph_b", "graph_c", "thm1_1", "thm1_2", "thm1_3", "weierstrass", "sc_dyadic",
                            "zd:1", "zd:2", "frac:1:0.5", "adjacency_power:4", "fig5_left", "fig5_right", "c_pair",
                            "dyadic_sqrt"};

}  // namespace

TEST_CASE("symbol of graph_a at the endpoints") {
    auto a = builtin("graph_a");
    CHECK(floquet_matrix(a, {0.0})(0, 0).real() == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(floquet_matrix(a, {0.5})(0, 0).real()) < 1e-12);
}

TEST_CASE("fig5_left has no 0-2 coupling and a cosine on the middle vertex") {
    auto s = fig5_left();
    for (double th : {0.0, 0.13, 0.5, 0.77}) {
        auto H = floquet_matrix(s, {th});
        CHECK(std::abs(H(0, 2)) == 0.0);
        CHECK(H(1, 1).real() == doctest::Approx(2 * std::cos(2 * pi * th) + s.Q[1]).epsilon(1e-14));
        CHECK(H(0, 1).real() == doctest::Approx(1.0));
    }
}

TEST_CASE("sampled matrices are Hermitian and eigenvalues sorted") {
    for (const char* name : kAll) {
        const std::string label = name;
        CAPTURE(label);
        auto s = builtin(name);
        const std::int64_t N = s.d == 1 ? 64 : 16;
        auto g = sample_bands(s, N);
        for (std::int64_t p = 0; p < g.points(); ++p) {
            auto H = floquet_matrix(s, g.theta(p));
            CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
            for (int b = 1; b < g.nu; ++b) CHECK(g.E(p, b - 1) <= g.E(p, b));
        }
    }
}

TEST_CASE("Weyl stability between neighboring grid points") {
    for (const char* name : {"fig5_left", "fig5_right", "c_pair"}) {
        auto s = builtin(name);
        auto g = sample_bands(s, 128);
        for (std::int64_t p = 0; p < g.points(); ++p) {
            std::int64_t q = g.neighbor(p, 0, 1);
            Eigen::MatrixXcd D = floquet_matrix(s, g.theta(p)) - floquet_matrix(s, g.theta(q));
            double op = Eigen::JacobiSVD<Eigen::MatrixXcd>(D).singularValues()(0);
            for (int b = 0; b < g.nu; ++b) CHECK(std::abs(g.E(p, b) - g.E(q, b)) <= op + 1e-12);
        }
    }
}

TEST_CASE("grid bands of a, b, c equal the closed-form functions") {
    const std::pair<const char*, FloquetFunctionSpec> cases[] = {
        {"graph_a", function_a()}, {"graph_b", function_b()}, {"graph_c", function_c()}};
    for (const auto& [name, f] : cases) {
        auto g = sample_bands(builtin(name), 1024);
        double worst = 0.0;
        for (std::int64_t p = 0; p < g.points(); ++p)
            worst = std::max(worst, std::abs(g.E(p, 0) - f(static_cast<double>(p) / 1024)));
        CHECK(worst <= 1e-12 + g.truncation_error);
    }
}

TEST_CASE("band ranges") {
    auto c = detect_flat_bands(sample_bands(builtin("graph_c"), 1024));
    CHECK(std::abs(c.bands[0].min) < 1e-9);
    CHECK(c.bands[0].max == doctest::Approx(0.25).epsilon(1e-9));
    auto t = detect_flat_bands(sample_bands(builtin("thm1_3"), 1024));
    CHECK(t.bands[0].min == doctest::Approx(-pi * pi / 8).epsilon(1e-9));
    CHECK(t.bands[0].max == doctest::Approx(3 * pi * pi / 8).epsilon(1e-9));
    auto z = detect_flat_bands(sample_bands(builtin("zd:1"), 256));
    CHECK(z.bands[0].min == doctest::Approx(-2.0));
    CHECK(z.bands[0].max == doctest::Approx(2.0));
}

TEST_CASE("graph_c flat segment measure converges like 2/N") {
    for (std::int64_t N : {256, 1024, 4096}) {
        auto rep = detect_flat_bands(sample_bands(builtin("graph_c"), N));
        REQUIRE(rep.flats.size() == 1);
        CHECK(std::abs(rep.flats[0].value) < 1e-12);
        CHECK(std::abs(rep.flats[0].measure - 0.5) <= 2.0 / N);
        CHECK(rep.bands[0].kind == "partly flat");
    }
}

TEST_CASE("flat detection on other crystals") {
    CHECK(detect_flat_bands(sample_bands(builtin("graph_a"), 1024)).flats.empty());
    auto cp = detect_flat_bands(sample_bands(builtin("c_pair"), 1024));
    bool zero = false;
    for (const auto& f : cp.flats)
        if (std::abs(f.value) < 1e-9 && f.measure >= 0.5) zero = true;
    CHECK(zero);
    for (const char* name : kAll) {
        auto s = builtin(name);
        auto g = sample_bands(s, s.d == 1 ? 256 : 16);
        auto rep = detect_flat_bands(g);
        for (const auto& f : rep.flats) {
            CHECK(f.measure >= 0.0);
            CHECK(f.measure <= 1.0);
        }
        for (double e : g.eigenvalues) {
            bool inside = false;
            for (const auto& [lo, hi] : rep.spectrum) inside = inside || (e >= lo && e <= hi);
            CHECK(inside);
        }
    }
}

TEST_CASE("quotient matrix sums match independent partial sums") {
    auto qb = quotient_matrix(builtin("graph_b"));
    CHECK(qb.A(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    // graph_a: 2 sum 1/(2 pi^2 k^2) = 1/6, partial sum plus integral tail
    double partial = 0.0;
    const int K = 1000000;
    for (int k = 1; k <= K; ++k) partial += 1.0 / (pi * pi * double(k) * k);
    auto qa = quotient_matrix(builtin("graph_a"));
    CHECK(qa.A(0, 0) >= partial - 1e-12);
    CHECK(qa.A(0, 0) <= partial + 1.0 / (pi * pi * K) + 1e-12);
    CHECK(qa.A(0, 0) == doctest::Approx(1.0 / 6).epsilon(1e-12));
    auto f = quotient_matrix(fig5_left());
    CHECK(f.irreducible);
    CHECK(f.A(0, 2) == 0.0);
    CHECK(f.A(1, 1) == 2.0);
}

TEST_CASE("Dirichlet form identity") {
    auto a = builtin("graph_a");
    Eigen::VectorXcd one = Eigen::VectorXcd::Ones(1);
    auto c0 = dirichlet_form_check(a, {0.0}, one);
    CHECK(std::abs(c0.lhs) < 1e-12);
    CHECK(std::abs(c0.rhs) < 1e-9);
    auto ch = dirichlet_form_check(a, {0.5}, one);
    CHECK(ch.diff <= std::max(1e-9, ch.error));
    // D - h(1/2) + Q = sum w - sum w (-1)^k = 4 sum_{k odd} 1/(2 pi^2 k^2) = 1/4
    CHECK(ch.lhs == doctest::Approx(0.25).epsilon(1e-9));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const char* names[] = {"fig5_right", "fig5_left", "c_pair", "zd:2", "graph_c"};
    for (int i = 0; i < 50; ++i) {
        auto s = builtin(names[i % 5]);
        std::vector<double> th(static_cast<size_t>(s.d));
        for (auto& x : th) x = 0.5 + 0.5 * u(rng);
        Eigen::VectorXcd f(s.nu);
        for (int j = 0; j < s.nu; ++j) f(j) = {u(rng), u(rng)};
        auto c = dirichlet_form_check(s, th, f);
        CHECK(c.diff <= std::max(1e-9, c.error));
    }
}

TEST_CASE("top band flatness verdicts") {
    CHECK(top_band_flatness(sample_bands(builtin("graph_c"), 1024)).passed);
    auto z = top_band_flatness(sample_bands(builtin("zd:2"), 32));
    CHECK(z.passed);
    CHECK(z.oscillation == doctest::Approx(8.0));
    auto even = top_band_flatness(sample_bands(builtin("adjacency_power:2"), 256));
    CHECK(even.skipped);
}

TEST_CASE("band CSV is deterministic") {
    auto s = builtin("fig5_right");
    auto one = bands_csv(sample_bands(s, 64, 1e-12, {1, false}));
    auto two = bands_csv(sample_bands(s, 64, 1e-12, {4, false}));
    CHECK(one == two);
    CHECK(one.rfind("theta_1,E_1,E_2,E_3\n", 0) == 0);
}

TEST_CASE("grid size must be a multiple of four") {
    CHECK_THROWS_AS(sample_bands(builtin("graph_a"), 30), Error);
}
