#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fmt/format.h>
#include <gsl/gsl_sf_zeta.h>

#include <cmath>
#include <numbers>
#include <random>

#include "crystal/builtins.hpp"
#include "crystal/locality.hpp"

using namespace crystal;
constexpr double pi = std::numbers::pi;

TEST_CASE("nearest-neighbor commutator is rank two") {
    auto s = parse_spec_json(R"({"d":1,"nu":1,"Q":[0.0],"weights":[{"i":0,"j":0,"entries":[[1,1.0],[-1,1.0]]}]})");
    auto r = hs_norm(s, 64);
    CHECK(r.limit == doctest::Approx(2.0));
    CHECK(r.partial.back() == doctest::Approx(2.0));
    CHECK(r.verdict == "converges");
    for (const auto& b : finite_rank_error(s, {1, 2, 10})) CHECK(b.bound == 0.0);
}

TEST_CASE("graph_a commutator norm is zeta(3) / (2 pi^4)") {
    auto r = hs_norm(builtin("graph_a"), 1 << 16);
    CHECK(r.verdict == "converges");
    CHECK(r.limit == doctest::Approx(gsl_sf_zeta(3.0) / (2 * std::pow(pi, 4))).epsilon(1e-10));
    for (size_t i = 0; i < r.R.size(); ++i) {
        CHECK(r.partial[i] <= r.limit + 1e-15);
        CHECK(r.partial[i] + r.tail[i] >= r.limit - 1e-15);
    }
}

TEST_CASE("reindexed sum equals the direct double sum") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> len(1, 25);
    for (int trial = 0; trial < 20; ++trial) {
        const int K = len(rng);
        std::vector<double> w(static_cast<size_t>(K + 1), 0.0);
        std::string entries;
        for (int k = 1; k <= K; ++k) {
            w[static_cast<size_t>(k)] = u(rng) < 0.3 ? 0.0 : u(rng);
            entries += fmt::format("{}[{},{:.17g}],[{},{:.17g}]", entries.empty() ? "" : ",", k, w[k], -k, w[k]);
        }
        if (entries.empty()) continue;
        auto s = parse_spec_json(fmt::format(
            R"({{"d":1,"nu":1,"Q":[0.0],"weights":[{{"i":0,"j":0,"entries":[{}]}}]}})", entries));
        // ||[H, 1_{n >= 0}]||_HS^2 = sum over pairs across the cut, both orders
        double direct = 0.0;
        for (int n = 0; n <= K; ++n)
            for (int m = -K; m < 0; ++m)
                if (n - m <= K) direct += 2.0 * w[static_cast<size_t>(n - m)] * w[static_cast<size_t>(n - m)];
        auto r = hs_norm(s, 64);
        CHECK(r.partial.back() == doctest::Approx(direct).epsilon(1e-13));
        CHECK(r.verdict == "converges");
    }
}

TEST_CASE("summable decreasing weights converge") {
    for (const char* name : {"graph_b", "graph_c", "weierstrass", "sc_dyadic", "frac:1:0.5"}) {
        const std::string label = name;
        CAPTURE(label);
        CHECK(hs_norm(builtin(name), 1 << 14).verdict == "converges");
    }
}

TEST_CASE("dyadic 1/sqrt(k) weights diverge") {
    auto r = hs_norm(builtin("dyadic_sqrt"), 1 << 20);
    CHECK(r.verdict == "diverges");
    double at10 = 0.0, at20 = 0.0;
    for (size_t i = 0; i < r.R.size(); ++i) {
        if (r.R[i] == 1 << 10) at10 = r.partial[i];
        if (r.R[i] == 1 << 20) at20 = r.partial[i];
    }
    CHECK(at20 - at10 == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(std::isinf(r.tail.back()));
}

TEST_CASE("finite-rank approximation bounds") {
    auto w = finite_rank_error(builtin("weierstrass"), {1024});
    CHECK(w[0].bound == doctest::Approx(std::sqrt(2.0) * std::ldexp(1.0, -12)).epsilon(1e-12));
    auto a = finite_rank_error(builtin("graph_a"), {100, 1000, 10000});
    CHECK(a[0].bound <= std::sqrt(2.0) / (pi * pi * 100));
    CHECK(a[1].bound < a[0].bound);
    CHECK(a[2].bound < a[1].bound);
}

TEST_CASE("CSV header") {
    CHECK(commutator_csv(hs_norm(builtin("graph_b"), 8)).rfind("R,partial_hs2,tail_bound\n", 0) == 0);
}
