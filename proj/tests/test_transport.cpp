#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "crystal/builtins.hpp"
#include "crystal/spec.hpp"
#include "crystal/transport.hpp"

using namespace crystal;
constexpr double pi = std::numbers::pi;

TEST_CASE("nearest-neighbor MSD equals 2 t^2") {
    MsdOptions o;
    o.M_start = 256;
    auto r = msd_series(builtin("zd:1"), {1.0, 5.0, 20.0, 60.0}, o);
    for (size_t i = 0; i < r.t.size(); ++i) {
        REQUIRE(r.converged[i]);
        CHECK(r.msd[i] == doctest::Approx(2 * r.t[i] * r.t[i]).epsilon(1e-8));
    }
    CHECK(r.analytic_limit == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r.verdict == "ballistic");
}

TEST_CASE("analytic ballistic limits") {
    CHECK(analytic_ballistic_limit(builtin("graph_b")).value == doctest::Approx(1 / (4 * pi * pi)).epsilon(1e-9));
    CHECK(analytic_ballistic_limit(builtin("graph_c")).value == doctest::Approx(1 / (8 * pi * pi)).epsilon(1e-9));
    CHECK(analytic_ballistic_limit(builtin("graph_a")).value == doctest::Approx(1 / (12 * pi * pi)).epsilon(1e-6));
}

TEST_CASE("ballistic limit scales quadratically and ignores shifts") {
    auto base = parse_spec_json(
        R"({"d":1,"nu":1,"Q":[0.0],"weights":[{"i":0,"j":0,"entries":[[1,1.0],[-1,1.0]]}]})");
    auto scaled = parse_spec_json(
        R"({"d":1,"nu":1,"Q":[5.0],"weights":[{"i":0,"j":0,"entries":[[1,3.0],[-1,3.0]]}]})");
    double b = analytic_ballistic_limit(base).value;
    CHECK(b == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(analytic_ballistic_limit(scaled).value == doctest::Approx(9 * b).epsilon(1e-10));
}

TEST_CASE("graph_b MSD / t^2 approaches the limit") {
    MsdOptions o;
    o.rel_tol = 1e-8;
    auto r = msd_series(builtin("graph_b"), {50.0, 100.0, 200.0}, o);
    for (size_t i = 0; i < r.t.size(); ++i) CHECK(std::isfinite(r.msd[i]));
    double last = r.msd.back() / (r.t.back() * r.t.back());
    CHECK(last == doctest::Approx(1 / (4 * pi * pi)).epsilon(0.02));
}

TEST_CASE("super-ballistic detector is monotone in alpha") {
    auto e = superballistic_detector({0.1, 0.2, 0.3, 0.4}, 100.0, {64, 256, 1024});
    REQUIRE(e.size() == 4);
    for (size_t i = 1; i < e.size(); ++i) CHECK(e[i].window_ratio <= e[i - 1].window_ratio);
    CHECK(e[0].verdict == "super-ballistic");
    CHECK(e[3].verdict == "ballistic");
}

TEST_CASE("layer speeds") {
    auto right = layer_speed(fig5_right());
    CHECK(right.positive);
    auto a = layer_speed(builtin("graph_a"), 4096);
    CHECK(a.total == doctest::Approx(analytic_ballistic_limit(builtin("graph_a")).value).epsilon(1e-3));
    CHECK_THROWS_AS(layer_speed(builtin("adjacency_power:2")), Error);
}

TEST_CASE("window sums are nondecreasing in M") {
    auto w = msd_window_sums(builtin("graph_a"), 30.0, {16, 32, 64, 128}, 4096);
    for (size_t i = 1; i < w.S.size(); ++i) CHECK(w.S[i] >= w.S[i - 1]);
    CHECK(w.ratio >= 1.0);
}
