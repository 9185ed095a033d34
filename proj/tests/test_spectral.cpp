#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "crystal/builtins.hpp"
#include "crystal/floquet.hpp"
#include "crystal/spectral.hpp"

using namespace crystal;

namespace {

double mass_of(const OccupationHistogram& h) {
    double m = 0.0;
    for (double v : h.mass) m += v;
    return m;
}

}  // namespace

TEST_CASE("graph_b occupation of delta_0 is uniform on [0, 1/2]") {
    auto g = sample_bands(builtin("graph_b"), 4096);
    auto h = occupation_density(g, psi_hat_on_grid(g, {{0, 1.0}}), 50);
    CHECK(h.edges.front() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(h.edges.back() == doctest::Approx(0.5));
    for (double m : h.mass) CHECK(std::abs(m - 0.02) <= 2.0 / 4096);
}

TEST_CASE("graph_a occupation has the inverse square-root edge") {
    auto g = sample_bands(builtin("graph_a"), 1 << 14);
    auto h = occupation_density(g, psi_hat_on_grid(g, {{0, 1.0}}), 64);
    CHECK(h.mass[0] / h.mass[1] == doctest::Approx(1.0 / (std::sqrt(2.0) - 1.0)).epsilon(0.02));
}

TEST_CASE("graph_c occupation has an atom of mass 1/2 at 0") {
    auto g = sample_bands(builtin("graph_c"), 4096);
    auto h = occupation_density(g, psi_hat_on_grid(g, {{0, 1.0}}), 32);
    REQUIRE(h.atoms.size() == 1);
    CHECK(std::abs(h.atoms[0].first) < 1e-12);
    CHECK(std::abs(h.atoms[0].second - 0.5) <= 2.0 / 4096);
}

TEST_CASE("occupation mass equals the state norm") {
    const std::map<std::int64_t, std::complex<double>> psi = {{0, 1.0}, {2, {0.0, 0.5}}, {-7, 0.25}};
    const double norm2 = 1.0 + 0.25 + 0.0625;
    for (const char* name : {"graph_a", "graph_b", "graph_c", "thm1_3", "weierstrass", "sc_dyadic", "zd:1", "frac:1:0.5",
                             "adjacency_power:4", "dyadic_sqrt"}) {
        auto g = sample_bands(builtin(name), 4096);
        auto h = occupation_density(g, psi_hat_on_grid(g, psi), 40);
        CHECK(std::abs(mass_of(h) - norm2) < 1e-8);
        CHECK(std::abs(h.total - norm2) < 1e-8);
        for (double m : h.mass) CHECK(m >= 0.0);
        for (const auto& a : h.atoms) CHECK(a.second <= h.total + 1e-12);
    }
}

TEST_CASE("absolute continuity criterion") {
    auto a = ac_criterion(sample_bands(builtin("graph_a"), 1024));
    CHECK(a[0].verdict == "AC-consistent");
    CHECK(a[0].fraction_coarse < 4.0 / 1024);
    auto c = ac_criterion(sample_bands(builtin("graph_c"), 1024));
    CHECK(c[0].verdict == "FLAT-SUSPECT");
    CHECK(c[0].fraction_fine == doctest::Approx(0.5).epsilon(0.01));
    CHECK(ac_criterion(sample_bands(builtin("frac:1:0.5"), 1024))[0].verdict == "AC-consistent");
    auto sc = ac_criterion(sample_bands(builtin("sc_dyadic"), 1024));
    CHECK(sc[0].verdict != "FLAT-SUSPECT");
}

TEST_CASE("absolute continuity criterion agrees with flat detection") {
    for (const char* name : {"graph_a", "graph_b", "graph_c", "thm1_3", "weierstrass", "sc_dyadic", "zd:1", "frac:1:0.5",
                             "fig5_left", "fig5_right", "c_pair", "dyadic_sqrt"}) {
        const std::string label = name;
        CAPTURE(label);
        auto g = sample_bands(builtin(name), 1024);
        auto rep = detect_flat_bands(g);
        auto ac = ac_criterion(g);
        for (int b = 0; b < g.nu; ++b) {
            bool flat = false;
            for (const auto& f : rep.flats) {
                int hits = 0;
                for (std::int64_t p = 0; p < g.points(); ++p) hits += std::abs(g.E(p, b) - f.value) <= rep.tol_flat;
                flat = flat || static_cast<double>(hits) / static_cast<double>(g.points()) > rep.min_measure;
            }
            CHECK((ac[static_cast<size_t>(b)].verdict == "FLAT-SUSPECT") == flat);
        }
    }
}

TEST_CASE("difference quotients: Lipschitz symbols stay bounded") {
    std::vector<int> scales = {6, 7, 8, 9, 10, 11, 12};
    auto a = regularity_probe(builtin("graph_a"), scales);
    for (double q : a.quotient) CHECK(q <= 1.0 + 1e-9);
    CHECK_FALSE(a.unbounded);
    for (const char* name : {"graph_a", "zd:1", "adjacency_power:4", "graph_c"}) {
        auto p = regularity_probe(builtin(name), scales);
        for (double q : p.quotient) CHECK(q <= p.lipschitz_bound + 1e-9);
        CHECK(p.holder >= 0.0);
        CHECK(p.holder <= 1.0);
    }
}

TEST_CASE("difference quotients: dyadic symbols grow without saturating") {
    std::vector<int> scales = {6, 7, 8, 9, 10, 11, 12, 13, 14};
    auto w = regularity_probe(builtin("weierstrass"), scales);
    auto sc = regularity_probe(builtin("sc_dyadic"), scales);
    CHECK(w.unbounded);
    CHECK(sc.unbounded);
    CHECK(std::isinf(w.lipschitz_bound));
    for (size_t i = 1; i < w.quotient.size(); ++i) CHECK(w.quotient[i] > w.quotient[i - 1]);
    CHECK(sc.quotient.back() / sc.quotient.front() < w.quotient.back() / w.quotient.front());
    for (double q : w.quotient) CHECK(q >= 0.0);
}

TEST_CASE("histogram and probe CSV headers") {
    auto g = sample_bands(builtin("graph_b"), 256);
    CHECK(histogram_csv(occupation_density(g, psi_hat_on_grid(g, {{0, 1.0}}), 4)).rfind("bin_lo,bin_hi,mass\n", 0) == 0);
    CHECK(probe_csv(regularity_probe(builtin("graph_a"), {6, 7})).rfind("scale,max_quotient\n", 0) == 0);
}
