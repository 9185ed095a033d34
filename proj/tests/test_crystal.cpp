#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "crystal/builtins.hpp"
#include "crystal/floquet.hpp"
#include "crystal/floquet_function.hpp"
#include "crystal/fractional.hpp"
#include "crystal/spec.hpp"

using namespace crystal;
constexpr double pi = std::numbers::pi;

namespace {

CrystalSpec single(std::map<std::int64_t, double> w, double Q = 0.0) {
    CrystalSpec s = make_spec(1, 1, "test");
    s.Q[0] = Q;
    for (auto [k, v] : w) s.w(0, 0).entries[{k}] = v;
    return s;
}

ErrorCode raised(const CrystalSpec& s) {
    try {
        ensure_valid(s);
    } catch (const Error& e) {
        return e.code();
    }
    return static_cast<ErrorCode>(0);
}

// (A_Z^p)(0, k) by repeated multiplication on a window.
std::vector<double> adjacency_power_window(int p, int L) {
    const int n = 2 * L + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n), P = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = A(i + 1, i) = 1.0;
    for (int i = 0; i < p; ++i) P = P * A;
    std::vector<double> row(static_cast<size_t>(n));
    for (int k = -L; k <= L; ++k) row[static_cast<size_t>(k + L)] = P(L, L + k);
    return row;
}

}  // namespace

TEST_CASE("inverse-square weights are summable with total pi^2/3") {
    CrystalSpec s = make_spec(1, 1, "inverse square");
    TailRule r;
    r.c = 1.0;
    r.p = 2.0;
    s.w(0, 0).tails.push_back(r);
    auto rep = validate(s);
    CHECK(rep.ok());
    auto total = s.w(0, 0).total();
    CHECK(std::abs(total.value - pi * pi / 3) <= total.error + 1e-12);
    double partial = 0.0;
    for (int k = 1; k <= 100000; ++k) partial += 2.0 / (double(k) * k);
    CHECK(partial <= total.value + 1e-12);
    CHECK(total.value <= partial + 2.0 / 100000 + 1e-12);
}

TEST_CASE("validation reports the first violated condition") {
    CHECK(raised(single({{1, 1.0}, {-1, 2.0}})) == ErrorCode::SymmetryViolation);
    CHECK(raised(single({{1, -1.0}, {-1, -1.0}})) == ErrorCode::NotAdmissible);
    CHECK(raised(single({{0, 1.0}})) == ErrorCode::InvalidArgument);
    CrystalSpec div = make_spec(1, 1, "divergent");
    TailRule r;
    r.c = 1.0;
    r.p = 1.0;
    div.w(0, 0).tails.push_back(r);
    CHECK(raised(div) == ErrorCode::SummabilityViolation);

    auto rep = validate(single({{1, 1.0}, {-1, 2.0}}));
    bool named = false;
    for (const auto& c : rep.checks)
        if (!c.passed) named = c.detail.find("(0,0,") != std::string::npos;
    CHECK(named);
}

TEST_CASE("Z^d adjacency totals 2d") {
    for (int d = 1; d <= 3; ++d) {
        auto s = zd_adjacency(d);
        CHECK(validate(s).ok());
        CHECK(s.w(0, 0).total().value == doctest::Approx(2.0 * d).epsilon(1e-15));
    }
}

TEST_CASE("every builtin validates and is symmetric entry by entry") {
    std::mt19937_64 rng(7);
    for (const char* name : {"graph_a", "graph_b", "graph_c", "thm1_1", "thm1_2", "thm1_3", "weierstrass", "sc_dyadic",
                             "zd:1", "zd:2", "frac:1:0.5", "adjacency_power:4", "fig5_left", "fig5_right", "c_pair",
                             "dyadic_sqrt"}) {
        const std::string label = name;
        CAPTURE(label);
        auto s = builtin(name);
        CHECK(validate(s).ok());
        for (int i = 0; i < s.nu; ++i)
            for (int j = 0; j < s.nu; ++j)
                for (const auto& [k, w] : s.w(i, j).entries) {
                    Index mk = k;
                    for (auto& x : mk) x = -x;
                    CHECK(s.w(j, i).at(mk) == w);
                }
        // random far-out indices go through the tail rules
        std::uniform_int_distribution<std::int64_t> pick(-5000, 5000);
        for (int n = 0; n < 20 && s.d == 1; ++n) {
            std::int64_t k = pick(rng);
            for (int i = 0; i < s.nu; ++i)
                for (int j = 0; j < s.nu; ++j) CHECK(s.w(i, j).at({k}) == s.w(j, i).at({-k}));
        }
    }
}

TEST_CASE("connectivity on the lattice and the quotient") {
    CHECK(check_connected(single({{1, 0.5}, {-1, 0.5}})).connected);
    auto even = check_connected(single({{2, 1.0}, {-2, 1.0}, {4, 0.5}, {-4, 0.5}}));
    CHECK_FALSE(even.connected);
    CHECK(even.index == 2);
    CHECK(check_connected(fig5_left()).connected);
    CHECK(check_connected(builtin("adjacency_power:2")).index == 2);

    CrystalSpec block = make_spec(1, 2, "block");
    block.w(0, 0).entries[{1}] = block.w(0, 0).entries[{-1}] = 1.0;
    block.w(1, 1).entries[{1}] = block.w(1, 1).entries[{-1}] = 1.0;
    auto rep = check_connected(block);
    CHECK_FALSE(rep.quotient_connected);
    CHECK(rep.component[0] != rep.component[1]);
    auto q = quotient_matrix(block);
    CHECK_FALSE(q.irreducible);
    CHECK_FALSE(q.witness.empty());
}

TEST_CASE("closed-form Floquet functions give the known coefficients") {
    auto a = from_floquet_function(function_a(), 64);
    CHECK(a.Q[0] == doctest::Approx(1.0 / 12).epsilon(1e-15));
    for (std::int64_t k : {1, 2, 7, 1000}) CHECK(a.w(0, 0).at({k}) == doctest::Approx(1.0 / (2 * pi * pi * k * k)).epsilon(1e-14));
    auto b = from_floquet_function(function_b(), 64);
    CHECK(b.Q[0] == doctest::Approx(0.25));
    CHECK(b.w(0, 0).at({3}) == doctest::Approx(1.0 / (9 * pi * pi)).epsilon(1e-14));
    CHECK(b.w(0, 0).at({4}) == 0.0);
    auto c = from_floquet_function(function_c(), 64);
    CHECK(c.Q[0] == doctest::Approx(1.0 / 16));
    CHECK(c.w(0, 0).at({1}) == doctest::Approx(1.0 / (2 * pi * pi)).epsilon(1e-14));
    CHECK(c.w(0, 0).at({2}) == doctest::Approx(1.0 / (4 * pi * pi)).epsilon(1e-14));
    CHECK(std::abs(c.w(0, 0).at({4})) < 1e-18);
}

TEST_CASE("trapezoid coefficients match the closed forms") {
    auto res = compute_coefficients([](double x) { return function_c()(x); }, 64, 1e-13);
    for (std::int64_t k = 1; k <= 64; ++k) {
        double exact = (2.0 - (1.0 + (k % 2 == 0 ? 1.0 : -1.0)) * std::cos(pi * k / 2)) / (4 * pi * pi * k * k);
        CHECK(std::abs(res.coef[static_cast<size_t>(k)] - exact) < 1e-10);
    }
}

TEST_CASE("indicator convolved with itself is the tent") {
    auto f = indicator(0.125);
    auto c = convolve(f, f);
    for (std::int64_t k = 1; k <= 40; ++k) {
        double s = std::sin(pi * k / 4);
        CHECK(c.coef(k) == doctest::Approx(s * s / (pi * pi * k * k)).epsilon(1e-12));
    }
    for (double x : {0.0, 0.1, 0.3, 0.8}) CHECK(c(x) == doctest::Approx(function_c()(x)).epsilon(1e-9));
}

TEST_CASE("scale and shift of a gives the inverse-square crystal") {
    auto s = from_floquet_function(scale_shift(function_a(), 2 * pi * pi, -pi * pi / 6), 64);
    CHECK(std::abs(s.Q[0]) < 1e-14);
    for (std::int64_t k : {1, 5, 300}) CHECK(s.w(0, 0).at({k}) == doctest::Approx(1.0 / double(k * k)).epsilon(1e-13));
    auto t = builtin("thm1_1");
    for (std::int64_t k : {1, 5, 300}) CHECK(t.w(0, 0).at({k}) == doctest::Approx(s.w(0, 0).at({k})).epsilon(1e-13));
}

TEST_CASE("product with the constant one is the identity") {
    auto f = trigonometric(0.5, {0.25, 0.125, 0.0625});
    auto g = multiply(constant(1.0), f);
    CHECK(*g.mean == doctest::Approx(*f.mean));
    for (std::int64_t k = 1; k <= 5; ++k) CHECK(g.coef(k) == doctest::Approx(f.coef(k)).epsilon(1e-15));
}

TEST_CASE("product coefficients equal the discrete convolution") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> fw(4), gw(3);
        for (auto& x : fw) x = u(rng);
        for (auto& x : gw) x = u(rng);
        double fq = u(rng), gq = u(rng);
        auto h = multiply(trigonometric(fq, fw), trigonometric(gq, gw));
        auto fc = [&](std::int64_t k) { k = std::abs(k); return k == 0 ? fq : k <= 4 ? fw[size_t(k - 1)] : 0.0; };
        auto gc = [&](std::int64_t k) { k = std::abs(k); return k == 0 ? gq : k <= 3 ? gw[size_t(k - 1)] : 0.0; };
        for (std::int64_t k = 0; k <= 9; ++k) {
            double brute = 0.0;
            for (std::int64_t j = -10; j <= 10; ++j) brute += fc(j) * gc(k - j);
            double got = k == 0 ? *h.mean : h.coef(k);
            CHECK(got == doctest::Approx(brute).epsilon(1e-13));
        }
    }
}

TEST_CASE("Floquet function is real and reflection symmetric") {
    for (const char* name : {"graph_a", "graph_b", "graph_c", "weierstrass", "sc_dyadic", "frac:1:0.5", "zd:1"}) {
        const std::string label = name;
        CAPTURE(label);
        auto s = builtin(name);
        for (int m = 0; m < 64; ++m) {
            double th = m / 64.0;
            auto h1 = floquet_matrix(s, {th})(0, 0), h2 = floquet_matrix(s, {1.0 - th})(0, 0);
            CHECK(std::abs(h1.imag()) < 1e-10);
            CHECK(std::abs(h1.real() - h2.real()) < 1e-10);
        }
    }
}

TEST_CASE("fractional Laplacian at alpha = 1 is the lattice Laplacian") {
    auto s = fractional_laplacian(1, 1.0);
    CHECK(s.Q[0] == doctest::Approx(2.0));
    CHECK(s.w(0, 0).at({1}) == doctest::Approx(1.0));
    CHECK(s.w(0, 0).at({2}) == 0.0);
    CHECK(heat_kernel_crosscheck(0.999999, 1) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("fractional weights: positivity, diagonal identity, partial-sum bracket") {
    for (double alpha : {0.3, 0.5, 0.7}) {
        CAPTURE(alpha);
        auto s = fractional_laplacian(1, alpha);
        const auto& w = s.w(0, 0);
        const double diag = std::tgamma(1 + 2 * alpha) / std::pow(std::tgamma(1 + alpha), 2);
        CHECK(s.Q[0] == doctest::Approx(diag).epsilon(1e-9));
        double partial = 0.0;
        for (std::int64_t k = 1; k <= 1 << 14; ++k) {
            double v = w.at({k});
            if (k <= 64) CHECK(v > 0.0);
            partial += 2.0 * v;
            if ((k & (k - 1)) == 0) {
                CHECK(partial <= diag + 1e-12);
                CHECK(diag <= partial + w.tail_bound(k) + 1e-12);
            }
        }
    }
    CHECK(fractional_laplacian(1, 0.5).Q[0] == doctest::Approx(4 / pi).epsilon(1e-12));
}

TEST_CASE("fractional weights agree with the Bessel heat-kernel integral") {
    for (double alpha : {0.3, 0.5, 0.7}) {
        auto s = fractional_laplacian(1, alpha);
        for (std::int64_t k : {1, 2, 5}) CHECK(std::abs(s.w(0, 0).at({k}) - heat_kernel_crosscheck(alpha, k)) < 1e-8);
    }
}

TEST_CASE("fractional weights decay like k^(-1-2 alpha)") {
    for (double alpha : {0.3, 0.5}) {
        auto s = fractional_laplacian(1, alpha);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (std::int64_t k = 32; k <= 64; ++k, ++n) {
            double x = std::log(double(k)), y = std::log(s.w(0, 0).at({k}));
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        CHECK(slope == doctest::Approx(-1 - 2 * alpha).epsilon(0.03));
    }
}

TEST_CASE("dyadic builtins have the stated weights") {
    auto w = weierstrass();
    for (int n = 1; n <= 20; ++n) {
        std::int64_t k = std::int64_t{1} << (n - 1);
        CHECK(w.w(0, 0).at({k}) == doctest::Approx(1.0 / (4.0 * k)).epsilon(1e-15));
        if (k > 2) CHECK(w.w(0, 0).at({k + 1}) == 0.0);
    }
    auto sc = sc_dyadic();
    CHECK(sc.w(0, 0).at({1}) == doctest::Approx(0.25));
    CHECK(sc.w(0, 0).at({2}) == doctest::Approx(1.0 / (8 * std::sqrt(2.0))));
    CHECK(sc.w(0, 0).at({3}) == 0.0);
}

TEST_CASE("adjacency powers match matrix powers on a window") {
    for (int p : {2, 4, 6}) {
        auto s = adjacency_power(p);
        auto row = adjacency_power_window(p, 20);
        CHECK(s.Q[0] == doctest::Approx(row[20]));
        for (int k = 1; k <= 10; ++k) CHECK(s.w(0, 0).at({k}) == doctest::Approx(row[size_t(20 + k)]));
    }
}

TEST_CASE("norm bound dominates every sampled eigenvalue") {
    for (const char* name : {"graph_a", "thm1_3", "c_pair", "fig5_left", "fig5_right", "zd:2", "weierstrass"}) {
        const std::string label = name;
        CAPTURE(label);
        auto s = builtin(name);
        auto g = sample_bands(s, s.d == 1 ? 256 : 32);
        double bound = norm_bound(s);
        for (double e : g.eigenvalues) CHECK(std::abs(e) <= bound + 1e-12);
    }
}

TEST_CASE("JSON round trip and loading errors") {
    for (const char* name : {"graph_b", "fig5_right", "sc_dyadic", "zd:2"}) {
        auto s = builtin(name);
        auto t = parse_spec_json(spec_to_json(s));
        CHECK(t.d == s.d);
        CHECK(t.nu == s.nu);
        for (int i = 0; i < s.nu; ++i)
            for (int j = 0; j < s.nu; ++j)
                for (std::int64_t k = -70; k <= 70; ++k) {
                    Index idx(static_cast<size_t>(s.d), 0);
                    idx[0] = k;
                    CHECK(t.w(i, j).at(idx) == s.w(i, j).at(idx));
                }
    }
    auto expect = [](auto fn, ErrorCode code) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code() == code;
        }
        return false;
    };
    CHECK(expect([] { parse_spec_json("{\"d\": 1,"); }, ErrorCode::ParseError));
    CHECK(expect([] { builtin("no_such_graph"); }, ErrorCode::UnknownBuiltin));
    CHECK(expect([] { load_spec("/nonexistent/spec.json"); }, ErrorCode::IoError));

    auto path = std::filesystem::temp_directory_path() / "crystal_roundtrip.json";
    std::ofstream(path) << R"({"d":1,"nu":1,"Q":[0.0],"label":"nn","weights":[{"i":0,"j":0,"entries":[[1,1.0],[-1,1.0]]}]})";
    auto nn = load_spec(path.string());
    CHECK(nn.w(0, 0).at({1}) == 1.0);
    CHECK(validate(nn).ok());
    std::filesystem::remove(path);
}
