#include "crystal/builtins.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>

#include "crystal/floquet_function.hpp"
#include "crystal/fractional.hpp"

namespace crystal {

namespace {

constexpr double kPi = std::numbers::pi;

CrystalSpec labelled(CrystalSpec s, std::string label) {
    s.label = std::move(label);
    return s;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

CrystalSpec dyadic(double c, double p, double q, std::string label) {
    CrystalSpec s = make_spec(1, 1, std::move(label));
    TailRule r;
    r.pattern = TailRule::Pattern::Dyadic;
    r.c = c;
    r.p = p;
    r.q = q;
    s.w(0, 0).tails = {r};
    return s;
}

void link(CrystalSpec& s, int i, int j, std::int64_t k, double w) {
    s.w(i, j).entries[{k}] = w;
    s.w(j, i).entries[{-k}] = w;
}

}  // namespace

CrystalSpec zd_adjacency(int d) {
    if (d < 1 || d > 8) throw Error(ErrorCode::InvalidArgument, "zd needs 1 <= d <= 8");
    CrystalSpec s = make_spec(d, 1, "zd(" + std::to_string(d) + ")");
    for (int i = 0; i < d; ++i)
        for (std::int64_t e : {-1, 1}) {
            Index k(static_cast<size_t>(d), 0);
            k[static_cast<size_t>(i)] = e;
            s.w(0, 0).entries[k] = 1.0;
        }
    auto sym = std::make_shared<Symbol>();
    sym->value = [](std::span<const double> t) {
        double v = 0.0;
        for (double x : t) v += 2.0 * std::cos(2.0 * kPi * x);
        return v;
    };
    sym->gradient = [](std::span<const double> t, std::span<double> g) {
        for (size_t i = 0; i < t.size(); ++i) g[i] = -4.0 * kPi * std::sin(2.0 * kPi * t[i]);
    };
    s.symbol = sym;
    return s;
}

CrystalSpec adjacency_power(int p) {
    if (p < 1 || p > 60) throw Error(ErrorCode::InvalidArgument, "adjacency_power needs 1 <= p <= 60");
    CrystalSpec s = make_spec(1, 1, "adjacency_power(" + std::to_string(p) + ")");
    for (int k = -p; k <= p; ++k) {
        if ((p + k) % 2 != 0) continue;
        double w = binomial(p, (p + k) / 2);
        if (k == 0) s.Q[0] = w;
        else s.w(0, 0).entries[{k}] = w;
    }
    auto sym = std::make_shared<Symbol>();
    sym->value = [p](std::span<const double> t) { return std::pow(2.0 * std::cos(2.0 * kPi * t[0]), p); };
    sym->gradient = [p](std::span<const double> t, std::span<double> g) {
        double c = 2.0 * std::cos(2.0 * kPi * t[0]);
        g[0] = p * std::pow(c, p - 1) * (-4.0 * kPi * std::sin(2.0 * kPi * t[0]));
    };
    s.symbol = sym;
    return s;
}

CrystalSpec weierstrass() { return dyadic(0.25, 1.0, 0.0, "weierstrass"); }
CrystalSpec sc_dyadic() { return dyadic(0.25, 1.0, 0.5, "sc_dyadic"); }
CrystalSpec dyadic_sqrt() { return dyadic(1.0, 0.5, 0.0, "dyadic_sqrt"); }

CrystalSpec fig5_left() {
    CrystalSpec s = make_spec(1, 3, "fig5_left");
    link(s, 1, 1, 1, 1.0);
    link(s, 0, 1, 0, 1.0);
    link(s, 1, 2, 0, 1.0);
    return s;
}

CrystalSpec fig5_right() {
    CrystalSpec s = make_spec(1, 3, "fig5_right");
    for (int i = 0; i < 3; ++i) link(s, i, i, 1, 1.0);
    link(s, 0, 1, 0, 1.0);
    link(s, 1, 2, 0, 1.0);
    return s;
}

CrystalSpec c_pair() {
    const auto c = function_c();
    const auto c2 = multiply(c, c);
    const auto c3 = multiply(c2, c);
    const std::int64_t ncoef = 256;
    CrystalSpec s = make_spec(1, 2, "c_pair");
    double m3 = 0.0, m2 = 0.0, m1 = 0.0;
    s.w(0, 0) = coefficient_family(c3, ncoef, m3);
    s.Q[0] = m3;
    WeightFamily off = coefficient_family(c2, ncoef, m2);
    off.entries[{0}] = m2;
    s.w(0, 1) = off;
    s.w(1, 0) = off.reflected();
    s.w(1, 1) = coefficient_family(c, 0, m1);
    s.Q[1] = m1;
    auto sym = std::make_shared<Symbol>();
    sym->matrix = [c](std::span<const double> t) {
        double v = c(t[0]);
        Eigen::MatrixXcd H(2, 2);
        H << v * v * v, v * v, v * v, v;
        return H;
    };
    s.symbol = sym;
    s.fitted_tails = true;
    return s;
}

CrystalSpec builtin(const std::string& raw) {
    std::string name = raw;
    name.erase(std::remove_if(name.begin(), name.end(), [](unsigned char ch) { return std::isspace(ch); }),
               name.end());
    static const std::regex call(R"(^([a-z_0-9]+)[:(]([^)]*)\)?$)");
    std::smatch m;
    std::string head = name;
    std::vector<std::string> args;
    if (std::regex_match(name, m, call)) {
        head = m[1];
        std::string rest = m[2];
        size_t pos = 0;
        while (true) {
            size_t next = rest.find_first_of(",:", pos);
            args.push_back(rest.substr(pos, next - pos));
            if (next == std::string::npos) break;
            pos = next + 1;
        }
    }
    auto num = [&](size_t i) {
        if (i >= args.size()) throw Error(ErrorCode::UnknownBuiltin, "builtin '" + raw + "' is missing arguments");
        try {
            size_t used = 0;
            double v = std::stod(args[i], &used);
            if (used != args[i].size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw Error(ErrorCode::UnknownBuiltin, "builtin '" + raw + "' has a malformed argument");
        }
    };
    auto integer = [&](size_t i) {
        double v = num(i);
        if (v != std::floor(v)) throw Error(ErrorCode::UnknownBuiltin, "builtin '" + raw + "' needs an integer argument");
        return static_cast<int>(v);
    };

    if (args.empty()) {
        if (name == "graph_a") return labelled(from_floquet_function(function_a(), 0), "graph_a");
        if (name == "graph_b") return labelled(from_floquet_function(function_b(), 0), "graph_b");
        if (name == "graph_c") return labelled(from_floquet_function(function_c(), 0), "graph_c");
        if (name == "thm1_1")
            return labelled(from_floquet_function(scale_shift(function_a(), 2 * kPi * kPi, -kPi * kPi / 6), 0), "thm1_1");
        if (name == "thm1_2")
            return labelled(from_floquet_function(scale_shift(function_b(), kPi * kPi, -kPi * kPi / 4), 0), "thm1_2");
        if (name == "thm1_3")
            return labelled(from_floquet_function(scale_shift(function_c(), 2 * kPi * kPi, -kPi * kPi / 8), 0), "thm1_3");
        if (name == "weierstrass") return weierstrass();
        if (name == "sc_dyadic") return sc_dyadic();
        if (name == "dyadic_sqrt") return dyadic_sqrt();
        if (name == "fig5_left") return fig5_left();
        if (name == "fig5_right") return fig5_right();
        if (name == "c_pair") return c_pair();
    } else {
        if (head == "zd" && args.size() == 1) return zd_adjacency(integer(0));
        if (head == "adjacency_power" && args.size() == 1) return adjacency_power(integer(0));
        if (head == "frac" && (args.size() == 2 || args.size() == 3))
            return fractional_laplacian(integer(0), num(1), args.size() == 3 ? integer(2) : 64);
    }
    throw Error(ErrorCode::UnknownBuiltin, "unknown builtin '" + raw + "'");
}

std::vector<std::string> builtin_names() {
    return {"graph_a", "graph_b", "graph_c", "thm1_1", "thm1_2", "thm1_3", "weierstrass", "sc_dyadic",
            "zd(d)", "frac(d,alpha)", "adjacency_power(p)", "fig5_left", "fig5_right", "c_pair", "dyadic_sqrt"};
}

}  // namespace crystal
