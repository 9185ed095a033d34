#include "crystal/floquet_function.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <sstream>

#include "fft.hpp"

namespace crystal {

namespace {

constexpr double kPi = std::numbers::pi;

double frac01(double x) { return x - std::floor(x); }

// Signed distance of theta to 0 on the circle, in [-1/2, 1/2).
double centered(double theta) {
    double t = frac01(theta + 0.5) - 0.5;
    return t;
}

void check_admissible(const FloquetFunctionSpec& f, std::int64_t upto = 64) {
    if (!f.has_coefficients()) return;
    std::int64_t K = f.support >= 0 ? std::min(upto, f.support) : upto;
    for (std::int64_t k = 1; k <= K; ++k) {
        double v = f.coef(k);
        if (v < -1e-14) {
            std::ostringstream os;
            os << f.name << ": coefficient at k = " << k << " is " << v << " < 0";
            throw Error(ErrorCode::NotAdmissible, os.str());
        }
    }
    for (const auto& r : f.tails)
        if (r.c < 0.0) throw Error(ErrorCode::NotAdmissible, f.name + ": negative tail constant");
}

// Recognize coef(k) = v_{k mod P} k^-p exactly for k > from, with small p and P.
std::vector<TailRule> detect_tails(const std::function<double(std::int64_t)>& coef, std::int64_t from) {
    for (int p = 1; p <= 8; ++p)
        for (std::int64_t P = 1; P <= 64; ++P) {
            std::vector<double> v(static_cast<size_t>(P));
            double scale = 0.0;
            for (std::int64_t k = from + 1; k <= from + P; ++k) {
                v[static_cast<size_t>(k % P)] = coef(k) * std::pow(static_cast<double>(k), p);
                scale = std::max(scale, std::abs(v[static_cast<size_t>(k % P)]));
            }
            if (scale == 0.0) return {};
            bool ok = true;
            for (std::int64_t k = from + P + 1; ok && k <= from + 8 * P + 16; ++k) {
                double x = coef(k) * std::pow(static_cast<double>(k), p);
                if (std::abs(x - v[static_cast<size_t>(k % P)]) > 1e-11 * scale) ok = false;
            }
            if (!ok) continue;
            for (auto& x : v)
                if (std::abs(x) < 1e-13 * scale) x = 0.0;
            std::vector<TailRule> rules;
            auto rule = [&](TailRule::Pattern pat, double c, std::int64_t a, std::int64_t b) {
                TailRule r;
                r.pattern = pat;
                r.c = c;
                r.p = p;
                r.a = a;
                r.b = b;
                rules.push_back(r);
            };
            if (P == 1) rule(TailRule::Pattern::All, v[0], 0, 1);
            else if (P == 2 && v[0] == 0.0) rule(TailRule::Pattern::Odd, v[1], 0, 1);
            else
                for (std::int64_t a = 0; a < P; ++a)
                    if (v[static_cast<size_t>(a)] != 0.0)
                        rule(TailRule::Pattern::Progression, v[static_cast<size_t>(a)], a, P);
            return rules;
        }
    return {};
}

// Value function backed by the coefficient series itself.
void attach_series_value(FloquetFunctionSpec& f) {
    double mean = 0.0;
    auto fam = std::make_shared<WeightFamily>(coefficient_family(f, 4096, mean, 1.0));
    f.value = [fam, mean](double theta) {
        return mean + fam->fourier({theta}, 1e-14).real();
    };
}

}  // namespace

double FloquetFunctionSpec::operator()(double theta) const {
    if (!value) throw Error(ErrorCode::PreconditionFailed, name + ": no value function");
    return value(frac01(theta));
}

FloquetFunctionSpec function_a() {
    FloquetFunctionSpec f;
    f.name = "a";
    f.value = [](double t) { return (t - 0.5) * (t - 0.5); };
    f.derivative = [](double t) { return 2.0 * (t - 0.5); };
    f.kinks = {0.0};
    f.mean = 1.0 / 12.0;
    f.coef = [](std::int64_t k) { return 1.0 / (2.0 * kPi * kPi * static_cast<double>(k * k)); };
    f.tails = {TailRule{TailRule::Pattern::All, 1.0 / (2.0 * kPi * kPi), 2.0}};
    return f;
}

FloquetFunctionSpec function_b() {
    FloquetFunctionSpec f;
    f.name = "b";
    f.value = [](double t) { return std::abs(0.5 - t); };
    f.derivative = [](double t) { return t < 0.5 ? -1.0 : 1.0; };
    f.kinks = {0.0, 0.5};
    f.mean = 0.25;
    f.coef = [](std::int64_t k) {
        return k % 2 ? 1.0 / (kPi * kPi * static_cast<double>(k * k)) : 0.0;
    };
    f.tails = {TailRule{TailRule::Pattern::Odd, 1.0 / (kPi * kPi), 2.0}};
    return f;
}

FloquetFunctionSpec function_c() {
    FloquetFunctionSpec f;
    f.name = "c";
    f.value = [](double t) { return std::max(0.0, 0.25 - std::abs(centered(t))); };
    f.derivative = [](double t) {
        double s = centered(t);
        if (std::abs(s) >= 0.25) return 0.0;
        return s > 0 ? -1.0 : 1.0;
    };
    f.kinks = {0.0, 0.25, 0.75};
    f.mean = 1.0 / 16.0;
    f.coef = [](std::int64_t k) {
        double s = std::sin(kPi * static_cast<double>(k % 8) / 4.0);
        return s * s / (kPi * kPi * static_cast<double>(k * k));
    };
    TailRule odd{TailRule::Pattern::Odd, 1.0 / (2.0 * kPi * kPi), 2.0};
    TailRule two{TailRule::Pattern::Progression, 1.0 / (kPi * kPi), 2.0};
    two.a = 2;
    two.b = 4;
    f.tails = {odd, two};
    return f;
}

FloquetFunctionSpec indicator(double eps) {
    if (!(eps > 0.0 && eps <= 0.5)) throw Error(ErrorCode::InvalidArgument, "indicator width must be in (0, 1/2]");
    FloquetFunctionSpec f;
    f.name = "indicator";
    f.value = [eps](double t) { return std::abs(t - 0.5) <= eps ? 1.0 : 0.0; };
    f.derivative = [](double) { return 0.0; };
    f.kinks = {0.5 - eps, 0.5 + eps};
    f.mean = 2.0 * eps;
    f.coef = [eps](std::int64_t k) {
        double sign = k % 2 ? -1.0 : 1.0;
        return sign * std::sin(2.0 * kPi * static_cast<double>(k) * eps) / (kPi * static_cast<double>(k));
    };
    return f;
}

FloquetFunctionSpec constant(double v) {
    FloquetFunctionSpec f;
    f.kind = FloquetFunctionSpec::Kind::Coefficients;
    f.name = "constant";
    f.value = [v](double) { return v; };
    f.derivative = [](double) { return 0.0; };
    f.mean = v;
    f.coef = [](std::int64_t) { return 0.0; };
    f.support = 0;
    return f;
}

FloquetFunctionSpec trigonometric(double Q, std::vector<double> w, std::string name) {
    FloquetFunctionSpec f;
    f.kind = FloquetFunctionSpec::Kind::Coefficients;
    f.name = std::move(name);
    auto coeffs = std::make_shared<std::vector<double>>(std::move(w));
    f.mean = Q;
    f.support = static_cast<std::int64_t>(coeffs->size());
    f.coef = [coeffs](std::int64_t k) {
        return k >= 1 && k <= static_cast<std::int64_t>(coeffs->size()) ? (*coeffs)[static_cast<size_t>(k - 1)] : 0.0;
    };
    f.value = [Q, coeffs](double t) {
        double s = Q;
        for (size_t k = 0; k < coeffs->size(); ++k) s += 2.0 * (*coeffs)[k] * std::cos(2.0 * kPi * (k + 1.0) * t);
        return s;
    };
    f.derivative = [coeffs](double t) {
        double s = 0.0;
        for (size_t k = 0; k < coeffs->size(); ++k)
            s -= 4.0 * kPi * (k + 1.0) * (*coeffs)[k] * std::sin(2.0 * kPi * (k + 1.0) * t);
        return s;
    };
    return f;
}

FloquetFunctionSpec convolve(const FloquetFunctionSpec& f, const FloquetFunctionSpec& g) {
    if (!f.has_coefficients() || !g.has_coefficients())
        throw Error(ErrorCode::PreconditionFailed, "convolution needs Fourier coefficients of both factors");
    FloquetFunctionSpec h;
    h.kind = FloquetFunctionSpec::Kind::Coefficients;
    h.name = f.name + "*" + g.name;
    h.mean = *f.mean * *g.mean;
    auto fc = f.coef, gc = g.coef;
    h.coef = [fc, gc](std::int64_t k) { return fc(k) * gc(k); };
    if (f.support >= 0 && g.support >= 0) h.support = std::min(f.support, g.support);
    else h.support = std::max(f.support, g.support);
    if (h.support < 0) {
        h.tail_from = std::max(f.tail_from, g.tail_from);
        h.tails = detect_tails(h.coef, h.tail_from);
    }
    check_admissible(h);
    attach_series_value(h);
    return h;
}

FloquetFunctionSpec multiply(const FloquetFunctionSpec& f, const FloquetFunctionSpec& g) {
    if (f.support == 0 && f.has_coefficients()) return scale_shift(g, *f.mean, 0.0);
    if (g.support == 0 && g.has_coefficients()) return scale_shift(f, *g.mean, 0.0);
    FloquetFunctionSpec h;
    h.name = f.name + "." + g.name;
    if (f.support > 0 && g.support > 0 && f.has_coefficients() && g.has_coefficients()) {
        const std::int64_t sf = f.support, sg = g.support, S = sf + sg;
        auto full = [](const FloquetFunctionSpec& u, std::int64_t k) {
            std::int64_t a = k < 0 ? -k : k;
            return a == 0 ? *u.mean : u.coef(a);
        };
        auto out = std::make_shared<std::vector<double>>(static_cast<size_t>(S + 1), 0.0);
        for (std::int64_t k = 0; k <= S; ++k)
            for (std::int64_t j = -sf; j <= sf; ++j)
                if (std::abs(k - j) <= sg) (*out)[static_cast<size_t>(k)] += full(f, j) * full(g, k - j);
        std::vector<double> w(out->begin() + 1, out->end());
        h = trigonometric((*out)[0], w, h.name);
        check_admissible(h);
        return h;
    }
    if (!f.value || !g.value) throw Error(ErrorCode::PreconditionFailed, "product needs values of both factors");
    auto fv = f.value, gv = g.value;
    h.value = [fv, gv](double t) { return fv(t) * gv(t); };
    if (f.derivative && g.derivative) {
        auto fd = f.derivative, gd = g.derivative;
        h.derivative = [fv, gv, fd, gd](double t) { return fd(t) * gv(t) + fv(t) * gd(t); };
    }
    h.kinks = f.kinks;
    h.kinks.insert(h.kinks.end(), g.kinks.begin(), g.kinks.end());
    std::sort(h.kinks.begin(), h.kinks.end());
    h.kinks.erase(std::unique(h.kinks.begin(), h.kinks.end()), h.kinks.end());
    return h;
}

FloquetFunctionSpec scale_shift(const FloquetFunctionSpec& f, double scale, double shift) {
    FloquetFunctionSpec h = f;
    std::ostringstream os;
    os << scale << "*" << f.name << (shift < 0 ? "" : "+") << shift;
    h.name = os.str();
    if (f.value) {
        auto fv = f.value;
        h.value = [fv, scale, shift](double t) { return scale * fv(t) + shift; };
    }
    if (f.derivative) {
        auto fd = f.derivative;
        h.derivative = [fd, scale](double t) { return scale * fd(t); };
    }
    if (f.mean) h.mean = scale * *f.mean + shift;
    if (f.coef) {
        auto fc = f.coef;
        h.coef = [fc, scale](std::int64_t k) { return scale * fc(k); };
    }
    for (auto& r : h.tails) r.c *= scale;
    check_admissible(h);
    return h;
}

FloquetFunctionSpec combine(CombineOp op, const FloquetFunctionSpec& f, const FloquetFunctionSpec& g,
                            std::pair<double, double> params) {
    switch (op) {
        case CombineOp::Convolution: return convolve(f, g);
        case CombineOp::Product: return multiply(f, g);
        case CombineOp::ScaleShift: return scale_shift(f, params.first, params.second);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown combinator");
}

CoefficientResult compute_coefficients(const std::function<double(double)>& f, std::int64_t ncoef, double tol) {
    if (ncoef < 0) throw Error(ErrorCode::InvalidArgument, "ncoef must be nonnegative");
    std::int64_t N = 64;
    while (N < 4 * ncoef) N *= 2;
    auto trapezoid = [&](std::int64_t n) {
        std::vector<std::complex<double>> x(static_cast<size_t>(n));
        for (std::int64_t j = 0; j < n; ++j) x[static_cast<size_t>(j)] = f(static_cast<double>(j) / n);
        detail::dft(x, 1, n, -1);
        std::vector<double> c(static_cast<size_t>(ncoef + 1));
        for (std::int64_t k = 0; k <= ncoef; ++k) c[static_cast<size_t>(k)] = x[static_cast<size_t>(k)].real() / n;
        return c;
    };
    auto richardson = [&](const std::vector<double>& coarse, const std::vector<double>& fine) {
        std::vector<double> r(coarse.size());
        for (size_t k = 0; k < r.size(); ++k) r[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
        return r;
    };
    auto T1 = trapezoid(N), T2 = trapezoid(2 * N);
    auto R = richardson(T1, T2);
    CoefficientResult out;
    const std::int64_t cap = std::int64_t{1} << 23;
    for (N *= 2; N < cap; N *= 2) {
        auto T3 = trapezoid(2 * N);
        auto R2 = richardson(T2, T3);
        double change = 0.0, scale = 1.0;
        for (size_t k = 0; k < R.size(); ++k) {
            change = std::max(change, std::abs(R2[k] - R[k]));
            scale = std::max(scale, std::abs(R2[k]));
        }
        R = std::move(R2);
        T2 = std::move(T3);
        out.change = change;
        out.grid = 2 * N;
        if (change < tol * scale) break;
    }
    out.coef = std::move(R);
    return out;
}

WeightFamily coefficient_family(const FloquetFunctionSpec& f, std::int64_t ncoef, double& mean, double tol) {
    if (f.d != 1) throw Error(ErrorCode::InvalidArgument, "Floquet-function constructors are one-dimensional");
    WeightFamily fam;
    fam.d = 1;
    auto put = [&](std::int64_t k, double v) {
        if (v < -tol) {
            std::ostringstream os;
            os << f.name << ": computed coefficient f^(" << k << ") = " << v << " is negative";
            throw Error(ErrorCode::NotAdmissible, os.str());
        }
        if (v > 0.0) {
            fam.entries[{k}] = v;
            fam.entries[{-k}] = v;
        }
    };
    if (f.has_coefficients()) {
        mean = *f.mean;
        if (f.support >= 0) {
            for (std::int64_t k = 1; k <= f.support; ++k) put(k, f.coef(k));
            return fam;
        }
        const std::int64_t K = std::max(ncoef, f.tail_from);
        for (std::int64_t k = 1; k <= K; ++k) put(k, f.coef(k));
        if (!f.tails.empty()) {
            fam.tails = f.tails;
            fam.K0 = K;
        }
        return fam;
    }
    if (!f.value) throw Error(ErrorCode::PreconditionFailed, f.name + ": neither values nor coefficients");
    const std::int64_t n = std::max<std::int64_t>(ncoef, 16);
    auto res = compute_coefficients(f.value, n);
    mean = res.coef[0];
    for (std::int64_t k = 1; k <= n; ++k) put(k, std::abs(res.coef[static_cast<size_t>(k)]) < tol ? 0.0 : res.coef[static_cast<size_t>(k)]);
    // Fitted kink tail: c_r = f^(k) k^2 at the last k <= n in each residue mod 4.
    double scale = 0.0;
    for (std::int64_t k = n - 3; k <= n; ++k) scale = std::max(scale, std::abs(res.coef[static_cast<size_t>(k)]) * double(k) * k);
    if (scale > 1e-9 * std::max(1.0, std::abs(mean))) {
        for (std::int64_t k = n - 3; k <= n; ++k) {
            double c = res.coef[static_cast<size_t>(k)] * double(k) * k;
            if (c < -1e-9) throw Error(ErrorCode::NotAdmissible, f.name + ": fitted tail is negative");
            if (c <= 1e-12 * scale) continue;
            TailRule r{TailRule::Pattern::Progression, c, 2.0};
            r.a = k % 4;
            r.b = 4;
            fam.tails.push_back(r);
        }
        fam.K0 = n;
    }
    return fam;
}

CrystalSpec from_floquet_function(const FloquetFunctionSpec& f, std::int64_t ncoef, double tol) {
    double mean = 0.0;
    WeightFamily fam = coefficient_family(f, ncoef, mean, tol);
    CrystalSpec spec = make_spec(1, 1, f.name);
    spec.w(0, 0) = std::move(fam);
    spec.Q[0] = mean;
    spec.fitted_tails = !f.has_coefficients() && spec.w(0, 0).has_tail();
    if (f.value) {
        auto sym = std::make_shared<Symbol>();
        auto fv = f.value;
        sym->value = [fv](std::span<const double> t) { return fv(frac01(t[0])); };
        if (f.derivative) {
            auto fd = f.derivative;
            sym->gradient = [fd](std::span<const double> t, std::span<double> g) { g[0] = fd(frac01(t[0])); };
        }
        spec.symbol = sym;
    }
    return spec;
}

}  // namespace crystal
