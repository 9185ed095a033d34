#include "crystal/fractional.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_bessel.h>
#include <gsl/gsl_sf_gamma.h>

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

double symbol_s(std::span<const double> t, double alpha) {
    double x = 0.0;
    for (double v : t) {
        double s = std::sin(kPi * v);
        x += 4.0 * s * s;
    }
    return x == 0.0 ? 0.0 : std::pow(x, alpha);
}

std::int64_t ipow(std::int64_t b, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

// Coefficients s^(k) on the box |k|_inf <= K from an N^d trapezoid grid.
std::vector<double> trapezoid_box(int d, double alpha, std::int64_t N, std::int64_t K) {
    const std::int64_t total = ipow(N, d);
    std::vector<std::complex<double>> x(static_cast<size_t>(total));
    std::vector<double> t(static_cast<size_t>(d));
    for (std::int64_t idx = 0; idx < total; ++idx) {
        std::int64_t rem = idx;
        for (int i = d - 1; i >= 0; --i) {
            t[static_cast<size_t>(i)] = static_cast<double>(rem % N) / N;
            rem /= N;
        }
        x[static_cast<size_t>(idx)] = symbol_s(t, alpha);
    }
    detail::dft(x, d, N, -1);
    const std::int64_t side = 2 * K + 1;
    std::vector<double> out(static_cast<size_t>(ipow(side, d)));
    const double norm = static_cast<double>(total);
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(out.size()); ++b) {
        std::int64_t rem = b, flat = 0;
        std::vector<std::int64_t> k(static_cast<size_t>(d));
        for (int i = d - 1; i >= 0; --i) {
            k[static_cast<size_t>(i)] = rem % side - K;
            rem /= side;
        }
        for (int i = 0; i < d; ++i) flat = flat * N + detail::wrap(k[static_cast<size_t>(i)], N);
        out[static_cast<size_t>(b)] = x[static_cast<size_t>(flat)].real() / norm;
    }
    return out;
}

}  // namespace

CrystalSpec fractional_laplacian(int d, double alpha, std::int64_t ncoef) {
    if (d < 1 || d > 3) throw Error(ErrorCode::InvalidArgument, "fractional Laplacian supports 1 <= d <= 3");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    if (ncoef < 1) throw Error(ErrorCode::InvalidArgument, "ncoef must be positive");
    std::ostringstream label;
    label << "frac(" << d << "," << alpha << ")";
    CrystalSpec spec = make_spec(d, 1, label.str());
    WeightFamily& fam = spec.w(0, 0);

    if (alpha == 1.0) {
        for (int i = 0; i < d; ++i)
            for (std::int64_t s : {-1, 1}) {
                Index k(static_cast<size_t>(d), 0);
                k[static_cast<size_t>(i)] = s;
                fam.entries[k] = 1.0;
            }
        spec.Q[0] = 2.0 * d;
    } else {
        const std::int64_t K = d == 1 ? ncoef : std::min<std::int64_t>(ncoef, d == 2 ? 64 : 16);
        std::int64_t N = d == 1 ? std::max<std::int64_t>(4096, 16 * K) : std::max<std::int64_t>(64, 8 * K);
        std::int64_t p2 = 1;
        while (p2 < N) p2 *= 2;
        N = p2;
        const std::int64_t cap = d == 1 ? (std::int64_t{1} << 24) : d == 2 ? 2048 : 128;
        const double r1 = std::exp2(d + 2.0 * alpha), r2 = std::exp2(d + 2.0 + 2.0 * alpha);
        auto extrapolate = [&](const std::vector<double>& a, const std::vector<double>& b,
                               const std::vector<double>& c) {
            std::vector<double> out(a.size());
            for (size_t i = 0; i < a.size(); ++i) {
                double ab = (r1 * b[i] - a[i]) / (r1 - 1.0);
                double bc = (r1 * c[i] - b[i]) / (r1 - 1.0);
                out[i] = (r2 * bc - ab) / (r2 - 1.0);
            }
            return out;
        };
        auto A = trapezoid_box(d, alpha, N, K);
        auto B = trapezoid_box(d, alpha, 2 * N, K);
        auto C = trapezoid_box(d, alpha, 4 * N, K);
        auto R = extrapolate(A, B, C);
        for (N *= 8; N <= cap; N *= 2) {
            auto D = trapezoid_box(d, alpha, N, K);
            auto R2 = extrapolate(B, C, D);
            double change = 0.0;
            for (size_t i = 0; i < R.size(); ++i) change = std::max(change, std::abs(R2[i] - R[i]));
            A = std::move(B);
            B = std::move(C);
            C = std::move(D);
            R = std::move(R2);
            if (change < 1e-13) break;
        }
        const std::int64_t side = 2 * K + 1;
        double Q = 0.0;
        for (std::int64_t b = 0; b < static_cast<std::int64_t>(R.size()); ++b) {
            Index k(static_cast<size_t>(d));
            std::int64_t rem = b;
            for (int i = d - 1; i >= 0; --i) {
                k[static_cast<size_t>(i)] = rem % side - K;
                rem /= side;
            }
            if (linf(k) == 0) {
                Q = R[static_cast<size_t>(b)];
                continue;
            }
            double w = -R[static_cast<size_t>(b)];
            if (w <= 0.0) {
                std::ostringstream os;
                os << "fractional weight at k = (";
                for (int i = 0; i < d; ++i) os << (i ? "," : "") << k[static_cast<size_t>(i)];
                os << ") is " << w << ", expected positive";
                throw Error(ErrorCode::NumericalError, os.str());
            }
            fam.entries[k] = w;
        }
        // Exact k -> -k symmetry; the quadrature leaves last-bit differences.
        for (auto& [k, w] : fam.entries) {
            Index mk = k;
            for (auto& x : mk) x = -x;
            if (mk < k) continue;
            double avg = 0.5 * (w + fam.entries[mk]);
            w = avg;
            fam.entries[mk] = avg;
        }
        spec.Q[0] = Q;
        // Power tail |k|^{-d-2 alpha}; the constant is the largest observed
        // w(k) |k|^p on the outer half of the box, which bounds the tail
        // because w(k) |k|^p approaches its limit from above.
        TailRule tail;
        tail.p = d + 2.0 * alpha;
        for (const auto& [k, w] : fam.entries) {
            std::int64_t m = linf(k);
            if (2 * m < K) continue;
            double r = 0.0;
            for (auto x : k) r += static_cast<double>(x) * x;
            r = d == 1 ? static_cast<double>(m) : std::sqrt(r);
            tail.c = std::max(tail.c, w * std::pow(r, tail.p));
        }
        fam.tails = {tail};
        fam.K0 = K;
        spec.fitted_tails = true;
    }

    auto sym = std::make_shared<Symbol>();
    const double Q = spec.Q[0];
    sym->value = [Q, alpha](std::span<const double> t) { return 2.0 * Q - symbol_s(t, alpha); };
    sym->gradient = [alpha](std::span<const double> t, std::span<double> g) {
        double x = 0.0;
        for (double v : t) {
            double s = std::sin(kPi * v);
            x += 4.0 * s * s;
        }
        for (size_t i = 0; i < t.size(); ++i) {
            // d/dtheta 4 sin^2(pi theta) = 4 pi sin(2 pi theta)
            double dx = 4.0 * kPi * std::sin(2.0 * kPi * t[i]);
            g[i] = x == 0.0 ? 0.0 : -alpha * std::pow(x, alpha - 1.0) * dx;
        }
    };
    spec.symbol = sym;
    return spec;
}

namespace {

struct BesselParams {
    double alpha;
    int k;
};

double bessel_integrand(double t, void* params) {
    auto* p = static_cast<BesselParams*>(params);
    if (t <= 0.0) return 0.0;
    return gsl_sf_bessel_In_scaled(p->k, 2.0 * t) * std::pow(t, -1.0 - p->alpha);
}

// e^{-2t} I_k(2t) / t^k, smooth at 0 where it tends to 1/k!.
double bessel_regular(double t, void* params) {
    auto* p = static_cast<BesselParams*>(params);
    if (t < 1e-8) return std::exp(-2.0 * t - std::lgamma(p->k + 1.0));
    return gsl_sf_bessel_In_scaled(p->k, 2.0 * t) * std::pow(t, -p->k);
}

}  // namespace

double heat_kernel_crosscheck(double alpha, std::int64_t k, double tmax) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be nonzero");
    k = k < 0 ? -k : k;
    if (alpha == 1.0) return k == 1 ? 1.0 : 0.0;
    if (k > 100000) throw Error(ErrorCode::InvalidArgument, "k too large for the Bessel quadrature");
    BesselParams params{alpha, static_cast<int>(k)};
    gsl_function F{&bessel_integrand, &params};
    const size_t limit = 2000;
    std::unique_ptr<gsl_integration_workspace, decltype(&gsl_integration_workspace_free)> ws(
        gsl_integration_workspace_alloc(limit), &gsl_integration_workspace_free);
    double split = std::max(1.0, std::min(tmax, static_cast<double>(k)));
    double total = 0.0;
    double v = 0.0, err = 0.0;
    // Roundoff reports are accepted once the error estimate is tiny.
    auto check = [&](int status, const char* part) {
        if (status == GSL_EROUND && err <= 1e-12) return;
        if (status != GSL_SUCCESS)
            throw Error(ErrorCode::IntegrationFailure,
                        std::string("Bessel quadrature failed on ") + part + ": " + gsl_strerror(status));
    };
    // Near 0 the integrand is t^{k-1-alpha} times a smooth factor.
    gsl_function G{&bessel_regular, &params};
    std::unique_ptr<gsl_integration_qaws_table, decltype(&gsl_integration_qaws_table_free)> table(
        gsl_integration_qaws_table_alloc(static_cast<double>(k) - 1.0 - alpha, 0.0, 0, 0),
        &gsl_integration_qaws_table_free);
    check(gsl_integration_qaws(&G, 0.0, split, table.get(), 1e-15, 1e-12, limit, ws.get(), &v, &err), "[0, split]");
    total += v;
    if (tmax > split) {
        check(gsl_integration_qag(&F, split, tmax, 1e-15, 1e-12, limit, GSL_INTEG_GAUSS61, ws.get(), &v, &err),
              "[split, tmax]");
        total += v;
    }
    // Beyond T the large-argument expansion
    // e^{-x} I_k(x) ~ (2 pi x)^{-1/2} sum_j (-1)^j a_j / x^j, x = 2t, is integrated termwise.
    const double T = std::max({split, tmax, 2.0 * static_cast<double>(k) * static_cast<double>(k)});
    if (T > std::max(split, tmax)) {
        check(gsl_integration_qag(&F, std::max(split, tmax), T, 1e-15, 1e-12, limit, GSL_INTEG_GAUSS61, ws.get(), &v, &err),
              "[tmax, T]");
        total += v;
    }
    const double nu2 = 4.0 * static_cast<double>(k) * static_cast<double>(k);
    double a = 1.0, tail = 0.0;
    for (int j = 0; j < 60; ++j) {
        if (j > 0) a *= -(nu2 - (2.0 * j - 1) * (2.0 * j - 1)) / (8.0 * j);
        double term = a / std::pow(2.0, j) * std::pow(T, -0.5 - alpha - j) / (0.5 + alpha + j);
        tail += term;
        if (std::abs(term) < 1e-18 * std::abs(tail)) break;
    }
    total += tail / std::sqrt(4.0 * std::numbers::pi);
    return alpha / gsl_sf_gamma(1.0 - alpha) * total;
}

}  // namespace crystal
