#include "crystal/evolve.hpp"

#include <fmt/format.h>
#include <gsl/gsl_cdf.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "crystal/floquet.hpp"
#include "fft.hpp"

namespace crystal {

namespace {

constexpr double kPi = std::numbers::pi;
const std::complex<double> kI(0.0, 1.0);

std::int64_t next_pow2(double x) {
    std::int64_t n = 1;
    while (static_cast<double>(n) < x) n *= 2;
    return n;
}

// int_0^L e^{ixu} du, with the series near x = 0.
std::complex<double> segment(double x, double L) {
    if (std::abs(x * L) < 1e-4) {
        std::complex<double> ixl = kI * x * L;
        return L * (1.0 + ixl / 2.0 + ixl * ixl / 6.0 + ixl * ixl * ixl / 24.0);
    }
    return (std::exp(kI * x * L) - 1.0) / (kI * x);
}

}  // namespace

double WaveField::supnorm() const {
    double s = 0.0;
    for (const auto& a : amp) s = std::max(s, std::abs(a));
    return s;
}

Propagator::Propagator(const CrystalSpec& spec) : spec_(spec) {
    if (spec.d != 1 || spec.nu != 1) throw Error(ErrorCode::InvalidArgument, "evolution is implemented for d = 1, nu = 1");
    ensure_valid(spec);
}

const std::vector<double>& Propagator::symbol_grid(std::int64_t N) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(N);
    if (it != cache_.end()) return it->second;
    auto h = entry_grid(spec_, 0, 0, N, 1e-15);
    std::vector<double> re(h.size());
    for (size_t i = 0; i < h.size(); ++i) re[i] = h[i].real();
    return cache_.emplace(N, std::move(re)).first->second;
}

WaveField Propagator::at_resolution(double t, std::int64_t M, std::int64_t N, const State& initial,
                                    std::vector<std::complex<double>>* full) {
    const auto& h = symbol_grid(N);
    std::vector<std::complex<double>> x(static_cast<size_t>(N));
    for (std::int64_t j = 0; j < N; ++j) {
        std::complex<double> psi_hat = 0.0;
        for (const auto& [n, a] : initial) {
            std::int64_t r = detail::wrap(n, N) * j % N;
            psi_hat += a * std::polar(1.0, 2.0 * kPi * static_cast<double>(r) / static_cast<double>(N));
        }
        x[static_cast<size_t>(j)] = std::polar(1.0, -t * h[static_cast<size_t>(j)]) * psi_hat;
    }
    detail::dft(x, 1, N, -1);
    for (auto& v : x) v /= static_cast<double>(N);
    WaveField f;
    f.t = t;
    f.M = M;
    f.resolution = N;
    f.amp.resize(static_cast<size_t>(2 * M + 1));
    for (std::int64_t m = -M; m <= M; ++m) {
        auto v = x[static_cast<size_t>(detail::wrap(m, N))];
        f.amp[static_cast<size_t>(m + M)] = v;
        f.captured_mass += std::norm(v);
    }
    for (std::int64_t m = N / 4 + 1; m <= N / 2; ++m) {
        f.edge_mass += std::norm(x[static_cast<size_t>(m)]);
        if (m < N / 2) f.edge_mass += std::norm(x[static_cast<size_t>(N - m)]);
    }
    if (full) *full = std::move(x);
    return f;
}

WaveField Propagator::run(double t, std::int64_t M, double eps, PropagateOptions opts, const State& initial) {
    if (M < 0) throw Error(ErrorCode::InvalidArgument, "window must be nonnegative");
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    if (t == 0.0) {
        WaveField f;
        f.M = M;
        f.amp.assign(static_cast<size_t>(2 * M + 1), 0.0);
        for (const auto& [n, a] : initial)
            if (n >= -M && n <= M) {
                f.amp[static_cast<size_t>(n + M)] = a;
                f.captured_mass += std::norm(a);
            }
        return f;
    }
    std::int64_t N = std::max<std::int64_t>({opts.N0, next_pow2(opts.oversample * (2.0 * M + 2.0)), 64});
    if (N > opts.Ncap && !opts.fixed)
        throw Error(ErrorCode::ResolutionExceeded, fmt::format("window {} needs more than the cap {}", M, opts.Ncap));
    WaveField raw = at_resolution(t, M, N, initial, nullptr);
    if (opts.fixed) {
        raw.converged = raw.edge_mass <= eps;
        return raw;
    }
    // Kinks of the symbol sit on the dyadic grid, so the trapezoid error is
    // even in 1/N and one Richardson step removes the leading term.
    auto extrapolate = [](const WaveField& coarse, WaveField fine) {
        for (size_t i = 0; i < fine.amp.size(); ++i) fine.amp[i] = (4.0 * fine.amp[i] - coarse.amp[i]) / 3.0;
        fine.captured_mass = 0.0;
        for (const auto& a : fine.amp) fine.captured_mass += std::norm(a);
        return fine;
    };
    std::optional<WaveField> prev;
    while (true) {
        const std::int64_t N2 = 2 * N;
        if (N2 > opts.Ncap)
            throw Error(ErrorCode::ResolutionExceeded,
                        fmt::format("no convergence at t = {} up to N = {} (change {:.3g}, edge mass {:.3g})", t, N,
                                    prev ? prev->change : 0.0, raw.edge_mass));
        WaveField fine = at_resolution(t, M, N2, initial, nullptr);
        WaveField cur = extrapolate(raw, fine);
        if (prev) {
            double change = 0.0;
            for (size_t i = 0; i < cur.amp.size(); ++i) change += std::norm(cur.amp[i] - prev->amp[i]);
            cur.change = std::sqrt(change);
            if (cur.change <= eps && cur.edge_mass <= eps) {
                cur.converged = true;
                return cur;
            }
        } else {
            cur.change = INFINITY;
        }
        raw = std::move(fine);
        prev = std::move(cur);
        N = N2;
    }
}

WaveField propagate(const CrystalSpec& spec, double t, std::int64_t M, double eps, PropagateOptions opts,
                    const State& initial) {
    Propagator p(spec);
    return p.run(t, M, eps, opts, initial);
}

std::complex<double> closed_form_oracle(const std::string& name, double t, std::int64_t m) {
    const double a = 2.0 * kPi * static_cast<double>(m);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    if (name == "graph_b") {
        // theta = 1/2 + u: e^{-i pi m} int_{-1/2}^{1/2} e^{-i a u - i t |u|} du
        return sign * (segment(a - t, 0.5) + segment(-(a + t), 0.5));
    }
    if (name == "graph_c") {
        // c(u) = 1/4 - |u| on |u| <= 1/4, zero elsewhere.
        std::complex<double> outside = (m == 0 ? 1.0 : 0.0) - (m == 0 ? 0.5 : std::sin(kPi * m / 2.0) / (kPi * m));
        std::complex<double> inside = std::exp(-kI * t / 4.0) * (segment(a + t, 0.25) + segment(t - a, 0.25));
        return outside + inside;
    }
    throw Error(ErrorCode::InvalidArgument, "closed forms exist for graph_b and graph_c only");
}

std::vector<TraceSample> dispersion_trace(const CrystalSpec& spec, const std::vector<double>& times, std::int64_t M,
                                          double eps) {
    Propagator prop(spec);
    std::vector<TraceSample> out;
    for (double t : times) {
        WaveField f = prop.run(t, M, eps);
        TraceSample s;
        s.t = t;
        s.supnorm = f.supnorm();
        s.origin_abs = std::abs(f.at(0));
        s.captured_mass = f.captured_mass;
        for (std::int64_t m = -M; m <= M; ++m)
            if (std::abs(f.at(m)) >= s.supnorm * (1.0 - 1e-9)) s.peaks.push_back(m);
        out.push_back(s);
    }
    return out;
}

namespace {

// Symbols may have cusps off the trapezoid's error model (fractional powers),
// so they go through adaptive quadrature on [0, 1/2] using h(theta) = h(1 - theta).
double origin_amplitude_symbol(const Symbol& sym, double t, double width, double eps) {
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(t) * width / kPi)));
    struct Ctx {
        const Symbol* sym;
        double t;
        bool imag;
    };
    auto fn = [](double x, void* p) {
        auto* c = static_cast<Ctx*>(p);
        double v = c->sym->value(std::span<const double>(&x, 1));
        return c->imag ? -std::sin(c->t * v) : std::cos(c->t * v);
    };
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(1000);
    gsl_set_error_handler_off();
    std::complex<double> total = 0.0;
    int status = 0;
    for (int part = 0; part < 2; ++part) {
        Ctx ctx{&sym, t, part == 1};
        gsl_function F{fn, &ctx};
        double sum = 0.0;
        for (int i = 0; i < pieces && status == 0; ++i) {
            double a = 0.5 * i / pieces, b = 0.5 * (i + 1) / pieces, r = 0.0, err = 0.0;
            status = gsl_integration_qag(&F, a, b, eps / (8.0 * pieces), 1e-12, 1000, GSL_INTEG_GAUSS21, ws, &r, &err);
            sum += r;
        }
        total += part == 0 ? std::complex<double>(2.0 * sum, 0.0) : std::complex<double>(0.0, 2.0 * sum);
    }
    gsl_integration_workspace_free(ws);
    if (status != 0)
        throw Error(ErrorCode::ResolutionExceeded,
                    fmt::format("origin amplitude at t = {} did not converge: {}", t, gsl_strerror(status)));
    return std::abs(total);
}

double origin_amplitude_with(Propagator& prop, double t, double eps, std::int64_t cap) {
    const auto& spec = prop.spec();
    if (spec.symbol && spec.symbol->value) {
        const auto& coarse = prop.symbol_grid(4096);
        const double width = *std::max_element(coarse.begin(), coarse.end()) - *std::min_element(coarse.begin(), coarse.end());
        return origin_amplitude_symbol(*spec.symbol, t, width, eps);
    }
    auto mean = [&](std::int64_t N) {
        const auto& h = prop.symbol_grid(N);
        std::complex<double> s = 0.0;
        for (double v : h) s += std::polar(1.0, -t * v);
        return s / static_cast<double>(N);
    };
    std::int64_t N = 256;
    auto raw = mean(N);
    std::optional<std::complex<double>> prev;
    for (N *= 2; N <= cap; N *= 2) {
        auto fine = mean(N);
        auto cur = (4.0 * fine - raw) / 3.0;
        if (prev && std::abs(cur - *prev) < eps) return std::abs(cur);
        raw = fine;
        prev = cur;
    }
    throw Error(ErrorCode::ResolutionExceeded, fmt::format("origin amplitude at t = {} did not converge", t));
}

}  // namespace

double origin_amplitude(const CrystalSpec& spec, double t, double eps) {
    Propagator prop(spec);
    return origin_amplitude_with(prop, t, eps, std::int64_t{1} << 23);
}

std::vector<double> geometric_times(double t0, double t1, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i)
        out.push_back(count == 1 ? t0 : t0 * std::pow(t1 / t0, static_cast<double>(i) / (count - 1)));
    return out;
}

PowerLawFit power_dispersion_probe(const CrystalSpec& spec, const std::vector<double>& times) {
    if (times.size() < 3) throw Error(ErrorCode::InvalidArgument, "need at least three times for a slope");
    Propagator prop(spec);
    const auto& coarse = prop.symbol_grid(4096);
    const double W = *std::max_element(coarse.begin(), coarse.end()) - *std::min_element(coarse.begin(), coarse.end());
    if (!(W > 0.0)) throw Error(ErrorCode::PreconditionFailed, "flat symbol has no dispersion");
    const double span = 4.0 * 2.0 * kPi / W;
    PowerLawFit fit;
    for (double t : times) {
        double ms = 0.0;
        for (int i = 0; i < 8; ++i) {
            double ti = t + (i / 7.0 - 0.5) * span;
            double a = origin_amplitude_with(prop, ti, 1e-7, std::int64_t{1} << 23);
            ms += a * a / 8.0;
        }
        fit.t.push_back(t);
        fit.value.push_back(std::sqrt(ms));
    }
    const size_t n = fit.t.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        double x = std::log(fit.t[i]), y = std::log(fit.value[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (den <= 0.0) throw Error(ErrorCode::NumericalError, "degenerate time grid for regression");
    fit.slope = (n * sxy - sx * sy) / den;
    fit.intercept = (sy - fit.slope * sx) / n;
    double rss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double r = std::log(fit.value[i]) - fit.intercept - fit.slope * std::log(fit.t[i]);
        rss += r * r;
    }
    const double sxx_c = sxx - sx * sx / n;
    fit.stderr_slope = n > 2 ? std::sqrt(rss / (n - 2) / sxx_c) : 0.0;
    const double q = n > 2 ? gsl_cdf_tdist_Pinv(0.975, static_cast<double>(n - 2)) : 0.0;
    fit.ci_lo = fit.slope - q * fit.stderr_slope;
    fit.ci_hi = fit.slope + q * fit.stderr_slope;
    return fit;
}

std::string field_csv(const WaveField& f) {
    std::string out = "m,re,im,abs2\n";
    for (std::int64_t m = -f.M; m <= f.M; ++m) {
        auto v = f.at(m);
        out += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", m, v.real(), v.imag(), std::norm(v));
    }
    return out;
}

std::string trace_csv(const std::vector<TraceSample>& trace) {
    std::string out = "t,supnorm,origin_abs,peak_m\n";
    for (const auto& s : trace) {
        std::string peaks;
        for (size_t i = 0; i < s.peaks.size(); ++i) peaks += fmt::format("{}{}", i ? ";" : "", s.peaks[i]);
        out += fmt::format("{:.17g},{:.17g},{:.17g},{}\n", s.t, s.supnorm, s.origin_abs, peaks);
    }
    return out;
}

}  // namespace crystal
