#include "crystal/transport.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crystal/floquet.hpp"
#include "crystal/fractional.hpp"

namespace crystal {

namespace {

constexpr double kPi = std::numbers::pi;

// Midpoint rule for int |h'|^2 |psi^|^2 over [0, 1).
double gradient_energy(const CrystalSpec& spec, std::int64_t N,
                       const std::function<std::complex<double>(double)>& psi_hat) {
    double sum = 0.0;
    if (spec.symbol && spec.symbol->gradient) {
        double g[1];
        for (std::int64_t j = 0; j < N; ++j) {
            double t[1] = {(j + 0.5) / static_cast<double>(N)};
            spec.symbol->gradient(t, g);
            double w = psi_hat ? std::norm(psi_hat(t[0])) : 1.0;
            sum += g[0] * g[0] * w;
        }
    } else {
        auto h = entry_grid(spec, 0, 0, N, 1e-15);
        for (std::int64_t j = 0; j < N; ++j) {
            double g = (h[static_cast<size_t>((j + 1) % N)].real() - h[static_cast<size_t>(j)].real()) * N;
            double w = psi_hat ? std::norm(psi_hat((j + 0.5) / static_cast<double>(N))) : 1.0;
            sum += g * g * w;
        }
    }
    return sum / static_cast<double>(N);
}

double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Growth exponent of successive increments; strongly converged sequences get -10.
double increment_exponent(const std::vector<double>& at, const std::vector<double>& values) {
    std::vector<double> x, y;
    const double scale = std::abs(values.back());
    for (size_t i = 1; i < values.size(); ++i) {
        double inc = values[i] - values[i - 1];
        if (inc <= 1e-12 * scale) return -10.0;
        x.push_back(at[i]);
        y.push_back(inc);
    }
    if (x.size() < 2) return 0.0;
    return fit_exponent(x, y);
}

}  // namespace

BallisticLimit analytic_ballistic_limit(const CrystalSpec& spec, std::int64_t N,
                                        const std::function<std::complex<double>(double)>& psi_hat) {
    if (spec.d != 1 || spec.nu != 1) throw Error(ErrorCode::InvalidArgument, "ballistic limit needs d = 1, nu = 1");
    if (N < 8) throw Error(ErrorCode::InvalidArgument, "N too small");
    ensure_valid(spec);
    BallisticLimit out;
    out.N = {N / 2, N, 2 * N};
    for (auto n : out.N) out.partial.push_back(gradient_energy(spec, n, psi_hat) / (4.0 * kPi * kPi));
    const double d1 = out.partial[1] - out.partial[0], d2 = out.partial[2] - out.partial[1];
    const double scale = std::max(std::abs(out.partial[2]), 1e-300);
    if (std::abs(d1) <= 1e-13 * scale && std::abs(d2) <= 1e-13 * scale) {
        out.value = out.partial[2];
        return out;
    }
    out.increment_ratio = std::abs(d1) > 0.0 ? d2 / d1 : INFINITY;
    if (std::abs(out.increment_ratio) < 0.9) {
        const double r = out.increment_ratio;
        out.value = out.partial[2] + d2 * r / (1.0 - r);
        out.extrapolated = true;
        return out;
    }
    throw Error(ErrorCode::DivergentGradientEnergy,
                fmt::format("gradient energy keeps growing under refinement (increment ratio {:.3f})", out.increment_ratio));
}

WindowSums msd_window_sums(const CrystalSpec& spec, double t, const std::vector<std::int64_t>& M_list, std::int64_t N) {
    if (M_list.empty()) throw Error(ErrorCode::InvalidArgument, "no windows given");
    WindowSums out;
    out.M = M_list;
    std::sort(out.M.begin(), out.M.end());
    PropagateOptions opts;
    opts.N0 = N;
    opts.fixed = true;
    WaveField f = propagate(spec, t, out.M.back(), 1e-10, opts);
    for (auto M : out.M) {
        double s = 0.0;
        for (std::int64_t m = -M; m <= M; ++m) s += static_cast<double>(m) * m * std::norm(f.at(m));
        out.S.push_back(s);
    }
    out.ratio = out.S.front() > 0.0 ? out.S.back() / out.S.front() : INFINITY;
    return out;
}

TransportReport msd_series(const CrystalSpec& spec, const std::vector<double>& times, MsdOptions opts) {
    if (times.empty()) throw Error(ErrorCode::InvalidArgument, "no times given");
    TransportReport rep;
    Propagator prop(spec);
    bool resolution_failed = false, window_diverges = false;
    for (double t : times) {
        rep.t.push_back(t);
        WaveField f;
        try {
            PropagateOptions po;
            po.Ncap = opts.Ncap;
            f = prop.run(t, opts.M_cap, opts.eps, po);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::ResolutionExceeded) throw;
            resolution_failed = true;
            rep.msd.push_back(NAN);
            rep.converged.push_back(false);
            rep.window.push_back(opts.M_cap);
            continue;
        }
        std::vector<double> sums;
        std::vector<std::int64_t> windows;
        for (std::int64_t M = std::min(opts.M_start, opts.M_cap); M <= opts.M_cap; M *= 2) {
            double s = 0.0;
            for (std::int64_t m = -M; m <= M; ++m) s += static_cast<double>(m) * m * std::norm(f.at(m));
            sums.push_back(s);
            windows.push_back(M);
        }
        size_t pick = sums.size() - 1;
        bool ok = false;
        for (size_t i = 1; i < sums.size(); ++i)
            if (std::abs(sums[i] - sums[i - 1]) <= opts.rel_tol * std::abs(sums[i])) {
                pick = i;
                ok = true;
                break;
            }
        if (!ok && sums.size() >= 3) {
            double a = sums[sums.size() - 2] - sums[sums.size() - 3], b = sums.back() - sums[sums.size() - 2];
            if (a > 0.0 && b >= 0.9 * a) window_diverges = true;
        }
        rep.msd.push_back(sums[pick]);
        rep.converged.push_back(ok);
        rep.window.push_back(windows[pick]);
    }

    bool gradient_diverges = false;
    try {
        rep.analytic_limit = analytic_ballistic_limit(spec).value;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DivergentGradientEnergy) throw;
        gradient_diverges = true;
        rep.analytic_limit = INFINITY;
    }

    // MSD/t^2 = s + c/t on the upper half of the time range.
    const double tmid = 0.5 * (*std::min_element(times.begin(), times.end()) + *std::max_element(times.begin(), times.end()));
    std::vector<double> x, y;
    for (size_t i = 0; i < rep.t.size(); ++i)
        if (rep.t[i] >= tmid && std::isfinite(rep.msd[i]) && rep.t[i] > 0.0) {
            x.push_back(1.0 / rep.t[i]);
            y.push_back(rep.msd[i] / (rep.t[i] * rep.t[i]));
        }
    if (x.size() >= 2) {
        const double n = static_cast<double>(x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < x.size(); ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        const double den = n * sxx - sx * sx;
        rep.fitted_speed2 = den > 0.0 ? (sy - ((n * sxy - sx * sy) / den) * sx) / n : sy / n;
    } else if (x.size() == 1) {
        rep.fitted_speed2 = y[0];
    } else {
        rep.fitted_speed2 = NAN;
    }

    if (resolution_failed || gradient_diverges || window_diverges) {
        rep.verdict = "super-ballistic-suspect";
        rep.note = resolution_failed ? "propagation hit the resolution cap"
                   : gradient_diverges ? "gradient energy diverges under refinement"
                                       : "MSD partial sums keep growing with the window";
    } else if (std::isfinite(rep.fitted_speed2) &&
               std::abs(rep.fitted_speed2 - rep.analytic_limit) <= 0.05 * rep.analytic_limit) {
        rep.verdict = "ballistic";
    } else {
        rep.verdict = "inconclusive";
    }
    return rep;
}

std::vector<SuperballisticEntry> superballistic_detector(const std::vector<double>& alphas, double t,
                                                         const std::vector<std::int64_t>& M_list) {
    if (M_list.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two windows");
    const std::int64_t M_max = *std::max_element(M_list.begin(), M_list.end());
    const std::int64_t N = std::min<std::int64_t>(std::int64_t{1} << 22, 64 * M_max);
    std::vector<SuperballisticEntry> out;
    for (double alpha : alphas) {
        SuperballisticEntry e;
        e.alpha = alpha;
        CrystalSpec spec = fractional_laplacian(1, alpha, 64);
        WindowSums ws = msd_window_sums(spec, t, M_list, N);
        e.window_sums = ws.S;
        e.window_ratio = ws.ratio;
        std::vector<double> Md(ws.M.begin(), ws.M.end());
        e.window_exponent = increment_exponent(Md, ws.S);
        std::vector<double> Ng;
        for (int k = 10; k <= 20; k += 2) {
            Ng.push_back(std::ldexp(1.0, k));
            e.gradient_energy.push_back(gradient_energy(spec, std::int64_t{1} << k, {}));
        }
        e.gradient_exponent = increment_exponent(Ng, e.gradient_energy);
        const double a = e.window_exponent, b = e.gradient_exponent;
        if (a < -0.1 && b < -0.1) e.verdict = "ballistic";
        else if (a > 0.1 && b > 0.1) e.verdict = "super-ballistic";
        else if (std::abs(a) <= 0.1 && std::abs(b) <= 0.1) e.verdict = "boundary";
        else e.verdict = "inconclusive";
        out.push_back(e);
    }
    return out;
}

LayerSpeed layer_speed(const CrystalSpec& spec, std::int64_t N) {
    if (!check_connected(spec).connected)
        throw Error(ErrorCode::PreconditionFailed, "layer speeds need a connected crystal");
    BandGrid g = sample_bands(spec, N);
    double sum = 0.0;
    for (std::int64_t p = 0; p < g.points(); ++p)
        for (int b = 0; b < g.nu; ++b)
            for (int a = 0; a < g.d; ++a) {
                double diff = (g.E(g.neighbor(p, a, 1), b) - g.E(g.neighbor(p, a, -1), b)) * N / 2.0;
                sum += diff * diff;
            }
    LayerSpeed out;
    out.total = sum / static_cast<double>(g.points()) / (4.0 * kPi * kPi);
    out.positive = out.total > 1e-12;
    out.note = spec.nu > 1 ? "sum over layers; the jump-set hypothesis is assumed" : "single layer";
    return out;
}

}  // namespace crystal
