#include "crystal/resolvent.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crystal/floquet.hpp"
#include "fft.hpp"

namespace crystal {

namespace {

double distance_to_interval(std::complex<double> z, double lo, double hi) {
    double dx = z.real() < lo ? lo - z.real() : z.real() > hi ? z.real() - hi : 0.0;
    return std::hypot(dx, z.imag());
}

struct LsqResult {
    double slope = 0.0, stderr_slope = 0.0, rms = 0.0;
};

// y = slope * x + per-class constants.
LsqResult class_regression(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& cls,
                           int nclass) {
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, 1 + nclass);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        A(i, 0) = x[static_cast<size_t>(i)];
        A(i, 1 + cls[static_cast<size_t>(i)]) = 1.0;
        b(i) = y[static_cast<size_t>(i)];
    }
    Eigen::VectorXd beta = A.colPivHouseholderQr().solve(b);
    Eigen::VectorXd r = b - A * beta;
    LsqResult out;
    out.slope = beta(0);
    out.rms = std::sqrt(r.squaredNorm() / n);
    const int dof = std::max(1, n - 1 - nclass);
    Eigen::MatrixXd cov = (A.transpose() * A).inverse() * (r.squaredNorm() / dof);
    out.stderr_slope = std::sqrt(std::max(0.0, cov(0, 0)));
    return out;
}

}  // namespace

GreenSamples green(const CrystalSpec& spec, std::complex<double> z, std::int64_t n_max, double eps, std::int64_t cap) {
    if (spec.d != 1 || spec.nu != 1) throw Error(ErrorCode::InvalidArgument, "Green's function needs d = 1, nu = 1");
    if (n_max < 0) throw Error(ErrorCode::InvalidArgument, "n_max must be nonnegative");
    ensure_valid(spec);
    GreenSamples g;
    g.z = z;
    g.n_max = n_max;

    double trunc = 0.0;
    auto coarse = entry_grid(spec, 0, 0, 1024, 1e-13, &trunc);
    double lo = INFINITY, hi = -INFINITY, jump = 0.0;
    for (size_t j = 0; j < coarse.size(); ++j) {
        double v = coarse[j].real();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        jump = std::max(jump, std::abs(coarse[(j + 1) % coarse.size()].real() - v));
    }
    const double dist = distance_to_interval(z, lo, hi), margin = 3.0 * trunc + jump;
    if (dist <= margin)
        throw Error(ErrorCode::SpectrumProximity,
                    fmt::format("z = {}{:+}i lies within {:.3g} of the band [{:.6g}, {:.6g}] (margin {:.3g})", z.real(),
                                z.imag(), dist, lo, hi, margin));
    g.distance = dist - margin;

    std::int64_t N = 1024;
    while (N < 4 * n_max) N *= 2;
    if (N > cap)
        throw Error(ErrorCode::ResolutionExceeded, fmt::format("n_max = {} needs more than the cap {}", n_max, cap));
    auto sample = [&](std::int64_t n) {
        auto h = entry_grid(spec, 0, 0, n, 1e-15);
        for (auto& v : h) v = 1.0 / (v.real() - z);
        detail::dft(h, 1, n, +1);
        std::vector<std::complex<double>> out(static_cast<size_t>(2 * n_max + 1));
        for (std::int64_t m = -n_max; m <= n_max; ++m)
            out[static_cast<size_t>(m + n_max)] = h[static_cast<size_t>(detail::wrap(m, n))] / static_cast<double>(n);
        return out;
    };
    auto prev = sample(N);
    while (true) {
        if (2 * N > cap)
            throw Error(ErrorCode::ResolutionExceeded, fmt::format("Green's function did not settle below {} at N = {}", eps, N));
        auto cur = sample(2 * N);
        double change = 0.0;
        for (size_t i = 0; i < cur.size(); ++i) change = std::max(change, std::abs(cur[i] - prev[i]));
        N *= 2;
        if (change <= eps) {
            g.values = std::move(cur);
            g.resolution = N;
            g.error = change;
            return g;
        }
        prev = std::move(cur);
    }
}

DecayFit decay_fit(const GreenSamples& s) {
    DecayFit fit;
    if (s.n_max < 64) throw Error(ErrorCode::PreconditionFailed, "decay fits need n_max >= 64");
    const double g0 = std::abs(s.at(0));
    const double floor = std::max(1e3 * 1e-16 * g0, 10.0 * s.error);
    std::int64_t n_hi = 0;
    for (std::int64_t n = 1; n <= s.n_max; ++n)
        if (std::abs(s.at(n)) > floor) n_hi = n;
    fit.n_hi = n_hi;
    fit.n_lo = std::max<std::int64_t>(1, n_hi / 16);
    std::vector<std::int64_t> ns;
    for (std::int64_t n = fit.n_lo; n <= n_hi; ++n)
        if (std::abs(s.at(n)) > floor) ns.push_back(n);
    if (ns.size() < 8) {
        fit.underflow = true;
        return fit;
    }
    // Residue classes mod 4 carry their own constants; a class whose values
    // sit far below the others is left out.
    double best[4] = {0, 0, 0, 0};
    int count[4] = {0, 0, 0, 0};
    for (auto n : ns) {
        double v = std::log(std::abs(s.at(n)));
        best[n % 4] += v;
        ++count[n % 4];
    }
    double top = -INFINITY;
    for (int r = 0; r < 4; ++r)
        if (count[r]) top = std::max(top, best[r] / count[r]);
    int map[4];
    int nclass = 0;
    for (int r = 0; r < 4; ++r)
        map[r] = count[r] >= 2 && best[r] / count[r] > top - std::log(1e3) ? nclass++ : -1;
    std::vector<double> lx, nx, y;
    std::vector<int> cls;
    for (auto n : ns) {
        int c = map[n % 4];
        if (c < 0) continue;
        lx.push_back(std::log(static_cast<double>(n)));
        nx.push_back(static_cast<double>(n));
        y.push_back(std::log(std::abs(s.at(n))));
        cls.push_back(c);
    }
    fit.classes = nclass;
    auto pw = class_regression(lx, y, cls, nclass);
    auto ex = class_regression(nx, y, cls, nclass);
    fit.residual_power = pw.rms;
    fit.residual_exponential = ex.rms;
    if (pw.rms <= ex.rms) {
        fit.model = "power";
        fit.exponent = pw.slope;
        fit.stderr_exponent = pw.stderr_slope;
    } else {
        fit.model = "exponential";
        fit.exponent = ex.slope;
        fit.stderr_exponent = ex.stderr_slope;
    }
    return fit;
}

ResolventResidual resolvent_residual(const CrystalSpec& spec, std::complex<double> z, std::int64_t n_max, double eps) {
    const std::int64_t L = 8 * std::max<std::int64_t>(n_max, 8);
    GreenSamples g = green(spec, z, L, eps);
    const auto& fam = spec.w(0, 0);
    const std::int64_t inner = n_max / 2, K = L - inner;
    ResolventResidual out;
    std::vector<std::pair<std::int64_t, double>> weights;
    for (std::int64_t k = -K; k <= K; ++k) {
        if (k == 0) continue;
        double w = fam.at({k});
        if (w != 0.0) weights.emplace_back(k, w);
    }
    const double Q = spec.Q[0];
    for (std::int64_t n = -inner; n <= inner; ++n) {
        std::complex<double> r = (Q - z) * g.at(n) - (n == 0 ? 1.0 : 0.0);
        for (const auto& [k, w] : weights) r += w * g.at(n + k);
        out.max_residual = std::max(out.max_residual, std::abs(r));
    }
    double far = 0.0;
    for (std::int64_t m = K - inner; m <= L; ++m) far = std::max({far, std::abs(g.at(m)), std::abs(g.at(-m))});
    out.bound = fam.tail_bound(K) * far + g.error * (fam.total().value + std::abs(Q - z));
    return out;
}

std::string green_csv(const GreenSamples& g) {
    std::string out = "n,re,im,abs\n";
    for (std::int64_t n = -g.n_max; n <= g.n_max; ++n) {
        auto v = g.at(n);
        out += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", n, v.real(), v.imag(), std::abs(v));
    }
    return out;
}

}  // namespace crystal
