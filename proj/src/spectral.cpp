#include "crystal/spectral.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace crystal {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    auto mid = v.begin() + static_cast<long>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

// Central-difference gradient norm of band b at every grid point, with step s.
std::vector<double> gradient_norm(const BandGrid& g, int b, int s) {
    std::vector<double> out(static_cast<size_t>(g.points()));
    const double scale = static_cast<double>(g.N) / (2.0 * s);
    for (std::int64_t p = 0; p < g.points(); ++p) {
        double sum = 0.0;
        for (int a = 0; a < g.d; ++a) {
            double diff = (g.E(g.neighbor(p, a, s), b) - g.E(g.neighbor(p, a, -s), b)) * scale;
            sum += diff * diff;
        }
        out[static_cast<size_t>(p)] = std::sqrt(sum);
    }
    return out;
}

}  // namespace

std::vector<std::complex<double>> psi_hat_on_grid(const BandGrid& grid,
                                                  const std::map<std::int64_t, std::complex<double>>& psi) {
    if (grid.d != 1) throw Error(ErrorCode::InvalidArgument, "psi_hat_on_grid supports d = 1");
    std::vector<std::complex<double>> out(static_cast<size_t>(grid.points()), 0.0);
    for (std::int64_t p = 0; p < grid.points(); ++p)
        for (const auto& [n, a] : psi) {
            std::int64_t r = ((n * p) % grid.N + grid.N) % grid.N;
            out[static_cast<size_t>(p)] += a * std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(r) / grid.N);
        }
    return out;
}

OccupationHistogram occupation_density(const BandGrid& grid, const std::vector<std::complex<double>>& psi_hat,
                                       int bins, int band) {
    if (bins < 2) throw Error(ErrorCode::InvalidArgument, "at least two bins are required");
    if (band < 0 || band >= grid.nu) throw Error(ErrorCode::InvalidArgument, "band index out of range");
    if (static_cast<std::int64_t>(psi_hat.size()) != grid.points())
        throw Error(ErrorCode::InvalidArgument, "psi_hat must be sampled on the band grid");
    OccupationHistogram h;
    h.band = band;
    double lo = INFINITY, hi = -INFINITY;
    for (std::int64_t p = 0; p < grid.points(); ++p) {
        lo = std::min(lo, grid.E(p, band));
        hi = std::max(hi, grid.E(p, band));
    }
    if (hi == lo) hi = lo + 1e-12;
    h.edges.resize(static_cast<size_t>(bins + 1));
    for (int i = 0; i <= bins; ++i) h.edges[static_cast<size_t>(i)] = lo + (hi - lo) * i / bins;
    h.mass.assign(static_cast<size_t>(bins), 0.0);
    const double cell = 1.0 / static_cast<double>(grid.points());
    for (std::int64_t p = 0; p < grid.points(); ++p) {
        double e = grid.E(p, band);
        int i = static_cast<int>(std::floor((e - lo) / (hi - lo) * bins));
        i = std::clamp(i, 0, bins - 1);
        double m = std::norm(psi_hat[static_cast<size_t>(p)]) * cell;
        h.mass[static_cast<size_t>(i)] += m;
        h.total += m;
    }
    auto flats = detect_flat_bands(grid);
    for (const auto& f : flats.flats) {
        double m = 0.0;
        for (std::int64_t p = 0; p < grid.points(); ++p)
            if (std::abs(grid.E(p, band) - f.value) < flats.tol_flat) m += std::norm(psi_hat[static_cast<size_t>(p)]) * cell;
        if (m > 0.0) h.atoms.emplace_back(f.value, m);
    }
    return h;
}

std::vector<ACVerdict> ac_criterion(const BandGrid& grid, double tol_grad, double min_measure) {
    if (!grid.spec) throw Error(ErrorCode::PreconditionFailed, "band grid carries no crystal");
    BandGrid fine = sample_bands(*grid.spec, 2 * grid.N, grid.eps);
    std::vector<ACVerdict> out;
    for (int b = 0; b < grid.nu; ++b) {
        ACVerdict v;
        v.band = b;
        double lo = INFINITY, hi = -INFINITY;
        for (std::int64_t p = 0; p < grid.points(); ++p) {
            lo = std::min(lo, grid.E(p, b));
            hi = std::max(hi, grid.E(p, b));
        }
        const double tol = tol_grad > 0.0 ? tol_grad : std::max(1e-6 * (hi - lo), 1e-12);
        auto fraction = [&](const BandGrid& g) {
            auto gn = gradient_norm(g, b, 1);
            return static_cast<double>(std::count_if(gn.begin(), gn.end(), [&](double x) { return x < tol; })) /
                   static_cast<double>(gn.size());
        };
        v.fraction_coarse = fraction(grid);
        v.fraction_fine = fraction(fine);

        // Difference quotients of a differentiable band settle as the step
        // shrinks; for nowhere-differentiable bands they do not.
        auto d1 = gradient_norm(fine, b, 1), d2 = gradient_norm(fine, b, 2), d4 = gradient_norm(fine, b, 4);
        std::vector<double> a12(d1.size()), a24(d1.size());
        for (size_t i = 0; i < d1.size(); ++i) {
            a12[i] = std::abs(d1[i] - d2[i]);
            a24[i] = std::abs(d2[i] - d4[i]);
        }
        double num = median(a12), den = median(a24);
        double scale = std::max(1e-300, median(d2));
        v.stability = den <= 1e-10 * scale ? (num <= 1e-10 * scale ? 0.0 : INFINITY) : num / den;

        const bool flat = v.fraction_fine > min_measure && v.fraction_fine >= 0.5 * v.fraction_coarse;
        if (flat) v.verdict = "FLAT-SUSPECT";
        else if (v.stability > 0.7) v.verdict = "inconclusive (gradient undefined a.e.)";
        else v.verdict = "AC-consistent";
        out.push_back(v);
    }
    return out;
}

RegularityProbe regularity_probe(const CrystalSpec& spec, const std::vector<int>& scales) {
    if (spec.nu != 1 || spec.d != 1) throw Error(ErrorCode::InvalidArgument, "regularity probe needs d = 1, nu = 1");
    if (scales.empty()) throw Error(ErrorCode::InvalidArgument, "no scales given");
    ensure_valid(spec);
    RegularityProbe r;
    r.j = scales;
    std::sort(r.j.begin(), r.j.end());
    const int jmax = r.j.back();
    if (r.j.front() < 1 || jmax > 22) throw Error(ErrorCode::InvalidArgument, "scales must satisfy 1 <= j <= 22");
    const std::int64_t N = std::int64_t{1} << (jmax + 2);
    auto h = entry_grid(spec, 0, 0, N, 1e-13);
    for (int j : r.j) {
        const std::int64_t shift = N >> j;
        const double step = std::ldexp(1.0, -j);
        double q = 0.0;
        for (std::int64_t m = 0; m < N; ++m)
            q = std::max(q, std::abs(h[static_cast<size_t>((m + shift) % N)].real() - h[static_cast<size_t>(m)].real()) / step);
        r.h.push_back(step);
        r.quotient.push_back(q);
    }
    Certified mom = spec.w(0, 0).moment(1.0, 1.0);
    r.lipschitz_bound = std::isfinite(mom.value) ? 2.0 * std::numbers::pi * mom.value : INFINITY;

    // Hoelder fit: q ~ h^(beta - 1).
    const size_t n = r.h.size();
    if (n >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < n; ++i) {
            double x = std::log(r.h[i]), y = std::log(std::max(r.quotient[i], 1e-300));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        r.holder = std::clamp(1.0 + slope, 0.0, 1.0);
    }
    bool increasing = n >= 4;
    for (size_t i = 1; i < n; ++i)
        if (r.quotient[i] <= r.quotient[i - 1]) increasing = false;
    if (increasing) {
        std::vector<double> inc;
        for (size_t i = 1; i < n; ++i) inc.push_back(r.quotient[i] - r.quotient[i - 1]);
        const size_t k = std::min<size_t>(3, inc.size());
        double first = 0, last = 0;
        for (size_t i = 0; i < k; ++i) {
            first += inc[i] / k;
            last += inc[inc.size() - 1 - i] / k;
        }
        r.unbounded = last >= 0.25 * first && r.quotient.back() / r.quotient.front() > 1.2;
    }
    if (r.unbounded) r.verdict = "unbounded difference quotients (no saturation across scales)";
    else if (std::isfinite(r.lipschitz_bound)) r.verdict = "bounded (Lipschitz)";
    else r.verdict = "bounded on the probed scales";
    return r;
}

std::string histogram_csv(const OccupationHistogram& h) {
    std::string out = "bin_lo,bin_hi,mass\n";
    for (size_t i = 0; i < h.mass.size(); ++i)
        out += fmt::format("{:.17g},{:.17g},{:.17g}\n", h.edges[i], h.edges[i + 1], h.mass[i]);
    return out;
}

std::string probe_csv(const RegularityProbe& p) {
    std::string out = "scale,max_quotient\n";
    for (size_t i = 0; i < p.h.size(); ++i) out += fmt::format("{:.17g},{:.17g}\n", p.h[i], p.quotient[i]);
    return out;
}

}  // namespace crystal
