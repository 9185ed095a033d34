#include "crystal/floquet.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "parallel.hpp"

namespace crystal {

namespace {

bool use_symbol(const CrystalSpec& spec) {
    return spec.fitted_tails && spec.symbol && (spec.nu == 1 ? bool(spec.symbol->value) : bool(spec.symbol->matrix));
}

std::int64_t ipow(std::int64_t b, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

}  // namespace

Eigen::MatrixXcd adjacency_symbol(const CrystalSpec& spec, const std::vector<double>& theta, double eps,
                                  double* err) {
    const int nu = spec.nu;
    Eigen::MatrixXcd A(nu, nu);
    double total = 0.0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nu; ++j) {
            double e = 0.0;
            A(i, j) = spec.w(i, j).fourier(theta, eps / (nu * nu), &e);
            total += e;
        }
    if (err) *err = total;
    return A;
}

Eigen::MatrixXcd floquet_matrix(const CrystalSpec& spec, const std::vector<double>& theta, double eps,
                                double* err) {
    if (static_cast<int>(theta.size()) != spec.d)
        throw Error(ErrorCode::InvalidArgument, "theta must have d components");
    if (use_symbol(spec)) {
        if (err) *err = 0.0;
        if (spec.nu == 1) {
            Eigen::MatrixXcd H(1, 1);
            H(0, 0) = spec.symbol->value(theta);
            return H;
        }
        return spec.symbol->matrix(theta);
    }
    Eigen::MatrixXcd H = adjacency_symbol(spec, theta, eps, err);
    for (int i = 0; i < spec.nu; ++i) H(i, i) += spec.Q[static_cast<size_t>(i)];
    // Hermitian part; the series are Hermitian up to rounding.
    return (0.5 * (H + H.adjoint())).eval();
}

std::vector<double> BandGrid::theta(std::int64_t point) const {
    std::vector<double> t(static_cast<size_t>(d));
    for (int i = d - 1; i >= 0; --i) {
        t[static_cast<size_t>(i)] = static_cast<double>(point % N) / static_cast<double>(N);
        point /= N;
    }
    return t;
}

std::int64_t BandGrid::neighbor(std::int64_t point, int axis, int step) const {
    std::int64_t stride = ipow(N, d - 1 - axis);
    std::int64_t coord = (point / stride) % N;
    std::int64_t moved = ((coord + step) % N + N) % N;
    return point + (moved - coord) * stride;
}

std::vector<std::complex<double>> entry_grid(const CrystalSpec& spec, int i, int j, std::int64_t N, double eps,
                                             double* err) {
    std::vector<std::complex<double>> out;
    if (use_symbol(spec)) {
        const std::int64_t P = ipow(N, spec.d);
        out.resize(static_cast<size_t>(P));
        BandGrid shape;
        shape.d = spec.d;
        shape.N = N;
        for (std::int64_t p = 0; p < P; ++p) {
            auto t = shape.theta(p);
            out[static_cast<size_t>(p)] = spec.nu == 1 ? std::complex<double>(spec.symbol->value(t))
                                                       : spec.symbol->matrix(t)(i, j);
        }
        if (err) *err = 0.0;
        return out;
    }
    out = spec.w(i, j).fourier_grid(N, eps, err);
    if (i == j)
        for (auto& v : out) v += spec.Q[static_cast<size_t>(i)];
    return out;
}

BandGrid sample_bands(const CrystalSpec& spec, std::int64_t N, double eps, SampleOptions opts) {
    if (N < 4 || N % 4 != 0) throw Error(ErrorCode::InvalidArgument, "grid size must be a positive multiple of 4");
    if (ipow(N, spec.d) > (std::int64_t{1} << 26)) throw Error(ErrorCode::InvalidArgument, "grid too large");
    ensure_valid(spec);
    BandGrid g;
    g.spec = std::make_shared<CrystalSpec>(spec);
    g.d = spec.d;
    g.nu = spec.nu;
    g.N = N;
    g.eps = eps;
    const std::int64_t P = ipow(N, spec.d);
    const int nu = spec.nu;
    g.eigenvalues.assign(static_cast<size_t>(P * nu), 0.0);
    if (opts.store_vectors) g.vectors.resize(static_cast<size_t>(P));

    const bool symbolic = use_symbol(spec) && nu > 1;
    std::vector<std::vector<std::complex<double>>> entries;
    if (!symbolic) {
        entries.resize(static_cast<size_t>(nu * nu));
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nu; ++j) {
                double e = 0.0;
                if (j < i) continue;
                entries[static_cast<size_t>(i * nu + j)] = entry_grid(spec, i, j, N, eps / (nu * nu), &e);
                g.truncation_error += (i == j ? 1.0 : 2.0) * e;
            }
    }
    std::string failure;
    detail::parallel_for(P, opts.threads, [&](std::int64_t p) {
        Eigen::MatrixXcd H(nu, nu);
        if (symbolic) {
            H = spec.symbol->matrix(g.theta(p));
        } else {
            for (int i = 0; i < nu; ++i)
                for (int j = i; j < nu; ++j) {
                    auto v = entries[static_cast<size_t>(i * nu + j)][static_cast<size_t>(p)];
                    H(i, j) = v;
                    H(j, i) = std::conj(v);
                }
            for (int i = 0; i < nu; ++i) H(i, i) = H(i, i).real();
        }
        if (nu == 1) {
            g.eigenvalues[static_cast<size_t>(p)] = H(0, 0).real();
            if (opts.store_vectors) g.vectors[static_cast<size_t>(p)] = Eigen::MatrixXcd::Identity(1, 1);
            return;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, opts.store_vectors ? Eigen::ComputeEigenvectors
                                                                                 : Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) {
            auto t = g.theta(p);
            throw Error(ErrorCode::NumericalError, fmt::format("eigensolver failed at theta_0 = {}", t[0]));
        }
        for (int b = 0; b < nu; ++b) g.eigenvalues[static_cast<size_t>(p * nu + b)] = es.eigenvalues()(b);
        if (opts.store_vectors) g.vectors[static_cast<size_t>(p)] = es.eigenvectors();
    });
    return g;
}

BandReport detect_flat_bands(const BandGrid& grid, double tol_flat, double min_measure) {
    BandReport rep;
    const std::int64_t P = grid.points();
    const int nu = grid.nu;
    rep.bands.resize(static_cast<size_t>(nu));
    double lo = grid.eigenvalues.empty() ? 0.0 : grid.eigenvalues.front(), hi = lo;
    for (int b = 0; b < nu; ++b) {
        auto& info = rep.bands[static_cast<size_t>(b)];
        info.min = grid.E(0, b);
        info.max = info.min;
        for (std::int64_t p = 0; p < P; ++p) {
            info.min = std::min(info.min, grid.E(p, b));
            info.max = std::max(info.max, grid.E(p, b));
        }
        info.error = grid.truncation_error;
        lo = std::min(lo, info.min);
        hi = std::max(hi, info.max);
    }
    const double width = hi - lo;
    rep.tol_flat = tol_flat > 0.0 ? tol_flat : std::max(1e-9 * width, 1e-12);
    rep.min_measure = min_measure;
    const double tol = rep.tol_flat;

    std::vector<double> sorted = grid.eigenvalues;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> candidates;
    const double need = min_measure * static_cast<double>(P);
    for (size_t i = 0, j = 0; i < sorted.size();) {
        j = std::max(j, i);
        while (j < sorted.size() && sorted[j] - sorted[i] < tol) ++j;
        if (static_cast<double>(j - i) > need) {
            candidates.push_back(sorted[(i + j) / 2]);
            i = j;
        } else {
            ++i;
        }
    }

    std::vector<std::vector<char>> band_flat(static_cast<size_t>(nu), std::vector<char>(static_cast<size_t>(P), 0));
    for (double lambda : candidates) {
        std::vector<char> near(static_cast<size_t>(P), 0);
        std::vector<int> which(static_cast<size_t>(P), 0);
        for (std::int64_t p = 0; p < P; ++p) {
            double best = INFINITY;
            for (int b = 0; b < nu; ++b) {
                double dist = std::abs(grid.E(p, b) - lambda);
                if (dist < best) {
                    best = dist;
                    which[static_cast<size_t>(p)] = b;
                }
            }
            near[static_cast<size_t>(p)] = best < tol;
        }
        // Isolated grid points are level-set crossings, not flat pieces.
        std::int64_t kept = 0, first = -1, last = -1;
        std::vector<std::int64_t> per_band(static_cast<size_t>(nu), 0);
        for (std::int64_t p = 0; p < P; ++p) {
            if (!near[static_cast<size_t>(p)]) continue;
            bool joined = false;
            for (int a = 0; a < grid.d && !joined; ++a)
                for (int s : {-1, 1})
                    if (near[static_cast<size_t>(grid.neighbor(p, a, s))]) joined = true;
            if (!joined) continue;
            ++kept;
            if (first < 0) first = p;
            last = p;
            ++per_band[static_cast<size_t>(which[static_cast<size_t>(p)])];
            for (int b = 0; b < nu; ++b)
                if (std::abs(grid.E(p, b) - lambda) < tol) band_flat[static_cast<size_t>(b)][static_cast<size_t>(p)] = 1;
        }
        double measure = static_cast<double>(kept) / static_cast<double>(P);
        if (measure <= min_measure) continue;
        FlatSegment seg;
        seg.value = lambda;
        seg.measure = measure;
        seg.band = static_cast<int>(std::max_element(per_band.begin(), per_band.end()) - per_band.begin());
        seg.witness_lo = grid.theta(first);
        seg.witness_hi = grid.theta(last);
        rep.flats.push_back(seg);
    }
    for (int b = 0; b < nu; ++b) {
        auto& info = rep.bands[static_cast<size_t>(b)];
        const auto& mask = band_flat[static_cast<size_t>(b)];
        info.flat_fraction = static_cast<double>(std::count(mask.begin(), mask.end(), 1)) / static_cast<double>(P);
        info.kind = info.flat_fraction >= 0.999 ? "flat" : info.flat_fraction > min_measure ? "partly flat" : "non-flat";
    }

    std::vector<std::pair<double, double>> iv;
    for (const auto& b : rep.bands) iv.emplace_back(b.min - b.error, b.max + b.error);
    std::sort(iv.begin(), iv.end());
    for (const auto& x : iv) {
        if (!rep.spectrum.empty() && x.first <= rep.spectrum.back().second)
            rep.spectrum.back().second = std::max(rep.spectrum.back().second, x.second);
        else
            rep.spectrum.push_back(x);
    }
    return rep;
}

QuotientMatrix quotient_matrix(const CrystalSpec& spec) {
    QuotientMatrix q;
    const int nu = spec.nu;
    q.A.resize(nu, nu);
    q.error.resize(nu, nu);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nu; ++j) {
            Certified c = spec.w(i, j).total();
            q.A(i, j) = c.value;
            q.error(i, j) = c.error;
        }
    auto conn = check_connected(spec);
    q.irreducible = conn.quotient_connected;
    q.component = conn.component;
    if (!q.irreducible) q.witness = conn.witness;
    return q;
}

DirichletCheck dirichlet_form_check(const CrystalSpec& spec, const std::vector<double>& theta,
                                    const Eigen::VectorXcd& f, double eps) {
    const int nu = spec.nu, d = spec.d;
    if (f.size() != nu) throw Error(ErrorCode::InvalidArgument, "f must have nu entries");
    if (static_cast<int>(theta.size()) != d) throw Error(ErrorCode::InvalidArgument, "theta must have d components");
    DirichletCheck out;

    double lhs_err = 0.0;
    Eigen::MatrixXcd A = adjacency_symbol(spec, theta, eps, &lhs_err);
    double quad = 0.0;
    for (int i = 0; i < nu; ++i) {
        double deg = 0.0;
        for (int j = 0; j < nu; ++j) deg += spec.w(i, j).total().value;
        quad += deg * std::norm(f(i));
    }
    out.lhs = quad - (f.adjoint() * A * f)(0, 0).real();

    auto edge = [&](int i, int j, const Index& k, double w) {
        long double phase = 0.0;
        for (int a = 0; a < d; ++a) phase += static_cast<long double>(k[static_cast<size_t>(a)]) * theta[static_cast<size_t>(a)];
        double x = static_cast<double>(2.0L * 3.14159265358979323846264338327950288L * (phase - std::floor(phase)));
        return 0.5 * w * std::norm(f(i) - std::polar(1.0, x) * f(j));
    };
    double rhs = 0.0, rhs_err = 0.0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nu; ++j) {
            const auto& fam = spec.w(i, j);
            for (const auto& [k, w] : fam.entries) rhs += edge(i, j, k, w);
            if (!fam.has_tail()) continue;
            const double amp = 0.5 * std::pow(std::abs(f(i)) + std::abs(f(j)), 2);
            std::int64_t R = std::max<std::int64_t>(fam.K0, 1);
            const std::int64_t cap = d == 1 ? std::int64_t{1} << 24 : static_cast<std::int64_t>(std::pow(double(1 << 22), 1.0 / d) / 2);
            while (amp * fam.tail_bound(R) > 0.1 * eps && 2 * R <= cap) R *= 2;
            if (d == 1) {
                for (const auto& r : fam.tails)
                    for (std::int64_t n = r.first_above(fam.K0); n > 0 && n <= R;
                         n = r.pattern == TailRule::Pattern::Dyadic ? 2 * n : n + r.step()) {
                        double w = r.formula(static_cast<double>(n));
                        rhs += edge(i, j, {n}, w) + edge(i, j, {-n}, w);
                    }
            } else {
                const std::int64_t side = 2 * R + 1;
                Index k(static_cast<size_t>(d));
                for (std::int64_t idx = 0; idx < ipow(side, d); ++idx) {
                    std::int64_t rem = idx;
                    for (int a = d - 1; a >= 0; --a) {
                        k[static_cast<size_t>(a)] = rem % side - R;
                        rem /= side;
                    }
                    if (linf(k) <= fam.K0) continue;
                    rhs += edge(i, j, k, fam.at(k));
                }
            }
            rhs_err += amp * fam.tail_bound(R);
        }
    out.rhs = rhs;
    out.diff = std::abs(out.lhs - out.rhs);
    out.error = lhs_err * f.squaredNorm() + rhs_err + 1e-14 * (std::abs(out.lhs) + 1.0);
    return out;
}

TopBandVerdict top_band_flatness(const BandGrid& grid, double tol_flat) {
    TopBandVerdict v;
    const int top = grid.nu - 1;
    double lo = INFINITY, hi = -INFINITY, all_lo = INFINITY, all_hi = -INFINITY;
    for (std::int64_t p = 0; p < grid.points(); ++p) {
        lo = std::min(lo, grid.E(p, top));
        hi = std::max(hi, grid.E(p, top));
        for (int b = 0; b < grid.nu; ++b) {
            all_lo = std::min(all_lo, grid.E(p, b));
            all_hi = std::max(all_hi, grid.E(p, b));
        }
    }
    v.oscillation = hi - lo;
    const double tol = tol_flat > 0.0 ? tol_flat : std::max(1e-9 * (all_hi - all_lo), 1e-12);
    v.threshold = 10.0 * tol;
    if (grid.spec && !check_connected(*grid.spec).connected) {
        v.skipped = true;
        v.note = "skipped: crystal is not connected, top-band non-flatness is not guaranteed";
        return v;
    }
    v.passed = v.oscillation > v.threshold;
    v.note = v.passed ? "top band is not entirely flat" : "top band looks flat on this grid";
    return v;
}

std::string bands_csv(const BandGrid& grid) {
    std::string out;
    for (int i = 0; i < grid.d; ++i) out += fmt::format("{}theta_{}", i ? "," : "", i + 1);
    for (int b = 0; b < grid.nu; ++b) out += fmt::format(",E_{}", b + 1);
    out += '\n';
    for (std::int64_t p = 0; p < grid.points(); ++p) {
        auto t = grid.theta(p);
        for (int i = 0; i < grid.d; ++i) out += fmt::format("{}{:.17g}", i ? "," : "", t[static_cast<size_t>(i)]);
        for (int b = 0; b < grid.nu; ++b) out += fmt::format(",{:.17g}", grid.E(p, b));
        out += '\n';
    }
    return out;
}

}  // namespace crystal
