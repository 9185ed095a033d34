#include "crystal/weights.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "crystal/error.hpp"
#include "fft.hpp"

namespace crystal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr std::int64_t kDirectCap = std::int64_t{1} << 24;
constexpr std::int64_t kBoxCap = std::int64_t{1} << 24;

const bool gsl_quiet = [] {
    gsl_set_error_handler_off();
    return true;
}();

std::complex<double> unit(long double phase) {
    long double f = phase - std::floor(phase);
    double x = static_cast<double>(f) * kTwoPi;
    return {std::cos(x), std::sin(x)};
}

std::int64_t ipow(std::int64_t base, int e) {
    std::int64_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

int dyadic_exponent(std::int64_t n) {
    int j = 0;
    while ((std::int64_t{1} << j) < n) ++j;
    return j;
}

// Shell bound for d > 1: sum over |k|_inf > R of c |k|_2^-p.
double shell_bound(const TailRule& r, int d, std::int64_t R) {
    if (r.c == 0.0) return 0.0;
    if (r.p <= d) return kInf;
    double sum = 0.0;
    const std::int64_t S = 4096;
    for (std::int64_t s = R + 1; s <= R + S; ++s) {
        double count = std::pow(2.0 * s + 1, d) - std::pow(2.0 * s - 1, d);
        sum += count * r.c * std::pow(static_cast<double>(s), -r.p);
    }
    double Rp = static_cast<double>(R + S);
    sum += 2.0 * d * std::pow(3.0, d - 1) * r.c * std::pow(Rp, d - r.p) / (r.p - d);
    return sum;
}

// One-sided sum over matching n > K0 of w(n) z^n, z = e^{2 pi i theta}.
std::complex<double> oscillating_tail(const TailRule& r, std::int64_t K0, double theta,
                                      double eps, double& err) {
    std::complex<double> sum = 0.0;
    if (r.c == 0.0) return sum;
    if (r.pattern == TailRule::Pattern::Dyadic) {
        std::int64_t n = r.first_above(K0);
        if (n < 0) return sum;
        int j = dyadic_exponent(n);
        double phase = std::ldexp(theta, j);
        phase -= std::floor(phase);
        for (; j < 1100; ++j) {
            double rest = r.moment_above(std::int64_t{1} << std::min(j, 62), 0.0, 1.0);
            double w = r.formula(std::ldexp(1.0, j));
            sum += w * unit(phase);
            phase = 2.0 * phase;
            phase -= std::floor(phase);
            if (j >= 62 || rest < eps * 0.25) {
                err += j >= 62 ? r.moment_above(std::int64_t{1} << 62, 0.0, 1.0) : rest;
                break;
            }
        }
        return sum;
    }

    const std::int64_t st = r.step();
    std::int64_t n = r.first_above(K0);
    if (n < 0) return sum;
    long double ystep = static_cast<long double>(st) * theta;
    std::complex<double> y = unit(ystep);
    double gap = std::abs(1.0 - y);
    if (gap < 1e-15) {
        double block = r.c * std::pow(static_cast<double>(st), -r.p) *
                       hurwitz_zeta(r.p, static_cast<double>(n) / st);
        return block * unit(static_cast<long double>(n) * theta);
    }
    auto a = [&](std::int64_t m) { return r.formula(static_cast<double>(m)); };
    auto third_difference = [&](std::int64_t m) {
        return std::abs(a(m + 3 * st) - 3.0 * a(m + 2 * st) + 3.0 * a(m + st) - a(m));
    };
    std::int64_t direct = 0;
    double bound = third_difference(n) / std::pow(gap, 4);
    while (bound > 0.25 * eps && direct < kDirectCap) {
        std::int64_t count = std::max<std::int64_t>(64, direct);
        for (std::int64_t i = 0; i < count; ++i, n += st, ++direct)
            sum += a(n) * unit(static_cast<long double>(n) * theta);
        bound = third_difference(n) / std::pow(gap, 4);
    }
    if (bound > 0.25 * eps) bound = std::min(bound, r.moment_above(n - 1, 0.0, 1.0));
    double d0 = a(n), d1 = a(n + st) - a(n);
    double d2 = a(n + 2 * st) - 2.0 * a(n + st) + a(n);
    double d3 = a(n + 3 * st) - 3.0 * a(n + 2 * st) + 3.0 * a(n + st) - a(n);
    std::complex<double> inv = 1.0 / (1.0 - y);
    std::complex<double> euler = inv * (d0 + y * inv * (d1 + y * inv * (d2 + y * inv * d3)));
    sum += unit(static_cast<long double>(n) * theta) * euler;
    err += bound + 1e-15 * std::abs(euler);
    return sum;
}

}  // namespace

const char* pattern_name(TailRule::Pattern p) {
    switch (p) {
        case TailRule::Pattern::All: return "all";
        case TailRule::Pattern::Odd: return "odd";
        case TailRule::Pattern::Progression: return "progression";
        case TailRule::Pattern::Dyadic: return "dyadic";
    }
    return "?";
}

double hurwitz_zeta(double s, double q) {
    gsl_sf_result res;
    int status = gsl_sf_hzeta_e(s, q, &res);
    if (status == GSL_EUNDRFLW) return 0.0;
    if (status != GSL_SUCCESS)
        throw Error(ErrorCode::NumericalError, "Hurwitz zeta failed at s=" + std::to_string(s) +
                                                   ", q=" + std::to_string(q));
    return res.val;
}

std::int64_t linf(const Index& k) {
    std::int64_t m = 0;
    for (auto v : k) m = std::max<std::int64_t>(m, v < 0 ? -v : v);
    return m;
}

bool TailRule::matches(std::int64_t n) const {
    if (n < 1) return false;
    switch (pattern) {
        case Pattern::All: return true;
        case Pattern::Odd: return n % 2 == 1;
        case Pattern::Progression: return detail::wrap(n, b) == detail::wrap(a, b);
        case Pattern::Dyadic: return (n & (n - 1)) == 0;
    }
    return false;
}

double TailRule::formula(double r) const {
    double v = c * std::pow(r, -p);
    if (q != 0.0) v *= std::pow(std::log2(2.0 * r), -q);
    return v;
}

std::int64_t TailRule::step() const {
    switch (pattern) {
        case Pattern::All: return 1;
        case Pattern::Odd: return 2;
        case Pattern::Progression: return b;
        case Pattern::Dyadic: return 0;
    }
    return 1;
}

std::int64_t TailRule::first_above(std::int64_t N) const {
    N = std::max<std::int64_t>(N, 0);
    switch (pattern) {
        case Pattern::All: return N + 1;
        case Pattern::Odd: return (N + 1) % 2 == 1 ? N + 1 : N + 2;
        case Pattern::Progression: {
            std::int64_t n = N + 1;
            n += detail::wrap(a - n, b);
            return n;
        }
        case Pattern::Dyadic: {
            for (int j = 0; j < 63; ++j)
                if ((std::int64_t{1} << j) > N) return std::int64_t{1} << j;
            return -1;
        }
    }
    return -1;
}

double TailRule::moment_above(std::int64_t N, double s, double e) const {
    if (c == 0.0) return 0.0;
    const double x = e * p - s;
    const double y = e * q;
    const double ce = std::pow(c, e);
    if (pattern == Pattern::Dyadic) {
        std::int64_t n1 = first_above(N);
        int j1 = n1 < 0 ? 63 : dyadic_exponent(n1);
        if (x > 0.0) {
            double sum = 0.0;
            for (int j = j1;; ++j) {
                double term = ce * std::exp2(-j * x) * std::pow(j + 1.0, -y);
                sum += term;
                if (term <= 1e-18 * sum || term < 1e-300 || j > j1 + 20000) {
                    double ratio = std::exp2(-x);
                    return sum + term * ratio / (1.0 - ratio);
                }
            }
        }
        if (x == 0.0 && y > 1.0) return ce * hurwitz_zeta(y, j1 + 1.0);
        return kInf;
    }
    if (x <= 1.0) return kInf;
    std::int64_t n1 = first_above(N);
    if (n1 < 0) return 0.0;
    double st = static_cast<double>(step());
    return ce * std::pow(st, -x) * hurwitz_zeta(x, static_cast<double>(n1) / st);
}

bool TailRule::summable() const { return std::isfinite(moment_above(0, 0.0, 1.0)); }

double WeightFamily::at(const Index& k) const {
    auto it = entries.find(k);
    if (it != entries.end()) return it->second;
    if (tails.empty() || linf(k) <= K0) return 0.0;
    double v = 0.0;
    if (d == 1) {
        std::int64_t n = k[0] < 0 ? -k[0] : k[0];
        for (const auto& r : tails)
            if (r.matches(n)) v += r.formula(static_cast<double>(n));
    } else {
        double r2 = 0.0;
        for (auto x : k) r2 += static_cast<double>(x) * x;
        for (const auto& r : tails) v += r.formula(std::sqrt(r2));
    }
    return v;
}

bool WeightFamily::is_zero() const {
    for (const auto& [k, w] : entries)
        if (w != 0.0) return false;
    for (const auto& r : tails)
        if (r.c != 0.0) return false;
    return true;
}

Certified WeightFamily::total() const {
    double explicit_sum = 0.0;
    for (const auto& [k, w] : entries) explicit_sum += w;
    if (tails.empty()) return {explicit_sum, 1e-16 * std::abs(explicit_sum)};
    if (d == 1) {
        double t = 0.0;
        for (const auto& r : tails) t += 2.0 * r.moment_above(K0, 0.0, 1.0);
        double v = explicit_sum + t;
        return {v, 1e-14 * std::abs(v)};
    }
    double b = 0.0;
    for (const auto& r : tails) b += shell_bound(r, d, K0);
    return {explicit_sum + 0.5 * b, 0.5 * b};
}

double WeightFamily::tail_bound(std::int64_t N) const {
    double sum = 0.0;
    for (const auto& [k, w] : entries)
        if (linf(k) > N) sum += w;
    const std::int64_t R = std::max(N, K0);
    for (const auto& r : tails)
        sum += d == 1 ? 2.0 * r.moment_above(R, 0.0, 1.0) : shell_bound(r, d, R);
    return sum * (1.0 + 1e-12);
}

Certified WeightFamily::moment(double s, double e) const {
    double v = 0.0;
    for (const auto& [k, w] : entries) {
        double r = static_cast<double>(linf(k));
        if (w != 0.0) v += (s == 0.0 ? 1.0 : std::pow(r, s)) * std::pow(w, e);
    }
    for (const auto& r : tails) v += 2.0 * r.moment_above(K0, s, e);
    return {v, 1e-14 * std::abs(v)};
}

std::complex<double> WeightFamily::fourier(const std::vector<double>& theta, double eps,
                                           double* err) const {
    std::complex<double> sum = 0.0;
    double e = 0.0;
    for (const auto& [k, w] : entries) {
        long double phase = 0.0;
        for (int i = 0; i < d; ++i) phase += static_cast<long double>(k[i]) * theta[i];
        sum += w * unit(phase);
    }
    if (d == 1) {
        for (const auto& r : tails)
            sum += 2.0 * oscillating_tail(r, K0, theta[0], eps, e).real();
    } else if (!tails.empty()) {
        std::int64_t R = K0;
        auto bound = [&](std::int64_t RR) {
            double b = 0.0;
            for (const auto& r : tails) b += shell_bound(r, d, RR);
            return b;
        };
        while (bound(R) > eps && ipow(2 * (2 * R + 1), d) < kBoxCap) R = 2 * R + 1;
        Index k(d);
        std::int64_t side = 2 * R + 1;
        std::int64_t total = ipow(side, d);
        for (std::int64_t idx = 0; idx < total; ++idx) {
            std::int64_t rem = idx;
            for (int i = d - 1; i >= 0; --i) {
                k[i] = rem % side - R;
                rem /= side;
            }
            if (linf(k) <= K0) continue;
            long double phase = 0.0;
            for (int i = 0; i < d; ++i) phase += static_cast<long double>(k[i]) * theta[i];
            sum += at(k) * unit(phase);
        }
        e += bound(R);
    }
    if (err) *err = e;
    return sum;
}

std::vector<std::complex<double>> WeightFamily::fourier_grid(std::int64_t N, double eps,
                                                             double* err) const {
    const std::int64_t total = ipow(N, d);
    std::vector<std::complex<double>> bins(total, 0.0);
    double e = 0.0;
    auto flat = [&](const Index& k) {
        std::int64_t idx = 0;
        for (int i = 0; i < d; ++i) idx = idx * N + detail::wrap(k[i], N);
        return idx;
    };
    for (const auto& [k, w] : entries) bins[flat(k)] += w;

    if (d == 1) {
        for (const auto& r : tails) {
            if (r.c == 0.0) continue;
            if (r.pattern == TailRule::Pattern::Dyadic) {
                std::int64_t n = r.first_above(K0);
                if (n < 0) continue;
                int j = dyadic_exponent(n);
                std::int64_t res = detail::wrap(n, N);
                for (; j < 4000; ++j) {
                    double w = r.formula(std::ldexp(1.0, j));
                    bins[res] += w;
                    bins[detail::wrap(-res, N)] += w;
                    res = (2 * res) % N;
                    if (j >= 62 || w < 1e-20) {
                        double rest = 2.0 * r.moment_above(std::int64_t{1} << std::min(j, 62),
                                                           0.0, 1.0);
                        if (res == 0 && (N & (N - 1)) == 0)
                            bins[0] += rest;
                        else
                            e += rest;
                        break;
                    }
                }
                continue;
            }
            const std::int64_t st = r.step();
            const std::int64_t n1 = r.first_above(K0);
            const std::int64_t period = N / std::gcd(st, N);
            const double block = static_cast<double>(st) * static_cast<double>(period);
            const double scale = r.c * std::pow(block, -r.p);
            for (std::int64_t j = 0; j < period; ++j) {
                std::int64_t nj = n1 + st * j;
                double v = scale * hurwitz_zeta(r.p, static_cast<double>(nj) / block);
                bins[detail::wrap(nj, N)] += v;
                bins[detail::wrap(-nj, N)] += v;
            }
        }
    } else if (!tails.empty()) {
        std::int64_t R = K0;
        auto bound = [&](std::int64_t RR) {
            double b = 0.0;
            for (const auto& r : tails) b += shell_bound(r, d, RR);
            return b;
        };
        while (bound(R) > eps && ipow(2 * (2 * R + 1), d) < kBoxCap) R = 2 * R + 1;
        Index k(d);
        std::int64_t side = 2 * R + 1;
        std::int64_t count = ipow(side, d);
        for (std::int64_t idx = 0; idx < count; ++idx) {
            std::int64_t rem = idx;
            for (int i = d - 1; i >= 0; --i) {
                k[i] = rem % side - R;
                rem /= side;
            }
            if (linf(k) <= K0) continue;
            bins[flat(k)] += at(k);
        }
        e += bound(R);
    }
    detail::dft(bins, d, N, +1);
    if (err) *err = e;
    return bins;
}

std::vector<Index> WeightFamily::generators() const {
    std::vector<Index> gens;
    for (const auto& [k, w] : entries)
        if (w > 0.0) gens.push_back(k);
    for (const auto& r : tails) {
        if (r.c <= 0.0) continue;
        if (d == 1) {
            std::int64_t n1 = r.first_above(K0);
            if (n1 < 0) continue;
            gens.push_back({n1});
            gens.push_back({-n1});
            if (r.pattern != TailRule::Pattern::Dyadic) {
                gens.push_back({n1 + r.step()});
                gens.push_back({-(n1 + r.step())});
            }
        } else {
            for (int i = 0; i < d; ++i)
                for (std::int64_t s : {K0 + 1, K0 + 2}) {
                    Index k(d, 0);
                    k[i] = s;
                    gens.push_back(k);
                }
        }
    }
    return gens;
}

WeightFamily WeightFamily::reflected() const {
    WeightFamily out = *this;
    out.entries.clear();
    for (const auto& [k, w] : entries) {
        Index m = k;
        for (auto& x : m) x = -x;
        out.entries[m] = w;
    }
    return out;
}

}  // namespace crystal
