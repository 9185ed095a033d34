#include "crystal/locality.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace crystal {

namespace {

// Bound on 2 sum_{r > R} r w(r)^2.
double hs_tail(const WeightFamily& fam, std::int64_t R) {
    double explicit_part = 0.0;
    for (const auto& [k, w] : fam.entries)
        if (k[0] > R) explicit_part += 2.0 * static_cast<double>(k[0]) * w * w;
    double rules = 0.0;
    for (const auto& r : fam.tails) rules += 2.0 * r.moment_above(std::max(R, fam.K0), 1.0, 2.0);
    // (sum of rules)^2 <= count * sum of squares
    if (fam.tails.size() > 1) rules *= static_cast<double>(fam.tails.size());
    return explicit_part + rules;
}

}  // namespace

CommutatorReport hs_norm(const CrystalSpec& spec, std::int64_t R_max) {
    if (spec.d != 1 || spec.nu != 1) throw Error(ErrorCode::InvalidArgument, "commutator norms need d = 1, nu = 1");
    if (R_max < 1) throw Error(ErrorCode::InvalidArgument, "R must be positive");
    ensure_valid(spec);
    const auto& fam = spec.w(0, 0);
    CommutatorReport rep;
    double sum = 0.0;
    std::int64_t next = 1;
    auto record = [&](std::int64_t R) {
        rep.R.push_back(R);
        rep.partial.push_back(sum);
        rep.tail.push_back(hs_tail(fam, R));
    };
    for (std::int64_t r = 1; r <= R_max; ++r) {
        double w = fam.at({r});
        sum += 2.0 * static_cast<double>(r) * w * w;
        if (r == next) {
            record(r);
            next *= 2;
        }
    }
    if (rep.R.back() != R_max) record(R_max);

    Certified total = fam.moment(1.0, 2.0);
    if (std::isfinite(rep.tail.back())) {
        rep.limit = total.value;
        rep.verdict = "converges";
        return rep;
    }
    rep.limit = INFINITY;
    // Harmonic-type growth must persist over two decades.
    auto partial_at = [&](std::int64_t R) {
        double s = 0.0;
        for (std::int64_t r = 1; r <= R; ++r) {
            double w = fam.at({r});
            s += 2.0 * static_cast<double>(r) * w * w;
        }
        return s;
    };
    if (R_max >= 10000) {
        double a = partial_at(R_max / 10000), b = partial_at(R_max / 100), c = sum;
        rep.verdict = (b - a) > 0.0 && (c - b) >= 0.5 * (b - a) ? "diverges" : "inconclusive";
    } else {
        rep.verdict = "inconclusive";
    }
    return rep;
}

std::vector<FiniteRankBound> finite_rank_error(const CrystalSpec& spec, const std::vector<std::int64_t>& N_list) {
    if (spec.d != 1 || spec.nu != 1) throw Error(ErrorCode::InvalidArgument, "finite-rank bounds need d = 1, nu = 1");
    ensure_valid(spec);
    std::vector<FiniteRankBound> out;
    for (auto N : N_list) {
        if (N < 0) throw Error(ErrorCode::InvalidArgument, "N must be nonnegative");
        out.push_back({N, std::sqrt(2.0) * 0.5 * spec.w(0, 0).tail_bound(N)});
    }
    return out;
}

std::string commutator_csv(const CommutatorReport& r) {
    std::string out = "R,partial_hs2,tail_bound\n";
    for (size_t i = 0; i < r.R.size(); ++i) out += fmt::format("{},{:.17g},{:.17g}\n", r.R[i], r.partial[i], r.tail[i]);
    return out;
}

}  // namespace crystal
