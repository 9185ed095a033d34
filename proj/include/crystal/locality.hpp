#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crystal/spec.hpp"

namespace crystal {

struct CommutatorReport {
    std::vector<std::int64_t> R;
    std::vector<double> partial;  // 2 sum_{r <= R} r w(r)^2
    std::vector<double> tail;     // certified bound on the rest, +inf if divergent
    double limit = 0.0;           // closed-form total when finite
    std::string verdict;          // "converges", "diverges", "inconclusive"
};

// Hilbert-Schmidt norm squared of [H, 1_{n >= 0}] via the reindexed sum,
// reported at R = 1, 2, 4, ... and at R_max.
CommutatorReport hs_norm(const CrystalSpec& spec, std::int64_t R_max);

struct FiniteRankBound {
    std::int64_t N = 0;
    double bound = 0.0;  // sqrt(2) sum_{m > N} w(m)
};

std::vector<FiniteRankBound> finite_rank_error(const CrystalSpec& spec, const std::vector<std::int64_t>& N_list);

std::string commutator_csv(const CommutatorReport& r);

}  // namespace crystal
