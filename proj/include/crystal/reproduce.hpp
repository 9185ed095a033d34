#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace crystal {

struct ReproduceOptions {
    std::int64_t grid_override = 0;  // > 0 caps every grid and FFT size
    bool inject_sign_error = false;  // flips w(-1) of graph_b
    int threads = 0;
    std::uint64_t seed = 20240601;
};

struct ClaimResult {
    std::string id;
    std::string claim;
    bool passed = false;
    std::string detail;
    std::string error;  // error name when a check threw
};

struct ReproduceReport {
    std::vector<ClaimResult> claims;
    double seconds = 0.0;
    bool passed() const;
    std::string markdown() const;
};

ReproduceReport reproduce(const ReproduceOptions& opts = {});

}  // namespace crystal
