#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace crystal::detail {

// In-place unnormalized DFT over a d-dimensional cube of side n, row-major.
// sign = -1 computes sum_j x_j e^{-2 pi i m j / n}, sign = +1 the conjugate kernel.
void dft(std::vector<std::complex<double>>& data, int d, std::int64_t n, int sign);

inline std::int64_t wrap(std::int64_t k, std::int64_t n) {
    std::int64_t r = k % n;
    return r < 0 ? r + n : r;
}

}  // namespace crystal::detail
