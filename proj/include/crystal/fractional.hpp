#pragma once

#include <cstdint>

#include "crystal/spec.hpp"

namespace crystal {

// nu = 1 crystal of (-Laplacian)^alpha on Z^d: w(k) = -(-Lap)^alpha(0, k) for
// k != 0 and Q = sum_k w(k), so that H = (-Lap)^alpha + 2Q - (-Lap)^alpha(0,0)
// has the symbol 2Q - (sum_i 4 sin^2 pi theta_i)^alpha.
CrystalSpec fractional_laplacian(int d, double alpha, std::int64_t ncoef = 64);

// -(-Lap)^alpha(0, k) on Z from the heat-kernel representation
// (alpha / Gamma(1 - alpha)) int_0^inf e^{-2t} I_k(2t) t^{-1-alpha} dt.
double heat_kernel_crosscheck(double alpha, std::int64_t k, double tmax = 64.0);

}  // namespace crystal
