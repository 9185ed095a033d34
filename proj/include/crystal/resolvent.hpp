#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "crystal/spec.hpp"

namespace crystal {

struct GreenSamples {
    std::complex<double> z;
    double distance = 0.0;       // dist(z, sampled band) minus the safety margin
    std::int64_t n_max = 0;
    std::vector<std::complex<double>> values;  // G(0, n) for n = -n_max..n_max
    std::int64_t resolution = 0;
    double error = 0.0;          // last refinement change

    std::complex<double> at(std::int64_t n) const { return values[static_cast<size_t>(n + n_max)]; }
};

// G^z(0, n) = int e^{2 pi i n theta} / (h(theta) - z) dtheta for a d = 1, nu = 1 crystal.
GreenSamples green(const CrystalSpec& spec, std::complex<double> z, std::int64_t n_max, double eps = 1e-13,
                   std::int64_t cap = std::int64_t{1} << 24);

struct DecayFit {
    std::string model;     // "power" or "exponential"; empty on underflow
    double exponent = 0.0; // power: G ~ n^exponent; exponential: G ~ e^{exponent n}
    double stderr_exponent = 0.0;
    double residual_power = 0.0;
    double residual_exponential = 0.0;
    std::int64_t n_lo = 0, n_hi = 0;
    int classes = 0;       // residue classes mod 4 with separate constants
    bool underflow = false;
};

DecayFit decay_fit(const GreenSamples& samples);

struct ResolventResidual {
    double max_residual = 0.0;  // max over |n| <= n_max/2 of |((H - z) G)(n) - delta_0(n)|
    double bound = 0.0;         // certified truncation part
};

ResolventResidual resolvent_residual(const CrystalSpec& spec, std::complex<double> z, std::int64_t n_max,
                                     double eps = 1e-13);

std::string green_csv(const GreenSamples& g);

}  // namespace crystal
