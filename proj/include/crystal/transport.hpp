#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crystal/evolve.hpp"

namespace crystal {

struct BallisticLimit {
    double value = 0.0;
    std::vector<std::int64_t> N;   // N/2, N, 2N
    std::vector<double> partial;   // quadrature at each N
    double increment_ratio = 0.0;
    bool extrapolated = false;
};

// (1/4 pi^2) int |h'|^2 |psi^|^2 by midpoint quadrature, checked for
// stability on N/2, N, 2N. Throws DivergentGradientEnergy when the
// increments do not shrink.
BallisticLimit analytic_ballistic_limit(const CrystalSpec& spec, std::int64_t N = 4096,
                                        const std::function<std::complex<double>(double)>& psi_hat = {});

struct MsdOptions {
    std::int64_t M_start = 512;
    std::int64_t M_cap = std::int64_t{1} << 14;
    double rel_tol = 1e-6;
    double eps = 1e-10;
    std::int64_t Ncap = std::int64_t{1} << 22;
};

struct TransportReport {
    std::vector<double> t;
    std::vector<double> msd;
    std::vector<bool> converged;
    std::vector<std::int64_t> window;
    double fitted_speed2 = 0.0;
    double analytic_limit = 0.0;
    std::string verdict;  // "ballistic", "super-ballistic-suspect", "inconclusive"
    std::string note;
};

TransportReport msd_series(const CrystalSpec& spec, const std::vector<double>& times, MsdOptions opts = {});

struct WindowSums {
    std::vector<std::int64_t> M;
    std::vector<double> S;  // sum_{|m| <= M} m^2 |psi_t(m)|^2
    double ratio = 0.0;     // S(M_last) / S(M_first)
};

// Partial MSD sums at one FFT resolution N for every window in M_list.
WindowSums msd_window_sums(const CrystalSpec& spec, double t, const std::vector<std::int64_t>& M_list, std::int64_t N);

struct SuperballisticEntry {
    double alpha = 0.0;
    double window_ratio = 0.0;
    double window_exponent = 0.0;    // increments of S(M) grow like M^gamma
    double gradient_exponent = 0.0;  // increments of int |h'|^2 on refining grids
    std::vector<double> window_sums;
    std::vector<double> gradient_energy;
    std::string verdict;  // "super-ballistic", "ballistic", "boundary", "inconclusive"
};

std::vector<SuperballisticEntry> superballistic_detector(const std::vector<double>& alphas, double t,
                                                         const std::vector<std::int64_t>& M_list);

struct LayerSpeed {
    double total = 0.0;  // (1/4 pi^2) int sum_n |grad E_n|^2
    bool positive = false;
    std::string note;
};

LayerSpeed layer_speed(const CrystalSpec& spec, std::int64_t N = 1024);

}  // namespace crystal
