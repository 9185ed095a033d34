#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crystal/floquet.hpp"

namespace crystal {

// psi^(theta) = sum_n psi(n) e^{2 pi i n theta} on the grid points of a d = 1 grid.
std::vector<std::complex<double>> psi_hat_on_grid(const BandGrid& grid,
                                                  const std::map<std::int64_t, std::complex<double>>& psi);

struct OccupationHistogram {
    int band = 0;
    std::vector<double> edges;  // bins + 1
    std::vector<double> mass;
    double total = 0.0;
    std::vector<std::pair<double, double>> atoms;  // (value, mass) on flat segments
};

// Spectral measure of psi for one band: mass of |psi^|^2 dtheta pushed forward by E_band.
OccupationHistogram occupation_density(const BandGrid& grid, const std::vector<std::complex<double>>& psi_hat,
                                       int bins, int band = 0);

struct ACVerdict {
    int band = 0;
    double fraction_coarse = 0.0;  // |grad E| < tol_grad on N
    double fraction_fine = 0.0;    // same on 2N
    double stability = 0.0;        // median |D1 - D2| / median |D2 - D4|
    std::string verdict;           // "AC-consistent", "FLAT-SUSPECT", "inconclusive (gradient undefined a.e.)"
};

// tol_grad <= 0 selects 1e-6 times the band width. Samples the crystal again at 2N.
std::vector<ACVerdict> ac_criterion(const BandGrid& grid, double tol_grad = 0.0, double min_measure = 1e-3);

struct RegularityProbe {
    std::vector<int> j;       // scales h = 2^-j
    std::vector<double> h;
    std::vector<double> quotient;  // max |E(theta + h) - E(theta)| / h
    double holder = 1.0;      // fitted exponent in [0, 1]
    double lipschitz_bound = 0.0;  // 2 pi sum |k| w(k), +inf when divergent
    bool unbounded = false;
    std::string verdict;
};

RegularityProbe regularity_probe(const CrystalSpec& spec, const std::vector<int>& scales);

std::string histogram_csv(const OccupationHistogram& h);
std::string probe_csv(const RegularityProbe& p);

}  // namespace crystal
