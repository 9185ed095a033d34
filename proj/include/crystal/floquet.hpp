#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "crystal/spec.hpp"

namespace crystal {

// H(theta)_ij = sum_k w_ij(k) e^{2 pi i theta.k} + delta_ij Q_i, with the
// neglected tail below eps. err receives the certified truncation bound.
Eigen::MatrixXcd floquet_matrix(const CrystalSpec& spec, const std::vector<double>& theta, double eps = 1e-12,
                                double* err = nullptr);

// Off-diagonal part a_ij(theta) without the potential.
Eigen::MatrixXcd adjacency_symbol(const CrystalSpec& spec, const std::vector<double>& theta, double eps = 1e-12,
                                  double* err = nullptr);

struct BandGrid {
    std::shared_ptr<const CrystalSpec> spec;
    int d = 1;
    int nu = 1;
    std::int64_t N = 0;
    double eps = 0.0;
    double truncation_error = 0.0;         // bound on |H - H_sampled| entrywise sum
    std::vector<double> eigenvalues;       // point-major, nu per point, ascending
    std::vector<Eigen::MatrixXcd> vectors; // optional, columns match eigenvalues

    std::int64_t points() const { return static_cast<std::int64_t>(eigenvalues.size()) / nu; }
    double E(std::int64_t point, int band) const { return eigenvalues[static_cast<size_t>(point * nu + band)]; }
    std::vector<double> theta(std::int64_t point) const;
    std::int64_t neighbor(std::int64_t point, int axis, int step) const;
};

struct SampleOptions {
    int threads = 0;
    bool store_vectors = false;
};

BandGrid sample_bands(const CrystalSpec& spec, std::int64_t N, double eps = 1e-12, SampleOptions opts = {});

// Values of the (i, j) entry of H on the whole grid, by coefficient folding
// and one FFT, or through the symbol when the tails are fitted.
std::vector<std::complex<double>> entry_grid(const CrystalSpec& spec, int i, int j, std::int64_t N, double eps,
                                             double* err = nullptr);

struct FlatSegment {
    double value = 0.0;
    double measure = 0.0;  // fraction of grid points
    int band = 0;          // band attaining the value most often
    std::vector<double> witness_lo, witness_hi;  // first and last theta of the set along axis 0 order
};

struct BandInfo {
    double min = 0.0, max = 0.0, error = 0.0;
    std::string kind;      // "flat", "partly flat" or "non-flat"
    double flat_fraction = 0.0;
};

struct BandReport {
    std::vector<BandInfo> bands;
    std::vector<FlatSegment> flats;
    std::vector<std::pair<double, double>> spectrum;  // merged band intervals
    double tol_flat = 0.0;
    double min_measure = 0.0;
};

// tol_flat <= 0 selects 1e-9 times the spectral width.
BandReport detect_flat_bands(const BandGrid& grid, double tol_flat = 0.0, double min_measure = 1e-3);

struct QuotientMatrix {
    Eigen::MatrixXd A;
    Eigen::MatrixXd error;
    bool irreducible = false;
    std::vector<int> component;
    std::string witness;
};

QuotientMatrix quotient_matrix(const CrystalSpec& spec);

struct DirichletCheck {
    double lhs = 0.0, rhs = 0.0, diff = 0.0, error = 0.0;
};

// <f, (D - A(theta)) f> against the edge sum 1/2 sum w |f_i - e^{2 pi i theta.k} f_j|^2.
DirichletCheck dirichlet_form_check(const CrystalSpec& spec, const std::vector<double>& theta,
                                    const Eigen::VectorXcd& f, double eps = 1e-12);

struct TopBandVerdict {
    double oscillation = 0.0;
    double threshold = 0.0;
    bool passed = false;
    bool skipped = false;
    std::string note;
};

TopBandVerdict top_band_flatness(const BandGrid& grid, double tol_flat = 0.0);

std::string bands_csv(const BandGrid& grid);

}  // namespace crystal
