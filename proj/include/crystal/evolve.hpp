#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "crystal/spec.hpp"

namespace crystal {

using State = std::map<std::int64_t, std::complex<double>>;

struct WaveField {
    double t = 0.0;
    std::int64_t M = 0;
    std::vector<std::complex<double>> amp;  // amp[m + M] for |m| <= M
    double captured_mass = 0.0;
    std::int64_t resolution = 0;  // FFT size of the returned field
    bool converged = true;
    double change = 0.0;     // l2 distance to the previous resolution on the window
    double edge_mass = 0.0;  // grid mass at N/4 < |m| <= N/2

    std::complex<double> at(std::int64_t m) const {
        return m < -M || m > M ? std::complex<double>(0.0) : amp[static_cast<size_t>(m + M)];
    }
    double supnorm() const;
};

struct PropagateOptions {
    std::int64_t N0 = 0;
    double oversample = 2.0;
    std::int64_t Ncap = std::int64_t{1} << 22;
    bool fixed = false;  // single resolution max(N0, ...) without refinement
};

// e^{-itH} on a d = 1, nu = 1 crystal through the Floquet symbol. Keeps the
// sampled symbol per resolution, so repeated calls share the work.
class Propagator {
public:
    explicit Propagator(const CrystalSpec& spec);

    WaveField run(double t, std::int64_t M, double eps = 1e-10, PropagateOptions opts = {},
                  const State& initial = {{0, 1.0}});
    const std::vector<double>& symbol_grid(std::int64_t N);
    const CrystalSpec& spec() const { return spec_; }

private:
    WaveField at_resolution(double t, std::int64_t M, std::int64_t N, const State& initial,
                            std::vector<std::complex<double>>* full);

    CrystalSpec spec_;
    std::map<std::int64_t, std::vector<double>> cache_;
    std::mutex mutex_;
};

WaveField propagate(const CrystalSpec& spec, double t, std::int64_t M, double eps = 1e-10,
                    PropagateOptions opts = {}, const State& initial = {{0, 1.0}});

// Exact amplitude (e^{-itH} delta_0)(m) for graph_b and graph_c.
std::complex<double> closed_form_oracle(const std::string& name, double t, std::int64_t m);

struct TraceSample {
    double t = 0.0;
    double supnorm = 0.0;
    double origin_abs = 0.0;
    std::vector<std::int64_t> peaks;  // argmax locations
    double captured_mass = 0.0;
};

std::vector<TraceSample> dispersion_trace(const CrystalSpec& spec, const std::vector<double>& times, std::int64_t M,
                                          double eps = 1e-10);

// |(e^{-itH} delta_0)(0)| = |mean of e^{-ith}| by trapezoid doubling.
double origin_amplitude(const CrystalSpec& spec, double t, double eps = 1e-9);

struct PowerLawFit {
    double slope = 0.0, intercept = 0.0, stderr_slope = 0.0, ci_lo = 0.0, ci_hi = 0.0;
    std::vector<double> t, value;
};

// Log-log slope of the envelope of |psi_t(0)|; the envelope is the RMS over
// 8 times spanning four periods 2 pi / W of the band width W.
PowerLawFit power_dispersion_probe(const CrystalSpec& spec, const std::vector<double>& times);

std::vector<double> geometric_times(double t0, double t1, int count);

std::string field_csv(const WaveField& f);
std::string trace_csv(const std::vector<TraceSample>& trace);

}  // namespace crystal
