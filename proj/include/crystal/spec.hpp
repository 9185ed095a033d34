#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crystal/error.hpp"
#include "crystal/weights.hpp"

namespace crystal {

// Closed-form Floquet data attached by constructors that know it exactly.
struct Symbol {
    std::function<double(std::span<const double>)> value;                       // nu = 1
    std::function<void(std::span<const double>, std::span<double>)> gradient;   // nu = 1, a.e.
    std::function<Eigen::MatrixXcd(std::span<const double>)> matrix;            // nu > 1
};

struct CrystalSpec {
    int d = 1;
    int nu = 1;
    std::vector<double> Q;
    std::vector<WeightFamily> weights;  // nu * nu, row-major
    std::string label;
    std::shared_ptr<const Symbol> symbol;
    // Tails fitted from computed coefficients rather than known exactly; grid
    // evaluation then goes through the symbol.
    bool fitted_tails = false;

    const WeightFamily& w(int i, int j) const { return weights[static_cast<size_t>(i * nu + j)]; }
    WeightFamily& w(int i, int j) { return weights[static_cast<size_t>(i * nu + j)]; }
};

CrystalSpec make_spec(int d, int nu, std::string label);

struct Check {
    std::string name;
    bool passed = true;
    std::string detail;
    ErrorCode code = ErrorCode::InvalidArgument;
};

struct ValidationReport {
    std::vector<Check> checks;
    std::vector<Certified> family_sums;  // nu * nu
    bool ok() const;
    // Throws the typed error of the first failing check.
    void raise() const;
};

ValidationReport validate(const CrystalSpec& spec, double tol = 1e-12);
void ensure_valid(const CrystalSpec& spec, double tol = 1e-12);

struct ConnectivityReport {
    bool connected = false;
    bool quotient_connected = false;
    std::int64_t index = 0;           // index of the generated sublattice, 0 if rank deficient
    std::vector<int> component;       // quotient component label per cell vertex
    std::string witness;
};

ConnectivityReport check_connected(const CrystalSpec& spec);

// Index of the subgroup of Z^d generated by the given vectors (0 if rank < d).
std::int64_t lattice_index(const std::vector<Index>& generators, int d);

// Operator norm bound: max_i sum_j ||w_ij||_1 + ||Q||_inf.
double norm_bound(const CrystalSpec& spec);

CrystalSpec parse_spec_json(const std::string& text);
std::string spec_to_json(const CrystalSpec& spec);
// "builtin:<name>" or a path to a JSON file.
CrystalSpec load_spec(const std::string& source);

}  // namespace crystal
