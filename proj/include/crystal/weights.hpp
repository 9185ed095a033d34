#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

namespace crystal {

using Index = std::vector<std::int64_t>;

struct Certified {
    double value = 0.0;
    double error = 0.0;
};

// Closed-form tail w(n) = c * n^-p * log2(2n)^-q on the positive integers
// selected by the pattern. For d = 1 the rule is applied to |k|, for d > 1
// to |k|_2 (pattern All only).
struct TailRule {
    enum class Pattern { All, Odd, Progression, Dyadic };

    Pattern pattern = Pattern::All;
    double c = 0.0;
    double p = 2.0;
    double q = 0.0;
    std::int64_t a = 0;  // progression residue
    std::int64_t b = 1;  // progression modulus

    bool matches(std::int64_t n) const;
    double formula(double r) const;
    std::int64_t step() const;
    // Smallest matching n > N (N >= 0); -1 when it does not fit.
    std::int64_t first_above(std::int64_t N) const;
    // sum over matching n > N of n^s * w(n)^e; +inf when divergent.
    double moment_above(std::int64_t N, double s, double e) const;
    bool summable() const;
    bool operator==(const TailRule& o) const = default;
};

const char* pattern_name(TailRule::Pattern p);

class WeightFamily {
public:
    int d = 1;
    std::map<Index, double> entries;
    std::vector<TailRule> tails;
    std::int64_t K0 = 0;

    double at(const Index& k) const;
    bool has_tail() const { return !tails.empty(); }
    bool is_zero() const;

    Certified total() const;
    // Certified upper bound on the sum of w(k) over |k|_inf > N.
    double tail_bound(std::int64_t N) const;
    // sum_k |k|^s w(k)^e for d = 1, with the tail in closed form.
    Certified moment(double s, double e) const;
    // sum_k w(k) e^{2 pi i theta.k}, error bar on the neglected tail.
    std::complex<double> fourier(const std::vector<double>& theta, double eps,
                                 double* err = nullptr) const;
    // Same sum at every point m/N of the torus grid (row-major, axis 0
    // slowest). Coefficients are folded modulo N first, so the grid values
    // carry no aliasing error beyond the tail summation itself.
    std::vector<std::complex<double>> fourier_grid(std::int64_t N, double eps,
                                                   double* err = nullptr) const;
    // A finite set of support vectors generating the same subgroup of Z^d as
    // the full support.
    std::vector<Index> generators() const;
    // Reflected family k -> -k.
    WeightFamily reflected() const;
};

double hurwitz_zeta(double s, double q);
std::int64_t linf(const Index& k);

}  // namespace crystal
