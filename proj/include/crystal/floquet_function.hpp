#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crystal/spec.hpp"

namespace crystal {

// A real even function on the circle, given in closed form, by its Fourier
// coefficients, or both.
struct FloquetFunctionSpec {
    enum class Kind { ClosedForm, Coefficients };

    Kind kind = Kind::ClosedForm;
    int d = 1;
    std::string name;

    std::function<double(double)> value;       // on [0, 1)
    std::function<double(double)> derivative;  // almost everywhere
    std::vector<double> kinks;                 // breakpoints in [0, 1)

    // Exact coefficients when known: mean = f^(0), coef(k) = f^(k) for k >= 1.
    std::optional<double> mean;
    std::function<double(std::int64_t)> coef;
    // Exact closed form of coef(k) for k > tail_from.
    std::vector<TailRule> tails;
    std::int64_t tail_from = 0;
    std::int64_t support = -1;  // coef(k) = 0 for k > support; -1 if unbounded

    bool has_coefficients() const { return static_cast<bool>(coef) && mean.has_value(); }
    double operator()(double theta) const;
};

FloquetFunctionSpec function_a();          // (theta - 1/2)^2
FloquetFunctionSpec function_b();          // |1/2 - theta|
FloquetFunctionSpec function_c();          // tent of height 1/4 on |theta| <= 1/4
FloquetFunctionSpec indicator(double eps); // 1 on [1/2 - eps, 1/2 + eps]
FloquetFunctionSpec constant(double v);
// Finite Fourier series Q + 2 sum_k w[k-1] cos(2 pi k theta).
FloquetFunctionSpec trigonometric(double Q, std::vector<double> w, std::string name = "trig");

enum class CombineOp { Convolution, Product, ScaleShift };

FloquetFunctionSpec convolve(const FloquetFunctionSpec& f, const FloquetFunctionSpec& g);
FloquetFunctionSpec multiply(const FloquetFunctionSpec& f, const FloquetFunctionSpec& g);
FloquetFunctionSpec scale_shift(const FloquetFunctionSpec& f, double scale, double shift);
// ScaleShift reads (scale, shift) from params and ignores g.
FloquetFunctionSpec combine(CombineOp op, const FloquetFunctionSpec& f, const FloquetFunctionSpec& g,
                            std::pair<double, double> params = {1.0, 0.0});

struct CoefficientResult {
    std::vector<double> coef;  // f^(0..ncoef)
    std::int64_t grid = 0;     // final trapezoid size
    double change = 0.0;       // last Richardson change
};

// Trapezoid rule on kink-aligned grids 2^m with Richardson extrapolation,
// doubling until successive extrapolants differ by less than tol.
CoefficientResult compute_coefficients(const std::function<double(double)>& f, std::int64_t ncoef,
                                       double tol = 1e-13);

// nu = 1 crystal with w(k) = f^(k) for k != 0 and Q = f^(0).
CrystalSpec from_floquet_function(const FloquetFunctionSpec& f, std::int64_t ncoef, double tol = 1e-12);

// Weight family (k != 0 part) for a function with exact or computed coefficients.
WeightFamily coefficient_family(const FloquetFunctionSpec& f, std::int64_t ncoef, double& mean,
                                double tol = 1e-12);

}  // namespace crystal
