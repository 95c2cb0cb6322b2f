#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace smlab {

// Node-indexed values on a grid. Everything in the library speaks in these.
using Field = Eigen::VectorXd;

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int count = 0;
};

// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

std::vector<double> geomspace(double lo, double hi, int count);
std::vector<double> linspace(double lo, double hi, int count);

// Geometric grid with a fixed number of points per octave, midpoints in log scale,
// plus the matching d(t)/t quadrature weight.
struct LogGrid {
    std::vector<double> points;
    double log_weight = 0.0;
};
LogGrid log_grid(double lo, double hi, int per_octave);

// Linear-interpolated percentile, q in [0,1].
double percentile(std::vector<double> values, double q);

double mean(std::span<const double> v);
double coefficient_of_variation(std::span<const double> v);

// Shortest round-trip decimal, independent of the global locale.
std::string format_number(double v);

// Zeroes entries below 1e-150 in magnitude. Spectral factors such as e^{−tλ} otherwise
// underflow into subnormals, and a GEMM over subnormals runs a hundred times slower.
Field flush_negligible(Field v);

// splitmix64: small, well-mixed, and trivially reproducible from a seed.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace smlab
