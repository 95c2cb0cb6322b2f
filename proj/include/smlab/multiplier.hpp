#pragma once

#include "smlab/symbols.hpp"

#include <nlohmann/json.hpp>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace smlab {

// exp(−1/(1−u²)) with u = log₂λ, rescaled to peak 1: smooth, supported in [1/2, 2].
double phi_window(double lambda);

enum class SobolevExponent { two, infinity };

struct SobolevOptions {
    int samples = 1 << 14;  // on [1/2, 2]
    int padding = 4;        // zero-padding factor before the transform
    // The largest jump between neighbouring samples, relative to the peak, that
    // still counts as resolved.
    double max_step = 0.05;
};

// ‖φ·m(2^k ·)‖ in W²_s (Fourier weight (1+ξ²)^{s/2}) or, for q = ∞, the sup over
// derivatives of order ≤ ⌈s⌉ (spectral derivatives; a surrogate for W^∞_s).
// k may be fractional: the dilation is 2^k. Throws std::runtime_error when the
// samples do not resolve the symbol.
double sobolev_norm(const ComplexSymbol& m, double k, SobolevExponent q, double s, const SobolevOptions& opt = {});

// Sorted descending.
std::vector<double> rearrange(std::vector<double> omega);

// ω*(0) + Σ_{2≤ℓ<L} ω*(ℓ)/(ℓ√(log ℓ)), L = min(L_max, size).
double series_partial_sum(const std::vector<double>& omega_star, std::size_t L_max);

enum class SeriesVerdict { converges, diverges, inconclusive };
std::string to_string(SeriesVerdict v);

struct SeriesReport {
    double value = 0.0;       // partial sum over the whole window
    double half_value = 0.0;  // same over the first half (the K → 2K Cauchy test)
    double cauchy = 0.0;      // value − half_value
    double beta = 0.0;        // fitted ω*(ℓ) ≈ C (log ℓ)^{−β} on the upper tail
    double tail_bound = 0.0;  // integral-comparison bound on the remaining tail (∞ when β ≤ 1/2)
    double fit_r2 = 0.0;
    bool finite_support = false;
    std::size_t window = 0;
    SeriesVerdict verdict = SeriesVerdict::inconclusive;

    nlohmann::json to_json() const;
};

struct SeriesOptions {
    double cauchy_tol = 0.03;
    double beta_converge = 0.55;  // the terms behave like (log ℓ)^{−β−1/2}/ℓ
    double beta_diverge = 0.5;
};

SeriesReport series_criterion(const std::vector<double>& omega_star, const SeriesOptions& opt = {});

// ω*(ℓ) = (1 + log(1+ℓ))^{−(1+ε)/2} for ℓ < L.
std::vector<double> power_log_profile(double eps, std::size_t L);

struct MultiplierProfile {
    std::string name;
    std::optional<NamedSymbol> symbol;  // absent for profiles built straight from ω
    double m0 = 0.0;
    int k_lo = 0, k_hi = 0;
    SobolevExponent q = SobolevExponent::two;
    double s = 0.0;
    std::vector<double> omega;       // ω(k) for k = k_lo..k_hi
    std::vector<double> omega_star;

    static MultiplierProfile from_symbol(const NamedSymbol& sym, int k_lo, int k_hi, SobolevExponent q, double s,
                                         const SobolevOptions& opt = {});
    static MultiplierProfile from_omega(std::string name, std::vector<double> omega, int k_lo, double s,
                                        SobolevExponent q = SobolevExponent::two, double m0 = 0.0);

    double omega_at(int k) const { return omega.at(static_cast<std::size_t>(k - k_lo)); }
    double sup_omega() const { return omega_star.empty() ? 0.0 : omega_star.front(); }
    std::size_t window() const { return omega.size(); }

    nlohmann::json to_json() const;
};

struct HypothesisCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct TheoremVerdict {
    std::string theorem;
    bool pass = false;
    std::vector<HypothesisCheck> checks;
};

struct TheoremChecklist {
    double n = 1.0, q = 2.0, r = 1.5, p = 2.0;
    std::vector<TheoremVerdict> theorems;

    const TheoremVerdict& get(const std::string& theorem) const;
    nlohmann::json to_json() const;
};

// n: doubling dimension; q: Plancherel exponent; r, p as in the maximal theorems.
// Throws std::invalid_argument outside 1 ≤ r < 2, p > 1, q ≥ 2.
TheoremChecklist theorem_conditions(const MultiplierProfile& profile, double n, double q, double r, double p);

// Share of Σω² carried by the outer half of the window; small means summable.
double square_sum_tail_share(const std::vector<double>& omega);

struct DilationComparison {
    double sup_dyadic = 0.0;      // max_k ω(k)
    double sup_continuous = 0.0;  // max over t = 2^{k + j/per_octave}
    double ratio = 0.0;
};
DilationComparison dilation_sup_ratio(const ComplexSymbol& m, int k_lo, int k_hi, SobolevExponent q, double s,
                                      int per_octave = 16);

// log Γ(z) for complex z (Lanczos, with reflection).
std::complex<double> complex_lgamma(std::complex<double> z);

// u = log s grid carrying the Mellin-side computation.
struct LogAxis {
    double u_lo = -40.0, u_hi = 12.0;
    int n = 1 << 16;
    double step() const { return (u_hi - u_lo) / n; }
};

// F(s) = s^{μ+1}(m(s)/s)^{(μ)} sampled on the log axis, via the Mellin multiplier
// Γ(1+μ−iτ)/Γ(1−iτ) of the right-sided fractional derivative.
struct FractionalDerivative {
    double mu = 0.0;
    LogAxis axis;
    std::vector<std::complex<double>> F;
    bool decays = true;  // symbol small at both ends of the axis
    double edge_level = 0.0;

    std::complex<double> at(double s) const;  // cubic interpolation in log s
};
FractionalDerivative fractional_derivative(const ComplexSymbol& m, double mu, const LogAxis& axis = {});

struct CarberyNorm {
    double norm = 0.0;
    bool decays = true;
};
// (∫₀^∞ |s^{μ+1}(m(s)/s)^{(μ)}|² ds/s)^{1/2}
CarberyNorm carbery_norm(const ComplexSymbol& m, double mu, const LogAxis& axis = {});

// λ ∫_λ^∞ (s−λ)^{μ−1} F(s) s^{−μ−1} ds, i.e. the reconstruction without C_μ.
double reconstruction_integral(const FractionalDerivative& d, double lambda);
// C_μ · reconstruction_integral for a real symbol.
double reconstruct(const FractionalDerivative& d, double c_mu, double lambda);

struct CMuCalibration {
    double mu = 0.0;
    double c_mu = 0.0;
    double theory = 0.0;  // 1/Γ(μ)
    double fit_residual = 0.0;
    std::string reference;
};
// Least-squares C_μ on a reference log-Gaussian bump.
CMuCalibration calibrate_c_mu(double mu, const LogAxis& axis = {});

// Σ_k ‖φm(2^k·)‖²_{W²_μ} over the window, which bounds the squared Carbery norm.
double carbery_dyadic_sum(const ComplexSymbol& m, double mu, int k_lo, int k_hi);

struct FjBand {
    int j = 0;
    double upper = 0.0, lower = 0.0;  // lower < ω(k) ≤ upper
    std::vector<int> members;         // k values
    std::size_t bound = 0;            // cardinality bound
};
// F_0 = {ω*(4) < ω ≤ ω*(0)}, F_1 = ∅, F_j = {ω*(2^{2^j}) < ω ≤ ω*(2^{2^{j−1}})} for j ≥ 2,
// with ω*(ℓ) = 0 past the window.
std::vector<FjBand> build_fj_partition(const MultiplierProfile& profile);

struct TilingViolations {
    long disjointness = 0, coverage = 0, placement = 0;
    long total() const { return disjointness + coverage + placement; }
};

struct TilingSet {
    int N = 0;
    std::vector<long> F;
    long period = 0;  // 4^{N+1}
    long i_lo = 0;    // b[0] belongs to index i_lo
    std::vector<long> b;
    long window_lo = 0, window_hi = 0;

    TilingViolations verify() const;
    nlohmann::json to_json() const;
};

// b_i = i·4^{N+1} + smallest nonnegative offset keeping the translates disjoint.
TilingSet tile(int N, std::vector<long> F, long window_lo, long window_hi);

}  // namespace smlab
