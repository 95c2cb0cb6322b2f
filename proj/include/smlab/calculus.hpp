#pragma once

#include "smlab/operator.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace smlab {

using Symbol = std::function<double(double)>;

// Σ_m m(λ_m)⟨f,v_m⟩v_m. Throws when m is not finite at some eigenvalue.
Field apply_multiplier(const SpectralOperator& op, const Symbol& m, const Field& f);
Eigen::MatrixXd apply_multiplier(const SpectralOperator& op, const Symbol& m, const Eigen::MatrixXd& F);
// Same, starting from eigen-coefficients (rows = modes).
Eigen::MatrixXd apply_to_coefficients(const SpectralOperator& op, const Field& symbol_values,
                                      const Eigen::MatrixXd& C);
Field symbol_values(const SpectralOperator& op, const Symbol& m);

// (1 − λ/R²)₊^δ; for δ = 0 the cut is sharp with value 0 at λ = R².
double bochner_riesz_symbol(double lambda, double R, double delta);
Field bochner_riesz(const SpectralOperator& op, double R, double delta, const Field& f);

// ψ = −b''/Z with b(t) = exp(−1/(1−t²)) on (−1,1): even, supported in [−1,1],
// ∫ψ = 0. Z makes ∫₀^∞ |Ψ(s)|² ds/s = 1. Ψ is tabulated once from a cosine
// transform and interpolated.
class SquareFunctionConfig {
public:
    explicit SquareFunctionConfig(double lambda_exp = 1.5, double dimension = 1.0, int points_per_block = 16);

    double lambda_exp() const { return lambda_exp_; }
    double dimension() const { return dimension_; }
    int points_per_block() const { return per_block_; }

    static double psi(double t);
    static double Psi(double xi);
    static double psi_integral();         // ∫ψ, by quadrature
    static double calderon_constant();    // ∫₀^∞ |Ψ(s)|² ds/s, by quadrature on the table
    static double Psi_argmax();

    // Scales t with t² inside the diffusion window.
    std::pair<int, int> window_blocks(const SpectralOperator& op) const;
    // Blocks whose union carries every eigenvalue's Ψ-profile (for the vertical identity).
    std::pair<int, int> spectral_blocks(const SpectralOperator& op) const;
    LogGrid block_grid(int j) const;

private:
    double lambda_exp_, dimension_;
    int per_block_;
};

// U_j f(x) for one dyadic block of scales [2^{−j−1}, 2^{−j}].
Field lp_piece(const SpectralOperator& op, const SquareFunctionConfig& cfg, int j, const Field& f);
// (Σ_j U_j²)^{1/2} over the given blocks (default: the diffusion window).
Field g_function(const SpectralOperator& op, const SquareFunctionConfig& cfg, const Field& f);
Field g_function(const SpectralOperator& op, const SquareFunctionConfig& cfg, const Field& f, int j_lo, int j_hi);
// ‖(∫|Ψ(t√L)f|² dt/t)^{1/2}‖²_{L²(dμ)} over the blocks j_lo..j_hi.
double vertical_square_norm(const SpectralOperator& op, const SquareFunctionConfig& cfg, const Field& f, int j_lo,
                            int j_hi);

// Stein square function with c_δ = 1; the L² constant is then C_δ² = (δ+1)/(2δ+1),
// which equals 1 at δ = 0.
double stein_constant_sq(double delta);
LogGrid stein_r_grid(const SpectralOperator& op, int per_octave = 128);
Field stein_square(const SpectralOperator& op, double delta, const Field& f, const LogGrid& R_grid);
Eigen::MatrixXd stein_square(const SpectralOperator& op, double delta, const Eigen::MatrixXd& F,
                             const LogGrid& R_grid);
// R∂_R (1 − λ/R²)₊^{δ+1}
double stein_integrand_symbol(double lambda, double R, double delta);

struct PlancherelRow {
    double R = 0.0, y = 0.0;
    double lhs = 0.0;
    double ratio_q2 = 0.0, ratio_qinf = 0.0;
};
struct PlancherelReport {
    std::vector<PlancherelRow> rows;
    double sup_q2 = 0.0, sup_qinf = 0.0;
};
// Test symbol m(s) = profile(s/R) with support in [0,R]; default profile (1−u²)₊.
PlancherelReport plancherel_probe(const SpectralOperator& op, const std::vector<double>& R_sweep,
                                  const std::function<double(double)>& profile = {});

struct FieldPair {
    Field lhs, rhs;
};
FieldPair pointwise_control_probe(const SpectralOperator& op, const SquareFunctionConfig& cfg, const Symbol& m,
                                  const Field& f, double t, int k_power, double s0);

}  // namespace smlab
