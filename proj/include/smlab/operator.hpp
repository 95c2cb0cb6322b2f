#pragma once

#include "smlab/numeric.hpp"
#include "smlab/space.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace smlab {

enum class OperatorKind { free_laplacian, dirichlet_laplacian, bessel, inv_square };

struct OperatorSpec {
    OperatorKind kind = OperatorKind::free_laplacian;
    double alpha = 0.0;  // Bessel drift exponent
    double n = 3.0;      // ambient dimension of the radial inverse-square operator
    double gamma = 0.0;  // inverse-square coupling

    static OperatorSpec free_laplacian() { return {OperatorKind::free_laplacian}; }
    static OperatorSpec dirichlet_laplacian() { return {OperatorKind::dirichlet_laplacian}; }
    static OperatorSpec bessel(double alpha) { return {OperatorKind::bessel, alpha}; }
    static OperatorSpec inv_square(double n, double gamma) { return {OperatorKind::inv_square, 0.0, n, gamma}; }

    std::string name() const;
    nlohmann::json to_json() const;
    static OperatorSpec from_json(const nlohmann::json& j);
    static OperatorSpec parse(const std::string& text);  // "bessel:2", "inv_square:3:2", ...
};

// Exponent of the explicit harmonic profile |x|^τ of −Δ + γ|x|⁻² in dimension n.
double inverse_square_tau(double n, double gamma);

// Discretized operator with its full eigendecomposition. Eigenvectors are the
// columns of `eigenvectors()` and are orthonormal for ⟨f,g⟩ = Σ f_i g_i w_i Δx.
class SpectralOperator {
public:
    const WeightedGrid& grid() const { return grid_; }
    const OperatorSpec& spec() const { return spec_; }
    int size() const { return grid_.size(); }
    const Field& eigenvalues() const { return lambda_; }
    const Eigen::MatrixXd& eigenvectors() const { return V_; }
    double lambda_min() const { return lambda_[0]; }
    double lambda_max() const { return lambda_[lambda_.size() - 1]; }

    // c_m = ⟨f, v_m⟩
    Field coefficients(const Field& f) const;
    Eigen::MatrixXd coefficients(const Eigen::MatrixXd& F) const;
    // Σ c_m v_m
    Field synthesize(const Field& c) const { return V_ * c; }

    // The finite-difference matrix itself, applied without the eigenbasis.
    Field apply_generator(const Field& f) const;
    Eigen::MatrixXd matrix() const;
    // Diffusion window [4Δx², (x_max/8)²].
    double t_min() const;
    double t_max() const;

    friend std::shared_ptr<const SpectralOperator> assemble(const OperatorSpec& spec, const WeightedGrid& grid);

private:
    WeightedGrid grid_;
    OperatorSpec spec_;
    Field diag_, upper_, lower_;  // tridiagonal A: lower_[i] = A(i+1,i), upper_[i] = A(i,i+1)
    Field lambda_;
    Eigen::MatrixXd V_;
    Eigen::MatrixXd VtW_;  // V^T diag(w), so that coefficients are one product
};

using OperatorPtr = std::shared_ptr<const SpectralOperator>;

OperatorPtr assemble(const OperatorSpec& spec, const WeightedGrid& grid);

// Heat kernel against dμ: (e^{−tL}f)(x_i) = Σ_j K(t)_{ij} f_j w_j.
class HeatKernelField {
public:
    explicit HeatKernelField(OperatorPtr op) : op_(std::move(op)) {}
    const SpectralOperator& op() const { return *op_; }
    OperatorPtr op_ptr() const { return op_; }

    Eigen::MatrixXd kernel(double t) const;
    Field row(double t, int i) const;
    Field apply(double t, const Field& f) const;

private:
    OperatorPtr op_;
};

HeatKernelField heat_kernel(OperatorPtr op);

// Doob transform by a positive weight h: 𝒯_t = T_t/(h⊗h) on ν = h²μ.
class DoobFrame {
public:
    const SpectralOperator& op() const { return field_.op(); }
    const HeatKernelField& field() const { return field_; }
    const Field& h() const { return h_; }
    const Field& nu_density() const { return nu_density_; }
    const Measure& nu() const { return nu_; }

    // Rows of 𝒯_t and of 𝒦_t (the kernel of t𝓛e^{−t𝓛}), both against dν.
    Field transformed_row(double t, int i) const;
    Field k_row(double t, int i) const;
    // 𝒯_t g = h⁻¹ e^{−tL}(h g) and 𝒦_t g likewise.
    Field apply_transformed(double t, const Field& g) const;
    Field apply_k(double t, const Field& g) const;
    // ∫𝒯_t(x,·)dν at every node.
    Field conservation(double t) const;

    friend DoobFrame doob_transform(const HeatKernelField& field, const Field& h);

private:
    explicit DoobFrame(HeatKernelField field) : field_(std::move(field)) {}
    HeatKernelField field_;
    Field h_, nu_density_;
    Measure nu_;
};

DoobFrame doob_transform(const HeatKernelField& field, const Field& h);

// Nodes far enough from every absorbing boundary (and from the first cell) at time t.
std::vector<int> interior_nodes(const WeightedGrid& grid, double t, double origin_margin_sqrt_t = 0.0,
                                double far_margin_sqrt_t = 6.0);

double harmonicity_residual(const HeatKernelField& field, const Field& h, double t);
double harmonicity_residual(const HeatKernelField& field, const Field& h, double t,
                            const std::vector<int>& nodes);

struct GaussianSample {
    double t = 0.0, x = 0.0, y = 0.0;
    double s = 0.0;      // d(x,y)²/t
    double value = 0.0;  // log(kernel · ν(B(x,√t)))
};

struct GaussianFitOptions {
    std::vector<double> times;   // empty: a sweep across the diffusion window
    double mask_sqrt_t = 6.0;    // ignore |x−y| > mask·√t
    double far_margin_sqrt_t = 6.0;
    double max_condition = 1e3;  // C₁·C₂ above this means the two-sided bound is not uniform
};

struct GaussianFitReport {
    bool upper_ok = false, lower_ok = false;
    double C2 = 0.0, c2 = 0.0, C1 = 0.0, c1 = 0.0;
    double upper_rms = 0.0, lower_rms = 0.0;
    int masked = 0;
    std::string mask;
    std::string failure;
    std::vector<GaussianSample> samples;

    nlohmann::json to_json() const;
    std::string residual_csv() const;
};

// h = nullptr fits the raw kernel against μ-balls.
GaussianFitReport fit_gaussian_bounds(const HeatKernelField& field, const Field* h = nullptr,
                                      const GaussianFitOptions& opt = {});

struct HolderReport {
    bool ok = false;
    double gamma = 0.0;
    double r2 = 0.0;
    std::string failure;
    std::vector<double> log_ratio, log_scaled;
};

// Regresses the normalised kernel increment against d(y,z)/√t.
HolderReport holder_probe(const DoobFrame& frame, double t, double envelope_c = 8.0);
// Normalised increment for one triple; exactly 0 when y = z.
double kernel_increment(const DoobFrame& frame, double t, int x, int y, int z);

}  // namespace smlab
