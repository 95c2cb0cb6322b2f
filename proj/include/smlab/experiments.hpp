#pragma once

#include "smlab/calculus.hpp"
#include "smlab/martingale.hpp"
#include "smlab/multiplier.hpp"
#include "smlab/operator.hpp"
#include "smlab/symbols.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace smlab {

// Rademacher signs r_i(s), a pure function of (base_seed, i, s).
class SignSampler {
public:
    explicit SignSampler(std::uint64_t base_seed) : base_(base_seed) {}
    std::uint64_t base_seed() const { return base_; }
    int draw(std::uint64_t i, std::uint64_t s) const;

private:
    std::uint64_t base_;
};

// t = 2^{j/per_octave} spanning [2^{−pad}/λ_max, 2^{pad}/λ_min].
std::vector<double> dilation_grid(const SpectralOperator& op, int per_octave = 32, double pad_octaves = 0.0);
// t = 2^k for the integers k in the same span.
std::vector<double> dyadic_grid(const SpectralOperator& op, double pad_octaves = 0.0);

// sup over the grid of |m(tL)f| at every node (columns of F are independent functions).
Eigen::MatrixXd maximal_single(const SpectralOperator& op, const Symbol& m, const Eigen::MatrixXd& F,
                               const std::vector<double>& t_grid);
Field maximal_single(const SpectralOperator& op, const Symbol& m, const Field& f, const std::vector<double>& t_grid);
Field maximal_dyadic(const SpectralOperator& op, const Symbol& m, const Field& f, double pad_octaves = 0.0);

// sup_i |m_i(L)f|
Field maximal_family(const SpectralOperator& op, const std::vector<Symbol>& ms, const Field& f);

// ‖g‖_{L^p} against node cell weights.
double lp_norm(const Field& g, const Field& cell, double p);

// 48 functions with seeded Gaussian eigencoefficients and 16 localized bumps (by default).
Eigen::MatrixXd test_family(const SpectralOperator& op, std::uint64_t seed, int gaussians = 48, int bumps = 16);

// Random symbols Σ_k φ-windowed trigonometric sums in log₂λ − k, with coefficient
// envelope (1+ξ²)^{−s/2−1/2}, post-scaled so that sup_k ‖φm(2^k·)‖_{W²_s} = 1.
class RandomSymbolGenerator {
public:
    RandomSymbolGenerator(double s, int k_lo, int k_hi, std::uint64_t base_seed, int modes = 8);
    NamedSymbol make(int index) const;
    // Before normalisation, for the report.
    double raw_sup(int index) const;

private:
    NamedSymbol raw(int index) const;
    double s_;
    int k_lo_, k_hi_, modes_;
    std::uint64_t seed_;
};

struct GrowthOptions {
    std::vector<int> N_ladder{1, 2, 4, 8, 16, 32, 64, 128, 256};
    double p = 4.0;
    double s = 1.5;
    std::uint64_t base_seed = 1;
    int gaussians = 48, bumps = 16;
};

struct GrowthRung {
    int N = 0;
    double A = 0.0;
    double normalized = 0.0;  // A / √log(1+N)
    double eps_N = 0.0;       // 1/√log(1+N)
    double bookkeeping = 0.0;  // N·exp(−1/ε_N²)
    double closed_form = 0.0;  // N/(1+N)
};

struct GrowthReport {
    std::vector<GrowthRung> rungs;
    LineFit fit;               // A against √log(1+N)
    bool monotone = true;
    double last_three_spread = 0.0;  // (max − min)/min of the last three normalized rungs
    std::vector<double> member_scale;  // normalisation applied to each random symbol

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

GrowthReport growth_experiment(const SpectralOperator& op, const GrowthOptions& opt);

struct CarberyOptions {
    double mu = 1.5;
    int per_octave = 32;
    int r_per_octave = 128;
    double pad_octaves = 4.0;
    double denominator_floor = 1e-10;  // relative to the largest denominator
};

struct CarberyReport {
    double norm = 0.0;
    bool decays = true;
    CMuCalibration calibration;
    double sup_ratio = 0.0;
    std::vector<double> member_sup;
    int excluded = 0;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// sup_t|m(tL)f| / (𝒢̃f · ‖m‖_{L²_μ}) with 𝒢̃f = (√2/(2μ))·𝒢_{μ−1}f, the form the
// reconstruction formula and Cauchy–Schwarz produce. Bounded by C_μ.
CarberyReport carbery_domination(const SpectralOperator& op, const NamedSymbol& m, const Eigen::MatrixXd& F,
                                 const CarberyOptions& opt);

struct ReconstructionCheck {
    double max_relative = 0.0;  // max |rec − m| / max |m| over the sample points
    std::vector<double> lambdas, values, reconstructed;
};
ReconstructionCheck reconstruction_check(const NamedSymbol& m, double mu, double c_mu, const std::vector<double>& at);

struct ReductionOptions {
    double p = 2.0;
    int per_octave = 32;
    double pad_octaves = 0.0;
};

struct ReductionReport {
    double p = 2.0;
    double exponent_value = 0.0;       // 1/(pp′)
    double exponent_derivative = 0.0;  // 1/p²
    double constant = 0.0;             // max over nodes and members of sup_t/(dyadic + derivative term)
    std::vector<double> member_constant;
    double max_derivative_term = 0.0;

    nlohmann::json to_json() const;
};

ReductionReport dyadic_reduction_probe(const SpectralOperator& op, const NamedSymbol& m, const Eigen::MatrixXd& F,
                                       const ReductionOptions& opt = {});

struct FsReport {
    double ratio = 0.0;
    std::vector<double> member_ratio;
    int skipped = 0;

    nlohmann::json to_json() const;
};

// ‖(Σ_j|𝔐_r f_j|²)^{1/2}‖_{L^p(ω dν)} / ‖(Σ_j|f_j|²)^{1/2}‖_{L^p(ω dν)}, sup over the family.
FsReport fefferman_stein_probe(const WeightedGrid& grid, const Measure& nu, const Field& weight,
                               const std::vector<Eigen::MatrixXd>& family, double r, double p);

// ---- configuration and reports

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct GridConfig {
    DomainKind kind = DomainKind::full_line;
    int M = 1024;
    double x_max = 20.0;
    double alpha = 0.0;
};

struct ExperimentConfig {
    std::string experiment;
    OperatorSpec op = OperatorSpec::free_laplacian();
    bool op_given = false;
    GridConfig grid;
    bool grid_given = false;
    std::vector<std::string> profiles;
    double p = 4.0, q = 2.0, r = 1.5, s = 1.5;
    std::vector<int> N_ladder{1, 2, 4, 8, 16, 32, 64, 128, 256};
    int t_per_octave = 32;
    std::uint64_t seed = 1;
    std::string out_dir = "smlab_out";
    nlohmann::json params = nlohmann::json::object();

    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    // Throws ConfigError naming the violated constraint.
    void validate() const;
    // The operator, defaulting per experiment when none was given.
    OperatorSpec resolved_operator() const;
    // Grid implied by the operator unless one was given explicitly.
    GridConfig resolved_grid() const;
};

std::vector<std::string> experiment_names();

struct ExperimentReport {
    std::string experiment;
    nlohmann::json config;
    nlohmann::json results;
    std::map<std::string, std::string> tables;  // file stem -> CSV body
    bool pass = false;
    double runtime_seconds = 0.0;

    nlohmann::json to_json() const;
};

ExperimentReport run(const ExperimentConfig& config);
void write_report(const ExperimentReport& report, const std::string& dir);
// run + write_report, mapped onto exit codes 0 (pass), 2 (fail), 1 (configuration error).
int run_to_exit_code(const ExperimentConfig& config, std::string* message = nullptr);

}  // namespace smlab
