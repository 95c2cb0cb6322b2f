#pragma once

#include "smlab/calculus.hpp"
#include "smlab/operator.hpp"
#include "smlab/space.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smlab {

// Conditional expectations on the dyadic cubes against a node measure ν.
class MartingaleStack {
public:
    MartingaleStack(DyadicSystem dyadic, Field cell_measure);

    const DyadicSystem& dyadic() const { return dyadic_; }
    const Field& cell_measure() const { return cell_; }
    int k_min() const { return dyadic_.k_min(); }
    int k_max() const { return dyadic_.k_max(); }

    // Cube-wise ν-average at level k; cubes of zero measure get 0.
    Field expectation(int k, const Field& f) const;
    Eigen::MatrixXd expectation(int k, const Eigen::MatrixXd& F) const;
    // E_{k+1} f − E_k f
    Field difference(int k, const Field& f) const;
    // (Σ_k max_{Q_k(x)} |D_k f|²)^{1/2}, k from k_min to k_max − 1.
    Field square_function(const Field& f) const;
    // sup_k |E_k f| over the full level range.
    Field max_average(const Field& f) const;
    // Cubes at level k with ν(Q) = 0.
    std::vector<int> empty_cubes(int k) const;

    double integral(const Field& f) const { return f.dot(cell_); }
    double l2_norm_sq(const Field& f) const { return f.array().square().matrix().dot(cell_); }

private:
    DyadicSystem dyadic_;
    Field cell_;
    std::vector<std::vector<double>> cube_mass_;
};

// Level-wise cube sup of |D_k f|, spread back onto the nodes of each cube.
Field cube_sup(const MartingaleStack& stack, int k, const Field& g);

struct HaarFamilyOptions {
    int members = 64;
    std::uint64_t base_seed = 1;
    double level_decay = 0.25;  // σ at depth d is 2^{−decay·d}
};
// Sums of ν-mean-zero Haar functions with seeded ±σ coefficients, one per cube.
std::vector<Field> haar_family(const MartingaleStack& stack, const HaarFamilyOptions& opt = {});
// The Haar function of cube q at level k: +1 on the left child and −ν(L)/ν(R) on the right.
Field haar_function(const MartingaleStack& stack, int k, int q);

struct GoodLambdaOptions {
    std::vector<double> eps_grid{0.5, 0.35, 0.25, 0.18};
    int lambda_count = 24;
    double lambda_lo_pct = 0.5, lambda_hi_pct = 0.995;
    // Subtract the ν-average (finite measure space); otherwise f_X = 0.
    bool finite_measure = true;
};

struct GoodLambdaRow {
    int member = 0;
    double eps = 0.0, lambda = 0.0;
    double numerator = 0.0, denominator = 0.0, ratio = 0.0;
};

struct GoodLambdaReport {
    std::vector<double> eps_grid;
    std::vector<double> worst_ratio;  // per ε, max over (f, λ)
    std::vector<GoodLambdaRow> rows;
    int skipped = 0;           // (f, λ) pairs with an empty level set
    int levels = 0;            // number of martingale differences
    double eps_critical = 0.0;  // 2/√levels: below it the bad set is provably empty
    LineFit fit;               // log worst ratio vs 1/ε², positive ratios only
    int positive = 0;
    bool degenerate = true;    // fewer than two positive ratios
    bool weighted = false;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

GoodLambdaReport good_lambda_experiment(const MartingaleStack& stack, const std::vector<Field>& family,
                                        const GoodLambdaOptions& opt = {}, const Field* weight = nullptr);

struct DominationSample {
    Field lhs, rhs;
    int j_lo = 0, j_hi = 0;
};
// 𝕊^ν(h⁻¹m(L)f) against (Σ_j |𝔐^ν_r(h⁻¹U_j^{2/r} f)|²)^{1/2}, U_j with weight exponent 2/r.
DominationSample domination_probe(const DoobFrame& frame, const MartingaleStack& stack, const Symbol& m,
                                  const Field& f, double r);

struct DecayPoint {
    int j = 0, k = 0;
    double k_scale = 0.0;  // −log₂ side length of the level-k cubes
    double distance = 0.0;  // |j − k_scale + offset|
    double ratio = 0.0;     // sup over interior nodes and the family
};
struct DecayReport {
    bool ok = false;
    double gamma = 0.0;
    double r2 = 0.0;
    double offset = 0.0;  // fitted scale shift, in octaves
    std::string failure;
    std::vector<DecayPoint> points;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};
// Regresses log₂ of sup ‖D_k(h⁻¹ 2^{−2j}L e^{−2^{−2j}L} f)‖_{L^∞(Q_k(x))} / 𝔐_r(h⁻¹f)(x)
// against |j − k̃ + c|, with c the scale shift of best fit; γ is minus the slope.
DecayReport decay_probe(const DoobFrame& frame, const MartingaleStack& stack, std::pair<int, int> j_range,
                        std::pair<int, int> k_range, const std::vector<Field>& family, double r = 1.5);

}  // namespace smlab
