#pragma once

#include "smlab/numeric.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace smlab {

enum class DomainKind { half_line_dirichlet, full_line, half_line_neumannlike };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

// Uniform 1-D grid carrying the density of μ. Half-line grids put x_i = i·Δx,
// i = 1..M with Δx = x_max/M; the full line uses the M interior nodes of
// [−x_max, x_max]. Density is |x|^α, cell measure is density·Δx.
class WeightedGrid {
public:
    // Same as build_grid but without the M ≥ 16 floor; tiny grids are handy in tests.
    static WeightedGrid make(DomainKind kind, int M, double x_max, double alpha);

    DomainKind kind() const { return kind_; }
    int size() const { return static_cast<int>(nodes_.size()); }
    double spacing() const { return dx_; }
    double x_max() const { return x_max_; }
    double alpha() const { return alpha_; }
    bool half_line() const { return kind_ != DomainKind::full_line; }

    const Field& nodes() const { return nodes_; }
    const Field& density() const { return density_; }
    const Field& quad_weights() const { return quad_; }
    double node(int i) const { return nodes_[i]; }
    double total_measure() const { return quad_.sum(); }
    // Length of the box the Dirichlet conditions live on.
    double box_length() const;
    // Distance from node i to the nearest boundary where an absorbing condition sits.
    double distance_to_far_boundary(int i) const;

    // Inclusive index range of nodes with |x_i − c| < r; empty when first > last.
    std::pair<int, int> ball_indices(double center, double radius) const;
    // Same, but for a ball centred at node i with radius ρ·Δx.
    std::pair<int, int> node_ball(int i, double rho) const;

    nlohmann::json to_json() const;
    static WeightedGrid from_json(const nlohmann::json& j);

private:
    DomainKind kind_ = DomainKind::half_line_dirichlet;
    double dx_ = 0.0, x_max_ = 0.0, alpha_ = 0.0;
    Field nodes_, density_, quad_;
};

WeightedGrid build_grid(DomainKind kind, int M, double x_max, double alpha);

// A measure on the nodes: μ itself or ν = h²μ.
enum class MeasureTag { mu, nu };
struct Measure {
    MeasureTag tag = MeasureTag::mu;
    Field cell;
};
Measure mu_measure(const WeightedGrid& grid);
Measure nu_measure(const WeightedGrid& grid, const Field& h);

double ball_measure(const WeightedGrid& grid, double center, double radius);
double ball_measure(const WeightedGrid& grid, const Measure& m, double center, double radius);

// Prefix sums of a cell quantity, so any contiguous index block sums in O(1).
class PrefixSum {
public:
    explicit PrefixSum(const Field& cells);
    double sum(int first, int last) const;  // inclusive; 0 for an empty range
private:
    std::vector<double> acc_;
};

enum class DoublingSweep { interior, origin };
struct DoublingFit {
    double C = 0.0;
    double n = 0.0;
    double r2 = 0.0;
    int samples = 0;
};
// Fits log μ(B(x,λr)) − log μ(B(x,r)) = log C + n log λ over a fixed sweep.
// `interior` keeps balls far from the origin, `origin` centres them at x = 0.
DoublingFit doubling_profile(const WeightedGrid& grid, DoublingSweep sweep = DoublingSweep::interior);

class DyadicSystem {
public:
    int k_min() const { return k_min_; }
    int k_max() const { return k_max_; }
    int level_count() const { return k_max_ - k_min_ + 1; }
    int node_count() const { return node_count_; }
    double delta() const { return 0.5; }

    int cube_count(int k) const;
    // Inclusive node range [first, last] of cube q at level k.
    std::pair<int, int> cube(int k, int q) const;
    int cube_of(int k, int node) const { return owner_[k - k_min_][node]; }
    int parent(int k, int q) const;  // cube index at level k−1
    std::pair<int, int> children(int k, int q) const;  // cube indices at level k+1
    // Nominal side length: the full span halved once per level.
    double side_length(int k) const { return span_ / static_cast<double>(1 << (k - k_min_)); }

    nlohmann::json to_json() const;

private:
    friend DyadicSystem build_dyadic(const WeightedGrid& grid, int k_min, int k_max);
    int k_min_ = 0, k_max_ = 0, node_count_ = 0;
    double span_ = 0.0;
    std::vector<std::vector<int>> bounds_;  // per level, 2^d + 1 boundaries
    std::vector<std::vector<int>> owner_;
};

DyadicSystem build_dyadic(const WeightedGrid& grid, int k_min, int k_max);
// Deepest system the grid supports, with k_min = 0.
DyadicSystem full_dyadic(const WeightedGrid& grid);

// Empirical check of the small-boundary property: fits
// sup_Q μ{x∈Q : d(x,Q^c) ≤ t·ℓ(Q)}/μ(Q) ≈ C t^ρ at one level.
struct BoundaryLayerFit {
    double C = 0.0;
    double rho = 0.0;
    double r2 = 0.0;
};
BoundaryLayerFit boundary_layer_profile(const WeightedGrid& grid, const DyadicSystem& dyadic, int k);

// Muckenhoupt characteristic over the fixed ball family.
struct BallValue {
    double center = 0.0;
    double radius = 0.0;
    double value = 0.0;
};
struct ApReport {
    double p = 2.0;
    double characteristic = 1.0;
    std::vector<BallValue> per_ball;
    MeasureTag base = MeasureTag::mu;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};
ApReport ap_characteristic(const WeightedGrid& grid, const Field& weight, double p);
ApReport ap_characteristic(const WeightedGrid& grid, const Field& weight, double p, const Measure& base);

// Hardy–Littlewood maximal function of order r over the same ball family.
Field hl_maximal(const WeightedGrid& grid, const Measure& m, const Field& f, double r);
// The composed operator M_r ∘ M_r.
Field double_maximal(const WeightedGrid& grid, const Measure& m, const Field& f, double r);

}  // namespace smlab
