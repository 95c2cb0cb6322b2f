#include "smlab/space.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace smlab {

std::string to_string(DomainKind kind)
{
    switch (kind) {
    case DomainKind::half_line_dirichlet: return "half_line_dirichlet";
    case DomainKind::full_line: return "full_line";
    case DomainKind::half_line_neumannlike: return "half_line_neumannlike";
    }
    return "unknown";
}

DomainKind domain_kind_from_string(const std::string& name)
{
    if (name == "half_line_dirichlet" || name == "half_line")
        return DomainKind::half_line_dirichlet;
    if (name == "full_line")
        return DomainKind::full_line;
    if (name == "half_line_neumannlike")
        return DomainKind::half_line_neumannlike;
    throw std::invalid_argument("unknown domain kind '" + name + "'");
}

WeightedGrid WeightedGrid::make(DomainKind kind, int M, double x_max, double alpha)
{
    if (M < 2)
        throw std::invalid_argument("grid needs at least 2 nodes");
    if (!(x_max > 0.0))
        throw std::invalid_argument("x_max must be positive");
    if (!(alpha > -1.0))
        throw std::invalid_argument("density exponent must satisfy alpha > -1 (x^alpha must be integrable at 0)");

    WeightedGrid g;
    g.kind_ = kind;
    g.x_max_ = x_max;
    g.alpha_ = alpha;
    g.nodes_.resize(M);
    if (kind == DomainKind::full_line) {
        g.dx_ = 2.0 * x_max / (M + 1);
        for (int i = 0; i < M; ++i)
            g.nodes_[i] = -x_max + (i + 1) * g.dx_;
    } else {
        g.dx_ = x_max / M;
        for (int i = 0; i < M; ++i)
            g.nodes_[i] = (i + 1) * g.dx_;
    }
    g.density_.resize(M);
    for (int i = 0; i < M; ++i)
        g.density_[i] = alpha == 0.0 ? 1.0 : std::pow(std::abs(g.nodes_[i]), alpha);
    g.quad_ = g.density_ * g.dx_;
    return g;
}

WeightedGrid build_grid(DomainKind kind, int M, double x_max, double alpha)
{
    if (M < 16)
        throw std::invalid_argument("build_grid requires M >= 16");
    return WeightedGrid::make(kind, M, x_max, alpha);
}

double WeightedGrid::box_length() const
{
    return kind_ == DomainKind::full_line ? 2.0 * x_max_ : x_max_ + dx_;
}

double WeightedGrid::distance_to_far_boundary(int i) const
{
    const double right = (kind_ == DomainKind::full_line ? x_max_ : x_max_ + dx_) - nodes_[i];
    if (kind_ == DomainKind::full_line)
        return std::min(right, nodes_[i] + x_max_);
    return right;
}

std::pair<int, int> WeightedGrid::ball_indices(double center, double radius) const
{
    // Work in units of Δx so that node coordinates are integers; the small
    // slack keeps "strictly inside" stable for radii that are exact multiples.
    const double s = (center - nodes_[0]) / dx_;
    const double rho = radius / dx_;
    const double eta = 1e-9;
    int first = static_cast<int>(std::floor(s - rho + eta)) + 1;
    int last = static_cast<int>(std::ceil(s + rho - eta)) - 1;
    first = std::max(first, 0);
    last = std::min(last, size() - 1);
    return {first, last};
}

std::pair<int, int> WeightedGrid::node_ball(int i, double rho) const
{
    const int reach = static_cast<int>(std::ceil(rho - 1e-9)) - 1;
    return {std::max(0, i - reach), std::min(size() - 1, i + reach)};
}

nlohmann::json WeightedGrid::to_json() const
{
    return {{"domain_kind", to_string(kind_)}, {"M", size()}, {"x_max", x_max_}, {"alpha", alpha_}};
}

WeightedGrid WeightedGrid::from_json(const nlohmann::json& j)
{
    return build_grid(domain_kind_from_string(j.at("domain_kind").get<std::string>()), j.at("M").get<int>(),
                      j.at("x_max").get<double>(), j.value("alpha", 0.0));
}

Measure mu_measure(const WeightedGrid& grid)
{
    return {MeasureTag::mu, grid.quad_weights()};
}

Measure nu_measure(const WeightedGrid& grid, const Field& h)
{
    return {MeasureTag::nu, (h.array().square() * grid.quad_weights().array()).matrix()};
}

PrefixSum::PrefixSum(const Field& cells) : acc_(cells.size() + 1, 0.0)
{
    for (Eigen::Index i = 0; i < cells.size(); ++i)
        acc_[i + 1] = acc_[i] + cells[i];
}

double PrefixSum::sum(int first, int last) const
{
    if (first > last)
        return 0.0;
    return acc_[last + 1] - acc_[first];
}

double ball_measure(const WeightedGrid& grid, const Measure& m, double center, double radius)
{
    if (!(radius > 0.0))
        throw std::invalid_argument("ball radius must be positive");
    auto [first, last] = grid.ball_indices(center, radius);
    double total = 0.0;
    for (int i = first; i <= last; ++i)
        total += m.cell[i];
    return total;
}

double ball_measure(const WeightedGrid& grid, double center, double radius)
{
    return ball_measure(grid, mu_measure(grid), center, radius);
}

DoublingFit doubling_profile(const WeightedGrid& grid, DoublingSweep sweep)
{
    const double dx = grid.spacing();
    const double lambdas[] = {1.5, 2.0, 3.0, 4.0};
    std::vector<double> xs, ys;

    std::vector<double> centers;
    double r_lo = 0.0, r_hi = 0.0;
    if (sweep == DoublingSweep::origin) {
        centers = {0.0};
        r_lo = 16.0 * dx;
        r_hi = grid.x_max() / 16.0;
    } else {
        // Balls far from the origin: the density is nearly constant across them.
        for (double c : {0.4, 0.5, 0.6})
            centers.push_back(c * grid.x_max());
        r_lo = 8.0 * dx;
        r_hi = 0.4 * grid.x_max() / 32.0;
    }
    if (r_hi <= r_lo)
        r_hi = 2.0 * r_lo;
    for (double c : centers) {
        for (double r : geomspace(r_lo, r_hi, 8)) {
            const double base = ball_measure(grid, c, r);
            if (base <= 0.0)
                continue;
            for (double lam : lambdas) {
                xs.push_back(std::log(lam));
                ys.push_back(std::log(ball_measure(grid, c, lam * r) / base));
            }
        }
    }
    const LineFit fit = fit_line(xs, ys);
    return {std::exp(fit.intercept), fit.slope, fit.r2, fit.count};
}

int DyadicSystem::cube_count(int k) const
{
    return static_cast<int>(bounds_.at(k - k_min_).size()) - 1;
}

std::pair<int, int> DyadicSystem::cube(int k, int q) const
{
    const auto& b = bounds_.at(k - k_min_);
    return {b[q], b[q + 1] - 1};
}

int DyadicSystem::parent(int k, int q) const
{
    if (k <= k_min_)
        throw std::out_of_range("coarsest level has no parent");
    return q / 2;
}

std::pair<int, int> DyadicSystem::children(int k, int q) const
{
    if (k >= k_max_)
        throw std::out_of_range("finest level has no children");
    return {2 * q, 2 * q + 1};
}

nlohmann::json DyadicSystem::to_json() const
{
    return {{"delta", 0.5}, {"k_min", k_min_}, {"k_max", k_max_}, {"M", node_count_}};
}

DyadicSystem build_dyadic(const WeightedGrid& grid, int k_min, int k_max)
{
    const int M = grid.size();
    if (k_max < k_min)
        throw std::invalid_argument("k_max must not be below k_min");
    const int depth = k_max - k_min;
    if (depth > 30 || (1LL << depth) > M)
        throw std::invalid_argument("dyadic depth exceeds grid resolution (need 2^(k_max-k_min) <= M)");

    DyadicSystem d;
    d.k_min_ = k_min;
    d.k_max_ = k_max;
    d.node_count_ = M;
    d.span_ = M * grid.spacing();
    for (int level = 0; level <= depth; ++level) {
        const long long parts = 1LL << level;
        std::vector<int> b(parts + 1);
        // floor(j·M/2^level) nests: boundary j at this level is boundary 2j one level down.
        for (long long j = 0; j <= parts; ++j)
            b[j] = static_cast<int>((j * M) / parts);
        std::vector<int> owner(M);
        for (long long q = 0; q < parts; ++q)
            for (int i = b[q]; i < b[q + 1]; ++i)
                owner[i] = static_cast<int>(q);
        d.bounds_.push_back(std::move(b));
        d.owner_.push_back(std::move(owner));
    }
    return d;
}

DyadicSystem full_dyadic(const WeightedGrid& grid)
{
    int depth = 0;
    while ((2LL << depth) <= grid.size())
        ++depth;
    return build_dyadic(grid, 0, depth);
}

BoundaryLayerFit boundary_layer_profile(const WeightedGrid& grid, const DyadicSystem& dyadic, int k)
{
    const Field& w = grid.quad_weights();
    const double dx = grid.spacing();
    const int M = grid.size();
    std::vector<double> xs, ys;
    const int cubes = dyadic.cube_count(k);
    const double side = dyadic.side_length(k);
    for (double t : geomspace(std::max(2.0 * dx / side, 1.0 / 256.0), 0.25, 10)) {
        double worst = 0.0;
        for (int q = 0; q < cubes; ++q) {
            auto [a, b] = dyadic.cube(k, q);
            // Faces that actually border the complement inside the grid.
            const bool left_open = a > 0, right_open = b < M - 1;
            if (!left_open && !right_open)
                continue;
            const double left_face = grid.node(a) - 0.5 * dx;
            const double right_face = grid.node(b) + 0.5 * dx;
            double layer = 0.0, total = 0.0;
            for (int i = a; i <= b; ++i) {
                total += w[i];
                double d = 1e300;
                if (left_open)
                    d = std::min(d, grid.node(i) - left_face);
                if (right_open)
                    d = std::min(d, right_face - grid.node(i));
                if (d <= t * side)
                    layer += w[i];
            }
            if (total > 0.0)
                worst = std::max(worst, layer / total);
        }
        if (worst > 0.0) {
            xs.push_back(std::log(t));
            ys.push_back(std::log(worst));
        }
    }
    const LineFit fit = fit_line(xs, ys);
    return {std::exp(fit.intercept), fit.slope, fit.r2};
}

namespace {

// Every ball of the family as an inclusive node range plus its geometric description.
struct BallRange {
    int first, last;
    double center, radius;
};

std::vector<BallRange> ball_family(const WeightedGrid& grid)
{
    std::vector<BallRange> balls;
    const int M = grid.size();
    const double dx = grid.spacing();
    for (long long rho = 1; rho <= 2LL * M; rho *= 2) {
        for (int i = 0; i < M; ++i) {
            auto [a, b] = grid.node_ball(i, static_cast<double>(rho));
            balls.push_back({a, b, grid.node(i), rho * dx});
        }
    }
    const DyadicSystem d = full_dyadic(grid);
    for (int k = d.k_min(); k <= d.k_max(); ++k) {
        for (int q = 0; q < d.cube_count(k); ++q) {
            auto [a, b] = d.cube(k, q);
            const double c = 0.5 * (grid.node(a) + grid.node(b));
            balls.push_back({a, b, c, 0.5 * (grid.node(b) - grid.node(a)) + 0.5 * dx});
        }
    }
    return balls;
}

}  // namespace

ApReport ap_characteristic(const WeightedGrid& grid, const Field& weight, double p, const Measure& base)
{
    if (!(p > 1.0))
        throw std::invalid_argument("A_p needs p > 1");
    if (weight.size() != grid.size())
        throw std::invalid_argument("weight length does not match the grid");
    if ((weight.array() <= 0.0).any() || !weight.allFinite())
        throw std::invalid_argument("A_p weight must be strictly positive and finite");

    const double dual = -1.0 / (p - 1.0);
    const Field wm = weight.cwiseProduct(base.cell);
    const Field dm = weight.array().pow(dual).matrix().cwiseProduct(base.cell);
    const PrefixSum S0(base.cell), S1(wm), S2(dm);

    ApReport rep;
    rep.p = p;
    rep.base = base.tag;
    rep.characteristic = 0.0;
    for (const auto& ball : ball_family(grid)) {
        const double vol = S0.sum(ball.first, ball.last);
        if (vol <= 0.0)
            continue;
        const double avg_w = S1.sum(ball.first, ball.last) / vol;
        const double avg_d = S2.sum(ball.first, ball.last) / vol;
        const double value = std::pow(avg_w, 1.0 / p) * std::pow(avg_d, (p - 1.0) / p);
        rep.per_ball.push_back({ball.center, ball.radius, value});
        rep.characteristic = std::max(rep.characteristic, value);
    }
    return rep;
}

ApReport ap_characteristic(const WeightedGrid& grid, const Field& weight, double p)
{
    return ap_characteristic(grid, weight, p, mu_measure(grid));
}

nlohmann::json ApReport::to_json() const
{
    nlohmann::json balls = nlohmann::json::array();
    for (const auto& b : per_ball)
        balls.push_back({b.center, b.radius, b.value});
    return {{"p", p},
            {"characteristic", characteristic},
            {"base_measure", base == MeasureTag::mu ? "mu" : "nu"},
            {"ball_count", per_ball.size()},
            {"per_ball", balls}};
}

std::string ApReport::to_csv() const
{
    std::ostringstream out;
    out << "center,radius,ap_value\n";
    for (const auto& b : per_ball)
        out << format_number(b.center) << ',' << format_number(b.radius) << ',' << format_number(b.value) << '\n';
    return out.str();
}

namespace {

// out[i] = max(out[i], max_{|c−i| ≤ reach} v[c]) with a monotone deque.
void window_max_into(const std::vector<double>& v, int reach, Field& out)
{
    const int n = static_cast<int>(v.size());
    std::deque<int> dq;
    int next = 0;
    for (int i = 0; i < n; ++i) {
        const int hi = std::min(n - 1, i + reach);
        while (next <= hi) {
            while (!dq.empty() && v[dq.back()] <= v[next])
                dq.pop_back();
            dq.push_back(next++);
        }
        while (dq.front() < i - reach)
            dq.pop_front();
        out[i] = std::max(out[i], v[dq.front()]);
    }
}

}  // namespace

Field hl_maximal(const WeightedGrid& grid, const Measure& m, const Field& f, double r)
{
    if (!(r >= 1.0))
        throw std::invalid_argument("maximal order r must be >= 1");
    const int M = grid.size();
    const Field fr = f.array().abs().pow(r).matrix();
    const PrefixSum S0(m.cell), S1(fr.cwiseProduct(m.cell));
    Field out = Field::Zero(M);
    std::vector<double> avg(M);

    for (long long rho = 1; rho <= 2LL * M; rho *= 2) {
        for (int c = 0; c < M; ++c) {
            auto [a, b] = grid.node_ball(c, static_cast<double>(rho));
            const double vol = S0.sum(a, b);
            avg[c] = vol > 0.0 ? S1.sum(a, b) / vol : 0.0;
        }
        // x lies in B(x_c, ρΔx) exactly when |c − i| ≤ ρ − 1.
        window_max_into(avg, static_cast<int>(rho) - 1, out);
    }
    const DyadicSystem d = full_dyadic(grid);
    for (int k = d.k_min(); k <= d.k_max(); ++k) {
        for (int q = 0; q < d.cube_count(k); ++q) {
            auto [a, b] = d.cube(k, q);
            const double vol = S0.sum(a, b);
            if (vol <= 0.0)
                continue;
            const double v = S1.sum(a, b) / vol;
            for (int i = a; i <= b; ++i)
                out[i] = std::max(out[i], v);
        }
    }
    return out.array().pow(1.0 / r).matrix();
}

Field double_maximal(const WeightedGrid& grid, const Measure& m, const Field& f, double r)
{
    return hl_maximal(grid, m, hl_maximal(grid, m, f, r), r);
}

}  // namespace smlab
