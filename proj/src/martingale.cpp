#include "smlab/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace smlab {

MartingaleStack::MartingaleStack(DyadicSystem dyadic, Field cell_measure)
    : dyadic_(std::move(dyadic)), cell_(std::move(cell_measure))
{
    if (cell_.size() != dyadic_.node_count())
        throw std::invalid_argument("measure length does not match the dyadic system");
    if ((cell_.array() < 0.0).any())
        throw std::invalid_argument("cell measure must be nonnegative");
    const PrefixSum mass(cell_);
    for (int k = k_min(); k <= k_max(); ++k) {
        std::vector<double> row(dyadic_.cube_count(k));
        for (int q = 0; q < dyadic_.cube_count(k); ++q) {
            auto [a, b] = dyadic_.cube(k, q);
            row[q] = mass.sum(a, b);
        }
        cube_mass_.push_back(std::move(row));
    }
}

Eigen::MatrixXd MartingaleStack::expectation(int k, const Eigen::MatrixXd& F) const
{
    if (k < k_min() || k > k_max())
        throw std::out_of_range("level " + std::to_string(k) + " outside the stack");
    if (F.rows() != cell_.size())
        throw std::invalid_argument("function length does not match the grid");
    const auto& mass = cube_mass_[k - k_min()];
    Eigen::MatrixXd out(F.rows(), F.cols());
    for (int q = 0; q < dyadic_.cube_count(k); ++q) {
        auto [a, b] = dyadic_.cube(k, q);
        const int len = b - a + 1;
        if (mass[q] == 0.0) {
            out.middleRows(a, len).setZero();
            continue;
        }
        const Eigen::RowVectorXd avg = cell_.segment(a, len).transpose() * F.middleRows(a, len) / mass[q];
        out.middleRows(a, len).rowwise() = avg;
    }
    return out;
}

Field MartingaleStack::expectation(int k, const Field& f) const
{
    return expectation(k, Eigen::MatrixXd(f)).col(0);
}

Field MartingaleStack::difference(int k, const Field& f) const
{
    if (k >= k_max())
        throw std::out_of_range("difference needs level k+1 inside the stack");
    return expectation(k + 1, f) - expectation(k, f);
}

Field cube_sup(const MartingaleStack& stack, int k, const Field& g)
{
    const auto& dy = stack.dyadic();
    Field out(g.size());
    for (int q = 0; q < dy.cube_count(k); ++q) {
        auto [a, b] = dy.cube(k, q);
        out.segment(a, b - a + 1).setConstant(g.segment(a, b - a + 1).cwiseAbs().maxCoeff());
    }
    return out;
}

Field MartingaleStack::square_function(const Field& f) const
{
    Field acc = Field::Zero(f.size());
    Field upper = expectation(k_min(), f);
    for (int k = k_min(); k < k_max(); ++k) {
        const Field lower = upper;
        upper = expectation(k + 1, f);
        acc += cube_sup(*this, k, upper - lower).array().square().matrix();
    }
    return acc.cwiseSqrt();
}

Field MartingaleStack::max_average(const Field& f) const
{
    Field out = Field::Zero(f.size());
    for (int k = k_min(); k <= k_max(); ++k)
        out = out.cwiseMax(expectation(k, f).cwiseAbs());
    return out;
}

std::vector<int> MartingaleStack::empty_cubes(int k) const
{
    std::vector<int> out;
    const auto& mass = cube_mass_.at(k - k_min());
    for (std::size_t q = 0; q < mass.size(); ++q)
        if (mass[q] == 0.0)
            out.push_back(static_cast<int>(q));
    return out;
}

Field haar_function(const MartingaleStack& stack, int k, int q)
{
    const auto& dy = stack.dyadic();
    if (k >= stack.k_max())
        throw std::out_of_range("Haar function needs children");
    auto [cl, cr] = dy.children(k, q);
    auto [la, lb] = dy.cube(k + 1, cl);
    auto [ra, rb] = dy.cube(k + 1, cr);
    const Field& w = stack.cell_measure();
    const double mass_l = w.segment(la, lb - la + 1).sum(), mass_r = w.segment(ra, rb - ra + 1).sum();
    Field h = Field::Zero(w.size());
    if (mass_r == 0.0 || mass_l == 0.0)
        return h;
    h.segment(la, lb - la + 1).setOnes();
    h.segment(ra, rb - ra + 1).setConstant(-mass_l / mass_r);
    return h;
}

std::vector<Field> haar_family(const MartingaleStack& stack, const HaarFamilyOptions& opt)
{
    const auto& dy = stack.dyadic();
    const Field& w = stack.cell_measure();
    std::vector<Field> family;
    for (int i = 0; i < opt.members; ++i) {
        std::mt19937_64 rng(mix_seed(opt.base_seed + static_cast<std::uint64_t>(i)));
        std::bernoulli_distribution coin(0.5);
        Field f = Field::Zero(w.size());
        for (int k = stack.k_min(); k < stack.k_max(); ++k) {
            const double sigma = std::exp2(-opt.level_decay * (k - stack.k_min()));
            for (int q = 0; q < dy.cube_count(k); ++q) {
                const double c = coin(rng) ? sigma : -sigma;
                auto [cl, cr] = dy.children(k, q);
                auto [la, lb] = dy.cube(k + 1, cl);
                auto [ra, rb] = dy.cube(k + 1, cr);
                const double mass_l = w.segment(la, lb - la + 1).sum(), mass_r = w.segment(ra, rb - ra + 1).sum();
                if (mass_l == 0.0 || mass_r == 0.0)
                    continue;
                f.segment(la, lb - la + 1).array() += c;
                f.segment(ra, rb - ra + 1).array() -= c * mass_l / mass_r;
            }
        }
        family.push_back(std::move(f));
    }
    return family;
}

nlohmann::json GoodLambdaReport::to_json() const
{
    nlohmann::json j = {{"eps_grid", eps_grid},
                        {"worst_ratio", worst_ratio},
                        {"skipped_pairs", skipped},
                        {"levels", levels},
                        {"eps_critical", eps_critical},
                        {"positive_ratios", positive},
                        {"degenerate", degenerate},
                        {"weighted", weighted}};
    if (!degenerate)
        j["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"count", fit.count}};
    return j;
}

std::string GoodLambdaReport::to_csv() const
{
    std::ostringstream out;
    out << "member,eps,lambda,numerator,denominator,ratio\n";
    for (const auto& r : rows)
        out << r.member << ',' << format_number(r.eps) << ',' << format_number(r.lambda) << ','
            << format_number(r.numerator) << ',' << format_number(r.denominator) << ',' << format_number(r.ratio)
            << '\n';
    return out.str();
}

GoodLambdaReport good_lambda_experiment(const MartingaleStack& stack, const std::vector<Field>& family,
                                        const GoodLambdaOptions& opt, const Field* weight)
{
    if (opt.eps_grid.empty())
        throw std::invalid_argument("good-lambda needs a nonempty eps grid");
    Field measure = stack.cell_measure();
    if (weight) {
        if (weight->size() != measure.size())
            throw std::invalid_argument("weight length does not match the grid");
        measure = measure.cwiseProduct(*weight);
    }

    GoodLambdaReport rep;
    rep.eps_grid = opt.eps_grid;
    rep.worst_ratio.assign(opt.eps_grid.size(), 0.0);
    rep.levels = stack.k_max() - stack.k_min();
    rep.eps_critical = rep.levels > 0 ? 2.0 / std::sqrt(static_cast<double>(rep.levels)) : 0.0;
    rep.weighted = weight != nullptr;

    const double total = stack.cell_measure().sum();
    for (std::size_t i = 0; i < family.size(); ++i) {
        Field g = family[i];
        if (opt.finite_measure && total > 0.0)
            g.array() -= stack.integral(g) / total;
        const Field sup = stack.max_average(g);
        const Field sq = stack.square_function(g);
        std::vector<double> values(sup.data(), sup.data() + sup.size());
        const double lo = percentile(values, opt.lambda_lo_pct), hi = percentile(values, opt.lambda_hi_pct);
        if (!(lo > 0.0) || !(hi > lo)) {
            rep.skipped += opt.lambda_count;
            continue;
        }
        for (double lambda : geomspace(lo, hi, opt.lambda_count)) {
            double den = 0.0;
            for (Eigen::Index x = 0; x < sup.size(); ++x)
                if (sup[x] > lambda)
                    den += measure[x];
            if (den == 0.0) {
                ++rep.skipped;
                continue;
            }
            for (std::size_t e = 0; e < opt.eps_grid.size(); ++e) {
                const double eps = opt.eps_grid[e];
                double num = 0.0;
                for (Eigen::Index x = 0; x < sup.size(); ++x)
                    if (sup[x] > 2.0 * lambda && sq[x] < eps * lambda)
                        num += measure[x];
                const double ratio = num / den;
                rep.rows.push_back({static_cast<int>(i), eps, lambda, num, den, ratio});
                rep.worst_ratio[e] = std::max(rep.worst_ratio[e], ratio);
            }
        }
    }

    std::vector<double> x, y;
    for (std::size_t e = 0; e < opt.eps_grid.size(); ++e)
        if (rep.worst_ratio[e] > 0.0) {
            x.push_back(1.0 / (opt.eps_grid[e] * opt.eps_grid[e]));
            y.push_back(std::log(rep.worst_ratio[e]));
        }
    rep.positive = static_cast<int>(x.size());
    rep.degenerate = x.size() < 2;
    if (!rep.degenerate)
        rep.fit = fit_line(x, y);
    return rep;
}

DominationSample domination_probe(const DoobFrame& frame, const MartingaleStack& stack, const Symbol& m,
                                  const Field& f, double r)
{
    if (!(r > 1.0 && r < 2.0))
        throw std::invalid_argument("domination probe needs 1 < r < 2");
    const SpectralOperator& op = frame.op();
    const Field& h = frame.h();
    const SquareFunctionConfig cfg(2.0 / r);

    DominationSample out;
    out.lhs = stack.square_function(apply_multiplier(op, m, f).cwiseQuotient(h));
    std::tie(out.j_lo, out.j_hi) = cfg.window_blocks(op);
    Field acc = Field::Zero(f.size());
    for (int j = out.j_lo; j <= out.j_hi; ++j) {
        const Field u = lp_piece(op, cfg, j, f).cwiseQuotient(h);
        acc += double_maximal(op.grid(), frame.nu(), u, r).array().square().matrix();
    }
    out.rhs = acc.cwiseSqrt();
    return out;
}

nlohmann::json DecayReport::to_json() const
{
    return {{"ok", ok},         {"gamma", gamma},   {"r2", r2},
            {"offset", offset}, {"failure", failure}, {"points", points.size()}};
}

std::string DecayReport::to_csv() const
{
    std::ostringstream out;
    out << "j,k,k_scale,distance,ratio\n";
    for (const auto& p : points)
        out << p.j << ',' << p.k << ',' << format_number(p.k_scale) << ',' << format_number(p.distance) << ','
            << format_number(p.ratio) << '\n';
    return out.str();
}

DecayReport decay_probe(const DoobFrame& frame, const MartingaleStack& stack, std::pair<int, int> j_range,
                        std::pair<int, int> k_range, const std::vector<Field>& family, double r)
{
    const SpectralOperator& op = frame.op();
    const WeightedGrid& grid = op.grid();
    const Field& h = frame.h();
    const Field& lam = op.eigenvalues();
    if (k_range.first < stack.k_min() || k_range.second >= stack.k_max())
        throw std::out_of_range("decay probe levels must leave room for k+1");

    std::vector<Field> coeffs, rhs;
    for (const auto& f : family) {
        coeffs.push_back(op.coefficients(f));
        rhs.push_back(double_maximal(grid, frame.nu(), f.cwiseQuotient(h), r));
    }

    DecayReport rep;
    for (int j = j_range.first; j <= j_range.second; ++j) {
        const double t = std::exp2(-2.0 * j);
        if (t < op.t_min() || t > op.t_max())
            continue;
        Field sym(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i)
            sym[i] = t * lam[i] * std::exp(-t * lam[i]);
        sym = flush_negligible(std::move(sym));
        std::vector<Field> g;
        for (const auto& c : coeffs)
            g.push_back(op.synthesize(sym.cwiseProduct(c)).cwiseQuotient(h));

        for (int k = k_range.first; k <= k_range.second; ++k) {
            const double side = stack.dyadic().side_length(k);
            // The cube through x must stay clear of the absorbing ends by several heat lengths.
            const double margin = side + 8.0 * std::sqrt(t);
            double best = 0.0;
            for (std::size_t fi = 0; fi < g.size(); ++fi) {
                const Field lhs = cube_sup(stack, k, stack.difference(k, g[fi]));
                for (int x = 0; x < grid.size(); ++x) {
                    if (grid.distance_to_far_boundary(x) < margin || !(rhs[fi][x] > 0.0))
                        continue;
                    best = std::max(best, lhs[x] / rhs[fi][x]);
                }
            }
            DecayPoint p;
            p.j = j;
            p.k = k;
            p.k_scale = -std::log2(side);
            p.distance = std::abs(j - p.k_scale);
            p.ratio = best;
            rep.points.push_back(p);
        }
    }

    std::vector<const DecayPoint*> usable;
    double lo = 0.0, hi = 0.0;
    for (const auto& p : rep.points)
        if (p.ratio > 0.0) {
            usable.push_back(&p);
            lo = lo == 0.0 ? p.ratio : std::min(lo, p.ratio);
            hi = std::max(hi, p.ratio);
        }
    if (usable.size() < 4) {
        rep.failure = "fewer than four usable (j,k) pairs";
        return rep;
    }
    if (hi < 10.0 * lo) {
        rep.failure = "insufficient dynamic range";
        return rep;
    }
    // 2^{−j} and the cube side correspond only up to a constant factor, so the
    // peak sits at k̃ = j + c for some c; profile it out over a fixed grid.
    LineFit best;
    best.r2 = -1.0;
    for (int step = -12; step <= 12; ++step) {
        const double c = 0.25 * step;
        std::vector<double> x, y;
        for (const DecayPoint* p : usable) {
            x.push_back(std::abs(p->j - p->k_scale + c));
            y.push_back(std::log2(p->ratio));
        }
        const LineFit fit = fit_line(x, y);
        if (fit.r2 > best.r2) {
            best = fit;
            rep.offset = c;
        }
    }
    for (auto& p : rep.points)
        p.distance = std::abs(p.j - p.k_scale + rep.offset);
    rep.gamma = -best.slope;
    rep.r2 = best.r2;
    rep.ok = true;
    return rep;
}

}  // namespace smlab
