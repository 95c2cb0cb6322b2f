#include "smlab/calculus.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smlab {

Field symbol_values(const SpectralOperator& op, const Symbol& m)
{
    const Field& lam = op.eigenvalues();
    Field out(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        out[i] = m(lam[i]);
        if (!std::isfinite(out[i]))
            throw std::domain_error("symbol is undefined at eigenvalue " + format_number(lam[i]));
    }
    return flush_negligible(std::move(out));
}

Eigen::MatrixXd apply_to_coefficients(const SpectralOperator& op, const Field& sym, const Eigen::MatrixXd& C)
{
    return op.eigenvectors() * (sym.asDiagonal() * C);
}

Field apply_multiplier(const SpectralOperator& op, const Symbol& m, const Field& f)
{
    return op.synthesize(symbol_values(op, m).cwiseProduct(op.coefficients(f)));
}

Eigen::MatrixXd apply_multiplier(const SpectralOperator& op, const Symbol& m, const Eigen::MatrixXd& F)
{
    return apply_to_coefficients(op, symbol_values(op, m), op.coefficients(F));
}

double bochner_riesz_symbol(double lambda, double R, double delta)
{
    const double u = 1.0 - lambda / (R * R);
    if (u <= 0.0)
        return 0.0;
    return delta == 0.0 ? 1.0 : std::pow(u, delta);
}

Field bochner_riesz(const SpectralOperator& op, double R, double delta, const Field& f)
{
    if (!(delta > -1.0) || !(R > 0.0))
        throw std::invalid_argument("Bochner-Riesz needs delta > -1 and R > 0");
    return apply_multiplier(op, [&](double l) { return bochner_riesz_symbol(l, R, delta); }, f);
}

namespace {

// −b''(t) for the standard bump; b'' = b·(6t⁴ − 2)/(1 − t²)⁴.
double minus_bump_second(double t)
{
    const double q = 1.0 - t * t;
    if (q <= 0.0)
        return 0.0;
    const double b = std::exp(-1.0 / q);
    return -b * (6.0 * t * t * t * t - 2.0) / (q * q * q * q);
}

struct PsiTable {
    double h = 1.0 / 1024.0;  // sample step of ψ
    double dxi = 0.0;
    double Z = 1.0;
    std::vector<double> values;  // Ψ(j·dxi), already divided by Z
    double argmax = 0.0;

    PsiTable()
    {
        const int n = (1 << 19) + 1;
        std::vector<double> buf(n, 0.0);
        for (int k = 0; k < n && k * h < 1.0; ++k)
            buf[k] = minus_bump_second(k * h);
        // DCT-I is the trapezoid rule for 2∫₀^T ψ(t)cos(ξt)dt at ξ_j = πj/((n−1)h).
        fftw_plan plan = fftw_plan_r2r_1d(n, buf.data(), buf.data(), FFTW_REDFT00, FFTW_ESTIMATE);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
        dxi = M_PI / ((n - 1) * h);
        values.resize(n);
        for (int j = 0; j < n; ++j)
            values[j] = h * buf[j];
        double cal = 0.0;
        for (int j = 1; j < n; ++j)
            cal += values[j] * values[j] / (j * dxi) * dxi;
        Z = std::sqrt(cal);
        double best = 0.0;
        for (int j = 0; j < n; ++j) {
            values[j] /= Z;
            if (std::abs(values[j]) > best) {
                best = std::abs(values[j]);
                argmax = j * dxi;
            }
        }
    }

    double operator()(double xi) const
    {
        xi = std::abs(xi);
        const double pos = xi / dxi;
        const auto i = static_cast<std::size_t>(pos);
        if (i + 2 >= values.size())
            return 0.0;
        // Catmull–Rom between samples i and i+1.
        const double u = pos - i;
        const double p0 = i > 0 ? values[i - 1] : values[1];  // Ψ is even
        const double p1 = values[i], p2 = values[i + 1], p3 = values[i + 2];
        return p1 + 0.5 * u * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)));
    }
};

const PsiTable& psi_table()
{
    static const PsiTable table;
    return table;
}

}  // namespace

SquareFunctionConfig::SquareFunctionConfig(double lambda_exp, double dimension, int points_per_block)
    : lambda_exp_(lambda_exp), dimension_(dimension), per_block_(points_per_block)
{
    if (!(lambda_exp > 1.0))
        throw std::invalid_argument("square-function weight exponent must exceed 1");
    if (points_per_block < 8)
        throw std::invalid_argument("need at least 8 scales per dyadic block");
}

double SquareFunctionConfig::psi(double t)
{
    return minus_bump_second(t) / psi_table().Z;
}

double SquareFunctionConfig::Psi(double xi)
{
    return psi_table()(xi);
}

double SquareFunctionConfig::psi_integral()
{
    // ψ is flat to all orders at ±1, so the trapezoid rule converges spectrally.
    const int n = 1 << 14;
    double sum = 0.0;
    for (int k = 1; k < n; ++k)
        sum += psi(-1.0 + 2.0 * k / n);
    return sum * 2.0 / n;
}

double SquareFunctionConfig::calderon_constant()
{
    const auto& tab = psi_table();
    // Independent of the normalisation loop: Simpson in log s.
    const double lo = std::log(1e-4), hi = std::log(tab.dxi * (tab.values.size() - 3));
    const int n = 200000;
    const double step = (hi - lo) / n;
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double s = std::exp(lo + k * step);
        const double v = tab(s);
        const double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        sum += wgt * v * v;
    }
    return sum * step / 3.0;
}

double SquareFunctionConfig::Psi_argmax()
{
    return psi_table().argmax;
}

std::pair<int, int> SquareFunctionConfig::window_blocks(const SpectralOperator& op) const
{
    const double lo = 2.0 * op.grid().spacing(), hi = op.grid().x_max() / 8.0;
    const int j_lo = static_cast<int>(std::ceil(-std::log2(hi) - 1e-12));
    const int j_hi = static_cast<int>(std::floor(-std::log2(lo) + 1e-12)) - 1;
    return {j_lo, j_hi};
}

std::pair<int, int> SquareFunctionConfig::spectral_blocks(const SpectralOperator& op) const
{
    // |Ψ(s)|²/s carries < 1e−6 of its mass outside [1e−2, 400].
    const double t_lo = 1e-2 / std::sqrt(op.lambda_max());
    const double t_hi = 400.0 / std::sqrt(std::max(op.lambda_min(), 1e-300));
    return {static_cast<int>(std::floor(-std::log2(t_hi))), static_cast<int>(std::ceil(-std::log2(t_lo)))};
}

LogGrid SquareFunctionConfig::block_grid(int j) const
{
    return log_grid(std::exp2(-j - 1), std::exp2(-j), per_block_);
}

namespace {

// Σ_y (t/(t+|x−y|))^e a_y / μ(B(x,t)) at every x.
Field weighted_average(const WeightedGrid& grid, const Field& a, double t, double e)
{
    const int M = grid.size();
    const double dx = grid.spacing();
    std::vector<double> ker(M);
    for (int d = 0; d < M; ++d)
        ker[d] = std::pow(t / (t + d * dx), e);
    const PrefixSum mass(grid.quad_weights());
    Field out(M);
    for (int x = 0; x < M; ++x) {
        double s = 0.0;
        for (int y = 0; y < M; ++y)
            s += ker[std::abs(x - y)] * a[y];
        auto [lo, hi] = grid.ball_indices(grid.node(x), t);
        out[x] = s / mass.sum(lo, hi);
    }
    return out;
}

Field psi_symbol(const SpectralOperator& op, double t)
{
    const Field& lam = op.eigenvalues();
    Field out(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        out[i] = SquareFunctionConfig::Psi(t * std::sqrt(lam[i]));
    return out;
}

}  // namespace

Field lp_piece(const SpectralOperator& op, const SquareFunctionConfig& cfg, int j, const Field& f)
{
    auto [w_lo, w_hi] = cfg.window_blocks(op);
    if (j < w_lo || j > w_hi)
        throw std::domain_error("dyadic block " + std::to_string(j) + " lies outside the diffusion window");
    const Field c = op.coefficients(f);
    const Field& q = op.grid().quad_weights();
    const LogGrid tg = cfg.block_grid(j);
    Field acc = Field::Zero(op.size());
    for (double t : tg.points) {
        const Field g = op.synthesize(psi_symbol(op, t).cwiseProduct(c));
        const Field a = g.array().square().matrix().cwiseProduct(q);
        acc += tg.log_weight * weighted_average(op.grid(), a, t, cfg.lambda_exp() * cfg.dimension());
    }
    return acc.cwiseSqrt();
}

Field g_function(const SpectralOperator& op, const SquareFunctionConfig& cfg, const Field& f, int j_lo, int j_hi)
{
    Field acc = Field::Zero(op.size());
    for (int j = j_lo; j <= j_hi; ++j)
        acc += lp_piece(op, cfg, j, f).array().square().matrix();
    return acc.cwiseSqrt();
}

Field g_function(const SpectralOperator& op, const SquareFunctionConfig& cfg, const Field& f)
{
    auto [lo, hi] = cfg.window_blocks(op);
    return g_function(op, cfg, f, lo, hi);
}

double vertical_square_norm(const SpectralOperator& op, const SquareFunctionConfig& cfg, const Field& f, int j_lo,
                            int j_hi)
{
    const Field c = op.coefficients(f);
    const Field& q = op.grid().quad_weights();
    double total = 0.0;
    for (int j = j_lo; j <= j_hi; ++j) {
        const LogGrid tg = cfg.block_grid(j);
        for (double t : tg.points) {
            const Field g = op.synthesize(psi_symbol(op, t).cwiseProduct(c));
            total += tg.log_weight * g.array().square().matrix().dot(q);
        }
    }
    return total;
}

double stein_integrand_symbol(double lambda, double R, double delta)
{
    const double u = lambda / (R * R);
    if (u >= 1.0)
        return 0.0;
    const double tail = delta == 0.0 ? 1.0 : std::pow(1.0 - u, delta);
    return (delta + 1.0) * 2.0 * u * tail;
}

double stein_constant_sq(double delta)
{
    if (!(delta > -0.5))
        throw std::invalid_argument("Stein square function needs delta > -1/2");
    boost::math::quadrature::exp_sinh<double> integrator;
    auto integrand = [delta](double u) {
        const double g = stein_integrand_symbol(1.0, u, delta);
        return g * g / u;
    };
    return integrator.integrate(integrand, 1.0, std::numeric_limits<double>::infinity());
}

LogGrid stein_r_grid(const SpectralOperator& op, int per_octave)
{
    return log_grid(std::sqrt(op.lambda_min()) / 4.0, 64.0 * std::sqrt(op.lambda_max()), per_octave);
}

Eigen::MatrixXd stein_square(const SpectralOperator& op, double delta, const Eigen::MatrixXd& F, const LogGrid& R_grid)
{
    if (!(delta > -0.5))
        throw std::invalid_argument("Stein square function needs delta > -1/2");
    const Eigen::MatrixXd C = op.coefficients(F);
    const Field& lam = op.eigenvalues();
    const Eigen::MatrixXd& V = op.eigenvectors();
    const int M = op.size();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(M, F.cols());
    for (double R : R_grid.points) {
        // Only modes with λ < R² contribute.
        int active = 0;
        while (active < M && lam[active] < R * R)
            ++active;
        if (active == 0)
            continue;
        Field sym(active);
        for (int m = 0; m < active; ++m)
            sym[m] = stein_integrand_symbol(lam[m], R, delta);
        const Eigen::MatrixXd Y = V.leftCols(active) * (sym.asDiagonal() * C.topRows(active));
        acc += R_grid.log_weight * Y.array().square().matrix();
    }
    return acc.cwiseSqrt();
}

Field stein_square(const SpectralOperator& op, double delta, const Field& f, const LogGrid& R_grid)
{
    return stein_square(op, delta, Eigen::MatrixXd(f), R_grid).col(0);
}

PlancherelReport plancherel_probe(const SpectralOperator& op, const std::vector<double>& R_sweep,
                                  const std::function<double(double)>& profile)
{
    auto shape = profile ? profile : [](double u) { return u < 1.0 ? 1.0 - u * u : 0.0; };
    // ‖m(R·)‖ on [0,1] by Simpson, and its sup on the same nodes.
    const int n = 4000;
    double l2 = 0.0, linf = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double v = shape(static_cast<double>(k) / n);
        const double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        l2 += wgt * v * v;
        linf = std::max(linf, std::abs(v));
    }
    l2 /= 3.0 * n;

    const auto& grid = op.grid();
    const auto& V = op.eigenvectors();
    const Field& lam = op.eigenvalues();
    PlancherelReport rep;
    for (double R : R_sweep) {
        Field m2(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            const double v = shape(std::sqrt(lam[i]) / R);
            m2[i] = v * v;
        }
        // Rows well inside, away from the absorbing walls at the scale 1/R.
        const auto inner = interior_nodes(grid, 1.0 / (R * R), 1.0, 6.0);
        const int stride = std::max<int>(1, static_cast<int>(inner.size()) / 32);
        for (std::size_t k = 0; k < inner.size(); k += stride) {
            const int y = inner[k];
            const double lhs = V.row(y).array().square().matrix().dot(m2);
            const double ball = ball_measure(grid, grid.node(y), 1.0 / R);
            PlancherelRow row{R, grid.node(y), lhs, lhs * ball / l2, lhs * ball / (linf * linf)};
            rep.sup_q2 = std::max(rep.sup_q2, row.ratio_q2);
            rep.sup_qinf = std::max(rep.sup_qinf, row.ratio_qinf);
            rep.rows.push_back(row);
        }
    }
    return rep;
}

FieldPair pointwise_control_probe(const SpectralOperator& op, const SquareFunctionConfig& cfg, const Symbol& m,
                                  const Field& f, double t, int k_power, double s0)
{
    (void)cfg;
    const Field c = op.coefficients(f);
    const Field psi = psi_symbol(op, t);
    const Field mv = symbol_values(op, m);
    const Field& lam = op.eigenvalues();
    Field left(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        const double u = t * t * lam[i];
        left[i] = std::pow(u, k_power) * std::exp(-u) * psi[i] * mv[i];
    }
    FieldPair out;
    out.lhs = op.synthesize(flush_negligible(left.cwiseProduct(c))).cwiseAbs();
    const Field g = op.synthesize(psi.cwiseProduct(c));
    const Field a = g.array().square().matrix().cwiseProduct(op.grid().quad_weights());
    out.rhs = weighted_average(op.grid(), a, t, 2.0 * s0).cwiseSqrt();
    return out;
}

}  // namespace smlab
