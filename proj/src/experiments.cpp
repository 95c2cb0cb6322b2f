#include "smlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace smlab {

int SignSampler::draw(std::uint64_t i, std::uint64_t s) const
{
    const std::uint64_t z = mix_seed(mix_seed(base_ ^ mix_seed(i)) + s);
    return (z >> 63) ? 1 : -1;
}

std::vector<double> dilation_grid(const SpectralOperator& op, int per_octave, double pad_octaves)
{
    if (per_octave < 1)
        throw std::invalid_argument("need at least one dilation per octave");
    if (!(op.lambda_min() > 0.0))
        throw std::invalid_argument("dilation grid needs a strictly positive spectrum");
    const double lo = std::log2(1.0 / op.lambda_max()) - pad_octaves;
    const double hi = std::log2(1.0 / op.lambda_min()) + pad_octaves;
    const int j_lo = static_cast<int>(std::floor(lo * per_octave));
    const int j_hi = static_cast<int>(std::ceil(hi * per_octave));
    std::vector<double> t;
    for (int j = j_lo; j <= j_hi; ++j)
        t.push_back(std::exp2(static_cast<double>(j) / per_octave));
    return t;
}

std::vector<double> dyadic_grid(const SpectralOperator& op, double pad_octaves)
{
    return dilation_grid(op, 1, pad_octaves);
}

namespace {

// Index range of modes where |sym| is not negligible; sym is often a narrow band.
std::pair<int, int> active_modes(const Field& sym)
{
    const double peak = sym.cwiseAbs().maxCoeff();
    int lo = 0, hi = static_cast<int>(sym.size()) - 1;
    if (peak == 0.0)
        return {1, 0};
    const double cut = 1e-17 * peak;
    while (lo < hi && std::abs(sym[lo]) <= cut)
        ++lo;
    while (hi > lo && std::abs(sym[hi]) <= cut)
        --hi;
    return {lo, hi};
}

// V·diag(sym)·C restricted to the active modes.
Eigen::MatrixXd apply_band(const SpectralOperator& op, const Field& sym, const Eigen::MatrixXd& C)
{
    auto [lo, hi] = active_modes(sym);
    if (hi < lo)
        return Eigen::MatrixXd::Zero(op.size(), C.cols());
    const int n = hi - lo + 1;
    return op.eigenvectors().middleCols(lo, n) * (sym.segment(lo, n).asDiagonal() * C.middleRows(lo, n));
}

Field dilated_symbol(const SpectralOperator& op, const Symbol& m, double t)
{
    const Field& lam = op.eigenvalues();
    Field out(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        out[i] = m(t * lam[i]);
    return out;
}

}  // namespace

Eigen::MatrixXd maximal_single(const SpectralOperator& op, const Symbol& m, const Eigen::MatrixXd& F,
                               const std::vector<double>& t_grid)
{
    const Eigen::MatrixXd C = op.coefficients(F);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(F.rows(), F.cols());
    for (double t : t_grid)
        out = out.cwiseMax(apply_band(op, dilated_symbol(op, m, t), C).cwiseAbs());
    return out;
}

Field maximal_single(const SpectralOperator& op, const Symbol& m, const Field& f, const std::vector<double>& t_grid)
{
    return maximal_single(op, m, Eigen::MatrixXd(f), t_grid).col(0);
}

Field maximal_dyadic(const SpectralOperator& op, const Symbol& m, const Field& f, double pad_octaves)
{
    return maximal_single(op, m, f, dyadic_grid(op, pad_octaves));
}

Field maximal_family(const SpectralOperator& op, const std::vector<Symbol>& ms, const Field& f)
{
    const Field c = op.coefficients(f);
    Field out = Field::Zero(f.size());
    for (const auto& m : ms)
        out = out.cwiseMax(op.synthesize(symbol_values(op, m).cwiseProduct(c)).cwiseAbs());
    return out;
}

double lp_norm(const Field& g, const Field& cell, double p)
{
    if (std::isinf(p))
        return g.cwiseAbs().maxCoeff();
    return std::pow(g.cwiseAbs().array().pow(p).matrix().dot(cell), 1.0 / p);
}

Eigen::MatrixXd test_family(const SpectralOperator& op, std::uint64_t seed, int gaussians, int bumps)
{
    const int M = op.size();
    const auto& grid = op.grid();
    const Field& lam = op.eigenvalues();
    Eigen::MatrixXd F(M, gaussians + bumps);
    for (int i = 0; i < gaussians; ++i) {
        std::mt19937_64 rng(mix_seed(seed + static_cast<std::uint64_t>(i)));
        std::normal_distribution<double> z;
        Field c(M);
        for (int m = 0; m < M; ++m)
            c[m] = z(rng) * std::exp(-op.t_min() * lam[m]);
        F.col(i) = op.synthesize(c);
    }
    const double lo = grid.node(0), hi = grid.node(M - 1);
    for (int i = 0; i < bumps; ++i) {
        std::mt19937_64 rng(mix_seed(seed + static_cast<std::uint64_t>(gaussians + i)));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double center = lo + (0.2 + 0.6 * u(rng)) * (hi - lo);
        const double w_lo = std::log(2.0 * grid.spacing()), w_hi = std::log(grid.x_max() / 8.0);
        const double width = std::exp(w_lo + u(rng) * (w_hi - w_lo));
        for (int x = 0; x < M; ++x) {
            const double d = (grid.node(x) - center) / width;
            F(x, gaussians + i) = std::exp(-0.5 * d * d);
        }
    }
    return F;
}

RandomSymbolGenerator::RandomSymbolGenerator(double s, int k_lo, int k_hi, std::uint64_t base_seed, int modes)
    : s_(s), k_lo_(k_lo), k_hi_(k_hi), modes_(modes), seed_(base_seed)
{
    if (k_hi < k_lo || modes < 1)
        throw std::invalid_argument("random symbol generator needs a window and at least one mode");
}

NamedSymbol RandomSymbolGenerator::raw(int index) const
{
    std::mt19937_64 rng(mix_seed(seed_ * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(index)));
    std::normal_distribution<double> z;
    const int K = k_hi_ - k_lo_ + 1;
    std::vector<double> a(static_cast<std::size_t>(K * modes_)), b(a.size());
    for (int k = 0; k < K; ++k)
        for (int n = 0; n < modes_; ++n) {
            const double xi = M_PI * n;
            const double env = std::pow(1.0 + xi * xi, -s_ / 2.0 - 0.5);
            a[k * modes_ + n] = env * z(rng);
            b[k * modes_ + n] = n == 0 ? 0.0 : env * z(rng);
        }

    const int k_lo = k_lo_, k_hi = k_hi_, modes = modes_;
    // Value and d/dv of one windowed piece at offset v ∈ (−1,1).
    auto piece = [=](int k, double v, double* dv) {
        const double q = 1.0 - v * v;
        const double B = std::exp(1.0 - 1.0 / q);
        const double dB = B * (-2.0 * v / (q * q));
        double T = 0.0, dT = 0.0;
        for (int n = 0; n < modes; ++n) {
            const double w = M_PI * n;
            const double ca = a[(k - k_lo) * modes + n], cb = b[(k - k_lo) * modes + n];
            T += ca * std::cos(w * v) + cb * std::sin(w * v);
            dT += w * (-ca * std::sin(w * v) + cb * std::cos(w * v));
        }
        if (dv)
            *dv = dB * T + B * dT;
        return B * T;
    };
    auto eval = [=](double l, bool derivative) {
        if (!(l > 0.0))
            return 0.0;
        const double u = std::log2(l);
        const int base = static_cast<int>(std::floor(u));
        double val = 0.0, der = 0.0;
        for (int k = std::max(k_lo, base - 1); k <= std::min(k_hi, base + 1); ++k) {
            const double v = u - k;
            if (std::abs(v) >= 1.0)
                continue;
            double d = 0.0;
            val += piece(k, v, &d);
            der += d;
        }
        // λ d/dλ = (1/ln 2) d/du
        return derivative ? der / std::log(2.0) : val;
    };

    NamedSymbol s;
    s.name = "random:" + std::to_string(index);
    s.m = [eval](double l) -> std::complex<double> { return eval(l, false); };
    s.lambda_dm = [eval](double l) -> std::complex<double> { return eval(l, true); };
    s.m0 = 0.0;
    return s;
}

double RandomSymbolGenerator::raw_sup(int index) const
{
    const NamedSymbol s = raw(index);
    double best = 0.0;
    for (int k = k_lo_ - 1; k <= k_hi_ + 1; ++k)
        best = std::max(best, sobolev_norm(s.m, k, SobolevExponent::two, s_));
    return best;
}

NamedSymbol RandomSymbolGenerator::make(int index) const
{
    const double sup = raw_sup(index);
    if (!(sup > 0.0))
        throw std::runtime_error("random symbol vanished");
    NamedSymbol s = scale_symbol(raw(index), 1.0 / sup);
    s.name = "random:" + std::to_string(index);
    return s;
}

nlohmann::json GrowthReport::to_json() const
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : rungs)
        rows.push_back({{"N", r.N},
                        {"A", r.A},
                        {"A_over_sqrt_log", r.normalized},
                        {"eps_N", r.eps_N},
                        {"N_exp_minus_inv_eps2", r.bookkeeping},
                        {"N_over_1_plus_N", r.closed_form}});
    return {{"rungs", rows},
            {"fit", {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}}},
            {"monotone", monotone},
            {"last_three_spread", last_three_spread}};
}

std::string GrowthReport::to_csv() const
{
    std::ostringstream out;
    out << "N,A,A_over_sqrt_log,eps_N,N_exp_minus_inv_eps2,N_over_1_plus_N\n";
    for (const auto& r : rungs)
        out << r.N << ',' << format_number(r.A) << ',' << format_number(r.normalized) << ','
            << format_number(r.eps_N) << ',' << format_number(r.bookkeeping) << ',' << format_number(r.closed_form)
            << '\n';
    return out.str();
}

GrowthReport growth_experiment(const SpectralOperator& op, const GrowthOptions& opt)
{
    if (opt.N_ladder.empty())
        throw std::invalid_argument("empty N ladder");
    std::vector<int> ladder = opt.N_ladder;
    std::sort(ladder.begin(), ladder.end());
    if (ladder.front() < 1)
        throw std::invalid_argument("N must be at least 1");

    const auto& cell = op.grid().quad_weights();
    const Eigen::MatrixXd F = test_family(op, opt.base_seed, opt.gaussians, opt.bumps);
    const Eigen::MatrixXd C = op.coefficients(F);
    std::vector<double> f_norm(F.cols());
    for (Eigen::Index j = 0; j < F.cols(); ++j)
        f_norm[j] = lp_norm(F.col(j), cell, opt.p);

    const int k_lo = static_cast<int>(std::floor(std::log2(op.lambda_min())));
    const int k_hi = static_cast<int>(std::ceil(std::log2(op.lambda_max())));
    const RandomSymbolGenerator gen(opt.s, k_lo, k_hi, opt.base_seed);

    GrowthReport rep;
    Eigen::MatrixXd running = Eigen::MatrixXd::Zero(F.rows(), F.cols());
    std::size_t next = 0;
    for (int i = 1; i <= ladder.back(); ++i) {
        const NamedSymbol sym = gen.make(i - 1);
        rep.member_scale.push_back(1.0 / gen.raw_sup(i - 1));
        running = running.cwiseMax(apply_band(op, symbol_values(op, sym.real()), C).cwiseAbs());
        while (next < ladder.size() && ladder[next] == i) {
            GrowthRung r;
            r.N = i;
            for (Eigen::Index j = 0; j < F.cols(); ++j)
                r.A = std::max(r.A, lp_norm(running.col(j), cell, opt.p) / f_norm[j]);
            const double L = std::log1p(static_cast<double>(i));
            r.normalized = r.A / std::sqrt(L);
            r.eps_N = 1.0 / std::sqrt(L);
            r.bookkeeping = i * std::exp(-1.0 / (r.eps_N * r.eps_N));
            r.closed_form = static_cast<double>(i) / (1.0 + i);
            rep.rungs.push_back(r);
            ++next;
        }
    }

    std::vector<double> x, y;
    for (std::size_t k = 0; k < rep.rungs.size(); ++k) {
        x.push_back(std::sqrt(std::log1p(static_cast<double>(rep.rungs[k].N))));
        y.push_back(rep.rungs[k].A);
        if (k > 0 && rep.rungs[k].A < rep.rungs[k - 1].A)
            rep.monotone = false;
    }
    if (x.size() >= 2)
        rep.fit = fit_line(x, y);
    if (rep.rungs.size() >= 3) {
        double lo = INFINITY, hi = 0.0;
        for (std::size_t k = rep.rungs.size() - 3; k < rep.rungs.size(); ++k) {
            lo = std::min(lo, rep.rungs[k].normalized);
            hi = std::max(hi, rep.rungs[k].normalized);
        }
        rep.last_three_spread = (hi - lo) / lo;
    }
    return rep;
}

nlohmann::json CarberyReport::to_json() const
{
    return {{"carbery_norm", norm},
            {"symbol_decays", decays},
            {"c_mu", calibration.c_mu},
            {"c_mu_theory", calibration.theory},
            {"c_mu_reference", calibration.reference},
            {"c_mu_fit_residual", calibration.fit_residual},
            {"sup_ratio", sup_ratio},
            {"sup_ratio_over_c_mu", calibration.c_mu > 0.0 ? sup_ratio / calibration.c_mu : 0.0},
            {"excluded_nodes", excluded}};
}

std::string CarberyReport::to_csv() const
{
    std::ostringstream out;
    out << "member,sup_ratio\n";
    for (std::size_t i = 0; i < member_sup.size(); ++i)
        out << i << ',' << format_number(member_sup[i]) << '\n';
    return out.str();
}

CarberyReport carbery_domination(const SpectralOperator& op, const NamedSymbol& m, const Eigen::MatrixXd& F,
                                 const CarberyOptions& opt)
{
    CarberyReport rep;
    rep.calibration = calibrate_c_mu(opt.mu);
    const CarberyNorm cn = carbery_norm(m.m, opt.mu);
    rep.norm = cn.norm;
    rep.decays = cn.decays;

    const Eigen::MatrixXd lhs = maximal_single(op, m.real(), F, dilation_grid(op, opt.per_octave, opt.pad_octaves));
    const Eigen::MatrixXd G = stein_square(op, opt.mu - 1.0, F, stein_r_grid(op, opt.r_per_octave)) *
                              (std::sqrt(2.0) / (2.0 * opt.mu));
    const Eigen::MatrixXd den = G * rep.norm;
    const double floor = opt.denominator_floor * den.maxCoeff();
    rep.member_sup.assign(F.cols(), 0.0);
    for (Eigen::Index j = 0; j < F.cols(); ++j)
        for (Eigen::Index x = 0; x < F.rows(); ++x) {
            if (!(den(x, j) > floor)) {
                ++rep.excluded;
                continue;
            }
            rep.member_sup[j] = std::max(rep.member_sup[j], lhs(x, j) / den(x, j));
        }
    for (double v : rep.member_sup)
        rep.sup_ratio = std::max(rep.sup_ratio, v);
    return rep;
}

ReconstructionCheck reconstruction_check(const NamedSymbol& m, double mu, double c_mu, const std::vector<double>& at)
{
    const FractionalDerivative d = fractional_derivative(m.m, mu);
    ReconstructionCheck out;
    double peak = 0.0, worst = 0.0;
    for (double l : at) {
        const double v = m.m(l).real();
        const double r = reconstruct(d, c_mu, l);
        out.lambdas.push_back(l);
        out.values.push_back(v);
        out.reconstructed.push_back(r);
        peak = std::max(peak, std::abs(v));
        worst = std::max(worst, std::abs(r - v));
    }
    out.max_relative = peak > 0.0 ? worst / peak : worst;
    return out;
}

nlohmann::json ReductionReport::to_json() const
{
    return {{"p", p},
            {"exponent_value_term", exponent_value},
            {"exponent_derivative_term", exponent_derivative},
            {"constant", constant},
            {"member_constant", member_constant},
            {"max_derivative_term", max_derivative_term}};
}

ReductionReport dyadic_reduction_probe(const SpectralOperator& op, const NamedSymbol& m, const Eigen::MatrixXd& F,
                                       const ReductionOptions& opt)
{
    if (!(opt.p > 1.0))
        throw std::invalid_argument("reduction probe needs p > 1");
    const double p = opt.p, p_dual = p / (p - 1.0);
    ReductionReport rep;
    rep.p = p;
    rep.exponent_value = 1.0 / (p * p_dual);
    rep.exponent_derivative = 1.0 / (p * p);

    const Symbol mv = m.real(), md = m.real_lambda_dm();
    const Eigen::MatrixXd C = op.coefficients(F);
    const auto octaves = dyadic_grid(op, opt.pad_octaves);
    const Eigen::Index M = F.rows(), J = F.cols();
    Eigen::MatrixXd sup_all = Eigen::MatrixXd::Zero(M, J), sup_dyad = sup_all, sup_term = sup_all;

    std::vector<double> tau(opt.per_octave + 1);
    for (int j = 0; j <= opt.per_octave; ++j)
        tau[j] = std::exp2(static_cast<double>(j) / opt.per_octave);

    for (double base : octaves) {
        Eigen::MatrixXd I1 = Eigen::MatrixXd::Zero(M, J), I2 = I1;
        Eigen::MatrixXd prev_v, prev_d;
        for (int j = 0; j <= opt.per_octave; ++j) {
            const double t = base * tau[j];
            const Eigen::MatrixXd V = apply_band(op, dilated_symbol(op, mv, t), C).cwiseAbs();
            const Eigen::MatrixXd D = apply_band(op, dilated_symbol(op, md, t), C).cwiseAbs();
            sup_all = sup_all.cwiseMax(V);
            if (j == 0)
                sup_dyad = sup_dyad.cwiseMax(V);
            const Eigen::MatrixXd Vp = V.array().pow(p), Dp = D.array().pow(p);
            if (j > 0) {
                const double w = 0.5 * (tau[j] - tau[j - 1]);
                I1 += w * (Vp + prev_v);
                I2 += w * (Dp + prev_d);
            }
            prev_v = Vp;
            prev_d = Dp;
        }
        const Eigen::MatrixXd term =
            (I1.array().pow(rep.exponent_value) * I2.array().pow(rep.exponent_derivative)).matrix();
        sup_term = sup_term.cwiseMax(term);
    }
    // The last octave edge is itself a dyadic point.
    sup_dyad = sup_dyad.cwiseMax(
        apply_band(op, dilated_symbol(op, mv, octaves.back() * 2.0), C).cwiseAbs());

    rep.max_derivative_term = sup_term.maxCoeff();
    rep.member_constant.assign(static_cast<std::size_t>(J), 0.0);
    const double scale = sup_all.maxCoeff();
    for (Eigen::Index j = 0; j < J; ++j)
        for (Eigen::Index x = 0; x < M; ++x) {
            const double den = sup_dyad(x, j) + sup_term(x, j);
            if (den > 1e-12 * scale)
                rep.member_constant[j] = std::max(rep.member_constant[j], sup_all(x, j) / den);
        }
    for (double c : rep.member_constant)
        rep.constant = std::max(rep.constant, c);
    return rep;
}

nlohmann::json FsReport::to_json() const
{
    return {{"ratio", ratio}, {"member_ratio", member_ratio}, {"skipped", skipped}};
}

FsReport fefferman_stein_probe(const WeightedGrid& grid, const Measure& nu, const Field& weight,
                               const std::vector<Eigen::MatrixXd>& family, double r, double p)
{
    if (!(r >= 1.0) || !(p > r))
        throw std::invalid_argument("Fefferman-Stein probe needs 1 <= r < p");
    const Field cell = nu.cell.cwiseProduct(weight);
    FsReport rep;
    for (const auto& Fm : family) {
        Field num = Field::Zero(Fm.rows()), den = Field::Zero(Fm.rows());
        for (Eigen::Index j = 0; j < Fm.cols(); ++j) {
            num += double_maximal(grid, nu, Fm.col(j), r).array().square().matrix();
            den += Fm.col(j).array().square().matrix();
        }
        const double d = lp_norm(den.cwiseSqrt(), cell, p);
        if (!(d > 0.0)) {
            ++rep.skipped;
            continue;
        }
        rep.member_ratio.push_back(lp_norm(num.cwiseSqrt(), cell, p) / d);
        rep.ratio = std::max(rep.ratio, rep.member_ratio.back());
    }
    return rep;
}

}  // namespace smlab
