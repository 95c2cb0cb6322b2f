#include "smlab/operator.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace smlab {

std::string OperatorSpec::name() const
{
    std::ostringstream out;
    switch (kind) {
    case OperatorKind::free_laplacian: out << "free_laplacian"; break;
    case OperatorKind::dirichlet_laplacian: out << "dirichlet_laplacian"; break;
    case OperatorKind::bessel: out << "bessel:" << format_number(alpha); break;
    case OperatorKind::inv_square: out << "inv_square:" << format_number(n) << ':' << format_number(gamma); break;
    }
    return out.str();
}

nlohmann::json OperatorSpec::to_json() const
{
    nlohmann::json j = {{"name", name()}};
    switch (kind) {
    case OperatorKind::free_laplacian: j["kind"] = "free_laplacian"; break;
    case OperatorKind::dirichlet_laplacian: j["kind"] = "dirichlet_laplacian"; break;
    case OperatorKind::bessel:
        j["kind"] = "bessel";
        j["alpha"] = alpha;
        break;
    case OperatorKind::inv_square:
        j["kind"] = "inv_square";
        j["n"] = n;
        j["gamma"] = gamma;
        break;
    }
    return j;
}

OperatorSpec OperatorSpec::from_json(const nlohmann::json& j)
{
    if (j.is_string())
        return parse(j.get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "free_laplacian")
        return free_laplacian();
    if (kind == "dirichlet_laplacian")
        return dirichlet_laplacian();
    if (kind == "bessel")
        return bessel(j.at("alpha").get<double>());
    if (kind == "inv_square")
        return inv_square(j.at("n").get<double>(), j.at("gamma").get<double>());
    throw std::invalid_argument("unknown operator kind '" + kind + "'");
}

OperatorSpec OperatorSpec::parse(const std::string& text)
{
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ':');)
        parts.push_back(item);
    if (parts.empty())
        throw std::invalid_argument("empty operator name");
    const std::string& kind = parts[0];
    auto num = [&](std::size_t i) {
        if (i >= parts.size())
            throw std::invalid_argument("operator '" + text + "' is missing a parameter");
        return std::stod(parts[i]);
    };
    if (kind == "free_laplacian")
        return free_laplacian();
    if (kind == "dirichlet_laplacian")
        return dirichlet_laplacian();
    if (kind == "bessel")
        return bessel(num(1));
    if (kind == "inv_square")
        return inv_square(num(1), num(2));
    throw std::invalid_argument("unknown operator '" + text + "'");
}

double inverse_square_tau(double n, double gamma)
{
    return 0.5 * (std::sqrt((n - 2.0) * (n - 2.0) + 4.0 * gamma) - (n - 2.0));
}

namespace {

void check_compatible(const OperatorSpec& spec, const WeightedGrid& grid)
{
    auto fail = [&](const std::string& why) { throw std::invalid_argument(spec.name() + ": " + why); };
    switch (spec.kind) {
    case OperatorKind::free_laplacian:
        if (grid.kind() == DomainKind::half_line_dirichlet)
            fail("free Laplacian needs a full_line or half_line_neumannlike grid");
        if (grid.alpha() != 0.0)
            fail("free Laplacian needs Lebesgue measure (alpha = 0)");
        break;
    case OperatorKind::dirichlet_laplacian:
        if (grid.kind() != DomainKind::half_line_dirichlet)
            fail("Dirichlet Laplacian needs a half_line_dirichlet grid");
        if (grid.alpha() != 0.0)
            fail("Dirichlet Laplacian needs Lebesgue measure (alpha = 0)");
        break;
    case OperatorKind::bessel:
        if (!grid.half_line())
            fail("Bessel operator lives on the half-line");
        if (std::abs(grid.alpha() - spec.alpha) > 1e-12)
            fail("grid density exponent must equal the Bessel alpha");
        break;
    case OperatorKind::inv_square:
        if (spec.gamma < 0.0)
            fail("gamma must be nonnegative");
        if (!grid.half_line())
            fail("radial inverse-square operator lives on the half-line");
        if (std::abs(grid.alpha() - (spec.n - 1.0)) > 1e-12)
            fail("grid density exponent must equal n - 1 (radial measure)");
        break;
    }
}

}  // namespace

OperatorPtr assemble(const OperatorSpec& spec, const WeightedGrid& grid)
{
    check_compatible(spec, grid);
    auto op = std::shared_ptr<SpectralOperator>(new SpectralOperator);
    op->grid_ = grid;
    op->spec_ = spec;

    const int M = grid.size();
    const double dx = grid.spacing();
    const double dx2 = dx * dx;
    const Field& w = grid.density();
    const double a = grid.alpha();
    // k[i] is the flux weight x^α on the face between node i−1 and node i;
    // on the half-line that face sits at (i + 1/2)Δx, face 0 being next to the origin.
    Field k = Field::Ones(M + 1);
    if (grid.half_line() && a != 0.0)
        for (int i = 0; i <= M; ++i)
            k[i] = std::pow((i + 0.5) * dx, a);
    if (grid.kind() == DomainKind::half_line_neumannlike)
        k[0] = 0.0;

    op->diag_.resize(M);
    op->upper_ = Field::Zero(M - 1);
    op->lower_ = Field::Zero(M - 1);
    Field sym_off(M);
    for (int i = 0; i < M; ++i) {
        double v = 0.0;
        if (spec.kind == OperatorKind::inv_square) {
            const double x = std::max(grid.node(i), 0.5 * dx);
            v = spec.gamma / (x * x);
        }
        op->diag_[i] = (k[i] + k[i + 1]) / (w[i] * dx2) + v;
        if (i + 1 < M) {
            op->upper_[i] = -k[i + 1] / (w[i] * dx2);
            op->lower_[i] = -k[i + 1] / (w[i + 1] * dx2);
            sym_off[i] = -k[i + 1] / (dx2 * std::sqrt(w[i] * w[i + 1]));
        }
    }

    // W^{1/2} A W^{-1/2} is symmetric tridiagonal; MRRR gets all pairs in O(M²).
    std::vector<double> d(op->diag_.data(), op->diag_.data() + M);
    std::vector<double> e(M, 0.0);
    for (int i = 0; i + 1 < M; ++i)
        e[i] = sym_off[i];
    std::vector<double> evals(M);
    Eigen::MatrixXd Z(M, M);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(M));
    lapack_int found = 0;
    lapack_logical tryrac = 1;
    const lapack_int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'A', M, d.data(), e.data(), 0.0, 0.0, 0, 0,
                                           &found, evals.data(), Z.data(), M, M, support.data(), &tryrac);
    if (info != 0 || found != M)
        throw std::runtime_error("tridiagonal eigensolver failed (info " + std::to_string(info) + ")");

    op->lambda_ = Eigen::Map<Field>(evals.data(), M);
    const double top = op->lambda_.maxCoeff();
    for (int m = 0; m < M; ++m) {
        if (op->lambda_[m] < -1e-8 * top)
            throw std::runtime_error("operator has a genuinely negative eigenvalue");
        op->lambda_[m] = std::max(op->lambda_[m], 0.0);
    }
    const Field sqrt_q = grid.quad_weights().cwiseSqrt();
    op->V_ = sqrt_q.cwiseInverse().asDiagonal() * Z;
    op->VtW_ = op->V_.transpose() * grid.quad_weights().asDiagonal();
    return op;
}

Field SpectralOperator::coefficients(const Field& f) const
{
    return VtW_ * f;
}

Eigen::MatrixXd SpectralOperator::coefficients(const Eigen::MatrixXd& F) const
{
    return VtW_ * F;
}

Field SpectralOperator::apply_generator(const Field& f) const
{
    const int M = size();
    Field out = diag_.cwiseProduct(f);
    for (int i = 0; i + 1 < M; ++i) {
        out[i] += upper_[i] * f[i + 1];
        out[i + 1] += lower_[i] * f[i];
    }
    return out;
}

Eigen::MatrixXd SpectralOperator::matrix() const
{
    const int M = size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M, M);
    for (int i = 0; i < M; ++i) {
        A(i, i) = diag_[i];
        if (i + 1 < M) {
            A(i, i + 1) = upper_[i];
            A(i + 1, i) = lower_[i];
        }
    }
    return A;
}

double SpectralOperator::t_min() const
{
    return 4.0 * grid_.spacing() * grid_.spacing();
}

double SpectralOperator::t_max() const
{
    const double q = grid_.x_max() / 8.0;
    return q * q;
}

Eigen::MatrixXd HeatKernelField::kernel(double t) const
{
    const auto& V = op_->eigenvectors();
    const Field decay = flush_negligible((-t * op_->eigenvalues().array()).exp().matrix());
    // Eigenvalues ascend, so the surviving modes are a prefix.
    Eigen::Index n = decay.size();
    while (n > 0 && decay[n - 1] == 0.0)
        --n;
    const auto Vn = V.leftCols(n);
    return Vn * decay.head(n).asDiagonal() * Vn.transpose();
}

Field HeatKernelField::row(double t, int i) const
{
    const auto& V = op_->eigenvectors();
    const Field decay = flush_negligible((-t * op_->eigenvalues().array()).exp().matrix());
    return V * decay.cwiseProduct(V.row(i).transpose());
}

Field HeatKernelField::apply(double t, const Field& f) const
{
    const Field decay = flush_negligible((-t * op_->eigenvalues().array()).exp().matrix());
    return op_->synthesize(decay.cwiseProduct(op_->coefficients(f)));
}

HeatKernelField heat_kernel(OperatorPtr op)
{
    return HeatKernelField(std::move(op));
}

DoobFrame doob_transform(const HeatKernelField& field, const Field& h)
{
    const auto& grid = field.op().grid();
    if (h.size() != grid.size())
        throw std::invalid_argument("Doob weight length does not match the grid");
    if ((h.array() <= 0.0).any() || !h.allFinite())
        throw std::invalid_argument("Doob weight h must be strictly positive");
    DoobFrame frame(field);
    frame.h_ = h;
    frame.nu_density_ = h.array().square().matrix().cwiseProduct(grid.density());
    frame.nu_ = nu_measure(grid, h);
    return frame;
}

Field DoobFrame::transformed_row(double t, int i) const
{
    return field_.row(t, i).cwiseQuotient(h_) / h_[i];
}

Field DoobFrame::k_row(double t, int i) const
{
    const auto& V = op().eigenvectors();
    const Field tl = t * op().eigenvalues();
    const Field g = flush_negligible(tl.array() * (-tl.array()).exp());
    return (V * g.cwiseProduct(V.row(i).transpose())).cwiseQuotient(h_) / h_[i];
}

Field DoobFrame::apply_transformed(double t, const Field& g) const
{
    return field_.apply(t, h_.cwiseProduct(g)).cwiseQuotient(h_);
}

Field DoobFrame::apply_k(double t, const Field& g) const
{
    const Field tl = t * op().eigenvalues();
    const Field sym = flush_negligible(tl.array() * (-tl.array()).exp());
    return op().synthesize(sym.cwiseProduct(op().coefficients(Field(h_.cwiseProduct(g))))).cwiseQuotient(h_);
}

Field DoobFrame::conservation(double t) const
{
    return apply_transformed(t, Field::Ones(h_.size()));
}

std::vector<int> interior_nodes(const WeightedGrid& grid, double t, double origin_margin_sqrt_t,
                                double far_margin_sqrt_t)
{
    const double st = std::sqrt(t);
    std::vector<int> out;
    for (int i = 0; i < grid.size(); ++i) {
        if (grid.distance_to_far_boundary(i) < far_margin_sqrt_t * st)
            continue;
        if (grid.half_line() && (i == 0 || grid.node(i) < origin_margin_sqrt_t * st))
            continue;
        out.push_back(i);
    }
    return out;
}

double harmonicity_residual(const HeatKernelField& field, const Field& h, double t, const std::vector<int>& nodes)
{
    const Field th = field.apply(t, h);
    double worst = 0.0;
    for (int i : nodes)
        worst = std::max(worst, std::abs(th[i] - h[i]) / h[i]);
    return worst;
}

double harmonicity_residual(const HeatKernelField& field, const Field& h, double t)
{
    return harmonicity_residual(field, h, t, interior_nodes(field.op().grid(), t, 3.0, 8.0));
}

namespace {

std::vector<int> sample_rows(const std::vector<int>& interior, int want)
{
    // Geometric spacing near the start of the list (the origin on half-lines) plus an even spread.
    std::vector<int> pick;
    const int n = static_cast<int>(interior.size());
    if (n == 0)
        return pick;
    for (int step = 1; step < n; step *= 2)
        pick.push_back(interior[step - 1]);
    for (int j = 0; j < want; ++j)
        pick.push_back(interior[static_cast<std::size_t>(j) * (n - 1) / std::max(1, want - 1)]);
    std::sort(pick.begin(), pick.end());
    pick.erase(std::unique(pick.begin(), pick.end()), pick.end());
    return pick;
}

}  // namespace

GaussianFitReport fit_gaussian_bounds(const HeatKernelField& field, const Field* h, const GaussianFitOptions& opt)
{
    const auto& op = field.op();
    const auto& grid = op.grid();
    const int M = grid.size();
    const Field hh = h ? *h : Field::Ones(M);
    const Measure ball = nu_measure(grid, hh);
    const PrefixSum ball_sum(ball.cell);

    std::vector<double> times = opt.times;
    if (times.empty())
        times = geomspace(16.0 * op.t_min(), op.t_max(), 4);

    GaussianFitReport rep;
    std::ostringstream mask;
    mask << "|x-y| <= " << opt.mask_sqrt_t << " sqrt(t); far boundary distance >= " << opt.far_margin_sqrt_t
         << " sqrt(t); first cell excluded";
    rep.mask = mask.str();
    int nonpositive = 0;
    for (double t : times) {
        const double st = std::sqrt(t);
        const auto inner = interior_nodes(grid, t, 0.0, opt.far_margin_sqrt_t);
        std::vector<char> is_inner(M, 0);
        for (int i : inner)
            is_inner[i] = 1;
        const int reach = static_cast<int>(opt.mask_sqrt_t * st / grid.spacing());
        const int stride = std::max(1, reach / 60);
        for (int x : sample_rows(inner, 12)) {
            const Field row = field.row(t, x);
            auto [a, b] = grid.ball_indices(grid.node(x), st);
            const double vol = ball_sum.sum(a, b);
            for (int y = std::max(0, x - reach); y <= std::min(M - 1, x + reach); y += stride) {
                if (!is_inner[y]) {
                    ++rep.masked;
                    continue;
                }
                const double k = row[y] / (hh[x] * hh[y]) * vol;
                const double d = grid.node(x) - grid.node(y);
                if (!(k > 0.0)) {
                    ++nonpositive;
                    continue;
                }
                rep.samples.push_back({t, grid.node(x), grid.node(y), d * d / t, std::log(k)});
            }
        }
    }
    if (rep.samples.size() < 4) {
        rep.failure = "too few unmasked samples";
        return rep;
    }

    // Envelopes per bin of s = d²/t, then a line through each envelope.
    const double width = 0.5;
    const int bins = static_cast<int>(opt.mask_sqrt_t * opt.mask_sqrt_t / width) + 1;
    std::vector<int> hi(bins, -1), lo(bins, -1);
    for (int k = 0; k < static_cast<int>(rep.samples.size()); ++k) {
        const int bin = std::min(bins - 1, static_cast<int>(rep.samples[k].s / width));
        if (hi[bin] < 0 || rep.samples[k].value > rep.samples[hi[bin]].value)
            hi[bin] = k;
        if (lo[bin] < 0 || rep.samples[k].value < rep.samples[lo[bin]].value)
            lo[bin] = k;
    }
    auto envelope_fit = [&](const std::vector<int>& idx) {
        std::vector<double> xs, ys;
        for (int k : idx)
            if (k >= 0) {
                xs.push_back(rep.samples[k].s);
                ys.push_back(rep.samples[k].value);
            }
        return fit_line(xs, ys);
    };
    const LineFit up = envelope_fit(hi);
    const LineFit down = envelope_fit(lo);
    const double bu = -up.slope, bl = -down.slope;

    double logC2 = -1e300, logC1 = -1e300, su = 0.0, sl = 0.0;
    for (const auto& s : rep.samples) {
        logC2 = std::max(logC2, s.value + s.s * bu);
        logC1 = std::max(logC1, -(s.value + s.s * bl));
        const double ru = s.value - (up.intercept + up.slope * s.s);
        const double rl = s.value - (down.intercept + down.slope * s.s);
        su += ru * ru;
        sl += rl * rl;
    }
    const double n = static_cast<double>(rep.samples.size());
    rep.upper_rms = std::sqrt(su / n);
    rep.lower_rms = std::sqrt(sl / n);
    rep.C2 = std::exp(logC2);
    rep.C1 = std::exp(logC1);
    rep.c2 = bu > 0.0 ? 1.0 / bu : 0.0;
    rep.c1 = bl > 0.0 ? 1.0 / bl : 0.0;
    rep.upper_ok = bu > 0.0;
    std::ostringstream why;
    if (!rep.upper_ok)
        why << "upper envelope does not decay; ";
    rep.lower_ok = true;
    if (nonpositive > 0) {
        rep.lower_ok = false;
        why << nonpositive << " nonpositive kernel values in the unmasked region; ";
    }
    if (!(bl > 0.0)) {
        rep.lower_ok = false;
        why << "lower envelope does not decay; ";
    }
    if (rep.C1 * rep.C2 > opt.max_condition) {
        rep.lower_ok = false;
        why << "lower bound not uniform: C1*C2 = " << rep.C1 * rep.C2 << " exceeds " << opt.max_condition << "; ";
    }
    rep.failure = why.str();
    return rep;
}

nlohmann::json GaussianFitReport::to_json() const
{
    return {{"upper_ok", upper_ok}, {"lower_ok", lower_ok}, {"C2", C2},           {"c2", c2},
            {"C1", C1},             {"c1", c1},             {"upper_rms", upper_rms}, {"lower_rms", lower_rms},
            {"samples", samples.size()}, {"masked", masked}, {"mask", mask},     {"failure", failure}};
}

std::string GaussianFitReport::residual_csv() const
{
    std::ostringstream out;
    out << "t,x,y,s,log_value,upper_residual,lower_residual\n";
    const double bu = c2 > 0 ? 1.0 / c2 : 0.0, bl = c1 > 0 ? 1.0 / c1 : 0.0;
    for (const auto& s : samples) {
        out << format_number(s.t) << ',' << format_number(s.x) << ',' << format_number(s.y) << ','
            << format_number(s.s) << ',' << format_number(s.value) << ','
            << format_number(std::log(C2) - s.s * bu - s.value) << ','
            << format_number(s.value + std::log(C1) + s.s * bl) << '\n';
    }
    return out.str();
}

double kernel_increment(const DoobFrame& frame, double t, int x, int y, int z)
{
    if (y == z)
        return 0.0;
    const Field row = frame.transformed_row(t, x);
    const auto& grid = frame.op().grid();
    auto [a, b] = grid.ball_indices(grid.node(x), std::sqrt(t));
    double vol = 0.0;
    for (int i = a; i <= b; ++i)
        vol += frame.nu().cell[i];
    return std::abs(row[y] - row[z]) * vol;
}

HolderReport holder_probe(const DoobFrame& frame, double t, double envelope_c)
{
    const auto& grid = frame.op().grid();
    const int M = grid.size();
    const double st = std::sqrt(t);
    const double dx = grid.spacing();
    const PrefixSum nu_sum(frame.nu().cell);
    const auto inner = interior_nodes(grid, t, 0.0, 6.0);
    std::vector<char> is_inner(M, 0);
    for (int i : inner)
        is_inner[i] = 1;

    HolderReport rep;
    const auto rows = sample_rows(inner, 10);
    std::vector<Field> kernel_rows;
    std::vector<double> vols;
    for (int x : rows) {
        kernel_rows.push_back(frame.transformed_row(t, x));
        auto [a, b] = grid.ball_indices(grid.node(x), st);
        vols.push_back(nu_sum.sum(a, b));
    }
    const int reach = static_cast<int>(6.0 * st / dx);
    for (int sep = 1; sep * dx <= st; sep *= 2) {
        double worst = 0.0;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const int x = rows[r];
            for (int y = std::max(0, x - reach); y + sep <= std::min(M - 1, x + reach); ++y) {
                if (!is_inner[y] || !is_inner[y + sep])
                    continue;
                const double d = grid.node(x) - grid.node(y);
                const double v = std::abs(kernel_rows[r][y] - kernel_rows[r][y + sep]) * vols[r] *
                                 std::exp(d * d / (envelope_c * t));
                worst = std::max(worst, v);
            }
        }
        if (worst > 0.0) {
            rep.log_scaled.push_back(std::log(sep * dx / st));
            rep.log_ratio.push_back(std::log(worst));
        }
    }
    if (rep.log_scaled.size() < 3) {
        rep.failure = "degenerate probe: fewer than three separations with nonzero increments";
        return rep;
    }
    const LineFit fit = fit_line(rep.log_scaled, rep.log_ratio);
    rep.gamma = fit.slope;
    rep.r2 = fit.r2;
    rep.ok = fit.slope > 0.0;
    if (!rep.ok)
        rep.failure = "no positive Hölder exponent";
    return rep;
}

}  // namespace smlab
