#include "smlab/multiplier.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>

namespace smlab {

using cplx = std::complex<double>;

namespace {

// FFTW's planner is not reentrant; execution on fresh arrays is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

void fft_inplace(std::vector<cplx>& a, int sign)
{
    auto* p = reinterpret_cast<fftw_complex*>(a.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(a.size()), p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

// Angular frequency of bin j for n samples of step h.
double bin_frequency(std::size_t j, std::size_t n, double h)
{
    const double jj = j < n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
    return 2.0 * M_PI * jj / (static_cast<double>(n) * h);
}

}  // namespace

double phi_window(double lambda)
{
    if (!(lambda > 0.0))
        return 0.0;
    const double u = std::log2(lambda);
    const double q = 1.0 - u * u;
    return q > 0.0 ? std::exp(1.0 - 1.0 / q) : 0.0;
}

double sobolev_norm(const ComplexSymbol& m, double k, SobolevExponent q, double s, const SobolevOptions& opt)
{
    if (s < 0.0)
        throw std::invalid_argument("Sobolev order must be nonnegative");
    const std::size_t N = static_cast<std::size_t>(opt.samples);
    const std::size_t P = N * static_cast<std::size_t>(opt.padding);
    const double h = 1.5 / static_cast<double>(N);
    const double dil = std::exp2(k);

    std::vector<cplx> a(P, 0.0);
    double peak = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        const double x = 0.5 + static_cast<double>(j) * h;
        a[j] = phi_window(x) * m(dil * x);
        if (!std::isfinite(a[j].real()) || !std::isfinite(a[j].imag()))
            throw std::runtime_error("symbol is not finite on the dilated window");
        peak = std::max(peak, std::abs(a[j]));
    }
    if (peak == 0.0)
        return 0.0;
    double step = 0.0;
    for (std::size_t j = 0; j + 1 < N; ++j)
        step = std::max(step, std::abs(a[j + 1] - a[j]));
    if (step > opt.max_step * peak)
        throw std::runtime_error("symbol under-sampled on the window at k=" + format_number(k) +
                                 " (neighbour jump " + format_number(step / peak) + " of peak)");

    fft_inplace(a, FFTW_FORWARD);

    if (q == SobolevExponent::two) {
        double sum = 0.0;
        for (std::size_t j = 0; j < P; ++j) {
            const double xi = bin_frequency(j, P, h);
            sum += std::norm(a[j]) * std::pow(1.0 + xi * xi, s);
        }
        return std::sqrt(sum * h / static_cast<double>(P));
    }

    const int order = static_cast<int>(std::ceil(s));
    double best = 0.0;
    std::vector<cplx> d(P);
    for (int o = 0; o <= order; ++o) {
        for (std::size_t j = 0; j < P; ++j)
            d[j] = a[j] * std::pow(cplx(0.0, bin_frequency(j, P, h)), o);
        fft_inplace(d, FFTW_BACKWARD);
        for (const auto& v : d)
            best = std::max(best, std::abs(v) / static_cast<double>(P));
    }
    return best;
}

std::vector<double> rearrange(std::vector<double> omega)
{
    std::sort(omega.begin(), omega.end(), std::greater<>());
    return omega;
}

double series_partial_sum(const std::vector<double>& omega_star, std::size_t L_max)
{
    if (omega_star.empty())
        return 0.0;
    const std::size_t L = std::min(L_max, omega_star.size());
    long double sum = omega_star[0];
    for (std::size_t l = 2; l < L; ++l) {
        const double ll = static_cast<double>(l);
        sum += omega_star[l] / (ll * std::sqrt(std::log(ll)));
    }
    return static_cast<double>(sum);
}

std::string to_string(SeriesVerdict v)
{
    switch (v) {
    case SeriesVerdict::converges: return "converges";
    case SeriesVerdict::diverges: return "diverges";
    case SeriesVerdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

nlohmann::json SeriesReport::to_json() const
{
    return {{"value", value},
            {"half_window_value", half_value},
            {"cauchy_difference", cauchy},
            {"beta", beta},
            {"beta_fit_r2", fit_r2},
            {"tail_bound", std::isfinite(tail_bound) ? nlohmann::json(tail_bound) : nlohmann::json("inf")},
            {"finite_support", finite_support},
            {"window", window},
            {"verdict", to_string(verdict)}};
}

SeriesReport series_criterion(const std::vector<double>& omega_star, const SeriesOptions& opt)
{
    SeriesReport rep;
    const std::size_t W = omega_star.size();
    rep.window = W;
    rep.value = series_partial_sum(omega_star, W);
    rep.half_value = series_partial_sum(omega_star, W / 2);
    rep.cauchy = rep.value - rep.half_value;

    std::size_t last = 0;
    bool any = false;
    for (std::size_t l = 0; l < W; ++l)
        if (omega_star[l] > 0.0) {
            last = l;
            any = true;
        }
    if (!any || last < W / 2) {
        // Nothing left in the upper half: the tail is exactly zero.
        rep.finite_support = true;
        rep.verdict = SeriesVerdict::converges;
        return rep;
    }

    rep.tail_bound = std::numeric_limits<double>::infinity();
    const double lo = std::max(16.0, std::sqrt(static_cast<double>(W)));
    const double hi = static_cast<double>(W - 1);
    if (!(hi > 2.0 * lo))
        return rep;
    std::vector<double> x, y;
    for (double l : geomspace(lo, hi, 64)) {
        const auto i = static_cast<std::size_t>(l);
        if (omega_star[i] > 0.0) {
            x.push_back(std::log(std::log(static_cast<double>(i))));
            y.push_back(std::log(omega_star[i]));
        }
    }
    if (x.size() < 8)
        return rep;
    const LineFit fit = fit_line(x, y);
    rep.beta = -fit.slope;
    rep.fit_r2 = fit.r2;
    if (rep.beta > 0.5) {
        // Σ_{ℓ≥W} C(log ℓ)^{−β−1/2}/ℓ ≤ ∫_{W−1}^∞ ... = C (log(W−1))^{1/2−β}/(β−1/2)
        rep.tail_bound = std::exp(fit.intercept) * std::pow(std::log(hi), 0.5 - rep.beta) / (rep.beta - 0.5);
    }
    if (rep.beta > opt.beta_converge && rep.cauchy < opt.cauchy_tol)
        rep.verdict = SeriesVerdict::converges;
    else if (rep.beta <= opt.beta_diverge)
        rep.verdict = SeriesVerdict::diverges;
    return rep;
}

std::vector<double> power_log_profile(double eps, std::size_t L)
{
    std::vector<double> w(L);
    const double e = -(1.0 + eps) / 2.0;
    for (std::size_t l = 0; l < L; ++l)
        w[l] = std::pow(1.0 + std::log1p(static_cast<double>(l)), e);
    return w;
}

MultiplierProfile MultiplierProfile::from_symbol(const NamedSymbol& sym, int k_lo, int k_hi, SobolevExponent q,
                                                 double s, const SobolevOptions& opt)
{
    if (k_hi < k_lo)
        throw std::invalid_argument("empty dyadic window");
    MultiplierProfile p;
    p.name = sym.name;
    p.symbol = sym;
    p.m0 = sym.m0;
    p.k_lo = k_lo;
    p.k_hi = k_hi;
    p.q = q;
    p.s = s;
    for (int k = k_lo; k <= k_hi; ++k)
        p.omega.push_back(sobolev_norm(sym.m, k, q, s, opt));
    p.omega_star = rearrange(p.omega);
    return p;
}

MultiplierProfile MultiplierProfile::from_omega(std::string name, std::vector<double> omega, int k_lo, double s,
                                                SobolevExponent q, double m0)
{
    for (double w : omega)
        if (!(w >= 0.0))
            throw std::invalid_argument("omega values must be nonnegative");
    MultiplierProfile p;
    p.name = std::move(name);
    p.m0 = m0;
    p.k_lo = k_lo;
    p.k_hi = k_lo + static_cast<int>(omega.size()) - 1;
    p.q = q;
    p.s = s;
    p.omega = std::move(omega);
    p.omega_star = rearrange(p.omega);
    return p;
}

nlohmann::json MultiplierProfile::to_json() const
{
    std::vector<int> ks(omega.size());
    std::iota(ks.begin(), ks.end(), k_lo);
    return {{"name", name},
            {"m0", m0},
            {"k", ks},
            {"q", q == SobolevExponent::two ? "2" : "inf"},
            {"q_surrogate", q == SobolevExponent::infinity},
            {"s", s},
            {"omega", omega},
            {"omega_star", omega_star},
            {"series", series_criterion(omega_star).to_json()}};
}

const TheoremVerdict& TheoremChecklist::get(const std::string& theorem) const
{
    for (const auto& t : theorems)
        if (t.theorem == theorem)
            return t;
    throw std::out_of_range("no theorem named " + theorem);
}

nlohmann::json TheoremChecklist::to_json() const
{
    nlohmann::json out = {{"n", n}, {"q", q}, {"r", r}, {"p", p}};
    nlohmann::json list = nlohmann::json::array();
    for (const auto& t : theorems) {
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& c : t.checks)
            checks.push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"detail", c.detail}});
        list.push_back({{"theorem", t.theorem}, {"pass", t.pass}, {"checks", checks}});
    }
    out["theorems"] = list;
    return out;
}

double square_sum_tail_share(const std::vector<double>& omega)
{
    const std::size_t W = omega.size();
    double total = 0.0, outer = 0.0;
    const std::size_t c = W / 2;
    for (std::size_t i = 0; i < W; ++i) {
        const double v = omega[i] * omega[i];
        total += v;
        // Distance from the middle of the window, the k ≈ 0 region.
        const std::size_t d = i > c ? i - c : c - i;
        if (2 * d >= c)
            outer += v;
    }
    return total > 0.0 ? outer / total : 0.0;
}

TheoremChecklist theorem_conditions(const MultiplierProfile& profile, double n, double q, double r, double p)
{
    if (!(r >= 1.0 && r < 2.0))
        throw std::invalid_argument("need 1 <= r < 2 (got r=" + format_number(r) + ")");
    if (!(p > 1.0))
        throw std::invalid_argument("need p > 1 (got p=" + format_number(p) + ")");
    if (!(q >= 2.0))
        throw std::invalid_argument("Plancherel exponent must satisfy q >= 2");
    if (!(n > 0.0))
        throw std::invalid_argument("dimension must be positive");

    TheoremChecklist out;
    out.n = n;
    out.q = q;
    out.r = r;
    out.p = p;

    const bool zero = profile.sup_omega() == 0.0 && profile.m0 == 0.0;
    const double s = profile.s;
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    const double inv_q_dual = 1.0 - inv_q;
    const SeriesReport series = series_criterion(profile.omega_star);
    const double tail = square_sum_tail_share(profile.omega);

    auto smooth = [&](const std::string& name, double threshold) {
        HypothesisCheck c{name, zero || s > threshold, threshold, ""};
        c.detail = zero ? "m = 0" : "s=" + format_number(s) + " vs " + format_number(threshold);
        return c;
    };
    auto series_check = [&]() {
        return HypothesisCheck{"rearrangement_series", series.verdict == SeriesVerdict::converges, series.value,
                               to_string(series.verdict)};
    };
    auto exponent_range = [&]() {
        return HypothesisCheck{"1<=r<2, r<p", r < p, p - r, "r=" + format_number(r) + " p=" + format_number(p)};
    };
    auto finish = [&](std::string name, std::vector<HypothesisCheck> checks) {
        TheoremVerdict v{std::move(name), true, std::move(checks)};
        for (const auto& c : v.checks)
            v.pass = v.pass && c.pass;
        out.theorems.push_back(std::move(v));
    };

    finish("square_summable",
           {HypothesisCheck{"sum_k omega(k)^2 finite", tail < 0.1, tail, "outer-half share of the window sum"},
            smooth("smoothness", p < 2.0 ? n / 2.0 - inv_q + 1.0 : n / 2.0 - inv_q + 0.5)});
    finish("rearranged_dyadic", {exponent_range(), series_check(), smooth("smoothness", n / r)});
    finish("rearranged_continuous", {exponent_range(), series_check(), smooth("smoothness", n / r + 1.0 / p)});
    finish("rearranged_small_p",
           {HypothesisCheck{"1<p<=2", p <= 2.0, p, ""}, series_check(), smooth("smoothness", n / 2.0 + inv_q_dual)});
    const double B = profile.sup_omega() + std::abs(profile.m0);
    finish("maximal_family",
           {exponent_range(), HypothesisCheck{"B finite", std::isfinite(B), B, "sup_k omega(k) + |m(0)|"},
            smooth("smoothness", n / r)});
    return out;
}

DilationComparison dilation_sup_ratio(const ComplexSymbol& m, int k_lo, int k_hi, SobolevExponent q, double s,
                                      int per_octave)
{
    DilationComparison c;
    for (int k = k_lo; k <= k_hi; ++k) {
        c.sup_dyadic = std::max(c.sup_dyadic, sobolev_norm(m, k, q, s));
        for (int j = 0; j < per_octave && k < k_hi; ++j)
            c.sup_continuous =
                std::max(c.sup_continuous, sobolev_norm(m, k + static_cast<double>(j) / per_octave, q, s));
    }
    c.sup_continuous = std::max(c.sup_continuous, c.sup_dyadic);
    c.ratio = c.sup_dyadic > 0.0 ? c.sup_continuous / c.sup_dyadic : 1.0;
    return c;
}

cplx complex_lgamma(cplx z)
{
    static constexpr double g = 7.0;
    static constexpr double coef[9] = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                       771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                       -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (z.real() < 0.5)
        return std::log(M_PI) - std::log(std::sin(M_PI * z)) - complex_lgamma(1.0 - z);
    z -= 1.0;
    cplx x = coef[0];
    for (int i = 1; i < 9; ++i)
        x += coef[i] / (z + static_cast<double>(i));
    const cplx t = z + g + 0.5;
    return 0.5 * std::log(2.0 * M_PI) + (z + 0.5) * std::log(t) - t + std::log(x);
}

cplx FractionalDerivative::at(double s) const
{
    if (!(s > 0.0))
        return 0.0;
    const double pos = (std::log(s) - axis.u_lo) / axis.step();
    if (pos < 1.0 || pos >= static_cast<double>(F.size()) - 2.0)
        return 0.0;
    const auto i = static_cast<std::size_t>(pos);
    const double u = pos - static_cast<double>(i);
    const cplx p0 = F[i - 1], p1 = F[i], p2 = F[i + 1], p3 = F[i + 2];
    return p1 + 0.5 * u * (p2 - p0 + u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + u * (3.0 * (p1 - p2) + p3 - p0)));
}

FractionalDerivative fractional_derivative(const ComplexSymbol& m, double mu, const LogAxis& axis)
{
    if (!(mu > 0.5))
        throw std::invalid_argument("fractional order must exceed 1/2");
    FractionalDerivative d;
    d.mu = mu;
    d.axis = axis;
    const auto n = static_cast<std::size_t>(axis.n);
    const double h = axis.step();
    d.F.resize(n);
    double peak = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        d.F[j] = m(std::exp(axis.u_lo + static_cast<double>(j) * h));
        peak = std::max(peak, std::abs(d.F[j]));
    }
    if (peak == 0.0)
        return d;
    d.edge_level = std::max(std::abs(d.F.front()), std::abs(d.F.back())) / peak;
    d.decays = d.edge_level < 1e-8;

    fft_inplace(d.F, FFTW_FORWARD);
    for (std::size_t j = 0; j < n; ++j) {
        const double tau = bin_frequency(j, n, h);
        // s^{iτ}: the right-sided derivative of s^{iτ−1} is Γ(1+μ−iτ)/Γ(1−iτ)·s^{iτ−1−μ}.
        const cplx H = std::exp(complex_lgamma(cplx(1.0 + mu, -tau)) - complex_lgamma(cplx(1.0, -tau)));
        d.F[j] *= H / static_cast<double>(n);
    }
    fft_inplace(d.F, FFTW_BACKWARD);
    return d;
}

CarberyNorm carbery_norm(const ComplexSymbol& m, double mu, const LogAxis& axis)
{
    const FractionalDerivative d = fractional_derivative(m, mu, axis);
    double sum = 0.0;
    for (const auto& v : d.F)
        sum += std::norm(v);
    return {std::sqrt(sum * axis.step()), d.decays};
}

double reconstruction_integral(const FractionalDerivative& d, double lambda)
{
    if (!(lambda > 0.0))
        throw std::invalid_argument("reconstruction needs lambda > 0");
    if (d.F.empty())
        return 0.0;
    double peak = 0.0;
    for (const auto& v : d.F)
        peak = std::max(peak, std::abs(v));
    if (peak == 0.0)
        return 0.0;
    // Past the last sample above roundoff the integrand is negligible.
    std::size_t last = d.F.size() - 1;
    while (last > 0 && std::abs(d.F[last]) < 1e-14 * peak)
        --last;
    const double v_lo = std::log(lambda);
    const double v_hi = std::min(d.axis.u_hi, d.axis.u_lo + (static_cast<double>(last) + 2.0) * d.axis.step());
    if (v_hi <= v_lo)
        return 0.0;

    const double mu = d.mu;
    auto integrand = [&](double v) {
        const double s = std::exp(v);
        const double gap = s - lambda;
        if (gap <= 0.0)
            return 0.0;
        return std::pow(gap, mu - 1.0) * d.at(s).real() * std::exp(-mu * v);
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    double total = 0.0;
    for (double a = v_lo; a < v_hi; a += 0.5) {
        const double b = std::min(a + 0.5, v_hi);
        double err = 0.0;
        total += integrator.integrate(integrand, a, b, 1e-10, &err);
        if (!std::isfinite(total))
            throw std::runtime_error("reconstruction quadrature did not converge");
    }
    return lambda * total;
}

double reconstruct(const FractionalDerivative& d, double c_mu, double lambda)
{
    return c_mu * reconstruction_integral(d, lambda);
}

CMuCalibration calibrate_c_mu(double mu, const LogAxis& axis)
{
    const NamedSymbol ref = log_gaussian_bump(1.0, 0.35);
    const FractionalDerivative d = fractional_derivative(ref.m, mu, axis);
    double num = 0.0, den = 0.0;
    std::vector<double> I, M;
    for (double l : geomspace(std::exp(-0.7), std::exp(0.7), 16)) {
        I.push_back(reconstruction_integral(d, l));
        M.push_back(ref.m(l).real());
        num += I.back() * M.back();
        den += I.back() * I.back();
    }
    CMuCalibration c;
    c.mu = mu;
    c.reference = ref.name;
    c.c_mu = num / den;
    c.theory = 1.0 / std::tgamma(mu);
    for (std::size_t i = 0; i < I.size(); ++i)
        c.fit_residual = std::max(c.fit_residual, std::abs(c.c_mu * I[i] - M[i]));
    return c;
}

double carbery_dyadic_sum(const ComplexSymbol& m, double mu, int k_lo, int k_hi)
{
    double sum = 0.0;
    for (int k = k_lo; k <= k_hi; ++k) {
        const double w = sobolev_norm(m, k, SobolevExponent::two, mu);
        sum += w * w;
    }
    return sum;
}

std::vector<FjBand> build_fj_partition(const MultiplierProfile& profile)
{
    const auto& star = profile.omega_star;
    const std::size_t W = star.size();
    auto at = [&](unsigned long long l) { return l < W ? star[l] : 0.0; };
    auto pow2 = [](unsigned e) { return e >= 64 ? std::numeric_limits<unsigned long long>::max() : 1ULL << e; };

    std::vector<FjBand> bands;
    bands.push_back({0, at(0), at(4), {}, 4});
    bands.push_back({1, at(4), at(4), {}, 4});
    for (int j = 2; pow2(1u << (j - 1)) < W; ++j) {
        const unsigned long long up = pow2(1u << (j - 1)), down = pow2(1u << j);
        bands.push_back({j, at(up), at(down), {}, static_cast<std::size_t>(std::min<unsigned long long>(down, W))});
    }
    for (int k = profile.k_lo; k <= profile.k_hi; ++k) {
        const double w = profile.omega_at(k);
        for (auto& b : bands)
            if (b.j != 1 && b.lower < w && w <= b.upper) {
                b.members.push_back(k);
                break;
            }
    }
    return bands;
}

}  // namespace smlab
