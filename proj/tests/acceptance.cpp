// One line per acceptance criterion. Tolerances live here, next to the checks,
// and nothing is relaxed after the fact: a criterion that cannot be met at desk
// scale prints FAIL with the measured numbers.

#include "smlab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace smlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

ExperimentConfig config_for(const std::string& experiment)
{
    auto c = ExperimentConfig::from_json({{"schema", "smlab/1"}, {"experiment", experiment}});
    c.out_dir = (std::filesystem::temp_directory_path() / ("smlab_acceptance_" + experiment)).string();
    return c;
}

// ---- 1
Outcome identity_maximal()
{
    constexpr double tol = 1e-10, budget = 1.0;
    const auto start = Clock::now();
    const auto grid = build_grid(DomainKind::full_line, 1024, 20.0, 0.0);
    const auto op = assemble(OperatorSpec::free_laplacian(), grid);
    const Field f = test_family(*op, 1, 1, 0).col(0);
    const Field mf = maximal_single(*op, [](double) { return 1.0; }, f, dilation_grid(*op));
    const double err = (mf - f.cwiseAbs()).cwiseAbs().maxCoeff();
    const double elapsed = seconds_since(start);
    return {err <= tol && elapsed < budget, "max error " + fmt(err) + ", " + fmt(elapsed) + " s"};
}

// ---- 2
Eigen::MatrixXd expm_series(const Eigen::MatrixXd& A, double t)
{
    const double norm = (t * A).cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    while (norm / std::exp2(squarings) > 0.25)
        ++squarings;
    const Eigen::MatrixXd B = -t * A / std::exp2(squarings);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(A.rows(), A.cols());
    Eigen::MatrixXd sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * B / k;
        sum += term;
    }
    for (int i = 0; i < squarings; ++i)
        sum = sum * sum;
    return sum;
}

Outcome spectral_oracle()
{
    constexpr double tol = 1e-8;
    double worst = 0.0;
    const std::pair<OperatorSpec, DomainKind> cases[] = {
        {OperatorSpec::free_laplacian(), DomainKind::full_line},
        {OperatorSpec::dirichlet_laplacian(), DomainKind::half_line_dirichlet},
        {OperatorSpec::bessel(2.0), DomainKind::half_line_neumannlike},
        {OperatorSpec::inv_square(3.0, 2.0), DomainKind::half_line_dirichlet},
    };
    for (const auto& [spec, kind] : cases) {
        const double alpha = spec.kind == OperatorKind::bessel ? spec.alpha
                             : spec.kind == OperatorKind::inv_square ? spec.n - 1.0
                                                                       : 0.0;
        const auto grid = build_grid(kind, 16, 4.0, alpha);
        const auto op = assemble(spec, grid);
        const auto field = heat_kernel(op);
        for (double t : {0.01, 0.1, 1.0}) {
            // K(t) is a kernel against dμ, so e^{−tA} = K(t)·diag(cell).
            const Eigen::MatrixXd K = field.kernel(t) * grid.quad_weights().asDiagonal();
            worst = std::max(worst, (K - expm_series(op->matrix(), t)).cwiseAbs().maxCoeff());
        }
    }
    return {worst <= tol, "max abs error " + fmt(worst) + " over 4 operators, M=16"};
}

// ---- 3
double image_error(int M)
{
    const auto grid = build_grid(DomainKind::half_line_dirichlet, M, 20.0, 0.0);
    const auto field = heat_kernel(assemble(OperatorSpec::dirichlet_laplacian(), grid));
    double worst = 0.0;
    for (double t : {0.02, 0.1, 0.5, 2.0}) {
        const auto K = field.kernel(t);
        const auto nodes = interior_nodes(grid, t, 0.0, 6.0);
        for (int i : nodes)
            for (int j : nodes) {
                const double x = grid.node(i), y = grid.node(j);
                if (std::abs(x - y) > 4.0 * std::sqrt(t))
                    continue;
                const double exact = (std::exp(-(x - y) * (x - y) / (4 * t)) - std::exp(-(x + y) * (x + y) / (4 * t))) /
                                     std::sqrt(4 * M_PI * t);
                // Relative error is meaningless where the kernel has all but vanished.
                if (exact < 1e-3 / std::sqrt(t))
                    continue;
                worst = std::max(worst, std::abs(K(i, j) - exact) / exact);
            }
    }
    return worst;
}

Outcome dirichlet_images()
{
    constexpr double tol = 0.02, min_gain = 2.0;
    const double coarse = image_error(1024), fine = image_error(2048);
    return {fine <= tol && coarse / fine >= min_gain,
            "rel error " + fmt(fine) + " at M=2048, " + fmt(coarse) + " at M=1024 (gain " + fmt(coarse / fine) + ")"};
}

// ---- 4
Outcome doob_conservation()
{
    constexpr double tol = 1e-3;
    const auto grid = build_grid(DomainKind::half_line_dirichlet, 2048, 20.0, 2.0);
    const auto op = assemble(OperatorSpec::inv_square(3.0, 2.0), grid);
    const Field h = grid.nodes().array().pow(inverse_square_tau(3.0, 2.0));
    const DoobFrame frame = doob_transform(heat_kernel(op), h);
    double worst = 0.0;
    for (double t : geomspace(4.0 * op->t_min(), op->t_max(), 6)) {
        const Field c = frame.conservation(t);
        for (int i : interior_nodes(grid, t, 3.0, 8.0))
            worst = std::max(worst, std::abs(c[i] - 1.0));
    }
    return {worst <= tol, "interior residual " + fmt(worst)};
}

// ---- 5
double cross_error(int M)
{
    const auto gd = build_grid(DomainKind::half_line_dirichlet, M, 20.0, 0.0);
    const auto gb = build_grid(DomainKind::half_line_neumannlike, M, 20.0, 2.0);
    const auto dir = assemble(OperatorSpec::dirichlet_laplacian(), gd);
    const auto bes = assemble(OperatorSpec::bessel(2.0), gb);
    const Field h = gd.nodes();
    double worst = 0.0;
    for (int k = 0; k < 8; ++k) {
        // Smooth bumps away from both ends: at the origin the two discretisations
        // agree only when g'(0) = 0.
        const double centre = 2.0 + k, width = 0.6 + 0.1 * k;
        const Field g = ((gd.nodes().array() - centre) / width).square().unaryExpr([](double u) {
            return std::exp(-0.5 * u);
        });
        const Field a = dir->apply_generator(h.cwiseProduct(g)).cwiseQuotient(h);
        const Field b = bes->apply_generator(g);
        double num = 0.0, den = 0.0;
        for (int i = 0; i < M; ++i) {
            if (gd.node(i) < 1.0 || gd.node(i) > 15.0)
                continue;
            num = std::max(num, std::abs(a[i] - b[i]));
            den = std::max(den, std::abs(b[i]));
        }
        worst = std::max(worst, num / den);
    }
    return worst;
}

Outcome doob_cross_check()
{
    constexpr double lo = 3.0, hi = 5.0;
    const double e1 = cross_error(512), e2 = cross_error(1024), e3 = cross_error(2048);
    const double r1 = e1 / e2, r2 = e2 / e3;
    return {r1 >= lo && r1 <= hi && r2 >= lo && r2 <= hi,
            "errors " + fmt(e1) + ", " + fmt(e2) + ", " + fmt(e3) + "; ratios " + fmt(r1) + ", " + fmt(r2)};
}

// ---- 6
Outcome tau_formula()
{
    // The flux-form discretisation annihilates x exactly (its residual is pure
    // roundoff at every M), so "decreasing" is checked against a roundoff floor.
    constexpr double roundoff_floor = 64 * 2.220446049250313e-16;
    const double tau = inverse_square_tau(3.0, 2.0);
    std::vector<double> res, semigroup;
    for (int M : {512, 1024, 2048}) {
        const auto grid = build_grid(DomainKind::half_line_dirichlet, M, 20.0, 2.0);
        const auto op = assemble(OperatorSpec::inv_square(3.0, 2.0), grid);
        const Field h = grid.nodes().array().pow(tau);
        const Field Ah = op->apply_generator(h);
        const Eigen::MatrixXd A = op->matrix();
        double worst = 0.0;
        // The last node sits next to the far wall, where x is not harmonic.
        for (int i = 0; i + 1 < M; ++i)
            worst = std::max(worst, std::abs(Ah[i]) / (A.row(i).cwiseAbs() * h));
        res.push_back(worst);
        semigroup.push_back(harmonicity_residual(heat_kernel(op), h, 0.1));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < res.size(); ++i)
        decreasing = decreasing && (res[i] <= res[i - 1] || res[i] <= roundoff_floor);
    return {tau == 1.0 && decreasing,
            "tau=" + fmt(tau) + "; generator residual " + fmt(res[0]) + ", " + fmt(res[1]) + ", " + fmt(res[2]) +
                " (floor " + fmt(roundoff_floor) + "); semigroup residual at t=0.1 " + fmt(semigroup[2])};
}

// ---- 7
Outcome ap_stability()
{
    constexpr double p = 4.0, r = 1.5, tol = 0.10;
    std::vector<double> values;
    for (int M : {512, 1024, 2048}) {
        const auto grid = build_grid(DomainKind::half_line_dirichlet, M, 20.0, 2.0);
        const Field h = grid.nodes().array().pow(inverse_square_tau(3.0, 2.0));
        const Measure nu = nu_measure(grid, h);
        values.push_back(ap_characteristic(grid, h.array().pow(p - 2.0).matrix(), p / r, nu).characteristic);
    }
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    const bool finite = std::isfinite(hi) && lo > 0.0;
    return {finite && (hi - lo) / lo <= tol,
            "A_{p/r} = " + fmt(values[0]) + ", " + fmt(values[1]) + ", " + fmt(values[2]) + " (spread " +
                fmt((hi - lo) / lo) + ")"};
}

// ---- 8
Outcome stein_identity()
{
    constexpr double tol = 0.02;
    const auto rep = run(config_for("stein"));
    std::ostringstream d;
    bool pass = true;
    for (const auto& row : rep.results) {
        const double cv = row.at("coefficient_of_variation").get<double>();
        pass = pass && cv < tol;
        d << "delta=" << row.at("delta").get<double>() << " cv " << fmt(cv) << " mean "
          << fmt(row.at("mean_ratio").get<double>()) << " (closed form " << fmt(row.at("closed_form").get<double>())
          << "); ";
    }
    return {pass && rep.results.size() == 2, d.str()};
}

// ---- 9
Outcome carbery_chain()
{
    constexpr double rec_tol = 1e-2, ratio_tol = 0.10;
    const auto rep = run(config_for("carbery"));
    const auto& r = rep.results;
    const double rec = r.at("reconstruction_max_relative").get<double>();
    const double sup = r.at("sup_ratio").get<double>(), c = r.at("c_mu").get<double>();
    return {rec <= rec_tol && sup <= (1.0 + ratio_tol) * c,
            "reconstruction " + fmt(rec) + "; sup ratio " + fmt(sup) + " vs C_mu " + fmt(c) + " on 16 f"};
}

// ---- 10
Outcome series_criterion_check()
{
    constexpr double min_gap = 1.0, budget = 5.0;
    const auto start = Clock::now();
    const auto conv = series_criterion(power_log_profile(0.5, 1000000));
    const auto p0 = power_log_profile(0.0, 1000000);
    const auto div = series_criterion(p0);
    const double gap = series_partial_sum(p0, 1000000) - series_partial_sum(p0, 1000);
    const double elapsed = seconds_since(start);
    return {conv.verdict == SeriesVerdict::converges && div.verdict == SeriesVerdict::diverges && gap > min_gap &&
                elapsed < budget,
            "eps=0.5 " + to_string(conv.verdict) + " (Cauchy " + fmt(conv.cauchy) + "); eps=0 " +
                to_string(div.verdict) + " (beta " + fmt(div.beta) + ", gap S(1e6)-S(1e3) = " + fmt(gap) +
                ", needs > 1); " + fmt(elapsed) + " s"};
}

// ---- 11
Outcome martingale_exactness()
{
    constexpr double tol = 1e-10;
    const auto grid = build_grid(DomainKind::half_line_dirichlet, 1024, 20.0, 2.0);
    const Field h = grid.nodes();
    const MartingaleStack stack(build_dyadic(grid, 0, 8), nu_measure(grid, h).cell);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    double tele = 0.0, pyth = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
        Field f(grid.size());
        for (auto& v : f)
            v = z(rng);
        Field sum = stack.expectation(0, f);
        double energy = stack.l2_norm_sq(sum);
        for (int k = 0; k < 8; ++k) {
            const Field d = stack.difference(k, f);
            sum += d;
            energy += stack.l2_norm_sq(d);
        }
        const Field top = stack.expectation(8, f);
        tele = std::max(tele, (sum - top).cwiseAbs().maxCoeff() / top.cwiseAbs().maxCoeff());
        pyth = std::max(pyth, std::abs(energy - stack.l2_norm_sq(top)) / stack.l2_norm_sq(top));
    }
    return {tele <= tol && pyth <= tol, "telescoping " + fmt(tele) + ", Pythagoras " + fmt(pyth) + " (8 levels)"};
}

// ---- 12
Outcome good_lambda()
{
    const auto rep = run(config_for("goodlambda"));
    const auto& r = rep.results;
    const bool degenerate = r.at("degenerate").get<bool>();
    // The fit is absent when fewer than two ratios are positive.
    const double slope = degenerate ? NAN : r.at("fit").at("slope").get<double>();
    const bool identical = r.at("weighted_identical").get<bool>();
    const auto& above = r.at("above_critical");
    std::ostringstream d;
    d << "eps_crit " << fmt(r.at("eps_critical").get<double>()) << "; required grid "
      << (degenerate ? "degenerate (every ratio 0)" : "slope " + fmt(slope)) << "; above-critical slope "
      << fmt(above.at("fit").at("slope").get<double>()) << " (R2 " << fmt(above.at("fit").at("r2").get<double>())
      << "); weight 1 identical: " << (identical ? "yes" : "no");
    return {!degenerate && slope < 0.0 && identical, d.str()};
}

// ---- 13
Outcome tiling()
{
    long violations = 0;
    int sets = 0;
    std::mt19937_64 rng(13);
    for (int N : {1, 2, 3}) {
        const long period = 1L << (2 * (N + 1));
        std::uniform_int_distribution<long> pick(-2 * period, 2 * period);
        for (int trial = 0; trial < 16; ++trial) {
            std::vector<long> F;
            if (trial == 0) {
                for (long i = 0; i < (1L << N); ++i)
                    F.push_back(i);  // a packed block
            } else {
                while (F.size() < (std::size_t{1} << N)) {
                    const long v = pick(rng);
                    if (std::find(F.begin(), F.end(), v) == F.end())
                        F.push_back(v);
                }
            }
            violations += tile(N, F, -5000, 5000).verify().total();
            ++sets;
        }
    }
    return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(sets) +
                                 " sets, N in {1,2,3}, window [-5000, 5000]"};
}

// ---- 14
Outcome growth()
{
    constexpr double tol = 0.10, budget = 600.0;
    const auto start = Clock::now();
    const auto rep = run(config_for("growth"));
    const double elapsed = seconds_since(start);
    const auto& r = rep.results;
    const double spread = r.at("last_three_spread").get<double>();
    const bool monotone = r.at("monotone").get<bool>();
    std::ostringstream d;
    d << "A/sqrt(log(1+N)):";
    for (const auto& rung : r.at("rungs"))
        d << ' ' << fmt(rung.at("A_over_sqrt_log").get<double>());
    d << "; last-three spread " << fmt(spread) << (monotone ? ", A monotone" : ", A NOT monotone") << "; "
      << fmt(elapsed) << " s";
    return {spread <= tol && elapsed < budget, d.str()};
}

// ---- 15
Outcome decay()
{
    constexpr double min_r2 = 0.8;
    const auto grid = build_grid(DomainKind::full_line, 1023, 20.0, 0.0);
    const auto op = assemble(OperatorSpec::free_laplacian(), grid);
    const DoobFrame frame = doob_transform(heat_kernel(op), Field::Ones(grid.size()));
    const MartingaleStack stack(full_dyadic(grid), frame.nu().cell);
    const Eigen::MatrixXd F = test_family(*op, 1, 8, 8);
    std::vector<Field> family;
    for (Eigen::Index i = 0; i < F.cols(); ++i)
        family.push_back(F.col(i));
    const auto rep = decay_probe(frame, stack, {-1, 4}, {3, 8}, family, 1.5);
    return {rep.ok && rep.gamma > 0.0 && rep.r2 > min_r2,
            rep.ok ? "gamma " + fmt(rep.gamma) + ", R2 " + fmt(rep.r2) + ", scale offset " + fmt(rep.offset) + ", " +
                         std::to_string(rep.points.size()) + " (j,k) pairs"
                   : rep.failure};
}

}  // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"identity maximal", identity_maximal},
        {"spectral calculus oracle", spectral_oracle},
        {"Dirichlet image kernel", dirichlet_images},
        {"Doob conservation", doob_conservation},
        {"Doob cross-check", doob_cross_check},
        {"tau formula", tau_formula},
        {"A_p stability", ap_stability},
        {"Stein L2 identity", stein_identity},
        {"Carbery chain", carbery_chain},
        {"rearrangement criterion", series_criterion_check},
        {"martingale exactness", martingale_exactness},
        {"good-lambda decay", good_lambda},
        {"tiling", tiling},
        {"growth", growth},
        {"decay probe", decay},
    };
    int failed = 0, index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        Outcome o;
        const auto start = Clock::now();
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%-4s %2d %-26s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(),
                    seconds_since(start));
        std::fflush(stdout);
    }
    std::printf("%d of %d criteria pass\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
