#include "smlab/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace smlab;

namespace {

OperatorPtr free_op(int M = 255)
{
    return assemble(OperatorSpec::free_laplacian(), build_grid(DomainKind::full_line, M, 12.0, 0.0));
}

ExperimentConfig small_config(const std::string& experiment)
{
    auto c = ExperimentConfig::from_json({{"schema", "smlab/1"}, {"experiment", experiment}, {"grid", {{"M", 64}}}});
    c.out_dir = (std::filesystem::temp_directory_path() / ("smlab_test_" + experiment)).string();
    return c;
}

}  // namespace

TEST_CASE("sign sampler is a pure function of its inputs with mean near zero")
{
    const SignSampler a(42), b(42), c(43);
    int sum = 0, differ = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const int s = a.draw(static_cast<std::uint64_t>(i), 3);
        CHECK((s == 1 || s == -1));
        CHECK(s == b.draw(static_cast<std::uint64_t>(i), 3));
        differ += s != c.draw(static_cast<std::uint64_t>(i), 3);
        sum += s;
    }
    // Mean of n fair signs has σ = 1/√n.
    CHECK(std::abs(static_cast<double>(sum) / n) < 3.0 / std::sqrt(n));
    CHECK(differ > n / 3);
}

TEST_CASE("maximal function of m = 1 is |f|")
{
    const auto op = free_op(1023);
    const Eigen::MatrixXd F = test_family(*op, 5, 4, 4);
    const auto grid = dilation_grid(*op, 8);
    const Eigen::MatrixXd out = maximal_single(*op, [](double) { return 1.0; }, F, grid);
    CHECK((out - F.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("maximal family of one symbol is the single multiplier")
{
    const auto op = free_op();
    const Field f = test_family(*op, 9, 1, 0).col(0);
    const Symbol m = [](double l) { return 1.0 / (1.0 + l); };
    const Field single = apply_multiplier(*op, m, f).cwiseAbs();
    CHECK((maximal_family(*op, {m}, f) - single).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((maximal_family(*op, {m, m, m}, f) - single).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dyadic maximal heat function dominates every dyadic dilation")
{
    const auto op = free_op();
    const Field f = test_family(*op, 2, 0, 1).col(0);
    const Symbol heat = [](double l) { return std::exp(-l); };
    const Field mf = maximal_dyadic(*op, heat, f);
    for (double t : dyadic_grid(*op)) {
        const Field g = heat_kernel(op).apply(t, f).cwiseAbs();
        CHECK((mf.array() >= g.array() - 1e-12).all());
    }
}

TEST_CASE("dilation grids are geometric")
{
    const auto op = free_op();
    const auto t = dilation_grid(*op, 4);
    for (std::size_t i = 1; i < t.size(); ++i)
        CHECK(t[i] / t[i - 1] == doctest::Approx(std::exp2(0.25)));
    CHECK(t.front() <= 1.0 / op->lambda_max());
    CHECK(t.back() >= 1.0 / op->lambda_min());
    CHECK_THROWS_AS(dilation_grid(*op, 0), std::invalid_argument);
}

TEST_CASE("lp norms")
{
    const Field cell = Field::Constant(4, 0.25);
    const Field g = Field::Constant(4, 3.0);
    CHECK(lp_norm(g, cell, 2.0) == doctest::Approx(3.0));
    CHECK(lp_norm(g, cell, 4.0) == doctest::Approx(3.0));
    Field h(4);
    h << 1, -2, 0, 0;
    CHECK(lp_norm(h, cell, 1.0) == doctest::Approx(0.75));
    CHECK(lp_norm(h, cell, INFINITY) == 2.0);
}

TEST_CASE("test family is seeded")
{
    const auto op = free_op();
    const auto a = test_family(*op, 1), b = test_family(*op, 1), c = test_family(*op, 2);
    CHECK(a.cols() == 64);
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("random symbols are normalised to unit dyadic sup")
{
    const RandomSymbolGenerator gen(1.5, -3, 3, 7);
    for (int i = 0; i < 3; ++i) {
        const auto s = gen.make(i);
        double best = 0.0;
        for (int k = -4; k <= 4; ++k)
            best = std::max(best, sobolev_norm(s.m, k, SobolevExponent::two, 1.5));
        CHECK(best == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s.m(std::exp2(-6.0)) == 0.0);
        CHECK(gen.raw_sup(i) > 0.0);
    }
    CHECK(gen.make(0).m(1.3) == RandomSymbolGenerator(1.5, -3, 3, 7).make(0).m(1.3));
}

TEST_CASE("config parsing is strict")
{
    using J = nlohmann::json;
    CHECK_THROWS_AS(ExperimentConfig::from_json(J{{"experiment", "growth"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(J{{"schema", "smlab/1"}, {"experiment", "growth"}, {"colour", 1}}),
                    ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json(J{{"schema", "smlab/1"}, {"experiment", "growth"}, {"p", "x"}}),
                    ConfigError);
    CHECK_THROWS_AS(
        ExperimentConfig::from_json(J{{"schema", "smlab/1"}, {"experiment", "growth"}, {"operator", "nope"}}),
        ConfigError);

    auto c = ExperimentConfig::from_json(J{{"schema", "smlab/1"}, {"experiment", "growth"}});
    CHECK_NOTHROW(c.validate());
    c.r = 2.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.r = 1.5;
    c.p = 1.2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.p = 4.0;
    c.s = 0.5;  // below n/r = 2/3
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.s = 1.5;
    c.experiment = "unknown";
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("default operators and grids")
{
    auto c = ExperimentConfig::from_json({{"schema", "smlab/1"}, {"experiment", "doob-check"}});
    CHECK(c.resolved_operator().name() == "inv_square:3:2");
    CHECK(c.resolved_grid().kind == DomainKind::half_line_dirichlet);
    CHECK(c.resolved_grid().alpha == 2.0);
    c = ExperimentConfig::from_json({{"schema", "smlab/1"}, {"experiment", "stein"}, {"operator", "bessel:2"}});
    CHECK(c.resolved_grid().kind == DomainKind::half_line_neumannlike);
    c = ExperimentConfig::from_json({{"schema", "smlab/1"}, {"experiment", "stein"}});
    CHECK(c.resolved_grid().kind == DomainKind::full_line);
    // The resolved config round-trips.
    const auto again = ExperimentConfig::from_json(c.to_json());
    CHECK(again.to_json() == c.to_json());
}

TEST_CASE("exit codes and determinism")
{
    auto bad = small_config("stein");
    bad.r = 2.5;
    CHECK(run_to_exit_code(bad) == 1);

    // Every ε on the default grid sits below 2/√levels, so good-λ is degenerate and fails.
    CHECK(run_to_exit_code(small_config("goodlambda")) == 2);

    const auto cfg = small_config("stein");
    CHECK(run_to_exit_code(cfg) == 0);
    const auto a = run(cfg), b = run(cfg);
    CHECK(a.results.dump() == b.results.dump());
    CHECK(a.tables == b.tables);
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / "report.json"));
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / "stein.csv"));
}
