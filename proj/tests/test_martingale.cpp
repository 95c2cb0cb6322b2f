#include "smlab/martingale.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace smlab;

namespace {

Field random_field(int n, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Field f(n);
    for (auto& v : f)
        v = z(rng);
    return f;
}

}  // namespace

TEST_CASE("two-node expectation is the weighted average")
{
    const auto g = WeightedGrid::make(DomainKind::half_line_dirichlet, 2, 2.0, 0.0);
    Field w(2), f(2);
    w << 1.0, 3.0;
    f << 4.0, 0.0;
    const MartingaleStack stack(build_dyadic(g, 0, 1), w);
    const Field e0 = stack.expectation(0, f);
    CHECK(e0[0] == doctest::Approx(1.0));
    CHECK(e0[1] == doctest::Approx(1.0));
    CHECK((stack.expectation(1, f) - f).cwiseAbs().maxCoeff() == 0.0);
    const Field d = stack.difference(0, f);
    CHECK(d[0] == doctest::Approx(3.0));
    CHECK(d[1] == doctest::Approx(-1.0));
    CHECK_THROWS_AS(stack.difference(1, f), std::out_of_range);
}

TEST_CASE("telescoping and Pythagoras on a weighted grid")
{
    const auto g = build_grid(DomainKind::half_line_dirichlet, 300, 10.0, 2.0);
    const Field h = g.nodes();
    const Measure nu = nu_measure(g, h);
    const MartingaleStack stack(full_dyadic(g), nu.cell);
    const Field f = random_field(g.size(), 7);
    Field sum = stack.expectation(stack.k_min(), f);
    double energy = stack.l2_norm_sq(sum);
    for (int k = stack.k_min(); k < stack.k_max(); ++k) {
        const Field d = stack.difference(k, f);
        sum += d;
        energy += stack.l2_norm_sq(d);
        // Martingale differences integrate to zero against ν on every coarser cube.
        CHECK(std::abs(stack.integral(d)) < 1e-9 * std::sqrt(stack.l2_norm_sq(d) * nu.cell.sum()));
    }
    const Field top = stack.expectation(stack.k_max(), f);
    CHECK((sum - top).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(energy == doctest::Approx(stack.l2_norm_sq(top)).epsilon(1e-12));
}

TEST_CASE("expectations are projections")
{
    const auto g = build_grid(DomainKind::half_line_dirichlet, 128, 4.0, 1.0);
    const MartingaleStack stack(full_dyadic(g), g.quad_weights());
    const Field f = random_field(g.size(), 11);
    const Field e3 = stack.expectation(3, f);
    CHECK((stack.expectation(3, e3) - e3).cwiseAbs().maxCoeff() < 1e-12);
    // Tower property: E_2 E_5 = E_2.
    CHECK((stack.expectation(2, stack.expectation(5, f)) - stack.expectation(2, f)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(stack.integral(e3) == doctest::Approx(stack.integral(f)));
}

TEST_CASE("square function and maximal average")
{
    const auto g = build_grid(DomainKind::half_line_dirichlet, 64, 4.0, 0.0);
    const MartingaleStack stack(full_dyadic(g), g.quad_weights());
    const Field c = Field::Constant(g.size(), 5.0);
    CHECK(stack.square_function(c).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((stack.max_average(c).array() - 5.0).abs().maxCoeff() < 1e-12);
    const Field f = random_field(g.size(), 3);
    CHECK((stack.max_average(f).array() >= f.array().abs() - 1e-12).all());
    // Cube sups dominate the pointwise differences, so the square function
    // dominates the plain one.
    Field plain = Field::Zero(g.size());
    for (int k = stack.k_min(); k < stack.k_max(); ++k)
        plain += stack.difference(k, f).array().square().matrix();
    CHECK((stack.square_function(f).array() >= plain.array().sqrt() - 1e-12).all());
}

TEST_CASE("Haar functions are mean zero and mutually orthogonal")
{
    const auto g = build_grid(DomainKind::half_line_dirichlet, 64, 4.0, 2.0);
    const MartingaleStack stack(full_dyadic(g), g.quad_weights());
    const Field a = haar_function(stack, 1, 0);
    const Field b = haar_function(stack, 1, 1);
    const Field c = haar_function(stack, 2, 1);
    CHECK(std::abs(stack.integral(a)) < 1e-12);
    CHECK(std::abs(stack.integral(b)) < 1e-12);
    CHECK(std::abs(stack.integral(a.cwiseProduct(b))) < 1e-12);
    CHECK(std::abs(stack.integral(a.cwiseProduct(c))) < 1e-9);
    // E_{k+1} h = h and E_k h = 0 for a level-k Haar function.
    CHECK((stack.expectation(2, a) - a).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(stack.expectation(1, a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Haar family is reproducible from its seed")
{
    const auto g = build_grid(DomainKind::half_line_dirichlet, 64, 4.0, 0.0);
    const MartingaleStack stack(full_dyadic(g), g.quad_weights());
    HaarFamilyOptions opt;
    opt.members = 4;
    const auto a = haar_family(stack, opt);
    const auto b = haar_family(stack, opt);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == b[i]);
    opt.base_seed = 2;
    CHECK(haar_family(stack, opt)[0] != a[0]);
}

TEST_CASE("good-lambda below the critical epsilon is provably empty")
{
    const auto g = build_grid(DomainKind::half_line_dirichlet, 256, 10.0, 0.0);
    const MartingaleStack stack(full_dyadic(g), g.quad_weights());
    HaarFamilyOptions hf;
    hf.members = 8;
    const auto family = haar_family(stack, hf);
    GoodLambdaOptions opt;
    const auto rep = good_lambda_experiment(stack, family, opt);
    CHECK(rep.levels == stack.k_max() - stack.k_min());
    CHECK(rep.eps_critical == doctest::Approx(2.0 / std::sqrt(rep.levels)));
    for (std::size_t i = 0; i < rep.eps_grid.size(); ++i)
        if (rep.eps_grid[i] < rep.eps_critical)
            CHECK(rep.worst_ratio[i] == 0.0);
    const Field ones = Field::Ones(g.size());
    CHECK(good_lambda_experiment(stack, family, opt, &ones).to_csv() == rep.to_csv());
}

TEST_CASE("stack rejects mismatched measures")
{
    const auto g = build_grid(DomainKind::half_line_dirichlet, 64, 4.0, 0.0);
    CHECK_THROWS_AS(MartingaleStack(full_dyadic(g), Field::Ones(10)), std::invalid_argument);
    CHECK_THROWS_AS(MartingaleStack(full_dyadic(g), -Field::Ones(64)), std::invalid_argument);
}
