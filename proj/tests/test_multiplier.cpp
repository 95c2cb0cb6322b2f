#include "smlab/multiplier.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace smlab;

TEST_CASE("rearrangement sorts descending")
{
    const auto r = rearrange({3.0, 1.0, 2.0});
    CHECK(r == std::vector<double>{3.0, 2.0, 1.0});
    CHECK(rearrange({}).empty());
}

TEST_CASE("series partial sum by brute force")
{
    // ω(k) = 1/(1+log(1+|k|)) on k = −5..5; the reference value was summed
    // independently in extended precision.
    std::vector<double> omega;
    for (int k = -5; k <= 5; ++k)
        omega.push_back(1.0 / (1.0 + std::log(1.0 + std::abs(k))));
    CHECK(series_partial_sum(rearrange(omega), 100) == doctest::Approx(1.8485794871928922).epsilon(1e-13));
    // ℓ = 1 never contributes (log 1 = 0).
    CHECK(series_partial_sum({2.0, 5.0}, 10) == 2.0);
}

TEST_CASE("power-log profile sums")
{
    const auto p0 = power_log_profile(0.0, 1000000);
    const auto p5 = power_log_profile(0.5, 1000000);
    CHECK(p0[0] == 1.0);
    CHECK(p0[9] == doctest::Approx(1.0 / std::sqrt(1.0 + std::log(10.0))));
    // Frozen partial sums over the windows 10³ and 10⁶.
    CHECK(series_partial_sum(p0, 1000) == doctest::Approx(3.0605968080329804).epsilon(1e-12));
    CHECK(series_partial_sum(p0, 1000000) == doctest::Approx(3.7203094616027435).epsilon(1e-12));
    CHECK(series_partial_sum(p5, 1000000) == doctest::Approx(2.880533279454859).epsilon(1e-12));
}

TEST_CASE("series criterion separates the two power-log profiles")
{
    CHECK(series_criterion(power_log_profile(0.5, 1000000)).verdict == SeriesVerdict::converges);
    CHECK(series_criterion(power_log_profile(0.0, 1000000)).verdict == SeriesVerdict::diverges);
    const auto finite = series_criterion({1.0, 0.5, 0.25, 0.0, 0.0, 0.0, 0.0, 0.0});
    CHECK(finite.finite_support);
    CHECK(finite.verdict == SeriesVerdict::converges);
    CHECK(to_string(SeriesVerdict::inconclusive) == "inconclusive");
}

TEST_CASE("phi window")
{
    CHECK(phi_window(1.0) == doctest::Approx(1.0));
    CHECK(phi_window(0.5) == 0.0);
    CHECK(phi_window(2.0) == 0.0);
    CHECK(phi_window(3.0) == 0.0);
    CHECK(phi_window(std::sqrt(2.0)) == doctest::Approx(phi_window(1.0 / std::sqrt(2.0))));
    // exp(1 − 1/(1 − 1/4)) at u = 1/2.
    CHECK(phi_window(std::sqrt(2.0)) == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)));
}

TEST_CASE("Sobolev norm is linear in the symbol and dilation covariant")
{
    const auto bump = log_gaussian_bump(1.0, 0.5);
    const double a = sobolev_norm(bump.m, 0.0, SobolevExponent::two, 1.5);
    const auto doubled = scale_symbol(bump, 2.0);
    CHECK(sobolev_norm(doubled.m, 0.0, SobolevExponent::two, 1.5) == doctest::Approx(2.0 * a).epsilon(1e-10));
    // m(2^j ·) at scale k is m at scale k + j.
    const ComplexSymbol shifted = [&](double l) { return bump.m(8.0 * l); };
    CHECK(sobolev_norm(shifted, -1.0, SobolevExponent::two, 1.5) ==
          doctest::Approx(sobolev_norm(bump.m, 2.0, SobolevExponent::two, 1.5)).epsilon(1e-9));
    CHECK(sobolev_norm(lookup_symbol("zero").m, 0.0, SobolevExponent::infinity, 1.5) == 0.0);
    // At s = 0 the norm is the plain L² norm of φ on [1/2, 2].
    const ComplexSymbol one = [](double) { return 1.0; };
    double l2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double p = phi_window(0.5 + (i + 0.5) * 1.5 / n);
        l2 += p * p * 1.5 / n;
    }
    CHECK(sobolev_norm(one, 0.0, SobolevExponent::two, 0.0) == doctest::Approx(std::sqrt(l2)).epsilon(1e-6));
}

TEST_CASE("imaginary powers have a constant dyadic profile")
{
    const auto p = MultiplierProfile::from_symbol(lookup_symbol("imag_power:1"), -6, 6, SobolevExponent::two, 1.5);
    const double top = *std::max_element(p.omega.begin(), p.omega.end());
    const double bottom = *std::min_element(p.omega.begin(), p.omega.end());
    CHECK((top - bottom) / top < 0.01);
    const auto checks = theorem_conditions(p, 1.0, 2.0, 1.5, 4.0);
    CHECK_FALSE(checks.get("square_summable").pass);
    CHECK(checks.get("maximal_family").pass);
}

TEST_CASE("(1+|k|)^-1 profile satisfies every criterion")
{
    std::vector<double> omega;
    for (int k = -400; k <= 400; ++k)
        omega.push_back(1.0 / (1.0 + std::abs(k)));
    const auto p = MultiplierProfile::from_omega("harmonic", omega, -400, 3.0);
    CHECK(square_sum_tail_share(omega) < 0.1);
    const auto checks = theorem_conditions(p, 1.0, 2.0, 1.5, 1.8);
    for (const auto& t : checks.theorems)
        CHECK_MESSAGE(t.pass, t.theorem);
}

TEST_CASE("zero symbol passes trivially and ranges are enforced")
{
    const auto p = MultiplierProfile::from_symbol(lookup_symbol("zero"), -4, 4, SobolevExponent::two, 0.1);
    const auto checks = theorem_conditions(p, 1.0, 2.0, 1.5, 1.8);
    for (const auto& t : checks.theorems)
        CHECK_MESSAGE(t.pass, t.theorem);
    CHECK_THROWS_AS(theorem_conditions(p, 1.0, 2.0, 2.0, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(theorem_conditions(p, 1.0, 1.5, 1.5, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(checks.get("no_such_theorem"), std::out_of_range);
}

TEST_CASE("square-sum tail share")
{
    CHECK(square_sum_tail_share(std::vector<double>(100, 1.0)) == doctest::Approx(0.5).epsilon(0.05));
    CHECK(square_sum_tail_share(std::vector<double>(100, 0.0)) == 0.0);
}

TEST_CASE("complex log-gamma")
{
    for (double x : {0.3, 1.0, 2.5, 7.0})
        CHECK(complex_lgamma({x, 0.0}).real() == doctest::Approx(std::lgamma(x)).epsilon(1e-12));
    // |Γ(1+it)|² = πt/sinh(πt)
    for (double t : {0.5, 2.0, 6.0}) {
        const double lhs = 2.0 * complex_lgamma({1.0, t}).real();
        CHECK(lhs == doctest::Approx(std::log(M_PI * t / std::sinh(M_PI * t))).epsilon(1e-11));
    }
    // Γ(1/2) = √π through the reflection branch: Γ(−1/2) = −2√π.
    const auto z = complex_lgamma({-0.5, 0.0});
    CHECK(z.real() == doctest::Approx(std::log(2.0 * std::sqrt(M_PI))).epsilon(1e-12));
}

TEST_CASE("Carbery norm of order one against the closed form")
{
    // μ = 1: s²(m/s)' = s m' − m. For m = s e^{−s} this is −s² e^{−s}, and
    // ∫₀^∞ s⁴ e^{−2s} ds/s = 3!/2⁴.
    const auto cn = carbery_norm(lookup_symbol("lambda_heat").m, 1.0);
    CHECK(cn.decays);
    CHECK(cn.norm == doctest::Approx(std::sqrt(6.0 / 16.0)).epsilon(1e-6));
    CHECK_FALSE(carbery_norm(lookup_symbol("heat").m, 1.0).decays);
}

TEST_CASE("reconstruction constant matches 1/Gamma(mu)")
{
    for (double mu : {1.0, 1.5}) {
        const auto c = calibrate_c_mu(mu);
        CHECK(c.theory == doctest::Approx(1.0 / std::tgamma(mu)));
        CHECK(c.c_mu == doctest::Approx(c.theory).epsilon(1e-6));
    }
    const auto bump = log_gaussian_bump(1.0, 0.5);
    const auto d = fractional_derivative(bump.m, 1.5);
    for (double l : {0.5, 1.0, 2.0})
        CHECK(reconstruct(d, 1.0 / std::tgamma(1.5), l) == doctest::Approx(bump.m(l).real()).epsilon(1e-6));
}

TEST_CASE("F_j partition of 2^-|k| by brute force")
{
    std::vector<double> omega;
    for (int k = -8; k <= 8; ++k)
        omega.push_back(std::exp2(-std::abs(k)));
    const auto p = MultiplierProfile::from_omega("geometric", omega, -8, 1.0);
    const auto bands = build_fj_partition(p);
    // ω* = 1, ½, ½, ¼, ¼, ...; ω*(4) = ¼, ω*(16) = 2⁻⁸, ω*(256) = 0 past the window.
    auto members = [&](int j) {
        for (const auto& b : bands)
            if (b.j == j)
                return std::set<int>(b.members.begin(), b.members.end());
        return std::set<int>{};
    };
    CHECK(members(0) == std::set<int>{-1, 0, 1});
    CHECK(members(1).empty());
    CHECK(members(2) == std::set<int>{-7, -6, -5, -4, -3, -2, 2, 3, 4, 5, 6, 7});
    CHECK(members(3) == std::set<int>{-8, 8});
    std::size_t total = 0;
    for (const auto& b : bands) {
        total += b.members.size();
        CHECK(b.members.size() <= b.bound);
    }
    CHECK(total == omega.size());
}

TEST_CASE("tiling with N = 1 and F = {0, 1} uses the bare lattice")
{
    const auto t = tile(1, {0, 1}, 0, 100);
    CHECK(t.period == 16);
    for (std::size_t i = 0; i < t.b.size(); ++i)
        CHECK(t.b[i] == 16 * (t.i_lo + static_cast<long>(i)));
    CHECK(t.verify().total() == 0);
}

TEST_CASE("tiling properties hold for crowded F")
{
    const auto t = tile(2, {0, 1, 2, 5}, -500, 500);
    CHECK(t.verify().total() == 0);
    const auto u = tile(3, {0, 3, 4, 9, 10, 11, 20, 40}, -2000, 2000);
    CHECK(u.verify().total() == 0);
    CHECK_THROWS_AS(tile(1, {0, 1, 2}, 0, 10), std::invalid_argument);
    CHECK_THROWS_AS(tile(1, {}, 0, 10), std::invalid_argument);
}

TEST_CASE("continuous dilations cost at most a bounded factor over dyadic ones")
{
    const auto d = dilation_sup_ratio(lookup_symbol("bump:1:0.5").m, -6, 6, SobolevExponent::two, 1.5);
    CHECK(d.ratio >= 1.0 - 1e-12);
    CHECK(d.ratio <= 4.0);
}
