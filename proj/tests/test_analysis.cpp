#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "wavelab/analysis.hpp"
#include "wavelab/errors.hpp"

using namespace wavelab;

namespace {

double radius(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

Metric certified_bump() { return build_radial_bump(0.1, 1.0, 4.0, {{0.5, 1}}); }

StrichartzTriple triple(const std::string& p, const std::string& q, const std::string& g, int n)
{
    return {Exponent::parse(p), Exponent::parse(q), Exponent::parse(g), n};
}

} // namespace

TEST_CASE("sobolev norm of a single mode and Parseval")
{
    const Grid g = Grid::cartesian(3, std::numbers::pi, 16);
    std::vector<double> f(g.size()), l2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto x = g.point(i);
        f[i] = std::cos(2.0 * x[0] + 1.0 * x[1]);
    }
    const double base = std::sqrt(l2_inner(g, f, f));
    for (double gamma : {0.0, 0.5, 1.0, 2.0, -1.0})
        CHECK(sobolev_norm(g, f, gamma) == doctest::Approx(std::pow(std::sqrt(5.0), gamma) * base).epsilon(1e-12));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (double& v : l2) v = n01(rng);
    CHECK(std::abs(sobolev_norm(g, l2, 0.0) - std::sqrt(l2_inner(g, l2, l2))) <= 1e-12 * std::sqrt(l2_inner(g, l2, l2)));

    bool flagged = false;
    sobolev_norm(g, l2, -0.5, &flagged);
    CHECK(flagged);
    CHECK_THROWS_AS(sobolev_norm(g, l2, -1.5), DivergentNormError);
}

TEST_CASE("spectral and difference gradient norms agree on band-limited data")
{
    const Grid g = Grid::cartesian(3, 6.0, 64);
    const CauchyData d = sample_random_data(11, 3.0, 2.0, g);
    CauchyData u = d;
    std::fill(u.f2.begin(), u.f2.end(), 0.0);
    const double fd = hdot_norm(u);
    const double sp = sobolev_norm(g, d.f1, 1.0);
    CHECK(std::abs(fd - sp) <= 0.02 * sp);
}

TEST_CASE("strichartz norm quadrature")
{
    const Grid g = Grid::cartesian(3, 1.0, 4);
    std::vector<std::vector<double>> snaps(9, std::vector<double>(g.size(), 2.0));
    const double V = 8.0, tau = 2.0;
    CHECK(strichartz_norm(g, snaps, 4.0, 3.0, tau / 8) == doctest::Approx(2.0 * std::pow(V, 1.0 / 3) * std::pow(tau, 0.25)));
    CHECK_THROWS_AS(strichartz_norm(g, {}, 2.0, 2.0, 0.1), ParameterError);

    // p = q = 2 against a direct space-time sum, and refinement stability
    const Grid h = Grid::cartesian(3, 6.0, 32);
    CauchyData d = CauchyData::zeros(h);
    for (std::size_t i = 0; i < h.size(); ++i) d.f1[i] = std::exp(-h.radius(i) * h.radius(i));
    auto series = [&](int count, double horizon) {
        std::vector<std::vector<double>> s;
        for (int j = 0; j <= count; ++j) s.push_back(free_evolve_fft(d, horizon * j / count).f1);
        return s;
    };
    const auto coarse = series(40, 2.0);
    double direct = 0.0;
    for (std::size_t j = 0; j < coarse.size(); ++j)
        direct += (j == 0 || j + 1 == coarse.size() ? 0.5 : 1.0) * l2_inner(h, coarse[j], coarse[j]) * 0.05;
    CHECK(strichartz_norm(h, coarse, 2.0, 2.0, 0.05) == doctest::Approx(std::sqrt(direct)).epsilon(1e-12));
    const double a = strichartz_norm(h, coarse, 8.0, 8.0, 0.05);
    const double b = strichartz_norm(h, series(80, 2.0), 8.0, 8.0, 0.025);
    CHECK(std::abs(a - b) <= 0.005 * b);
}

TEST_CASE("exponent parsing")
{
    CHECK(Exponent::parse("10/3").numerator() == 10);
    CHECK(Exponent::parse("10/3").denominator() == 3);
    CHECK(Exponent::parse("2.5").str() == "5/2");
    CHECK(Exponent::parse("inf").is_infinite());
    CHECK(Exponent::parse(" 8 ").str() == "8");
    CHECK(Exponent::from_double(1.0 / 3.0).str() == "1/3");
    CHECK_FALSE(Exponent::from_double(std::numbers::pi).is_exact());
    CHECK_THROWS_AS(Exponent::parse("abc"), ParameterError);
}

TEST_CASE("admissibility examples")
{
    const auto r14 = AdmissibilityRule::perturbed_1_4;
    const auto r13 = AdmissibilityRule::free_1_3;
    CHECK(check_admissibility(triple("8", "8", "1", 3), r14).passed);
    const auto wrong_p = check_admissibility(triple("4", "8", "1", 3), r14);
    CHECK_FALSE(wrong_p.passed);
    CHECK(wrong_p.binding_constraint == "1/p = n(q-2)/(2q) - 1");
    CHECK(check_admissibility(triple("4", "4", "1", 5), r14).passed);
    CHECK(check_admissibility(triple("3", "10/3", "1", 5), r14).binding_constraint == "q > 2n/(n-2)");
    CHECK(check_admissibility(triple("inf", "5", "1", 5), r14).binding_constraint == "q < 2n/(n-3)");
    const auto excl = check_admissibility(triple("2", "inf", "1", 3), r13);
    CHECK_FALSE(excl.passed);
    CHECK(excl.binding_constraint == "(p,q,gamma) != (2,inf,1) when n = 3");
    CHECK(check_admissibility(triple("2", "inf", "2", 5), r13).passed);
    CHECK(check_admissibility(triple("4", "4", "1", 4), r13).binding_constraint == "n odd >= 3");
    CHECK(check_admissibility(triple("4", "4", "1/2", 3), AdmissibilityRule::local_5_1).passed);
    CHECK_FALSE(check_admissibility(triple("4", "inf", "5/4", 3), AdmissibilityRule::local_5_1).passed);

    // inexact inputs go through the tolerance path and agree at the boundary
    const double q = 3.0 * std::numbers::pi;
    StrichartzTriple t{Exponent::from_double(1.0 / (1.5 * (q - 2.0) / q - 1.0)), Exponent::from_double(q),
                       Exponent::from_double(1.0), 3};
    const auto v = check_admissibility(t, r14);
    CHECK(v.passed);
    CHECK_FALSE(v.exact);
}

TEST_CASE("admissibility agrees with direct evaluation on a rational grid")
{
    // independent evaluation in p and q directly
    auto direct = [](double p, double q, double g, int n, AdmissibilityRule rule) {
        const double eps = 1e-12;
        const bool pinf = std::isinf(p), qinf = std::isinf(q);
        const double ip = pinf ? 0.0 : 1.0 / p, iq = qinf ? 0.0 : 1.0 / q;
        if (p < 2 || q < 2) return false;
        switch (rule) {
        case AdmissibilityRule::free_1_3:
            if (n == 3 && p == 2 && qinf && g == 1) return false;
            return g > 0 && std::abs(ip + n * iq - (n / 2.0 - g)) < eps && ip <= (n - 1) / 2.0 * (0.5 - iq) + eps;
        case AdmissibilityRule::perturbed_1_4:
            if (g != 1) return false;
            if (n == 3 && p == 2 && qinf) return false;
            if (n == 3 ? !(qinf || q > 6) : !(q > 2.0 * n / (n - 2) && q < 2.0 * n / (n - 3))) return false;
            return std::abs(ip - (qinf ? n / 2.0 : n * (q - 2) / (2 * q)) + 1.0) < eps;
        case AdmissibilityRule::local_5_1:
            if (pinf || qinf || !(g > 0)) return false;
            return std::abs(n * (q - 2) / (2 * q) - g - ip) < eps && ip <= (n - 1) * (q - 2) / (4 * q) + eps;
        }
        return false;
    };
    const std::vector<std::string> ps = {"2", "5/2", "3", "4", "8", "10/3", "inf"};
    const std::vector<std::string> qs = {"2", "3", "10/3", "4", "5", "6", "7", "8", "10", "inf"};
    const std::vector<std::string> gs = {"1/4", "1/2", "3/4", "1", "5/4", "3/2", "7/8"};
    int disagreements = 0, passes = 0;
    for (int n : {3, 5, 7})
        for (const auto& p : ps)
            for (const auto& q : qs)
                for (const auto& g : gs) {
                    const auto t = triple(p, q, g, n);
                    for (auto rule : {AdmissibilityRule::free_1_3, AdmissibilityRule::perturbed_1_4,
                                      AdmissibilityRule::local_5_1}) {
                        const bool a = check_admissibility(t, rule).passed;
                        passes += a;
                        if (a != direct(t.p.value(), t.q.value(), t.gamma.value(), n, rule)) ++disagreements;
                    }
                }
    CHECK(disagreements == 0);
    CHECK(passes > 10);
}

TEST_CASE("multiplier terms")
{
    const Metric flat = flat_metric();
    const auto xi = MultiplierFunction::rational(0.5, 1.0);
    const std::vector<double> x = {0.3, -0.2, 0.5};
    FieldJet zero{0.0, 0.0, {0.0, 0.0, 0.0}};
    const auto t0 = multiplier_terms(flat, xi, 0.1, x, zero, 0.01);
    CHECK(t0.X == 0.0);
    CHECK(t0.Z == 0.0);
    for (double y : t0.Y) CHECK(y == 0.0);

    FieldJet jet{0.7, -0.4, {0.2, 0.9, -0.3}};
    const auto none = multiplier_terms(flat, MultiplierFunction::constant(0.0), 0.1, x, jet, 0.01);
    CHECK(none.X == doctest::Approx(none.energy));
    CHECK(none.M == jet.u_t);
    CHECK_THROWS_AS(multiplier_terms(flat, xi, 0.0, std::vector<double>{0.001, 0.0, 0.0}, jet, 0.01), DomainError);

    // Z >= 0 for u = exp(-r^2) cos t at a = 1
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    double zmin = 1.0;
    for (int k = 0; k < 2000; ++k) {
        const std::vector<double> p = {U(rng), U(rng), U(rng)};
        const double t = U(rng), r = radius(p), e = std::exp(-r * r);
        if (r <= 0.01) continue;
        FieldJet j{e * std::cos(t), -e * std::sin(t), {}};
        for (double c : p) j.grad.push_back(-2.0 * c * e * std::cos(t));
        zmin = std::min(zmin, multiplier_terms(flat, xi, t, p, j, 0.01).Z);
    }
    CHECK(zmin >= -1e-14);
}

TEST_CASE("Z is nonnegative for arbitrary jets on a certified metric")
{
    const Metric m = certified_bump();
    const auto xi = MultiplierFunction::rational(0.5, 1.0);
    SampleGrid s;
    s.t_points = 8;
    s.x_points = 24;
    for (const auto& rep : check_energy_conditions(m, xi, s)) REQUIRE(rep.passed);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::normal_distribution<double> n01;
    double zmin = 1.0;
    for (int k = 0; k < 20000; ++k) {
        const std::vector<double> p = {2 * U(rng), 2 * U(rng), 2 * U(rng)};
        if (radius(p) <= 0.05) continue;
        FieldJet j{n01(rng), n01(rng), {n01(rng), n01(rng), n01(rng)}};
        zmin = std::min(zmin, multiplier_terms(m, xi, 4.0 * (U(rng) + 1.0), p, j, 0.05).Z);
    }
    CHECK(zmin >= 0.0);
}

TEST_CASE("multiplier identity converges under refinement")
{
    IdentityLadder ladder;
    ladder.extent = 1.5;
    ladder.points = {24, 48, 96};
    ladder.times = {0.3, 0.9};
    const SpaceTimeFunction gauss = [](double t, std::span<const double> x) {
        return std::cos(t) * std::exp(-radius(x) * radius(x));
    };

    const auto zero = verify_identity_8_5(flat_metric(), MultiplierFunction::rational(0.5, 1.0),
                                          [](double, std::span<const double>) { return 0.0; }, ladder);
    for (const auto& row : zero.rows) CHECK(row.residual == 0.0);

    // the rational multiplier has a |x| kink at the origin
    const auto rat = verify_identity_8_5(flat_metric(), MultiplierFunction::rational(0.5, 1.0), gauss, ladder);
    CHECK(rat.monotone);
    for (std::size_t k = 0; k + 1 < rat.rows.size(); ++k) {
        const double ratio = rat.rows[k].residual / rat.rows[k + 1].residual;
        CHECK(ratio >= 3.2);
        CHECK(ratio <= 4.8);
    }
    CHECK(rat.rows[0].boundary_term == 0.0);

    const auto odd = verify_identity_8_5(flat_metric(), MultiplierFunction::odd(0.5, 1.0), gauss, ladder);
    MESSAGE("orders " << odd.orders[0] << " " << odd.orders[1]);
    CHECK(odd.min_order() >= 1.8);
    CHECK(odd.rows.back().residual <= 0.01 * odd.rows.back().reference);

    const SpaceTimeFunction wave = [](double t, std::span<const double> x) {
        const double r = radius(x);
        return std::cos(2.0 * x[0] + x[1] - std::sqrt(5.0) * t) * std::exp(-r * r);
    };
    const auto bump = verify_identity_8_5(certified_bump(), MultiplierFunction::odd(0.5, 1.0), wave, ladder);
    CHECK(bump.min_order() >= 1.8);

    const auto constant = verify_identity_8_5(flat_metric(), MultiplierFunction::constant(0.5), gauss, ladder);
    CHECK(constant.rows[0].boundary_term == doctest::Approx(0.5 * std::numbers::pi * 2 * 0.5 * (std::pow(std::cos(0.3), 2) + std::pow(std::cos(0.9), 2))));
}

TEST_CASE("energy bound experiment")
{
    EnergyBoundOptions o;
    o.trials = 2;
    o.periods = 10;
    o.grid = Grid::radial_grid(3, 60.0, 1201);
    const auto flat = energy_bound_experiment(flat_metric(1.0, 4.0), o);
    CHECK(flat.sup_ratio <= 1.001);
    CHECK(flat.min_ratio >= 0.999);
    const auto bump = energy_bound_experiment(certified_bump(), o);
    CHECK(bump.max_slope <= 1e-3);
    CHECK_FALSE(bump.trend_flag);
    CHECK(bump.trials[0].t.size() == 81);
}

TEST_CASE("free energy drift is second order in the time step")
{
    EnergyBoundOptions o;
    o.trials = 1;
    o.periods = 4;
    o.grid = Grid::radial_grid(3, 40.0, 801);
    o.cfl_safety = 0.8;
    const auto coarse = energy_bound_experiment(flat_metric(1.0, 4.0), o);
    o.cfl_safety = 0.4;
    const auto fine = energy_bound_experiment(flat_metric(1.0, 4.0), o);
    const auto drift = [](const EnergyBoundReport& r) { return std::max(r.sup_ratio - 1.0, 1.0 - r.min_ratio); };
    CHECK(drift(coarse) / drift(fine) >= 3.0);
    CHECK(drift(coarse) / drift(fine) <= 5.0);
    o.cfl_safety = 1.5;
    CHECK_THROWS_AS(energy_bound_experiment(flat_metric(1.0, 4.0), o), ParameterError);
}

TEST_CASE("free local smoothing integral")
{
    const Grid g = Grid::cartesian(3, 6.0, 32);
    const auto zero = local_smoothing_free({1.0, 1.5}, CauchyData::zeros(g), 1.0, 8.0, 32);
    CHECK(zero.total == 0.0);
    double lo = 1e300, hi = 0.0;
    for (int k = 0; k < 4; ++k) {
        const auto r = local_smoothing_free({1.0, 1.5}, sample_random_data(200 + k, 1.0, 2.0, g), 1.0, 8.0, 64);
        CHECK(r.tail_fraction <= 0.05);
        CHECK_FALSE(r.out_of_hypothesis);
        lo = std::min(lo, r.ratio);
        hi = std::max(hi, r.ratio);
    }
    CHECK(hi <= 10.0 * lo);
    CHECK(local_smoothing_free({1.0, 1.5}, sample_random_data(1, 1.0, 2.0, g), 1.5, 8.0, 16).out_of_hypothesis);
}

TEST_CASE("strichartz experiment")
{
    StrichartzOptions o;
    o.trials = 2;
    o.horizon = 8.0;
    o.grid = Grid::radial_grid(3, 16.0, 641);
    const auto rep = strichartz_experiment(flat_metric(1.0, 1.0), triple("8", "8", "1", 3), o);
    CHECK(rep.trials.size() == 2);
    CHECK(rep.sup_ratio >= 1.0);
    CHECK(rep.spread <= 10.0);
    for (const auto& t : rep.trials) {
        CHECK(t.inner_lplq <= t.lplq + t.outer_lplq + 1e-12);
        CHECK(t.lplq <= t.inner_lplq + t.outer_lplq + 1e-12);
    }
    try {
        strichartz_experiment(flat_metric(), triple("4", "8", "1", 3), o);
        FAIL("inadmissible triple accepted");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("1/p = n(q-2)/(2q) - 1") != std::string::npos);
    }
}
