#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "wavelab/errors.hpp"
#include "wavelab/metric.hpp"

using namespace wavelab;

namespace {

// Independent evaluation of the profile: 1 - f(w)/(f(w)+f(1-w)), f(x)=exp(-1/x).
double profile_ref(double s)
{
    if (s <= 0.5) return 1.0;
    if (s >= 1.0) return 0.0;
    const double w = 2.0 * s - 1.0;
    const double f0 = std::exp(-1.0 / w);
    const double f1 = std::exp(-1.0 / (1.0 - w));
    return f1 / (f0 + f1);
}

Metric moving_bump(double eps = 0.3)
{
    return build_radial_bump(eps, 1.0, 2.0, {{0.5, 1}});
}

} // namespace

TEST_CASE("smooth step is C2 across its ends and matches the reference form")
{
    for (double s : {0.55, 0.6, 0.75, 0.9, 0.99}) CHECK(bump_profile(s).v == doctest::Approx(profile_ref(s)).epsilon(1e-14));
    for (double w : {1e-4, 1e-3}) {
        const Jet2 lo = smooth_step(w);
        const Jet2 hi = smooth_step(1.0 - w);
        CHECK(std::fabs(lo.v) < 1e-100);
        CHECK(std::fabs(lo.d2) < 1e-100);
        CHECK(std::fabs(1.0 - hi.v) < 1e-100);
        CHECK(std::fabs(hi.d1) < 1e-100);
    }
    const Jet2 mid = smooth_step(0.5);
    CHECK(mid.v == doctest::Approx(0.5));
    CHECK(mid.d2 == doctest::Approx(0.0));
}

TEST_CASE("bump metric bounds")
{
    const Metric flat = build_radial_bump(0.0, 1.0, 1.0, {});
    CHECK(flat.lower_bound() == 1.0);
    CHECK(flat.upper_bound() == 1.0);
    const double x[3] = {0.1, 0.2, 0.0};
    CHECK(flat.evaluate(0.3, x) == 1.0);

    const Metric stat = build_radial_bump(0.3, 1.0, 1.0, {});
    CHECK(stat.lower_bound() == 1.0);
    CHECK(stat.upper_bound() == doctest::Approx(1.3).epsilon(1e-15));
    CHECK(stat.time_independent());

    const Metric mov = moving_bump();
    CHECK(mov.upper_bound() == doctest::Approx(1.3).epsilon(1e-14));
    CHECK_FALSE(mov.time_independent());
}

TEST_CASE("bump metric parameter errors")
{
    CHECK_THROWS_AS(build_radial_bump(0.3, -1.0, 1.0, {}), ParameterError);
    CHECK_THROWS_AS(build_radial_bump(0.3, 1.0, 0.0, {}), ParameterError);
    CHECK_THROWS_AS(build_radial_bump(-1.5, 1.0, 1.0, {}), PositivityError);
    CHECK_THROWS_AS(build_radial_bump(0.3, 1.0, 1.0, {{0.5, 0}}), ParameterError);
}

TEST_CASE("negative modulation is shifted to min m = 0")
{
    const Modulation m({{0.8, 1}}, 1.0); // 1 + 0.8(cos - 1) dips to -0.6
    CHECK(m.min() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.max() == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(m(0.5).v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("periodicity and exterior flatness on random points")
{
    const Metric m = moving_bump();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 2000; ++i) {
        const double t = 5.0 * u(rng);
        const double x[3] = {u(rng), u(rng), u(rng)};
        CHECK(std::fabs(m.evaluate(t + m.period(), x) - m.evaluate(t, x)) <= 1e-12);
        const double r = std::hypot(x[0], x[1], x[2]);
        if (r >= 1.0) {
            CHECK(m.evaluate(t, x) == 1.0);
            CHECK(m.d_t(t, x) == 0.0);
            for (double g : m.grad_x(t, x)) CHECK(g == 0.0);
        }
        CHECK(m.evaluate(t, x) >= m.lower_bound());
        CHECK(m.evaluate(t, x) <= m.upper_bound());
    }
}

TEST_CASE("analytic derivatives converge to central differences at second order")
{
    const Metric m = moving_bump(0.4);
    const double t = 0.37;
    const double x[3] = {0.45, 0.3, -0.2};
    auto err = [&](double h) {
        double e = 0.0;
        // t derivative
        const double ft = (m.evaluate(t + h, x) - m.evaluate(t - h, x)) / (2 * h);
        e = std::max(e, std::fabs(ft - m.d_t(t, x)));
        const auto g = m.grad_x(t, x);
        const auto hs = m.hessian_x(t, x);
        for (int d = 0; d < 3; ++d) {
            double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
            xp[d] += h;
            xm[d] -= h;
            e = std::max(e, std::fabs((m.evaluate(t, xp) - m.evaluate(t, xm)) / (2 * h) - g[d]));
            const auto gp = m.grad_x(t, xp);
            const auto gm = m.grad_x(t, xm);
            for (int k = 0; k < 3; ++k) e = std::max(e, std::fabs((gp[k] - gm[k]) / (2 * h) - hs[k * 3 + d]));
        }
        return e;
    };
    const double e1 = err(2e-2), e2 = err(1e-2), e3 = err(5e-3);
    CHECK(e1 / e2 >= 3.5);
    CHECK(e1 / e2 <= 4.5);
    CHECK(e2 / e3 >= 3.5);
    CHECK(e2 / e3 <= 4.5);
}

TEST_CASE("frozen tail")
{
    const Metric flat = build_frozen_tail(flat_metric(), 0.25, 1.0);
    const double x[3] = {0.2, 0.0, 0.1};
    CHECK(flat.evaluate(0.1, x) == 1.0);

    const Metric base = moving_bump();
    const double T = 4.0, T1 = T / 4.0;
    const Metric ft = build_frozen_tail(base, T1, T);
    for (int i = 0; i <= 50; ++i) {
        const double t = T1 + 1e-3 + (T - T1 - 1e-3) * i / 50.0;
        CHECK(ft.d_t(t, x) == 0.0);
        CHECK(ft.evaluate(t, x) == base.evaluate(T1, x));
    }
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double t = 10.0 * u(rng);
        const double y[3] = {u(rng), u(rng), u(rng)};
        CHECK(std::fabs(ft.evaluate(t + T, y) - ft.evaluate(t, y)) <= 1e-12);
    }
    // the t derivative is consistent across the freeze point
    const double h = 1e-5;
    for (double t : {0.3, 0.7, T1 - 1e-3}) {
        const double fd = (ft.evaluate(t + h, x) - ft.evaluate(t - h, x)) / (2 * h);
        CHECK(fd == doctest::Approx(ft.d_t(t, x)).epsilon(1e-6).scale(1.0));
    }
    CHECK_THROWS_AS(build_frozen_tail(base, T, T), ParameterError);
    CHECK_THROWS_AS(build_frozen_tail(base, 5.0, T), ParameterError);
}

TEST_CASE("basic conditions")
{
    SampleGrid s;
    s.t_points = 8;
    s.x_points = 16;
    for (const auto& r : check_basic_conditions(flat_metric(), s)) CHECK(r.passed);

    const auto rep = check_basic_conditions(moving_bump(), s);
    REQUIRE(rep.size() == 3);
    for (const auto& r : rep) CHECK(r.passed);
    CHECK(rep[1].margin == doctest::Approx(1e-12).epsilon(1e-9)); // zero residual outside rho

    const Metric half = build_radial_bump(0.3, 1.0, 2.0, {{0.5, 2}});
    CHECK(check_basic_conditions(half, s)[2].passed);

    SampleGrid empty = s;
    empty.t_points = 0;
    CHECK_THROWS_AS(check_basic_conditions(flat_metric(), empty), ParameterError);
}

TEST_CASE("non-trapping sufficient condition")
{
    SampleGrid s;
    s.t_points = 4;
    s.x_points = 24;
    const auto flat = check_nontrapping_sufficient(flat_metric(), s);
    CHECK(flat.margin == 2.0);
    CHECK(flat.beta == 2.0);
    CHECK(flat.passed);

    // dense radial minimisation of 2a - |a_r| with finite-difference a_r
    const double eps = 0.05;
    const auto rep = check_nontrapping_sufficient(build_radial_bump(eps, 1.0, 1.0, {}), s);
    double dense = 2.0;
    for (int i = 1; i < 20000; ++i) {
        const double r = 2.0 * i / 20000.0, h = 1e-6;
        const double ar = eps * (profile_ref(r + h) - profile_ref(r - h)) / (2 * h);
        dense = std::min(dense, 2.0 * (1.0 + eps * profile_ref(r)) - std::fabs(ar));
    }
    CHECK(rep.passed);
    CHECK(rep.margin >= dense - 1e-9);
    CHECK(rep.margin <= dense + 0.05);

    CHECK_FALSE(check_nontrapping_sufficient(build_radial_bump(-0.8, 1.0, 1.0, {}), s).passed);
}

TEST_CASE("energy conditions")
{
    SampleGrid s;
    s.t_points = 4;
    s.x_points = 16;
    const auto xi = MultiplierFunction::rational(0.5, 1.0);
    const auto rep = check_energy_conditions(flat_metric(), xi, s);
    REQUIRE(rep.size() == 3);
    for (const auto& r : rep) CHECK(r.passed);
    // the second energy condition at a = 1 is min xi' over the sample: attained at the largest radius
    double best = 1.0;
    const double hstep = 0.25;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            for (int k = 0; k < 16; ++k) {
                const double x = -2 + (i + 0.5) * hstep, y = -2 + (j + 0.5) * hstep, z = -2 + (k + 0.5) * hstep;
                const double r = std::sqrt(x * x + y * y + z * z);
                if (r <= 2.0 && r >= hstep / 2) best = std::min(best, 0.5 / ((r + 1) * (r + 1)));
            }
    CHECK(rep[1].margin == doctest::Approx(best + 1e-12).epsilon(1e-12));

    CHECK_FALSE(check_energy_conditions(flat_metric(), MultiplierFunction::constant(0.5), s)[0].passed);

    const Metric fast = build_radial_bump(0.3, 1.0, 0.2, {{0.5, 1}});
    const auto bad = check_energy_conditions(fast, xi, s);
    CHECK_FALSE(bad[1].passed);
    // worst point reproduces the margin
    const auto j = fast.radial(bad[1].worst_t, std::hypot(bad[1].worst_x[0], bad[1].worst_x[1], bad[1].worst_x[2]));
    const double r = std::hypot(bad[1].worst_x[0], bad[1].worst_x[1], bad[1].worst_x[2]);
    CHECK(xi.xi_prime(r) * j.a - j.a_t - xi.xi(r) * j.a_r + 1e-12 == doctest::Approx(bad[1].margin));

    CHECK_THROWS_AS(check_energy_conditions(flat_metric(), xi.with_domain(1.0), s), ParameterError);
    CHECK_THROWS_AS(MultiplierFunction::rational(1.5, 1.0), ParameterError);
}

TEST_CASE("condition csv")
{
    SampleGrid s;
    s.t_points = 2;
    s.x_points = 4;
    const std::string csv = condition_csv(check_basic_conditions(flat_metric(), s), 3);
    CHECK(csv.rfind("id,margin,worst_t,worst_x1,worst_x2,worst_x3,passed\n1.2i,", 0) == 0);
}
