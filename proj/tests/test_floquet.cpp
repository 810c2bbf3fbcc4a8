#include "doctest.h"

#include <cmath>

#include "wavelab/errors.hpp"
#include "wavelab/floquet.hpp"

using namespace wavelab;

namespace {

// Periodic focusing lens: nontrapping, decays at roughly 1 per unit time.
Metric lens()
{
    const double T = 0.5;
    return build_frozen_tail(build_radial_bump(-0.4, 1.0, T, {{0.5, 1}}), T / 4, T);
}

CauchyData chi_times(const CauchyData& d, double inner, double outer)
{
    CauchyData c = d;
    const auto chi = cutoff_field(d.grid, inner, outer);
    for (std::size_t i = 0; i < chi.size(); ++i) {
        c.f1[i] *= chi[i];
        c.f2[i] *= chi[i];
    }
    return c;
}

double difference(const CauchyData& a, const CauchyData& b)
{
    CauchyData d = a;
    for (std::size_t i = 0; i < d.f1.size(); ++i) {
        d.f1[i] -= b.f1[i];
        d.f2[i] -= b.f2[i];
    }
    return hdot_norm(d);
}

} // namespace

TEST_CASE("period count covers the escape time")
{
    CHECK(default_period_count(flat_metric(1.0, 1.0)) == 8);
    CHECK(default_period_count(flat_metric(1.0, 3.0)) == 3);
    CHECK(default_period_count(lens()) == 16);
}

TEST_CASE("free cutoff monodromy vanishes after the escape time")
{
    const Grid g = Grid::radial_grid(3, 16.0, 801);
    const auto op = CutoffMonodromy::make(flat_metric(1.0, 1.0), g, 5);
    CHECK(op.chi.inner == 1.5);
    CHECK(op.chi.outer == 2.0);
    CHECK(hdot_norm(apply_cutoff_monodromy(op, CauchyData::zeros(g))) == 0.0);
    for (int s = 1; s <= 3; ++s) {
        const auto d = sample_random_data(s, 2.0, 2.0, g);
        CHECK(hdot_norm(apply_cutoff_monodromy(op, d)) <= 1e-3 * hdot_norm(chi_times(d, 1.5, 2.0)));
    }
}

TEST_CASE("cutoff monodromy is linear")
{
    const Grid g = Grid::radial_grid(3, 8.0, 401);
    const auto op = CutoffMonodromy::make(lens(), g, 2);
    const auto a = sample_random_data(1, 1.5, 2.0, g);
    const auto b = sample_random_data(2, 1.5, 2.0, g);
    CauchyData c = a;
    for (std::size_t i = 0; i < g.size(); ++i) {
        c.f1[i] = 2.0 * a.f1[i] - 3.0 * b.f1[i];
        c.f2[i] = 2.0 * a.f2[i] - 3.0 * b.f2[i];
    }
    const auto Aa = apply_cutoff_monodromy(op, a), Ab = apply_cutoff_monodromy(op, b);
    CauchyData lin = Aa;
    for (std::size_t i = 0; i < g.size(); ++i) {
        lin.f1[i] = 2.0 * Aa.f1[i] - 3.0 * Ab.f1[i];
        lin.f2[i] = 2.0 * Aa.f2[i] - 3.0 * Ab.f2[i];
    }
    CHECK(difference(apply_cutoff_monodromy(op, c), lin) <= 1e-10 * hdot_norm(lin));
}

TEST_CASE("free spectrum is negligible")
{
    const Grid g = Grid::radial_grid(3, 12.0, 601);
    const auto est = estimate_spectrum(CutoffMonodromy::make(flat_metric(1.0, 1.0), g, 6), 2, 1e-6, 20);
    CHECK(est.spectral_radius_estimate <= 1e-3);
}

TEST_CASE("lens spectrum is inside the unit disc and scales with the period count")
{
    const Metric m = lens();
    const auto est = estimate_spectrum(CutoffMonodromy::make(m, Grid::radial_grid(3, 12.0, 601), 16), 2, 1e-6, 40);
    REQUIRE(!est.multipliers.empty());
    CHECK(est.spectral_radius_estimate < 1.0);
    CHECK(est.multipliers[0].residual <= 1e-6);
    // doubling the period count squares the leading multiplier up to transients
    const auto twice = estimate_spectrum(CutoffMonodromy::make(m, Grid::radial_grid(3, 20.0, 1001), 32), 2, 1e-6, 40);
    const double mu = std::abs(est.multipliers[0].value), mu2 = std::abs(twice.multipliers[0].value);
    MESSAGE("mu_16 " << mu << " mu_32 " << mu2);
    const double exponent = std::log(mu2) / std::log(mu);
    CHECK(exponent >= 1.7);
    CHECK(exponent <= 2.3);
}

TEST_CASE("local energy decay fit on the lens")
{
    const Grid g = Grid::radial_grid(3, 24.0, 2401);
    const Metric m = lens();
    const auto data = sample_random_data(3, 1.5, 2.0, g);
    const auto fit = fit_local_energy_decay(m, data, {1.5, 2.0}, 16.0);
    MESSAGE("delta " << fit.delta << " r2 " << fit.r_squared);
    CHECK(fit.delta > 0.0);
    CHECK(fit.r_squared >= 0.95);
    CHECK_FALSE(fit.floor_limited);
    CHECK(fit.t.size() == fit.local.size());

    const auto op = CutoffMonodromy::make(m, Grid::radial_grid(3, 12.0, 1201));
    const auto powers = fit_monodromy_powers(op, sample_random_data(3, 1.5, 2.0, op.grid), 3);
    MESSAGE("power delta " << powers.delta << " r2 " << powers.r_squared);
    CHECK(powers.r_squared >= 0.9);
    CHECK(powers.delta >= 0.5 * fit.delta);
    CHECK(powers.delta <= 2.0 * fit.delta);
}

TEST_CASE("free local energy leaves the ball after the escape time")
{
    const Grid g = Grid::radial_grid(3, 24.0, 1201);
    const auto fit = fit_local_energy_decay(flat_metric(1.0, 1.0), sample_random_data(4, 1.5, 2.0, g), {1.5, 2.0}, 12.0);
    CHECK(fit.t_min == doctest::Approx(5.0));
    for (std::size_t i = 0; i < fit.t.size(); ++i)
        if (fit.t[i] >= fit.t_min) CHECK(fit.local[i] <= 1e-6 * fit.local[0]);
    const auto censored = fit_local_energy_decay(flat_metric(1.0, 1.0), CauchyData::zeros(g), {1.5, 2.0}, 2.0,
                                                 DecayWindow{0.0, 2.0});
    CHECK(censored.floor_limited);
}

TEST_CASE("local energy integral")
{
    const Grid g = Grid::radial_grid(3, 24.0, 1201);
    const Metric m = lens();
    const auto zero = l2_local_energy_integral(m, CauchyData::zeros(g), {1.5, 2.0}, 8.0);
    CHECK(zero.total == 0.0);
    const auto d = sample_random_data(5, 1.5, 2.0, g);
    const auto r = l2_local_energy_integral(m, d, {1.5, 2.0}, 16.0);
    CHECK(r.tail_fraction <= 1e-3);
    CHECK(r.norm_squared == doctest::Approx(hdot_inner(d, d)));
    for (std::size_t j = 1; j < r.integral.size(); ++j) CHECK(r.integral[j] >= r.integral[j - 1]);
}

TEST_CASE("radial Lax-Phillips split")
{
    const Grid g = Grid::radial_grid(3, 20.0, 2001);
    const auto zero = split_radial_lax_phillips(CauchyData::zeros(g), 2.0, 6.0);
    CHECK(hdot_norm(zero.outgoing) == 0.0);
    CHECK(hdot_norm(zero.incoming) == 0.0);

    // u = F(r - t) / r is purely outgoing; u_t from the centred difference of r u
    CauchyData out = CauchyData::zeros(g);
    const double h = g.h();
    auto F = [](double s) { return std::exp(-4.0 * (s - 5.0) * (s - 5.0)); };
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double r = g.radius(i);
        out.f1[i] = F(r) / r;
        out.f2[i] = -(F(r + h) - F(r - h)) / (2.0 * h * r);
    }
    const auto so = split_radial_lax_phillips(out, 2.0, 6.0);
    CHECK(hdot_norm(so.incoming) <= 1e-6 * hdot_norm(out));
    CHECK(so.outgoing_residual <= 1e-12);

    const auto gauss = sample_random_data(6, 3.0, 2.0, g);
    const auto sg = split_radial_lax_phillips(gauss, 1.0, 6.0);
    CHECK(sg.reconstruction_residual <= 1e-12);
    CHECK(sg.incoming_residual <= 1e-12);
    CHECK(sg.outgoing_residual <= 1e-12);

    CHECK_THROWS_AS(split_radial_lax_phillips(CauchyData::zeros(Grid::cartesian(3, 2.0, 8)), 1.0, 1.0),
                    ParameterError);
    const auto step = radial_free_solution(gauss, 0);
    CHECK(difference(CauchyData{g, step, gauss.f2, 0.0}, gauss) <= 1e-12 * hdot_norm(gauss));
}
