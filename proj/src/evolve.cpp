#include <algorithm>
#include <cmath>

#include "operators.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

double cfl_limit(const Metric& metric, const Grid& grid, double safety)
{
    const double C0 = metric.upper_bound();
    double dt = safety * grid.h() / (std::sqrt(C0) * std::sqrt(static_cast<double>(grid.dimension)));
    if (grid.radial) {
        // Gershgorin bound on the radial operator near the centre.
        const double n = grid.dimension;
        const double h = grid.h();
        double lam_max = 0.0;
        for (int i = 1; i < std::min(grid.points - 1, 64); ++i) {
            const double lo = std::pow(static_cast<double>(i) * (i - 1), 0.5 * (n - 1.0));
            const double hi = std::pow(static_cast<double>(i) * (i + 1), 0.5 * (n - 1.0));
            lam_max = std::max(lam_max, 2.0 * C0 * (lo + hi) / (std::pow(static_cast<double>(i), n - 1.0) * h * h));
        }
        dt = std::min(dt, safety * 2.0 / std::sqrt(lam_max));
    }
    return dt;
}

namespace {

std::size_t last_nonzero(const CauchyData& d)
{
    std::size_t k = d.f1.size();
    while (k > 0 && d.f1[k - 1] == 0.0 && d.f2[k - 1] == 0.0) --k;
    return k == 0 ? 0 : k - 1;
}

} // namespace

CauchyData evolve(const Metric& metric, const CauchyData& data, double s, double t, const EvolveOptions& options,
                  const Observer& observer, int every)
{
    const Grid& grid = data.grid;
    if (data.f1.size() != grid.size() || data.f2.size() != grid.size())
        throw ParameterError("Cauchy data does not match its grid");
    CauchyData state = data;
    state.time = s;
    if (observer) observer(state);
    const double span = t - s;
    if (span == 0.0) return state;

    const double dt_max = cfl_limit(metric, grid, options.cfl_safety);
    long steps;
    if (options.dt > 0.0) {
        if (options.dt > dt_max * (1.0 + 1e-12)) throw StabilityError("time step violates the CFL bound");
        const double ratio = std::fabs(span) / options.dt;
        steps = std::lround(ratio);
        if (steps < 1 || std::fabs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
            throw ParameterError("time step does not divide the evolution interval");
    } else {
        steps = static_cast<long>(std::ceil(std::fabs(span) / dt_max - 1e-9));
        steps = std::max(steps, 1L);
    }
    const double dt = span / steps;

    if (options.check_domain) {
        const double r0 = data.support_radius ? *data.support_radius : measured_support_radius(data);
        const double reach = r0 + std::sqrt(metric.upper_bound()) * std::fabs(span);
        const double limit = grid.radial ? grid.extent - grid.h() : grid.extent - 2.0 * grid.h();
        if (reach >= limit) throw DomainError("waves can reach the grid boundary within the evolution interval");
    }

    detail::DivergenceOperator op(metric, grid);
    const std::size_t N = grid.size();
    std::vector<double>& u = state.f1;
    std::vector<double>& v = state.f2;
    std::vector<double> lu(N, 0.0);
    if (grid.radial) {
        // the centre node carries no weight; keep it on the even extrapolant
        u[0] = (4.0 * u[1] - u[2]) / 3.0;
        v[0] = (4.0 * v[1] - v[2]) / 3.0;
    }
    std::size_t active = grid.radial ? std::min(last_nonzero(data) + 1, N - 1) : N - 1;

    for (long k = 0; k < steps; ++k) {
        const std::size_t hi = grid.radial ? std::min(active + 1, N - 2) : N - 1;
        for (std::size_t i = 0; i <= hi; ++i) u[i] += 0.5 * dt * v[i];
        op.set_time(s + (k + 0.5) * dt);
        op.apply(u, lu, hi);
        for (std::size_t i = 0; i <= hi; ++i) {
            v[i] += dt * lu[i];
            u[i] += 0.5 * dt * v[i];
        }
        active = hi;
        state.time = s + (k + 1) * dt;
        if (observer && ((k + 1) % every == 0 || k + 1 == steps)) observer(state);
    }
    state.time = t;
    if (!state.finite()) throw StabilityError("solution became non-finite");
    state.support_radius.reset();
    return state;
}

} // namespace wavelab
