#include <cmath>
#include <limits>

#include "operators.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

namespace {

double velocity_pairing(const Grid& g, const std::vector<double>& a, const std::vector<double>& b, double radius)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (g.radius(i) > radius) {
            if (g.radial) break;
            continue;
        }
        s += g.weight(i) * a[i] * b[i];
    }
    return s;
}

const Metric& unit_metric()
{
    static const Metric m = flat_metric();
    return m;
}

} // namespace

double l2_inner(const Grid& grid, const std::vector<double>& f, const std::vector<double>& g)
{
    return velocity_pairing(grid, f, g, std::numeric_limits<double>::infinity());
}

EnergyReport energy(const Metric& metric, const CauchyData& data, double region_radius)
{
    detail::DivergenceOperator op(metric, data.grid);
    op.set_time(data.time);
    const double inf = std::numeric_limits<double>::infinity();
    EnergyReport r;
    r.total = 0.5 * (op.gradient_pairing(data.f1, data.f1, inf, true) + velocity_pairing(data.grid, data.f2, data.f2, inf));
    r.local = 0.5 * (op.gradient_pairing(data.f1, data.f1, region_radius, true) +
                     velocity_pairing(data.grid, data.f2, data.f2, region_radius));
    r.hdot_norm = hdot_norm(data);
    return r;
}

double hdot_inner(const CauchyData& a, const CauchyData& b)
{
    detail::DivergenceOperator op(unit_metric(), a.grid);
    const double inf = std::numeric_limits<double>::infinity();
    return op.gradient_pairing(a.f1, b.f1, inf, false) + velocity_pairing(a.grid, a.f2, b.f2, inf);
}

double hdot_norm(const CauchyData& data) { return std::sqrt(std::max(0.0, hdot_inner(data, data))); }

double hdot_norm_local(const CauchyData& data, double b)
{
    detail::DivergenceOperator op(unit_metric(), data.grid);
    const double s = op.gradient_pairing(data.f1, data.f1, b, false) + velocity_pairing(data.grid, data.f2, data.f2, b);
    return std::sqrt(std::max(0.0, s));
}

} // namespace wavelab
