#include <cmath>
#include <numbers>

#include "wavelab/errors.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

namespace {

double sphere_area(int n) { return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0); }

} // namespace

Grid Grid::cartesian(int n, double L, int N)
{
    Grid g;
    g.dimension = n;
    g.radial = false;
    g.extent = L;
    g.points = N;
    g.validate();
    return g;
}

Grid Grid::radial_grid(int n, double r_max, int N)
{
    Grid g;
    g.dimension = n;
    g.radial = true;
    g.extent = r_max;
    g.points = N;
    g.validate();
    return g;
}

void Grid::validate() const
{
    if (dimension < 1) throw ParameterError("grid dimension must be positive");
    if (!(extent > 0.0)) throw ParameterError("grid extent must be positive");
    if (points < 4) throw ParameterError("grid needs at least 4 points");
    if (!radial && points % 2 != 0) throw ParameterError("Cartesian grids need an even point count");
}

double Grid::h() const { return radial ? extent / (points - 1) : 2.0 * extent / points; }

std::size_t Grid::size() const
{
    if (radial) return static_cast<std::size_t>(points);
    std::size_t s = 1;
    for (int d = 0; d < dimension; ++d) s *= static_cast<std::size_t>(points);
    return s;
}

std::vector<double> Grid::point(std::size_t idx) const
{
    if (radial) throw ParameterError("point() is only defined on Cartesian grids");
    std::vector<double> x(dimension);
    for (int d = dimension - 1; d >= 0; --d) {
        x[d] = -extent + static_cast<double>(idx % points) * h();
        idx /= points;
    }
    return x;
}

double Grid::radius(std::size_t idx) const
{
    if (radial) return static_cast<double>(idx) * h();
    const double hh = h();
    double r2 = 0.0;
    for (int d = 0; d < dimension; ++d) {
        const double x = -extent + static_cast<double>(idx % points) * hh;
        r2 += x * x;
        idx /= points;
    }
    return std::sqrt(r2);
}

double Grid::weight(std::size_t idx) const
{
    const double hh = h();
    if (!radial) return std::pow(hh, dimension);
    const double n = dimension;
    return sphere_area(dimension) * std::pow(static_cast<double>(idx) * hh, n - 1.0) * hh;
}

CauchyData CauchyData::zeros(const Grid& g, double t)
{
    CauchyData d;
    d.grid = g;
    d.f1.assign(g.size(), 0.0);
    d.f2.assign(g.size(), 0.0);
    d.time = t;
    return d;
}

bool CauchyData::finite() const
{
    for (double v : f1)
        if (!std::isfinite(v)) return false;
    for (double v : f2)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace wavelab
