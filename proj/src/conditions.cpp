#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "wavelab/errors.hpp"
#include "wavelab/metric.hpp"
#include "wavelab/parallel.hpp"

namespace wavelab {

namespace {

constexpr double kTol = 1e-12;

struct Worst {
    double value = std::numeric_limits<double>::infinity();
    double t = 0.0;
    std::vector<double> x;
};

struct Lattice {
    int n;
    std::vector<double> points; // flattened, n per point
    std::vector<double> radii;
    std::vector<double> times;
    double spacing;
};

Lattice make_lattice(const Metric& metric, const SampleGrid& s)
{
    if (s.dimension < 1 || s.t_points < 1 || s.x_points < 1) throw ParameterError("empty sample grid");
    Lattice lat;
    lat.n = s.dimension;
    const double ext = s.x_extent > 0.0 ? s.x_extent : 2.0 * metric.support_radius();
    lat.spacing = 2.0 * ext / s.x_points;
    std::vector<int> idx(lat.n, 0);
    std::vector<double> x(lat.n);
    while (true) {
        double r2 = 0.0;
        for (int d = 0; d < lat.n; ++d) {
            x[d] = -ext + (idx[d] + 0.5) * lat.spacing;
            r2 += x[d] * x[d];
        }
        if (r2 <= ext * ext) {
            lat.points.insert(lat.points.end(), x.begin(), x.end());
            lat.radii.push_back(std::sqrt(r2));
        }
        int d = 0;
        while (d < lat.n && ++idx[d] == s.x_points) idx[d++] = 0;
        if (d == lat.n) break;
    }
    if (lat.radii.empty()) throw ParameterError("empty sample grid");
    for (int i = 0; i < s.t_points; ++i) lat.times.push_back(metric.period() * i / s.t_points);
    return lat;
}

// Minimum of f(t, r, point index) over the lattice; NaN values are skipped.
template <class F>
Worst minimize(const Lattice& lat, F&& f)
{
    std::vector<Worst> per_t(lat.times.size());
    parallel_for(lat.times.size(), [&](std::size_t it) {
        Worst w;
        std::size_t best = 0;
        bool found = false;
        for (std::size_t p = 0; p < lat.radii.size(); ++p) {
            const double v = f(lat.times[it], lat.radii[p], p);
            if (std::isnan(v)) continue;
            if (!found || v < w.value) {
                w.value = v;
                best = p;
                found = true;
            }
        }
        w.t = lat.times[it];
        if (found) w.x.assign(lat.points.begin() + best * lat.n, lat.points.begin() + (best + 1) * lat.n);
        per_t[it] = std::move(w);
    });
    Worst out;
    for (auto& w : per_t)
        if (!w.x.empty() && (out.x.empty() || w.value < out.value)) out = std::move(w);
    if (out.x.empty()) {
        out.value = std::numeric_limits<double>::infinity();
        out.x.assign(lat.n, 0.0);
    }
    return out;
}

ConditionReport report(ConditionId id, const Worst& w)
{
    ConditionReport r;
    r.id = id;
    r.margin = w.value;
    r.worst_t = w.t;
    r.worst_x = w.x;
    r.passed = r.margin > 0.0;
    return r;
}

} // namespace

std::string to_string(ConditionId id)
{
    switch (id) {
    case ConditionId::c1_2i: return "1.2i";
    case ConditionId::c1_2ii: return "1.2ii";
    case ConditionId::c1_2iii: return "1.2iii";
    case ConditionId::c8_1: return "8.1";
    case ConditionId::c8_2: return "8.2";
    case ConditionId::c8_3: return "8.3";
    case ConditionId::c8_4: return "8.4";
    }
    return "?";
}

std::vector<ConditionReport> check_basic_conditions(const Metric& metric, const SampleGrid& sample)
{
    const Lattice lat = make_lattice(metric, sample);
    const double c0 = metric.lower_bound();
    const double C0 = metric.upper_bound();
    const double rho = metric.support_radius();
    const double T = metric.period();

    // Closed inequalities are shifted by a roundoff tolerance so that the
    // equality case (e.g. a = 1 = c0) still reports margin > 0.
    Worst bounds = minimize(lat, [&](double t, double r, std::size_t) {
        const double a = metric.radial(t, r).a;
        return std::min(a - c0, C0 - a) + kTol * std::max(1.0, C0);
    });
    Worst flat = minimize(lat, [&](double t, double r, std::size_t) {
        if (r < rho) return std::numeric_limits<double>::quiet_NaN();
        const RadialJet j = metric.radial(t, r);
        return kTol - (std::fabs(j.a - 1.0) + std::fabs(j.a_t) + std::fabs(j.a_r));
    });
    if (std::isinf(flat.value)) flat.value = kTol;
    Worst periodic = minimize(lat, [&](double t, double r, std::size_t) {
        return kTol - std::fabs(metric.radial(t + T, r).a - metric.radial(t, r).a);
    });
    return {report(ConditionId::c1_2i, bounds), report(ConditionId::c1_2ii, flat),
            report(ConditionId::c1_2iii, periodic)};
}

ConditionReport check_nontrapping_sufficient(const Metric& metric, const SampleGrid& sample)
{
    const Lattice lat = make_lattice(metric, sample);
    const double rho = metric.support_radius();
    const double sc0 = std::sqrt(metric.lower_bound());
    Worst w = minimize(lat, [&](double t, double r, std::size_t) {
        const RadialJet j = metric.radial(t, r);
        return 2.0 * j.a / rho - std::fabs(j.a_t) / sc0 - std::fabs(j.a_r);
    });
    ConditionReport rep = report(ConditionId::c8_1, w);
    rep.beta = rep.passed ? rep.margin : 0.0;
    return rep;
}

std::vector<ConditionReport> check_energy_conditions(const Metric& metric, const MultiplierFunction& xi,
                                                     const SampleGrid& sample)
{
    const Lattice lat = make_lattice(metric, sample);
    double rmax = 0.0;
    for (double r : lat.radii) rmax = std::max(rmax, r);
    if (rmax > xi.r_max()) throw ParameterError("multiplier not defined on the sampled radii");
    const double r_min = lat.spacing / 2.0;
    const double n = lat.n;
    const double eps_c0 = xi.epsilon() * metric.lower_bound();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    Worst w82 = minimize(lat, [&](double, double r, std::size_t) {
        if (r < r_min) return nan;
        const Jet2 x = xi(r);
        return std::min({-x.d2 + kTol, r * x.d1, x.v - r * x.d1 + kTol, eps_c0 - x.v + kTol});
    });
    Worst w83 = minimize(lat, [&](double t, double r, std::size_t) {
        if (r < r_min) return nan;
        const Jet2 x = xi(r);
        const RadialJet j = metric.radial(t, r);
        return x.d1 * j.a - j.a_t - x.v * j.a_r + kTol;
    });
    Worst w84 = minimize(lat, [&](double t, double r, std::size_t) {
        if (r < r_min) return nan;
        const Jet2 x = xi(r);
        const RadialJet j = metric.radial(t, r);
        return (x.v / r - x.d1) * (j.a * (n - 3.0) / r + j.a_r) - j.a * x.d2 + kTol;
    });
    return {report(ConditionId::c8_2, w82), report(ConditionId::c8_3, w83), report(ConditionId::c8_4, w84)};
}

std::string condition_csv(const std::vector<ConditionReport>& reports, int dimension)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "id,margin,worst_t";
    for (int d = 0; d < dimension; ++d) os << ",worst_x" << d + 1;
    os << ",passed\n";
    for (const auto& r : reports) {
        os << to_string(r.id) << ',' << r.margin << ',' << r.worst_t;
        for (int d = 0; d < dimension; ++d) os << ',' << (d < static_cast<int>(r.worst_x.size()) ? r.worst_x[d] : 0.0);
        os << ',' << (r.passed ? "true" : "false") << '\n';
    }
    return os.str();
}

} // namespace wavelab
