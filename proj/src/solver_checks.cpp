#include <bit>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

double measured_support_radius(const CauchyData& data, double threshold)
{
    double r = 0.0;
    for (const auto* f : {&data.f1, &data.f2}) {
        double peak = 0.0;
        for (double v : *f) peak = std::max(peak, std::fabs(v));
        if (peak == 0.0) continue;
        for (std::size_t i = 0; i < f->size(); ++i)
            if (std::fabs((*f)[i]) > threshold * peak) r = std::max(r, data.grid.radius(i));
    }
    return r;
}

double check_finite_speed(const Metric& metric, const CauchyData& data, double s, double t,
                          const EvolveOptions& options)
{
    return measured_support_radius(evolve(metric, data, s, t, options));
}

double check_propagator_periodicity(const Metric& metric, const CauchyData& data, double s, double t, double dt)
{
    const double T = metric.period();
    const double a = (t - s) / dt;
    const double b = T / dt;
    if (!(dt > 0.0) || std::fabs(a - std::round(a)) > 1e-9 * std::max(1.0, a) ||
        std::fabs(b - std::round(b)) > 1e-9 * std::max(1.0, b))
        throw ParameterError("time step must divide both t - s and the period");
    EvolveOptions opt;
    opt.dt = dt;
    const CauchyData u1 = evolve(metric, data, s, t, opt);
    const CauchyData u2 = evolve(metric, data, s + T, t + T, opt);
    CauchyData diff = u1;
    for (std::size_t i = 0; i < diff.f1.size(); ++i) {
        diff.f1[i] -= u2.f1[i];
        diff.f2[i] -= u2.f2[i];
    }
    const double ref = hdot_norm(u1);
    const double d = hdot_norm(diff);
    return ref > 0.0 ? d / ref : d;
}

AdjointResult check_adjoint_relation(const Metric& metric, const std::vector<double>& psi, const Grid& grid,
                                     double t1, double t2, int trials, std::uint64_t seed, double support_radius,
                                     const EvolveOptions& options)
{
    if (!(t2 > t1)) throw ParameterError("adjoint check needs t2 > t1");
    if (psi.size() != grid.size()) throw ParameterError("cutoff does not match the grid");
    AdjointResult res;
    for (int k = 0; k < trials; ++k) {
        CauchyData f = sample_random_data(seed + 2 * k, support_radius, 2.0, grid);
        CauchyData g = sample_random_data(seed + 2 * k + 1, support_radius, 2.0, grid);
        // V(t,s)h = first component of U(t,s)(0,h)
        CauchyData a = CauchyData::zeros(grid, t1);
        a.f2 = f.f2;
        a.support_radius = support_radius;
        CauchyData b = CauchyData::zeros(grid, t2);
        b.f2 = g.f2;
        for (std::size_t i = 0; i < psi.size(); ++i) b.f2[i] *= psi[i];
        b.support_radius = support_radius;
        const CauchyData va = evolve(metric, a, t1, t2, options);
        const CauchyData vb = evolve(metric, b, t2, t1, options);
        std::vector<double> psi_va = va.f1;
        for (std::size_t i = 0; i < psi.size(); ++i) psi_va[i] *= psi[i];
        const double lhs = l2_inner(grid, psi_va, g.f2);
        const double rhs = l2_inner(grid, f.f2, vb.f1);
        const double scale = std::fabs(lhs) + std::fabs(rhs);
        if (scale == 0.0) continue;
        res.max_mismatch = std::max(res.max_mismatch, std::fabs(lhs + rhs) / scale);
        res.printed_sign_mismatch = std::max(res.printed_sign_mismatch, std::fabs(lhs - rhs) / scale);
    }
    return res;
}

std::vector<double> cutoff_field(const Grid& grid, double inner, double outer)
{
    std::vector<double> chi(grid.size());
    for (std::size_t i = 0; i < chi.size(); ++i) chi[i] = radial_cutoff(grid.radius(i), inner, outer).v;
    return chi;
}

namespace {

void write_le(std::ofstream& os, const std::vector<double>& v)
{
    for (double x : v) {
        auto bits = std::bit_cast<std::uint64_t>(x);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
}

void read_le(std::ifstream& is, std::vector<double>& v)
{
    for (double& x : v) {
        std::uint64_t bits = 0;
        is.read(reinterpret_cast<char*>(&bits), sizeof bits);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        x = std::bit_cast<double>(bits);
    }
}

} // namespace

void write_snapshot(const std::string& stem, const CauchyData& data)
{
    std::ofstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot write " + stem + ".bin");
    write_le(bin, data.f1);
    write_le(bin, data.f2);
    nlohmann::ordered_json j;
    j["format"] = "float64-le";
    j["layout"] = "f1 then f2, row-major, last axis fastest";
    j["dimension"] = data.grid.dimension;
    j["radial"] = data.grid.radial;
    j["extent"] = data.grid.extent;
    j["points"] = data.grid.points;
    j["spacing"] = data.grid.h();
    j["values_per_field"] = data.grid.size();
    j["time"] = data.time;
    std::ofstream js(stem + ".json");
    js << j.dump(2) << '\n';
}

CauchyData read_snapshot(const std::string& stem)
{
    std::ifstream js(stem + ".json");
    if (!js) throw Error("cannot read " + stem + ".json");
    const auto j = nlohmann::json::parse(js);
    Grid g;
    g.dimension = j.at("dimension");
    g.radial = j.at("radial");
    g.extent = j.at("extent");
    g.points = j.at("points");
    g.validate();
    CauchyData d = CauchyData::zeros(g, j.at("time"));
    std::ifstream bin(stem + ".bin", std::ios::binary);
    read_le(bin, d.f1);
    read_le(bin, d.f2);
    if (!bin) throw Error("truncated snapshot " + stem + ".bin");
    return d;
}

} // namespace wavelab
