#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wavelab/metric.hpp"

namespace wavelab {

// Cartesian: periodic box [-L, L)^n with N points per axis, x_i = -L + i h.
// Radial: nodes r_i = i h, i = 0..N-1, h = R_max/(N-1), u(R_max) = 0.
struct Grid {
    int dimension = 3;
    bool radial = false;
    double extent = 4.0; // L, or R_max for radial
    int points = 64;

    static Grid cartesian(int n, double L, int N);
    static Grid radial_grid(int n, double r_max, int N);

    double h() const;
    std::size_t size() const;
    // Distance of node idx from the origin.
    double radius(std::size_t idx) const;
    // Coordinates of node idx (Cartesian only).
    std::vector<double> point(std::size_t idx) const;
    // Quadrature weight of node idx (cell volume, including the sphere area
    // factor on radial grids).
    double weight(std::size_t idx) const;
    void validate() const;
};

struct CauchyData {
    Grid grid;
    std::vector<double> f1;
    std::vector<double> f2;
    double time = 0.0;
    std::optional<double> support_radius;

    static CauchyData zeros(const Grid& g, double t = 0.0);
    bool finite() const;
};

struct EnergyReport {
    double total = 0.0;
    double local = 0.0;
    double hdot_norm = 0.0;
};

struct EvolveOptions {
    double dt = 0.0;           // 0: largest CFL-stable step that divides t - s
    bool check_domain = true;  // raise DomainError if waves can reach the boundary
    double cfl_safety = 0.9;
};

// Called with the state after each `every` steps (and at the start).
using Observer = std::function<void(const CauchyData&)>;

double cfl_limit(const Metric& metric, const Grid& grid, double safety = 0.9);

// Second order leapfrog for u_tt = div(a grad u); t < s runs backward.
CauchyData evolve(const Metric& metric, const CauchyData& data, double s, double t,
                  const EvolveOptions& options = {}, const Observer& observer = {}, int every = 1);

// Exact free propagator on a Cartesian grid via FFT.
CauchyData free_evolve_fft(const CauchyData& data, double t);

// Pseudo-spectral reference for complex-valued solutions on a Cartesian
// grid: spectral div(a grad u) with classical RK4 in time.
struct ComplexField {
    Grid grid;
    std::vector<std::complex<double>> u;
    std::vector<std::complex<double>> v;
    double time = 0.0;
};
ComplexField spectral_evolve(const Metric& metric, const ComplexField& data, double t, double dt = 0.0);

EnergyReport energy(const Metric& metric, const CauchyData& data, double region_radius);
// Discrete Hdot^1 x L^2 inner product matching EnergyReport::hdot_norm.
double hdot_inner(const CauchyData& a, const CauchyData& b);
double hdot_norm(const CauchyData& data);
// Spectral Hdot^1 x L^2 norm on a Cartesian grid (sum |k|^2|u^|^2 + |v^|^2).
double spectral_hdot_norm(const CauchyData& data);
// Same norm restricted to nodes with |x| <= b.
double hdot_norm_local(const CauchyData& data, double b);
// sum of weights * f * g.
double l2_inner(const Grid& grid, const std::vector<double>& f, const std::vector<double>& g);

// Relative difference between U(t,s) and U(t+T,s+T) applied to data.
double check_propagator_periodicity(const Metric& metric, const CauchyData& data, double s, double t,
                                    double dt);

struct AdjointResult {
    double max_mismatch = 0.0;         // |<psi V(t2,t1) f, g> + <f, V(t1,t2)(psi g)>| / scale
    double printed_sign_mismatch = 0.0; // same with a minus sign between the terms
};
AdjointResult check_adjoint_relation(const Metric& metric, const std::vector<double>& psi, const Grid& grid,
                                     double t1, double t2, int trials, std::uint64_t seed,
                                     double support_radius, const EvolveOptions& options = {});

// Largest |x| where |f1| or |f2| exceeds threshold * its peak.
double measured_support_radius(const CauchyData& data, double threshold = 1e-8);
double check_finite_speed(const Metric& metric, const CauchyData& data, double s, double t,
                          const EvolveOptions& options = {});

// Band-limited random field times a smooth bump, normalized to hdot_norm = 1.
CauchyData sample_random_data(std::uint64_t seed, double support_radius, double smoothness, const Grid& grid);

// Radial cutoff chi with chi = 1 on |x| <= inner and 0 beyond outer.
std::vector<double> cutoff_field(const Grid& grid, double inner, double outer);

void write_snapshot(const std::string& path_stem, const CauchyData& data);
CauchyData read_snapshot(const std::string& path_stem);

} // namespace wavelab
