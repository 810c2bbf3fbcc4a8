#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "wavelab/analysis.hpp"
#include "wavelab/metric.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

// Smallest k with k T >= 4 (rho + 1).
int default_period_count(const Metric& metric);

// f -> chi B U(s + kT, s) B (chi f) with chi = 1 on |x| <= rho + 1/2 and 0
// beyond rho + 1. B projects onto wavenumbers |k| h <= pi/4 (smooth roll-off
// to pi/2): grid-scale modes have vanishing group velocity and would
// otherwise sit in the ball forever.
struct CutoffMonodromy {
    Metric metric;
    Grid grid;
    Cutoff chi;
    int periods = 1;
    double base_time = 0.0;
    bool band_limited = true;

    static CutoffMonodromy make(const Metric& metric, const Grid& grid, int periods = 0, double base_time = 0.0);
    double horizon() const { return periods * metric.period(); }
};

CauchyData apply_cutoff_monodromy(const CutoffMonodromy& op, const CauchyData& data);

struct FloquetMultiplier {
    std::complex<double> value;
    double residual = 0.0; // ||A v - mu v|| / ||v|| in Hdot^1 x L^2
};

struct SpectrumEstimate {
    std::vector<FloquetMultiplier> multipliers; // by decreasing modulus
    double spectral_radius_estimate = 0.0;
    int iterations = 0;
    bool converged = false;
    bool breakdown = false; // Krylov space became invariant
};

// Matrix-free Arnoldi in the Hdot^1 x L^2 inner product.
SpectrumEstimate estimate_spectrum(const CutoffMonodromy& op, int num_eigs = 4, double tol = 1e-6,
                                   int max_iters = 60, std::uint64_t seed = 1);

struct DecayFit {
    double delta = 0.0;
    double C = 0.0;
    double r_squared = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    bool floor_limited = false;
    std::vector<double> t;
    std::vector<double> local; // ||phi U(t) f|| in Hdot^1 x L^2
};

struct DecayWindow {
    double t_min = 0.0;
    double t_max = 0.0;
};

inline constexpr double local_energy_floor = 1e-14;

// Least-squares fit of log ||phi B U(t,0) f|| = log C - delta t, B the
// resolved-band projection. The default window starts at 2 (R + rho) / sqrt(c0).
DecayFit fit_local_energy_decay(const Metric& metric, const CauchyData& data, const Cutoff& phi, double horizon,
                                std::optional<DecayWindow> window = std::nullopt, double sample_interval = 0.0,
                                bool band_limited = true);

// Same fit applied to ||A^m f|| against m T k.
DecayFit fit_monodromy_powers(const CutoffMonodromy& op, const CauchyData& data, int powers);

// int_0^H ||phi U(t,0) f||^2 dt, trapezoid over samples.
RunningIntegral l2_local_energy_integral(const Metric& metric, const CauchyData& data, const Cutoff& phi,
                                         double horizon, double sample_interval = 0.0);

// Radial n = 3 split of free Cauchy data into the part with outgoing profile
// supported in s >= b, the part with incoming profile supported in s >= b,
// and the remainder.
struct RadialLaxPhillipsSplit {
    double b = 0.0;
    CauchyData outgoing;
    CauchyData incoming;
    CauchyData remainder;
    double outgoing_residual = 0.0; // max |u(t,r)| / peak over r < t + b, t in [0, H]
    double incoming_residual = 0.0; // same for t in [-H, 0], r < |t| + b
    double reconstruction_residual = 0.0;
};

RadialLaxPhillipsSplit split_radial_lax_phillips(const CauchyData& data, double b, double horizon,
                                                 double tolerance = 1e-4);

// u(t, r) at t = m h for the exact free radial evolution (n = 3) of data.
std::vector<double> radial_free_solution(const CauchyData& data, int m);

} // namespace wavelab
