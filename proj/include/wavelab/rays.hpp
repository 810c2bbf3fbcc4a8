#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavelab/metric.hpp"

namespace wavelab {

struct PhasePoint {
    double t = 0.0;
    std::vector<double> x;
    double tau = 0.0;
    std::vector<double> xi;
};

// On-shell point with tau = branch * sqrt(a) |xi|, branch = +1 or -1.
PhasePoint on_shell_point(const Metric& metric, double t, std::vector<double> x, std::vector<double> xi,
                          int branch);

// Throws DegenerateRayError when xi = 0 or |tau^2 - a|xi|^2| > tol |xi|^2 C0.
void validate_phase_point(const Metric& metric, const PhasePoint& p, double tol = 1e-10);

struct RayOptions {
    double report_dt = 0.0;        // 0 means period / 256
    double escape_radius = 0.0;    // 0 disables escape tracking
    bool stop_at_escape = false;
    long max_steps = 10000000;
};

struct RayTrajectory {
    std::vector<PhasePoint> samples;
    // |tau_aux^2 - a |xi|^2| per sample, tau_aux integrated independently
    std::vector<double> residuals;
    double hamiltonian_residual_max = 0.0;
    std::optional<double> escape_time;
    int branch = 1;
};

// Integrates the t-parametrized bicharacteristic flow from p0 to t_final
// (backward when t_final < p0.t). tau in the samples is reconstructed from
// the on-shell relation.
RayTrajectory integrate_ray(const Metric& metric, const PhasePoint& p0, double t_final, double tol = 1e-10,
                            const RayOptions& options = {});

// Max relative deviation between |xi(t)|^2 and |xi0|^2 a0/a exp(int a_t/a).
double xi_identity_residual(const Metric& metric, const RayTrajectory& traj);

// sup |a_t| / a over one period and the support ball, on a lattice.
double estimate_rate_bound(const Metric& metric, const SampleGrid& sample);

// |xi|^2 >= |xi0|^2 (c0/C0) exp(-D |t - t0|) at every sample.
bool xi_lower_bound_check(const Metric& metric, const RayTrajectory& traj, double D);
bool xi_lower_bound_check(const Metric& metric, const RayTrajectory& traj);

struct CertifySampling {
    int dimension = 3;
    int shells = 8;
    int directions = 32;
    int times = 8;
    bool both_branches = true;
    double tol = 1e-10;
};

struct RayFailure {
    PhasePoint initial;
    std::string reason;
};

struct NonTrappingCertificate {
    double R = 0.0;
    long sample_count = 0;
    double max_escape_time = 0.0;
    std::vector<RayFailure> failures;
    double horizon = 0.0;
    bool passed() const { return failures.empty(); }
};

// Fibonacci lattice on S^{n-1}; only n = 2 and n = 3 use the spiral, higher n
// fall back to normalized Halton points.
std::vector<std::vector<double>> sphere_points(int count, int dimension);

NonTrappingCertificate certify_nontrapping(const Metric& metric, double R, const CertifySampling& sampling,
                                           double horizon);

// Positive root of alpha c0 s^2 - C1 rho s - rho^2 = R^2 with
// alpha = rho beta / (2 sup a), C1 = 2 sup a / sqrt(inf a).
double escape_bound_8_1(const Metric& metric, double beta, double rho, double R);

std::string trajectory_csv(const RayTrajectory& traj);
std::string certificate_json(const NonTrappingCertificate& cert);

} // namespace wavelab
