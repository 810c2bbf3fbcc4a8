#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wavelab/metric.hpp"

namespace wavelab {

// Branch +1 carries the phase with d_t phi = -sqrt(a) |grad phi|, branch -1
// the one with d_t phi = +sqrt(a) |grad phi|.
inline constexpr int wkb_branches[2] = {+1, -1};

// One characteristic of the phase: starts at (t0, seed) with xi = eta and
// carries the ray-map Jacobian and the transport factor along with it.
struct WkbRay {
    int branch = 1;
    std::vector<double> seed;
    std::vector<double> eta;
    std::vector<double> t;
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> xi;
    std::vector<double> tau;
    std::vector<double> jacobian;      // det dx/dseed
    std::vector<double> p_phi;         // P(phi) = phi_tt - div(a grad phi)
    std::vector<double> transport_ode; // b(t) / b(t0) from the direct ODE
    std::vector<double> transport_exp; // exp(-int P / (2 tau)) by quadrature
    bool truncated = false;            // stopped where det dx/dseed collapsed
    double collapse_jacobian = 0.0;
};

struct RayBundle {
    double t0 = 0.0;
    double window = 0.0;
    std::vector<std::vector<double>> directions;
    std::vector<std::vector<double>> seeds;
    std::vector<WkbRay> rays; // one per (seed, direction, branch)
    double min_jacobian = 0.0;
};

// Local data of the phase at one space-time point.
struct PhaseSample {
    double phi = 0.0;
    double phi_t = 0.0;
    std::vector<double> grad;
    std::vector<double> hessian; // row-major n x n
    std::vector<double> seed;    // ray foot point at t0
    double jacobian = 1.0;
    double p_phi = 0.0;
    double transport = 1.0; // b0(t, x) / b0(t0, seed)
};

struct WkbOptions {
    double jacobian_floor = 0.25; // det dx/dseed must stay above this
    int max_halvings = 8;
    double ray_tol = 1e-11;
    double newton_tol = 1e-12;
    int newton_iters = 30;
    int report_points = 32; // per ray over the window
};

// phi^pm(t, x, eta) for a fixed direction set, evaluated by inverting the ray
// map x = X(t; seed) with Newton. Degree-1 homogeneous in eta by construction.
class PhaseField {
public:
    PhaseField(Metric metric, double t0, double window, WkbOptions options);

    PhaseSample evaluate(int branch, double t, std::span<const double> x, std::span<const double> eta) const;
    WkbRay trace(int branch, std::span<const double> seed, std::span<const double> eta, double t_end) const;

    const Metric& metric() const { return metric_; }
    double t0() const { return t0_; }
    double window() const { return window_; }
    const WkbOptions& options() const { return options_; }

    double eikonal_residual_max = 0.0;
    double hamilton_jacobi_residual_max = 0.0;

private:
    Metric metric_;
    double t0_;
    double window_;
    WkbOptions options_;
};

struct EikonalSolution {
    PhaseField phase;
    RayBundle bundle;
};

// Traces the bundle, halving the window (from 0.1 rho / sqrt(C0) when
// window <= 0) until the ray-map Jacobian stays above the floor. Throws
// CausticError after max_halvings. Residuals are checked a posteriori with
// difference gradients at interior ray samples.
EikonalSolution solve_eikonal(const Metric& metric, double t0, const std::vector<std::vector<double>>& directions,
                              const std::vector<std::vector<double>>& seeds, double window = 0.0,
                              const WkbOptions& options = {});

using Envelope = std::function<double(std::span<const double>)>;

struct SplitValue {
    double plus = 0.0;
    double minus = 0.0;
};

// b0^+ + b0^- = S and phi_t^+ b0^+ + phi_t^- b0^- = 0 at t0.
SplitValue initial_amplitude_split(double S, double phi_t_plus, double phi_t_minus);

struct AmplitudeField {
    Envelope envelope;
    int order = 0;
    double transport_agreement = 0.0; // max |ode - exp| over the bundle

    // sum_k b_k (i lambda)^{-k} at (t, x) on the given branch
    std::complex<double> evaluate(const PhaseField& phase, int branch, double t, std::span<const double> x,
                                  std::span<const double> eta, double lambda) const;
    double b0(const PhaseField& phase, int branch, double t, std::span<const double> x,
              std::span<const double> eta) const;
    double b0(const PhaseField& phase, const PhaseSample& sample, int branch, std::span<const double> eta) const;
    double b1(const PhaseField& phase, int branch, double t, std::span<const double> x,
              std::span<const double> eta) const;
};

// b0 by the exponential formula along rays, b1 (order 1) by variation of
// constants. Orders above 1 throw.
AmplitudeField solve_transport(const PhaseField& phase, const RayBundle& bundle, Envelope envelope, int order = 0);

// sum over branches of b^pm e^{i lambda phi^pm} at the given points.
std::vector<std::complex<double>> wkb_approximant(const PhaseField& phase, const AmplitudeField& amp, double lambda,
                                                  std::span<const double> eta, double t,
                                                  const std::vector<std::vector<double>>& points);

struct WkbCompareOptions {
    double extent = 1.5; // half-width of the periodic comparison box
    int points = 64;
    int stride = 4;      // WKB evaluated on every stride-th node
    double t0 = 0.0;
    std::vector<double> eta = {1.0, 0.0, 0.0};
    std::vector<double> centre = {0.3, 0.0, 0.0};
    double width = 0.25; // Gaussian envelope width
    int time_samples = 4; // error is the max over this many times across the window
    double floor = 1e-3;  // errors below this count as converged
    WkbOptions wkb;
};

struct WkbCompareRow {
    double lambda = 0.0;
    double error = 0.0; // max over window times of the sub-lattice l2 error over the datum norm
    double window = 0.0;
    bool caustic = false;
    bool at_floor = false;
};

struct WkbComparison {
    std::vector<WkbCompareRow> rows;
    double window = 0.0;
    bool monotone = true; // over rows without flags, allowing the floor
};

WkbComparison compare_wkb_fdtd(const Metric& metric, const std::vector<double>& lambdas, double window = 0.0,
                               const WkbCompareOptions& options = {});

std::string wkb_comparison_csv(const WkbComparison& cmp);

} // namespace wavelab
