#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavelab/metric.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

// Homogeneous Sobolev norm ||Lambda^gamma f||_2 on a Cartesian grid via the
// discrete Fourier transform. For gamma < 0 the k = 0 mode is dropped and
// *mean_subtracted reports whether it was nonzero.
double sobolev_norm(const Grid& grid, const std::vector<double>& f, double gamma,
                    bool* mean_subtracted = nullptr);
// Inhomogeneous version ||(1 + |k|^2)^{gamma/2} f^||.
double sobolev_norm_inhomogeneous(const Grid& grid, const std::vector<double>& f, double gamma);

// Mixed L^p_t L^q_x norm of equally spaced snapshots: midpoint rule in
// space, trapezoid in time.
double strichartz_norm(const Grid& grid, const std::vector<std::vector<double>>& snapshots, double p, double q,
                       double dt);
double lq_norm(const Grid& grid, const std::vector<double>& f, double q);

// A Strichartz exponent: exact rational, inexact real, or infinity.
class Exponent {
public:
    Exponent() = default;
    static Exponent rational(long long num, long long den = 1);
    static Exponent infinity();
    // Exact when the value is within 1e-12 of a fraction with denominator <= 1000.
    static Exponent from_double(double v);
    // "inf", "8", "10/3", "2.5"; decimals are read exactly.
    static Exponent parse(const std::string& text);

    bool is_infinite() const { return infinite_; }
    bool is_exact() const { return exact_; }
    long long numerator() const { return num_; }
    long long denominator() const { return den_; }
    double value() const;
    std::string str() const;

private:
    bool infinite_ = false;
    bool exact_ = true;
    long long num_ = 0;
    long long den_ = 1;
    double approx_ = 0.0;
};

struct StrichartzTriple {
    Exponent p;
    Exponent q;
    Exponent gamma;
    int n = 3;
};

enum class AdmissibilityRule { free_1_3, perturbed_1_4, local_5_1 };
std::string to_string(AdmissibilityRule rule);

struct AdmissibilityVerdict {
    AdmissibilityRule rule = AdmissibilityRule::free_1_3;
    bool passed = false;
    bool exact = true;
    std::string binding_constraint; // first violated constraint, or the tightest one when passed
};

AdmissibilityVerdict check_admissibility(const StrichartzTriple& triple, AdmissibilityRule rule);
std::string admissibility_table(const std::vector<StrichartzTriple>& triples);

// Value, time derivative and spatial gradient of u at a point.
struct FieldJet {
    double u = 0.0;
    double u_t = 0.0;
    std::vector<double> grad;
};

struct MultiplierTerms {
    double X = 0.0;
    std::vector<double> Y;
    double Z = 0.0;
    double M = 0.0;      // M_xi(u)
    double energy = 0.0; // e(u)
};

// Pointwise terms of M_xi(u) P(u) = d_t X + div Y + Z; throws DomainError
// when |x| <= r_min.
MultiplierTerms multiplier_terms(const Metric& metric, const MultiplierFunction& xi, double t,
                                 std::span<const double> x, const FieldJet& jet, double r_min);

using SpaceTimeFunction = std::function<double(double, std::span<const double>)>;

struct IdentityLadder {
    int dimension = 3;
    double extent = 3.0;                // cube [-L, L]^n
    std::vector<int> points = {24, 48, 96};
    std::vector<double> times = {0.3, 0.9};
};

struct IdentityRow {
    double h = 0.0;
    double residual = 0.0;      // L^1 in space, summed over the sample times
    double reference = 0.0;     // L^1 norm of M P(u), for scale
    double boundary_term = 0.0; // (pi/2)(n-1) xi(0) u(t,0)^2, n = 3 only
    double min_Z = 0.0;
};

struct IdentityReport {
    std::vector<IdentityRow> rows;
    std::vector<double> orders;
    bool monotone = true;
    double min_order() const;
};

// Checks the multiplier identity with every derivative of u taken by
// centred differences at spacing h (time and space) on each ladder grid.
IdentityReport verify_identity_8_5(const Metric& metric, const MultiplierFunction& xi, const SpaceTimeFunction& u,
                                   const IdentityLadder& ladder = {});

struct EnergyBoundOptions {
    int trials = 10;
    double periods = 50.0;
    Grid grid = Grid::radial_grid(3, 240.0, 4801);
    double support_radius = 3.0;
    double smoothness = 3.0;
    std::uint64_t seed = 1;
    int samples_per_period = 8;
    double trend_threshold = 1e-3;
    double cfl_safety = 0.45; // fraction of the stability limit; energy drift of the stepper scales as its square
};

struct EnergyTrial {
    std::vector<double> t;
    std::vector<double> ratio; // E(t)/E(0), E = squared Hdot^1 x L^2 norm
    double sup_ratio = 0.0;
    double slope_per_period = 0.0;
};

struct EnergyBoundReport {
    std::vector<EnergyTrial> trials;
    double sup_ratio = 0.0;
    double min_ratio = 0.0;
    double max_slope = 0.0; // largest |slope| over trials
    bool trend_flag = false;
};

EnergyBoundReport energy_bound_experiment(const Metric& metric, const EnergyBoundOptions& options = {});

// Running integral of a nonnegative sampled quantity.
struct RunningIntegral {
    std::vector<double> t;
    std::vector<double> integral;
    double total = 0.0;
    double norm_squared = 0.0;  // ||f||^2 in the matching norm
    double ratio = 0.0;         // total / norm_squared
    double tail_fraction = 0.0; // share of the total accumulated after horizon/2
    bool out_of_hypothesis = false;
};

struct Cutoff {
    double inner = 1.0; // = 1 on |x| <= inner
    double outer = 1.5; // = 0 on |x| >= outer
};

// int_0^H ||phi U_0(t) f||^2_{H^gamma x H^{gamma-1}} dt with the exact free
// propagator, over ||f||^2 in Hdot^gamma x Hdot^{gamma-1}.
RunningIntegral local_smoothing_free(const Cutoff& phi, const CauchyData& f, double gamma, double horizon,
                                     int samples = 128);

struct StrichartzOptions {
    int trials = 20;
    double horizon = 16.0;
    Grid grid = Grid::radial_grid(3, 40.0, 1601);
    double support_radius = 2.0;
    double smoothness = 2.0;
    std::uint64_t seed = 7;
    int snapshot_every = 4;
    Cutoff chi{1.5, 2.0};
};

struct StrichartzTrial {
    double lplq = 0.0;
    double sup_energy = 0.0;
    double data_norm = 0.0;
    double ratio = 0.0;     // (lplq + sup_energy) / data_norm
    double lplq_ratio = 0.0;
    double inner_lplq = 0.0; // ||chi u||
    double outer_lplq = 0.0; // ||(1 - chi) u||
};

struct StrichartzReport {
    std::vector<StrichartzTrial> trials;
    double sup_ratio = 0.0;
    double spread = 0.0; // max ratio / min ratio
    double sup_lplq_ratio = 0.0;
};

// Throws ParameterError naming the binding constraint if the triple is not
// admissible under the perturbed rule.
StrichartzReport strichartz_experiment(const Metric& metric, const StrichartzTriple& triple,
                                       const StrichartzOptions& options = {});

} // namespace wavelab
