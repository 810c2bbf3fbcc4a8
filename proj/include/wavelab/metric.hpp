#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wavelab/smooth.hpp"

namespace wavelab {

// a(t,r) together with its t and r derivatives for a radial metric.
struct RadialJet {
    double a = 1.0;
    double a_t = 0.0;
    double a_r = 0.0;
    double a_rr = 0.0;
    double a_tr = 0.0;
};

class RadialModel {
public:
    virtual ~RadialModel() = default;
    virtual RadialJet jet(double t, double r) const = 0;
};

// Time periodic scalar coefficient a(t,x) = A(t,|x|), equal to 1 outside
// the ball of radius support_radius().
class Metric {
public:
    Metric(std::shared_ptr<const RadialModel> model, double period, double rho,
           double lower, double upper, bool time_independent, std::string label);

    double evaluate(double t, std::span<const double> x) const;
    double d_t(double t, std::span<const double> x) const;
    double d_r(double t, std::span<const double> x) const;
    std::vector<double> grad_x(double t, std::span<const double> x) const;
    // Row-major n x n Hessian in x.
    std::vector<double> hessian_x(double t, std::span<const double> x) const;

    RadialJet radial(double t, double r) const;

    double period() const { return period_; }
    double support_radius() const { return rho_; }
    double lower_bound() const { return lower_; }
    double upper_bound() const { return upper_; }
    bool time_independent() const { return time_independent_; }
    const std::string& label() const { return label_; }

private:
    std::shared_ptr<const RadialModel> model_;
    double period_;
    double rho_;
    double lower_;
    double upper_;
    bool time_independent_;
    std::string label_;
};

struct Harmonic {
    double amplitude = 0.0;
    int frequency = 1;
};

// m(t) = 1 + sum_j A_j (cos(2 pi k_j t / T) - 1), shifted up if it dips below 0.
class Modulation {
public:
    Modulation(std::vector<Harmonic> harmonics, double period);
    Jet2 operator()(double t) const;
    double max() const { return max_; }
    double min() const { return min_; }
    bool constant() const { return harmonics_.empty(); }

private:
    std::vector<Harmonic> harmonics_;
    double period_;
    double shift_ = 0.0;
    double min_ = 1.0;
    double max_ = 1.0;
};

// a = 1 + epsilon m(t) phi(|x|/rho), phi a C-infinity bump.
Metric build_radial_bump(double epsilon, double rho, double period,
                         const std::vector<Harmonic>& harmonics);

Metric flat_metric(double rho = 1.0, double period = 1.0);

// base on a reparametrized [0, t_freeze], frozen at a(t_freeze, x) up to period.
Metric build_frozen_tail(const Metric& base, double t_freeze, double period);

class MultiplierFunction {
public:
    // xi(r) = epsilon r / (r + scale)
    static MultiplierFunction rational(double epsilon, double scale);
    // xi(r) = epsilon r / sqrt(r^2 + scale^2), smooth as a function of x
    static MultiplierFunction odd(double epsilon, double scale);
    // constant(0) is allowed and gives xi = 0
    static MultiplierFunction constant(double epsilon);

    Jet2 operator()(double r) const;
    double xi(double r) const { return (*this)(r).v; }
    double xi_prime(double r) const { return (*this)(r).d1; }
    double xi_second(double r) const { return (*this)(r).d2; }
    double epsilon() const { return epsilon_; }
    double r_max() const { return r_max_; }
    MultiplierFunction with_domain(double r_max) const;

private:
    enum class Kind { rational, odd, constant };
    MultiplierFunction(Kind kind, double epsilon, double scale);
    Kind kind_;
    double epsilon_;
    double scale_;
    double r_max_;
};

enum class ConditionId { c1_2i, c1_2ii, c1_2iii, c8_1, c8_2, c8_3, c8_4 };

std::string to_string(ConditionId id);

struct ConditionReport {
    ConditionId id = ConditionId::c1_2i;
    double margin = 0.0;
    double worst_t = 0.0;
    std::vector<double> worst_x;
    bool passed = false;
    // Only meaningful for the non-trapping check: the certified beta, 0 when not passed.
    double beta = 0.0;
};

// Sample lattice: t_points over [0,T), x_points cell centres per axis of
// [-x_extent, x_extent]^n restricted to the ball of radius x_extent.
struct SampleGrid {
    int dimension = 3;
    int t_points = 64;
    int x_points = 64;
    double x_extent = 0.0; // 0 means 2 rho
};

std::vector<ConditionReport> check_basic_conditions(const Metric& metric, const SampleGrid& sample);
ConditionReport check_nontrapping_sufficient(const Metric& metric, const SampleGrid& sample);
std::vector<ConditionReport> check_energy_conditions(const Metric& metric, const MultiplierFunction& xi,
                                                     const SampleGrid& sample);

// id,margin,worst_t,worst_x1..,passed
std::string condition_csv(const std::vector<ConditionReport>& reports, int dimension);

} // namespace wavelab
