#include "wavelab/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

double norm(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

class BumpModel : public RadialModel {
public:
    BumpModel(double epsilon, double rho, Modulation m) : eps_(epsilon), rho_(rho), m_(std::move(m)) {}

    RadialJet jet(double t, double r) const override
    {
        RadialJet j;
        if (r >= rho_ || eps_ == 0.0) return j;
        const Jet2 p = bump_profile(r / rho_);
        const Jet2 m = m_(t);
        j.a = 1.0 + eps_ * m.v * p.v;
        j.a_t = eps_ * m.d1 * p.v;
        j.a_r = eps_ * m.v * p.d1 / rho_;
        j.a_rr = eps_ * m.v * p.d2 / (rho_ * rho_);
        j.a_tr = eps_ * m.d1 * p.d1 / rho_;
        return j;
    }

private:
    double eps_;
    double rho_;
    Modulation m_;
};

class FrozenTailModel : public RadialModel {
public:
    FrozenTailModel(Metric base, double t_freeze, double period)
        : base_(std::move(base)), t1_(t_freeze), period_(period) {}

    RadialJet jet(double t, double r) const override
    {
        double s = std::fmod(t, period_);
        if (s < 0.0) s += period_;
        if (s >= t1_) {
            RadialJet j = base_.radial(t1_, r);
            j.a_t = 0.0;
            j.a_tr = 0.0;
            return j;
        }
        // theta sweeps one base period ending at t1, with flat ends so the
        // join with the frozen part is smooth.
        const double tb = base_.period();
        const Jet2 st = smooth_step(s / t1_);
        const double theta = t1_ - tb + tb * st.v;
        const double dtheta = tb * st.d1 / t1_;
        RadialJet j = base_.radial(theta, r);
        j.a_t *= dtheta;
        j.a_tr *= dtheta;
        return j;
    }

private:
    Metric base_;
    double t1_;
    double period_;
};

} // namespace

Metric::Metric(std::shared_ptr<const RadialModel> model, double period, double rho, double lower,
               double upper, bool time_independent, std::string label)
    : model_(std::move(model)), period_(period), rho_(rho), lower_(lower), upper_(upper),
      time_independent_(time_independent), label_(std::move(label))
{
    if (!(period > 0.0)) throw ParameterError("metric period must be positive");
    if (!(rho > 0.0)) throw ParameterError("metric support radius must be positive");
    if (!(lower > 0.0)) throw PositivityError("metric lower bound must be positive");
}

RadialJet Metric::radial(double t, double r) const { return model_->jet(t, r); }

double Metric::evaluate(double t, std::span<const double> x) const { return model_->jet(t, norm(x)).a; }

double Metric::d_t(double t, std::span<const double> x) const { return model_->jet(t, norm(x)).a_t; }

double Metric::d_r(double t, std::span<const double> x) const { return model_->jet(t, norm(x)).a_r; }

std::vector<double> Metric::grad_x(double t, std::span<const double> x) const
{
    const double r = norm(x);
    std::vector<double> g(x.size(), 0.0);
    if (r == 0.0) return g;
    const double ar = model_->jet(t, r).a_r;
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = ar * x[i] / r;
    return g;
}

std::vector<double> Metric::hessian_x(double t, std::span<const double> x) const
{
    const std::size_t n = x.size();
    const double r = norm(x);
    const RadialJet j = model_->jet(t, r);
    std::vector<double> h(n * n, 0.0);
    if (r < 1e-150) {
        for (std::size_t i = 0; i < n; ++i) h[i * n + i] = j.a_rr;
        return h;
    }
    const double tang = j.a_r / r;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double uu = x[i] * x[k] / (r * r);
            h[i * n + k] = j.a_rr * uu + tang * ((i == k ? 1.0 : 0.0) - uu);
        }
    return h;
}

Modulation::Modulation(std::vector<Harmonic> harmonics, double period)
    : harmonics_(std::move(harmonics)), period_(period)
{
    std::erase_if(harmonics_, [](const Harmonic& h) { return h.amplitude == 0.0; });
    int kmax = 0;
    for (const auto& h : harmonics_) {
        if (h.frequency < 1) throw ParameterError("modulation frequencies must be positive integers");
        kmax = std::max(kmax, h.frequency);
    }
    if (harmonics_.empty()) return;

    // Sample densely, then polish each sampled extremum with Brent.
    const int samples = 256 * kmax;
    const double dt = period_ / samples;
    auto value = [&](double t) { return (*this)(t).v; };
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < samples; ++i) {
        const double t = i * dt;
        const double v = value(t);
        const double vm = value(t - dt);
        const double vp = value(t + dt);
        if (v <= vm && v <= vp) {
            auto res = boost::math::tools::brent_find_minima(value, t - dt, t + dt, 52);
            lo = std::min({lo, v, res.second});
        }
        if (v >= vm && v >= vp) {
            auto res = boost::math::tools::brent_find_minima([&](double s) { return -value(s); },
                                                             t - dt, t + dt, 52);
            hi = std::max({hi, v, -res.second});
        }
    }
    if (lo < 0.0) {
        shift_ = -lo;
        hi += shift_;
        lo = 0.0;
    }
    min_ = lo;
    max_ = hi;
}

Jet2 Modulation::operator()(double t) const
{
    Jet2 m{1.0 + shift_, 0.0, 0.0};
    for (const auto& h : harmonics_) {
        const double w = 2.0 * std::numbers::pi * h.frequency / period_;
        const double c = std::cos(w * t);
        const double s = std::sin(w * t);
        m.v += h.amplitude * (c - 1.0);
        m.d1 -= h.amplitude * w * s;
        m.d2 -= h.amplitude * w * w * c;
    }
    return m;
}

Metric build_radial_bump(double epsilon, double rho, double period, const std::vector<Harmonic>& harmonics)
{
    if (!(rho > 0.0)) throw ParameterError("rho must be positive");
    if (!(period > 0.0)) throw ParameterError("period must be positive");
    if (!std::isfinite(epsilon)) throw ParameterError("epsilon must be finite");
    Modulation m(harmonics, period);
    // m >= 0 and the bump reaches 1, so a - 1 sweeps epsilon * [0, max m].
    const double peak = 1.0 + epsilon * m.max();
    if (!(peak > 0.0)) throw PositivityError("epsilon makes inf a <= 0");
    const double lower = std::min(1.0, peak);
    const double upper = std::max(1.0, peak);
    const bool static_metric = epsilon == 0.0 || m.constant();
    auto model = std::make_shared<BumpModel>(epsilon, rho, std::move(m));
    return Metric(model, period, rho, lower, upper, static_metric, "radial-bump");
}

Metric flat_metric(double rho, double period) { return build_radial_bump(0.0, rho, period, {}); }

Metric build_frozen_tail(const Metric& base, double t_freeze, double period)
{
    if (!(period > 0.0)) throw ParameterError("period must be positive");
    if (!(t_freeze > 0.0) || !(t_freeze < period))
        throw ParameterError("frozen tail needs 0 < t_freeze < period");
    if (base.time_independent()) {
        return Metric(std::make_shared<FrozenTailModel>(base, t_freeze, period), period,
                      base.support_radius(), base.lower_bound(), base.upper_bound(), true, base.label());
    }
    auto model = std::make_shared<FrozenTailModel>(base, t_freeze, period);
    return Metric(model, period, base.support_radius(), base.lower_bound(), base.upper_bound(), false,
                  "frozen-tail");
}

MultiplierFunction::MultiplierFunction(Kind kind, double epsilon, double scale)
    : kind_(kind), epsilon_(epsilon), scale_(scale), r_max_(std::numeric_limits<double>::infinity())
{
    const bool zero_ok = kind == Kind::constant && epsilon == 0.0;
    if (!zero_ok && !(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("multiplier epsilon must lie in (0,1)");
    if (kind != Kind::constant && !(scale > 0.0)) throw ParameterError("multiplier scale must be positive");
}

MultiplierFunction MultiplierFunction::rational(double epsilon, double scale)
{
    return MultiplierFunction(Kind::rational, epsilon, scale);
}

MultiplierFunction MultiplierFunction::odd(double epsilon, double scale)
{
    return MultiplierFunction(Kind::odd, epsilon, scale);
}

MultiplierFunction MultiplierFunction::constant(double epsilon)
{
    return MultiplierFunction(Kind::constant, epsilon, 1.0);
}

MultiplierFunction MultiplierFunction::with_domain(double r_max) const
{
    MultiplierFunction out = *this;
    out.r_max_ = r_max;
    return out;
}

Jet2 MultiplierFunction::operator()(double r) const
{
    if (kind_ == Kind::constant) return {epsilon_, 0.0, 0.0};
    if (kind_ == Kind::odd) {
        const double q = r * r + scale_ * scale_;
        const double s = std::sqrt(q);
        const double s2 = scale_ * scale_;
        return {epsilon_ * r / s, epsilon_ * s2 / (q * s), -3.0 * epsilon_ * s2 * r / (q * q * s)};
    }
    const double d = r + scale_;
    return {epsilon_ * r / d, epsilon_ * scale_ / (d * d), -2.0 * epsilon_ * scale_ / (d * d * d)};
}

} // namespace wavelab
