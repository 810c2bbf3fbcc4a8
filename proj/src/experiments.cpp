#include <algorithm>
#include <cmath>
#include <limits>

#include "fft.hpp"
#include "stepping.hpp"
#include "wavelab/analysis.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/parallel.hpp"

namespace wavelab {

namespace {

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) return 0.0;
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::vector<double> times_field(const std::vector<double>& w, const std::vector<double>& f)
{
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = w[i] * f[i];
    return out;
}

} // namespace

EnergyBoundReport energy_bound_experiment(const Metric& metric, const EnergyBoundOptions& options)
{
    if (options.trials < 1) throw ParameterError("need at least one trial");
    if (!(options.periods > 0.0)) throw ParameterError("horizon must be positive");
    if (options.samples_per_period < 1) throw ParameterError("need at least one sample per period");
    if (!(options.cfl_safety > 0.0 && options.cfl_safety <= 1.0)) throw ParameterError("cfl_safety must lie in (0, 1]");
    const double T = metric.period();
    const double interval = T / options.samples_per_period;
    const long count = std::lround(options.periods * options.samples_per_period);
    const auto plan = detail::sampling_plan(metric, options.grid, interval, options.cfl_safety);

    EnergyBoundReport report;
    report.trials.resize(options.trials);
    parallel_for(static_cast<std::size_t>(options.trials), [&](std::size_t k) {
        CauchyData data =
            sample_random_data(options.seed + k, options.support_radius, options.smoothness, options.grid);
        const double e0 = hdot_inner(data, data);
        EnergyTrial& trial = report.trials[k];
        EvolveOptions eo;
        eo.dt = plan.dt;
        evolve(
            metric, data, 0.0, count * interval, eo,
            [&](const CauchyData& state) {
                trial.t.push_back(state.time);
                trial.ratio.push_back(e0 > 0.0 ? hdot_inner(state, state) / e0 : 1.0);
            },
            plan.every);
        std::vector<double> periods(trial.t.size());
        for (std::size_t i = 0; i < trial.t.size(); ++i) periods[i] = trial.t[i] / T;
        trial.sup_ratio = *std::max_element(trial.ratio.begin(), trial.ratio.end());
        trial.slope_per_period = fit_slope(periods, trial.ratio);
    });
    report.min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& trial : report.trials) {
        report.sup_ratio = std::max(report.sup_ratio, trial.sup_ratio);
        report.min_ratio = std::min(report.min_ratio, *std::min_element(trial.ratio.begin(), trial.ratio.end()));
        report.max_slope = std::max(report.max_slope, std::abs(trial.slope_per_period));
    }
    report.trend_flag = report.max_slope > options.trend_threshold;
    return report;
}

RunningIntegral local_smoothing_free(const Cutoff& phi, const CauchyData& f, double gamma, double horizon, int samples)
{
    const Grid& g = f.grid;
    if (g.radial) throw ParameterError("local smoothing uses the Cartesian free propagator");
    if (!(horizon > 0.0) || samples < 2) throw ParameterError("need a positive horizon and at least two samples");
    RunningIntegral out;
    out.out_of_hypothesis = gamma > 0.5 * (g.dimension - 1);
    const double n1 = sobolev_norm(g, f.f1, gamma);
    const double n2 = sobolev_norm(g, f.f2, gamma - 1.0);
    out.norm_squared = n1 * n1 + n2 * n2;

    const auto chi = cutoff_field(g, phi.inner, phi.outer);
    std::vector<double> f1 = f.f1, f2 = f.f2;
    std::vector<std::complex<double>> a, b;
    detail::forward_r2c(g, f1, a);
    detail::forward_r2c(g, f2, b);
    std::vector<double> kk(a.size());
    detail::for_each_mode(g, [&](std::size_t i, const std::vector<double>& k) {
        double k2 = 0.0;
        for (double v : k) k2 += v * v;
        kk[i] = std::sqrt(k2);
    });

    const double dt = horizon / samples;
    std::vector<double> value(samples + 1);
    parallel_for(static_cast<std::size_t>(samples + 1), [&](std::size_t j) {
        const double t = j * dt;
        std::vector<std::complex<double>> ua(a.size()), va(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double c = std::cos(t * kk[i]);
            const double sk = kk[i] > 0.0 ? std::sin(t * kk[i]) / kk[i] : t;
            ua[i] = c * a[i] + sk * b[i];
            va[i] = -kk[i] * std::sin(t * kk[i]) * a[i] + c * b[i];
        }
        std::vector<double> u, v;
        detail::inverse_c2r(g, ua, u);
        detail::inverse_c2r(g, va, v);
        const double p = sobolev_norm_inhomogeneous(g, times_field(chi, u), gamma);
        const double q = sobolev_norm_inhomogeneous(g, times_field(chi, v), gamma - 1.0);
        value[j] = p * p + q * q;
    });
    out.t.resize(samples + 1);
    out.integral.resize(samples + 1);
    double s = 0.0;
    for (int j = 0; j <= samples; ++j) {
        if (j > 0) s += 0.5 * dt * (value[j - 1] + value[j]);
        out.t[j] = j * dt;
        out.integral[j] = s;
    }
    out.total = s;
    out.ratio = out.norm_squared > 0.0 ? s / out.norm_squared : 0.0;
    out.tail_fraction = s > 0.0 ? (s - out.integral[samples / 2]) / s : 0.0;
    return out;
}

StrichartzReport strichartz_experiment(const Metric& metric, const StrichartzTriple& triple,
                                       const StrichartzOptions& options)
{
    const auto verdict = check_admissibility(triple, AdmissibilityRule::perturbed_1_4);
    if (!verdict.passed) throw ParameterError("inadmissible exponents: " + verdict.binding_constraint);
    if (triple.n != options.grid.dimension) throw ParameterError("triple dimension does not match the grid");
    if (options.trials < 1 || options.snapshot_every < 1) throw ParameterError("bad trial or snapshot count");
    const double p = triple.p.value(), q = triple.q.value();

    // steps divisible by snapshot_every
    const double dt_max = cfl_limit(metric, options.grid);
    const long blocks = std::max(1L, static_cast<long>(std::ceil(options.horizon / (dt_max * options.snapshot_every) - 1e-9)));
    const double interval = options.horizon / blocks;
    const auto chi = cutoff_field(options.grid, options.chi.inner, options.chi.outer);
    std::vector<double> one_minus(chi.size());
    for (std::size_t i = 0; i < chi.size(); ++i) one_minus[i] = 1.0 - chi[i];

    StrichartzReport report;
    report.trials.resize(options.trials);
    parallel_for(static_cast<std::size_t>(options.trials), [&](std::size_t k) {
        CauchyData data =
            sample_random_data(options.seed + k, options.support_radius, options.smoothness, options.grid);
        std::vector<double> full, inner, outer;
        double sup_energy = 0.0;
        EvolveOptions eo;
        eo.dt = interval / options.snapshot_every;
        evolve(
            metric, data, 0.0, options.horizon, eo,
            [&](const CauchyData& state) {
                full.push_back(std::pow(lq_norm(state.grid, state.f1, q), p));
                inner.push_back(std::pow(lq_norm(state.grid, times_field(chi, state.f1), q), p));
                outer.push_back(std::pow(lq_norm(state.grid, times_field(one_minus, state.f1), q), p));
                sup_energy = std::max(sup_energy, hdot_norm(state));
            },
            options.snapshot_every);
        auto combine = [&](const std::vector<double>& v) {
            double s = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) s += (j == 0 || j + 1 == v.size() ? 0.5 : 1.0) * v[j];
            return std::pow(s * interval, 1.0 / p);
        };
        StrichartzTrial& tr = report.trials[k];
        tr.data_norm = hdot_norm(data);
        tr.lplq = combine(full);
        tr.inner_lplq = combine(inner);
        tr.outer_lplq = combine(outer);
        tr.sup_energy = sup_energy;
        tr.ratio = tr.data_norm > 0.0 ? (tr.lplq + tr.sup_energy) / tr.data_norm : 0.0;
        tr.lplq_ratio = tr.data_norm > 0.0 ? tr.lplq / tr.data_norm : 0.0;
    });
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& tr : report.trials) {
        report.sup_ratio = std::max(report.sup_ratio, tr.ratio);
        report.sup_lplq_ratio = std::max(report.sup_lplq_ratio, tr.lplq_ratio);
        lo = std::min(lo, tr.ratio);
    }
    report.spread = lo > 0.0 ? report.sup_ratio / lo : 0.0;
    return report;
}

} // namespace wavelab
