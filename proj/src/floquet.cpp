#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fft.hpp"
#include "stepping.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/floquet.hpp"

namespace wavelab {

namespace {

void scale_in_place(CauchyData& d, const std::vector<double>& w)
{
    for (std::size_t i = 0; i < w.size(); ++i) {
        d.f1[i] *= w[i];
        d.f2[i] *= w[i];
    }
}

// y += c x
void axpy(CauchyData& y, double c, const CauchyData& x)
{
    for (std::size_t i = 0; i < y.f1.size(); ++i) {
        y.f1[i] += c * x.f1[i];
        y.f2[i] += c * x.f2[i];
    }
}

void scale(CauchyData& d, double c)
{
    for (double& v : d.f1) v *= c;
    for (double& v : d.f2) v *= c;
}

void band_limit(CauchyData& d)
{
    detail::band_limit(d.grid, d.f1);
    detail::band_limit(d.grid, d.f2);
}

double cutoff_norm(const CauchyData& state, const std::vector<double>& chi, bool band = false)
{
    CauchyData d = state;
    if (band) band_limit(d);
    scale_in_place(d, chi);
    return hdot_norm(d);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    LineFit f;
    const std::size_t n = x.size();
    if (n < 2) return f;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return f;
}

// Fits log(value) on [t_min, t_max], censoring values below the floor.
void fit_decay(DecayFit& fit)
{
    std::vector<double> x, y;
    for (std::size_t i = 0; i < fit.t.size(); ++i) {
        if (fit.t[i] < fit.t_min - 1e-12 || fit.t[i] > fit.t_max + 1e-12) continue;
        if (!(fit.local[i] > local_energy_floor)) {
            fit.floor_limited = true;
            continue;
        }
        x.push_back(fit.t[i]);
        y.push_back(std::log(fit.local[i]));
    }
    if (x.size() < 3) {
        fit.floor_limited = true;
        fit.delta = std::numeric_limits<double>::infinity();
        fit.C = 0.0;
        fit.r_squared = 0.0;
        return;
    }
    const LineFit line = fit_line(x, y);
    fit.delta = -line.slope;
    fit.C = std::exp(line.intercept);
    fit.r_squared = line.r_squared;
}

double default_interval(const Metric& metric, double horizon)
{
    return std::min(metric.period(), horizon) / 4.0;
}

} // namespace

int default_period_count(const Metric& metric)
{
    const double need = 4.0 * (metric.support_radius() + 1.0);
    return std::max(1, static_cast<int>(std::ceil(need / metric.period() - 1e-12)));
}

CutoffMonodromy CutoffMonodromy::make(const Metric& metric, const Grid& grid, int periods, double base_time)
{
    CutoffMonodromy op{metric, grid, {metric.support_radius() + 0.5, metric.support_radius() + 1.0},
                       periods > 0 ? periods : default_period_count(metric), base_time};
    return op;
}

CauchyData apply_cutoff_monodromy(const CutoffMonodromy& op, const CauchyData& data)
{
    if (data.f1.size() != op.grid.size()) throw ParameterError("data does not live on the operator grid");
    const auto chi = cutoff_field(op.grid, op.chi.inner, op.chi.outer);
    CauchyData d = data;
    d.grid = op.grid;
    scale_in_place(d, chi);
    if (op.band_limited) band_limit(d);
    d.support_radius = op.chi.outer;
    const double s = op.base_time;
    CauchyData out = evolve(op.metric, d, s, s + op.horizon());
    if (op.band_limited) band_limit(out);
    scale_in_place(out, chi);
    out.time = s;
    out.support_radius = op.chi.outer;
    return out;
}

SpectrumEstimate estimate_spectrum(const CutoffMonodromy& op, int num_eigs, double tol, int max_iters,
                                   std::uint64_t seed)
{
    if (num_eigs < 1 || num_eigs > 10) throw ParameterError("num_eigs must be in [1, 10]");
    if (max_iters < num_eigs) throw ParameterError("max_iters must be at least num_eigs");

    const auto chi = cutoff_field(op.grid, op.chi.inner, op.chi.outer);
    CauchyData start = sample_random_data(seed, op.chi.outer, 2.0, op.grid);
    scale_in_place(start, chi);
    const double n0 = hdot_norm(start);
    if (!(n0 > 0.0)) throw ParameterError("degenerate Arnoldi start vector");
    scale(start, 1.0 / n0);

    std::vector<CauchyData> V{start};
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(max_iters + 1, max_iters);
    SpectrumEstimate est;
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;
    int m = 0;
    for (int j = 0; j < max_iters; ++j) {
        CauchyData w = apply_cutoff_monodromy(op, V[j]);
        const double wn = hdot_norm(w);
        for (int pass = 0; pass < 2; ++pass) {
            for (int i = 0; i <= j; ++i) {
                const double c = hdot_inner(w, V[i]);
                H(i, j) += c;
                axpy(w, -c, V[i]);
            }
        }
        const double beta = hdot_norm(w);
        H(j + 1, j) = beta;
        m = j + 1;

        Eigen::EigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(m, m));
        values = es.eigenvalues();
        vectors = es.eigenvectors();
        std::vector<int> order(m);
        for (int i = 0; i < m; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return std::abs(values[a]) > std::abs(values[b]); });
        const bool invariant = beta <= 1e-13 * std::max(wn, 1e-300) || beta == 0.0;
        bool done = m >= num_eigs || invariant;
        for (int i = 0; i < std::min(num_eigs, m) && done; ++i) {
            const Eigen::VectorXcd y = vectors.col(order[i]);
            const double est_res = beta * std::abs(y[m - 1]) / y.norm();
            if (est_res > tol) done = false;
        }
        est.iterations = m;
        if (invariant) est.breakdown = true;
        if (done || j + 1 == max_iters) {
            est.converged = done;
            // explicit residuals of the leading Ritz pairs
            for (int i = 0; i < std::min(num_eigs, m); ++i) {
                const std::complex<double> mu = values[order[i]];
                const Eigen::VectorXcd y = vectors.col(order[i]);
                CauchyData re = CauchyData::zeros(op.grid), im = CauchyData::zeros(op.grid);
                for (int k = 0; k < m; ++k) {
                    axpy(re, y[k].real(), V[k]);
                    axpy(im, y[k].imag(), V[k]);
                }
                const double vn2 = hdot_inner(re, re) + hdot_inner(im, im);
                CauchyData are = apply_cutoff_monodromy(op, re);
                CauchyData aim = std::abs(mu.imag()) > 0.0 ? apply_cutoff_monodromy(op, im) : CauchyData::zeros(op.grid);
                // A v - mu v with v = re + i im
                axpy(are, -mu.real(), re);
                axpy(are, mu.imag(), im);
                axpy(aim, -mu.real(), im);
                axpy(aim, -mu.imag(), re);
                const double rn2 = hdot_inner(are, are) + hdot_inner(aim, aim);
                est.multipliers.push_back({mu, vn2 > 0.0 ? std::sqrt(rn2 / vn2) : 0.0});
                if (est.multipliers.back().residual > tol) est.converged = false;
            }
            break;
        }
        scale(w, 1.0 / beta);
        V.push_back(std::move(w));
    }
    for (const auto& mu : est.multipliers)
        est.spectral_radius_estimate = std::max(est.spectral_radius_estimate, std::abs(mu.value));
    return est;
}

DecayFit fit_local_energy_decay(const Metric& metric, const CauchyData& data, const Cutoff& phi, double horizon,
                                std::optional<DecayWindow> window, double sample_interval, bool band_limited)
{
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    const double interval = sample_interval > 0.0 ? sample_interval : default_interval(metric, horizon);
    const long count = std::max(1L, std::lround(horizon / interval));
    const double step = horizon / count;
    const auto plan = detail::sampling_plan(metric, data.grid, step);
    const auto chi = cutoff_field(data.grid, phi.inner, phi.outer);

    DecayFit fit;
    EvolveOptions eo;
    eo.dt = plan.dt;
    evolve(
        metric, data, 0.0, horizon, eo,
        [&](const CauchyData& state) {
            fit.t.push_back(state.time);
            fit.local.push_back(cutoff_norm(state, chi, band_limited));
        },
        plan.every);
    const double R = data.support_radius ? *data.support_radius : measured_support_radius(data);
    if (window) {
        fit.t_min = window->t_min;
        fit.t_max = window->t_max;
    } else {
        fit.t_min = 2.0 * (R + metric.support_radius()) / std::sqrt(metric.lower_bound());
        fit.t_max = horizon;
    }
    fit_decay(fit);
    return fit;
}

DecayFit fit_monodromy_powers(const CutoffMonodromy& op, const CauchyData& data, int powers)
{
    if (powers < 2) throw ParameterError("need at least two powers");
    DecayFit fit;
    CauchyData cur = data;
    for (int m = 0; m <= powers; ++m) {
        fit.t.push_back(m * op.horizon());
        fit.local.push_back(hdot_norm(cur));
        if (m < powers) cur = apply_cutoff_monodromy(op, cur);
    }
    fit.t_min = op.horizon();
    fit.t_max = powers * op.horizon();
    fit_decay(fit);
    return fit;
}

RunningIntegral l2_local_energy_integral(const Metric& metric, const CauchyData& data, const Cutoff& phi,
                                         double horizon, double sample_interval)
{
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    const double interval = sample_interval > 0.0 ? sample_interval : default_interval(metric, horizon);
    const long count = std::max(2L, std::lround(horizon / interval));
    const double step = horizon / count;
    const auto plan = detail::sampling_plan(metric, data.grid, step);
    const auto chi = cutoff_field(data.grid, phi.inner, phi.outer);

    std::vector<double> value;
    EvolveOptions eo;
    eo.dt = plan.dt;
    evolve(
        metric, data, 0.0, horizon, eo,
        [&](const CauchyData& state) {
            const double v = cutoff_norm(state, chi);
            value.push_back(v * v);
        },
        plan.every);

    RunningIntegral out;
    double s = 0.0;
    for (std::size_t j = 0; j < value.size(); ++j) {
        if (j > 0) s += 0.5 * step * (value[j - 1] + value[j]);
        out.t.push_back(j * step);
        out.integral.push_back(s);
    }
    const double n = hdot_norm(data);
    out.total = s;
    out.norm_squared = n * n;
    out.ratio = out.norm_squared > 0.0 ? s / out.norm_squared : 0.0;
    out.tail_fraction = s > 0.0 ? (s - out.integral[out.integral.size() / 2]) / s : 0.0;
    return out;
}

namespace {

void require_radial3(const CauchyData& data)
{
    if (!data.grid.radial || data.grid.dimension != 3) throw ParameterError("needs radial data in dimension 3");
    if (data.f1.size() != data.grid.size() || data.f2.size() != data.grid.size())
        throw ParameterError("Cauchy data does not match its grid");
}

// Cumulative trapezoid from r = 0.
std::vector<double> cumulative(const std::vector<double>& f, double h)
{
    std::vector<double> c(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) c[i] = c[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    return c;
}

// u = v / r with the r = 0 value from the odd expansion of v.
std::vector<double> from_v(const std::vector<double>& v, double h)
{
    std::vector<double> u(v.size());
    for (std::size_t i = 1; i < v.size(); ++i) u[i] = v[i] / (i * h);
    if (v.size() > 2) u[0] = (4.0 * v[1] / h - v[2] / (2.0 * h)) / 3.0;
    return u;
}

CauchyData from_v(const Grid& g, const std::vector<double>& v0, const std::vector<double>& v1)
{
    CauchyData d = CauchyData::zeros(g);
    d.f1 = from_v(v0, g.h());
    d.f2 = from_v(v1, g.h());
    return d;
}

// Exact free radial evolution of v = r u by the odd-extended d'Alembert
// formula at t = m h, with nodes mapping onto nodes.
std::vector<double> dalembert_v(const std::vector<double>& v0, const std::vector<double>& c1, long m)
{
    const long N = static_cast<long>(v0.size());
    auto V0 = [&](long i) {
        if (i < 0) return -v0[std::min(-i, N - 1)];
        return v0[std::min(i, N - 1)];
    };
    auto C = [&](long i) { return c1[std::min(std::labs(i), N - 1)]; };
    std::vector<double> v(N);
    for (long i = 0; i < N; ++i) v[i] = 0.5 * (V0(i - m) + V0(i + m)) + 0.5 * (C(i + m) - C(i - m));
    return v;
}

struct Component {
    std::vector<double> v0, v1;
};

// Largest |u| on r < |t| + b relative to the peak of |u|, over t = m h for
// m in [0, M] with direction sign. b sits at node ib.
double defining_residual(const Component& c, double h, std::size_t ib, long M, int sign)
{
    const auto c1 = cumulative(c.v1, h);
    double peak = 0.0, worst = 0.0;
    for (long m = 0; m <= M; ++m) {
        const auto v = dalembert_v(c.v0, c1, sign * m);
        for (std::size_t i = 1; i < v.size(); ++i) {
            const double u = std::abs(v[i]) / (i * h);
            peak = std::max(peak, u);
            if (i < m + ib) worst = std::max(worst, u);
        }
    }
    return peak > 0.0 ? worst / peak : 0.0;
}

} // namespace

std::vector<double> radial_free_solution(const CauchyData& data, int m)
{
    require_radial3(data);
    const Grid& g = data.grid;
    const double h = g.h();
    std::vector<double> v0(g.size()), v1(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        v0[i] = i * h * data.f1[i];
        v1[i] = i * h * data.f2[i];
    }
    return from_v(dalembert_v(v0, cumulative(v1, h), m), h);
}

RadialLaxPhillipsSplit split_radial_lax_phillips(const CauchyData& data, double b, double horizon, double tolerance)
{
    require_radial3(data);
    if (!(b > 0.0)) throw ParameterError("b must be positive");
    if (!(horizon >= 0.0)) throw ParameterError("horizon must be nonnegative");
    const Grid& g = data.grid;
    const double h = g.h();
    const std::size_t N = g.size();
    std::vector<double> v0(N), v1(N);
    for (std::size_t i = 0; i < N; ++i) {
        v0[i] = i * h * data.f1[i];
        v1[i] = i * h * data.f2[i];
    }
    // first node at or beyond b
    const auto ib = static_cast<std::size_t>(std::ceil(b / h - 1e-9));
    // v0' with v odd about r = 0
    std::vector<double> dv0(N);
    dv0[0] = v0[1] / h;
    for (std::size_t i = 1; i + 1 < N; ++i) dv0[i] = (v0[i + 1] - v0[i - 1]) / (2.0 * h);
    dv0[N - 1] = (v0[N - 1] - v0[N - 2]) / h;

    // v = g(r - t) + k(r + t): g' = (v0' - v1)/2, k' = (v0' + v1)/2
    Component plus, minus;
    plus.v1.assign(N, 0.0);
    minus.v1.assign(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        if (i < ib) continue;
        plus.v1[i] = -0.5 * (dv0[i] - v1[i]);
        minus.v1[i] = 0.5 * (dv0[i] + v1[i]);
    }
    plus.v0 = cumulative(plus.v1, h);
    for (double& v : plus.v0) v = -v;
    minus.v0 = cumulative(minus.v1, h);

    RadialLaxPhillipsSplit out;
    out.b = b;
    out.outgoing = from_v(g, plus.v0, plus.v1);
    out.incoming = from_v(g, minus.v0, minus.v1);
    out.remainder = CauchyData::zeros(g);
    double scale_in = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        out.remainder.f1[i] = data.f1[i] - out.outgoing.f1[i] - out.incoming.f1[i];
        out.remainder.f2[i] = data.f2[i] - out.outgoing.f2[i] - out.incoming.f2[i];
        const double r1 = std::abs(out.remainder.f1[i] + out.outgoing.f1[i] + out.incoming.f1[i] - data.f1[i]);
        const double r2 = std::abs(out.remainder.f2[i] + out.outgoing.f2[i] + out.incoming.f2[i] - data.f2[i]);
        out.reconstruction_residual = std::max({out.reconstruction_residual, r1, r2});
        scale_in = std::max({scale_in, std::abs(data.f1[i]), std::abs(data.f2[i])});
    }
    if (scale_in > 0.0) out.reconstruction_residual /= scale_in;
    for (auto* c : {&out.outgoing, &out.incoming, &out.remainder}) c->time = data.time;

    const long M = static_cast<long>(std::floor(horizon / h + 1e-9));
    out.outgoing_residual = defining_residual(plus, h, ib, M, +1);
    out.incoming_residual = defining_residual(minus, h, ib, M, -1);
    if (out.outgoing_residual > tolerance || out.incoming_residual > tolerance) {
        throw ValidationError("Lax-Phillips split rejected: defining-property residuals " +
                              std::to_string(out.outgoing_residual) + " (outgoing), " +
                              std::to_string(out.incoming_residual) + " (incoming)");
    }
    return out;
}

} // namespace wavelab
