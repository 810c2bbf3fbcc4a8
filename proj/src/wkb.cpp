#include "wavelab/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "wavelab/errors.hpp"
#include "wavelab/parallel.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;
// stack storage up to n = 7 keeps the ray right-hand side allocation free
constexpr int max_dim = 7;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, max_dim, max_dim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, max_dim, 1>;

double norm(std::span<const double> v)
{
    double s = 0.0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

struct LocalMetric {
    double a, a_t, c;
    Vec g;
    Mat H;
};

LocalMetric local_metric(const Metric& metric, double t, const Vec& x)
{
    const std::size_t n = x.size();
    const double r = x.norm();
    const RadialJet j = metric.radial(t, r);
    LocalMetric m{j.a, j.a_t, std::sqrt(j.a), Vec::Zero(n), Mat::Zero(n, n)};
    if (r > 0.0) {
        const Vec e = x / r;
        m.g = j.a_r * e;
        m.H = j.a_rr * e * e.transpose() + (j.a_r / r) * (Mat::Identity(n, n) - e * e.transpose());
    } else {
        m.H = j.a_rr * Mat::Identity(n, n);
    }
    return m;
}

// Phase quantities for unit |eta|; everything scales by |eta|.
struct PhaseLocal {
    double phi_t;
    double p_phi;
    Mat hessian;
};

PhaseLocal phase_local(const LocalMetric& m, int s, const Vec& xi, const Mat& Jx, const Mat& Jxi)
{
    const std::size_t n = xi.size();
    const double K = xi.norm();
    const Vec nu = xi / K;
    Mat H = Jxi * Jx.inverse();
    H = 0.5 * (H + H.transpose());
    PhaseLocal out;
    out.phi_t = -s * m.c * K;
    const Vec grad_t = -s * (K * m.g / (2.0 * m.c) + m.c * H * nu);
    const double phi_tt = -s * (m.a_t * K / (2.0 * m.c) + m.c * nu.dot(grad_t));
    out.p_phi = phi_tt - m.g.dot(xi) - m.a * H.trace();
    out.hessian = H;
    (void)n;
    return out;
}

// Raised from inside the flow once det dx/dseed drops below the cutoff: the
// transport coefficient is singular at the caustic and the adaptive stepper
// would otherwise stall there.
struct JacobianCollapse {
    double det;
};

// State: x (n), xi (n), Jx (n*n, col-major), Jxi (n*n), b (1).
struct Flow {
    const Metric& metric;
    std::size_t n;
    double t0;
    double dir;
    int s;
    double cutoff;

    void operator()(const State& y, State& dy, double e) const
    {
        const double t = t0 + dir * e;
        const Eigen::Map<const Vec> x(y.data(), n), xi(y.data() + n, n);
        const Eigen::Map<const Mat> Jx(y.data() + 2 * n, n, n), Jxi(y.data() + 2 * n + n * n, n, n);
        const double J = Jx.determinant();
        if (!(J > cutoff)) throw JacobianCollapse{J};
        const LocalMetric m = local_metric(metric, t, x);
        const double K = xi.norm();
        const Vec nu = xi / K;
        const Mat I = Mat::Identity(n, n);

        Eigen::Map<Vec> dx(dy.data(), n), dxi(dy.data() + n, n);
        Eigen::Map<Mat> dJx(dy.data() + 2 * n, n, n), dJxi(dy.data() + 2 * n + n * n, n, n);
        dx = s * m.c * nu;
        dxi = -s * K * m.g / (2.0 * m.c);
        const Mat Axx = s * nu * m.g.transpose() / (2.0 * m.c);
        const Mat Axk = s * m.c * (I - nu * nu.transpose()) / K;
        const Mat Akx = -s * K * (m.H / (2.0 * m.c) - m.g * m.g.transpose() / (4.0 * m.c * m.c * m.c));
        const Mat Akk = -s * m.g * nu.transpose() / (2.0 * m.c);
        dJx = Axx * Jx + Axk * Jxi;
        dJxi = Akx * Jx + Akk * Jxi;
        const PhaseLocal p = phase_local(m, s, xi, Jx, Jxi);
        dy[2 * n + 2 * n * n] = -p.p_phi * y[2 * n + 2 * n * n] / (2.0 * p.phi_t);
        dx *= dir;
        dxi *= dir;
        dJx *= dir;
        dJxi *= dir;
        dy[2 * n + 2 * n * n] *= dir;
    }
};

State initial_state(std::span<const double> seed, const Vec& eta_hat)
{
    const std::size_t n = seed.size();
    State y(2 * n + 2 * n * n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = seed[i];
        y[n + i] = eta_hat[i];
        y[2 * n + i * n + i] = 1.0;
    }
    y[2 * n + 2 * n * n] = 1.0;
    return y;
}

Vec unit(std::span<const double> eta)
{
    const double k = norm(eta);
    if (!(k > 0.0)) throw DegenerateRayError("direction must be nonzero");
    Vec e(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) e[i] = eta[i] / k;
    return e;
}

// Cumulative integral of f on a uniform grid: Simpson on even nodes, a
// quadratic through (j-1, j, j+1) for odd ones.
std::vector<double> cumulative_simpson(const std::vector<double>& f, double h)
{
    std::vector<double> I(f.size(), 0.0);
    for (std::size_t j = 2; j < f.size(); j += 2) I[j] = I[j - 2] + h / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
    for (std::size_t j = 1; j < f.size(); j += 2) {
        if (j + 1 < f.size()) {
            I[j] = I[j - 1] + h / 12.0 * (5.0 * f[j - 1] + 8.0 * f[j] - f[j + 1]);
        } else {
            I[j] = I[j - 1] + h / 12.0 * (-f[j - 2] + 8.0 * f[j - 1] + 5.0 * f[j]);
        }
    }
    return I;
}

double det(const Mat& J) { return J.determinant(); }

} // namespace

PhaseField::PhaseField(Metric metric, double t0, double window, WkbOptions options)
    : metric_(std::move(metric)), t0_(t0), window_(window), options_(options)
{
}

WkbRay PhaseField::trace(int branch, std::span<const double> seed, std::span<const double> eta, double t_end) const
{
    if (branch != 1 && branch != -1) throw ParameterError("branch must be +1 or -1");
    if (seed.size() != eta.size()) throw ParameterError("seed and direction dimensions differ");
    if (seed.size() > static_cast<std::size_t>(max_dim)) throw ParameterError("dimension above 7");
    if (options_.report_points < 2 || options_.report_points % 2) throw ParameterError("report_points must be even");
    const std::size_t n = seed.size();
    const double K = norm(eta);
    const Vec eta_hat = unit(eta);
    const double span = t_end - t0_;
    const double dir = span >= 0.0 ? 1.0 : -1.0;
    const int M = options_.report_points;

    WkbRay ray;
    ray.branch = branch;
    ray.seed.assign(seed.begin(), seed.end());
    ray.eta.assign(eta.begin(), eta.end());
    std::vector<double> rate;
    auto record = [&](const State& y, double e) {
        const double t = t0_ + dir * e;
        const Eigen::Map<const Vec> x(y.data(), n), xi(y.data() + n, n);
        const Eigen::Map<const Mat> Jx(y.data() + 2 * n, n, n), Jxi(y.data() + 2 * n + n * n, n, n);
        const LocalMetric m = local_metric(metric_, t, x);
        const PhaseLocal p = phase_local(m, branch, xi, Jx, Jxi);
        ray.t.push_back(t);
        ray.x.emplace_back(x.data(), x.data() + n);
        std::vector<double> k(n);
        for (std::size_t i = 0; i < n; ++i) k[i] = K * xi[i];
        ray.xi.push_back(std::move(k));
        ray.tau.push_back(K * p.phi_t);
        ray.jacobian.push_back(det(Jx));
        ray.p_phi.push_back(K * p.p_phi);
        ray.transport_ode.push_back(y[2 * n + 2 * n * n]);
        rate.push_back(p.p_phi / (2.0 * p.phi_t));
    };

    State y = initial_state(seed, eta_hat);
    record(y, 0.0);
    const Flow flow{metric_, n, t0_, dir, branch, 0.5 * options_.jacobian_floor};
    const double h = std::fabs(span) / M;
    for (int j = 1; j <= M && h > 0.0; ++j) {
        auto stepper = odeint::make_controlled(options_.ray_tol * 1e-2, options_.ray_tol,
                                               odeint::runge_kutta_dopri5<State>());
        try {
            odeint::integrate_adaptive(stepper, flow, y, (j - 1) * h, j * h, h / 4.0);
        } catch (const JacobianCollapse& c) {
            ray.truncated = true;
            ray.collapse_jacobian = c.det;
            break;
        }
        record(y, j * h);
    }
    if (h > 0.0) {
        const auto I = cumulative_simpson(rate, dir * h);
        for (double v : I) ray.transport_exp.push_back(std::exp(-v));
    } else {
        ray.transport_exp.assign(ray.t.size(), 1.0);
    }
    return ray;
}

PhaseSample PhaseField::evaluate(int branch, double t, std::span<const double> x, std::span<const double> eta) const
{
    if (branch != 1 && branch != -1) throw ParameterError("branch must be +1 or -1");
    const std::size_t n = x.size();
    if (eta.size() != n) throw ParameterError("point and direction dimensions differ");
    if (n > static_cast<std::size_t>(max_dim)) throw ParameterError("dimension above 7");
    const double K = norm(eta);
    const Vec eta_hat = unit(eta);
    const Eigen::Map<const Vec> target(x.data(), n);
    const double span = t - t0_;
    const double dir = span >= 0.0 ? 1.0 : -1.0;
    const Flow flow{metric_, n, t0_, dir, branch, 0.5 * options_.jacobian_floor};

    // flat-speed guess for the foot point
    Vec y0 = target;
    if (span != 0.0) {
        const double c = std::sqrt(metric_.evaluate(t0_, x));
        y0 = target - span * branch * c * eta_hat;
    }
    State y;
    bool converged = false;
    for (int it = 0; it < options_.newton_iters; ++it) {
        std::vector<double> seed(y0.data(), y0.data() + n);
        y = initial_state(seed, eta_hat);
        if (span != 0.0) {
            auto stepper = odeint::make_controlled(options_.ray_tol * 1e-2, options_.ray_tol,
                                                   odeint::runge_kutta_dopri5<State>());
            try {
                odeint::integrate_adaptive(stepper, flow, y, 0.0, std::fabs(span), std::fabs(span) / 8.0);
            } catch (const JacobianCollapse&) {
                throw CausticError("ray through the point crosses a caustic", window_);
            }
        }
        const Eigen::Map<const Vec> X(y.data(), n);
        const Eigen::Map<const Mat> Jx(y.data() + 2 * n, n, n);
        const Vec F = X - target;
        if (F.norm() <= options_.newton_tol * (1.0 + target.norm())) {
            converged = true;
            break;
        }
        y0 -= Jx.partialPivLu().solve(F);
    }
    if (!converged) throw CausticError("ray map inversion did not converge", window_);

    const Eigen::Map<const Vec> xi(y.data() + n, n);
    const Eigen::Map<const Mat> Jx(y.data() + 2 * n, n, n), Jxi(y.data() + 2 * n + n * n, n, n);
    const LocalMetric m = local_metric(metric_, t, target);
    const PhaseLocal p = phase_local(m, branch, xi, Jx, Jxi);
    PhaseSample out;
    out.seed.assign(y0.data(), y0.data() + n);
    out.phi = K * y0.dot(eta_hat);
    out.phi_t = K * p.phi_t;
    out.grad.resize(n);
    out.hessian.resize(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        out.grad[i] = K * xi[i];
        for (std::size_t k = 0; k < n; ++k) out.hessian[i * n + k] = K * p.hessian(i, k);
    }
    out.jacobian = det(Jx);
    out.p_phi = K * p.p_phi;
    out.transport = y[2 * n + 2 * n * n];
    return out;
}

EikonalSolution solve_eikonal(const Metric& metric, double t0, const std::vector<std::vector<double>>& directions,
                              const std::vector<std::vector<double>>& seeds, double window, const WkbOptions& options)
{
    if (directions.empty() || seeds.empty()) throw ParameterError("need at least one direction and one seed");
    double w = window > 0.0 ? window : 0.1 * metric.support_radius() / std::sqrt(metric.upper_bound());
    double valid = 0.0;
    for (int attempt = 0; attempt <= options.max_halvings; ++attempt, w *= 0.5) {
        PhaseField phase(metric, t0, w, options);
        RayBundle bundle;
        bundle.t0 = t0;
        bundle.window = w;
        bundle.directions = directions;
        bundle.seeds = seeds;
        bundle.rays.resize(seeds.size() * directions.size() * 2);
        parallel_for(bundle.rays.size(), [&](std::size_t k) {
            const std::size_t s = k / (2 * directions.size());
            const std::size_t d = (k / 2) % directions.size();
            bundle.rays[k] = phase.trace(wkb_branches[k % 2], seeds[s], directions[d], t0 + w);
        });
        double jmin = std::numeric_limits<double>::infinity();
        for (const auto& ray : bundle.rays) {
            for (double J : ray.jacobian) jmin = std::min(jmin, J);
            if (ray.truncated) jmin = std::min(jmin, ray.collapse_jacobian);
        }
        bundle.min_jacobian = jmin;
        if (jmin < options.jacobian_floor) continue;
        valid = w;

        // a posteriori residuals with difference derivatives at interior samples
        // (quarter, half and three-quarter window)
        const double dh = 1e-4 * std::max(1.0, w);
        std::vector<double> eik(bundle.rays.size(), 0.0), hj(bundle.rays.size(), 0.0);
        parallel_for(bundle.rays.size(), [&](std::size_t k) {
            const WkbRay& ray = bundle.rays[k];
            const std::size_t n = ray.seed.size();
            const std::size_t M = ray.t.size() - 1;
            for (std::size_t j : {M / 4, M / 2, 3 * M / 4}) {
                if (j == 0 || j == M) continue;
                const double t = ray.t[j];
                std::vector<double> x = ray.x[j];
                const double pt = (phase.evaluate(ray.branch, t + dh, x, ray.eta).phi -
                                   phase.evaluate(ray.branch, t - dh, x, ray.eta).phi) /
                                  (2.0 * dh);
                std::vector<double> grad(n);
                for (std::size_t i = 0; i < n; ++i) {
                    x[i] += dh;
                    const double fp = phase.evaluate(ray.branch, t, x, ray.eta).phi;
                    x[i] -= 2.0 * dh;
                    const double fm = phase.evaluate(ray.branch, t, x, ray.eta).phi;
                    x[i] += dh;
                    grad[i] = (fp - fm) / (2.0 * dh);
                }
                const double c = std::sqrt(metric.evaluate(t, x));
                const double scale = norm(ray.eta);
                eik[k] = std::max(eik[k], std::fabs(pt + ray.branch * c * norm(grad)) / scale);
                double d2 = 0.0;
                for (std::size_t i = 0; i < n; ++i) d2 += (grad[i] - ray.xi[j][i]) * (grad[i] - ray.xi[j][i]);
                hj[k] = std::max(hj[k], std::sqrt(d2) / scale);
            }
        });
        phase.eikonal_residual_max = *std::max_element(eik.begin(), eik.end());
        phase.hamilton_jacobi_residual_max = *std::max_element(hj.begin(), hj.end());
        if (phase.eikonal_residual_max > 1e-6 || phase.hamilton_jacobi_residual_max > 1e-6) {
            std::ostringstream msg;
            msg << "eikonal residual " << phase.eikonal_residual_max << ", Hamilton-Jacobi residual "
                << phase.hamilton_jacobi_residual_max << " exceed 1e-6";
            throw ResolutionError(msg.str());
        }
        return {std::move(phase), std::move(bundle)};
    }
    std::ostringstream msg;
    msg << "ray map degenerates within every window down to " << 2.0 * w;
    throw CausticError(msg.str(), valid);
}

SplitValue initial_amplitude_split(double S, double phi_t_plus, double phi_t_minus)
{
    const double d = phi_t_minus - phi_t_plus;
    if (!(std::fabs(d) > 0.0)) throw StabilityError("degenerate amplitude split");
    // b+ + b- = S, phi_t+ b+ + phi_t- b- = 0
    return {S * phi_t_minus / d, -S * phi_t_plus / d};
}

double AmplitudeField::b0(const PhaseField& phase, int branch, double t, std::span<const double> x,
                          std::span<const double> eta) const
{
    return b0(phase, phase.evaluate(branch, t, x, eta), branch, eta);
}

double AmplitudeField::b0(const PhaseField& phase, const PhaseSample& s, int branch,
                          std::span<const double> eta) const
{
    const double c = std::sqrt(phase.metric().evaluate(phase.t0(), s.seed));
    const double K = norm(eta);
    const SplitValue split = initial_amplitude_split(envelope(s.seed), -c * K, c * K);
    return (branch == 1 ? split.plus : split.minus) * s.transport;
}

double AmplitudeField::b1(const PhaseField& phase, int branch, double t, std::span<const double> x,
                          std::span<const double> eta) const
{
    const std::size_t n = x.size();
    const Metric& metric = phase.metric();
    const double t0 = phase.t0();
    const double dh = 1e-3;
    auto B0 = [&](int b, double tt, const std::vector<double>& p) { return this->b0(phase, b, tt, p, eta); };

    // P(b0) = b0_tt - div(a grad b0) by centred differences
    auto P_b0 = [&](double tt, const std::vector<double>& p) {
        const double centre = B0(branch, tt, p);
        double val = (B0(branch, tt + dh, p) - 2.0 * centre + B0(branch, tt - dh, p)) / (dh * dh);
        std::vector<double> q = p;
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = p[i] + 0.5 * dh;
            const double ap = metric.evaluate(tt, q);
            q[i] = p[i] - 0.5 * dh;
            const double am = metric.evaluate(tt, q);
            q[i] = p[i] + dh;
            const double fp = B0(branch, tt, q);
            q[i] = p[i] - dh;
            const double fm = B0(branch, tt, q);
            q[i] = p[i];
            val -= (ap * (fp - centre) - am * (centre - fm)) / (dh * dh);
        }
        return val;
    };

    const PhaseSample s = phase.evaluate(branch, t, x, eta);
    // initial data: b1+ + b1- = 0, phi_t+ b1+ + phi_t- b1- = -(d_t b0+ + d_t b0-)
    double D = 0.0;
    for (int b : wkb_branches) D += (B0(b, t0 + dh, s.seed) - B0(b, t0 - dh, s.seed)) / (2.0 * dh);
    const double c0 = std::sqrt(metric.evaluate(t0, s.seed));
    const double K = norm(eta);
    const double init = branch * D / (2.0 * c0 * K);
    if (t == t0) return init;

    // b1(t) = G(t) [b1(t0) - int P(b0) / (2 tau G)]
    WkbOptions o = phase.options();
    o.report_points = 8;
    const PhaseField coarse(metric, t0, phase.window(), o);
    const WkbRay ray = coarse.trace(branch, s.seed, eta, t);
    std::vector<double> f(ray.t.size());
    for (std::size_t j = 0; j < ray.t.size(); ++j)
        f[j] = P_b0(ray.t[j], ray.x[j]) / (2.0 * ray.tau[j] * ray.transport_ode[j]);
    const double h = (t - t0) / (ray.t.size() - 1);
    const auto I = cumulative_simpson(f, h);
    return ray.transport_ode.back() * (init - I.back());
}

std::complex<double> AmplitudeField::evaluate(const PhaseField& phase, int branch, double t,
                                              std::span<const double> x, std::span<const double> eta,
                                              double lambda) const
{
    std::complex<double> b = b0(phase, branch, t, x, eta);
    if (order >= 1) b += b1(phase, branch, t, x, eta) / std::complex<double>(0.0, lambda);
    return b;
}

AmplitudeField solve_transport(const PhaseField& phase, const RayBundle& bundle, Envelope envelope, int order)
{
    if (order < 0 || order > 1) throw ParameterError("transport orders 0 and 1 are implemented");
    if (!envelope) throw ParameterError("missing envelope");
    AmplitudeField amp;
    amp.envelope = std::move(envelope);
    amp.order = order;
    for (const auto& ray : bundle.rays)
        for (std::size_t j = 0; j < ray.t.size(); ++j)
            amp.transport_agreement =
                std::max(amp.transport_agreement, std::fabs(ray.transport_ode[j] - ray.transport_exp[j]));
    (void)phase;
    return amp;
}

std::vector<std::complex<double>> wkb_approximant(const PhaseField& phase, const AmplitudeField& amp, double lambda,
                                                  std::span<const double> eta, double t,
                                                  const std::vector<std::vector<double>>& points)
{
    std::vector<std::complex<double>> out(points.size());
    parallel_for(points.size(), [&](std::size_t i) {
        std::complex<double> u = 0.0;
        for (int b : wkb_branches) {
            const PhaseSample s = phase.evaluate(b, t, points[i], eta);
            u += amp.evaluate(phase, b, t, points[i], eta, lambda) *
                 std::exp(std::complex<double>(0.0, lambda * s.phi));
        }
        out[i] = u;
    });
    return out;
}

WkbComparison compare_wkb_fdtd(const Metric& metric, const std::vector<double>& lambdas, double window,
                               const WkbCompareOptions& options)
{
    if (lambdas.empty()) throw ParameterError("need at least one frequency");
    const int n = static_cast<int>(options.eta.size());
    if (static_cast<int>(options.centre.size()) != n) throw ParameterError("centre and direction dimensions differ");
    if (options.stride < 1) throw ParameterError("stride must be positive");
    const Grid g = Grid::cartesian(n, options.extent, options.points);
    const double k_eta = norm(options.eta);
    const double k_max = 0.5 * std::acos(-1.0) / g.h();
    for (double lambda : lambdas)
        if (!(lambda > 0.0) || lambda * k_eta > k_max)
            throw ResolutionError("frequency " + std::to_string(lambda) + " not resolved: need lambda |eta| <= " +
                                  std::to_string(k_max));

    const auto centre = options.centre;
    const double width = options.width;
    Envelope S = [centre, width](std::span<const double> x) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - centre[i]) * (x[i] - centre[i]);
        return std::exp(-d2 / (2.0 * width * width));
    };

    // caustic detection on a seed lattice around the envelope
    std::vector<std::vector<double>> seeds;
    const int m = 2;
    std::vector<int> idx(n, -m);
    while (true) {
        std::vector<double> p(n);
        for (int i = 0; i < n; ++i) p[i] = centre[i] + 1.5 * idx[i] * width;
        seeds.push_back(std::move(p));
        int d = 0;
        while (d < n && ++idx[d] > m) idx[d++] = -m;
        if (d == n) break;
    }
    EikonalSolution eik = solve_eikonal(metric, options.t0, {options.eta}, seeds, window, options.wkb);
    const AmplitudeField amp = solve_transport(eik.phase, eik.bundle, S, 0);
    const double w = eik.phase.window();
    // several times across the window: f2 = 0 data give a sin(lambda t)
    // factor in the error, which a single end time can hit near a node
    std::vector<double> times;
    for (int q = 1; q <= options.time_samples; ++q) times.push_back(options.t0 + w * q / options.time_samples);

    std::vector<std::size_t> sub;
    std::vector<std::vector<double>> points;
    for (std::size_t i = 0; i < g.size(); ++i) {
        bool keep = true;
        std::size_t rest = i;
        for (int d = 0; d < n; ++d) {
            keep = keep && (rest % g.points) % options.stride == 0;
            rest /= g.points;
        }
        if (!keep) continue;
        sub.push_back(i);
        points.push_back(g.point(i));
    }
    double datum_norm = 0.0;
    for (const auto& p : points) datum_norm += S(p) * S(p);

    // phase and leading amplitude do not depend on lambda
    const std::size_t P = points.size();
    std::vector<double> phi(times.size() * 2 * P), b0(times.size() * 2 * P);
    bool caustic = false;
    try {
        for (std::size_t q = 0; q < times.size(); ++q) {
            parallel_for(P, [&](std::size_t k) {
                for (int j = 0; j < 2; ++j) {
                    const int b = wkb_branches[j];
                    const PhaseSample sample = eik.phase.evaluate(b, times[q], points[k], options.eta);
                    phi[(q * P + k) * 2 + j] = sample.phi;
                    b0[(q * P + k) * 2 + j] = amp.b0(eik.phase, sample, b, options.eta);
                }
            });
        }
    } catch (const CausticError&) {
        caustic = true;
    }

    WkbComparison cmp;
    cmp.window = w;
    for (double lambda : lambdas) {
        WkbCompareRow row;
        row.lambda = lambda;
        row.window = w;
        ComplexField state{g, std::vector<std::complex<double>>(g.size()),
                           std::vector<std::complex<double>>(g.size(), 0.0), options.t0};
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto x = g.point(i);
            double phase = 0.0;
            for (int d = 0; d < n; ++d) phase += x[d] * options.eta[d];
            state.u[i] = S(x) * std::exp(std::complex<double>(0.0, lambda * phase));
        }
        row.caustic = caustic;
        row.error = caustic ? std::numeric_limits<double>::quiet_NaN() : 0.0;
        for (std::size_t q = 0; q < times.size(); ++q) {
            state = spectral_evolve(metric, state, times[q]);
            if (caustic) continue;
            double num = 0.0;
            for (std::size_t k = 0; k < P; ++k) {
                std::complex<double> u = 0.0;
                for (int j = 0; j < 2; ++j) {
                    const std::size_t at = (q * P + k) * 2 + j;
                    u += b0[at] * std::exp(std::complex<double>(0.0, lambda * phi[at]));
                }
                num += std::norm(u - state.u[sub[k]]);
            }
            row.error = std::max(row.error, datum_norm > 0.0 ? std::sqrt(num / datum_norm) : 0.0);
        }
        row.at_floor = !row.caustic && row.error <= options.floor;
        cmp.rows.push_back(row);
    }
    const WkbCompareRow* prev = nullptr;
    for (const auto& row : cmp.rows) {
        if (row.caustic) continue;
        if (prev && row.error > prev->error && !(row.at_floor && prev->at_floor)) cmp.monotone = false;
        prev = &row;
    }
    return cmp;
}

std::string wkb_comparison_csv(const WkbComparison& cmp)
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "lambda,error,window,caustic,at_floor\n";
    for (const auto& r : cmp.rows)
        out << r.lambda << ',' << r.error << ',' << r.window << ',' << (r.caustic ? 1 : 0) << ','
            << (r.at_floor ? 1 : 0) << '\n';
    return out.str();
}

} // namespace wavelab
