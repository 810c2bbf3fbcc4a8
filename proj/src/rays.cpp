#include "wavelab/rays.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>
#include <boost/numeric/odeint.hpp>
#include "json.hpp"

#include "wavelab/errors.hpp"
#include "wavelab/parallel.hpp"

namespace wavelab {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::vector<double>;

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// State layout: x (n), xi (n), tau_aux (1). Elapsed time e runs forward;
// physical time is t0 + dir * e.
struct Flow {
    const Metric& metric;
    std::size_t n;
    double t0;
    double dir;
    double branch;

    void operator()(const State& y, State& dy, double e) const
    {
        const double t = t0 + dir * e;
        double r2 = 0.0, k2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            r2 += y[i] * y[i];
            k2 += y[n + i] * y[n + i];
        }
        const double r = std::sqrt(r2);
        const double k = std::sqrt(k2);
        const RadialJet j = metric.radial(t, r);
        const double c = std::sqrt(j.a);
        const double ar_over_r = r > 0.0 ? j.a_r / r : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dy[i] = dir * (-branch * c * y[n + i] / k);
            dy[n + i] = dir * (branch * k * ar_over_r * y[i] / (2.0 * c));
        }
        dy[2 * n] = dir * (j.a_t * k2 / (2.0 * y[2 * n]));
    }
};

double radius(const State& y, std::size_t n)
{
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += y[i] * y[i];
    return std::sqrt(s);
}

} // namespace

PhasePoint on_shell_point(const Metric& metric, double t, std::vector<double> x, std::vector<double> xi,
                          int branch)
{
    if (x.size() != xi.size()) throw ParameterError("x and xi must have the same dimension");
    PhasePoint p;
    p.t = t;
    p.tau = (branch >= 0 ? 1.0 : -1.0) * std::sqrt(metric.evaluate(t, x) * dot(xi, xi));
    p.x = std::move(x);
    p.xi = std::move(xi);
    return p;
}

void validate_phase_point(const Metric& metric, const PhasePoint& p, double tol)
{
    const double k2 = dot(p.xi, p.xi);
    if (!(k2 > 0.0)) throw DegenerateRayError("xi must be nonzero");
    if (p.x.size() != p.xi.size()) throw ParameterError("x and xi must have the same dimension");
    const double res = std::fabs(p.tau * p.tau - metric.evaluate(p.t, p.x) * k2);
    if (res > tol * k2 * metric.upper_bound()) throw DegenerateRayError("phase point is off-shell");
}

RayTrajectory integrate_ray(const Metric& metric, const PhasePoint& p0, double t_final, double tol,
                            const RayOptions& options)
{
    validate_phase_point(metric, p0, 1e-8);
    const std::size_t n = p0.x.size();
    const double span = std::fabs(t_final - p0.t);
    const double dir = t_final >= p0.t ? 1.0 : -1.0;
    const double report = options.report_dt > 0.0 ? options.report_dt : metric.period() / 256.0;
    const double branch = p0.tau >= 0.0 ? 1.0 : -1.0;

    RayTrajectory out;
    out.branch = static_cast<int>(branch);

    State y(2 * n + 1);
    std::copy(p0.x.begin(), p0.x.end(), y.begin());
    std::copy(p0.xi.begin(), p0.xi.end(), y.begin() + n);
    y[2 * n] = p0.tau;

    const Flow flow{metric, n, p0.t, dir, branch};
    const double k0 = std::sqrt(dot(p0.xi, p0.xi));
    // Cap the step so a long free-flight step cannot jump across the bump.
    const double max_dt =
        0.05 * std::min(metric.support_radius() / std::sqrt(metric.upper_bound()), metric.period());
    auto stepper = odeint::make_dense_output(tol * 1e-2 * std::max(1.0, k0), tol, max_dt,
                                             odeint::runge_kutta_dopri5<State>());

    auto record = [&](double e, const State& s) {
        PhasePoint p;
        p.t = p0.t + dir * e;
        p.x.assign(s.begin(), s.begin() + n);
        p.xi.assign(s.begin() + n, s.begin() + 2 * n);
        const double a = metric.evaluate(p.t, p.x);
        const double k2 = dot(p.xi, p.xi);
        p.tau = branch * std::sqrt(a * k2);
        const double res = std::fabs(s[2 * n] * s[2 * n] - a * k2);
        out.hamiltonian_residual_max = std::max(out.hamiltonian_residual_max, res);
        out.residuals.push_back(res);
        out.samples.push_back(std::move(p));
    };

    record(0.0, y);
    if (span == 0.0) return out;

    const double R = options.escape_radius;
    bool tracking = R > 0.0;
    if (tracking && radius(y, n) > R) {
        out.escape_time = p0.t;
        tracking = false;
        if (options.stop_at_escape) return out;
    }

    stepper.initialize(y, 0.0, std::min(report, 1e-2));
    long k = 1;
    long steps = 0;
    State tmp(y.size());
    bool stop = false;
    while (!stop && stepper.current_time() < span) {
        if (++steps > options.max_steps) throw StiffnessError("ray integration exceeded the step budget");
        const auto [e0, e1] = stepper.do_step(flow);
        if (!(e1 - e0 > 1e-13 * std::max(1.0, e1))) throw StiffnessError("ray step size underflow");
        for (double v : stepper.current_state())
            if (!std::isfinite(v)) throw StiffnessError("ray state became non-finite");

        double e_stop = std::min(e1, span);
        if (tracking && radius(stepper.current_state(), n) > R) {
            // bisect the dense output for the first crossing
            double lo = e0, hi = e1;
            for (int it = 0; it < 60 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                stepper.calc_state(mid, tmp);
                (radius(tmp, n) > R ? hi : lo) = mid;
            }
            if (hi <= span) {
                out.escape_time = p0.t + dir * hi;
                tracking = false;
                if (options.stop_at_escape) {
                    e_stop = hi;
                    stop = true;
                }
            }
        }
        while (k * report <= e_stop * (1.0 + 1e-14)) {
            const double e = std::min(k * report, e_stop);
            stepper.calc_state(e, tmp);
            record(e, tmp);
            ++k;
        }
        if (stop && out.samples.back().t != p0.t + dir * e_stop) {
            stepper.calc_state(e_stop, tmp);
            record(e_stop, tmp);
        }
    }
    // make sure t_final itself is present
    if (!stop && std::fabs(out.samples.back().t - t_final) > 1e-12 * std::max(1.0, span)) {
        stepper.calc_state(span, tmp);
        record(span, tmp);
    }
    return out;
}

double xi_identity_residual(const Metric& metric, const RayTrajectory& traj)
{
    const auto& s = traj.samples;
    if (s.empty()) return 0.0;
    const std::size_t m = s.size();
    std::vector<double> g(m), t(m), a(m), k2(m);
    for (std::size_t i = 0; i < m; ++i) {
        t[i] = s[i].t;
        a[i] = metric.evaluate(s[i].t, s[i].x);
        g[i] = metric.d_t(s[i].t, s[i].x) / a[i];
        k2[i] = dot(s[i].xi, s[i].xi);
    }
    // Cumulative Simpson on pairs of intervals; an odd tail interval uses
    // the 3/8 rule over the last three (or the trapezoid when only one).
    std::vector<double> I(m, 0.0);
    auto simpson = [&](std::size_t i) {
        return (t[i + 2] - t[i]) / 6.0 * (g[i] + 4.0 * g[i + 1] + g[i + 2]);
    };
    std::vector<double> even(m, 0.0);
    for (std::size_t i = 2; i < m; i += 2) even[i] = even[i - 2] + simpson(i - 2);
    for (std::size_t i = 1; i < m; ++i) {
        if (i % 2 == 0) {
            I[i] = even[i];
        } else if (i == 1) {
            I[i] = 0.5 * (t[1] - t[0]) * (g[0] + g[1]);
        } else {
            const double h = (t[i] - t[i - 3]) / 3.0;
            I[i] = even[i - 3] + 3.0 * h / 8.0 * (g[i - 3] + 3.0 * g[i - 2] + 3.0 * g[i - 1] + g[i]);
        }
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double pred = k2[0] * a[0] / a[i] * std::exp(I[i]);
        worst = std::max(worst, std::fabs(k2[i] - pred) / pred);
    }
    return worst;
}

double estimate_rate_bound(const Metric& metric, const SampleGrid& sample)
{
    if (metric.time_independent()) return 0.0;
    // The metric is radial, so the lattice reduces to its radii; use a dense
    // radial grid on [0, rho] with the same t sampling, then a 4x finer t pass.
    const int nr = std::max(2 * sample.x_points, 256);
    const int nt = std::max(4 * sample.t_points, 256);
    const double rho = metric.support_radius();
    double D = 0.0;
    for (int it = 0; it < nt; ++it) {
        const double t = metric.period() * it / nt;
        for (int ir = 0; ir <= nr; ++ir) {
            const RadialJet j = metric.radial(t, rho * ir / nr);
            D = std::max(D, std::fabs(j.a_t) / j.a);
        }
    }
    return D;
}

bool xi_lower_bound_check(const Metric& metric, const RayTrajectory& traj, double D)
{
    if (traj.samples.empty()) return true;
    const auto& s0 = traj.samples.front();
    const double k0 = dot(s0.xi, s0.xi);
    const double ratio = metric.lower_bound() / metric.upper_bound();
    for (const auto& p : traj.samples) {
        const double bound = k0 * ratio * std::exp(-D * std::fabs(p.t - s0.t));
        if (dot(p.xi, p.xi) < bound * (1.0 - 1e-9)) return false;
    }
    return true;
}

bool xi_lower_bound_check(const Metric& metric, const RayTrajectory& traj)
{
    return xi_lower_bound_check(metric, traj, estimate_rate_bound(metric, SampleGrid{}));
}

std::vector<std::vector<double>> sphere_points(int count, int dimension)
{
    std::vector<std::vector<double>> pts;
    if (count <= 0) return pts;
    if (dimension == 2) {
        for (int i = 0; i < count; ++i) {
            const double ang = 2.0 * std::numbers::pi * (i + 0.5) / count;
            pts.push_back({std::cos(ang), std::sin(ang)});
        }
        return pts;
    }
    if (dimension == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - (2.0 * i + 1.0) / count;
            const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
            pts.push_back({rr * std::cos(golden * i), rr * std::sin(golden * i), z});
        }
        return pts;
    }
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47};
    if (dimension > 15) throw ParameterError("sphere sampling supports n <= 15");
    for (int i = 0; i < count; ++i) {
        std::vector<double> p(dimension);
        double nrm = 0.0;
        for (int d = 0; d < dimension; ++d) {
            double f = 1.0, h = 0.0;
            for (int k = i + 1; k > 0; k /= primes[d]) {
                f /= primes[d];
                h += f * (k % primes[d]);
            }
            p[d] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * h - 1.0);
            nrm += p[d] * p[d];
        }
        nrm = std::sqrt(nrm);
        for (double& v : p) v /= nrm;
        pts.push_back(std::move(p));
    }
    return pts;
}

NonTrappingCertificate certify_nontrapping(const Metric& metric, double R, const CertifySampling& s,
                                           double horizon)
{
    const double rho = metric.support_radius();
    if (!(R > rho)) throw ParameterError("certification radius must exceed rho");
    if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
    const int n = s.dimension;
    const auto dirs = sphere_points(s.directions, n);
    const auto axes = sphere_points(s.shells, n);
    const int branches = s.both_branches ? 2 : 1;

    std::vector<PhasePoint> initial;
    for (int i = 0; i < s.shells; ++i) {
        const double r = rho * (i + 0.5) / s.shells;
        std::vector<double> x0(n);
        for (int d = 0; d < n; ++d) x0[d] = r * axes[i][d];
        for (int j = 0; j < s.directions; ++j)
            for (int k = 0; k < s.times; ++k)
                for (int b = 0; b < branches; ++b)
                    initial.push_back(on_shell_point(metric, metric.period() * k / s.times, x0, dirs[j],
                                                     b == 0 ? -1 : 1));
    }

    std::vector<double> escape(initial.size(), 0.0);
    std::vector<std::string> reason(initial.size());
    parallel_for(initial.size(), [&](std::size_t i) {
        const PhasePoint& p = initial[i];
        RayOptions opt;
        opt.escape_radius = R;
        opt.stop_at_escape = true;
        opt.report_dt = horizon; // only endpoints matter here
        double worst = 0.0;
        for (double dir : {1.0, -1.0}) {
            try {
                const RayTrajectory tr = integrate_ray(metric, p, p.t + dir * horizon, s.tol, opt);
                if (!tr.escape_time) {
                    reason[i] = dir > 0 ? "no forward escape within horizon" : "no backward escape within horizon";
                    return;
                }
                worst = std::max(worst, std::fabs(*tr.escape_time - p.t));
            } catch (const Error& e) {
                reason[i] = e.what();
                return;
            }
        }
        escape[i] = worst;
    });

    NonTrappingCertificate cert;
    cert.R = R;
    cert.horizon = horizon;
    cert.sample_count = static_cast<long>(initial.size());
    for (std::size_t i = 0; i < initial.size(); ++i) {
        if (!reason[i].empty()) {
            cert.failures.push_back({initial[i], reason[i]});
        } else {
            cert.max_escape_time = std::max(cert.max_escape_time, escape[i]);
        }
    }
    return cert;
}

double escape_bound_8_1(const Metric& metric, double beta, double rho, double R)
{
    if (!(beta > 0.0)) throw ConditionNotCertifiedError("escape bound needs beta > 0");
    if (!(rho > 0.0) || !(R > 0.0)) throw ParameterError("rho and R must be positive");
    const double inf_a = metric.lower_bound();
    const double sup_a = metric.upper_bound();
    const double alpha = rho * beta / (2.0 * sup_a);
    const double C1 = 2.0 * sup_a / std::sqrt(inf_a);
    const double A = alpha * inf_a;
    const double B = C1 * rho;
    return (B + std::sqrt(B * B + 4.0 * A * (rho * rho + R * R))) / (2.0 * A);
}

std::string trajectory_csv(const RayTrajectory& traj)
{
    std::ostringstream os;
    os << std::setprecision(17);
    const std::size_t n = traj.samples.empty() ? 0 : traj.samples.front().x.size();
    os << 't';
    for (std::size_t d = 0; d < n; ++d) os << ",x" << d + 1;
    for (std::size_t d = 0; d < n; ++d) os << ",xi" << d + 1;
    os << ",tau,residual\n";
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        const auto& p = traj.samples[i];
        os << p.t;
        for (double v : p.x) os << ',' << v;
        for (double v : p.xi) os << ',' << v;
        os << ',' << p.tau << ',' << traj.residuals[i] << '\n';
    }
    return os.str();
}

std::string certificate_json(const NonTrappingCertificate& cert)
{
    nlohmann::ordered_json j;
    j["R"] = cert.R;
    j["sample_count"] = cert.sample_count;
    j["max_escape_time"] = cert.max_escape_time;
    j["horizon"] = cert.horizon;
    j["passed"] = cert.passed();
    auto& f = j["failures"] = nlohmann::ordered_json::array();
    for (const auto& fl : cert.failures)
        f.push_back({{"t", fl.initial.t}, {"x", fl.initial.x}, {"tau", fl.initial.tau}, {"xi", fl.initial.xi},
                     {"reason", fl.reason}});
    return j.dump(2) + "\n";
}

} // namespace wavelab
