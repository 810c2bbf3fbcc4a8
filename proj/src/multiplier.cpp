#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wavelab/analysis.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/parallel.hpp"

namespace wavelab {

MultiplierTerms multiplier_terms(const Metric& metric, const MultiplierFunction& xi, double t,
                                 std::span<const double> x, const FieldJet& jet, double r_min)
{
    const std::size_t n = x.size();
    if (jet.grad.size() != n) throw ParameterError("gradient size does not match dimension");
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double r = std::sqrt(r2);
    if (!(r > r_min)) throw DomainError("multiplier terms are singular at |x| <= r_min");

    const double a = metric.evaluate(t, x);
    const double a_t = metric.d_t(t, x);
    const double a_r = metric.d_r(t, x);
    const Jet2 w = xi(r);
    const double u = jet.u, ut = jet.u_t;
    double g2 = 0.0, xg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g2 += jet.grad[i] * jet.grad[i];
        xg += x[i] * jet.grad[i];
    }
    const double ur = xg / r;
    const double m1 = static_cast<double>(n) - 1.0;
    const double gap = w.v / r - w.d1; // xi/r - xi'

    MultiplierTerms out;
    out.M = ut + w.v * ur + w.v * m1 / (2.0 * r) * u;
    out.energy = 0.5 * (a * g2 + ut * ut);
    out.X = out.energy + w.v * ut * (ur + m1 / (2.0 * r) * u);
    out.Y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.Y[i] = -a * jet.grad[i] * out.M + x[i] * w.v / (2.0 * r) * (a * g2 - ut * ut) -
                   a * m1 / (4.0 * r2) * gap * x[i] * u * u;
    }
    out.Z = 0.5 * w.d1 * ut * ut + a * gap * (g2 - ur * ur) +
            (gap * (a * (static_cast<double>(n) - 3.0) / r + a_r) - a * w.d2) * m1 / (4.0 * r) * u * u +
            0.5 * (a * w.d1 - a_t - w.v * a_r) * g2;
    return out;
}

double IdentityReport::min_order() const
{
    double m = std::numeric_limits<double>::infinity();
    for (double o : orders) m = std::min(m, o);
    return m;
}

namespace {

IdentityRow identity_residual(const Metric& metric, const MultiplierFunction& xi, const SpaceTimeFunction& u,
                              int n, double L, int N, const std::vector<double>& times)
{
    const double h = 2.0 * L / N;
    std::size_t total = 1;
    std::vector<std::size_t> stride(n);
    for (int d = n - 1; d >= 0; --d) {
        stride[d] = total;
        total *= static_cast<std::size_t>(N);
    }
    auto coords = [&](std::size_t idx, std::vector<double>& x, std::vector<int>& j) {
        for (int d = 0; d < n; ++d) {
            j[d] = static_cast<int>((idx / stride[d]) % static_cast<std::size_t>(N));
            x[d] = -L + (j[d] + 0.5) * h;
        }
    };
    auto inside = [&](const std::vector<int>& j, int margin) {
        for (int v : j)
            if (v < margin || v >= N - margin) return false;
        return true;
    };

    IdentityRow row;
    row.h = h;
    row.min_Z = std::numeric_limits<double>::infinity();
    const double r_min = 0.5 * h;
    for (double t0 : times) {
        // u at t0 + m h, m = -2..2
        std::vector<std::vector<double>> U(5, std::vector<double>(total));
        for (int m = 0; m < 5; ++m) {
            const double t = t0 + (m - 2) * h;
            parallel_for(total, [&](std::size_t idx) {
                std::vector<double> x(n);
                std::vector<int> j(n);
                coords(idx, x, j);
                U[m][idx] = u(t, x);
            });
        }
        auto jet_at = [&](int m, std::size_t idx) {
            FieldJet jet;
            jet.u = U[m][idx];
            jet.u_t = (U[m + 1][idx] - U[m - 1][idx]) / (2.0 * h);
            jet.grad.resize(n);
            for (int d = 0; d < n; ++d) jet.grad[d] = (U[m][idx + stride[d]] - U[m][idx - stride[d]]) / (2.0 * h);
            return jet;
        };

        // X and Y at levels t0 - h, t0, t0 + h on nodes one cell in from the edge.
        std::vector<std::vector<double>> X(3, std::vector<double>(total, 0.0));
        std::vector<std::vector<double>> Y(3 * n, std::vector<double>(total, 0.0));
        for (int m = 1; m <= 3; ++m) {
            const double t = t0 + (m - 2) * h;
            parallel_for(total, [&](std::size_t idx) {
                std::vector<double> x(n);
                std::vector<int> j(n);
                coords(idx, x, j);
                if (!inside(j, 1)) return;
                const auto terms = multiplier_terms(metric, xi, t, x, jet_at(m, idx), 0.0);
                X[m - 1][idx] = terms.X;
                for (int d = 0; d < n; ++d) Y[(m - 1) * n + d][idx] = terms.Y[d];
            });
        }

        std::vector<double> res(total, 0.0), ref(total, 0.0), zmin(total, std::numeric_limits<double>::infinity());
        parallel_for(total, [&](std::size_t idx) {
            std::vector<double> x(n), xf(n);
            std::vector<int> j(n);
            coords(idx, x, j);
            if (!inside(j, 2)) return;
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            if (std::sqrt(r2) <= r_min) return;
            const auto terms = multiplier_terms(metric, xi, t0, x, jet_at(2, idx), r_min);
            double pu = (U[3][idx] - 2.0 * U[2][idx] + U[1][idx]) / (h * h);
            double divY = 0.0;
            for (int d = 0; d < n; ++d) {
                xf = x;
                xf[d] = x[d] + 0.5 * h;
                const double ap = metric.evaluate(t0, xf);
                xf[d] = x[d] - 0.5 * h;
                const double am = metric.evaluate(t0, xf);
                const std::size_t s = stride[d];
                pu -= (ap * (U[2][idx + s] - U[2][idx]) - am * (U[2][idx] - U[2][idx - s])) / (h * h);
                divY += (Y[n + d][idx + s] - Y[n + d][idx - s]) / (2.0 * h);
            }
            const double dtX = (X[2][idx] - X[0][idx]) / (2.0 * h);
            res[idx] = std::abs(terms.M * pu - dtX - divY - terms.Z);
            ref[idx] = std::abs(terms.M * pu);
            zmin[idx] = terms.Z;
        });
        const double vol = std::pow(h, n);
        for (std::size_t idx = 0; idx < total; ++idx) {
            row.residual += res[idx] * vol;
            row.reference += ref[idx] * vol;
            row.min_Z = std::min(row.min_Z, zmin[idx]);
        }
        if (n == 3) {
            const std::vector<double> origin(n, 0.0);
            const double u0 = u(t0, origin);
            row.boundary_term += 0.5 * std::numbers::pi * (n - 1) * xi.xi(0.0) * u0 * u0;
        }
    }
    return row;
}

} // namespace

IdentityReport verify_identity_8_5(const Metric& metric, const MultiplierFunction& xi, const SpaceTimeFunction& u,
                                   const IdentityLadder& ladder)
{
    if (ladder.points.size() < 2) throw ParameterError("identity check needs at least two grids");
    if (ladder.times.empty()) throw ParameterError("identity check needs sample times");
    IdentityReport report;
    for (int N : ladder.points) {
        if (N < 8) throw ParameterError("identity grids need at least 8 points per axis");
        report.rows.push_back(identity_residual(metric, xi, u, ladder.dimension, ladder.extent, N, ladder.times));
    }
    for (std::size_t k = 0; k + 1 < report.rows.size(); ++k) {
        const auto& a = report.rows[k];
        const auto& b = report.rows[k + 1];
        if (b.residual > a.residual) report.monotone = false;
        if (a.residual == 0.0 && b.residual == 0.0) {
            report.orders.push_back(std::numeric_limits<double>::infinity());
        } else {
            report.orders.push_back(std::log(a.residual / b.residual) / std::log(a.h / b.h));
        }
    }
    return report;
}

} // namespace wavelab
