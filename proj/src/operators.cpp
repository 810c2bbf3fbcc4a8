#include "operators.hpp"

#include <cmath>
#include <numbers>

namespace wavelab::detail {

DivergenceOperator::DivergenceOperator(const Metric& metric, const Grid& grid)
    : metric_(metric), grid_(grid), h_(grid.h())
{
    const double rho = metric.support_radius();
    const bool flat = metric.lower_bound() == 1.0 && metric.upper_bound() == 1.0;
    if (grid.radial) {
        const std::size_t N = grid.size();
        const double n = grid.dimension;
        area_.resize(N - 1);
        volume_.resize(N);
        // Geometric-mean face areas (r_i r_{i+1})^{(n-1)/2} and node volumes
        // r_i^{n-1} h: for n = 3 this is the standard three-point scheme for
        // v = r u, which has no spurious centre mode. Node 0 carries no
        // weight and is extrapolated.
        for (std::size_t i = 0; i + 1 < N; ++i)
            area_[i] = std::pow(static_cast<double>(i) * static_cast<double>(i + 1), 0.5 * (n - 1.0)) *
                       std::pow(h_, n - 1.0);
        for (std::size_t i = 0; i < N; ++i) volume_[i] = std::pow(static_cast<double>(i) * h_, n - 1.0) * h_;
        coef_ = area_;
        while (!flat && inner_faces_ < area_.size() && (inner_faces_ + 0.5) * h_ < rho) ++inner_faces_;
        return;
    }
    // Cartesian: enumerate faces (idx, idx + e_d) with midpoint radius < rho.
    face_a_.clear();
    if (flat) return;
    const int n = grid.dimension;
    const std::size_t N = static_cast<std::size_t>(grid.points);
    const std::size_t total = grid.size();
    std::size_t stride = total;
    for (int d = 0; d < n; ++d) {
        stride /= N;
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rest = idx;
            double r2 = 0.0;
            for (int e = n - 1; e >= 0; --e) {
                double c = -grid.extent + static_cast<double>(rest % N) * h_;
                if (e == d) c += h_ / 2.0;
                rest /= N;
                r2 += c * c;
            }
            if (r2 < rho * rho && (idx / stride) % N != N - 1) {
                faces_.lo.push_back(idx);
                faces_.hi.push_back(idx + stride);
                faces_.r.push_back(std::sqrt(r2));
            }
        }
    }
    face_a_.assign(faces_.r.size(), 1.0);
}

void DivergenceOperator::set_time(double t)
{
    if (have_time_ && (metric_.time_independent() || t == time_)) return;
    have_time_ = true;
    time_ = t;
    if (grid_.radial) {
        for (std::size_t f = 0; f < inner_faces_; ++f) coef_[f] = metric_.radial(t, (f + 0.5) * h_).a * area_[f];
    } else {
        for (std::size_t f = 0; f < faces_.r.size(); ++f) face_a_[f] = metric_.radial(t, faces_.r[f]).a;
    }
}

void DivergenceOperator::apply(const std::vector<double>& u, std::vector<double>& out, std::size_t active) const
{
    if (grid_.radial) {
        const std::size_t N = grid_.size();
        const std::size_t last = std::min(active, N - 2);
        const double inv_h = 1.0 / h_;
        double flux_lo = coef_[0] * (u[1] - u[0]) * inv_h; // zero: face area vanishes
        for (std::size_t i = 1; i <= last; ++i) {
            const double flux_hi = coef_[i] * (u[i + 1] - u[i]) * inv_h;
            out[i] = (flux_hi - flux_lo) / volume_[i];
            flux_lo = flux_hi;
        }
        out[0] = last >= 2 ? (4.0 * out[1] - out[2]) / 3.0 : out[1];
        out[N - 1] = 0.0;
        return;
    }
    const int n = grid_.dimension;
    const std::size_t N = static_cast<std::size_t>(grid_.points);
    const std::size_t total = grid_.size();
    const double inv_h2 = 1.0 / (h_ * h_);
    for (std::size_t idx = 0; idx < total; ++idx) out[idx] = -2.0 * n * u[idx];
    std::size_t stride = total;
    for (int d = 0; d < n; ++d) {
        stride /= N;
        const std::size_t block = stride * N;
        for (std::size_t o = 0; o < total; o += block) {
            // interior neighbours along this axis
            for (std::size_t i = 0; i < N; ++i) {
                const std::size_t base = o + i * stride;
                const std::size_t plus = i == N - 1 ? o : base + stride;
                const std::size_t minus = i == 0 ? o + (N - 1) * stride : base - stride;
                for (std::size_t k = 0; k < stride; ++k) out[base + k] += u[plus + k] + u[minus + k];
            }
        }
    }
    for (std::size_t idx = 0; idx < total; ++idx) out[idx] *= inv_h2;
    for (std::size_t f = 0; f < faces_.r.size(); ++f) {
        const double flux = (face_a_[f] - 1.0) * (u[faces_.hi[f]] - u[faces_.lo[f]]) * inv_h2;
        out[faces_.lo[f]] += flux;
        out[faces_.hi[f]] -= flux;
    }
}

double DivergenceOperator::gradient_pairing(const std::vector<double>& u, const std::vector<double>& w, double b,
                                            bool with_metric) const
{
    if (grid_.radial) {
        const double n = grid_.dimension;
        const double omega = 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
        double s = 0.0;
        for (std::size_t f = 0; f < area_.size(); ++f) {
            if (static_cast<double>(f) * h_ > b) break;
            const double c = with_metric ? coef_[f] : area_[f];
            s += c * (u[f + 1] - u[f]) * (w[f + 1] - w[f]) / h_;
        }
        return omega * s;
    }
    const int n = grid_.dimension;
    const std::size_t N = static_cast<std::size_t>(grid_.points);
    const std::size_t total = grid_.size();
    const double vol = std::pow(h_, n);
    const bool all = b >= grid_.extent * std::sqrt(static_cast<double>(n)) + h_;
    double s = 0.0;
    std::size_t stride = total;
    for (int d = 0; d < n; ++d) {
        stride /= N;
        for (std::size_t idx = 0; idx < total; ++idx) {
            if (!all && grid_.radius(idx) > b) continue;
            const std::size_t i = (idx / stride) % N;
            const std::size_t plus = i == N - 1 ? idx - (N - 1) * stride : idx + stride;
            s += (u[plus] - u[idx]) * (w[plus] - w[idx]);
        }
    }
    s *= vol / (h_ * h_);
    if (with_metric) {
        double corr = 0.0;
        for (std::size_t f = 0; f < faces_.r.size(); ++f) {
            if (!all && grid_.radius(faces_.lo[f]) > b) continue;
            corr += (face_a_[f] - 1.0) * (u[faces_.hi[f]] - u[faces_.lo[f]]) * (w[faces_.hi[f]] - w[faces_.lo[f]]);
        }
        s += corr * vol / (h_ * h_);
    }
    return s;
}

} // namespace wavelab::detail
