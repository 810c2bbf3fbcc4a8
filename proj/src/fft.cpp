#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <random>

#include <fftw3.h>

#include "fft.hpp"
#include "wavelab/smooth.hpp"
#include "wavelab/errors.hpp"
#include "wavelab/solver.hpp"

namespace wavelab {

namespace detail {

namespace {
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

std::vector<int> dims_of(const Grid& g) { return std::vector<int>(g.dimension, g.points); }
} // namespace

// Wavenumber of FFT index m on an axis of N points spanning 2L.
double wavenumber(int m, int N, double L) { return (m <= N / 2 ? m : m - N) * std::numbers::pi / L; }

std::size_t spectral_size(const Grid& g)
{
    std::size_t s = static_cast<std::size_t>(g.points / 2 + 1);
    for (int d = 0; d + 1 < g.dimension; ++d) s *= static_cast<std::size_t>(g.points);
    return s;
}

void for_each_mode(const Grid& g, const std::function<void(std::size_t, const std::vector<double>&)>& fn)
{
    const int n = g.dimension;
    const int N = g.points;
    const int last = N / 2 + 1;
    const std::size_t total = spectral_size(g);
    std::vector<double> k(n);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        k[n - 1] = wavenumber(static_cast<int>(rest % last), N, g.extent);
        rest /= last;
        for (int d = n - 2; d >= 0; --d) {
            k[d] = wavenumber(static_cast<int>(rest % N), N, g.extent);
            rest /= N;
        }
        fn(idx, k);
    }
}

void forward_r2c(const Grid& g, std::vector<double>& in, std::vector<std::complex<double>>& out)
{
    out.resize(spectral_size(g));
    const auto dims = dims_of(g);
    fftw_plan p;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        p = fftw_plan_dft_r2c(g.dimension, dims.data(), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                              FFTW_ESTIMATE);
    }
    fftw_execute(p);
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(p);
}

// Normalized inverse (divides by the number of points). Destroys `in`.
void inverse_c2r(const Grid& g, std::vector<std::complex<double>>& in, std::vector<double>& out)
{
    out.resize(g.size());
    const auto dims = dims_of(g);
    fftw_plan p;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        p = fftw_plan_dft_c2r(g.dimension, dims.data(), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                              FFTW_ESTIMATE);
    }
    fftw_execute(p);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(p);
    }
    const double scale = 1.0 / static_cast<double>(g.size());
    for (double& v : out) v *= scale;
}

void transform_c2c(const Grid& g, std::vector<std::complex<double>>& data, int sign)
{
    const auto dims = dims_of(g);
    fftw_plan p;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
        p = fftw_plan_dft(g.dimension, dims.data(), ptr, ptr, sign, FFTW_ESTIMATE);
    }
    fftw_execute(p);
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(p);
}

void band_limit(const Grid& g, std::vector<double>& f, double lo, double hi)
{
    if (f.size() != g.size()) throw ParameterError("field size does not match grid");
    auto filter = [&](double theta) { return 1.0 - smooth_step((theta - lo) / (hi - lo)).v; };
    const double h = g.h();
    if (!g.radial) {
        std::vector<std::complex<double>> spec;
        forward_r2c(g, f, spec);
        for_each_mode(g, [&](std::size_t i, const std::vector<double>& k) {
            double k2 = 0.0;
            for (double v : k) k2 += v * v;
            spec[i] *= filter(std::sqrt(k2) * h);
        });
        inverse_c2r(g, spec, f);
        return;
    }
    if (g.dimension != 3) throw ParameterError("radial band limiting is implemented for n = 3");
    const int N = g.points;
    const int M = N - 2; // interior nodes 1..N-2
    std::vector<double> v(M);
    for (int j = 0; j < M; ++j) v[j] = (j + 1) * h * f[j + 1];
    fftw_plan p, q;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        p = fftw_plan_r2r_1d(M, v.data(), v.data(), FFTW_RODFT00, FFTW_ESTIMATE);
        q = fftw_plan_r2r_1d(M, v.data(), v.data(), FFTW_RODFT00, FFTW_ESTIMATE);
    }
    fftw_execute(p);
    for (int k = 0; k < M; ++k) v[k] *= filter(std::numbers::pi * (k + 1) / (M + 1)) / (2.0 * (M + 1));
    fftw_execute(q);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(p);
        fftw_destroy_plan(q);
    }
    for (int j = 0; j < M; ++j) f[j + 1] = v[j] / ((j + 1) * h);
    f[N - 1] = 0.0;
    f[0] = (4.0 * f[1] - f[2]) / 3.0;
}

} // namespace detail

CauchyData free_evolve_fft(const CauchyData& data, double t)
{
    const Grid& g = data.grid;
    if (g.radial) throw ParameterError("free_evolve_fft needs a Cartesian grid");
    CauchyData out = data;
    out.time = data.time + t;
    out.support_radius.reset();
    if (t == 0.0) return out;
    std::vector<double> f1 = data.f1, f2 = data.f2;
    std::vector<std::complex<double>> a, b;
    detail::forward_r2c(g, f1, a);
    detail::forward_r2c(g, f2, b);
    detail::for_each_mode(g, [&](std::size_t i, const std::vector<double>& k) {
        double k2 = 0.0;
        for (double v : k) k2 += v * v;
        const double kk = std::sqrt(k2);
        const double c = std::cos(t * kk);
        const double sk = kk > 0.0 ? std::sin(t * kk) / kk : t;
        const double ks = kk * std::sin(t * kk);
        const std::complex<double> u = c * a[i] + sk * b[i];
        const std::complex<double> v = -ks * a[i] + c * b[i];
        a[i] = u;
        b[i] = v;
    });
    detail::inverse_c2r(g, a, out.f1);
    detail::inverse_c2r(g, b, out.f2);
    return out;
}

namespace {

// div(a grad u) with spectral derivatives; Nyquist components of first
// derivatives are zeroed.
struct SpectralDivergence {
    Grid g;
    std::vector<std::vector<double>> kd; // per-axis first-derivative symbols
    std::vector<double> k2;

    explicit SpectralDivergence(const Grid& grid) : g(grid)
    {
        const int n = g.dimension;
        const int N = g.points;
        const std::size_t total = g.size();
        kd.assign(n, std::vector<double>(total));
        k2.assign(total, 0.0);
        for (std::size_t idx = 0; idx < total; ++idx) {
            std::size_t rest = idx;
            for (int d = n - 1; d >= 0; --d) {
                const int m = static_cast<int>(rest % N);
                rest /= N;
                const double k = detail::wavenumber(m, N, g.extent);
                kd[d][idx] = m == N / 2 ? 0.0 : k;
                k2[idx] += k * k;
            }
        }
    }

    void operator()(const std::vector<double>& a_nodes, bool flat, const std::vector<std::complex<double>>& u,
                    std::vector<std::complex<double>>& out) const
    {
        const std::size_t total = g.size();
        const double scale = 1.0 / static_cast<double>(total);
        std::vector<std::complex<double>> uh = u;
        detail::transform_c2c(g, uh, FFTW_FORWARD);
        if (flat) {
            out.resize(total);
            for (std::size_t idx = 0; idx < total; ++idx) out[idx] = -k2[idx] * uh[idx] * scale;
            detail::transform_c2c(g, out, FFTW_BACKWARD);
            return;
        }
        std::vector<std::complex<double>> acc(total, 0.0), w(total);
        const std::complex<double> I(0.0, 1.0);
        for (std::size_t d = 0; d < kd.size(); ++d) {
            for (std::size_t idx = 0; idx < total; ++idx) w[idx] = I * kd[d][idx] * uh[idx] * scale;
            detail::transform_c2c(g, w, FFTW_BACKWARD);
            for (std::size_t idx = 0; idx < total; ++idx) w[idx] *= a_nodes[idx];
            detail::transform_c2c(g, w, FFTW_FORWARD);
            for (std::size_t idx = 0; idx < total; ++idx) acc[idx] += I * kd[d][idx] * w[idx] * scale;
        }
        detail::transform_c2c(g, acc, FFTW_BACKWARD);
        out = std::move(acc);
    }
};

} // namespace

ComplexField spectral_evolve(const Metric& metric, const ComplexField& data, double t, double dt)
{
    const Grid& g = data.grid;
    if (g.radial) throw ParameterError("spectral_evolve needs a Cartesian grid");
    const double span = t - data.time;
    ComplexField st = data;
    if (span == 0.0) return st;
    const double dt_max = 0.25 * g.h() / std::sqrt(metric.upper_bound() * g.dimension);
    if (dt <= 0.0) dt = dt_max;
    const long steps = std::max(1L, static_cast<long>(std::ceil(std::fabs(span) / dt - 1e-9)));
    dt = span / steps;
    const bool flat = metric.lower_bound() == 1.0 && metric.upper_bound() == 1.0;
    const std::size_t total = g.size();
    std::vector<double> a_nodes(total, 1.0);
    std::vector<std::size_t> inside;
    for (std::size_t i = 0; i < total; ++i)
        if (g.radius(i) < metric.support_radius()) inside.push_back(i);
    auto coeffs = [&](double time) {
        for (std::size_t i : inside) a_nodes[i] = metric.radial(time, g.radius(i)).a;
    };
    const SpectralDivergence div(g);
    using V = std::vector<std::complex<double>>;
    V k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v, tu(total), tv(total);
    for (long s = 0; s < steps; ++s) {
        const double t0 = data.time + s * dt;
        coeffs(t0);
        k1u = st.v;
        div(a_nodes, flat, st.u, k1v);
        coeffs(t0 + 0.5 * dt);
        for (std::size_t i = 0; i < total; ++i) {
            tu[i] = st.u[i] + 0.5 * dt * k1u[i];
            tv[i] = st.v[i] + 0.5 * dt * k1v[i];
        }
        k2u = tv;
        div(a_nodes, flat, tu, k2v);
        for (std::size_t i = 0; i < total; ++i) {
            tu[i] = st.u[i] + 0.5 * dt * k2u[i];
            tv[i] = st.v[i] + 0.5 * dt * k2v[i];
        }
        k3u = tv;
        div(a_nodes, flat, tu, k3v);
        coeffs(t0 + dt);
        for (std::size_t i = 0; i < total; ++i) {
            tu[i] = st.u[i] + dt * k3u[i];
            tv[i] = st.v[i] + dt * k3v[i];
        }
        k4u = tv;
        div(a_nodes, flat, tu, k4v);
        for (std::size_t i = 0; i < total; ++i) {
            st.u[i] += dt / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
            st.v[i] += dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    st.time = t;
    return st;
}

double spectral_hdot_norm(const CauchyData& data)
{
    const Grid& g = data.grid;
    if (g.radial) throw ParameterError("spectral norms need a Cartesian grid");
    std::vector<double> f1 = data.f1, f2 = data.f2;
    std::vector<std::complex<double>> a, b;
    detail::forward_r2c(g, f1, a);
    detail::forward_r2c(g, f2, b);
    const int last = g.points / 2 + 1;
    double s = 0.0;
    detail::for_each_mode(g, [&](std::size_t i, const std::vector<double>& k) {
        double k2 = 0.0;
        for (double v : k) k2 += v * v;
        // modes strictly inside the half axis stand for a conjugate pair
        const int m = static_cast<int>(i % last);
        const double mult = (m == 0 || (g.points % 2 == 0 && m == g.points / 2)) ? 1.0 : 2.0;
        s += mult * (k2 * std::norm(a[i]) + std::norm(b[i]));
    });
    const double vol = std::pow(g.h(), g.dimension);
    return std::sqrt(s * vol / static_cast<double>(g.size()));
}

CauchyData sample_random_data(std::uint64_t seed, double support_radius, double smoothness, const Grid& grid)
{
    if (!(support_radius > 0.0)) throw ParameterError("support radius must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    CauchyData d = CauchyData::zeros(grid);
    auto weight = [&](double k) { return std::pow(1.0 + k * k, -0.5 * smoothness); };
    if (!grid.radial) {
        const double kcut = (grid.points / 8) * std::numbers::pi / grid.extent;
        for (auto* field : {&d.f1, &d.f2}) {
            std::vector<std::complex<double>> spec(detail::spectral_size(grid));
            detail::for_each_mode(grid, [&](std::size_t i, const std::vector<double>& k) {
                double k2 = 0.0;
                for (double v : k) k2 += v * v;
                const double re = gauss(rng), im = gauss(rng);
                if (std::sqrt(k2) <= kcut) spec[i] = std::complex<double>(re, im) * weight(std::sqrt(k2));
            });
            detail::inverse_c2r(grid, spec, *field);
        }
    } else {
        const int J = std::clamp(static_cast<int>(support_radius / (4.0 * grid.h())), 2, 32);
        for (auto* field : {&d.f1, &d.f2}) {
            std::vector<double> c(J + 1);
            for (int j = 0; j <= J; ++j) c[j] = gauss(rng) * weight(j * std::numbers::pi / support_radius);
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double r = grid.radius(i);
                double s = 0.0;
                for (int j = 0; j <= J; ++j) s += c[j] * std::cos(j * std::numbers::pi * r / support_radius);
                (*field)[i] = s;
            }
        }
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double env = bump_profile(grid.radius(i) / support_radius).v;
        d.f1[i] *= env;
        d.f2[i] *= env;
    }
    const double nrm = hdot_norm(d);
    if (nrm > 0.0) {
        for (double& v : d.f1) v /= nrm;
        for (double& v : d.f2) v /= nrm;
    }
    d.support_radius = support_radius;
    return d;
}

} // namespace wavelab
