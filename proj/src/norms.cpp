#include <cmath>

#include "fft.hpp"
#include "wavelab/analysis.hpp"
#include "wavelab/errors.hpp"

namespace wavelab {

namespace {

// Sum over the full spectrum of w(|k|^2) |f^(k)|^2, scaled so that w = 1
// gives the squared L^2 norm.
template <class Weight>
double spectral_sum(const Grid& grid, const std::vector<double>& f, Weight w)
{
    if (grid.radial) throw ParameterError("spectral norms need a Cartesian grid");
    if (f.size() != grid.size()) throw ParameterError("field size does not match grid");
    std::vector<double> in = f;
    std::vector<std::complex<double>> spec;
    detail::forward_r2c(grid, in, spec);
    const int last = grid.points / 2 + 1;
    double s = 0.0;
    detail::for_each_mode(grid, [&](std::size_t i, const std::vector<double>& k) {
        double k2 = 0.0;
        for (double v : k) k2 += v * v;
        const int m = static_cast<int>(i % last);
        const double mult = (m == 0 || (grid.points % 2 == 0 && m == grid.points / 2)) ? 1.0 : 2.0;
        s += mult * w(k2) * std::norm(spec[i]);
    });
    return s * std::pow(grid.h(), grid.dimension) / static_cast<double>(grid.size());
}

} // namespace

double sobolev_norm(const Grid& grid, const std::vector<double>& f, double gamma, bool* mean_subtracted)
{
    if (!(gamma > -0.5 * grid.dimension)) throw DivergentNormError("Hdot^gamma diverges for gamma <= -n/2");
    if (mean_subtracted) *mean_subtracted = false;
    if (gamma < 0.0 && mean_subtracted) {
        double mean = 0.0;
        for (double v : f) mean += v;
        *mean_subtracted = std::abs(mean) > 1e-14 * static_cast<double>(f.size());
    }
    const double s = spectral_sum(grid, f, [gamma](double k2) {
        if (k2 == 0.0) return gamma == 0.0 ? 1.0 : 0.0;
        return std::pow(k2, gamma);
    });
    return std::sqrt(std::max(0.0, s));
}

double sobolev_norm_inhomogeneous(const Grid& grid, const std::vector<double>& f, double gamma)
{
    const double s = spectral_sum(grid, f, [gamma](double k2) { return std::pow(1.0 + k2, gamma); });
    return std::sqrt(std::max(0.0, s));
}

double lq_norm(const Grid& grid, const std::vector<double>& f, double q)
{
    if (!(q >= 1.0) || !std::isfinite(q)) throw ParameterError("L^q norm needs finite q >= 1");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += grid.weight(i) * std::pow(std::abs(f[i]), q);
    return std::pow(s, 1.0 / q);
}

double strichartz_norm(const Grid& grid, const std::vector<std::vector<double>>& snapshots, double p, double q,
                       double dt)
{
    if (snapshots.empty()) throw ParameterError("empty snapshot series");
    if (!(p >= 1.0) || !std::isfinite(p)) throw ParameterError("Strichartz norm needs finite p >= 1");
    if (!(dt > 0.0) && snapshots.size() > 1) throw ParameterError("snapshot spacing must be positive");
    if (snapshots.size() == 1) return 0.0;
    double s = 0.0;
    for (std::size_t j = 0; j < snapshots.size(); ++j) {
        const double w = (j == 0 || j + 1 == snapshots.size()) ? 0.5 : 1.0;
        s += w * std::pow(lq_norm(grid, snapshots[j], q), p);
    }
    return std::pow(s * dt, 1.0 / p);
}

} // namespace wavelab
