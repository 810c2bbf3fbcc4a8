#pragma once

#include <vector>

#include "wavelab/metric.hpp"
#include "wavelab/solver.hpp"

namespace wavelab::detail {

// Faces of the Cartesian grid whose midpoint lies inside the metric support;
// everywhere else a = 1 on faces.
struct FaceSet {
    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;
    std::vector<double> r;
};

// Discrete div(a grad u) in conservative form, with a on faces.
class DivergenceOperator {
public:
    DivergenceOperator(const Metric& metric, const Grid& grid);

    // Refresh face coefficients for time t (no-op for static metrics after
    // the first call).
    void set_time(double t);
    // out = div(a grad u); on radial grids only nodes [0, active] are touched
    // and out beyond is left unchanged.
    void apply(const std::vector<double>& u, std::vector<double>& out, std::size_t active) const;

    // Face-difference energy pieces: sum over faces (with weights) of
    // coef * Du * Dw, restricted to faces whose low node has radius <= b.
    double gradient_pairing(const std::vector<double>& u, const std::vector<double>& w, double b,
                            bool with_metric) const;

    const Grid& grid() const { return grid_; }

private:
    const Metric& metric_;
    Grid grid_;
    double h_;
    bool have_time_ = false;
    double time_ = 0.0;
    // Cartesian
    FaceSet faces_;
    std::vector<double> face_a_;
    // Radial: face areas r^{n-1} and per-node volumes (no sphere factor)
    std::vector<double> area_;
    std::vector<double> volume_;
    std::vector<double> coef_; // a * area on faces
    std::size_t inner_faces_ = 0;
};

} // namespace wavelab::detail
