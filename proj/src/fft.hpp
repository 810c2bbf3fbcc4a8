#pragma once

#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "wavelab/solver.hpp"

namespace wavelab::detail {

double wavenumber(int m, int N, double L);
// Size of the r2c half spectrum.
std::size_t spectral_size(const Grid& g);
// Visits r2c half-spectrum modes in storage order with their wave vectors.
void for_each_mode(const Grid& g, const std::function<void(std::size_t, const std::vector<double>&)>& fn);
void forward_r2c(const Grid& g, std::vector<double>& in, std::vector<std::complex<double>>& out);
void inverse_c2r(const Grid& g, std::vector<std::complex<double>>& in, std::vector<double>& out);
// Unnormalized in-place transform; sign is FFTW_FORWARD or FFTW_BACKWARD.
void transform_c2c(const Grid& g, std::vector<std::complex<double>>& data, int sign);

} // namespace wavelab::detail

namespace wavelab::detail {

// Smooth projection onto resolved wavenumbers: multiplies every mode by
// 1 - S((|k| h - lo) / (hi - lo)) with S the smooth step. Cartesian grids use
// the FFT; radial n = 3 grids use the sine transform of v = r u, which
// diagonalizes the flat radial operator.
void band_limit(const Grid& g, std::vector<double>& f, double lo = 0.25 * std::numbers::pi,
                double hi = 0.5 * std::numbers::pi);

} // namespace wavelab::detail
