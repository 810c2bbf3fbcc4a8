#include "wavelab/smooth.hpp"

#include <cmath>

namespace wavelab {

Jet2 smooth_step(double w)
{
    if (w <= 0.0) return {0.0, 0.0, 0.0};
    if (w >= 1.0) return {1.0, 0.0, 0.0};

    // S = 1/(1+e^q) with q = 1/w - 1/(1-w); written in terms of e^{-|q|}
    // so neither end overflows.
    const double u = 1.0 - w;
    const double q = 1.0 / w - 1.0 / u;
    const double q1 = -1.0 / (w * w) - 1.0 / (u * u);
    const double q2 = 2.0 / (w * w * w) - 2.0 / (u * u * u);
    const double e = std::exp(-std::fabs(q));
    if (e == 0.0) return {q > 0.0 ? 0.0 : 1.0, 0.0, 0.0};

    const double s = q > 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
    const double sigma = e / ((1.0 + e) * (1.0 + e));
    Jet2 out;
    out.v = s;
    out.d1 = -q1 * sigma;
    out.d2 = -(q2 + q1 * q1) * sigma + 2.0 * q1 * q1 * sigma * (1.0 - s);
    return out;
}

Jet2 bump_profile(double s)
{
    if (s <= 0.5) return {1.0, 0.0, 0.0};
    if (s >= 1.0) return {0.0, 0.0, 0.0};
    const Jet2 st = smooth_step(2.0 * s - 1.0);
    return {1.0 - st.v, -2.0 * st.d1, -4.0 * st.d2};
}

Jet2 radial_cutoff(double r, double inner, double outer)
{
    const double width = outer - inner;
    const Jet2 st = smooth_step((r - inner) / width);
    return {1.0 - st.v, -st.d1 / width, -st.d2 / (width * width)};
}

} // namespace wavelab
