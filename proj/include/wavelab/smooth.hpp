#pragma once

namespace wavelab {

// Value and first two derivatives of a scalar function at a point.
struct Jet2 {
    double v = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

// C-infinity step: 0 for w <= 0, 1 for w >= 1, built from exp(-1/x).
Jet2 smooth_step(double w);

// C-infinity bump profile: 1 on [0, 1/2], 0 on [1, inf), smooth step between.
Jet2 bump_profile(double s);

// Cutoff radial profile equal to 1 for r <= inner and 0 for r >= outer.
Jet2 radial_cutoff(double r, double inner, double outer);

} // namespace wavelab
