#pragma once

#include <algorithm>
#include <cmath>

#include "wavelab/errors.hpp"
#include "wavelab/solver.hpp"

namespace wavelab::detail {

// A CFL-stable step dividing `interval`, and the number of steps per interval.
struct SamplingPlan {
    double dt = 0.0;
    int every = 1;
};

inline SamplingPlan sampling_plan(const Metric& metric, const Grid& grid, double interval, double safety = 0.9)
{
    if (!(interval > 0.0)) throw ParameterError("sampling interval must be positive");
    const double dt_max = cfl_limit(metric, grid, safety);
    SamplingPlan plan;
    plan.every = std::max(1, static_cast<int>(std::ceil(interval / dt_max - 1e-9)));
    plan.dt = interval / plan.every;
    return plan;
}

} // namespace wavelab::detail
