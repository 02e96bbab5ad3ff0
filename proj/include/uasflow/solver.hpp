#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace uasflow {

struct FixedPointResult {
    double root = 0.0;
    double residual = 0.0;  // |h(root) - root|
    bool flagged = false;   // residual above tolerance or no sign change found
    std::vector<std::pair<double, double>> brackets;  // every sign change on the scan grid
};

struct FixedPointOptions {
    double grid_step = 1e-3;
    double bisect_tol = 1e-10;
    double flag_tol = 1e-8;
};

// Fixed point of h on [0,1]: grid scan of g = h - x, smallest bracket bisected.
FixedPointResult solve_fixed_point(const std::function<double(double)>& h,
                                   const FixedPointOptions& opt = {});

}  // namespace uasflow
