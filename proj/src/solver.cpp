#include "uasflow/solver.hpp"

#include <cmath>

namespace uasflow {

FixedPointResult solve_fixed_point(const std::function<double(double)>& h,
                                   const FixedPointOptions& opt) {
    auto g = [&](double x) { return h(x) - x; };
    FixedPointResult res;

    const int n = static_cast<int>(std::lround(1.0 / opt.grid_step));
    double best_x = 0.0, best_abs = std::fabs(g(0.0));
    double prev_x = 0.0, prev_g = g(0.0);
    bool exact_zero_first = prev_g == 0.0;
    if (exact_zero_first) res.brackets.emplace_back(0.0, 0.0);

    for (int i = 1; i <= n; ++i) {
        double x = (i == n) ? 1.0 : i * opt.grid_step;
        double gx = g(x);
        if (std::fabs(gx) < best_abs) {
            best_abs = std::fabs(gx);
            best_x = x;
        }
        if (gx == 0.0) {
            res.brackets.emplace_back(x, x);
        } else if ((prev_g > 0.0 && gx < 0.0) || (prev_g < 0.0 && gx > 0.0)) {
            res.brackets.emplace_back(prev_x, x);
        }
        prev_x = x;
        prev_g = gx;
    }

    if (res.brackets.empty()) {
        res.root = best_x;
        res.residual = best_abs;
        res.flagged = true;
        return res;
    }

    auto [a, b] = res.brackets.front();
    if (a == b) {
        res.root = a;
        res.residual = std::fabs(g(a));
    } else {
        double ga = g(a);
        double m = 0.5 * (a + b), gm = g(m);
        for (int it = 0; it < 200; ++it) {
            m = 0.5 * (a + b);
            gm = g(m);
            if (std::fabs(gm) <= opt.bisect_tol || b - a < 1e-16) break;
            if ((gm > 0.0) == (ga > 0.0)) {
                a = m;
                ga = gm;
            } else {
                b = m;
            }
        }
        res.root = m;
        res.residual = std::fabs(gm);
    }
    res.flagged = res.residual > opt.flag_tol;
    return res;
}

}  // namespace uasflow
