#pragma once

#include <cstdint>

#include "occuflux/motion.hpp"

namespace occuflux {

// Model parameters for the branching system with immigration: particles move
// independently (motion), live Exp(V) lifetimes, and on death split into two
// at the same site with probability q (< 1/2, subcritical) or vanish.
// Immigration is a Poisson field of intensity H per unit space-time; the
// initial state is Poisson(L * Lebesgue). Q = V(1 - 2q) is the effective
// decay rate of family mass; F_T = sqrt(T) is the fluctuation normalization.
struct SystemParams {
    double V = 1.0;
    double q = 0.25;
    double H = 0.0;
    double L = 0.0;
    double Q = -1.0;    // derived by validate_params
    int d = 1;
    MotionSpec motion;
    double T = 1.0;
    double F_T = -1.0;  // derived by validate_params
    double box_radius = 0.0;  // 0: derive from test functions at run time
    double dt = 0.0;          // 0: derive from V and test widths at run time
    std::uint64_t seed = 1;
};

// Range-checks every field, fills the derived Q and F_T (rejecting present
// but inconsistent values), and returns the completed record. Idempotent.
SystemParams validate_params(SystemParams p);

}  // namespace occuflux
