#include "occuflux/params.hpp"

#include <cmath>
#include <stdexcept>

namespace occuflux {

SystemParams validate_params(SystemParams p) {
    if (!(p.V > 0.0)) throw std::invalid_argument("SystemParams: branching rate V must be > 0");
    if (!(p.q >= 0.0)) throw std::invalid_argument("SystemParams: q must be >= 0");
    if (!(p.q < 0.5))
        throw std::invalid_argument("SystemParams: q must be < 1/2 (subcritical branching)");
    if (!(p.H >= 0.0)) throw std::invalid_argument("SystemParams: immigration intensity H must be >= 0");
    if (!(p.L >= 0.0)) throw std::invalid_argument("SystemParams: initial intensity L must be >= 0");
    if (p.d < 1) throw std::invalid_argument("SystemParams: dimension d must be >= 1");
    if (!(p.T > 0.0)) throw std::invalid_argument("SystemParams: horizon T must be > 0");
    if (!(p.box_radius >= 0.0))
        throw std::invalid_argument("SystemParams: box_radius must be >= 0 (0 = derive)");
    if (!(p.dt >= 0.0)) throw std::invalid_argument("SystemParams: dt must be >= 0 (0 = derive)");

    if (p.motion.d != p.d) {
        if (p.motion.d == 1 && p.d > 1)
            p.motion.d = p.d;  // motion spec written without an explicit dimension
        else
            throw std::invalid_argument("SystemParams: motion dimension disagrees with d");
    }
    p.motion.validate();

    const double derived_Q = p.V * (1.0 - 2.0 * p.q);
    if (p.Q >= 0.0 && std::abs(p.Q - derived_Q) > 1e-9 * std::max(1.0, derived_Q))
        throw std::invalid_argument("SystemParams: provided Q disagrees with V(1 - 2q)");
    p.Q = derived_Q;
    if (!(p.Q > 0.0)) throw std::invalid_argument("SystemParams: Q = V(1 - 2q) must be > 0");

    const double derived_FT = std::sqrt(p.T);
    if (p.F_T >= 0.0 && std::abs(p.F_T - derived_FT) > 1e-9 * std::max(1.0, derived_FT))
        throw std::invalid_argument("SystemParams: provided F_T disagrees with sqrt(T)");
    p.F_T = derived_FT;

    return p;
}

}  // namespace occuflux
