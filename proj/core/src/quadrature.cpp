#include "occuflux/quadrature.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

namespace occuflux {

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol, int max_depth) {
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, max_depth, rel_tol, &err);
    return {v, err};
}

QuadResult integrate_half_line(const std::function<double(double)>& f, double rel_tol) {
    boost::math::quadrature::exp_sinh<double> integrator;
    double err = 0.0;
    double l1 = 0.0;
    double v = integrator.integrate(f, rel_tol, &err, &l1);
    // exp_sinh reports relative error; convert to an absolute estimate.
    return {v, err * std::max(std::abs(v), l1)};
}

double require_converged(const QuadResult& r, double tol, const char* label) {
    double scale = std::max(std::abs(r.value), 1e-30);
    if (r.error > tol * scale && r.error > tol) {
        std::ostringstream msg;
        msg << label << ": quadrature did not converge, achieved error estimate "
            << r.error << " (value " << r.value << ", requested " << tol << ")";
        throw QuadratureError(msg.str(), r.value, r.error);
    }
    return r.value;
}

}  // namespace occuflux
