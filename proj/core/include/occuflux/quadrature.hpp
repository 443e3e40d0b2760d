#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace occuflux {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // absolute error estimate
};

// Raised when an integral does not reach the requested tolerance; carries the
// achieved error estimate so callers can report it.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double value, double achieved)
        : std::runtime_error(what), value(value), achieved_error(achieved) {}
    double value;
    double achieved_error;
};

// Adaptive Gauss-Kronrod on [a, b].
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-10, int max_depth = 15);

// Integral over [0, inf) for integrands with eventual exponential-type decay.
QuadResult integrate_half_line(const std::function<double(double)>& f,
                               double rel_tol = 1e-10);

// Checks the achieved error against tol (relative where the value is not tiny,
// absolute otherwise) and throws QuadratureError on failure.
double require_converged(const QuadResult& r, double tol, const char* label);

}  // namespace occuflux
