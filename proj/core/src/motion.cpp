#include "occuflux/motion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "occuflux/quadrature.hpp"

namespace occuflux {

void MotionSpec::validate() const {
    if (d < 1) throw std::invalid_argument("MotionSpec: dimension d must be >= 1");
    switch (kind) {
        case MotionKind::Brownian:
            if (!(sigma > 0.0)) throw std::invalid_argument("MotionSpec: Brownian sigma must be > 0");
            break;
        case MotionKind::AlphaStable:
            if (!(alpha > 0.0) || alpha > 2.0)
                throw std::invalid_argument("MotionSpec: stable index alpha must lie in (0, 2]");
            if (!(c > 0.0)) throw std::invalid_argument("MotionSpec: stable scale c must be > 0");
            break;
        case MotionKind::OrnsteinUhlenbeck:
            if (!(sigma > 0.0)) throw std::invalid_argument("MotionSpec: OU sigma must be > 0");
            if (!(theta > 0.0)) throw std::invalid_argument("MotionSpec: OU theta must be > 0");
            break;
    }
}

double ou_variance_time(double theta, double t) {
    if (theta == 0.0) return t;
    return -std::expm1(-2.0 * theta * t) / (2.0 * theta);
}

double ou_fourier_time(double theta, double t) {
    if (theta == 0.0) return t;
    return std::expm1(2.0 * theta * t) / (2.0 * theta);
}

double standard_stable(double alpha, RngStream& rng) {
    const double u = (rng.uniform() - 0.5) * std::numbers::pi;  // U(-pi/2, pi/2)
    double wexp = rng.exponential(1.0);
    if (wexp < 1e-300) wexp = 1e-300;
    if (alpha == 1.0) return std::tan(u);
    const double cu = std::cos(u);
    return std::sin(alpha * u) / std::pow(cu, 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * u) / wexp, (1.0 - alpha) / alpha);
}

void sample_increment(const MotionSpec& m, double h, std::span<double> x, RngStream& rng) {
    switch (m.kind) {
        case MotionKind::Brownian: {
            const double s = m.sigma * std::sqrt(h);
            for (auto& xk : x) xk += s * rng.normal();
            return;
        }
        case MotionKind::AlphaStable: {
            // (c h)^{1/alpha} S gives exponent exactly h * (-c |z|^alpha).
            const double s = std::pow(m.c * h, 1.0 / m.alpha);
            for (auto& xk : x) xk += s * standard_stable(m.alpha, rng);
            return;
        }
        case MotionKind::OrnsteinUhlenbeck: {
            const double decay = std::exp(-m.theta * h);
            const double s = m.sigma * std::sqrt(ou_variance_time(m.theta, h));
            for (auto& xk : x) xk = xk * decay + s * rng.normal();
            return;
        }
    }
}

double char_exponent(const MotionSpec& m, std::span<const double> z) {
    switch (m.kind) {
        case MotionKind::Brownian: {
            double z2 = 0.0;
            for (double zk : z) z2 += zk * zk;
            return -0.5 * m.sigma * m.sigma * z2;
        }
        case MotionKind::AlphaStable: {
            double s = 0.0;
            for (double zk : z) s += std::pow(std::abs(zk), m.alpha);
            return -m.c * s;
        }
        case MotionKind::OrnsteinUhlenbeck:
            throw std::invalid_argument("char_exponent: OU motion is not a Levy process");
    }
    return 0.0;
}

namespace {

// Gaussian bump pushed through a Gaussian transition with per-coordinate mean
// map x -> center(x) and variance s2.
double gaussian_transition_apply(const GaussianBump& phi, std::span<const double> x,
                                 double contraction, double s2) {
    const double v = phi.w * phi.w + s2;
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double dk = x[k] * contraction - phi.mu[k];
        r2 += dk * dk;
    }
    const int d = phi.dim();
    return phi.a * std::pow(phi.w * phi.w / v, 0.5 * d) * std::exp(-r2 / (2.0 * v));
}

}  // namespace

double semigroup_apply(const MotionSpec& m, const GaussianBump& phi, double t,
                       std::span<const double> x) {
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: t must be >= 0");
    if (static_cast<int>(x.size()) != phi.dim())
        throw std::invalid_argument("semigroup_apply: x dimension mismatch");
    switch (m.kind) {
        case MotionKind::Brownian:
            return gaussian_transition_apply(phi, x, 1.0, m.sigma * m.sigma * t);
        case MotionKind::OrnsteinUhlenbeck:
            return gaussian_transition_apply(phi, x, std::exp(-m.theta * t),
                                             m.sigma * m.sigma * ou_variance_time(m.theta, t));
        case MotionKind::AlphaStable: {
            if (t == 0.0) return eval_phi(phi, x);
            // Coordinates decouple: T_t phi(x) = a * prod_k I_k with
            //   I_k = (w / sqrt(2 pi)) * 2 int_0^inf e^{-w^2 u^2/2 - t c u^alpha} cos(u (x_k - mu_k)) du.
            const double w = phi.w;
            double zmax = 8.5 / w;  // Gaussian factor below 1e-15 past here
            double out = phi.a;
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double delta = x[k] - phi.mu[k];
                auto f = [&](double u) {
                    return std::exp(-0.5 * w * w * u * u - t * m.c * std::pow(u, m.alpha)) *
                           std::cos(u * delta);
                };
                auto r = integrate(f, 0.0, zmax, 1e-12);
                out *= require_converged(r, 1e-9, "semigroup_apply(stable)") * 2.0 * w /
                       std::sqrt(2.0 * std::numbers::pi);
            }
            return out;
        }
    }
    return 0.0;
}

double motion_scale(const MotionSpec& m) {
    switch (m.kind) {
        case MotionKind::Brownian:
        case MotionKind::OrnsteinUhlenbeck:
            return m.sigma;
        case MotionKind::AlphaStable:
            return std::pow(m.c, 1.0 / m.alpha);
    }
    return 1.0;
}

}  // namespace occuflux
