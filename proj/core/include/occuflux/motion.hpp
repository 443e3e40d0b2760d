#pragma once

#include <span>

#include "occuflux/rng.hpp"
#include "occuflux/test_functions.hpp"

namespace occuflux {

enum class MotionKind { Brownian, AlphaStable, OrnsteinUhlenbeck };

// Single-particle motion. Brownian and alpha-stable are Levy motions with
// exponents -sigma^2|z|^2/2 and -c sum_k |z_k|^alpha (independent coordinates);
// OU is the mean-reverting diffusion dX = -theta X dt + sigma dW.
struct MotionSpec {
    MotionKind kind = MotionKind::Brownian;
    int d = 1;
    double sigma = 1.0;  // Brownian / OU
    double alpha = 2.0;  // stable index in (0, 2]
    double c = 1.0;      // stable scale
    double theta = 0.0;  // OU reversion rate

    void validate() const;
    bool translation_invariant() const { return kind != MotionKind::OrnsteinUhlenbeck; }
};

// Advances position x (size d) by one exact-in-law transition over time h.
void sample_increment(const MotionSpec& m, double h, std::span<double> x, RngStream& rng);

// Levy exponent Psi(z); throws for OU, which is not translation invariant.
double char_exponent(const MotionSpec& m, std::span<const double> z);

// (T_t phi)(x): closed form for Brownian/OU (Gaussians are preserved),
// Fourier-inversion quadrature for alpha-stable.
double semigroup_apply(const MotionSpec& m, const GaussianBump& phi, double t,
                       std::span<const double> x);

// OU transition variance factor: Var(X_t | X_0) = sigma^2 * ou_variance_time.
// Equals t in the theta -> 0 limit.
double ou_variance_time(double theta, double t);

// e^{2 theta t} * ou_variance_time(theta, t) = (e^{2 theta t} - 1) / (2 theta);
// the effective heat time that appears in Fourier-domain OU formulas after the
// coordinate change z -> e^{theta t} z.
double ou_fourier_time(double theta, double t);

// Standard symmetric alpha-stable draw with E e^{izS} = e^{-|z|^alpha}
// (Chambers-Mallows-Stuck). At alpha = 2 this is exactly N(0, 2).
double standard_stable(double alpha, RngStream& rng);

// Spatial displacement scale per unit time, used by dt and window defaults.
double motion_scale(const MotionSpec& m);

}  // namespace occuflux
