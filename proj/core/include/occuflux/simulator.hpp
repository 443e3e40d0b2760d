#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occuflux/params.hpp"

namespace occuflux {

// How raw occupation integrals are turned into fluctuation values:
//   X_T(t_i) = (raw integral over [0, T t_i] - centering) / F_T.
// Analytic centering subtracts the closed-form mean accumulated on the same
// time lattice as the simulation (so the centered value has mean zero exactly,
// with no quadrature mismatch); empirical centering subtracts the
// cross-replica mean of the raw integrals.
enum class Centering { Analytic, Empirical };

struct Particle {
    std::uint64_t id = 0;
    double next_event = 0.0;   // absolute time of the scheduled branch-or-death
    double last_update = 0.0;  // motion has been advanced to this time
};

struct SimOptions {
    std::uint64_t max_particles = 10'000'000;  // explosion guard
    int threads = 0;  // 0: OCCUFLUX_THREADS env var, then hardware concurrency
    // Optional space-time functional: accumulates int_0^{T g_max} <N_s, Psi(., s)> ds
    // per replica (used by Laplace-functional cross checks).
    const ScaledSpaceTimeTest* st_test = nullptr;
};

// Rescaled occupation-time fluctuations of a replica batch.
struct OccupationSample {
    double T = 1.0;
    std::vector<double> grid;  // t_i in [0, 1], increasing
    std::vector<GaussianBump> tests;
    std::size_t n_replicas = 0;
    std::uint64_t base_seed = 0;
    Centering centering = Centering::Analytic;

    // values[idx(r,i,j)] = <X_T(t_i), phi_j> for replica r; raw holds the
    // uncentered, unscaled occupation integrals in the same layout.
    std::vector<double> values;
    std::vector<double> raw;
    // Per-replica space-time-weighted integral (empty unless requested).
    std::vector<double> st_raw;

    std::size_t idx(std::size_t r, std::size_t i, std::size_t j) const {
        return (r * grid.size() + i) * tests.size() + j;
    }
    double value(std::size_t r, std::size_t i, std::size_t j) const {
        return values[idx(r, i, j)];
    }
};

// Single-ancestor family record.
struct FamilyStats {
    std::vector<double> x0;
    std::vector<double> times;          // where mass was sampled
    std::vector<std::uint32_t> mass;    // |N_t| at those times
    bool extinct = false;
    double extinction_time = 0.0;       // meaningful only if extinct
    double occupation = 0.0;            // int <N_s, Psi(., r + s)> ds if Psi given
};

// E<N_t, phi>. Closed form: for Lebesgue-invariant motion
//   [L e^{-Qt} + (H/Q)(1 - e^{-Qt})] * mass(phi);
// for OU the decay rate is Q - d*theta (integrating the killed semigroup over
// space picks up the e^{d theta t} volume factor).
double mean_occupancy(const SystemParams& params, double t, const GaussianBump& phi);

// One replica of the full system on the window [-R, R]^d. The window bounds
// only where initial particles and immigrants appear; motion is unconfined.
OccupationSample run_replica(const SystemParams& params,
                             const std::vector<GaussianBump>& tests,
                             const std::vector<double>& grid, std::uint64_t seed,
                             const SimOptions& opts = {});

// Replica batch, parallel over replicas, bit-identical for fixed
// (params, grid, tests, n, base_seed) regardless of thread count.
OccupationSample occupation_fluctuations(const SystemParams& params, double T,
                                         const std::vector<double>& grid,
                                         const std::vector<GaussianBump>& tests,
                                         std::size_t n_replicas, std::uint64_t base_seed,
                                         Centering centering, const SimOptions& opts = {});

// Single family started from one particle at x0, no immigration, no window.
// Samples |N_t| at mass_times, records the extinction time (exactly, at the
// terminating event) and, if psi is given, the occupation functional
// int_0^horizon <N_s, psi(., psi_offset + s)> ds.
FamilyStats single_family(const SystemParams& params, std::span<const double> x0,
                          double horizon, std::uint64_t seed,
                          const std::vector<double>& mass_times = {},
                          const ScaledSpaceTimeTest* psi = nullptr,
                          double psi_offset = 0.0,
                          std::uint64_t max_particles = 10'000'000);

// Effective defaults used by the engine when params leave them unset.
double default_box_radius(const SystemParams& params, const std::vector<GaussianBump>& tests,
                          double horizon);
double default_dt(const SystemParams& params, const std::vector<GaussianBump>& tests);

int resolve_threads(int requested);

}  // namespace occuflux
