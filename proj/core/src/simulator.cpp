#include "occuflux/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <string>
#include <thread>

namespace occuflux {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mass fraction of every test function that must sit inside the window.
constexpr double kBoxMassTol = 1e-6;

struct Event {
    double time;
    std::uint32_t slot;
};
struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.slot > b.slot;
    }
};

// Cached per-test constants for the hot evaluation loop.
struct TestEval {
    const GaussianBump* phi;
    double a;
    double inv2w2;
    double cutoff2;  // beyond this squared distance the contribution is < 1e-16 a
};

TestEval make_eval(const GaussianBump& phi) {
    double cut = 8.6 * phi.w;
    return {&phi, phi.a, 1.0 / (2.0 * phi.w * phi.w), cut * cut};
}

class Engine {
public:
    Engine(const SystemParams& params, double R, std::uint64_t base_seed,
           std::uint64_t stream, std::uint64_t max_particles, bool move_particles)
        : P(params),
          d(params.d),
          R(R),
          rng(base_seed, stream),
          max_particles(max_particles),
          move_particles(move_particles) {}

    void init_poisson_field() {
        const double volume = std::pow(2.0 * R, d);
        const std::uint64_t n0 = rng.poisson(P.L * volume);
        for (std::uint64_t i = 0; i < n0; ++i) spawn_uniform(0.0);
        if (P.H > 0.0) {
            imm_rate = P.H * volume;
            next_imm = rng.exponential(imm_rate);
        }
    }

    void init_single(std::span<const double> x0) {
        const std::uint32_t s = alloc_slot();
        for (int k = 0; k < d; ++k) pos[s * d + k] = x0[k];
        schedule(s, 0.0);
        live = 1;
    }

    // Processes all events up to time t, then advances every survivor to t.
    void advance_to(double t) {
        for (;;) {
            const double tev = events.empty() ? kInf : events.top().time;
            if (next_imm <= tev && next_imm <= t) {
                spawn_uniform(next_imm);
                next_imm += rng.exponential(imm_rate);
            } else if (tev <= t) {
                branch_or_die();
            } else {
                break;
            }
        }
        if (move_particles) {
            for (std::uint32_t s = 0; s < parts.size(); ++s) {
                if (!alive[s] || parts[s].last_update >= t) continue;
                move_particle(s, t);
            }
        }
    }

    // Processes events only (no motion); returns the time of the next pending
    // event, or +inf. Used for mass trajectories, which change only at events.
    double next_event_time() const {
        const double tev = events.empty() ? kInf : events.top().time;
        return std::min(tev, next_imm);
    }
    void process_next_event() {
        const double tev = events.empty() ? kInf : events.top().time;
        if (next_imm <= tev) {
            spawn_uniform(next_imm);
            next_imm += rng.exponential(imm_rate);
        } else {
            branch_or_die();
        }
    }

    // Sum_j of phi_j over living particles, slot order (deterministic).
    void accumulate_tests(std::span<const TestEval> evals, std::span<double> out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::uint32_t s = 0; s < parts.size(); ++s) {
            if (!alive[s]) continue;
            const double* x = pos.data() + std::size_t(s) * d;
            for (std::size_t j = 0; j < evals.size(); ++j) {
                const TestEval& e = evals[j];
                double r2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    const double dx = x[k] - e.phi->mu[k];
                    r2 += dx * dx;
                }
                if (r2 < e.cutoff2) out[j] += e.a * std::exp(-r2 * e.inv2w2);
            }
        }
    }

    std::uint64_t live_count() const { return live; }
    double last_death_time() const { return last_death; }

    // Bookkeeping counters, used by conservation checks.
    std::uint64_t total_spawned = 0;
    std::uint64_t total_branches = 0;
    std::uint64_t total_deaths = 0;

private:
    std::uint32_t alloc_slot() {
        if (live + 1 > max_particles)
            throw std::runtime_error(
                "simulator: live particle count exceeded the explosion guard (" +
                std::to_string(max_particles) + ")");
        std::uint32_t s;
        if (!free_slots.empty()) {
            s = free_slots.back();
            free_slots.pop_back();
        } else {
            s = static_cast<std::uint32_t>(parts.size());
            parts.push_back({});
            alive.push_back(0);
            pos.resize(pos.size() + d, 0.0);
        }
        alive[s] = 1;
        return s;
    }

    void schedule(std::uint32_t s, double now) {
        parts[s].id = next_id++;
        parts[s].last_update = now;
        parts[s].next_event = now + rng.exponential(P.V);
        events.push({parts[s].next_event, s});
    }

    void spawn_uniform(double t) {
        const std::uint32_t s = alloc_slot();
        for (int k = 0; k < d; ++k) pos[s * d + k] = rng.uniform(-R, R);
        schedule(s, t);
        ++live;
        ++total_spawned;
    }

    void move_particle(std::uint32_t s, double t) {
        sample_increment(P.motion, t - parts[s].last_update,
                         std::span<double>(pos.data() + std::size_t(s) * d, d), rng);
        parts[s].last_update = t;
    }

    void branch_or_die() {
        const Event ev = events.top();
        events.pop();
        const std::uint32_t s = ev.slot;
        if (move_particles) move_particle(s, ev.time);
        if (rng.uniform() < P.q) {
            // Binary split at the parent's position; the parent slot carries
            // one child, the sibling gets a fresh slot.
            schedule(s, ev.time);
            const std::uint32_t s2 = alloc_slot();
            for (int k = 0; k < d; ++k) pos[s2 * d + k] = pos[std::size_t(s) * d + k];
            schedule(s2, ev.time);
            ++live;
            ++total_branches;
        } else {
            alive[s] = 0;
            free_slots.push_back(s);
            --live;
            ++total_deaths;
            last_death = ev.time;
        }
    }

    const SystemParams& P;
    const int d;
    const double R;
    RngStream rng;
    const std::uint64_t max_particles;
    const bool move_particles;

    std::vector<Particle> parts;
    std::vector<std::uint8_t> alive;
    std::vector<double> pos;
    std::vector<std::uint32_t> free_slots;
    std::priority_queue<Event, std::vector<Event>, EventLater> events;
    double next_imm = kInf;
    double imm_rate = 0.0;
    std::uint64_t next_id = 0;
    std::uint64_t live = 0;
    double last_death = kInf;
};

struct Lattice {
    double dt = 0.0;
    std::size_t n_steps = 0;
    std::vector<std::size_t> out_step;  // lattice index for each grid time
};

Lattice make_lattice(double T, const std::vector<double>& grid, double dt_req) {
    Lattice lat;
    const double horizon = T * grid.back();
    lat.out_step.resize(grid.size(), 0);
    if (horizon <= 0.0) return lat;
    lat.n_steps = static_cast<std::size_t>(std::ceil(horizon / dt_req - 1e-9));
    lat.n_steps = std::max<std::size_t>(lat.n_steps, 1);
    lat.dt = horizon / static_cast<double>(lat.n_steps);
    for (std::size_t i = 0; i < grid.size(); ++i)
        lat.out_step[i] = static_cast<std::size_t>(std::llround(grid[i] * T / lat.dt));
    return lat;
}

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("simulator: time grid must be nonempty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0) || !(grid[i] <= 1.0))
            throw std::invalid_argument("simulator: grid times must lie in [0, 1]");
        if (i > 0 && !(grid[i] > grid[i - 1]))
            throw std::invalid_argument("simulator: grid times must be strictly increasing");
    }
}

void check_window(const std::vector<GaussianBump>& tests, double R) {
    for (const auto& phi : tests) {
        if (phi.mass_fraction_in_box(R) < 1.0 - kBoxMassTol)
            throw std::invalid_argument(
                "simulator: box_radius " + std::to_string(R) +
                " leaves more than 1e-6 of a test function's mass outside the window");
    }
}

// One replica: fills raw occupation integrals (grid x tests) and optionally
// the space-time-weighted integral.
void run_raw_replica(const SystemParams& params, const std::vector<GaussianBump>& tests,
                     const Lattice& lat, double R, std::uint64_t base_seed,
                     std::uint64_t stream, const SimOptions& opts, double* raw_out,
                     double* st_out) {
    const std::size_t nj = tests.size();
    std::vector<TestEval> evals;
    evals.reserve(nj + 1);
    for (const auto& phi : tests) evals.push_back(make_eval(phi));
    if (opts.st_test) evals.push_back(make_eval(opts.st_test->test.phi));

    Engine eng(params, R, base_seed, stream, opts.max_particles, true);
    eng.init_poisson_field();

    std::vector<double> sums_prev(evals.size()), sums(evals.size());
    std::vector<double> acc(nj, 0.0);
    double st_acc = 0.0;
    eng.accumulate_tests(evals, sums_prev);

    for (std::size_t i = 0; i < lat.out_step.size(); ++i)
        if (lat.out_step[i] == 0)
            for (std::size_t j = 0; j < nj; ++j) raw_out[i * nj + j] = 0.0;

    double chi_prev = opts.st_test ? opts.st_test->chi_at(0.0) : 0.0;
    for (std::size_t k = 1; k <= lat.n_steps; ++k) {
        const double t = static_cast<double>(k) * lat.dt;
        eng.advance_to(t);
        eng.accumulate_tests(evals, sums);
        for (std::size_t j = 0; j < nj; ++j)
            acc[j] += 0.5 * lat.dt * (sums_prev[j] + sums[j]);
        if (opts.st_test) {
            const double chi_now = opts.st_test->chi_at(t);
            st_acc += 0.5 * lat.dt * (chi_prev * sums_prev[nj] + chi_now * sums[nj]);
            chi_prev = chi_now;
        }
        std::swap(sums_prev, sums);
        for (std::size_t i = 0; i < lat.out_step.size(); ++i)
            if (lat.out_step[i] == k)
                for (std::size_t j = 0; j < nj; ++j) raw_out[i * nj + j] = acc[j];
    }
    if (st_out) *st_out = st_acc;
}

}  // namespace

double mean_occupancy(const SystemParams& params, double t, const GaussianBump& phi) {
    if (t < 0.0) throw std::invalid_argument("mean_occupancy: t must be >= 0");
    double kappa = params.Q;
    if (params.motion.kind == MotionKind::OrnsteinUhlenbeck)
        kappa -= params.d * params.motion.theta;
    const double eint = (kappa == 0.0) ? t : -std::expm1(-kappa * t) / kappa;
    return (params.L * std::exp(-kappa * t) + params.H * eint) * mass(phi);
}

double default_box_radius(const SystemParams& params, const std::vector<GaussianBump>& tests,
                          double horizon) {
    double base = 0.0;
    for (const auto& phi : tests) base = std::max(base, phi.center_extent() + 10.0 * phi.w);
    return base + 5.0 * motion_scale(params.motion) * std::sqrt(std::max(horizon, 0.0));
}

double default_dt(const SystemParams& params, const std::vector<GaussianBump>& tests) {
    double wmin = kInf;
    for (const auto& phi : tests) wmin = std::min(wmin, phi.w);
    if (!std::isfinite(wmin)) wmin = 1.0;
    const double s = motion_scale(params.motion);
    return std::min(0.05 / params.V, 0.05 * wmin * wmin / (s * s));
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("OCCUFLUX_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

OccupationSample occupation_fluctuations(const SystemParams& params_in, double T,
                                         const std::vector<double>& grid,
                                         const std::vector<GaussianBump>& tests,
                                         std::size_t n_replicas, std::uint64_t base_seed,
                                         Centering centering, const SimOptions& opts) {
    SystemParams params = params_in;
    params.T = T;
    params.F_T = -1.0;
    params = validate_params(params);
    check_grid(grid);
    if (tests.empty()) throw std::invalid_argument("simulator: need at least one test function");
    for (const auto& phi : tests) {
        phi.validate();
        if (phi.dim() != params.d)
            throw std::invalid_argument("simulator: test function dimension disagrees with d");
    }
    if (n_replicas == 0) throw std::invalid_argument("simulator: n_replicas must be >= 1");

    const double horizon = T * grid.back();
    const double R =
        params.box_radius > 0.0 ? params.box_radius : default_box_radius(params, tests, horizon);
    check_window(tests, R);
    const double dt_req = params.dt > 0.0 ? params.dt : default_dt(params, tests);
    const Lattice lat = make_lattice(T, grid, dt_req);

    OccupationSample out;
    out.T = T;
    out.grid = grid;
    out.tests = tests;
    out.n_replicas = n_replicas;
    out.base_seed = base_seed;
    out.centering = centering;
    const std::size_t ni = grid.size();
    const std::size_t nj = tests.size();
    out.raw.assign(n_replicas * ni * nj, 0.0);
    out.values.assign(n_replicas * ni * nj, 0.0);
    if (opts.st_test) out.st_raw.assign(n_replicas, 0.0);

    const int n_threads = std::min<std::size_t>(resolve_threads(opts.threads), n_replicas);
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t r = cursor.fetch_add(1);
            if (r >= n_replicas) return;
            try {
                run_raw_replica(params, tests, lat, R, base_seed, r, opts,
                                out.raw.data() + r * ni * nj,
                                opts.st_test ? &out.st_raw[r] : nullptr);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // Centering. The analytic path accumulates the closed-form mean occupancy
    // with the same trapezoid lattice the replicas used, so E[value] = 0
    // without discretization mismatch.
    std::vector<double> center(ni * nj, 0.0);
    if (centering == Centering::Analytic) {
        std::vector<double> m_prev(nj), m_now(nj), acc(nj, 0.0);
        for (std::size_t j = 0; j < nj; ++j) m_prev[j] = mean_occupancy(params, 0.0, tests[j]);
        for (std::size_t i = 0; i < ni; ++i)
            if (lat.out_step[i] == 0)
                for (std::size_t j = 0; j < nj; ++j) center[i * nj + j] = 0.0;
        for (std::size_t k = 1; k <= lat.n_steps; ++k) {
            const double t = static_cast<double>(k) * lat.dt;
            for (std::size_t j = 0; j < nj; ++j) {
                m_now[j] = mean_occupancy(params, t, tests[j]);
                acc[j] += 0.5 * lat.dt * (m_prev[j] + m_now[j]);
            }
            std::swap(m_prev, m_now);
            for (std::size_t i = 0; i < ni; ++i)
                if (lat.out_step[i] == k)
                    for (std::size_t j = 0; j < nj; ++j) center[i * nj + j] = acc[j];
        }
    } else {
        for (std::size_t r = 0; r < n_replicas; ++r)
            for (std::size_t c = 0; c < ni * nj; ++c) center[c] += out.raw[r * ni * nj + c];
        for (auto& v : center) v /= static_cast<double>(n_replicas);
    }

    const double inv_ft = 1.0 / params.F_T;
    for (std::size_t r = 0; r < n_replicas; ++r)
        for (std::size_t c = 0; c < ni * nj; ++c)
            out.values[r * ni * nj + c] = (out.raw[r * ni * nj + c] - center[c]) * inv_ft;

    for (double v : out.values)
        if (!std::isfinite(v)) throw std::runtime_error("simulator: non-finite fluctuation value");
    return out;
}

OccupationSample run_replica(const SystemParams& params, const std::vector<GaussianBump>& tests,
                             const std::vector<double>& grid, std::uint64_t seed,
                             const SimOptions& opts) {
    SimOptions one = opts;
    one.threads = 1;
    return occupation_fluctuations(params, params.T, grid, tests, 1, seed,
                                   Centering::Analytic, one);
}

FamilyStats single_family(const SystemParams& params_in, std::span<const double> x0,
                          double horizon, std::uint64_t seed,
                          const std::vector<double>& mass_times,
                          const ScaledSpaceTimeTest* psi, double psi_offset,
                          std::uint64_t max_particles) {
    SystemParams params = validate_params(params_in);
    params.H = 0.0;
    params.L = 0.0;
    if (static_cast<int>(x0.size()) != params.d)
        throw std::invalid_argument("single_family: x0 dimension disagrees with d");
    for (double t : mass_times)
        if (!(t >= 0.0) || !(t <= horizon))
            throw std::invalid_argument("single_family: mass sample times must lie in [0, horizon]");
    if (!std::is_sorted(mass_times.begin(), mass_times.end()))
        throw std::invalid_argument("single_family: mass sample times must be sorted");

    FamilyStats out;
    out.x0.assign(x0.begin(), x0.end());
    out.times = mass_times;
    out.mass.assign(mass_times.size(), 0);

    Engine eng(params, 0.0, seed, 0, max_particles, psi != nullptr);
    eng.init_single(x0);

    if (psi == nullptr) {
        // Mass changes only at events; no motion needed (branching and motion
        // are independent, so the mass law is unaffected).
        std::size_t next_sample = 0;
        for (;;) {
            const double tev = eng.next_event_time();
            const double stop = std::min(tev, horizon);
            while (next_sample < mass_times.size() && mass_times[next_sample] < stop) {
                out.mass[next_sample] = static_cast<std::uint32_t>(eng.live_count());
                ++next_sample;
            }
            if (tev > horizon || eng.live_count() == 0) break;
            eng.process_next_event();
            // Samples exactly at the event time see the post-event mass.
            while (next_sample < mass_times.size() && mass_times[next_sample] == tev) {
                out.mass[next_sample] = static_cast<std::uint32_t>(eng.live_count());
                ++next_sample;
            }
        }
        while (next_sample < mass_times.size())
            out.mass[next_sample++] = static_cast<std::uint32_t>(eng.live_count());
    } else {
        const double dt_req = params.dt > 0.0 ? params.dt : default_dt(params, {psi->test.phi});
        const std::size_t n_steps =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / dt_req - 1e-9)));
        const double dt = horizon / static_cast<double>(n_steps);
        std::vector<TestEval> evals = {make_eval(psi->test.phi)};
        std::vector<double> sum_prev(1), sum_now(1);
        eng.accumulate_tests(evals, sum_prev);
        double chi_prev = psi->chi_at(psi_offset);
        double acc = 0.0;
        std::size_t next_sample = 0;
        for (std::size_t k = 1; k <= n_steps && eng.live_count() > 0; ++k) {
            const double t = static_cast<double>(k) * dt;
            eng.advance_to(t);
            eng.accumulate_tests(evals, sum_now);
            const double chi_now = psi->chi_at(psi_offset + t);
            acc += 0.5 * dt * (chi_prev * sum_prev[0] + chi_now * sum_now[0]);
            sum_prev = sum_now;
            chi_prev = chi_now;
            while (next_sample < mass_times.size() && mass_times[next_sample] <= t) {
                out.mass[next_sample] = static_cast<std::uint32_t>(eng.live_count());
                ++next_sample;
            }
        }
        while (next_sample < mass_times.size())
            out.mass[next_sample++] = static_cast<std::uint32_t>(eng.live_count());
        out.occupation = acc;
    }

    if (eng.live_count() == 0) {
        out.extinct = true;
        out.extinction_time = eng.last_death_time();
    }
    return out;
}

}  // namespace occuflux
