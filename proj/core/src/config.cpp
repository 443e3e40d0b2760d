#include "occuflux/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "occuflux/acceptance.hpp"
#include "occuflux/analytics.hpp"
#include "occuflux/serialize.hpp"
#include "occuflux/simulator.hpp"
#include "occuflux/stats.hpp"
#include "occuflux/veqn.hpp"

namespace occuflux {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument("config: " + msg); }

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) fail("'" + where + "' must be an object");
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end()) {
            fail("unknown key '" + key + "'" + (where.empty() ? "" : " in '" + where + "'"));
        }
    }
}

double get_num(const json& obj, const std::string& where, const char* key, double def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number()) fail("'" + where + key + "' must be a number");
    return v.get<double>();
}

std::vector<double> get_num_array(const json& v, const std::string& where) {
    if (!v.is_array()) fail("'" + where + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number()) fail("'" + where + "' must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

MotionSpec parse_motion(const json& j, int d) {
    expect_object(j, "params.motion");
    check_keys(j, "params.motion", {"kind", "sigma", "alpha", "c", "theta"});
    MotionSpec m;
    m.d = d;
    std::string kind = "brownian";
    if (j.contains("kind")) {
        if (!j.at("kind").is_string()) fail("'params.motion.kind' must be a string");
        kind = j.at("kind").get<std::string>();
    }
    if (kind == "brownian") {
        m.kind = MotionKind::Brownian;
    } else if (kind == "alpha_stable") {
        m.kind = MotionKind::AlphaStable;
    } else if (kind == "ou") {
        m.kind = MotionKind::OrnsteinUhlenbeck;
    } else {
        fail("'params.motion.kind' must be brownian, alpha_stable or ou");
    }
    m.sigma = get_num(j, "params.motion.", "sigma", 1.0);
    m.alpha = get_num(j, "params.motion.", "alpha", 2.0);
    m.c = get_num(j, "params.motion.", "c", 1.0);
    m.theta = get_num(j, "params.motion.", "theta", 0.0);
    return m;
}

SystemParams parse_params(const json& j) {
    expect_object(j, "params");
    check_keys(j, "params", {"V", "q", "H", "L", "d", "T", "box_radius", "dt", "motion"});
    SystemParams p;
    p.V = get_num(j, "params.", "V", 1.0);
    p.q = get_num(j, "params.", "q", 0.25);
    p.H = get_num(j, "params.", "H", 0.0);
    p.L = get_num(j, "params.", "L", 0.0);
    const double d = get_num(j, "params.", "d", 1.0);
    if (d != std::floor(d) || d < 1.0) fail("'params.d' must be a positive integer");
    p.d = static_cast<int>(d);
    p.T = get_num(j, "params.", "T", 1.0);
    p.box_radius = get_num(j, "params.", "box_radius", 0.0);
    p.dt = get_num(j, "params.", "dt", 0.0);
    if (j.contains("motion")) {
        p.motion = parse_motion(j.at("motion"), p.d);
    } else {
        p.motion.d = p.d;
    }
    return p;
}

GaussianBump parse_bump(const json& j, const std::string& where, int d) {
    expect_object(j, where);
    check_keys(j, where, {"a", "mu", "w"});
    GaussianBump b;
    b.a = get_num(j, where + ".", "a", 1.0);
    b.w = get_num(j, where + ".", "w", 1.0);
    if (j.contains("mu")) {
        b.mu = get_num_array(j.at("mu"), where + ".mu");
    } else {
        b.mu.assign(static_cast<std::size_t>(d), 0.0);
    }
    return b;
}

const char* kKinds[] = {"fluctuations", "family", "veqn", "covariance", "assumptions", "verify"};

std::string hash_hex(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

json motion_json(const MotionSpec& m) {
    json j;
    j["kind"] = m.kind == MotionKind::Brownian
                    ? "brownian"
                    : (m.kind == MotionKind::AlphaStable ? "alpha_stable" : "ou");
    j["sigma"] = m.sigma;
    j["alpha"] = m.alpha;
    j["c"] = m.c;
    j["theta"] = m.theta;
    return j;
}

json config_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = c.kind;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["threads"] = c.threads;
    json p;
    p["V"] = c.params.V;
    p["q"] = c.params.q;
    p["H"] = c.params.H;
    p["L"] = c.params.L;
    p["d"] = c.params.d;
    p["T"] = c.params.T;
    p["box_radius"] = c.params.box_radius;
    p["dt"] = c.params.dt;
    p["motion"] = motion_json(c.params.motion);
    j["params"] = std::move(p);
    json tests = json::array();
    for (const GaussianBump& b : c.tests) {
        json t;
        t["a"] = b.a;
        t["mu"] = b.mu;
        t["w"] = b.w;
        tests.push_back(std::move(t));
    }
    j["tests"] = std::move(tests);
    j["grid"] = c.grid;
    j["replicas"] = c.replicas;
    j["centering"] = c.centering;
    j["x0"] = c.x0;
    j["times"] = c.times;
    json chi = json::array();
    for (const auto& [s, v] : c.chi) chi.push_back(json::array({s, v}));
    j["chi"] = std::move(chi);
    j["only"] = c.only;
    return j;
}

SpaceTimeTest make_st_test(const ExperimentConfig& cfg) {
    SpaceTimeTest t;
    t.phi = cfg.tests.at(0);
    if (!cfg.chi.empty()) t.chi_nodes = cfg.chi;
    t.validate();
    return t;
}

void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    expect_object(j, "config");
    check_keys(j, "", {"kind", "seed", "out_dir", "threads", "params", "tests", "grid", "replicas",
                       "centering", "x0", "times", "chi", "only"});

    ExperimentConfig c;
    if (!j.contains("kind") || !j.at("kind").is_string()) fail("'kind' is required (string)");
    c.kind = j.at("kind").get<std::string>();
    if (std::find_if(std::begin(kKinds), std::end(kKinds),
                     [&](const char* k) { return c.kind == k; }) == std::end(kKinds)) {
        fail("kind must be one of fluctuations|family|veqn|covariance|assumptions|verify");
    }
    if (!j.contains("seed") || !j.at("seed").is_number_unsigned()) {
        fail("'seed' is required (unsigned integer; no wall-clock seeding)");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) {
        if (!j.at("out_dir").is_string()) fail("'out_dir' must be a string");
        c.out_dir = j.at("out_dir").get<std::string>();
    }
    if (j.contains("threads")) {
        if (!j.at("threads").is_number_integer()) fail("'threads' must be an integer");
        c.threads = j.at("threads").get<int>();
    }
    if (j.contains("params")) c.params = parse_params(j.at("params"));
    c.params.seed = c.seed;
    if (j.contains("tests")) {
        if (!j.at("tests").is_array()) fail("'tests' must be an array");
        std::size_t k = 0;
        for (const json& t : j.at("tests")) {
            c.tests.push_back(parse_bump(t, "tests[" + std::to_string(k) + "]", c.params.d));
            ++k;
        }
    }
    if (j.contains("grid")) c.grid = get_num_array(j.at("grid"), "grid");
    if (j.contains("replicas")) {
        if (!j.at("replicas").is_number_unsigned()) fail("'replicas' must be a nonnegative integer");
        c.replicas = j.at("replicas").get<std::size_t>();
    }
    if (j.contains("centering")) {
        if (!j.at("centering").is_string()) fail("'centering' must be a string");
        c.centering = j.at("centering").get<std::string>();
        if (c.centering != "analytic" && c.centering != "empirical") {
            fail("'centering' must be analytic or empirical");
        }
    }
    if (j.contains("x0")) c.x0 = get_num_array(j.at("x0"), "x0");
    if (j.contains("times")) c.times = get_num_array(j.at("times"), "times");
    if (j.contains("chi")) {
        if (!j.at("chi").is_array()) fail("'chi' must be an array of [s, value] pairs");
        for (const json& e : j.at("chi")) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                fail("'chi' must be an array of [s, value] pairs");
            }
            c.chi.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
    }
    if (j.contains("only")) {
        if (!j.at("only").is_array()) fail("'only' must be an array of criterion indices");
        for (const json& e : j.at("only")) {
            if (!e.is_number_integer()) fail("'only' must contain integers");
            c.only.push_back(e.get<int>());
        }
    }

    if (c.kind != "verify") {
        c.params = validate_params(c.params);  // field-level range messages
        for (const GaussianBump& b : c.tests) b.validate();
    }
    if (c.kind == "fluctuations") {
        require(!c.tests.empty(), "kind 'fluctuations' requires 'tests'");
        require(!c.grid.empty(), "kind 'fluctuations' requires 'grid'");
        require(c.replicas >= 1, "kind 'fluctuations' requires 'replicas' >= 1");
    } else if (c.kind == "family") {
        require(!c.times.empty(), "kind 'family' requires 'times'");
        require(c.replicas >= 1, "kind 'family' requires 'replicas' >= 1");
        if (c.x0.empty()) c.x0.assign(static_cast<std::size_t>(c.params.d), 0.0);
        require(c.x0.size() == static_cast<std::size_t>(c.params.d),
                "'x0' must have d coordinates");
    } else if (c.kind == "veqn") {
        require(c.tests.size() == 1, "kind 'veqn' requires exactly one entry in 'tests'");
    } else if (c.kind == "covariance") {
        require(!c.tests.empty(), "kind 'covariance' requires 'tests'");
        require(!c.grid.empty(), "kind 'covariance' requires 'grid'");
    } else if (c.kind == "assumptions") {
        require(c.tests.size() == 1, "kind 'assumptions' requires exactly one entry in 'tests'");
    }
    return c;
}

std::string canonical_config(const ExperimentConfig& cfg) { return config_json(cfg).dump(); }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string s = canonical_config(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_schema() {
    json s;
    s["kind"] = "fluctuations | family | veqn | covariance | assumptions | verify";
    s["seed"] = "uint64, required; all randomness derives from it";
    s["out_dir"] = "string, default '.'; artifacts and manifest land here";
    s["threads"] = "int, default 0 = OCCUFLUX_THREADS env var, then hardware";
    json p;
    p["V"] = "branching rate > 0, default 1";
    p["q"] = "split probability in [0, 1/2), default 0.25";
    p["H"] = "immigration intensity >= 0, default 0";
    p["L"] = "initial Poisson intensity >= 0, default 0";
    p["d"] = "spatial dimension >= 1, default 1";
    p["T"] = "time horizon > 0, default 1";
    p["box_radius"] = "window half-width, 0 = derive from tests";
    p["dt"] = "accumulation step, 0 = derive";
    json m;
    m["kind"] = "brownian | alpha_stable | ou, default brownian";
    m["sigma"] = "diffusion scale (brownian, ou), default 1";
    m["alpha"] = "stable index in (0, 2], default 2";
    m["c"] = "stable scale > 0, default 1";
    m["theta"] = "OU reversion rate >= 0, default 0";
    p["motion"] = std::move(m);
    s["params"] = std::move(p);
    s["tests"] = json::array({json{{"a", "amplitude >= 0, default 1"},
                                   {"mu", "center, d numbers, default origin"},
                                   {"w", "width > 0, default 1"}}});
    s["grid"] = "fluctuations/covariance: times in (0, 1], increasing";
    s["replicas"] = "fluctuations/family: replica count";
    s["centering"] = "fluctuations: analytic | empirical, default analytic";
    s["x0"] = "family: start position, d numbers, default origin";
    s["times"] = "family: mass sampling times";
    s["chi"] = "veqn: [[s, value], ...] time profile, nonincreasing, chi(1) = 0";
    s["only"] = "verify: criterion indices to run, default all";
    return s.dump(2) + "\n";
}

RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* progress) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string base = cfg.kind + "-" + hash_hex(config_hash(cfg));
    auto path = [&](const std::string& suffix) { return cfg.out_dir + "/" + base + suffix; };

    RunResult res;
    json summary;
    summary["kind"] = cfg.kind;

    SimOptions so;
    so.threads = cfg.threads;

    if (cfg.kind == "fluctuations") {
        const Centering cent =
            cfg.centering == "empirical" ? Centering::Empirical : Centering::Analytic;
        const OccupationSample s = occupation_fluctuations(cfg.params, cfg.params.T, cfg.grid,
                                                           cfg.tests, cfg.replicas, cfg.seed,
                                                           cent, so);
        write_file(path(".csv"), occupation_csv(s));
        res.artifacts.push_back(path(".csv"));
        json cols = json::array();
        if (s.n_replicas >= 30) {
            const CovReport cov = estimate_cov(s);
            for (std::size_t i = 0; i < s.grid.size(); ++i) {
                for (std::size_t jt = 0; jt < s.tests.size(); ++jt) {
                    const std::size_t a = i * s.tests.size() + jt;
                    json col;
                    col["t"] = s.grid[i];
                    col["phi_index"] = jt;
                    col["mean"] = cov.mean[a];
                    col["variance"] = cov.est[cov.at(a, a)];
                    col["variance_se"] = cov.se[cov.at(a, a)];
                    cols.push_back(std::move(col));
                }
            }
        }
        summary["n_replicas"] = s.n_replicas;
        summary["T"] = s.T;
        summary["columns"] = std::move(cols);
    } else if (cfg.kind == "family") {
        const double horizon = *std::max_element(cfg.times.begin(), cfg.times.end());
        std::vector<FamilyStats> fams;
        fams.reserve(cfg.replicas);
        std::size_t extinct = 0;
        for (std::size_t r = 0; r < cfg.replicas; ++r) {
            fams.push_back(single_family(cfg.params, cfg.x0, horizon, cfg.seed + r, cfg.times));
            extinct += fams.back().extinct ? 1u : 0u;
        }
        write_file(path(".csv"), family_csv(fams));
        res.artifacts.push_back(path(".csv"));
        json means = json::array();
        for (std::size_t i = 0; i < cfg.times.size(); ++i) {
            double m = 0.0;
            for (const FamilyStats& f : fams) m += f.mass[i];
            means.push_back(json::array(
                {cfg.times[i], m / static_cast<double>(cfg.replicas)}));
        }
        summary["families"] = cfg.replicas;
        summary["mean_mass"] = std::move(means);
        summary["extinct_fraction"] =
            static_cast<double>(extinct) / static_cast<double>(cfg.replicas);
    } else if (cfg.kind == "veqn") {
        const SpaceTimeTest Phi = make_st_test(cfg);
        LaplaceResult lr = laplace_K(cfg.params, Phi, cfg.params.T);
        ScaledSpaceTimeTest psi{Phi, cfg.params.T, 1.0 / cfg.params.F_T};
        const DefectReport def = defect_u(cfg.params, psi, lr.grid);
        write_file(path(".csv"), vgrid_csv(lr.grid));
        res.artifacts.push_back(path(".csv"));
        summary["K"] = lr.K;
        summary["L_centered"] = lr.L_centered;
        summary["mean_term"] = lr.mean_term;
        summary["iterations"] = lr.grid.iterations;
        summary["residual"] = lr.grid.residual;
        summary["refine_delta"] = lr.grid.refine_delta;
        summary["sup_u"] = def.sup_u;
        summary["u_bound_constant"] = def.bound_constant;
    } else if (cfg.kind == "covariance") {
        const LimitCovariance lc(cfg.params, cfg.tests);
        const std::size_t nt = cfg.tests.size();
        json t1 = json::array(), t2 = json::array();
        for (std::size_t i = 0; i < nt; ++i) {
            for (std::size_t jt = 0; jt < nt; ++jt) {
                t1.push_back(lc.t1(i, jt));
                t2.push_back(lc.t2(i, jt));
            }
        }
        summary["t1"] = std::move(t1);
        summary["t2"] = std::move(t2);
        summary["matrix"] = lc.matrix(cfg.grid);
        summary["grid"] = cfg.grid;
    } else if (cfg.kind == "assumptions") {
        const AssumptionReport rep = check_assumptions(cfg.params, cfg.tests.at(0));
        write_file(path(".json"), assumption_json(rep));
        res.artifacts.push_back(path(".json"));
        summary["all_pass"] = rep.all_pass();
        res.ok = true;
    } else if (cfg.kind == "verify") {
        AcceptanceOptions ao;
        ao.seed = cfg.seed;
        ao.threads = cfg.threads;
        ao.only = cfg.only;
        ao.progress = progress;
        const std::vector<CriterionResult> results = run_acceptance(ao);
        res.ok = all_passed(results);
        json arr = json::array();
        std::ostringstream lines;
        for (const CriterionResult& r : results) {
            json e;
            e["index"] = r.index;
            e["name"] = r.name;
            e["pass"] = r.pass;
            e["detail"] = r.detail;
            e["seconds"] = r.seconds;
            arr.push_back(std::move(e));
            lines << acceptance_line(r) << "\n";
        }
        summary["criteria"] = std::move(arr);
        summary["all_pass"] = res.ok;
        res.summary = lines.str();
    }

    if (cfg.kind != "assumptions") {
        write_file(path(".json"), summary.dump(2) + "\n");
        res.artifacts.push_back(path(".json"));
    }

    json manifest;
    manifest["kind"] = cfg.kind;
    manifest["config_hash"] = hash_hex(config_hash(cfg));
    manifest["seed"] = cfg.seed;
    json versions;
    versions["occuflux"] = kVersion;
    versions["compiler"] = __VERSION__;
    manifest["versions"] = std::move(versions);
    json arts = json::array();
    for (const std::string& a : res.artifacts) arts.push_back(fs::path(a).filename().string());
    manifest["artifacts"] = std::move(arts);
    manifest["config"] = config_json(cfg);
    write_file(path(".manifest.json"), manifest.dump(2) + "\n");
    res.artifacts.push_back(path(".manifest.json"));

    if (res.summary.empty()) {
        std::ostringstream os;
        os << cfg.kind << " done; " << res.artifacts.size() << " artifacts under " << cfg.out_dir;
        res.summary = os.str();
    }
    return res;
}

}  // namespace occuflux
