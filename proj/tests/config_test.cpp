#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "occuflux/config.hpp"
#include "occuflux/serialize.hpp"

using namespace occuflux;

namespace {

const char* kFluctuations = R"({
  "kind": "fluctuations",
  "seed": 12345,
  "replicas": 40,
  "grid": [0.5, 1.0],
  "tests": [{"a": 1.0, "mu": [0.0], "w": 1.0}],
  "params": {"V": 1.0, "q": 0.25, "H": 0.5, "L": 1.0, "T": 2.0, "box_radius": 8.0}
})";

std::string parse_error(const std::string& text) {
    try {
        parse_config(text);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("round trip through the canonical form") {
    const ExperimentConfig cfg = parse_config(kFluctuations);
    CHECK(cfg.kind == "fluctuations");
    CHECK(cfg.seed == 12345);
    CHECK(cfg.replicas == 40);
    CHECK(cfg.params.Q == doctest::Approx(0.5));
    CHECK(cfg.params.seed == 12345);

    const ExperimentConfig again = parse_config(canonical_config(cfg));
    CHECK(config_hash(again) == config_hash(cfg));
    CHECK(canonical_config(again) == canonical_config(cfg));
}

TEST_CASE("hash separates distinct configs") {
    ExperimentConfig a = parse_config(kFluctuations);
    ExperimentConfig b = a;
    b.seed = 54321;
    CHECK(config_hash(a) != config_hash(b));
    ExperimentConfig c = a;
    c.params.q = 0.3;
    CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("parse errors name the offending field") {
    CHECK(parse_error("{") .find("invalid JSON") != std::string::npos);
    CHECK(parse_error(R"({"kind": "fluctuations"})").find("'seed' is required") !=
          std::string::npos);
    CHECK(parse_error(R"({"kind": "tea", "seed": 1})").find("kind must be one of") !=
          std::string::npos);
    CHECK(parse_error(R"({"kind": "family", "seed": 1, "speed": 3})").find("unknown key 'speed'") !=
          std::string::npos);
    CHECK(parse_error(R"({"kind": "family", "seed": 1,
                          "params": {"vroom": 1}})").find("unknown key 'vroom'") !=
          std::string::npos);
    CHECK(parse_error(R"({"kind": "family", "seed": 1, "times": "soon"})").find("'times'") !=
          std::string::npos);
    CHECK(parse_error(R"({"kind": "family", "seed": -4})").find("'seed'") != std::string::npos);
    CHECK(parse_error(R"({"kind": "verify", "seed": 1, "only": [1, "two"]})")
              .find("'only'") != std::string::npos);
}

TEST_CASE("semantic validation runs at parse time") {
    const std::string supercritical = R"({
      "kind": "fluctuations", "seed": 1, "replicas": 40, "grid": [1.0],
      "tests": [{}], "params": {"q": 0.7}
    })";
    CHECK(parse_error(supercritical).find("q must be < 1/2") != std::string::npos);

    const std::string no_grid = R"({
      "kind": "fluctuations", "seed": 1, "replicas": 40, "tests": [{}]
    })";
    CHECK(parse_error(no_grid).find("requires 'grid'") != std::string::npos);

    const std::string bad_bump = R"({
      "kind": "fluctuations", "seed": 1, "replicas": 40, "grid": [1.0],
      "tests": [{"w": -1.0}]
    })";
    CHECK(parse_error(bad_bump).find("w must be > 0") != std::string::npos);
}

TEST_CASE("schema is valid JSON and documents every top-level key") {
    const std::string s = config_schema();
    for (const char* key : {"\"kind\"", "\"seed\"", "\"params\"", "\"tests\"", "\"grid\"",
                            "\"replicas\"", "\"centering\"", "\"x0\"", "\"times\"", "\"chi\"",
                            "\"only\"", "\"out_dir\"", "\"threads\""}) {
        CHECK(s.find(key) != std::string::npos);
    }
    CHECK(s.find("fluctuations") != std::string::npos);
}

TEST_CASE("shortest-round-trip doubles") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5e-7) == "-2.5e-07");
    const double third = 1.0 / 3.0;
    CHECK(std::stod(format_double(third)) == third);
    const double pi = 3.141592653589793;
    CHECK(std::stod(format_double(pi)) == pi);
}

TEST_CASE("csv serialization") {
    OccupationSample s;
    s.T = 2.0;
    s.grid = {0.5, 1.0};
    s.tests = {GaussianBump{}};
    s.n_replicas = 2;
    s.values = {1.5, -0.25, 0.125, 3.0};
    const std::string csv = occupation_csv(s);
    CHECK(csv ==
          "replica,t,phi_index,value\n"
          "0,0.5,0,1.5\n"
          "0,1,0,-0.25\n"
          "1,0.5,0,0.125\n"
          "1,1,0,3\n");

    FamilyStats f;
    f.times = {1.0, 2.0};
    f.mass = {3, 0};
    const std::string fam = family_csv({f});
    CHECK(fam ==
          "replica,time,mass\n"
          "0,1,3\n"
          "0,2,0\n");
}

TEST_CASE("experiments write deterministic artifacts") {
    namespace fs = std::filesystem;
    const std::string dir_a = "cfg_artifacts_a";
    const std::string dir_b = "cfg_artifacts_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    const char* family = R"({
      "kind": "family", "seed": 77, "replicas": 60, "times": [0.5, 1.0],
      "params": {"T": 1.0}
    })";

    ExperimentConfig cfg = parse_config(family);
    cfg.out_dir = dir_a;
    const RunResult a = run_experiment(cfg);
    cfg.out_dir = dir_b;
    const RunResult b = run_experiment(cfg);

    REQUIRE(a.artifacts.size() == 3);  // csv, summary json, manifest
    CHECK(a.artifacts.back().find(".manifest.json") != std::string::npos);
    for (const std::string& p : a.artifacts) CHECK(fs::exists(p));

    const std::string csv_a = read_file(a.artifacts[0]);
    const std::string csv_b = read_file(b.artifacts[0]);
    CHECK(csv_a == csv_b);
    CHECK(csv_a.substr(0, 18) == "replica,time,mass\n");

    // artifact names carry the config hash, which ignores out_dir? they must
    // differ across out_dir only in the directory part
    CHECK(fs::path(a.artifacts[0]).filename() != fs::path(b.artifacts[0]).filename());
}

TEST_CASE("fluctuations experiment summarizes per-column moments") {
    namespace fs = std::filesystem;
    const std::string dir = "cfg_artifacts_fluct";
    fs::remove_all(dir);
    ExperimentConfig cfg = parse_config(kFluctuations);
    cfg.out_dir = dir;
    const RunResult r = run_experiment(cfg);
    REQUIRE(r.artifacts.size() == 3);
    const std::string summary = read_file(r.artifacts[1]);
    CHECK(summary.find("\"variance\"") != std::string::npos);
    const std::string csv = read_file(r.artifacts[0]);
    CHECK(csv.rfind("replica,t,phi_index,value\n", 0) == 0);
}

TEST_CASE("veqn experiment reports the laplace identity inputs") {
    namespace fs = std::filesystem;
    const std::string dir = "cfg_artifacts_veqn";
    fs::remove_all(dir);
    const char* veqn = R"({
      "kind": "veqn", "seed": 3, "tests": [{}],
      "params": {"H": 0.5, "L": 1.0, "T": 4.0}
    })";
    ExperimentConfig cfg = parse_config(veqn);
    cfg.out_dir = dir;
    const RunResult r = run_experiment(cfg);
    REQUIRE(r.artifacts.size() == 3);
    const std::string csv = read_file(r.artifacts[0]);
    CHECK(csv.rfind("x,tau,v,v_tilde,u\n", 0) == 0);
    const std::string summary = read_file(r.artifacts[1]);
    CHECK(summary.find("\"K\"") != std::string::npos);
    CHECK(summary.find("\"u_bound_constant\"") != std::string::npos);
}

}  // TEST_SUITE
