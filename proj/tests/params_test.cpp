#include <string>

#include "doctest.h"
#include "occuflux/params.hpp"

using namespace occuflux;

namespace {

bool throws_with(SystemParams p, const std::string& fragment) {
    try {
        validate_params(p);
    } catch (const std::invalid_argument& e) {
        return std::string(e.what()).find(fragment) != std::string::npos;
    }
    return false;
}

}  // namespace

TEST_SUITE("params") {

TEST_CASE("derived fields are filled") {
    SystemParams p;
    p.V = 1.0;
    p.q = 0.25;
    p.T = 100.0;
    const SystemParams v = validate_params(p);
    CHECK(v.Q == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(v.F_T == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("validation is idempotent") {
    SystemParams p;
    p.V = 2.0;
    p.q = 0.1;
    p.T = 9.0;
    const SystemParams once = validate_params(p);
    const SystemParams twice = validate_params(once);
    CHECK(once.Q == twice.Q);
    CHECK(once.F_T == twice.F_T);
}

TEST_CASE("inconsistent provided derivations are rejected") {
    SystemParams p;
    p.Q = 0.3;  // disagrees with V(1-2q) = 0.5
    CHECK(throws_with(p, "Q disagrees"));
    SystemParams f;
    f.T = 4.0;
    f.F_T = 3.0;  // sqrt(4) = 2
    CHECK(throws_with(f, "F_T disagrees"));
}

TEST_CASE("supercritical branching is rejected with a precise message") {
    SystemParams p;
    p.q = 0.7;
    CHECK(throws_with(p, "q must be < 1/2"));
    p.q = 0.5;
    CHECK(throws_with(p, "q must be < 1/2"));
    p.q = -0.1;
    CHECK(throws_with(p, "q must be >= 0"));
}

TEST_CASE("range checks") {
    SystemParams p;
    p.V = 0.0;
    CHECK(throws_with(p, "V must be > 0"));
    SystemParams h;
    h.H = -1.0;
    CHECK(throws_with(h, "H must be >= 0"));
    SystemParams t;
    t.T = 0.0;
    CHECK(throws_with(t, "T must be > 0"));
    SystemParams b;
    b.box_radius = -2.0;
    CHECK(throws_with(b, "box_radius"));
}

TEST_CASE("motion dimension follows d unless explicitly contradicted") {
    SystemParams p;
    p.d = 2;
    p.motion.d = 1;  // unspecified in configs; promoted to d
    const SystemParams v = validate_params(p);
    CHECK(v.motion.d == 2);

    SystemParams bad;
    bad.d = 2;
    bad.motion.d = 3;
    CHECK(throws_with(bad, "motion dimension disagrees"));
}

}  // TEST_SUITE
