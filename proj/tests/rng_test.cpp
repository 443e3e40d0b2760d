#include <cmath>
#include <vector>

#include "doctest.h"
#include "occuflux/rng.hpp"

using namespace occuflux;

TEST_SUITE("rng") {

TEST_CASE("streams are reproducible") {
    RngStream a(123, 7), b(123, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("distinct streams decorrelate even for adjacent seeds") {
    RngStream a(123, 0), b(123, 1), c(124, 0);
    int equal_ab = 0, equal_ac = 0;
    for (int i = 0; i < 64; ++i) {
        const double ua = a.uniform(), ub = b.uniform(), uc = c.uniform();
        equal_ab += (ua == ub);
        equal_ac += (ua == uc);
    }
    CHECK(equal_ab == 0);
    CHECK(equal_ac == 0);
    CHECK(mix_seed(0, 0) != mix_seed(0, 1));
    CHECK(mix_seed(0, 0) != mix_seed(1, 0));
}

TEST_CASE("moments of the basic draws") {
    RngStream r(2024, 0);
    const int n = 200000;
    double su = 0, se = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        su += u;
        se += r.exponential(2.0);
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
    }
    // 4-sigma bands at n = 2e5
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(se / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(std::abs(sn / n) <= 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("poisson mean") {
    RngStream r(55, 3);
    double s = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) s += static_cast<double>(r.poisson(3.5));
    CHECK(s / n == doctest::Approx(3.5).epsilon(0.01));
}

}  // TEST_SUITE
