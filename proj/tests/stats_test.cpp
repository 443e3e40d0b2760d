#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "occuflux/rng.hpp"
#include "occuflux/stats.hpp"

using namespace occuflux;

namespace {

OccupationSample make_sample(std::size_t n, std::size_t n_grid, std::size_t n_tests) {
    OccupationSample s;
    s.T = 1.0;
    s.grid.resize(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i)
        s.grid[i] = static_cast<double>(i + 1) / static_cast<double>(n_grid);
    s.tests.assign(n_tests, GaussianBump{});
    s.n_replicas = n;
    s.values.assign(n * n_grid * n_tests, 0.0);
    return s;
}

// Correlated pair (x, y) with Cov = [[2, 0.6], [0.6, 1]].
void fill_gaussian_pair(OccupationSample& s, std::uint64_t seed) {
    RngStream rng(seed, 0);
    const double l11 = std::sqrt(2.0);
    const double l21 = 0.6 / l11;
    const double l22 = std::sqrt(1.0 - l21 * l21);
    for (std::size_t r = 0; r < s.n_replicas; ++r) {
        const double z1 = rng.normal(), z2 = rng.normal();
        s.values[s.idx(r, 0, 0)] = l11 * z1;
        s.values[s.idx(r, 1, 0)] = l21 * z1 + l22 * z2;
    }
}

// Rows come in +/- pairs (mean exactly zero), each direction repeated `reps`
// times with a scale chosen so the unbiased covariance of test block `index`
// is exactly sum_k w_k dir_k dir_k^T on the grid {0.25, 0.5, 0.75, 1}.
OccupationSample signed_pair_sample(const std::vector<std::vector<double>>& dirs,
                                    const std::vector<double>& weights, std::size_t reps,
                                    std::size_t n_tests = 1, std::size_t index = 0) {
    OccupationSample s = make_sample(dirs.size() * 2 * reps, 4, n_tests);
    s.grid = {0.25, 0.5, 0.75, 1.0};
    const double n1 = static_cast<double>(s.n_replicas - 1);
    std::size_t r = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            const double scale = std::sqrt(weights[k] * n1 / (2.0 * static_cast<double>(reps)));
            for (double sign : {1.0, -1.0}) {
                for (std::size_t i = 0; i < 4; ++i) {
                    s.values[s.idx(r, i, index)] = sign * scale * dirs[k][i];
                }
                ++r;
            }
        }
    }
    return s;
}

// Cholesky columns of the min(s,t) kernel on {0.25, 0.5, 0.75, 1}: the k-th
// direction is sqrt(dt) on entries k.. and zero before.
const std::vector<std::vector<double>> kMinDirs = {
    {0.5, 0.5, 0.5, 0.5}, {0.0, 0.5, 0.5, 0.5}, {0.0, 0.0, 0.5, 0.5}, {0.0, 0.0, 0.0, 0.5}};

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("covariance estimate matches a naive two-pass reimplementation") {
    OccupationSample s = make_sample(40, 2, 1);
    RngStream rng(11, 0);
    for (double& v : s.values) v = rng.uniform(-1.0, 1.0) + 0.2 * rng.normal();

    const CovReport rep = estimate_cov(s);
    REQUIRE(rep.p == 2);
    REQUIRE(rep.n == 40);

    const std::size_t n = 40, p = 2;
    auto cov_of = [&](const std::vector<std::size_t>& rows, std::size_t a, std::size_t b) {
        double ma = 0, mb = 0;
        for (std::size_t r : rows) {
            ma += s.values[s.idx(r, a, 0)];
            mb += s.values[s.idx(r, b, 0)];
        }
        ma /= static_cast<double>(rows.size());
        mb /= static_cast<double>(rows.size());
        double acc = 0;
        for (std::size_t r : rows)
            acc += (s.values[s.idx(r, a, 0)] - ma) * (s.values[s.idx(r, b, 0)] - mb);
        return acc / static_cast<double>(rows.size() - 1);
    };

    std::vector<std::size_t> all(n);
    for (std::size_t r = 0; r < n; ++r) all[r] = r;

    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
            CHECK(rep.est[rep.at(a, b)] == doctest::Approx(cov_of(all, a, b)).epsilon(1e-12));

            // delete-one jackknife, assembled naively
            std::vector<double> loo;
            for (std::size_t drop = 0; drop < n; ++drop) {
                std::vector<std::size_t> rows;
                for (std::size_t r = 0; r < n; ++r)
                    if (r != drop) rows.push_back(r);
                loo.push_back(cov_of(rows, a, b));
            }
            double lm = 0;
            for (double v : loo) lm += v;
            lm /= static_cast<double>(n);
            double acc = 0;
            for (double v : loo) acc += (v - lm) * (v - lm);
            const double se = std::sqrt((static_cast<double>(n - 1) / n) * acc);
            CHECK(rep.se[rep.at(a, b)] == doctest::Approx(se).epsilon(1e-9));
        }
    }
}

TEST_CASE("covariance and jackknife errors on correlated gaussians") {
    OccupationSample s = make_sample(20000, 2, 1);
    fill_gaussian_pair(s, 314);
    const std::vector<double> theory{2.0, 0.6, 0.6, 1.0};
    const CovReport rep = estimate_cov(s, theory);
    CHECK(rep.max_abs_z <= 3.5);

    // large-sample magnitudes of the jackknife errors for gaussian data
    CHECK(rep.se[rep.at(0, 0)] == doctest::Approx(std::sqrt(2.0 / 20000.0) * 2.0).epsilon(0.1));
    CHECK(rep.se[rep.at(0, 1)] ==
          doctest::Approx(std::sqrt((2.0 * 1.0 + 0.36) / 20000.0)).epsilon(0.1));
}

TEST_CASE("duplicating every replica rescales the estimate by 2(n-1)/(2n-1)") {
    OccupationSample s = make_sample(200, 2, 1);
    fill_gaussian_pair(s, 2024);

    OccupationSample doubled = s;
    doubled.n_replicas = 400;
    doubled.values.insert(doubled.values.end(), s.values.begin(), s.values.end());

    const CovReport a = estimate_cov(s);
    const CovReport b = estimate_cov(doubled);
    const double factor = 2.0 * 199.0 / 399.0;
    for (std::size_t k = 0; k < a.est.size(); ++k)
        CHECK(b.est[k] == doctest::Approx(factor * a.est[k]).epsilon(1e-12));
}

TEST_CASE("estimate is invariant under replica reordering") {
    OccupationSample s = make_sample(500, 2, 1);
    fill_gaussian_pair(s, 99);
    OccupationSample rev = s;
    for (std::size_t r = 0; r < 500; ++r)
        for (std::size_t a = 0; a < 2; ++a)
            rev.values[rev.idx(499 - r, a, 0)] = s.values[s.idx(r, a, 0)];

    const CovReport x = estimate_cov(s);
    const CovReport y = estimate_cov(rev);
    for (std::size_t k = 0; k < x.est.size(); ++k) {
        CHECK(y.est[k] == doctest::Approx(x.est[k]).epsilon(1e-11));
        CHECK(y.se[k] == doctest::Approx(x.se[k]).epsilon(1e-9));
    }
}

TEST_CASE("jackknife error shrinks like 1/sqrt(n)") {
    OccupationSample small = make_sample(400, 2, 1);
    OccupationSample big = make_sample(1600, 2, 1);
    fill_gaussian_pair(small, 7);
    fill_gaussian_pair(big, 7);
    const CovReport a = estimate_cov(small);
    const CovReport b = estimate_cov(big);
    const double ratio = b.se[b.at(0, 0)] / a.se[a.at(0, 0)];
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("subsetting and pooling") {
    OccupationSample s = make_sample(80, 1, 1);
    RngStream rng(5, 0);
    for (double& v : s.values) v = rng.normal();

    SUBCASE("n_use keeps the leading replicas") {
        OccupationSample head = s;
        head.n_replicas = 40;
        head.values.assign(s.values.begin(), s.values.begin() + 40);
        const CovReport a = estimate_cov(s, {}, 40);
        const CovReport b = estimate_cov(head);
        CHECK(a.n == 40);
        CHECK(a.est[0] == b.est[0]);
        CHECK(a.se[0] == b.se[0]);
    }
    SUBCASE("pooling concatenates replicas") {
        OccupationSample t = make_sample(80, 1, 1);
        for (double& v : t.values) v = rng.normal();
        OccupationSample manual = make_sample(160, 1, 1);
        std::copy(s.values.begin(), s.values.end(), manual.values.begin());
        std::copy(t.values.begin(), t.values.end(), manual.values.begin() + 80);

        const CovReport pooled = estimate_cov_pooled({&s, &t});
        const CovReport direct = estimate_cov(manual);
        CHECK(pooled.n == 160);
        CHECK(pooled.est[0] == doctest::Approx(direct.est[0]).epsilon(1e-14));
    }
    SUBCASE("pooling rejects mismatched designs") {
        OccupationSample other = make_sample(80, 2, 1);
        CHECK_THROWS_AS((estimate_cov_pooled({&s, &other})), std::invalid_argument);
    }
}

TEST_CASE("covariance guards") {
    OccupationSample tiny = make_sample(10, 1, 1);
    CHECK_THROWS_AS(estimate_cov(tiny), std::invalid_argument);

    OccupationSample s = make_sample(40, 1, 1);
    const std::vector<double> wrong_shape{1.0, 2.0};
    CHECK_THROWS_AS(estimate_cov(s, wrong_shape), std::invalid_argument);
}

TEST_CASE("ks test accepts gaussian data and rejects exponential data") {
    RngStream rng(123, 0);
    std::vector<double> normal(5000), expo(5000);
    for (double& v : normal) v = 2.0 + 0.7 * rng.normal();
    for (double& v : expo) v = rng.exponential(1.0);

    const TestReport ok = ks_normality(normal);
    CHECK(ok.pass);
    CHECK(ok.p_or_z >= 0.01);
    CHECK(ok.statistic > 0.0);
    CHECK(ok.test == "ks_normality");

    const TestReport bad = ks_normality(expo);
    CHECK_FALSE(bad.pass);
    CHECK(bad.p_or_z < 1e-8);

    std::vector<double> few(50, 0.0);
    CHECK_THROWS_AS(ks_normality(few), std::invalid_argument);
    std::vector<double> flat(200, 3.0);
    CHECK_THROWS_AS(ks_normality(flat), std::invalid_argument);
}

TEST_CASE("increment correlation test") {
    RngStream rng(55, 0);
    const std::size_t n = 5000;
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
        c[i] = 0.12 * a[i] + std::sqrt(1.0 - 0.12 * 0.12) * rng.normal();
    }
    const TestReport indep = increments_test(a, b);
    CHECK(indep.pass);
    CHECK(std::abs(indep.p_or_z) < 2.5758293035489004);
    CHECK(indep.test == "increments_independence");

    const TestReport corr = increments_test(a, c);
    CHECK_FALSE(corr.pass);
    CHECK(std::abs(corr.p_or_z) > 2.5758293035489004);
}

TEST_CASE("min(s,t) surface fit") {
    SUBCASE("exact surface passes and recovers kappa") {
        const OccupationSample s = signed_pair_sample(kMinDirs, {7.5, 7.5, 7.5, 7.5}, 50);
        const TestReport r = min_st_test(s, 0, 7.5);
        CHECK(r.pass);
        CHECK(r.statistic == doctest::Approx(7.5).epsilon(1e-12));
        CHECK(std::abs(r.p_or_z) <= 1e-9);
    }
    SUBCASE("wrong target fails") {
        const OccupationSample s = signed_pair_sample(kMinDirs, {7.5, 7.5, 7.5, 7.5}, 50);
        const TestReport r = min_st_test(s, 0, 9.0);
        CHECK_FALSE(r.pass);
        CHECK(r.p_or_z < -3.0);
    }
    SUBCASE("product surface s*t is flagged") {
        const OccupationSample s = signed_pair_sample({{0.25, 0.5, 0.75, 1.0}}, {7.5}, 50);
        const TestReport r = min_st_test(s, 0, 7.5);
        CHECK_FALSE(r.pass);
    }
    SUBCASE("a single corrupted cell is caught") {
        // min surface plus a rank-one bump on (t1, t4): shifts that one
        // off-diagonal cell (and two diagonal cells the fit never reads).
        std::vector<std::vector<double>> dirs = kMinDirs;
        dirs.push_back({1.0, 0.0, 0.0, 1.0});
        const OccupationSample s = signed_pair_sample(dirs, {7.5, 7.5, 7.5, 7.5, 0.8}, 50);
        CHECK_FALSE(min_st_test(s, 0, 7.5).pass);
    }
    SUBCASE("selects the requested test-function block") {
        OccupationSample s = signed_pair_sample(kMinDirs, {7.5, 7.5, 7.5, 7.5}, 50, 2, 1);
        RngStream junk(99, 0);
        for (std::size_t r = 0; r < s.n_replicas; ++r) {
            for (std::size_t i = 0; i < 4; ++i) {
                s.values[s.idx(r, i, 0)] = 1000.0 * junk.normal();
            }
        }
        const TestReport r = min_st_test(s, 1, 7.5);
        CHECK(r.pass);
        CHECK(r.statistic == doctest::Approx(7.5).epsilon(1e-12));
    }
    SUBCASE("standard error matches a brute-force delete-one jackknife") {
        const std::size_t n = 60;
        OccupationSample s = make_sample(n, 4, 1);
        RngStream rng(1234, 0);
        const double load[4] = {0.5, 0.8, 1.1, 1.4};
        for (std::size_t r = 0; r < n; ++r) {
            const double shared = rng.normal();
            for (std::size_t i = 0; i < 4; ++i) {
                s.values[s.idx(r, i, 0)] = load[i] * shared + rng.normal();
            }
        }

        auto fit = [&](const std::vector<std::size_t>& rows) {
            double mean[4] = {0, 0, 0, 0};
            for (std::size_t r : rows)
                for (std::size_t i = 0; i < 4; ++i) mean[i] += s.value(r, i, 0);
            for (double& m : mean) m /= static_cast<double>(rows.size());
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = i + 1; j < 4; ++j) {
                    double a = 0.0;
                    for (std::size_t r : rows) {
                        a += (s.value(r, i, 0) - mean[i]) * (s.value(r, j, 0) - mean[j]);
                    }
                    const double m = std::min(s.grid[i], s.grid[j]);
                    num += m * a / static_cast<double>(rows.size() - 1);
                    den += m * m;
                }
            }
            return num / den;
        };

        std::vector<std::size_t> all(n);
        for (std::size_t r = 0; r < n; ++r) all[r] = r;
        const double kappa_full = fit(all);
        std::vector<double> loo(n);
        for (std::size_t r = 0; r < n; ++r) {
            std::vector<std::size_t> rows;
            for (std::size_t k = 0; k < n; ++k)
                if (k != r) rows.push_back(k);
            loo[r] = fit(rows);
        }
        double lm = 0.0;
        for (double v : loo) lm += v;
        lm /= static_cast<double>(n);
        double acc = 0.0;
        for (double v : loo) acc += (v - lm) * (v - lm);
        const double se_brute = std::sqrt((static_cast<double>(n) - 1.0) /
                                          static_cast<double>(n) * acc);

        // target 0 makes p_or_z = kappa_hat / se, so the se is recoverable.
        const TestReport r = min_st_test(s, 0, 0.0);
        CHECK(r.statistic == doctest::Approx(kappa_full).epsilon(1e-12));
        CHECK(r.statistic / r.p_or_z == doctest::Approx(se_brute).epsilon(1e-9));
    }
    SUBCASE("needs at least three grid points") {
        const OccupationSample s = make_sample(40, 2, 1);
        CHECK_THROWS_AS(min_st_test(s, 0, 7.5), std::invalid_argument);
    }
    SUBCASE("test index out of range throws") {
        const OccupationSample s = make_sample(40, 4, 1);
        CHECK_THROWS_AS(min_st_test(s, 1, 7.5), std::invalid_argument);
    }
    SUBCASE("too few replicas throw") {
        const OccupationSample s = make_sample(20, 4, 1);
        CHECK_THROWS_AS(min_st_test(s, 0, 7.5), std::invalid_argument);
    }
}

}  // TEST_SUITE
