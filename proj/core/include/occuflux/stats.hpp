#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "occuflux/simulator.hpp"

namespace occuflux {

// Unbiased covariance of the replica vectors (one row per replica, one column
// per (t_i, phi_j) pair) with delete-one jackknife standard errors, and
// z-scores against a theory matrix when one is supplied. Pure: the result
// depends only on the multiset of replica rows.
struct CovReport {
    std::size_t n = 0;        // replicas used
    std::size_t p = 0;        // columns = grid points x tests
    std::vector<double> grid;
    std::size_t n_tests = 0;
    std::vector<double> mean;    // p
    std::vector<double> est;     // p x p, row-major
    std::vector<double> se;      // p x p jackknife standard errors
    std::vector<double> theory;  // p x p, empty when not supplied
    std::vector<double> z;       // (est - theory) / se, empty when no theory
    double max_abs_z = 0.0;

    std::size_t at(std::size_t a, std::size_t b) const { return a * p + b; }
};

// n_use = 0 uses every replica; otherwise the first n_use (at least 30 either
// way). theory must be empty or p x p.
CovReport estimate_cov(const OccupationSample& sample, const std::vector<double>& theory = {},
                       std::size_t n_use = 0);

// Pools replica batches that share T, grid and tests (e.g. several seeds of
// the same configuration) before estimating.
CovReport estimate_cov_pooled(const std::vector<const OccupationSample*>& samples,
                              const std::vector<double>& theory = {});

// Common verdict record; serialized as {test, statistic, p_or_z, pass, details}.
struct TestReport {
    std::string test;
    double statistic = 0.0;
    double p_or_z = 0.0;
    bool pass = false;
    std::string details;
};

// Kolmogorov-Smirnov distance to the normal with the sample's own mean and
// variance, with the asymptotic p-value at sqrt(n) scaling. Requires n >= 100
// and a nondegenerate sample.
TestReport ks_normality(std::span<const double> xs, double alpha = 0.01);

// Pearson correlation of paired increments with the Fisher z-transform; passes
// when the 99% confidence interval for the correlation contains 0.
TestReport increments_test(std::span<const double> a, std::span<const double> b);

// Least-squares fit of kappa * min(s, t) to the off-diagonal covariance cells
// of one test function across the time grid. Passes when the fitted kappa is
// within 3 standard errors of kappa_target and every off-diagonal cell sits
// within 3 of its own jackknife standard error of the fitted surface. The
// kappa standard error is a delete-one jackknife of the fitted kappa itself,
// so the strong correlation between cells that share replicas is priced in.
// n_use = 0 uses every replica; otherwise the first n_use (at least 30).
TestReport min_st_test(const OccupationSample& sample, std::size_t test_index,
                       double kappa_target, std::size_t n_use = 0);

}  // namespace occuflux
