#include "occuflux/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace occuflux {

namespace {

struct CovCore {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> mean;
    std::vector<double> S;  // unbiased covariance
    std::vector<double> se; // delete-one jackknife
};

// Jackknife via the exact leave-one-out update
//   S_(r) = (A - n/(n-1) d_r d_r^T) / (n - 2),  d_r = x_r - mean,
// which keeps the whole computation at two passes over the rows.
CovCore cov_core(const std::vector<double>& rows, std::size_t n, std::size_t p) {
    if (n < 30) {
        throw std::invalid_argument("covariance estimation requires at least 30 replicas");
    }
    CovCore c;
    c.n = n;
    c.p = p;
    c.mean.assign(p, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = rows.data() + r * p;
        for (std::size_t k = 0; k < p; ++k) c.mean[k] += row[k];
    }
    for (double& m : c.mean) m /= static_cast<double>(n);

    std::vector<double> A(p * p, 0.0);
    std::vector<double> d(p);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = rows.data() + r * p;
        for (std::size_t k = 0; k < p; ++k) d[k] = row[k] - c.mean[k];
        for (std::size_t k = 0; k < p; ++k) {
            for (std::size_t l = k; l < p; ++l) A[k * p + l] += d[k] * d[l];
        }
    }
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t l = 0; l < k; ++l) A[k * p + l] = A[l * p + k];
    }
    c.S.resize(p * p);
    for (std::size_t i = 0; i < p * p; ++i) c.S[i] = A[i] / static_cast<double>(n - 1);

    const double cfac = static_cast<double>(n) / static_cast<double>(n - 1);
    const double denom = static_cast<double>(n - 2);
    std::vector<double> acc1(p * p, 0.0), acc2(p * p, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = rows.data() + r * p;
        for (std::size_t k = 0; k < p; ++k) d[k] = row[k] - c.mean[k];
        for (std::size_t k = 0; k < p; ++k) {
            for (std::size_t l = k; l < p; ++l) {
                const double s = (A[k * p + l] - cfac * d[k] * d[l]) / denom;
                acc1[k * p + l] += s;
                acc2[k * p + l] += s * s;
            }
        }
    }
    c.se.resize(p * p);
    const double nr = static_cast<double>(n);
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t l = k; l < p; ++l) {
            const std::size_t kl = k * p + l;
            const double var = (nr - 1.0) / nr * (acc2[kl] - acc1[kl] * acc1[kl] / nr);
            c.se[kl] = std::sqrt(std::max(0.0, var));
            c.se[l * p + k] = c.se[kl];
        }
    }
    return c;
}

CovReport finish_report(CovCore c, const std::vector<double>& theory,
                        const std::vector<double>& grid, std::size_t n_tests) {
    CovReport rep;
    rep.n = c.n;
    rep.p = c.p;
    rep.grid = grid;
    rep.n_tests = n_tests;
    rep.mean = std::move(c.mean);
    rep.est = std::move(c.S);
    rep.se = std::move(c.se);
    if (!theory.empty()) {
        if (theory.size() != rep.p * rep.p) {
            throw std::invalid_argument("estimate_cov: theory matrix has the wrong shape");
        }
        rep.theory = theory;
        rep.z.resize(rep.p * rep.p);
        for (std::size_t i = 0; i < rep.p * rep.p; ++i) {
            rep.z[i] = rep.se[i] > 0.0 ? (rep.est[i] - theory[i]) / rep.se[i] : 0.0;
            rep.max_abs_z = std::max(rep.max_abs_z, std::abs(rep.z[i]));
        }
    }
    return rep;
}

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }

// P(sup_t |B(t)| > x) for the Brownian bridge: 2 sum (-1)^{k-1} e^{-2 k^2 x^2}.
double ks_tail(double x) {
    if (x < 0.05) return 1.0;
    double s = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 1000; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += sign * term;
        sign = -sign;
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

CovReport estimate_cov(const OccupationSample& sample, const std::vector<double>& theory,
                       std::size_t n_use) {
    const std::size_t p = sample.grid.size() * sample.tests.size();
    if (p == 0) throw std::invalid_argument("estimate_cov: sample has no columns");
    if (n_use == 0) n_use = sample.n_replicas;
    if (n_use > sample.n_replicas) {
        throw std::invalid_argument("estimate_cov: n_use exceeds the replica count");
    }
    std::vector<double> rows(n_use * p);
    std::copy_n(sample.values.begin(), n_use * p, rows.begin());
    return finish_report(cov_core(rows, n_use, p), theory, sample.grid, sample.tests.size());
}

CovReport estimate_cov_pooled(const std::vector<const OccupationSample*>& samples,
                              const std::vector<double>& theory) {
    if (samples.empty() || samples.front() == nullptr) {
        throw std::invalid_argument("estimate_cov_pooled: no samples");
    }
    const OccupationSample& first = *samples.front();
    const std::size_t p = first.grid.size() * first.tests.size();
    if (p == 0) throw std::invalid_argument("estimate_cov_pooled: sample has no columns");
    std::size_t n = 0;
    for (const OccupationSample* s : samples) {
        if (s == nullptr) throw std::invalid_argument("estimate_cov_pooled: null sample");
        if (s->grid != first.grid || s->tests.size() != first.tests.size() || s->T != first.T) {
            throw std::invalid_argument("estimate_cov_pooled: samples have mismatched shapes");
        }
        n += s->n_replicas;
    }
    std::vector<double> rows;
    rows.reserve(n * p);
    for (const OccupationSample* s : samples) {
        rows.insert(rows.end(), s->values.begin(),
                    s->values.begin() + static_cast<std::ptrdiff_t>(s->n_replicas * p));
    }
    return finish_report(cov_core(rows, n, p), theory, first.grid, first.tests.size());
}

TestReport ks_normality(std::span<const double> xs, double alpha) {
    const std::size_t n = xs.size();
    if (n < 100) throw std::invalid_argument("ks_normality requires at least 100 values");
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : xs) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) {
        throw std::invalid_argument("ks_normality: degenerate sample (zero variance)");
    }

    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    double D = 0.0;
    const double nr = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double F = normal_cdf((sorted[i] - mean) / sd);
        D = std::max(D, F - static_cast<double>(i) / nr);
        D = std::max(D, static_cast<double>(i + 1) / nr - F);
    }
    const double p = ks_tail(std::sqrt(nr) * D);

    TestReport rep;
    rep.test = "ks_normality";
    rep.statistic = D;
    rep.p_or_z = p;
    rep.pass = p >= alpha;
    rep.details = "n=" + std::to_string(n) + " mean=" + fmt(mean) + " sd=" + fmt(sd) +
                  " sqrt_n_D=" + fmt(std::sqrt(nr) * D);
    return rep;
}

TestReport increments_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("increments_test: size mismatch");
    const std::size_t n = a.size();
    if (n < 30) throw std::invalid_argument("increments_test requires at least 30 pairs");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) {
        throw std::invalid_argument("increments_test: degenerate input (zero variance)");
    }
    double r = sab / std::sqrt(saa * sbb);
    r = std::clamp(r, -1.0 + 1e-15, 1.0 - 1e-15);
    const double z = std::atanh(r);
    const double se = 1.0 / std::sqrt(static_cast<double>(n - 3));
    const double zstat = z / se;
    const double zc = 2.5758293035489004;  // two-sided 99%

    TestReport rep;
    rep.test = "increments_independence";
    rep.statistic = r;
    rep.p_or_z = zstat;
    rep.pass = std::abs(zstat) <= zc;
    rep.details = "n=" + std::to_string(n) + " ci=[" + fmt(std::tanh(z - zc * se)) + "," +
                  fmt(std::tanh(z + zc * se)) + "]";
    return rep;
}

TestReport min_st_test(const OccupationSample& sample, std::size_t test_index,
                       double kappa_target, std::size_t n_use) {
    const std::size_t ng = sample.grid.size();
    const std::size_t nt = sample.tests.size();
    if (test_index >= nt) throw std::invalid_argument("min_st_test: test index out of range");
    if (ng < 3) throw std::invalid_argument("min_st_test needs at least three grid points");
    std::size_t n = sample.n_replicas;
    if (n_use != 0 && n_use < n) n = n_use;
    if (n < 30) throw std::invalid_argument("min_st_test requires at least 30 replicas");

    // Centered columns of the selected test block.
    std::vector<double> mean(ng, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < ng; ++i) mean[i] += sample.value(r, i, test_index);
    }
    for (double& m : mean) m /= static_cast<double>(n);
    std::vector<double> D(n * ng);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < ng; ++i) {
            D[r * ng + i] = sample.value(r, i, test_index) - mean[i];
        }
    }

    // Off-diagonal upper-triangle cells, m_c = min(s, t).
    const std::size_t nc = ng * (ng - 1) / 2;
    std::vector<std::size_t> ci(nc), cj(nc);
    std::vector<double> m(nc);
    double den = 0.0;
    {
        std::size_t c = 0;
        for (std::size_t i = 0; i < ng; ++i) {
            for (std::size_t j = i + 1; j < ng; ++j, ++c) {
                ci[c] = i;
                cj[c] = j;
                m[c] = std::min(sample.grid[i], sample.grid[j]);
                den += m[c] * m[c];
            }
        }
    }
    if (!(den > 0.0)) throw std::invalid_argument("min_st_test: degenerate time grid");

    std::vector<double> A(nc, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* d = D.data() + r * ng;
        for (std::size_t c = 0; c < nc; ++c) A[c] += d[ci[c]] * d[cj[c]];
    }
    std::vector<double> est(nc);
    double num = 0.0;
    for (std::size_t c = 0; c < nc; ++c) {
        est[c] = A[c] / static_cast<double>(n - 1);
        num += m[c] * est[c];
    }
    const double kappa_hat = num / den;

    // Delete-one jackknife of the fitted kappa itself (the cells share
    // replicas, so per-cell errors cannot just be added up), and of each cell
    // for the residual gate, via the same leave-one-out update as cov_core.
    const double cfac = static_cast<double>(n) / static_cast<double>(n - 1);
    const double denom = static_cast<double>(n - 2);
    double numA = 0.0;
    for (std::size_t c = 0; c < nc; ++c) numA += m[c] * A[c];
    double ks1 = 0.0, ks2 = 0.0;
    std::vector<double> acc1(nc, 0.0), acc2(nc, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* d = D.data() + r * ng;
        double q = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const double prod = d[ci[c]] * d[cj[c]];
            q += m[c] * prod;
            const double s = (A[c] - cfac * prod) / denom;
            acc1[c] += s;
            acc2[c] += s * s;
        }
        const double kr = (numA - cfac * q) / (denom * den);
        ks1 += kr;
        ks2 += kr * kr;
    }
    const double nr = static_cast<double>(n);
    const double kse = std::sqrt(std::max(0.0, (nr - 1.0) / nr * (ks2 - ks1 * ks1 / nr)));
    std::vector<double> se(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        se[c] = std::sqrt(
            std::max(0.0, (nr - 1.0) / nr * (acc2[c] - acc1[c] * acc1[c] / nr)));
    }

    double z = 0.0;
    bool kappa_ok = true;
    if (kse > 0.0) {
        z = (kappa_hat - kappa_target) / kse;
        kappa_ok = std::abs(z) <= 3.0;
    } else {
        kappa_ok = std::abs(kappa_hat - kappa_target) <= 1e-9 * std::max(1.0, std::abs(kappa_target));
        z = kappa_ok ? 0.0 : std::numeric_limits<double>::infinity();
    }

    double max_cell_z = 0.0;
    bool cells_ok = true;
    for (std::size_t c = 0; c < nc; ++c) {
        const double res = est[c] - kappa_hat * m[c];
        if (se[c] > 0.0) {
            max_cell_z = std::max(max_cell_z, std::abs(res) / se[c]);
        } else if (std::abs(res) > 1e-9 * std::max(1.0, std::abs(kappa_hat))) {
            cells_ok = false;
        }
    }
    cells_ok = cells_ok && max_cell_z <= 3.0;

    TestReport rep;
    rep.test = "min_st_fit";
    rep.statistic = kappa_hat;
    rep.p_or_z = z;
    rep.pass = kappa_ok && cells_ok;
    rep.details = "kappa_se=" + fmt(kse) + " target=" + fmt(kappa_target) +
                  " max_cell_z=" + fmt(max_cell_z) + " n=" + std::to_string(n);
    return rep;
}

}  // namespace occuflux
