#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace occuflux {

// One verification gate of the statistical/numerical contract. Gates are
// numbered stably so reports can be compared across runs.
struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 20260819;  // every batch seed derives from this
    int threads = 0;                // forwarded to the simulator
    std::vector<int> only;          // 1-based criterion filter; empty = all
    std::ostream* progress = nullptr;
};

// Runs the verification suite (ten criteria: simulator laws, limit-covariance
// matching, Gaussianity, increment independence, quadrature-vs-oracle
// agreement, v-equation and Laplace-functional cross checks, spectral
// classification, assumption checkers). Heavy replica batches are simulated
// once and shared between criteria. Exceptions inside a criterion mark it
// failed with the message in `detail`; they never abort the suite.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

bool all_passed(const std::vector<CriterionResult>& results);

// "criterion  7 [PASS] v-equation vs Monte Carlo | ..." (one line, no \n).
std::string acceptance_line(const CriterionResult& r);

}  // namespace occuflux
