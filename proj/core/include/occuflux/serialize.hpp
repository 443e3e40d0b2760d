#pragma once

#include <string>
#include <vector>

#include "occuflux/analytics.hpp"
#include "occuflux/simulator.hpp"
#include "occuflux/stats.hpp"
#include "occuflux/veqn.hpp"

namespace occuflux {

// Shortest decimal rendering that round-trips to the same double, so repeated
// runs of the same configuration produce byte-identical files.
std::string format_double(double v);

// Rows replica,t,phi_index,value in replica-major order, header included.
std::string occupation_csv(const OccupationSample& s);

// Rows replica,time,mass for a batch of single-ancestor families.
std::string family_csv(const std::vector<FamilyStats>& fams);

// Rows x,tau,v,v_tilde,u in time-major order.
std::string vgrid_csv(const VGrid& g);

// {"test": ..., "statistic": ..., "p_or_z": ..., "pass": ..., "details": ...}
std::string report_json(const TestReport& r);

std::string assumption_json(const AssumptionReport& r);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace occuflux
