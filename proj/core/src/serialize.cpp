#include "occuflux/serialize.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <system_error>

#include "json.hpp"

namespace occuflux {

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, p);
}

std::string occupation_csv(const OccupationSample& s) {
    std::string out = "replica,t,phi_index,value\n";
    out.reserve(out.size() + s.values.size() * 24);
    for (std::size_t r = 0; r < s.n_replicas; ++r) {
        for (std::size_t i = 0; i < s.grid.size(); ++i) {
            for (std::size_t j = 0; j < s.tests.size(); ++j) {
                out += std::to_string(r);
                out += ',';
                out += format_double(s.grid[i]);
                out += ',';
                out += std::to_string(j);
                out += ',';
                out += format_double(s.value(r, i, j));
                out += '\n';
            }
        }
    }
    return out;
}

std::string family_csv(const std::vector<FamilyStats>& fams) {
    std::string out = "replica,time,mass\n";
    for (std::size_t r = 0; r < fams.size(); ++r) {
        const FamilyStats& f = fams[r];
        for (std::size_t i = 0; i < f.times.size(); ++i) {
            out += std::to_string(r);
            out += ',';
            out += format_double(f.times[i]);
            out += ',';
            out += std::to_string(f.mass[i]);
            out += '\n';
        }
    }
    return out;
}

std::string vgrid_csv(const VGrid& g) {
    std::string out = "x,tau,v,v_tilde,u\n";
    out.reserve(out.size() + g.v.size() * 48);
    const std::size_t n = g.x.size();
    for (std::size_t k = 0; k < g.tau.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t kl = g.idx(k, i);
            out += format_double(g.x[i]);
            out += ',';
            out += format_double(g.tau[k]);
            out += ',';
            out += format_double(g.v[kl]);
            out += ',';
            out += format_double(g.v_tilde[kl]);
            out += ',';
            out += format_double(g.u.empty() ? 0.0 : g.u[kl]);
            out += '\n';
        }
    }
    return out;
}

std::string report_json(const TestReport& r) {
    nlohmann::ordered_json j;
    j["test"] = r.test;
    j["statistic"] = r.statistic;
    j["p_or_z"] = r.p_or_z;
    j["pass"] = r.pass;
    j["details"] = r.details;
    return j.dump(2) + "\n";
}

std::string assumption_json(const AssumptionReport& r) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const AssumptionCheck& c : r.checks) {
        nlohmann::ordered_json j;
        j["name"] = c.name;
        j["pass"] = c.pass;
        j["value"] = c.value;
        j["error_estimate"] = c.error_estimate;
        j["detail"] = c.detail;
        arr.push_back(std::move(j));
    }
    nlohmann::ordered_json top;
    top["all_pass"] = r.all_pass();
    top["checks"] = std::move(arr);
    return top.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_file: cannot open " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write_file: short write to " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_file: cannot open " + path);
    std::string out((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return out;
}

}  // namespace occuflux
