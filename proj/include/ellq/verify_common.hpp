#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ellq/common.hpp"
#include "ellq/modular.hpp"

namespace ellq {

/// Deterministic sampling instructions for the relation checkers.
struct SamplePlan {
    std::uint64_t              seed          = 7;
    int                        default_count = 30;
    std::map<std::string, int> counts;
    double                     margin       = 0.02;  // min distance to poles / lattice
    int                        max_attempts = 1000;

    int count_for(const std::string& relation) const {
        auto it = counts.find(relation);
        return it == counts.end() ? default_count : it->second;
    }
};

struct RelationEntry {
    std::string relation;
    double      max_residual = 0.0;
    std::string worst;
    bool        pass = true;
};

struct RelationReport {
    double                     tol = 1e-8;
    std::vector<RelationEntry> entries;

    void add(const std::string& relation, double residual, const std::string& where) {
        for (auto& e : entries) {
            if (e.relation != relation) continue;
            if (residual > e.max_residual) {
                e.max_residual = residual;
                e.worst        = where;
                e.pass         = residual < tol;
            }
            return;
        }
        entries.push_back({relation, residual, where, residual < tol});
    }

    double max_residual() const {
        double m = 0.0;
        for (const auto& e : entries) m = std::max(m, e.max_residual);
        return m;
    }
    double max_residual(const std::string& relation) const {
        for (const auto& e : entries)
            if (e.relation == relation) return e.max_residual;
        return 0.0;
    }
    bool pass() const {
        for (const auto& e : entries)
            if (!e.pass) return false;
        return true;
    }
    void merge(const RelationReport& other) {
        for (const auto& e : other.entries) add(e.relation, e.max_residual, e.worst);
    }
};

inline std::string describe_sample(std::initializer_list<std::pair<const char*, cx>> vals) {
    std::ostringstream os;
    os.precision(6);
    bool first = true;
    for (const auto& [k, v] : vals) {
        if (!first) os << ", ";
        first = false;
        os << k << "=" << v.real() << (v.imag() < 0 ? "-" : "+") << std::abs(v.imag()) << "i";
    }
    return os.str();
}

/// u in the fundamental parallelogram, at least `margin` away (mod the
/// lattice) from every point of `avoid`.
inline cx sample_u(Rng& rng, const ModularParams& mp, const std::vector<cx>& avoid,
                   double margin, int max_attempts = 1000) {
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        const double s = rng.uniform(0.03, 0.97), t = rng.uniform(0.03, 0.97);
        const cx     u = s + t * mp.tau;
        bool         ok = lattice_distance(u, mp.tau) > margin;
        for (const cx& b : avoid)
            ok = ok && lattice_distance(u - b, mp.tau) > margin;
        if (ok) return u;
    }
    throw sampling_error("sample_u: could not avoid poles (crowded fundamental domain)");
}

}  // namespace ellq
