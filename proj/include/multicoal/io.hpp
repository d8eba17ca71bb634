#pragma once

// JSON configuration schema and CSV emitters. Schema (1-based type labels):
//
//   { "schema_version": 1,
//     "d": int,
//     "rho_change": [[j, i, rate], ...],
//     "rho_pair": [rate, ...],
//     "q": [ {"target": i, "atoms": [[w, [s1..sd]], ...]}, ... ],
//     "family": {...} }            (optional provenance)
//
// Unknown fields are rejected everywhere.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "multicoal/analysis.hpp"
#include "multicoal/arrays.hpp"
#include "multicoal/measures.hpp"
#include "multicoal/simulate.hpp"
#include "multicoal/verify.hpp"

namespace multicoal {

using nlohmann::json;

inline constexpr int schema_version = 1;

namespace detail {

inline void reject_unknown_fields(const json& object, const std::vector<std::string>& known,
                                  const std::string& where) {
    if (!object.is_object()) throw std::invalid_argument(where + ": expected an object");
    for (const auto& [key, value] : object.items()) {
        bool ok = false;
        for (const auto& k : known) ok |= k == key;
        if (!ok) throw std::invalid_argument(where + ": unknown field '" + key + "'");
    }
}

inline int type_index(const json& j, int d, const std::string& where) {
    if (!j.is_number_integer()) throw std::invalid_argument(where + ": type label must be an integer");
    const int label = j.get<int>();
    if (label < 1 || label > d)
        throw std::invalid_argument(where + ": type label out of range 1.." + std::to_string(d));
    return label - 1;
}

}  // namespace detail

inline MergerMeasureSet measure_set_from_json(const json& config) {
    detail::reject_unknown_fields(
        config, {"schema_version", "d", "rho_change", "rho_pair", "q", "family"}, "config");
    if (!config.contains("d")) throw std::invalid_argument("config: missing 'd'");
    const int d = config.at("d").get<int>();
    if (d < 1) throw std::invalid_argument("config: d must be >= 1");

    MeasureSetBuilder builder(d);
    if (config.contains("rho_change")) {
        for (const auto& entry : config.at("rho_change")) {
            if (!entry.is_array() || entry.size() != 3)
                throw std::invalid_argument("config: rho_change entries are [j, i, rate]");
            const int from = detail::type_index(entry[0], d, "rho_change");
            const int to = detail::type_index(entry[1], d, "rho_change");
            builder.colour_change(from, to, entry[2].get<double>());
        }
    }
    if (config.contains("rho_pair")) {
        const auto& pair = config.at("rho_pair");
        if (!pair.is_array() || static_cast<int>(pair.size()) != d)
            throw std::invalid_argument("config: rho_pair must list one rate per type");
        for (int i = 0; i < d; ++i) builder.pair_rate(i, pair[i].get<double>());
    }
    if (config.contains("q")) {
        for (const auto& entry : config.at("q")) {
            detail::reject_unknown_fields(entry, {"target", "atoms"}, "q entry");
            const int target = detail::type_index(entry.at("target"), d, "q target");
            for (const auto& atom : entry.at("atoms")) {
                if (!atom.is_array() || atom.size() != 2)
                    throw std::invalid_argument("config: atoms are [weight, [s1..sd]]");
                std::vector<double> s = atom[1].get<std::vector<double>>();
                if (static_cast<int>(s.size()) != d)
                    throw std::invalid_argument("config: atom point must have d coordinates");
                builder.atom(target, atom[0].get<double>(), std::move(s));
            }
        }
    }
    return builder.build();
}

inline json measure_set_to_json(const MergerMeasureSet& m) {
    json config;
    config["schema_version"] = schema_version;
    config["d"] = m.dim();
    json changes = json::array();
    for (int j = 0; j < m.dim(); ++j)
        for (int i = 0; i < m.dim(); ++i)
            if (j != i && m.colour_change_rate(j, i) > 0.0)
                changes.push_back({j + 1, i + 1, m.colour_change_rate(j, i)});
    config["rho_change"] = std::move(changes);
    config["rho_pair"] = m.rho_pair();
    json q = json::array();
    bool any_family = false;
    json tags = json::array();
    for (int i = 0; i < m.dim(); ++i) {
        tags.push_back(m.q_measure(i).family_tag());
        any_family |= !m.q_measure(i).family_tag().empty();
        if (m.q_measure(i).empty()) continue;
        json atoms = json::array();
        for (const auto& a : m.q_measure(i).atoms()) atoms.push_back({a.weight, a.point});
        q.push_back({{"target", i + 1}, {"atoms", std::move(atoms)}});
    }
    config["q"] = std::move(q);
    if (any_family) config["family"] = {{"tags", std::move(tags)}};
    return config;
}

inline MergerMeasureSet load_measure_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    json config;
    try {
        in >> config;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config parse error in " + path + ": " + e.what());
    }
    return measure_set_from_json(config);
}

// --- array representation files ---------------------------------------------
//
//   { "schema_version": 1, "d": int, "ell": [..], "b_max": int,
//     "rho": [[[x1..xd], value], ...],
//     "atoms": [[w, [s1..sd]], ...] }

struct ArrayRepresentation {
    ArrayDomain domain;
    std::map<std::vector<int>, double> rho;
    CubeMeasure j;
};

inline ArrayRepresentation array_representation_from_json(const json& config) {
    detail::reject_unknown_fields(config, {"schema_version", "d", "ell", "b_max", "rho", "atoms"},
                                  "array config");
    const int d = config.at("d").get<int>();
    ArrayDomain domain(d, config.at("ell").get<std::vector<int>>(), config.at("b_max").get<int>());
    std::map<std::vector<int>, double> rho;
    if (config.contains("rho")) {
        for (const auto& entry : config.at("rho")) {
            if (!entry.is_array() || entry.size() != 2)
                throw std::invalid_argument("array config: rho entries are [[x..], value]");
            rho[entry[0].get<std::vector<int>>()] = entry[1].get<double>();
        }
    }
    std::vector<CubeAtom> atoms;
    if (config.contains("atoms"))
        for (const auto& atom : config.at("atoms"))
            atoms.push_back({atom[0].get<double>(), atom[1].get<std::vector<double>>()});
    return {std::move(domain), std::move(rho), CubeMeasure(d, std::move(atoms))};
}

inline json recovery_report_to_json(const RecoveryReport& report) {
    json out;
    out["schema_version"] = schema_version;
    out["max_recursion_residual"] = report.max_recursion_residual;
    json rho = json::array();
    for (const auto& [x, est] : report.rho)
        rho.push_back({{"x", x}, {"value", est.value}, {"error_proxy", est.error_proxy}});
    out["rho"] = std::move(rho);
    json moments = json::array();
    for (const auto& [mi, value] : report.power_moments)
        moments.push_back({{"m", mi}, {"value", value}});
    out["moments"] = std::move(moments);
    return out;
}

// --- reports -----------------------------------------------------------------

inline json test_report_to_json(const TestReport& r) {
    return json{{"schema_version", schema_version},
                {"name", r.name},
                {"statistic", r.statistic},
                {"threshold", r.threshold},
                {"pass", r.pass},
                {"replicas", r.replicas},
                {"seed", r.seed},
                {"details", r.details}};
}

inline json cdi_report_to_json(const CdiReport& report) {
    json out;
    out["schema_version"] = schema_version;
    out["overall"] = cdi_verdict_name(report.overall);
    json per_type = json::array();
    for (const auto& r : report.per_type) {
        json entry{{"type", r.type + 1}, {"verdict", cdi_verdict_name(r.verdict)}};
        json evidence;
        if (!r.shortcut.empty()) evidence["shortcut"] = r.shortcut;
        if (r.shortcut.empty()) {
            evidence["tail_exponent"] = r.tail_exponent;
            evidence["prefactor"] = r.prefactor;
            evidence["integral_estimate"] = r.integral_estimate;
        }
        entry["evidence"] = std::move(evidence);
        per_type.push_back(std::move(entry));
    }
    out["per_type"] = std::move(per_type);
    return out;
}

// --- CSV ---------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::size_t replica,
                                 bool header) {
    const int d = traj.initial.dim();
    if (header) {
        os << "replica,time,event_kind,target_type";
        for (int i = 1; i <= d; ++i) os << ",k_" << i;
        for (int i = 1; i <= d; ++i) os << ",n_" << i;
        os << "\n";
    }
    for (const auto& e : traj.events) {
        os << replica << "," << format_double(e.time) << "," << event_kind_name(e.kind) << ","
           << e.target + 1;
        for (int i = 0; i < d; ++i) os << "," << e.k[i];
        for (int i = 0; i < d; ++i) os << "," << e.after[i];
        os << "\n";
    }
}

inline void write_transition_table_csv(std::ostream& os, const TransitionTable& table, int d) {
    for (int i = 1; i <= d; ++i) os << "k_" << i << ",";
    os << "target,multiplicity,per_set_rate,class_rate\n";
    for (const auto& cls : table.classes) {
        for (int i = 0; i < d; ++i) os << cls.k[i] << ",";
        os << cls.target + 1 << "," << format_double(cls.multiplicity) << ","
           << format_double(cls.per_set_rate) << "," << format_double(cls.class_rate) << "\n";
    }
}

}  // namespace multicoal
