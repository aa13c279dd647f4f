#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgelab/errors.hpp"
#include "edgelab/stats.hpp"

namespace edgelab {

using Json = nlohmann::ordered_json;

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// JSON <-> domain types
// ---------------------------------------------------------------------------

inline Json terms_to_json(const std::vector<ForestTerm>& terms) {
    Json arr = Json::array();
    for (const auto& t : terms) {
        Json e = Json::array();
        for (const auto& edge : t.forest.edges) e.push_back({edge.u, edge.v, edge.s});
        Json jt{{"vertices", t.forest.vertex_count}, {"edges", e}, {"coeff", t.coefficient}};
        if (t.order_override) jt["order"] = *t.order_override;
        arr.push_back(jt);
    }
    return arr;
}

inline std::vector<ForestTerm> terms_from_json(const Json& arr) {
    if (!arr.is_array()) throw ConfigError("correctionTerms: expected an array");
    std::vector<ForestTerm> terms;
    for (const auto& jt : arr) {
        ForestTerm t;
        if (!jt.contains("vertices") || !jt["vertices"].is_number_integer())
            throw ConfigError("correctionTerms[].vertices: expected an integer");
        t.forest.vertex_count = jt["vertices"].get<int>();
        if (jt.contains("edges")) {
            for (const auto& je : jt["edges"]) {
                if (!je.is_array() || je.size() != 3)
                    throw ConfigError("correctionTerms[].edges: expected [u, v, s] triples");
                t.forest.edges.push_back({je[0].get<int>(), je[1].get<int>(), je[2].get<int>()});
            }
        }
        if (!jt.contains("coeff") || !jt["coeff"].is_number())
            throw ConfigError("correctionTerms[].coeff: expected a number");
        t.coefficient = jt["coeff"].get<double>();
        if (jt.contains("order")) t.order_override = jt["order"].get<int>();
        try {
            t.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("correctionTerms[]: ") + e.what());
        }
        terms.push_back(std::move(t));
    }
    return terms;
}

inline Json ensemble_to_json(const EnsembleParams& p) {
    return Json{{"model", to_string(p.model)}, {"N", p.N}, {"q", p.q}, {"seed", p.seed}};
}

inline EnsembleParams ensemble_from_json(const Json& j) {
    EnsembleParams p;
    if (!j.contains("N") || !j["N"].is_number_integer())
        throw ConfigError("ensemble.N: expected an integer");
    p.N = j["N"].get<int>();
    const std::string model = j.value("model", std::string("erdos_renyi"));
    if (model == "erdos_renyi")
        p.model = EnsembleModel::ErdosRenyi;
    else if (model == "goe")
        p.model = EnsembleModel::Goe;
    else
        throw ConfigError("ensemble.model: expected \"erdos_renyi\" or \"goe\"");
    if (j.contains("q") && j.contains("qExponent"))
        throw ConfigError("ensemble: give q or qExponent, not both");
    if (j.contains("q")) {
        if (!j["q"].is_number()) throw ConfigError("ensemble.q: expected a number");
        p.q = j["q"].get<double>();
    } else if (j.contains("qExponent")) {
        p.q = std::pow(static_cast<double>(p.N), j["qExponent"].get<double>());
    } else if (p.model == EnsembleModel::Goe) {
        p.q = std::sqrt(static_cast<double>(p.N));
    } else {
        throw ConfigError("ensemble: missing q (or qExponent)");
    }
    p.seed = j.value("seed", 0ULL);
    return p;
}

inline Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["schema"] = 1;
    j["ensemble"] = ensemble_to_json(cfg.ensemble);
    j["replicates"] = cfg.replicates;
    j["kRange"] = cfg.k_range;
    if (cfg.t) j["t"] = *cfg.t;
    j["correctionTerms"] = terms_to_json(cfg.terms_or_default());
    j["masterSeed"] = cfg.master_seed;
    j["thresholds"] = Json{{"ksEdge", cfg.thresholds.ks_edge},
                           {"ksDivisibleLargeT", cfg.thresholds.ks_divisible_large_t},
                           {"replicateFailBudget", cfg.thresholds.replicate_fail_budget},
                           {"corrMin", cfg.thresholds.corr_min},
                           {"corrControlMax", cfg.thresholds.corr_control_max}};
    j["histogram"] =
        Json{{"lo", cfg.histogram.lo}, {"hi", cfg.histogram.hi}, {"bins", cfg.histogram.bins}};
    return j;
}

inline ExperimentConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    if (j.contains("schema") && j["schema"].get<int>() != 1)
        throw ConfigError("schema: unsupported version");
    ExperimentConfig cfg;
    if (!j.contains("ensemble")) throw ConfigError("ensemble: missing section");
    cfg.ensemble = ensemble_from_json(j["ensemble"]);
    cfg.replicates = j.value("replicates", 2);
    if (j.contains("kRange")) {
        if (!j["kRange"].is_array()) throw ConfigError("kRange: expected an array of indices");
        cfg.k_range = j["kRange"].get<std::vector<int>>();
    }
    if (j.contains("t")) {
        if (!j["t"].is_number()) throw ConfigError("t: expected a number");
        cfg.t = j["t"].get<double>();
    }
    if (j.contains("correctionTerms")) cfg.correction_terms = terms_from_json(j["correctionTerms"]);
    cfg.master_seed = j.value("masterSeed", 0ULL);
    if (j.contains("thresholds")) {
        const Json& t = j["thresholds"];
        cfg.thresholds.ks_edge = t.value("ksEdge", cfg.thresholds.ks_edge);
        cfg.thresholds.ks_divisible_large_t =
            t.value("ksDivisibleLargeT", cfg.thresholds.ks_divisible_large_t);
        cfg.thresholds.replicate_fail_budget =
            t.value("replicateFailBudget", cfg.thresholds.replicate_fail_budget);
        cfg.thresholds.corr_min = t.value("corrMin", cfg.thresholds.corr_min);
        cfg.thresholds.corr_control_max =
            t.value("corrControlMax", cfg.thresholds.corr_control_max);
    }
    if (j.contains("histogram")) {
        const Json& h = j["histogram"];
        cfg.histogram.lo = h.value("lo", cfg.histogram.lo);
        cfg.histogram.hi = h.value("hi", cfg.histogram.hi);
        cfg.histogram.bins = h.value("bins", cfg.histogram.bins);
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline Json record_to_json(const ReplicateRecord& r) {
    Json j{{"group", r.group}, {"index", r.index}, {"seed", r.seed}, {"ok", r.ok}};
    if (!r.ok) j["error"] = r.error;
    if (!r.a_coeffs.empty()) j["aCoeffs"] = r.a_coeffs;
    if (!std::isnan(r.edge)) j["edge"] = r.edge;
    if (!r.lambdas.empty()) {
        Json l = Json::object();
        for (const auto& [k, v] : r.lambdas) l["lambda_" + std::to_string(k)] = v;
        j["lambdas"] = l;
    }
    Json s = Json::object();
    for (const auto& [k, v] : r.stats) s[k] = v;
    j["stats"] = s;
    return j;
}

inline Json report_to_json(const ExperimentReport& rep) {
    Json j;
    j["command"] = to_string(rep.command);
    j["config"] = config_to_json(rep.config);
    Json recs = Json::array();
    for (const auto& r : rep.records) recs.push_back(record_to_json(r));
    j["records"] = recs;
    Json s = Json::object();
    for (const auto& [k, v] : rep.summary) s[k] = v;
    j["summary"] = s;
    return j;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// One row per replicate. Column layout is documented in the leading comment
/// lines; all floating point values carry 17 significant digits.
inline std::string report_to_csv(const ExperimentReport& rep) {
    std::set<int> ks;
    std::set<std::string> stat_names;
    std::size_t max_coeffs = 0;
    for (const auto& r : rep.records) {
        for (const auto& [k, v] : r.lambdas) ks.insert(k);
        for (const auto& [n, v] : r.stats) stat_names.insert(n);
        max_coeffs = std::max(max_coeffs, r.a_coeffs.size());
    }
    std::string out;
    out += "# edge-lab replicate records: command=" + to_string(rep.command) + "\n";
    out += "# group: replicate group; seed: derived stream seed; ok: 1 unless the replicate "
           "failed\n";
    out += "# a<2l>: correction coefficients; edge: random edge for the replicate; "
           "lambda_<k>: eigenvalues; remaining columns: named statistics\n";
    out += "group,index,seed,ok";
    for (std::size_t l = 1; l <= max_coeffs; ++l) out += ",a" + std::to_string(2 * l);
    out += ",edge";
    for (int k : ks) out += ",lambda_" + std::to_string(k);
    for (const auto& n : stat_names) out += "," + n;
    out += "\n";
    for (const auto& r : rep.records) {
        out += r.group + "," + std::to_string(r.index) + "," + std::to_string(r.seed) + "," +
               (r.ok ? "1" : "0");
        for (std::size_t l = 0; l < max_coeffs; ++l)
            out += "," + (l < r.a_coeffs.size() ? format_double(r.a_coeffs[l]) : std::string());
        out += "," + (std::isnan(r.edge) ? std::string() : format_double(r.edge));
        for (int k : ks) {
            out += ",";
            for (const auto& [kk, v] : r.lambdas)
                if (kk == k) out += format_double(v);
        }
        for (const auto& n : stat_names) {
            out += ",";
            for (const auto& [sn, v] : r.stats)
                if (sn == n) out += format_double(v);
        }
        out += "\n";
    }
    return out;
}

inline std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
    std::string out = "bin_center,count\n";
    for (const auto& b : bins)
        out += format_double(b.center) + "," + std::to_string(b.count) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Atomic file output
// ---------------------------------------------------------------------------

/// Writes to a temporary sibling and renames into place, so failed runs never
/// leave partial report files.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open " + tmp.string() + " for writing");
        f << content;
        if (!f) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace edgelab
