// edge-lab: sample sparse random matrices, locate the corrected spectral edge
// and run Monte Carlo edge-statistics experiments from JSON configs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "edgelab/ensemble.hpp"
#include "edgelab/freeconv.hpp"
#include "edgelab/measure.hpp"
#include "edgelab/report_io.hpp"
#include "edgelab/spectra.hpp"
#include "edgelab/stats.hpp"
#include "edgelab/version.hpp"

namespace fs = std::filesystem;
using edgelab::Json;

namespace {

struct Manifest {
    std::string command;
    fs::path config_path;
    fs::path out_dir = ".";
    int workers = 1;
    std::optional<std::uint64_t> seed_override;
    bool dry_run = false;
};

Json load_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw edgelab::ConfigError("cannot open config file " + path.string());
    Json j;
    try {
        j = Json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw edgelab::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return j;
}

Json manifest_json(const Manifest& m, const Json& resolved_config) {
    return Json{{"command", m.command},
                {"configPath", m.config_path.string()},
                {"outputDir", m.out_dir.string()},
                {"workers", m.workers},
                {"dryRun", m.dry_run},
                {"version", edgelab::version_string()},
                {"resolvedConfig", resolved_config}};
}

void write_outputs(const Manifest& m, const Json& manifest, const Json& report,
                   const std::string* csv, const std::string* hist_csv) {
    fs::create_directories(m.out_dir);
    edgelab::write_text_atomic(m.out_dir / "manifest.json", manifest.dump(2) + "\n");
    edgelab::write_text_atomic(m.out_dir / "report.json", report.dump(2) + "\n");
    if (csv) edgelab::write_text_atomic(m.out_dir / "report.csv", *csv);
    if (hist_csv) edgelab::write_text_atomic(m.out_dir / "histogram.csv", *hist_csv);
}

std::vector<double> coeffs_from(const Json& j, const char* where) {
    if (!j.is_array()) throw edgelab::ConfigError(std::string(where) + ": expected an array");
    std::vector<double> c;
    for (const auto& v : j) {
        if (!v.is_number()) throw edgelab::ConfigError(std::string(where) + ": expected numbers");
        c.push_back(v.get<double>());
    }
    return c;
}

int run_sample(const Manifest& m, const Json& cfg) {
    edgelab::EnsembleParams params = edgelab::ensemble_from_json(
        cfg.contains("ensemble") ? cfg["ensemble"]
                                 : throw edgelab::ConfigError("ensemble: missing section"));
    if (m.seed_override) params.seed = *m.seed_override;
    params.validate();
    Json resolved = cfg;
    resolved["ensemble"] = edgelab::ensemble_to_json(params);
    if (m.dry_run) {
        std::cout << manifest_json(m, resolved).dump(2) << "\n";
        return 0;
    }
    const edgelab::SymmetricMatrix H = params.model == edgelab::EnsembleModel::ErdosRenyi
                                           ? edgelab::sample_erdos_renyi(params)
                                           : edgelab::sample_goe(params.N, params.seed);
    const auto spec = edgelab::eigen_decompose(H, false);

    Json rep;
    rep["command"] = "sample";
    rep["ensemble"] = edgelab::ensemble_to_json(params);
    // entry-moment diagnostics over the sampled off-diagonal entries
    const int N = H.dim();
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            if (i == j) continue;
            const double h = H(i, j);
            m2 += h * h;
            m3 += h * h * h;
            m4 += h * h * h * h;
        }
    const double pairs = static_cast<double>(N) * (N - 1);
    Json moments = Json::object();
    moments["empirical"] = Json{{"k2", m2 / pairs}, {"k3", m3 / pairs}, {"k4", m4 / pairs}};
    if (params.model == edgelab::EnsembleModel::ErdosRenyi) {
        moments["exact"] = Json{{"k2", edgelab::entry_moment_exact(2, N, params.q)},
                                {"k3", edgelab::entry_moment_exact(3, N, params.q)},
                                {"k4", edgelab::entry_moment_exact(4, N, params.q)}};
    }
    rep["entryMoments"] = moments;
    rep["spectrum"] = Json{{"lambda1", spec.lambda(1)},
                           {"lambdaN", spec.eigenvalues.back()},
                           {"trace", H.trace()}};
    std::string spectrum_csv = "eigenvalue\n";
    for (double v : spec.eigenvalues) spectrum_csv += edgelab::format_double(v) + "\n";

    write_outputs(m, manifest_json(m, resolved), rep, nullptr, nullptr);
    edgelab::write_text_atomic(m.out_dir / "spectrum.csv", spectrum_csv);
    return 0;
}

int run_measure(const Manifest& m, const Json& cfg) {
    edgelab::CorrectionPolynomial Q;
    Json resolved = cfg;
    std::vector<double> coeffs;
    if (cfg.contains("measure") && cfg["measure"].contains("coeffs")) {
        coeffs = coeffs_from(cfg["measure"]["coeffs"], "measure.coeffs");
    } else if (cfg.contains("ensemble")) {
        edgelab::EnsembleParams params = edgelab::ensemble_from_json(cfg["ensemble"]);
        if (m.seed_override) params.seed = *m.seed_override;
        const edgelab::SymmetricMatrix H = edgelab::sample_erdos_renyi(params);
        const auto terms = cfg.contains("correctionTerms")
                               ? edgelab::terms_from_json(cfg["correctionTerms"])
                               : edgelab::default_correction_terms(params.N);
        coeffs = edgelab::build_correction(H, terms).coeffs();
    }
    try {
        Q = edgelab::CorrectionPolynomial(coeffs);
    } catch (const edgelab::Error& e) {
        throw edgelab::ConfigError(std::string("measure.coeffs: ") + e.what());
    }
    const int locations_n =
        cfg.contains("measure") ? cfg["measure"].value("locationsN", 0) : 0;
    const int density_grid =
        cfg.contains("measure") ? cfg["measure"].value("densityGrid", 0) : 0;
    if (m.dry_run) {
        std::cout << manifest_json(m, resolved).dump(2) << "\n";
        return 0;
    }
    const edgelab::EquilibriumMeasure M = edgelab::find_edge(Q);
    Json rep;
    rep["command"] = "measure";
    rep["coeffs"] = Q.coeffs();
    rep["edge"] = M.edge();
    rep["edgeStieltjes"] = M.edge_stieltjes();
    rep["stationarityResidual"] = M.stationarity_residual();
    rep["polyResidual"] = M.poly_residual();
    rep["totalMass"] = M.total_mass();
    rep["densityAtZero"] = M.density(0.0);
    if (locations_n > 0) rep["classicalLocations"] = M.classical_locations(locations_n);
    std::string csv;
    if (density_grid > 1) {
        csv = "x,density\n";
        for (int i = 0; i < density_grid; ++i) {
            const double x = -M.edge() + 2.0 * M.edge() * i / (density_grid - 1);
            csv += edgelab::format_double(x) + "," + edgelab::format_double(M.density(x)) + "\n";
        }
    }
    write_outputs(m, manifest_json(m, resolved), rep, density_grid > 1 ? &csv : nullptr, nullptr);
    return 0;
}

int run_freeconv_check(const Manifest& m, const Json& cfg) {
    if (!cfg.contains("freeconv")) throw edgelab::ConfigError("freeconv: missing section");
    const Json& fc = cfg["freeconv"];
    edgelab::CorrectionPolynomial Q;
    try {
        Q = edgelab::CorrectionPolynomial(
            coeffs_from(fc.contains("coeffs") ? fc["coeffs"] : Json::array(), "freeconv.coeffs"));
    } catch (const edgelab::Error& e) {
        throw edgelab::ConfigError(std::string("freeconv.coeffs: ") + e.what());
    }
    std::vector<double> t_grid{0.0, 0.3, 1.0};
    if (fc.contains("tGrid")) t_grid = coeffs_from(fc["tGrid"], "freeconv.tGrid");
    if (m.dry_run) {
        std::cout << manifest_json(m, cfg).dump(2) << "\n";
        return 0;
    }
    Json rows = Json::array();
    for (double t : t_grid) {
        if (t < 0.0) throw edgelab::ConfigError("freeconv.tGrid: t must be >= 0");
        const auto ev = edgelab::edge_t(Q, t);
        const double vel = edgelab::edge_velocity(Q, t);
        const double h = 1e-4;
        const double fd =
            t >= h ? (edgelab::edge_t(Q, t + h).edge() - edgelab::edge_t(Q, t - h).edge()) /
                         (2.0 * h)
                   : (-3.0 * ev.edge() + 4.0 * edgelab::edge_t(Q, t + h).edge() -
                      edgelab::edge_t(Q, t + 2.0 * h).edge()) /
                         (2.0 * h);
        const double resid =
            edgelab::subordination_check(edgelab::Complex(0.5, 0.5), Q, t);
        rows.push_back(Json{{"t", t},
                            {"edge", ev.edge()},
                            {"edgeStieltjes", ev.edge_stieltjes()},
                            {"velocity", vel},
                            {"velocityFiniteDiff", fd},
                            {"subordinationResidual", resid},
                            {"mass", ev.measure.total_mass()}});
    }
    Json rep;
    rep["command"] = "freeconv-check";
    rep["coeffs"] = Q.coeffs();
    rep["rows"] = rows;
    write_outputs(m, manifest_json(m, cfg), rep, nullptr, nullptr);
    return 0;
}

int run_experiment(const Manifest& m, const Json& cfg) {
    edgelab::ExperimentConfig ec = edgelab::config_from_json(cfg);
    if (m.seed_override) ec.master_seed = *m.seed_override;
    const Json resolved = edgelab::config_to_json(ec);
    if (m.dry_run) {
        std::cout << manifest_json(m, resolved).dump(2) << "\n";
        return 0;
    }
    edgelab::ExperimentReport rep;
    std::string hist_stat = "X";
    if (m.command == "rigidity") {
        rep = edgelab::run_rigidity(ec, m.workers);
        hist_stat = "dev_k" + std::to_string(ec.k_range.empty() ? 1 : ec.k_range.front());
    } else if (m.command == "edgestats") {
        rep = edgelab::run_edge_fluctuations(ec, m.workers);
    } else {
        rep = edgelab::run_divisible_edge(ec, m.workers);
    }
    const std::string csv = edgelab::report_to_csv(rep);
    const std::string hist =
        edgelab::histogram_to_csv(edgelab::histogram(rep, "ensemble", hist_stat));
    write_outputs(m, manifest_json(m, resolved), edgelab::report_to_json(rep), &csv, &hist);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edge-lab: corrected spectral-edge statistics for sparse random matrices"};
    app.set_version_flag("--version", edgelab::version_string());
    app.require_subcommand(1);

    Manifest m;
    std::string config_arg;
    std::string out_arg = ".";
    std::uint64_t seed_arg = 0;
    bool seed_given = false;
    int workers_arg = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_arg, "JSON config file")->required();
        sub->add_option("--out", out_arg, "output directory (default: .)");
        sub->add_option("--workers", workers_arg,
                        "replicate worker threads (default: EDGE_LAB_WORKERS or 1)");
        sub->add_option("--seed", seed_arg, "override master seed")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_flag("--dry-run", m.dry_run, "validate config and print the resolved plan");
    };
    for (const char* name : {"sample", "measure", "rigidity", "edgestats", "freeconv-check",
                             "divisible"})
        add_common(app.add_subcommand(name));

    CLI11_PARSE(app, argc, argv);

    m.command = app.get_subcommands().front()->get_name();
    m.config_path = config_arg;
    m.out_dir = out_arg;
    if (seed_given) m.seed_override = seed_arg;
    if (workers_arg > 0) {
        m.workers = workers_arg;
    } else if (const char* env = std::getenv("EDGE_LAB_WORKERS")) {
        m.workers = std::max(1, std::atoi(env));
    }

    try {
        const Json cfg = load_config(m.config_path);
        if (m.command == "sample") return run_sample(m, cfg);
        if (m.command == "measure") return run_measure(m, cfg);
        if (m.command == "freeconv-check") return run_freeconv_check(m, cfg);
        return run_experiment(m, cfg);
    } catch (const edgelab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}
