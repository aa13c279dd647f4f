#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "edgelab/ensemble.hpp"
#include "edgelab/errors.hpp"
#include "edgelab/forest.hpp"
#include "edgelab/freeconv.hpp"
#include "edgelab/measure.hpp"
#include "edgelab/rng.hpp"
#include "edgelab/spectra.hpp"

namespace edgelab {

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_x - F_y|.
inline double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty()) throw EmptySampleError("ks_two_sample: empty sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(i / nx - j / ny));
    }
    d = std::max(d, std::abs(i / nx - j / ny));
    return d;
}

inline double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidParamsError("pearson_correlation: need two equal-length samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Linear-interpolation quantile of a sample (p in [0,1]).
inline double sample_quantile(std::vector<double> v, double p) {
    if (v.empty()) throw EmptySampleError("sample_quantile: empty sample");
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= v.size()) return v.back();
    const double w = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[lo + 1] * w;
}

inline double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

struct RunThresholds {
    double ks_edge = 0.15;              // corrected-statistic KS vs GOE
    double ks_divisible_large_t = 0.1;  // KS vs GOE once H(t) is near GOE
    double replicate_fail_budget = 0.01;
    double corr_min = 0.5;              // gaussian-shift dominance
    double corr_control_max = 0.2;
};

struct HistogramSpec {
    double lo = -6.0;
    double hi = 3.0;
    int bins = 60;
};

enum class RunCommand { Rigidity, EdgeStats, GaussianShift, Divisible };

inline std::string to_string(RunCommand c) {
    switch (c) {
        case RunCommand::Rigidity: return "rigidity";
        case RunCommand::EdgeStats: return "edgestats";
        case RunCommand::GaussianShift: return "gaussian-shift";
        case RunCommand::Divisible: return "divisible";
    }
    return "?";
}

struct ExperimentConfig {
    EnsembleParams ensemble;
    int replicates = 2;
    std::vector<int> k_range = {1};
    std::optional<double> t;
    std::vector<ForestTerm> correction_terms;  // empty -> defaults
    std::uint64_t master_seed = 0;
    RunThresholds thresholds;
    HistogramSpec histogram;

    void validate() const {
        ensemble.validate();
        if (replicates < 2) throw InvalidParamsError("ExperimentConfig: replicates must be >= 2");
        for (int k : k_range)
            if (k < 1 || k > ensemble.N)
                throw InvalidParamsError("ExperimentConfig: k index " + std::to_string(k) +
                                         " outside [1, N]");
        if (t && !(*t >= 0.0)) throw InvalidParamsError("ExperimentConfig: t must be >= 0");
        for (const auto& term : correction_terms) term.validate();
    }

    std::vector<ForestTerm> terms_or_default() const {
        return correction_terms.empty() ? default_correction_terms(ensemble.N)
                                        : correction_terms;
    }
};

struct ReplicateRecord {
    std::string group;
    int index = 0;
    std::uint64_t seed = 0;
    bool ok = true;
    std::string error;
    std::vector<double> a_coeffs;
    double edge = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::pair<int, double>> lambdas;          // (k, lambda_k)
    std::vector<std::pair<std::string, double>> stats;    // named statistics

    double stat(const std::string& name) const {
        for (const auto& [k, v] : stats)
            if (k == name) return v;
        throw InvalidParamsError("ReplicateRecord: no statistic named " + name);
    }
};

struct ExperimentReport {
    RunCommand command = RunCommand::EdgeStats;
    ExperimentConfig config;
    std::vector<ReplicateRecord> records;
    std::vector<std::pair<std::string, double>> summary;

    std::vector<const ReplicateRecord*> group(const std::string& g) const {
        std::vector<const ReplicateRecord*> out;
        for (const auto& r : records)
            if (r.group == g) out.push_back(&r);
        return out;
    }

    std::vector<double> collect(const std::string& g, const std::string& stat_name) const {
        std::vector<double> out;
        for (const auto* r : group(g))
            if (r->ok) out.push_back(r->stat(stat_name));
        return out;
    }

    double summary_value(const std::string& name) const {
        for (const auto& [k, v] : summary)
            if (k == name) return v;
        throw InvalidParamsError("ExperimentReport: no summary entry named " + name);
    }
};

/// Deterministic replicate pool: each index is a pure function of the config,
/// results land in their slot, so the output is independent of scheduling.
template <class Fn>
inline void parallel_for(int n, int workers, Fn&& fn) {
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = std::min(workers, n);
    pool.reserve(static_cast<std::size_t>(count));
    for (int w = 0; w < count; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace detail {

inline void enforce_fail_budget(const std::vector<ReplicateRecord>& records, double budget) {
    std::size_t failed = 0;
    for (const auto& r : records)
        if (!r.ok) ++failed;
    if (static_cast<double>(failed) > budget * static_cast<double>(records.size()))
        throw Error("replicate failure budget exceeded: " + std::to_string(failed) + " of " +
                    std::to_string(records.size()) + " failed");
}

inline void append_moments(std::vector<std::pair<std::string, double>>& summary,
                           const std::string& prefix, const std::vector<double>& v) {
    summary.emplace_back("mean_" + prefix, sample_mean(v));
    summary.emplace_back("var_" + prefix, sample_variance(v));
    summary.emplace_back("p50_" + prefix, sample_quantile(v, 0.50));
    summary.emplace_back("p90_" + prefix, sample_quantile(v, 0.90));
    summary.emplace_back("p99_" + prefix, sample_quantile(v, 0.99));
}

/// Paired bootstrap 2.5th percentile of Var[u*] - Var[x*].
inline double bootstrap_var_gap_lower(const std::vector<double>& u, const std::vector<double>& x,
                                      std::uint64_t master_seed, int resamples = 1000) {
    std::mt19937_64 rng(derive_seed(master_seed, 0, StreamPurpose::Bootstrap));
    std::uniform_int_distribution<std::size_t> pick(0, u.size() - 1);
    std::vector<double> gaps(static_cast<std::size_t>(resamples));
    std::vector<double> ub(u.size()), xb(x.size());
    for (int b = 0; b < resamples; ++b) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            const std::size_t j = pick(rng);
            ub[i] = u[j];
            xb[i] = x[j];
        }
        gaps[static_cast<std::size_t>(b)] = sample_variance(ub) - sample_variance(xb);
    }
    return sample_quantile(gaps, 0.025);
}

}  // namespace detail

inline std::vector<std::pair<std::string, double>> recompute_summary(const ExperimentReport& rep);

namespace detail {

/// Shared sparse-replicate step: sample, build the correction, locate the
/// (possibly evolved) edge. Records coefficients and edge on the way out.
struct SparseStep {
    SymmetricMatrix H;
    CorrectionPolynomial Q;
    double edge = 2.0;
};

inline SparseStep sparse_step(const ExperimentConfig& cfg, int index, double t) {
    EnsembleParams p = cfg.ensemble;
    p.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(index),
                         StreamPurpose::SparseMatrix);
    SparseStep out;
    out.H = sample_erdos_renyi(p);
    out.Q = build_correction(out.H, cfg.terms_or_default());
    out.edge = t == 0.0 ? find_edge(out.Q).edge() : edge_t(out.Q, t).edge();
    return out;
}

}  // namespace detail

/// Rigidity profile: per replicate, normalized deviations
/// N^{2/3} min(k, N-k+1)^{1/3} |lambda_k - gamma_k| for k in k_range.
/// A GOE ensemble runs against the semicircle (Q forced to zero, L~ = 2).
inline ExperimentReport run_rigidity(const ExperimentConfig& cfg, int workers = 1) {
    cfg.validate();
    ExperimentReport rep;
    rep.command = RunCommand::Rigidity;
    rep.config = cfg;
    rep.records.resize(static_cast<std::size_t>(cfg.replicates));
    const int N = cfg.ensemble.N;
    const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
    parallel_for(cfg.replicates, workers, [&](int i) {
        ReplicateRecord r;
        r.group = "ensemble";
        r.index = i;
        try {
            SymmetricMatrix H;
            EquilibriumMeasure M;
            if (cfg.ensemble.model == EnsembleModel::ErdosRenyi) {
                auto step = detail::sparse_step(cfg, i, 0.0);
                r.seed = step.H.params()->seed;
                r.a_coeffs = step.Q.coeffs();
                H = std::move(step.H);
                M = find_edge(step.Q);
            } else {
                r.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                     StreamPurpose::GoeMatrix);
                H = sample_goe(N, r.seed);
                M = find_edge(CorrectionPolynomial::zero());
            }
            r.edge = M.edge();
            const SpectrumResult spec = eigen_decompose(H, false);
            for (int k : cfg.k_range) {
                const double gamma = M.classical_location(k, N);
                const double lam = spec.lambda(k);
                r.lambdas.emplace_back(k, lam);
                const double weight = std::cbrt(static_cast<double>(std::min(k, N - k + 1)));
                r.stats.emplace_back("dev_k" + std::to_string(k),
                                     n23 * weight * std::abs(lam - gamma));
            }
        } catch (const Error& e) {
            r.ok = false;
            r.error = e.what();
        }
        rep.records[static_cast<std::size_t>(i)] = std::move(r);
    });
    detail::enforce_fail_budget(rep.records, cfg.thresholds.replicate_fail_budget);
    rep.summary = recompute_summary(rep);
    return rep;
}

/// Edge fluctuations: corrected statistic X = N^{2/3}(lambda_1 - L~) and the
/// uncorrected N^{2/3}(lambda_1 - 2) for the sparse ensemble, against the GOE
/// reference Y = N^{2/3}(mu_1 - 2) at the same N.
inline ExperimentReport run_edge_fluctuations(const ExperimentConfig& cfg, int workers = 1) {
    cfg.validate();
    if (cfg.ensemble.model != EnsembleModel::ErdosRenyi)
        throw InvalidParamsError("run_edge_fluctuations: ensemble must be ErdosRenyi");
    ExperimentReport rep;
    rep.command = RunCommand::EdgeStats;
    rep.config = cfg;
    const int R = cfg.replicates;
    const int N = cfg.ensemble.N;
    const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
    rep.records.resize(2 * static_cast<std::size_t>(R));
    parallel_for(2 * R, workers, [&](int slot) {
        const bool goe = slot >= R;
        const int i = goe ? slot - R : slot;
        ReplicateRecord r;
        r.group = goe ? "goe_reference" : "ensemble";
        r.index = i;
        try {
            if (goe) {
                r.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                     StreamPurpose::GoeReference);
                const SymmetricMatrix W = sample_goe(N, r.seed);
                const SpectrumResult spec = eigen_decompose(W, false);
                r.lambdas.emplace_back(1, spec.lambda(1));
                r.stats.emplace_back("Y", n23 * (spec.lambda(1) - 2.0));
            } else {
                auto step = detail::sparse_step(cfg, i, 0.0);
                r.seed = step.H.params()->seed;
                r.a_coeffs = step.Q.coeffs();
                r.edge = step.edge;
                const SpectrumResult spec = eigen_decompose(step.H, false);
                r.lambdas.emplace_back(1, spec.lambda(1));
                r.stats.emplace_back("X", n23 * (spec.lambda(1) - step.edge));
                r.stats.emplace_back("U", n23 * (spec.lambda(1) - 2.0));
            }
        } catch (const Error& e) {
            r.ok = false;
            r.error = e.what();
        }
        rep.records[static_cast<std::size_t>(slot)] = std::move(r);
    });
    detail::enforce_fail_budget(rep.records, cfg.thresholds.replicate_fail_budget);
    rep.summary = recompute_summary(rep);
    return rep;
}

/// Sparse-regime shift test: correlation of N^{2/3}(lambda_1 - 2) with the
/// centered random edge across replicates, plus an independent-draw control
/// (GOE statistic against an unrelated sparse edge).
inline ExperimentReport run_gaussian_shift(const ExperimentConfig& cfg, int workers = 1) {
    cfg.validate();
    if (cfg.ensemble.model != EnsembleModel::ErdosRenyi)
        throw InvalidParamsError("run_gaussian_shift: ensemble must be ErdosRenyi");
    const int N = cfg.ensemble.N;
    if (cfg.ensemble.q > std::cbrt(static_cast<double>(N)))
        throw RegimeViolationError("run_gaussian_shift: requires q <= N^{1/3}, got q = " +
                                   std::to_string(cfg.ensemble.q));
    ExperimentReport rep;
    rep.command = RunCommand::GaussianShift;
    rep.config = cfg;
    const int R = cfg.replicates;
    const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
    rep.records.resize(2 * static_cast<std::size_t>(R));
    parallel_for(2 * R, workers, [&](int slot) {
        const bool control = slot >= R;
        const int i = control ? slot - R : slot;
        ReplicateRecord r;
        r.group = control ? "control" : "ensemble";
        r.index = i;
        try {
            if (control) {
                r.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                     StreamPurpose::GoeMatrix);
                const SymmetricMatrix W = sample_goe(N, r.seed);
                const SpectrumResult spec = eigen_decompose(W, false);
                r.stats.emplace_back("lambda_stat", n23 * (spec.lambda(1) - 2.0));
                // independent sparse draw for the control correlation
                EnsembleParams p = cfg.ensemble;
                p.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                     StreamPurpose::Control);
                const SymmetricMatrix H = sample_erdos_renyi(p);
                const CorrectionPolynomial Q = build_correction(H, cfg.terms_or_default());
                r.edge = find_edge(Q).edge();
            } else {
                auto step = detail::sparse_step(cfg, i, 0.0);
                r.seed = step.H.params()->seed;
                r.a_coeffs = step.Q.coeffs();
                r.edge = step.edge;
                const SpectrumResult spec = eigen_decompose(step.H, false);
                r.lambdas.emplace_back(1, spec.lambda(1));
                r.stats.emplace_back("lambda_stat", n23 * (spec.lambda(1) - 2.0));
            }
        } catch (const Error& e) {
            r.ok = false;
            r.error = e.what();
        }
        rep.records[static_cast<std::size_t>(slot)] = std::move(r);
    });
    detail::enforce_fail_budget(rep.records, cfg.thresholds.replicate_fail_budget);
    rep.summary = recompute_summary(rep);
    return rep;
}

/// Gaussian-divisible edge: the corrected statistic N^{2/3}(lambda_1(t) - L~_t)
/// of H(t) against the GOE reference. At t = 0 this reduces bit-exactly to
/// run_edge_fluctuations under the same master seed.
inline ExperimentReport run_divisible_edge(const ExperimentConfig& cfg, int workers = 1) {
    cfg.validate();
    if (cfg.ensemble.model != EnsembleModel::ErdosRenyi)
        throw InvalidParamsError("run_divisible_edge: ensemble must be ErdosRenyi");
    const double t = cfg.t.value_or(0.0);
    ExperimentReport rep;
    rep.command = RunCommand::Divisible;
    rep.config = cfg;
    const int R = cfg.replicates;
    const int N = cfg.ensemble.N;
    const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
    rep.records.resize(2 * static_cast<std::size_t>(R));
    parallel_for(2 * R, workers, [&](int slot) {
        const bool goe = slot >= R;
        const int i = goe ? slot - R : slot;
        ReplicateRecord r;
        r.group = goe ? "goe_reference" : "ensemble";
        r.index = i;
        try {
            if (goe) {
                r.seed = derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                     StreamPurpose::GoeReference);
                const SymmetricMatrix W = sample_goe(N, r.seed);
                const SpectrumResult spec = eigen_decompose(W, false);
                r.stats.emplace_back("Y", n23 * (spec.lambda(1) - 2.0));
            } else {
                auto step = detail::sparse_step(cfg, i, t);
                r.seed = step.H.params()->seed;
                r.a_coeffs = step.Q.coeffs();
                r.edge = step.edge;
                SymmetricMatrix Ht;
                if (t == 0.0) {
                    Ht = std::move(step.H);
                } else {
                    const SymmetricMatrix W = sample_goe(
                        N, derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                       StreamPurpose::GoeMatrix));
                    Ht = gaussian_divisible(step.H, W, t);
                }
                const SpectrumResult spec = eigen_decompose(Ht, false);
                r.lambdas.emplace_back(1, spec.lambda(1));
                r.stats.emplace_back("X", n23 * (spec.lambda(1) - step.edge));
            }
        } catch (const Error& e) {
            r.ok = false;
            r.error = e.what();
        }
        rep.records[static_cast<std::size_t>(slot)] = std::move(r);
    });
    detail::enforce_fail_budget(rep.records, cfg.thresholds.replicate_fail_budget);
    rep.summary = recompute_summary(rep);
    return rep;
}

/// Summary derivation; a pure function of the records so it can be recomputed
/// and compared byte-for-byte.
inline std::vector<std::pair<std::string, double>> recompute_summary(const ExperimentReport& rep) {
    std::vector<std::pair<std::string, double>> s;
    std::size_t failed = 0;
    for (const auto& r : rep.records)
        if (!r.ok) ++failed;
    s.emplace_back("replicates", static_cast<double>(rep.records.size()));
    s.emplace_back("failed", static_cast<double>(failed));
    switch (rep.command) {
        case RunCommand::Rigidity: {
            for (int k : rep.config.k_range)
                detail::append_moments(s, "dev_k" + std::to_string(k),
                                       rep.collect("ensemble", "dev_k" + std::to_string(k)));
            break;
        }
        case RunCommand::EdgeStats: {
            const auto X = rep.collect("ensemble", "X");
            const auto U = rep.collect("ensemble", "U");
            const auto Y = rep.collect("goe_reference", "Y");
            detail::append_moments(s, "X", X);
            detail::append_moments(s, "U", U);
            detail::append_moments(s, "Y", Y);
            std::vector<double> edges;
            for (const auto* r : rep.group("ensemble"))
                if (r->ok) edges.push_back(r->edge);
            detail::append_moments(s, "edge", edges);
            s.emplace_back("ks_corrected_vs_goe", ks_two_sample(X, Y));
            s.emplace_back("ks_uncorrected_vs_goe", ks_two_sample(U, Y));
            s.emplace_back("var_gap_ci_lower", detail::bootstrap_var_gap_lower(
                                                   U, X, rep.config.master_seed));
            break;
        }
        case RunCommand::GaussianShift: {
            const auto stat = rep.collect("ensemble", "lambda_stat");
            std::vector<double> edges, cstat, cedges;
            for (const auto* r : rep.group("ensemble"))
                if (r->ok) edges.push_back(r->edge);
            for (const auto* r : rep.group("control"))
                if (r->ok) {
                    cstat.push_back(r->stat("lambda_stat"));
                    cedges.push_back(r->edge);
                }
            detail::append_moments(s, "lambda_stat", stat);
            detail::append_moments(s, "edge", edges);
            s.emplace_back("corr_shift", pearson_correlation(stat, edges));
            s.emplace_back("corr_control", pearson_correlation(cstat, cedges));
            break;
        }
        case RunCommand::Divisible: {
            const auto X = rep.collect("ensemble", "X");
            const auto Y = rep.collect("goe_reference", "Y");
            detail::append_moments(s, "X", X);
            detail::append_moments(s, "Y", Y);
            std::vector<double> edges;
            for (const auto* r : rep.group("ensemble"))
                if (r->ok) edges.push_back(r->edge);
            detail::append_moments(s, "edge", edges);
            s.emplace_back("ks_corrected_vs_goe", ks_two_sample(X, Y));
            break;
        }
    }
    return s;
}

struct HistogramBin {
    double center = 0.0;
    std::uint64_t count = 0;
};

/// Fixed-width histogram of one named statistic; out-of-range values are
/// dropped.
inline std::vector<HistogramBin> histogram(const ExperimentReport& rep, const std::string& g,
                                           const std::string& stat_name) {
    const HistogramSpec& h = rep.config.histogram;
    std::vector<HistogramBin> bins(static_cast<std::size_t>(h.bins));
    const double width = (h.hi - h.lo) / h.bins;
    for (int b = 0; b < h.bins; ++b) bins[static_cast<std::size_t>(b)].center = h.lo + (b + 0.5) * width;
    for (double v : rep.collect(g, stat_name)) {
        if (v < h.lo || v >= h.hi) continue;
        const int b = static_cast<int>((v - h.lo) / width);
        if (b >= 0 && b < h.bins) ++bins[static_cast<std::size_t>(b)].count;
    }
    return bins;
}

}  // namespace edgelab
