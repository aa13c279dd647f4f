#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "edgelab/report_io.hpp"
#include "edgelab/stats.hpp"

using namespace edgelab;
using Catch::Approx;

TEST_CASE("ks_two_sample") {
    CHECK(ks_two_sample({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
    CHECK(ks_two_sample({-3.0, -2.0, -1.0}, {11.0, 12.0}) == 1.0);
    CHECK(ks_two_sample({1.0, 2.0}, {1.5}) == Approx(0.5));
    CHECK_THROWS_AS(ks_two_sample({}, {1.0}), EmptySampleError);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> x(300), y(200);
    for (auto& v : x) v = g(rng);
    for (auto& v : y) v = g(rng) + 0.3;
    const double d1 = ks_two_sample(x, y);
    const double d2 = ks_two_sample(y, x);
    CHECK(d1 == d2);  // symmetric
    CHECK(d1 >= 0.0);
    CHECK(d1 <= 1.0);
}

TEST_CASE("GOE split samples look identically distributed") {
    // same law on both sides: KS below the 1% critical value 1.63 sqrt(2/R)
    const int R = 200;
    ExperimentConfig cfg;
    cfg.ensemble = {80, std::sqrt(80.0), EnsembleModel::Goe, 0};
    cfg.replicates = R;
    cfg.master_seed = 11;
    std::vector<double> a, b;
    const double n23 = std::pow(80.0, 2.0 / 3.0);
    for (int i = 0; i < R; ++i) {
        const auto w1 = sample_goe(80, derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                                   StreamPurpose::GoeMatrix));
        const auto w2 = sample_goe(80, derive_seed(cfg.master_seed, static_cast<std::uint64_t>(i),
                                                   StreamPurpose::GoeReference));
        a.push_back(n23 * (eigen_decompose(w1, false).lambda(1) - 2.0));
        b.push_back(n23 * (eigen_decompose(w2, false).lambda(1) - 2.0));
    }
    CHECK(ks_two_sample(a, b) < 1.63 * std::sqrt(2.0 / R));
}

TEST_CASE("config validation") {
    ExperimentConfig cfg;
    cfg.ensemble = {100, 3.0, EnsembleModel::ErdosRenyi, 0};
    cfg.replicates = 1;
    CHECK_THROWS_AS(cfg.validate(), InvalidParamsError);
    cfg.replicates = 4;
    cfg.k_range = {0};
    CHECK_THROWS_AS(cfg.validate(), InvalidParamsError);
    cfg.k_range = {1, 100};
    CHECK_NOTHROW(cfg.validate());
    cfg.t = -1.0;
    CHECK_THROWS_AS(cfg.validate(), InvalidParamsError);
}

TEST_CASE("edge fluctuations: determinism, parallel invariance, summary recompute") {
    ExperimentConfig cfg;
    cfg.ensemble = {60, std::pow(60.0, 0.35), EnsembleModel::ErdosRenyi, 0};
    cfg.replicates = 12;
    cfg.master_seed = 314159;

    const ExperimentReport r1 = run_edge_fluctuations(cfg, 1);
    const ExperimentReport r2 = run_edge_fluctuations(cfg, 1);
    const ExperimentReport r4 = run_edge_fluctuations(cfg, 4);

    REQUIRE(r1.records.size() == 24);
    const Json j1 = report_to_json(r1);
    CHECK(j1 == report_to_json(r2));
    CHECK(j1 == report_to_json(r4));
    CHECK(report_to_csv(r1) == report_to_csv(r4));

    // summary is a pure function of the records
    CHECK(r1.summary == recompute_summary(r1));

    // every ensemble record carries the corrected and uncorrected statistics
    for (const auto* rec : r1.group("ensemble")) {
        REQUIRE(rec->ok);
        CHECK(rec->a_coeffs.size() == 2);
        CHECK(std::isfinite(rec->stat("X")));
        CHECK(std::isfinite(rec->stat("U")));
        CHECK(rec->edge > 1.5);
    }
    CHECK(r1.summary_value("ks_corrected_vs_goe") >= 0.0);
    CHECK(r1.summary_value("ks_corrected_vs_goe") <= 1.0);
}

TEST_CASE("rigidity run produces normalized deviations") {
    ExperimentConfig cfg;
    cfg.ensemble = {80, std::pow(80.0, 0.35), EnsembleModel::ErdosRenyi, 0};
    cfg.replicates = 10;
    cfg.k_range = {1, 40};
    cfg.master_seed = 999;
    const ExperimentReport rep = run_rigidity(cfg, 2);
    for (const auto* rec : rep.group("ensemble")) {
        REQUIRE(rec->ok);
        CHECK(rec->stat("dev_k1") >= 0.0);
        CHECK(rec->stat("dev_k40") >= 0.0);
        CHECK(std::isfinite(rec->stat("dev_k1")));
    }
    CHECK(rep.summary_value("p99_dev_k1") < 100.0);

    // GOE flavor runs against the semicircle
    ExperimentConfig goe = cfg;
    goe.ensemble = {80, std::sqrt(80.0), EnsembleModel::Goe, 0};
    const ExperimentReport grep = run_rigidity(goe, 1);
    for (const auto* rec : grep.group("ensemble")) {
        REQUIRE(rec->ok);
        CHECK(rec->a_coeffs.empty());
        CHECK(rec->edge == Approx(2.0).margin(1e-12));
    }
}

TEST_CASE("replicate failure budget fails loudly") {
    ExperimentConfig cfg;
    cfg.ensemble = {40, 3.0, EnsembleModel::ErdosRenyi, 0};
    cfg.replicates = 6;
    cfg.master_seed = 5;
    // a forest term whose weight is deterministically outside the guard
    cfg.correction_terms = {{single_edge_forest(1), 1.0, std::nullopt},
                            {isolated_vertices_forest(2), 5.0, 4}};
    CHECK_THROWS_AS(run_edge_fluctuations(cfg, 1), Error);
}

TEST_CASE("gaussian shift: regime guard") {
    ExperimentConfig cfg;
    cfg.ensemble = {100, std::pow(100.0, 0.45), EnsembleModel::ErdosRenyi, 0};
    cfg.replicates = 4;
    CHECK_THROWS_AS(run_gaussian_shift(cfg, 1), RegimeViolationError);
}

TEST_CASE("gaussian shift: edge shift dominates at small q") {
    ExperimentConfig cfg;
    cfg.ensemble = {500, std::pow(500.0, 0.2), EnsembleModel::ErdosRenyi, 0};
    cfg.replicates = 120;
    cfg.master_seed = 2718;
    const ExperimentReport rep = run_gaussian_shift(cfg, 2);
    CHECK(rep.summary_value("corr_shift") > 0.5);
    CHECK(std::abs(rep.summary_value("corr_control")) < 0.2);
}

TEST_CASE("divisible run at t=0 reproduces the edge-fluctuation statistic bit-exactly") {
    ExperimentConfig cfg;
    cfg.ensemble = {60, std::pow(60.0, 0.35), EnsembleModel::ErdosRenyi, 0};
    cfg.replicates = 10;
    cfg.master_seed = 77;

    const ExperimentReport ef = run_edge_fluctuations(cfg, 1);
    ExperimentConfig cfg0 = cfg;
    cfg0.t = 0.0;
    const ExperimentReport dv = run_divisible_edge(cfg0, 2);
    const auto x1 = ef.collect("ensemble", "X");
    const auto x2 = dv.collect("ensemble", "X");
    REQUIRE(x1.size() == x2.size());
    for (std::size_t i = 0; i < x1.size(); ++i) REQUIRE(x1[i] == x2[i]);

    // large t: the interpolation has essentially forgotten the sparse part
    ExperimentConfig cfg5 = cfg;
    cfg5.t = 5.0;
    const ExperimentReport dv5 = run_divisible_edge(cfg5, 2);
    CHECK(dv5.summary_value("ks_corrected_vs_goe") <= 1.0);
    for (const auto* rec : dv5.group("ensemble")) REQUIRE(rec->ok);
}

TEST_CASE("histogram bins") {
    ExperimentConfig cfg;
    cfg.ensemble = {60, std::pow(60.0, 0.35), EnsembleModel::ErdosRenyi, 0};
    cfg.replicates = 12;
    cfg.master_seed = 13;
    cfg.histogram = {-6.0, 3.0, 18};
    const ExperimentReport rep = run_edge_fluctuations(cfg, 1);
    const auto bins = histogram(rep, "ensemble", "X");
    REQUIRE(bins.size() == 18);
    CHECK(bins.front().center == Approx(-6.0 + 0.25));
    std::uint64_t total = 0;
    for (const auto& b : bins) total += b.count;
    CHECK(total <= 12);
}

TEST_CASE("summary quantiles and moments helpers") {
    std::vector<double> v{4.0, 1.0, 3.0, 2.0};
    CHECK(sample_quantile(v, 0.0) == 1.0);
    CHECK(sample_quantile(v, 1.0) == 4.0);
    CHECK(sample_quantile(v, 0.5) == Approx(2.5));
    CHECK(sample_mean(v) == Approx(2.5));
    CHECK(sample_variance(v) == Approx(5.0 / 3.0));
    CHECK(pearson_correlation({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == Approx(1.0));
    CHECK(pearson_correlation({1.0, 2.0, 3.0}, {6.0, 4.0, 2.0}) == Approx(-1.0));
}
