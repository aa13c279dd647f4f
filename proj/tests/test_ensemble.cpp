#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "edgelab/ensemble.hpp"
#include "edgelab/spectra.hpp"
#include "edgelab/stats.hpp"
#include "oracles.hpp"

using namespace edgelab;
using Catch::Approx;

TEST_CASE("parameter validation") {
    EnsembleParams bad{1, 2.0, EnsembleModel::ErdosRenyi, 0};
    CHECK_THROWS_AS(bad.validate(), InvalidParamsError);

    // p = 1 boundary: scale factor sqrt(1 - q^2/N) degenerates, rejected
    EnsembleParams p1{2, std::sqrt(2.0), EnsembleModel::ErdosRenyi, 0};
    CHECK_THROWS_AS(sample_erdos_renyi(p1), InvalidParamsError);

    EnsembleParams sub{100, 0.5, EnsembleModel::ErdosRenyi, 0};  // q^2 < 1
    CHECK_THROWS_AS(sample_erdos_renyi(sub), InvalidParamsError);

    CHECK_THROWS_AS(sample_goe(1, 7), InvalidParamsError);
}

TEST_CASE("samplers are symmetric and reproducible") {
    EnsembleParams p{40, 3.0, EnsembleModel::ErdosRenyi, 123456};
    const SymmetricMatrix H1 = sample_erdos_renyi(p);
    const SymmetricMatrix H2 = sample_erdos_renyi(p);
    const SymmetricMatrix W1 = sample_goe(40, 99);
    const SymmetricMatrix W2 = sample_goe(40, 99);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 40; ++j) {
            REQUIRE(H1(i, j) == H1(j, i));
            REQUIRE(H1(i, j) == H2(i, j));
            REQUIRE(W1(i, j) == W1(j, i));
            REQUIRE(W1(i, j) == W2(i, j));
        }
    const SymmetricMatrix H3 = sample_erdos_renyi({40, 3.0, EnsembleModel::ErdosRenyi, 123457});
    bool identical = true;
    for (int i = 0; i < 40 && identical; ++i)
        for (int j = 0; j < 40; ++j)
            if (H3(i, j) != H1(i, j)) {
                identical = false;
                break;
            }
    CHECK_FALSE(identical);
}

TEST_CASE("sparse entries match the exact moment formulas") {
    // pool off-diagonal entries of several samples: iid draws from the entry law
    const int N = 500;
    const double q = 4.0;
    std::vector<double> draws;
    draws.reserve(1000000);
    for (int rep = 0; rep < 8; ++rep) {
        const SymmetricMatrix H = sample_erdos_renyi(
            {N, q, EnsembleModel::ErdosRenyi, 555 + static_cast<std::uint64_t>(rep)});
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) draws.push_back(H(i, j));
    }
    const double n = static_cast<double>(draws.size());
    double m1 = 0.0, m2 = 0.0, m4 = 0.0;
    for (double h : draws) {
        m1 += h;
        m2 += h * h;
        m4 += h * h * h * h;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    // 5 sigma Monte Carlo windows
    const double sd1 = std::sqrt(1.0 / N / n);
    CHECK(std::abs(m1) < 5.0 * sd1);
    const double var2 = entry_moment_exact(4, N, q) - std::pow(entry_moment_exact(2, N, q), 2);
    CHECK(std::abs(m2 - 1.0 / N) < 5.0 * std::sqrt(var2 / n));
    const double var4 = entry_moment_exact(8, N, q) - std::pow(entry_moment_exact(4, N, q), 2);
    CHECK(std::abs(m4 - entry_moment_exact(4, N, q)) < 5.0 * std::sqrt(var4 / n));
}

TEST_CASE("exact entry moments against a direct Monte Carlo oracle") {
    CHECK(entry_moment_exact(2, 123, 4.5) == Approx(1.0 / 123).epsilon(1e-14));

    auto mc_moment = [](int k, int N, double q, int ndraws, std::uint64_t seed) {
        const double p = q * q / N;
        const double scale = 1.0 / (q * std::sqrt(1.0 - p));
        std::mt19937_64 rng(seed);
        std::bernoulli_distribution bern(p);
        double acc = 0.0;
        for (int i = 0; i < ndraws; ++i) {
            const double h = ((bern(rng) ? 1.0 : 0.0) - p) * scale;
            double pw = h;
            for (int j = 1; j < k; ++j) pw *= h;
            acc += pw;
        }
        return acc / ndraws;
    };
    {
        const int N = 100;
        const double q = 5.0;  // p = 0.25
        const int n = 10000000;
        const double mc = mc_moment(3, N, q, n, 2024);
        const double var = entry_moment_exact(6, N, q) - std::pow(entry_moment_exact(3, N, q), 2);
        CHECK(std::abs(mc - entry_moment_exact(3, N, q)) < 5.0 * std::sqrt(var / n));
    }
    {
        const int N = 64;
        const double q = std::sqrt(32.0);  // p = 0.5
        const int n = 10000000;
        const double mc = mc_moment(4, N, q, n, 4048);
        const double var = entry_moment_exact(8, N, q) - std::pow(entry_moment_exact(4, N, q), 2);
        CHECK(std::abs(mc - entry_moment_exact(4, N, q)) < 5.0 * std::sqrt(var / n));
    }
}

TEST_CASE("exact entry cumulants") {
    const int N = 200;
    const double q = 3.0;
    const double p = q * q / N;
    CHECK(entry_cumulant_exact(2, N, q) == Approx(1.0 / N).epsilon(1e-13));
    // closed forms for the centered scaled Bernoulli
    const double kappa4 = p * (1.0 - 6.0 * p * (1.0 - p)) / (std::pow(q, 4) * (1.0 - p));
    CHECK(entry_cumulant_exact(4, N, q) == Approx(kappa4).epsilon(1e-12));
    CHECK(entry_cumulant_exact(3, N, q) ==
          Approx(p * (1.0 - 2.0 * p) / std::pow(q * std::sqrt(1.0 - p), 3)).epsilon(1e-12));
    // normalized C_2 = 1 by construction, C_4 positive in the sparse regime
    CHECK(entry_ck_exact(2, N, q) == Approx(1.0).epsilon(1e-13));
    CHECK(entry_ck_exact(4, 10000, 10.0) > 0.0);
}

TEST_CASE("empirical cumulants: k-statistics recover the entry law") {
    const int N = 400;
    const double q = 3.5;
    const double p = q * q / N;
    const double scale = 1.0 / (q * std::sqrt(1.0 - p));
    std::mt19937_64 rng(31337);
    std::bernoulli_distribution bern(p);
    const int n = 400000;
    std::vector<double> draws(n);
    for (int i = 0; i < n; ++i) draws[i] = ((bern(rng) ? 1.0 : 0.0) - p) * scale;

    const auto est = empirical_cumulants(draws, 4, N, q);
    // C_2 ~ 1 within Monte Carlo error
    CHECK(est.C[0] == Approx(1.0).margin(0.05));
    // C_4 > 0 for the sparse law, consistent with the exact value
    CHECK(est.C[2] > 0.0);
    CHECK(est.C[2] == Approx(entry_ck_exact(4, N, q)).margin(0.5 * entry_ck_exact(4, N, q)));

    // Gaussian entries: higher cumulants vanish
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(N)));
    std::vector<double> gdraws(n);
    for (int i = 0; i < n; ++i) gdraws[i] = gauss(rng);
    const auto gest = empirical_cumulants(gdraws, 4, N, q);
    CHECK(std::abs(gest.C[2]) < 0.05);

    std::vector<double> tiny(100, 0.0);
    CHECK_THROWS_AS(empirical_cumulants(tiny, 4, N, q), InsufficientSamplesError);
}

TEST_CASE("gaussian_divisible endpoints and midpoint") {
    const SymmetricMatrix H = sample_erdos_renyi({30, 3.0, EnsembleModel::ErdosRenyi, 1});
    const SymmetricMatrix W = sample_goe(30, 2);

    const SymmetricMatrix at0 = gaussian_divisible(H, W, 0.0);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) REQUIRE(at0(i, j) == H(i, j));

    const SymmetricMatrix atInf = gaussian_divisible(H, W, 700.0);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j) REQUIRE(atInf(i, j) == Approx(W(i, j)).margin(1e-300));

    const SymmetricMatrix mid = gaussian_divisible(H, W, std::log(2.0));
    const double r = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < 30; ++i)
        for (int j = 0; j < 30; ++j)
            REQUIRE(mid(i, j) == Approx(r * H(i, j) + r * W(i, j)).margin(1e-15));

    const SymmetricMatrix small(10);
    CHECK_THROWS_AS(gaussian_divisible(H, small, 0.5), DimensionMismatchError);
    CHECK_THROWS_AS(gaussian_divisible(H, W, -0.1), InvalidParamsError);
}

TEST_CASE("interpolation preserves the entry variance") {
    const int N = 8;
    const double t = 0.7;
    const int reps = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < reps; ++r) {
        const SymmetricMatrix H = sample_erdos_renyi(
            {N, 2.0, EnsembleModel::ErdosRenyi, 10000 + static_cast<std::uint64_t>(r)});
        const SymmetricMatrix W = sample_goe(N, 500000 + static_cast<std::uint64_t>(r));
        const double v = gaussian_divisible(H, W, t)(0, 1);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / reps;
    const double var = sumsq / reps - mean * mean;
    // Var = e^{-t}/N + (1-e^{-t})/N = 1/N for every t; 5 sigma window on the
    // variance estimator
    const double se = (1.0 / N) * std::sqrt(6.0 / reps);
    CHECK(std::abs(var - 1.0 / N) < 5.0 * se);
}

TEST_CASE("dbm_step: free particle and two-particle drift") {
    // N = 1: no interaction, pure scaled noise
    const int reps = 100000;
    const double dt = 1e-3;
    double acc = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto out = dbm_step(std::vector<double>{0.0}, dt, 42 + static_cast<std::uint64_t>(r));
        acc += out[0];
    }
    CHECK(std::abs(acc / reps) < 5.0 * std::sqrt(dt / reps));

    // N = 2 at (1, -1): drift of the top eigenvalue is 1/4 - 1/2 = -1/4
    double accTop = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto out =
            dbm_step(std::vector<double>{1.0, -1.0}, dt, 777000 + static_cast<std::uint64_t>(r));
        accTop += out[0] - 1.0;
    }
    const double drift = accTop / (reps * dt);
    const double se = std::sqrt(1.0 / (2.0 * dt * reps));  // noise variance dt/N per step
    CHECK(drift == Approx(-0.25).margin(5.0 * se));

    CHECK_THROWS_AS(dbm_step(std::vector<double>{-1.0, 1.0}, dt, 1), InvalidParamsError);
    CHECK_THROWS_AS(dbm_step(std::vector<double>{1e-13, 0.0}, 10.0, 1), CollisionError);
}

TEST_CASE("DBM integration agrees in law with the Gaussian-divisible ensemble") {
    const int N = 50;
    const double t = 0.1;
    const double dt = 5e-4;
    const int reps = 500;
    std::vector<double> top_divisible, top_dbm;
    int collisions = 0;
    for (int r = 0; r < reps; ++r) {
        const SymmetricMatrix H = sample_erdos_renyi(
            {N, std::pow(N, 0.4), EnsembleModel::ErdosRenyi, 31000 + static_cast<std::uint64_t>(r)});
        const SymmetricMatrix W = sample_goe(N, 62000 + static_cast<std::uint64_t>(r));
        top_divisible.push_back(eigen_decompose(gaussian_divisible(H, W, t), false).lambda(1));

        std::vector<double> eigs = eigen_decompose(H, false).eigenvalues;
        bool collided = false;
        const int steps = static_cast<int>(t / dt + 0.5);
        for (int s = 0; s < steps && !collided; ++s) {
            try {
                eigs = dbm_step(eigs, dt,
                                derive_seed(93000 + static_cast<std::uint64_t>(r),
                                            static_cast<std::uint64_t>(s),
                                            StreamPurpose::DysonNoise));
            } catch (const CollisionError&) {
                collided = true;
            }
        }
        if (collided) {
            ++collisions;
            continue;
        }
        top_dbm.push_back(eigs[0]);
    }
    // same 1% failure budget the stats module applies
    CHECK(collisions <= reps / 100);
    CHECK(ks_two_sample(top_divisible, top_dbm) < 0.1);
}

TEST_CASE("GOE normalization puts the top eigenvalue near 2") {
    // E[W_12^2] = 1/N, E[W_11^2] = 2/N
    const int reps = 200000;
    double off = 0.0, diag = 0.0;
    for (int r = 0; r < reps; ++r) {
        const SymmetricMatrix W = sample_goe(2, 7000000 + static_cast<std::uint64_t>(r));
        off += W(0, 1) * W(0, 1);
        diag += W(0, 0) * W(0, 0);
    }
    CHECK(off / reps == Approx(0.5).margin(5.0 * 0.5 * std::sqrt(2.0 / reps)));
    CHECK(diag / reps == Approx(1.0).margin(5.0 * 1.0 * std::sqrt(2.0 / reps)));

    for (int r = 0; r < 10; ++r) {
        const SymmetricMatrix W = sample_goe(1000, 33000 + static_cast<std::uint64_t>(r));
        const double top = eigen_decompose(W, false).lambda(1);
        CHECK(top > 1.8);
        CHECK(top < 2.2);
    }
}
