#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "edgelab/freeconv.hpp"
#include "oracles.hpp"

using namespace edgelab;
using Catch::Approx;

TEST_CASE("evolved solve: endpoints and root enumeration") {
    const CorrectionPolynomial Q({0.03, 0.01});
    const Complex z(1.2, 0.3);
    CHECK(std::abs(solve_stieltjes_t(z, Q, 0.0) - solve_stieltjes(z, Q)) < 1e-12);
    CHECK(std::abs(solve_stieltjes_t(z, Q, 700.0) - m_semicircle(z)) < 1e-10);

    for (double t : {0.1, 0.6, 2.0}) {
        for (double re : {-1.8, 0.4, 2.2}) {
            const Complex zz(re, 0.05);
            const Complex m = solve_stieltjes_t(zz, Q, t);
            const CorrectionPolynomial Qt = Q.evolved(t);
            INFO("t = " << t << ", Re z = " << re);
            // residual of the evolved equation, with Q evaluated at e^{-t/2} m
            const Complex direct =
                1.0 + zz * m + m * m + Q(std::exp(-0.5 * t) * m);
            CHECK(std::abs(direct) < 1e-12);
            CHECK(std::abs(m - oracles::stieltjes_root_oracle(zz, Qt)) < 1e-10);
        }
    }
}

TEST_CASE("subordination identity") {
    const CorrectionPolynomial Q0;
    // t = 0 is the identity map
    CHECK(subordination_check(Complex(0.7, 0.2), Q0, 0.0) == Approx(0.0).margin(1e-14));
    CHECK(subordination_check(Complex(0.5, 0.5), Q0, 1.0) < 1e-10);

    const CorrectionPolynomial Q({0.0, 0.01});
    CHECK(subordination_check(Complex(2.0, 0.1), Q, 0.2) < 1e-9);

    const CorrectionPolynomial Qfull({0.02, 0.01});
    for (double t : {0.05, 0.4, 1.5}) {
        for (double re : {-2.2, -0.5, 0.9, 2.1}) {
            for (double im : {1e-3, 0.2}) {
                INFO("t = " << t << ", z = " << re << " + " << im << "i");
                CHECK(subordination_check(Complex(re, im), Qfull, t) < 1e-9);
            }
        }
    }
}

TEST_CASE("moving edge: decay toward the semicircle") {
    for (double t : {0.0, 0.7, 3.0, 100.0})
        CHECK(edge_t(CorrectionPolynomial::zero(), t).edge() == Approx(2.0).margin(1e-14));

    const CorrectionPolynomial Q({0.0, 0.01});
    for (double t : {0.0, 0.5, 1.0}) {
        const double L = edge_t(Q, t).edge();
        INFO("t = " << t);
        CHECK(std::abs(L - (2.0 + 0.01 * std::exp(-2.0 * t))) < 3e-4);
    }
    CHECK(edge_t(Q, 0.0).edge() == Approx(find_edge(Q).edge()).margin(1e-12));

    // L~_t - 2 strictly decreasing and positive for a quartic correction
    double prev = edge_t(Q, 0.0).edge() - 2.0;
    CHECK(prev > 0.0);
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double gap = edge_t(Q, t).edge() - 2.0;
        CHECK(gap > 0.0);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("edge velocity identity") {
    for (double t : {0.0, 0.3, 2.0})
        CHECK(edge_velocity(CorrectionPolynomial::zero(), t) == 0.0);

    const CorrectionPolynomial Q({0.0, 0.01});
    // t = 0, zeta ~ -1: velocity ~ (1/2) * 4 * 0.01 * zeta^3
    CHECK(edge_velocity(Q, 0.0) == Approx(-0.02).margin(1e-3));

    // central-difference check across a (Q, t) grid
    const double h = 1e-4;
    for (const auto& coeffs :
         {std::vector<double>{0.0, 0.01}, std::vector<double>{0.02}, std::vector<double>{0.02, 0.01}}) {
        const CorrectionPolynomial Qc(coeffs);
        for (double t : {0.1, 0.3, 1.0}) {
            const double fd = (edge_t(Qc, t + h).edge() - edge_t(Qc, t - h).edge()) / (2.0 * h);
            INFO("t = " << t << ", L = " << coeffs.size());
            CHECK(std::abs(fd - edge_velocity(Qc, t)) < 1e-5);
        }
        // one-sided second-order stencil at t = 0
        const double fd0 = (-3.0 * edge_t(Qc, 0.0).edge() + 4.0 * edge_t(Qc, h).edge() -
                            edge_t(Qc, 2.0 * h).edge()) /
                           (2.0 * h);
        CHECK(std::abs(fd0 - edge_velocity(Qc, 0.0)) < 1e-5);
    }
}

TEST_CASE("mass is conserved along the flow") {
    const CorrectionPolynomial Q({0.02, 0.01});
    for (double t : {0.0, 0.4, 1.2}) {
        const EvolvedMeasure ev = edge_t(Q, t);
        INFO("t = " << t);
        CHECK(ev.measure.total_mass() == Approx(1.0).margin(1e-8));
    }
}

TEST_CASE("evolved measure invariants") {
    const CorrectionPolynomial Q({0.02, 0.01});
    const EvolvedMeasure ev = edge_t(Q, 0.35);
    CHECK(ev.measure.stationarity_residual() < 1e-12);
    CHECK(ev.measure.poly_residual() < 1e-12);
    CHECK(ev.t == 0.35);
    CHECK_THROWS_AS(edge_t(Q, -0.5), InvalidParamsError);
}
