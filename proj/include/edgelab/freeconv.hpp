#pragma once

#include <cmath>
#include <complex>

#include "edgelab/errors.hpp"
#include "edgelab/measure.hpp"

namespace edgelab {

/// Measure evolved by free convolution with the semicircle flow: m~_t solves
/// 1 + z m + m^2 + Q(e^{-t/2} m) = 0, the same algebraic form with the
/// coefficients a_{2l} scaled by e^{-tl}.
struct EvolvedMeasure {
    CorrectionPolynomial base;   // Q at t = 0
    double t = 0.0;
    EquilibriumMeasure measure;  // equilibrium handle for Q_t

    double edge() const { return measure.edge(); }
    double edge_stieltjes() const { return measure.edge_stieltjes(); }
};

/// Upper-half-plane root of the evolved self-consistent equation.
inline Complex solve_stieltjes_t(Complex z, const CorrectionPolynomial& Q, double t,
                                 double tol = 1e-13, int max_iter = 100) {
    if (!(t >= 0.0)) throw InvalidParamsError("solve_stieltjes_t: t must be >= 0");
    return solve_stieltjes(z, Q.evolved(t), tol, max_iter);
}

/// Moving edge L~_t via the t = 0 machinery applied to Q_t.
inline EvolvedMeasure edge_t(const CorrectionPolynomial& Q, double t) {
    if (!(t >= 0.0)) throw InvalidParamsError("edge_t: t must be >= 0");
    return EvolvedMeasure{Q, t, find_edge(Q.evolved(t))};
}

/// Residual of the subordination identity
///   e^{-t/2} m~_t(z) = m~(xi_t(z)),
///   xi_t(z) = e^{t/2} z + e^{t/2} (1 - e^{-t}) m~_t(z).
inline double subordination_check(Complex z, const CorrectionPolynomial& Q, double t) {
    if (!(z.imag() > 0.0)) throw InvalidParamsError("subordination_check: need Im z > 0");
    const Complex mt = solve_stieltjes_t(z, Q, t);
    const double et2 = std::exp(0.5 * t);
    const Complex xi = et2 * z + et2 * (1.0 - std::exp(-t)) * mt;
    const Complex m0 = solve_stieltjes(xi, Q);
    return std::abs(std::exp(-0.5 * t) * mt - m0);
}

/// Edge velocity d L~_t / dt = (1/2) d/dm Q_t(m) at m = zeta_t, evaluated
/// analytically on the scaled coefficients.
inline double edge_velocity(const CorrectionPolynomial& Q, double t) {
    const EvolvedMeasure ev = edge_t(Q, t);
    return 0.5 * ev.measure.correction().derivative(ev.measure.edge_stieltjes());
}

}  // namespace edgelab
