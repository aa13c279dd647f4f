#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <string>
#include <vector>

#include "edgelab/chebyshev.hpp"
#include "edgelab/errors.hpp"
#include "edgelab/forest.hpp"

namespace edgelab {

using Complex = std::complex<double>;

/// Even polynomial Q(m) = sum_l a_{2l} m^{2l}. Construction rejects
/// coefficients outside the perturbative guard |a_{2l}| <= 0.5.
class CorrectionPolynomial {
  public:
    CorrectionPolynomial() = default;

    /// coeffs[l-1] = a_{2l}.
    explicit CorrectionPolynomial(std::vector<double> coeffs) : a_(std::move(coeffs)) {
        for (double c : a_) {
            if (!(std::abs(c) <= 0.5))
                throw InvalidCorrectionError(
                    "CorrectionPolynomial: coefficient outside perturbative guard, |" +
                    std::to_string(c) + "| > 0.5");
        }
        while (!a_.empty() && a_.back() == 0.0) a_.pop_back();
    }

    static CorrectionPolynomial zero() { return CorrectionPolynomial(); }

    const std::vector<double>& coeffs() const { return a_; }
    int degree() const { return 2 * static_cast<int>(a_.size()); }
    bool is_zero() const { return a_.empty(); }

    template <class T>
    T operator()(T m) const {
        const T m2 = m * m;
        T acc{};
        for (std::size_t l = a_.size(); l-- > 0;) acc = (acc + a_[l]) * m2;
        return acc;
    }

    /// Q'(m).
    template <class T>
    T derivative(T m) const {
        const T m2 = m * m;
        T acc{};
        for (std::size_t l = a_.size(); l-- > 0;)
            acc = acc * m2 + static_cast<double>(2 * (l + 1)) * a_[l];
        return acc * m;
    }

    /// Coefficients of Q_t(m) = Q(e^{-t/2} m): a_{2l} -> a_{2l} e^{-tl}.
    /// Beyond t = 50 every coefficient is below 1e-21 and Q_t is dropped.
    CorrectionPolynomial evolved(double t) const {
        if (t > 50.0) return CorrectionPolynomial();
        std::vector<double> b(a_.size());
        for (std::size_t l = 0; l < a_.size(); ++l)
            b[l] = a_[l] * std::exp(-t * static_cast<double>(l + 1));
        return CorrectionPolynomial(std::move(b));
    }

  private:
    std::vector<double> a_;
};

/// P(z, m) = 1 + z m + m^2 + Q(m).
inline Complex self_consistent_poly(Complex z, Complex m, const CorrectionPolynomial& Q) {
    return 1.0 + z * m + m * m + Q(m);
}

/// d P / d m = z + 2m + Q'(m).
inline Complex self_consistent_poly_dm(Complex z, Complex m, const CorrectionPolynomial& Q) {
    return z + 2.0 * m + Q.derivative(m);
}

/// Semicircle Stieltjes transform: the root of 1 + z m + m^2 = 0 in the upper
/// half plane (for Im z > 0; on the real axis, the limit from above).
inline Complex m_semicircle(Complex z) {
    const Complex disc = std::sqrt(z * z - 4.0);
    Complex m = 0.5 * (-z + disc);
    if (m.imag() < 0.0 || (m.imag() == 0.0 && std::abs(m) > 1.0)) m = 0.5 * (-z - disc);
    return m;
}

namespace detail {

struct NewtonResult {
    Complex m;
    double residual = 0.0;
    bool converged = false;
};

inline NewtonResult newton_root(Complex z, Complex seed, const CorrectionPolynomial& Q,
                                double tol, int max_iter) {
    Complex m = seed;
    for (int it = 0; it < max_iter; ++it) {
        const Complex p = self_consistent_poly(z, m, Q);
        if (std::abs(p) < tol) return {m, std::abs(p), true};
        const Complex dp = self_consistent_poly_dm(z, m, Q);
        if (dp == Complex(0.0, 0.0)) break;
        m -= p / dp;
    }
    const double r = std::abs(self_consistent_poly(z, m, Q));
    return {m, r, r < tol};
}

}  // namespace detail

/// Upper-half-plane root of P(z, m) = 0, Newton-seeded at the semicircle
/// branch; on failure the root is continued through a homotopy in Q
/// (tau Q for tau = 0, 1/4, 1/2, 3/4, 1).
inline Complex solve_stieltjes(Complex z, const CorrectionPolynomial& Q, double tol = 1e-13,
                               int max_iter = 100) {
    if (!(z.imag() > 0.0)) throw InvalidParamsError("solve_stieltjes: need Im z > 0");
    const Complex seed = m_semicircle(z);
    auto r = detail::newton_root(z, seed, Q, tol, max_iter);
    if (!r.converged || !(r.m.imag() > 0.0)) {
        Complex m = seed;
        bool ok = true;
        for (double tau : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            std::vector<double> scaled;
            for (double c : Q.coeffs()) scaled.push_back(tau * c);
            CorrectionPolynomial Qt(std::move(scaled));
            auto rt = detail::newton_root(z, m, Qt, tol, max_iter);
            if (!rt.converged) {
                ok = false;
                break;
            }
            m = rt.m;
        }
        if (ok && m.imag() > 0.0) return m;
        throw NoUpperHalfPlaneRootError(
            "solve_stieltjes: Newton failed to reach an upper-half-plane root (Q outside the "
            "perturbative regime or bad seed)");
    }
    return r.m;
}

/// Handle for the corrected equilibrium measure: the correction polynomial,
/// the right edge L~, the edge Stieltjes value zeta = m~(L~), solver
/// residuals and a Chebyshev profile of the edge-substituted density used for
/// CDF and quantile queries.
class EquilibriumMeasure {
  public:
    const CorrectionPolynomial& correction() const { return Q_; }
    double edge() const { return edge_; }
    double edge_stieltjes() const { return zeta_; }
    double stationarity_residual() const { return stat_residual_; }
    double poly_residual() const { return poly_residual_; }
    double total_mass() const { return 2.0 * profile_->integrate(0.0, u_max_); }

    /// rho~(x): Im of the branch-continued root at eta = 0, over pi.
    double density(double x) const {
        const double ax = std::abs(x);
        if (ax >= edge_ - 1e-12) return 0.0;
        return density_root(ax).imag() / pi();
    }

    /// Tail mass T(x) = int_x^{L~} rho~; uses the symmetry of rho~ for x < 0.
    double tail_mass(double x) const {
        if (x >= edge_) return 0.0;
        if (x < 0.0) return 1.0 - tail_mass(-x);
        const double u = std::sqrt(std::max(0.0, edge_ - x));
        return profile_->integrate(0.0, std::min(u, u_max_));
    }

    double cdf(double x) const { return 1.0 - tail_mass(x); }

    /// gamma_k solving int_{gamma_k}^{L~} rho~ = (k - 1/2)/N, k = 1..N.
    /// Indices above N/2 are mirrored through the measure's symmetry.
    std::vector<double> classical_locations(int N) const {
        if (N < 1) throw InvalidParamsError("classical_locations: N must be >= 1");
        std::vector<double> gamma(N);
        for (int k = 1; 2 * k <= N + 1; ++k) {
            const double g = quantile_tail((k - 0.5) / N);
            gamma[k - 1] = g;
            gamma[N - k] = -g;
        }
        return gamma;
    }

    /// Single classical location gamma_k.
    double classical_location(int k, int N) const {
        if (k < 1 || k > N) throw InvalidParamsError("classical_location: index out of range");
        if (2 * k > N + 1) return -classical_location(N + 1 - k, N);
        return quantile_tail((k - 0.5) / N);
    }

    /// gamma with tail_mass(gamma) = tau, for tau in (0, 1/2]; bisection on
    /// the monotone tail plus Newton polish with the density.
    double quantile_tail(double tau) const {
        if (!(tau > 0.0 && tau <= 0.5 + 1e-12))
            throw InvalidParamsError("quantile_tail: tau must lie in (0, 1/2]");
        double lo = 0.0, hi = edge_;  // tail(lo) ~ 1/2, tail(hi) = 0
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double t = tail_mass(mid);
            if (t > tau)
                lo = mid;
            else
                hi = mid;
            if (hi - lo < 1e-15 * edge_) break;
        }
        double g = 0.5 * (lo + hi);
        for (int it = 0; it < 4; ++it) {
            const double resid = tail_mass(g) - tau;
            const double rho = density(g);
            if (rho <= 0.0) break;
            const double step = resid / rho;
            const double gn = std::clamp(g + step, 0.0, edge_);
            if (gn == g) break;
            g = gn;
        }
        return g;
    }

    struct ImAsymptoticsReport {
        double inside_min = 0.0, inside_max = 0.0;
        double outside_min = 0.0, outside_max = 0.0;
        bool pass = false;
    };

    /// Ratios Im m~(L~ -+ kappa + i eta) against the square-root profile
    /// sqrt(kappa+eta) inside and eta/sqrt(kappa+eta) outside; comparability
    /// window [1/10, 10].
    ImAsymptoticsReport im_asymptotics_check(const std::vector<double>& kappa_grid,
                                             const std::vector<double>& eta_grid) const {
        ImAsymptoticsReport rep;
        bool first_in = true, first_out = true;
        for (double kappa : kappa_grid) {
            for (double eta : eta_grid) {
                const double denom = std::sqrt(kappa + eta);
                const Complex mi = solve_stieltjes(Complex(edge_ - kappa, eta), Q_);
                const double rin = mi.imag() / denom;
                if (first_in || rin < rep.inside_min) rep.inside_min = rin;
                if (first_in || rin > rep.inside_max) rep.inside_max = rin;
                first_in = false;
                const Complex mo = solve_stieltjes(Complex(edge_ + kappa, eta), Q_);
                const double rout = mo.imag() * denom / eta;
                if (first_out || rout < rep.outside_min) rep.outside_min = rout;
                if (first_out || rout > rep.outside_max) rep.outside_max = rout;
                first_out = false;
            }
        }
        rep.pass = rep.inside_min >= 0.1 && rep.inside_max <= 10.0 && rep.outside_min >= 0.1 &&
                   rep.outside_max <= 10.0;
        return rep;
    }

    friend EquilibriumMeasure find_edge(const CorrectionPolynomial& Q);

  private:
    static constexpr double pi() { return 3.14159265358979323846; }

    /// Branch-continued root at z = x (real, |x| < L~): Newton at eta = 0
    /// from an eta-ladder continuation seed; returns the Im >= 0 root.
    Complex density_root(double x) const {
        Complex seed = m_semicircle(Complex(x, 1e-3));
        for (double eta : {1e-3, 1e-6, 0.0}) {
            auto r = detail::newton_root(Complex(x, eta), seed, Q_, 1e-13, 60);
            if (!r.converged) break;
            seed = r.m;
        }
        auto r = detail::newton_root(Complex(x, 0.0), seed, Q_, 1e-13, 60);
        if (!r.converged) {
            // fall back to a slower ladder before giving up
            seed = m_semicircle(Complex(x, 0.1));
            for (double eta : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 0.0}) {
                auto rr = detail::newton_root(Complex(x, eta), seed, Q_, 1e-13, 80);
                if (!rr.converged)
                    throw NoUpperHalfPlaneRootError("density: branch continuation failed at x = " +
                                                    std::to_string(x));
                seed = rr.m;
            }
            r = detail::newton_root(Complex(x, 0.0), seed, Q_, 1e-13, 80);
        }
        Complex m = r.m;
        if (m.imag() < 0.0) m = std::conj(m);
        return m;
    }

    CorrectionPolynomial Q_;
    double edge_ = 2.0;
    double zeta_ = -1.0;
    double stat_residual_ = 0.0;
    double poly_residual_ = 0.0;
    double u_max_ = 0.0;
    std::shared_ptr<const ChebyshevSeries> profile_;  // g(u) = 2u rho~(L~ - u^2)
};

/// Locates the random edge: solves the stationarity condition
/// d/dm [-1/m - m - Q(m)/m] = 0 for zeta near -1, then
/// L~ = -1/zeta - zeta - Q(zeta)/zeta. Newton with a bisection safeguard on
/// the bracket (-1.5, -0.5); leaving the bracket raises EdgeNotFound.
inline EquilibriumMeasure find_edge(const CorrectionPolynomial& Q) {
    // f(m) = -1/m - m - Q(m)/m; f'(m) = 1/m^2 - 1 - sum (2l-1) a_{2l} m^{2l-2}
    const auto& a = Q.coeffs();
    auto fprime = [&](double m) {
        double acc = 0.0;
        const double m2 = m * m;
        for (std::size_t l = a.size(); l-- > 0;)
            acc = acc * m2 + static_cast<double>(2 * (l + 1) - 1) * a[l];
        return 1.0 / m2 - 1.0 - acc;
    };
    auto fsecond = [&](double m) {
        double acc = 0.0;
        const double m2 = m * m;
        for (std::size_t l = a.size(); l-- > 0;)
            acc = acc * m2 +
                  static_cast<double>((2 * (l + 1) - 1) * (2 * (l + 1) - 2)) * a[l];
        return -2.0 / (m2 * m) - acc * m;
    };

    double lo = -1.5, hi = -0.5;
    double flo = fprime(lo), fhi = fprime(hi);
    if (!(flo < 0.0) || !(fhi > 0.0))
        throw EdgeNotFoundError("find_edge: stationarity has no root in (-1.5, -0.5)");
    double zeta = -1.0;
    for (int it = 0; it < 200; ++it) {
        const double g = fprime(zeta);
        if (std::abs(g) < 1e-15) break;
        if (g < 0.0)
            lo = zeta;
        else
            hi = zeta;
        const double step = g / fsecond(zeta);
        double next = zeta - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == zeta) break;
        zeta = next;
    }
    if (!(zeta > -1.5 && zeta < -0.5))
        throw EdgeNotFoundError("find_edge: Newton left the bracket (-1.5, -0.5)");

    EquilibriumMeasure M;
    M.Q_ = Q;
    M.zeta_ = zeta;
    M.edge_ = -1.0 / zeta - zeta - Q(zeta) / zeta;
    M.stat_residual_ = std::abs(fprime(zeta));
    M.poly_residual_ =
        std::abs(self_consistent_poly(Complex(M.edge_, 0.0), Complex(zeta, 0.0), Q));
    M.u_max_ = std::sqrt(M.edge_);

    // edge-substituted density profile: x = L~ - u^2 absorbs the square root
    const double L = M.edge_;
    auto g = [&M, L](double u) {
        const double x = L - u * u;
        if (x <= 0.0) return 2.0 * u * M.density(0.0);
        return 2.0 * u * M.density(x);
    };
    M.profile_ = std::make_shared<ChebyshevSeries>(ChebyshevSeries::fit(g, 0.0, M.u_max_, 1e-13));
    return M;
}

/// a_{2l} = sum over terms of order 2l of coefficient * forest weight.
inline CorrectionPolynomial build_correction(const SymmetricMatrix& H,
                                             const std::vector<ForestTerm>& terms) {
    if (terms.empty()) throw InvalidParamsError("build_correction: term list is empty");
    int max_order = 0;
    for (const auto& t : terms) {
        t.validate();
        if (t.order() > 8)
            throw InvalidParamsError("build_correction: term order exceeds 2L_max = 8");
        max_order = std::max(max_order, t.order());
    }
    std::vector<double> a(max_order / 2, 0.0);
    for (const auto& t : terms) a[t.order() / 2 - 1] += t.coefficient * forest_weight(t.forest, H);
    return CorrectionPolynomial(std::move(a));
}

inline CorrectionPolynomial build_correction(const SymmetricMatrix& H) {
    return build_correction(H, default_correction_terms(H.dim()));
}

}  // namespace edgelab
