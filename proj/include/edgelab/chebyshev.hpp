#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "edgelab/errors.hpp"

namespace edgelab {

/// Chebyshev interpolant of a smooth function on [a, b], with an exact
/// antiderivative in coefficient space. Fitted adaptively at the first-kind
/// nodes until the coefficient tail drops below tol.
class ChebyshevSeries {
  public:
    ChebyshevSeries() = default;

    static ChebyshevSeries fit(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int max_degree = 2048) {
        ChebyshevSeries s;
        s.a_ = a;
        s.b_ = b;
        for (int n = 65; n <= max_degree + 1; n = 2 * n - 1) {
            s.coef_ = coefficients(f, a, b, n);
            double scale = 0.0;
            for (double c : s.coef_) scale = std::max(scale, std::abs(c));
            double tail = 0.0;
            for (int k = n - 8; k < n; ++k) tail = std::max(tail, std::abs(s.coef_[k]));
            if (tail <= tol * std::max(scale, 1e-300)) {
                s.trim(tol * scale);
                s.build_antiderivative();
                return s;
            }
        }
        throw QuadratureError("ChebyshevSeries: no convergence at max degree");
    }

    double operator()(double x) const { return clenshaw(coef_, x); }

    /// Definite integral of the interpolant over [x0, x1] (exact for the
    /// series; both endpoints inside [a, b]).
    double integrate(double x0, double x1) const {
        return clenshaw(anti_coef_, x1) - clenshaw(anti_coef_, x0);
    }

    double lower() const { return a_; }
    double upper() const { return b_; }
    std::size_t size() const { return coef_.size(); }

  private:
    static std::vector<double> coefficients(const std::function<double(double)>& f, double a,
                                            double b, int n) {
        const double pi = 3.14159265358979323846;
        std::vector<double> fx(n);
        for (int j = 0; j < n; ++j) {
            const double t = std::cos(pi * (j + 0.5) / n);
            fx[j] = f(0.5 * (a + b) + 0.5 * (b - a) * t);
        }
        std::vector<double> c(n, 0.0);
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += fx[j] * std::cos(pi * k * (j + 0.5) / n);
            c[k] = 2.0 * s / n;
        }
        c[0] *= 0.5;
        return c;
    }

    double clenshaw(const std::vector<double>& c, double x) const {
        const double t = (2.0 * x - a_ - b_) / (b_ - a_);
        double b1 = 0.0, b2 = 0.0;
        for (std::size_t k = c.size(); k-- > 1;) {
            const double tmp = 2.0 * t * b1 - b2 + c[k];
            b2 = b1;
            b1 = tmp;
        }
        return t * b1 - b2 + (c.empty() ? 0.0 : c[0]);
    }

    void build_antiderivative() {
        const std::size_t n = coef_.size();
        anti_coef_.assign(n + 1, 0.0);
        const double h = 0.5 * (b_ - a_);  // dx/dt of the affine map
        auto c = [&](std::size_t k) { return k < n ? coef_[k] : 0.0; };
        for (std::size_t k = 2; k <= n; ++k)
            anti_coef_[k] = h * (c(k - 1) - c(k + 1)) / (2.0 * static_cast<double>(k));
        if (n > 0) anti_coef_[1] = h * (coef_[0] - 0.5 * c(2));  // T_0 -> T_1, T_2 -> ...
    }

    void trim(double eps) {
        std::size_t n = coef_.size();
        while (n > 8 && std::abs(coef_[n - 1]) <= eps) --n;
        coef_.resize(n);
    }

    double a_ = -1.0, b_ = 1.0;
    std::vector<double> coef_;
    std::vector<double> anti_coef_;
};

}  // namespace edgelab
