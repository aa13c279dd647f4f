#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "edgelab/ensemble.hpp"
#include "edgelab/errors.hpp"
#include "edgelab/measure.hpp"

namespace edgelab {

/// Full spectrum, eigenvalues sorted descending; eigenvectors (columns,
/// matching the eigenvalue order) retained on request.
struct SpectrumResult {
    std::vector<double> eigenvalues;
    std::optional<Eigen::MatrixXd> eigenvectors;

    double lambda(int k) const { return eigenvalues[static_cast<std::size_t>(k) - 1]; }
};

/// Householder tridiagonalization + implicit-shift iteration via Eigen's
/// selfadjoint solver. N is capped; the solver reports ConvergenceFailure
/// through Eigen's info flag.
inline SpectrumResult eigen_decompose(const SymmetricMatrix& H, bool vectors,
                                      int max_dim = 4096) {
    const int N = H.dim();
    if (N < 1 || N > max_dim)
        throw InvalidParamsError("eigen_decompose: dimension " + std::to_string(N) +
                                 " outside [1, " + std::to_string(max_dim) + "]");
    Eigen::Map<const Eigen::MatrixXd> A(H.data(), N, N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        A, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw ConvergenceFailureError("eigen_decompose: iteration failed to converge");
    SpectrumResult out;
    out.eigenvalues.resize(N);
    for (int i = 0; i < N; ++i) out.eigenvalues[i] = solver.eigenvalues()(N - 1 - i);
    if (vectors) {
        Eigen::MatrixXd U(N, N);
        for (int i = 0; i < N; ++i) U.col(i) = solver.eigenvectors().col(N - 1 - i);
        out.eigenvectors = std::move(U);
    }
    return out;
}

enum class GreensMode { Full, Diag };

/// G(z) = (H - z)^{-1} assembled from the eigendecomposition; diag mode keeps
/// only G_ii and the normalized trace m_N.
struct GreensFunctionSample {
    Complex z;
    GreensMode mode = GreensMode::Full;
    Eigen::MatrixXcd entries;        // full mode
    std::vector<Complex> diagonal;   // diag mode
    Complex mN;

    Complex g(int i, int j) const { return entries(i, j); }
    Complex gii(int i) const {
        return mode == GreensMode::Full ? entries(i, i) : diagonal[static_cast<std::size_t>(i)];
    }
};

inline GreensFunctionSample greens_function(const SpectrumResult& spec, Complex z,
                                            GreensMode mode = GreensMode::Full) {
    if (z.imag() == 0.0) throw InvalidParamsError("greens_function: need Im z != 0");
    if (!spec.eigenvectors) throw InvalidParamsError("greens_function: eigenvectors required");
    const int N = static_cast<int>(spec.eigenvalues.size());
    Eigen::VectorXcd inv(N);
    Complex trace(0.0, 0.0);
    for (int a = 0; a < N; ++a) {
        inv(a) = 1.0 / (spec.eigenvalues[a] - z);
        trace += inv(a);
    }
    GreensFunctionSample out;
    out.z = z;
    out.mode = mode;
    out.mN = trace / static_cast<double>(N);
    const Eigen::MatrixXd& U = *spec.eigenvectors;
    if (mode == GreensMode::Full) {
        out.entries = U * inv.asDiagonal() * U.transpose();
    } else {
        out.diagonal.resize(N);
        for (int i = 0; i < N; ++i) {
            Complex s(0.0, 0.0);
            for (int a = 0; a < N; ++a) s += U(i, a) * U(i, a) * inv(a);
            out.diagonal[static_cast<std::size_t>(i)] = s;
        }
    }
    return out;
}

inline GreensFunctionSample greens_function(const SymmetricMatrix& H, Complex z,
                                            GreensMode mode = GreensMode::Full) {
    return greens_function(eigen_decompose(H, true), z, mode);
}

/// | sum_j |G_ij|^2 - Im(G_ii)/Im(z) |; exact resolvent identity, so the
/// residual is pure roundoff.
inline double ward_identity_check(const GreensFunctionSample& G, int i) {
    if (G.mode != GreensMode::Full)
        throw InvalidParamsError("ward_identity_check: full-mode Green's function required");
    const int N = static_cast<int>(G.entries.rows());
    double s = 0.0;
    for (int j = 0; j < N; ++j) s += std::norm(G.entries(i, j));
    return std::abs(s - G.entries(i, i).imag() / G.z.imag());
}

struct LocalLawPoint {
    Complex z;
    double max_deviation = 0.0;   // max_ij |G_ij - delta_ij m_sc|
    double control = 0.0;         // 1/q + sqrt(Im m_sc/(N eta)) + 1/(N eta)
    double ratio = 0.0;
};

/// Entrywise local-law diagnostic against the semicircle transform. q is
/// taken from the matrix provenance; GOE counts as q = sqrt(N).
inline std::vector<LocalLawPoint> local_law_residual(const SymmetricMatrix& H,
                                                     const std::vector<Complex>& zgrid) {
    const int N = H.dim();
    double q = std::sqrt(static_cast<double>(N));
    if (H.params() && H.params()->model == EnsembleModel::ErdosRenyi) q = H.params()->q;
    const SpectrumResult spec = eigen_decompose(H, true);
    std::vector<LocalLawPoint> out;
    out.reserve(zgrid.size());
    for (Complex z : zgrid) {
        const GreensFunctionSample G = greens_function(spec, z, GreensMode::Full);
        const Complex msc = m_semicircle(z);
        double dev = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                const Complex d = G.entries(i, j) - (i == j ? msc : Complex(0.0, 0.0));
                dev = std::max(dev, std::abs(d));
            }
        const double eta = z.imag();
        const double control =
            1.0 / q + std::sqrt(msc.imag() / (N * eta)) + 1.0 / (N * eta);
        out.push_back({z, dev, control, dev / control});
    }
    return out;
}

/// max_alpha sqrt(N) ||u_alpha||_inf; order one for delocalized vectors.
inline double delocalization_check(const SpectrumResult& spec) {
    if (!spec.eigenvectors)
        throw InvalidParamsError("delocalization_check: eigenvectors required");
    const Eigen::MatrixXd& U = *spec.eigenvectors;
    const double scale = std::sqrt(static_cast<double>(U.rows()));
    double worst = 0.0;
    for (int a = 0; a < U.cols(); ++a)
        worst = std::max(worst, scale * U.col(a).cwiseAbs().maxCoeff());
    return worst;
}

}  // namespace edgelab
