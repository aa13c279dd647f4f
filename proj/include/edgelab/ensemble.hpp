#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "edgelab/errors.hpp"
#include "edgelab/rng.hpp"

namespace edgelab {

enum class EnsembleModel { ErdosRenyi, Goe };

inline std::string to_string(EnsembleModel m) {
    return m == EnsembleModel::ErdosRenyi ? "erdos_renyi" : "goe";
}

/// Matrix dimension N, sparsity q = sqrt(pN), model and seed.
/// For Erdos-Renyi the edge probability is p = q^2/N.
struct EnsembleParams {
    int N = 0;
    double q = 0.0;
    EnsembleModel model = EnsembleModel::ErdosRenyi;
    std::uint64_t seed = 0;

    double edge_probability() const { return q * q / static_cast<double>(N); }

    void validate() const {
        if (N < 2) throw InvalidParamsError("EnsembleParams: N must be >= 2, got " + std::to_string(N));
        if (model == EnsembleModel::ErdosRenyi) {
            if (!(q > 0.0)) throw InvalidParamsError("EnsembleParams: q must be positive");
            const double p = edge_probability();
            if (!(q * q >= 1.0) || !(p <= 1.0))
                throw InvalidParamsError("EnsembleParams: need 1 <= q^2 <= N, got q^2 = " +
                                         std::to_string(q * q));
        }
    }
};

/// Dense real symmetric matrix with optional sampling provenance.
/// Storage is the full row-major square; (i,j) and (j,i) are written together
/// so symmetry holds bit-exactly.
class SymmetricMatrix {
  public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim, 0.0) {}

    int dim() const { return dim_; }
    double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * dim_ + j]; }
    void set_sym(int i, int j, double v) {
        data_[static_cast<std::size_t>(i) * dim_ + j] = v;
        data_[static_cast<std::size_t>(j) * dim_ + i] = v;
    }

    const double* data() const { return data_.data(); }
    double* data() { return data_.data(); }
    std::span<const double> entries() const { return data_; }

    const std::optional<EnsembleParams>& params() const { return params_; }
    void set_params(const EnsembleParams& p) { params_ = p; }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    double trace() const {
        double t = 0.0;
        for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius_norm_sq() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return s;
    }

  private:
    int dim_ = 0;
    std::vector<double> data_;
    std::optional<EnsembleParams> params_;
};

/// Normalized entry cumulants C_2, C_3, ..., C_K with C_2 = 1.
struct CumulantProfile {
    std::vector<double> values;  // values[k-2] = C_k
};

/// H = (A - q^2 e e^T) / (q sqrt(1 - q^2/N)) with A the adjacency matrix of
/// G(N, q^2/N); the diagonal follows the same centered Bernoulli rule.
inline SymmetricMatrix sample_erdos_renyi(const EnsembleParams& params) {
    params.validate();
    if (params.model != EnsembleModel::ErdosRenyi)
        throw InvalidParamsError("sample_erdos_renyi: params.model must be ErdosRenyi");
    const double p = params.edge_probability();
    if (!(p > 0.0 && p < 1.0))
        throw InvalidParamsError("sample_erdos_renyi: p = q^2/N must lie in (0,1), got " +
                                 std::to_string(p));
    const int N = params.N;
    const double scale = 1.0 / (params.q * std::sqrt(1.0 - p));
    std::mt19937_64 rng(params.seed);
    std::bernoulli_distribution edge(p);
    SymmetricMatrix H(N);
    for (int i = 0; i < N; ++i) {
        for (int j = i; j < N; ++j) {
            const double a = edge(rng) ? 1.0 : 0.0;
            H.set_sym(i, j, (a - p) * scale);
        }
    }
    H.set_params(params);
    return H;
}

/// GOE with off-diagonal variance 1/N and diagonal variance 2/N, so the bulk
/// converges to the semicircle on [-2,2].
inline SymmetricMatrix sample_goe(int N, std::uint64_t seed) {
    if (N < 2) throw InvalidParamsError("sample_goe: N must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double off = 1.0 / std::sqrt(static_cast<double>(N));
    const double diag = std::sqrt(2.0 / static_cast<double>(N));
    SymmetricMatrix W(N);
    for (int i = 0; i < N; ++i) {
        for (int j = i; j < N; ++j) {
            W.set_sym(i, j, gauss(rng) * (i == j ? diag : off));
        }
    }
    EnsembleParams prov{N, std::sqrt(static_cast<double>(N)), EnsembleModel::Goe, seed};
    W.set_params(prov);
    return W;
}

/// Exact k-th moment of the centered, rescaled Bernoulli entry law,
///   E[h^k] = (Nq^{k-2})^{-1} (1-p)^{1-k/2} [ (1-p)^{k-1} + (-1)^k p^{k-1} ].
inline double entry_moment_exact(int k, int N, double q) {
    if (k < 2) throw InvalidParamsError("entry_moment_exact: k must be >= 2");
    if (N < 2 || !(q > 0.0)) throw InvalidParamsError("entry_moment_exact: invalid (N, q)");
    const double p = q * q / N;
    if (!(p > 0.0 && p < 1.0)) throw InvalidParamsError("entry_moment_exact: p must lie in (0,1)");
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double bracket = std::pow(1.0 - p, -0.5 * k + 1.0) *
                           (std::pow(1.0 - p, k - 1) + sign * std::pow(p, k - 1));
    return bracket / (N * std::pow(q, k - 2));
}

/// Exact k-th cumulant of the entry law. Bernoulli cumulants obey
/// kappa_{n+1}(p) = p(1-p) d/dp kappa_n(p); the entry law is the centered
/// Bernoulli scaled by 1/(q sqrt(1-p)).
inline double entry_cumulant_exact(int k, int N, double q) {
    if (k < 2) throw InvalidParamsError("entry_cumulant_exact: k must be >= 2");
    const double p = q * q / N;
    if (!(p > 0.0 && p < 1.0)) throw InvalidParamsError("entry_cumulant_exact: p must lie in (0,1)");
    // kappa_n as a polynomial in p, coefficients in ascending powers.
    std::vector<double> poly{0.0, 1.0};  // kappa_1 = p
    for (int n = 1; n < k; ++n) {
        std::vector<double> d(poly.size() > 1 ? poly.size() - 1 : 1, 0.0);
        for (std::size_t i = 1; i < poly.size(); ++i) d[i - 1] = poly[i] * static_cast<double>(i);
        // multiply by p(1-p) = p - p^2
        std::vector<double> next(d.size() + 2, 0.0);
        for (std::size_t i = 0; i < d.size(); ++i) {
            next[i + 1] += d[i];
            next[i + 2] -= d[i];
        }
        poly = std::move(next);
    }
    double kappa = 0.0;
    for (std::size_t i = poly.size(); i-- > 0;) kappa = kappa * p + poly[i];
    return kappa / std::pow(q * std::sqrt(1.0 - p), k);
}

/// The normalized C_k implied by Definition-style scaling: the k-th entry
/// cumulant equals (k-1)! C_k / (N q^{k-2}).
inline double entry_ck_exact(int k, int N, double q) {
    double fact = 1.0;
    for (int i = 2; i < k; ++i) fact *= i;
    return entry_cumulant_exact(k, N, q) * N * std::pow(q, k - 2) / fact;
}

struct EmpiricalCumulants {
    std::vector<double> kappa;  // kappa[k-2] = k-statistic for order k
    std::vector<double> C;      // implied C_k = kappa_k N q^{k-2} / (k-1)!
};

/// k-statistics (unbiased for k <= 4, plug-in for k in {5,6}) of a sample of
/// entry draws, plus the implied normalized cumulants C_k.
inline EmpiricalCumulants empirical_cumulants(std::span<const double> samples, int kmax, int N,
                                              double q) {
    if (samples.size() < 10000)
        throw InsufficientSamplesError("empirical_cumulants: need at least 1e4 samples, got " +
                                       std::to_string(samples.size()));
    if (kmax < 2 || kmax > 6)
        throw InvalidParamsError("empirical_cumulants: kmax must be in [2,6]");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, m5 = 0.0, m6 = 0.0;
    for (double x : samples) {
        const double d = x - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        m5 += d2 * d2 * d;
        m6 += d2 * d2 * d2;
    }
    m2 /= n; m3 /= n; m4 /= n; m5 /= n; m6 /= n;

    EmpiricalCumulants out;
    for (int k = 2; k <= kmax; ++k) {
        double kap = 0.0;
        switch (k) {
            case 2: kap = n / (n - 1) * m2; break;
            case 3: kap = n * n / ((n - 1) * (n - 2)) * m3; break;
            case 4:
                kap = n * n * ((n + 1) * m4 - 3 * (n - 1) * m2 * m2) /
                      ((n - 1) * (n - 2) * (n - 3));
                break;
            case 5: kap = m5 - 10.0 * m2 * m3; break;
            case 6: kap = m6 - 15.0 * m2 * m4 - 10.0 * m3 * m3 + 30.0 * m2 * m2 * m2; break;
        }
        out.kappa.push_back(kap);
        double fact = 1.0;
        for (int i = 2; i < k; ++i) fact *= i;
        out.C.push_back(kap * N * std::pow(q, k - 2) / fact);
    }
    return out;
}

/// H(t) = e^{-t/2} H + sqrt(1 - e^{-t}) W.
inline SymmetricMatrix gaussian_divisible(const SymmetricMatrix& H, const SymmetricMatrix& W,
                                          double t) {
    if (H.dim() != W.dim())
        throw DimensionMismatchError("gaussian_divisible: dim " + std::to_string(H.dim()) +
                                     " vs " + std::to_string(W.dim()));
    if (!(t >= 0.0)) throw InvalidParamsError("gaussian_divisible: t must be >= 0");
    if (t == 0.0) return H;
    const double ch = std::exp(-0.5 * t);
    const double cw = std::sqrt(1.0 - std::exp(-t));
    SymmetricMatrix M(H.dim());
    const double* h = H.data();
    const double* w = W.data();
    double* m = M.data();
    const std::size_t n2 = static_cast<std::size_t>(H.dim()) * H.dim();
    for (std::size_t idx = 0; idx < n2; ++idx) m[idx] = ch * h[idx] + cw * w[idx];
    return M;
}

/// One Euler-Maruyama step of Dyson Brownian motion,
///   d lambda_i = dB_i/sqrt(N) + (1/N) sum_{j != i} dt/(lambda_i - lambda_j)
///                - (lambda_i/2) dt.
/// Input must be strictly sorted descending; the output is re-sorted.
inline std::vector<double> dbm_step(std::span<const double> eigs, double dt, std::uint64_t seed,
                                    double gap_floor = 1e-12) {
    if (!(dt > 0.0)) throw InvalidParamsError("dbm_step: dt must be > 0");
    const int N = static_cast<int>(eigs.size());
    if (N < 1) throw InvalidParamsError("dbm_step: empty spectrum");
    for (int i = 0; i + 1 < N; ++i) {
        if (!(eigs[i] > eigs[i + 1]))
            throw InvalidParamsError("dbm_step: eigenvalues must be strictly sorted descending");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double noise = std::sqrt(dt / static_cast<double>(N));
    std::vector<double> out(eigs.begin(), eigs.end());
    for (int i = 0; i < N; ++i) {
        double drift = -0.5 * eigs[i];
        for (int j = 0; j < N; ++j) {
            if (j != i) drift += 1.0 / (static_cast<double>(N) * (eigs[i] - eigs[j]));
        }
        out[i] += drift * dt + noise * gauss(rng);
    }
    std::sort(out.begin(), out.end(), std::greater<double>());
    for (int i = 0; i + 1 < N; ++i) {
        if (out[i] - out[i + 1] < gap_floor)
            throw CollisionError("dbm_step: gap below floor, dt too large");
    }
    return out;
}

}  // namespace edgelab
