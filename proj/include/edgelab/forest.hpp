#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "edgelab/ensemble.hpp"
#include "edgelab/errors.hpp"

namespace edgelab {

struct ForestEdge {
    int u = 0;
    int v = 0;
    int s = 1;  // odd positive weight
};

/// Finite simple forest with odd positive edge weights. Vertices are
/// indeterminates 0..vertexCount-1; isolated vertices are allowed and count
/// toward the number of components.
struct WeightedForest {
    int vertex_count = 0;
    std::vector<ForestEdge> edges;

    int component_count() const {
        // acyclic, so components = vertices - edges
        return vertex_count - static_cast<int>(edges.size());
    }

    int total_weight() const {
        int w = 0;
        for (const auto& e : edges) w += e.s + 1;
        return w;
    }

    void validate() const {
        if (vertex_count < 1) throw InvalidParamsError("WeightedForest: need at least one vertex");
        std::vector<int> parent(vertex_count);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        std::vector<std::pair<int, int>> seen;
        for (const auto& e : edges) {
            if (e.u < 0 || e.u >= vertex_count || e.v < 0 || e.v >= vertex_count)
                throw InvalidParamsError("WeightedForest: edge endpoint out of range");
            if (e.u == e.v) throw InvalidParamsError("WeightedForest: self-loops not allowed");
            if (e.s < 1 || e.s % 2 == 0)
                throw InvalidParamsError("WeightedForest: edge weights must be odd and >= 1");
            auto key = std::minmax(e.u, e.v);
            for (const auto& k : seen)
                if (k == std::pair<int, int>(key.first, key.second))
                    throw InvalidParamsError("WeightedForest: duplicate edge");
            seen.emplace_back(key.first, key.second);
            int ru = find(e.u), rv = find(e.v);
            if (ru == rv) throw InvalidParamsError("WeightedForest: graph contains a cycle");
            parent[ru] = rv;
        }
    }
};

inline WeightedForest single_edge_forest(int s) { return WeightedForest{2, {{0, 1, s}}}; }

inline WeightedForest isolated_vertices_forest(int v) { return WeightedForest{v, {}}; }

/// One term of the linear combination defining a_{2l}: coefficient times the
/// forest weight. `order` is 2l; it defaults to the forest's total weight and
/// must be given explicitly only for edgeless normalization terms.
struct ForestTerm {
    WeightedForest forest;
    double coefficient = 1.0;
    std::optional<int> order_override;

    int order() const { return order_override ? *order_override : forest.total_weight(); }

    void validate() const {
        forest.validate();
        const int o = order();
        if (o < 2 || o % 2 != 0)
            throw InvalidParamsError("ForestTerm: order must be a positive even integer, got " +
                                     std::to_string(o));
        if (!forest.edges.empty() && order_override && *order_override != forest.total_weight())
            throw InvalidParamsError("ForestTerm: explicit order may not contradict total weight");
    }
};

/// Default term list: {single edge s=1} -> a_2, {single edge s=3} plus the
/// Wick normalization (-3/N on two isolated vertices) -> a_4, making the
/// default a_4 the fourth-cumulant statistic sum*_{ij}(h_ij^4 - 3/N^2)/N.
inline std::vector<ForestTerm> default_correction_terms(int N) {
    std::vector<ForestTerm> terms;
    terms.push_back({single_edge_forest(1), 1.0, std::nullopt});
    terms.push_back({single_edge_forest(3), 1.0, std::nullopt});
    terms.push_back({isolated_vertices_forest(2), -3.0 / static_cast<double>(N), 4});
    return terms;
}

namespace detail {

/// Edge kernel w(h; s) = h^{s+1} - 1(s=1)/N.
inline double edge_kernel(double h, int s, int N) {
    double pw = h * h;  // s+1 is even and >= 2
    for (int k = 2; k < s + 1; k += 2) pw *= h * h;
    return s == 1 ? pw - 1.0 / N : pw;
}

inline double falling_factorial(int N, int v) {
    double f = 1.0;
    for (int i = 0; i < v; ++i) f *= static_cast<double>(N - i);
    return f;
}

/// Naive sum over distinct vertex assignments, lexicographic order.
inline double distinct_sum_naive(const WeightedForest& F, const SymmetricMatrix& H) {
    const int N = H.dim();
    const int v = F.vertex_count;
    std::vector<int> x(v, 0);
    double acc = 0.0;
    // depth-first enumeration of injective tuples in lexicographic order
    std::vector<int> stack;
    auto distinct_ok = [&](int depth, int val) {
        for (int i = 0; i < depth; ++i)
            if (x[i] == val) return false;
        return true;
    };
    int depth = 0;
    x[0] = -1;
    while (depth >= 0) {
        ++x[depth];
        if (x[depth] >= N) {
            --depth;
            continue;
        }
        if (!distinct_ok(depth, x[depth])) continue;
        if (depth + 1 < v) {
            ++depth;
            x[depth] = -1;
            continue;
        }
        double term = 1.0;
        for (const auto& e : F.edges) term *= edge_kernel(H(x[e.u], x[e.v]), e.s, N);
        acc += term;
    }
    return acc;
}

/// Set partitions of {0..v-1} as block-index vectors (restricted growth).
inline std::vector<std::vector<int>> set_partitions(int v) {
    std::vector<std::vector<int>> out;
    std::vector<int> assign(v, 0);
    auto rec = [&](auto&& self, int i, int maxb) -> void {
        if (i == v) {
            out.push_back(assign);
            return;
        }
        for (int b = 0; b <= maxb; ++b) {
            assign[i] = b;
            self(self, i + 1, std::max(maxb, b + 1));
        }
    };
    rec(rec, 0, 0);
    return out;
}

/// Unconstrained sum over block assignments for the collapsed multigraph.
/// Components factorize; each component is reduced by leaf elimination, with
/// a final cycle (length <= 4 blocks) contracted directly.
inline double collapsed_sum(const WeightedForest& F, const std::vector<int>& block_of,
                            const SymmetricMatrix& H) {
    const int N = H.dim();
    int nb = 0;
    for (int b : block_of) nb = std::max(nb, b + 1);

    // per-block vertex weights, self-loops folded in immediately
    std::vector<std::vector<double>> wvec(nb, std::vector<double>(N, 1.0));
    // parallel edges between the same block pair get multiplied elementwise
    struct BlockEdge {
        int a, b;
        std::vector<double> K;  // row-major N x N
    };
    std::vector<BlockEdge> bedges;
    for (const auto& e : F.edges) {
        int a = block_of[e.u], b = block_of[e.v];
        if (a == b) {
            for (int x = 0; x < N; ++x) wvec[a][x] *= edge_kernel(H(x, x), e.s, N);
            continue;
        }
        if (a > b) std::swap(a, b);
        BlockEdge* found = nullptr;
        for (auto& be : bedges)
            if (be.a == a && be.b == b) found = &be;
        if (!found) {
            bedges.push_back({a, b, std::vector<double>(static_cast<std::size_t>(N) * N, 1.0)});
            found = &bedges.back();
        }
        for (int x = 0; x < N; ++x)
            for (int y = 0; y < N; ++y)
                found->K[static_cast<std::size_t>(x) * N + y] *= edge_kernel(H(x, y), e.s, N);
    }

    std::vector<bool> alive(nb, true);
    std::vector<bool> eused(bedges.size(), false);
    auto degree = [&](int b) {
        int d = 0;
        for (std::size_t k = 0; k < bedges.size(); ++k)
            if (!eused[k] && (bedges[k].a == b || bedges[k].b == b)) ++d;
        return d;
    };

    // eliminate leaves: fold sum_x w_leaf(x) K(x, y) into the neighbor
    bool changed = true;
    while (changed) {
        changed = false;
        for (int b = 0; b < nb; ++b) {
            if (!alive[b] || degree(b) != 1) continue;
            for (std::size_t k = 0; k < bedges.size(); ++k) {
                if (eused[k] || (bedges[k].a != b && bedges[k].b != b)) continue;
                const int other = bedges[k].a == b ? bedges[k].b : bedges[k].a;
                for (int y = 0; y < N; ++y) {
                    double s = 0.0;
                    for (int x = 0; x < N; ++x) {
                        const double kxy = bedges[k].a == b
                                               ? bedges[k].K[static_cast<std::size_t>(x) * N + y]
                                               : bedges[k].K[static_cast<std::size_t>(y) * N + x];
                        s += wvec[b][x] * kxy;
                    }
                    wvec[other][y] *= s;
                }
                eused[k] = true;
                alive[b] = false;
                changed = true;
                break;
            }
        }
    }

    double total = 1.0;
    // isolated survivors
    std::vector<int> cyc;
    for (int b = 0; b < nb; ++b) {
        if (!alive[b]) continue;
        if (degree(b) == 0) {
            double s = 0.0;
            for (double x : wvec[b]) s += x;
            total *= s;
            alive[b] = false;
        } else {
            cyc.push_back(b);
        }
    }
    if (cyc.empty()) return total;

    // what remains is a single cycle over <= 4 blocks (original |V| <= 4)
    // walk it: start at cyc[0], follow unused edges
    std::vector<int> order{cyc[0]};
    std::vector<std::size_t> eorder;
    int cur = cyc[0];
    while (true) {
        bool advanced = false;
        for (std::size_t k = 0; k < bedges.size(); ++k) {
            if (eused[k] || (bedges[k].a != cur && bedges[k].b != cur)) continue;
            eused[k] = true;
            eorder.push_back(k);
            cur = bedges[k].a == cur ? bedges[k].b : bedges[k].a;
            advanced = true;
            break;
        }
        if (!advanced) break;
        if (cur == order[0]) break;
        order.push_back(cur);
    }
    const int L = static_cast<int>(order.size());
    auto kmat = [&](std::size_t k, int from, int x, int y) {
        return bedges[k].a == from ? bedges[k].K[static_cast<std::size_t>(x) * N + y]
                                   : bedges[k].K[static_cast<std::size_t>(y) * N + x];
    };
    double s = 0.0;
    if (L == 2) {
        // double edge: sum_{x,y} w0(x) K0(x,y) K1(y,x) w1(y)
        for (int x = 0; x < N; ++x)
            for (int y = 0; y < N; ++y)
                s += wvec[order[0]][x] * kmat(eorder[0], order[0], x, y) *
                     kmat(eorder[1], order[1], y, x) * wvec[order[1]][y];
    } else {
        // contract the chain, then close the loop
        std::vector<double> M(static_cast<std::size_t>(N) * N);
        for (int x = 0; x < N; ++x)
            for (int y = 0; y < N; ++y)
                M[static_cast<std::size_t>(x) * N + y] =
                    kmat(eorder[0], order[0], x, y) * wvec[order[1]][y];
        for (int step = 1; step + 1 < L; ++step) {
            std::vector<double> M2(static_cast<std::size_t>(N) * N, 0.0);
            for (int x = 0; x < N; ++x)
                for (int y = 0; y < N; ++y) {
                    const double mxy = M[static_cast<std::size_t>(x) * N + y];
                    if (mxy == 0.0) continue;
                    for (int z = 0; z < N; ++z)
                        M2[static_cast<std::size_t>(x) * N + z] +=
                            mxy * kmat(eorder[step], order[step], y, z) *
                            wvec[order[(step + 1) % L]][z];
                }
            M = std::move(M2);
        }
        for (int x = 0; x < N; ++x)
            for (int z = 0; z < N; ++z)
                s += wvec[order[0]][x] * M[static_cast<std::size_t>(x) * N + z] *
                     kmat(eorder[L - 1], order[L - 1], z, x);
    }
    return total * s;
}

inline double distinct_sum_accel(const WeightedForest& F, const SymmetricMatrix& H) {
    double acc = 0.0;
    for (const auto& part : set_partitions(F.vertex_count)) {
        int nb = 0;
        for (int b : part) nb = std::max(nb, b + 1);
        std::vector<int> bsize(nb, 0);
        for (int b : part) ++bsize[b];
        double mu = 1.0;
        for (int b = 0; b < nb; ++b) {
            double f = 1.0;
            for (int i = 2; i < bsize[b]; ++i) f *= i;
            mu *= (bsize[b] % 2 == 0 ? -1.0 : 1.0) * f;
        }
        acc += mu * collapsed_sum(F, part, H);
    }
    return acc;
}

}  // namespace detail

/// w(F) = N^{-theta(F)} sum* over distinct vertex assignments of
/// prod_e w(h_{x_u x_v}; s_e), with w(h;s) = h^{s+1} - 1(s=1)/N.
///
/// Single edges and small enumerations run the direct distinct sum; larger N
/// with 3-4 vertices uses partition inclusion-exclusion over collapsed
/// multigraphs, which matches the distinct sum up to roundoff.
inline double forest_weight(const WeightedForest& F, const SymmetricMatrix& H) {
    F.validate();
    if (F.vertex_count > 4)
        throw TooManyVerticesError("forest_weight: forests with more than 4 vertices need the "
                                   "accelerated path, which is capped at 4");
    const int N = H.dim();
    const double norm = std::pow(static_cast<double>(N), -F.component_count());
    if (F.edges.empty()) return norm * detail::falling_factorial(N, F.vertex_count);
    if (F.vertex_count == 2) {
        const int s = F.edges[0].s;
        double acc = 0.0;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j)
                if (j != i) acc += detail::edge_kernel(H(i, j), s, N);
        return norm * acc;
    }
    double budget = 1.0;
    for (int i = 0; i < F.vertex_count; ++i) budget *= N;
    const double sum = budget <= 7e7 ? detail::distinct_sum_naive(F, H)
                                     : detail::distinct_sum_accel(F, H);
    return norm * sum;
}

}  // namespace edgelab
