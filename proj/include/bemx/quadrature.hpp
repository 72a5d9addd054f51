// Regular Gauss rules on the reference triangle and singularity-resolving
// rules for coincident / touching panel pairs.
#pragma once

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "bemx/common.hpp"
#include "bemx/geometry.hpp"

namespace bemx {

/// Gauss-Legendre rule on [0,1]; weights sum to 1.
inline void gauss_legendre_01(int n, std::vector<double>& nodes,
                              std::vector<double>& weights) {
    nodes.resize(static_cast<std::size_t>(n));
    weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Newton iteration on P_n from the Chebyshev initial guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);  // map [-1,1] -> [0,1], ascending
        weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * pp * pp);
    }
}

/// Quadrature rule over the reference triangle with measure normalized to 1:
/// integral over a panel = area * sum_q w_q f(x_q). Nodes stored barycentric.
struct TriangleRule {
    std::vector<std::array<double, 3>> nodes;  // (a0, a1, a2)
    std::vector<double> weights;               // positive, sum to 1
    int order = 0;                             // polynomial exactness degree
};

/// Rules exact for polynomials of total degree `order`, order in 1..10.
/// Orders 1 and 2 are the classic symmetric rules; higher orders use a
/// collapsed tensor Gauss construction (positive weights by construction).
inline const TriangleRule& gauss_triangle(int order) {
    if (order < 1 || order > 10)
        throw ValidationError("gauss_triangle: order must be in 1..10");
    static std::array<TriangleRule, 11> cache;
    static std::once_flag flags[11];
    std::call_once(flags[order], [order]() {
        TriangleRule rule;
        rule.order = order;
        if (order == 1) {
            rule.nodes = {{1.0 / 3, 1.0 / 3, 1.0 / 3}};
            rule.weights = {1.0};
        } else if (order == 2) {
            rule.nodes = {{2.0 / 3, 1.0 / 6, 1.0 / 6},
                          {1.0 / 6, 2.0 / 3, 1.0 / 6},
                          {1.0 / 6, 1.0 / 6, 2.0 / 3}};
            rule.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        } else {
            // Duffy map (u,v) -> (xi, eta) = (u(1-v), uv), Jacobian u.
            const int nu = (order + 3) / 2;  // ceil((order+2)/2)
            const int nv = (order + 2) / 2;  // ceil((order+1)/2)
            std::vector<double> xu, wu, xv, wv;
            gauss_legendre_01(nu, xu, wu);
            gauss_legendre_01(nv, xv, wv);
            for (int iu = 0; iu < nu; ++iu)
                for (int iv = 0; iv < nv; ++iv) {
                    const double u = xu[static_cast<std::size_t>(iu)];
                    const double v = xv[static_cast<std::size_t>(iv)];
                    const double xi = u * (1.0 - v), eta = u * v;
                    rule.nodes.push_back({1.0 - xi - eta, xi, eta});
                    rule.weights.push_back(2.0 * u * wu[static_cast<std::size_t>(iu)] *
                                           wv[static_cast<std::size_t>(iv)]);
                }
        }
        cache[static_cast<std::size_t>(order)] = std::move(rule);
    });
    return cache[static_cast<std::size_t>(order)];
}

enum class PairClass { Identical, SharedEdge, SharedVertex, Disjoint };

inline PairClass classify_pair(std::size_t t1, std::size_t t2, const SurfaceMesh& mesh) {
    if (t1 >= mesh.num_triangles() || t2 >= mesh.num_triangles())
        throw ValidationError("classify_pair: triangle index out of range");
    if (t1 == t2) return PairClass::Identical;
    int common = 0;
    for (int a : mesh.triangle(t1).v)
        for (int b : mesh.triangle(t2).v)
            if (a == b) ++common;
    switch (common) {
        case 2: return PairClass::SharedEdge;
        case 1: return PairClass::SharedVertex;
        case 0: return PairClass::Disjoint;
        default:
            throw ValidationError("classify_pair: triangles share 3 vertices but differ");
    }
}

/// Tensorized rule over a touching panel pair after the regularizing coordinate
/// transform. Nodes are barycentric pairs w.r.t. the class-specific vertex
/// permutation (shared vertices first, same order on both panels); weights are
/// normalized so that sum w = 1 and integral = area1 * area2 * sum w k(x,y).
struct PanelPairRule {
    PairClass pair_class = PairClass::Identical;
    std::vector<std::array<double, 3>> nodes_x;
    std::vector<std::array<double, 3>> nodes_y;
    std::vector<double> weights;
    int q = 0;
};

namespace detail {

// Transforms after Sauter & Schwab: each touching class decomposes the 4-d
// parameter domain into subdomains (6 identical / 5 shared edge / 2 shared
// vertex) on which a polar-type substitution cancels the 1/r singularity.
// Coordinates below are simplex coordinates (x1, x2) with x2 <= x1; the
// barycentric conversion is (1 - x1, x1 - x2, x2).
inline PanelPairRule build_pair_rule(PairClass cls, int q) {
    PanelPairRule rule;
    rule.pair_class = cls;
    rule.q = q;
    std::vector<double> gx, gw;
    gauss_legendre_01(q, gx, gw);
    auto push = [&rule](double x1, double x2, double y1, double y2, double w) {
        rule.nodes_x.push_back({1.0 - x1, x1 - x2, x2});
        rule.nodes_y.push_back({1.0 - y1, y1 - y2, y2});
        // The simplex x simplex parameter measure is 1/4 of the normalized
        // reference product measure.
        rule.weights.push_back(4.0 * w);
    };
    for (int i3 = 0; i3 < q; ++i3)
        for (int i2 = 0; i2 < q; ++i2)
            for (int i1 = 0; i1 < q; ++i1)
                for (int i0 = 0; i0 < q; ++i0) {
                    const double xi = gx[static_cast<std::size_t>(i0)];
                    const double e1 = gx[static_cast<std::size_t>(i1)];
                    const double e2 = gx[static_cast<std::size_t>(i2)];
                    const double e3 = gx[static_cast<std::size_t>(i3)];
                    const double wbase = gw[static_cast<std::size_t>(i0)] *
                                         gw[static_cast<std::size_t>(i1)] *
                                         gw[static_cast<std::size_t>(i2)] *
                                         gw[static_cast<std::size_t>(i3)];
                    const double xi3 = xi * xi * xi;
                    switch (cls) {
                        case PairClass::Identical: {
                            const double w = wbase * xi3 * e1 * e1 * e2;
                            push(xi, xi * (1 - e1 + e1 * e2),
                                 xi * (1 - e1 * e2 * e3), xi * (1 - e1), w);
                            push(xi * (1 - e1 * e2 * e3), xi * (1 - e1),
                                 xi, xi * (1 - e1 + e1 * e2), w);
                            push(xi, xi * e1 * (1 - e2 + e2 * e3),
                                 xi * (1 - e1 * e2), xi * e1 * (1 - e2), w);
                            push(xi * (1 - e1 * e2), xi * e1 * (1 - e2),
                                 xi, xi * e1 * (1 - e2 + e2 * e3), w);
                            push(xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3),
                                 xi, xi * e1 * (1 - e2), w);
                            push(xi, xi * e1 * (1 - e2),
                                 xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3), w);
                            break;
                        }
                        case PairClass::SharedEdge: {
                            const double w = wbase * xi3 * e1 * e1 * e2;
                            push(xi, xi * e1 * e3,
                                 xi * (1 - e1 * e2), xi * e1 * (1 - e2),
                                 wbase * xi3 * e1 * e1);
                            push(xi, xi * e1,
                                 xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3), w);
                            push(xi * (1 - e1 * e2), xi * e1 * (1 - e2),
                                 xi, xi * e1 * e2 * e3, w);
                            push(xi * (1 - e1 * e2 * e3), xi * e1 * e2 * (1 - e3),
                                 xi, xi * e1, w);
                            push(xi * (1 - e1 * e2 * e3), xi * e1 * (1 - e2 * e3),
                                 xi, xi * e1 * e2, w);
                            break;
                        }
                        case PairClass::SharedVertex: {
                            const double w = wbase * xi3 * e2;
                            push(xi, xi * e1, xi * e2, xi * e2 * e3, w);
                            push(xi * e2, xi * e2 * e3, xi, xi * e1, w);
                            break;
                        }
                        case PairClass::Disjoint:
                            throw ValidationError(
                                "singular_pair_rule: disjoint pairs use regular rules");
                    }
                }
    return rule;
}

}  // namespace detail

inline const PanelPairRule& singular_pair_rule(PairClass cls, int q) {
    if (cls == PairClass::Disjoint)
        throw ValidationError("singular_pair_rule: disjoint pairs use regular rules");
    if (q < 2 || q > 8) throw ValidationError("singular_pair_rule: q must be in 2..8");
    static std::map<std::pair<int, int>, PanelPairRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_pair(static_cast<int>(cls), q);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, detail::build_pair_rule(cls, q)).first;
    return it->second;
}

}  // namespace bemx
