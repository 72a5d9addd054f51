// Dense Galerkin assembly of the boundary operators S, K, K*, D, the restricted
// blocks, the Newton potential and its traces, and off-surface potential
// evaluation.
#pragma once

#include <array>
#include <functional>
#include <vector>

#include "bemx/common.hpp"
#include "bemx/geometry.hpp"
#include "bemx/kernels.hpp"
#include "bemx/quadrature.hpp"
#include "bemx/spaces.hpp"

namespace bemx {

struct AssemblyOptions {
    int regular_order = 3;  // disjoint, well separated pairs
    int near_order = 6;     // disjoint pairs closer than near_factor * max diameter
    double near_factor = 2.0;
    int singular_q = 6;  // Gauss order per axis of the 4-d singular rules
    std::size_t dof_cap = 20000;
};

namespace detail {

/// Vertex permutations putting shared vertices first, matched pairwise on both
/// panels, as required by the singular-pair coordinate transforms.
struct PairPermutation {
    std::array<int, 3> px{0, 1, 2};  // rule slot -> local vertex of panel x
    std::array<int, 3> py{0, 1, 2};
    int shared = 0;
};

inline PairPermutation matched_permutation(const Triangle& tx, const Triangle& ty) {
    PairPermutation perm;
    bool used_x[3] = {false, false, false}, used_y[3] = {false, false, false};
    int n = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!used_y[j] && tx.v[i] == ty.v[j]) {
                perm.px[static_cast<std::size_t>(n)] = i;
                perm.py[static_cast<std::size_t>(n)] = j;
                used_x[i] = used_y[j] = true;
                ++n;
                break;
            }
    perm.shared = n;
    int kx = n, ky = n;
    for (int i = 0; i < 3; ++i) {
        if (!used_x[i]) perm.px[static_cast<std::size_t>(kx++)] = i;
        if (!used_y[i]) perm.py[static_cast<std::size_t>(ky++)] = i;
    }
    return perm;
}

/// Visits the quadrature nodes of panel pair (tx, ty). The callback receives the
/// physical points, barycentric coordinates w.r.t. the ORIGINAL vertex order of
/// each panel, and the physical weight (already scaled by both panel areas).
template <typename Fn>
void for_each_pair_node(const SurfaceMesh& mesh, std::size_t tx, std::size_t ty,
                        const AssemblyOptions& opts, Fn&& fn) {
    const auto cx = mesh.corners(tx);
    const auto cy = mesh.corners(ty);
    const double scale = mesh.area(tx) * mesh.area(ty);
    const PairClass cls = classify_pair(tx, ty, mesh);
    if (cls == PairClass::Disjoint) {
        const double dist = (mesh.centroid(tx) - mesh.centroid(ty)).norm();
        const double diam = std::max(mesh.diameter(tx), mesh.diameter(ty));
        const TriangleRule& rule =
            gauss_triangle(dist < opts.near_factor * diam ? opts.near_order
                                                          : opts.regular_order);
        for (std::size_t qx = 0; qx < rule.nodes.size(); ++qx) {
            const auto& bx = rule.nodes[qx];
            const Vec3 x = bx[0] * cx[0] + bx[1] * cx[1] + bx[2] * cx[2];
            for (std::size_t qy = 0; qy < rule.nodes.size(); ++qy) {
                const auto& by = rule.nodes[qy];
                const Vec3 y = by[0] * cy[0] + by[1] * cy[1] + by[2] * cy[2];
                fn(x, y, bx, by, scale * rule.weights[qx] * rule.weights[qy]);
            }
        }
        return;
    }
    const PairPermutation perm = matched_permutation(mesh.triangle(tx), mesh.triangle(ty));
    const PanelPairRule& rule = singular_pair_rule(cls, opts.singular_q);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
        std::array<double, 3> bx{}, by{};
        for (int k = 0; k < 3; ++k) {
            bx[static_cast<std::size_t>(perm.px[static_cast<std::size_t>(k)])] =
                rule.nodes_x[q][static_cast<std::size_t>(k)];
            by[static_cast<std::size_t>(perm.py[static_cast<std::size_t>(k)])] =
                rule.nodes_y[q][static_cast<std::size_t>(k)];
        }
        const Vec3 x = bx[0] * cx[0] + bx[1] * cx[1] + bx[2] * cx[2];
        const Vec3 y = by[0] * cy[0] + by[1] * cy[1] + by[2] * cy[2];
        fn(x, y, bx, by, scale * rule.weights[q]);
    }
}

/// Surface curl of the P1 hat function at local vertex i of panel t: a constant
/// in-plane vector parallel to the opposite edge.
inline std::array<Vec3, 3> hat_surface_curls(const SurfaceMesh& mesh, std::size_t t) {
    const auto c = mesh.corners(t);
    const double inv2a = 1.0 / (2.0 * mesh.area(t));
    return {Vec3((c[1] - c[2]) * inv2a), Vec3((c[2] - c[0]) * inv2a),
            Vec3((c[0] - c[1]) * inv2a)};
}

inline void check_dof_cap(const SurfaceMesh& mesh, const AssemblyOptions& opts) {
    if (mesh.num_triangles() > opts.dof_cap || mesh.num_vertices() > opts.dof_cap)
        throw ValidationError("assembly: dof count exceeds configured cap of " +
                              std::to_string(opts.dof_cap));
}

}  // namespace detail

/// Single layer, P0 rows x P0 cols: entry (i,j) = int_{Ti} int_{Tj} Phi.
inline OperatorMatrix assemble_single_layer(const SurfaceMesh& mesh,
                                            const WaveNumber& lambda,
                                            const AssemblyOptions& opts = {}) {
    detail::check_dof_cap(mesh, opts);
    const std::size_t n = mesh.num_triangles();
    OperatorMatrix op;
    op.kind = OperatorKind::S;
    op.row_space = op.col_space = SpaceTag::P0_Gamma;
    op.lambda = lambda.value;
    op.entries = MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) {
            Complex acc = 0.0;
            detail::for_each_pair_node(
                mesh, i, j, opts,
                [&](const Vec3& x, const Vec3& y, const std::array<double, 3>&,
                    const std::array<double, 3>&, double w) { acc += w * phi(lambda, x, y); });
            op.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
        }
    });
    return op;
}

/// Double layer, P0 rows x P1 cols: entry (i,a) = int_{Ti} int_G dPhi/dn_y hat_a(y).
inline OperatorMatrix assemble_double_layer(const SurfaceMesh& mesh,
                                            const WaveNumber& lambda,
                                            const AssemblyOptions& opts = {}) {
    detail::check_dof_cap(mesh, opts);
    const std::size_t nt = mesh.num_triangles();
    OperatorMatrix op;
    op.kind = OperatorKind::K;
    op.row_space = SpaceTag::P0_Gamma;
    op.col_space = SpaceTag::P1_Gamma;
    op.lambda = lambda.value;
    op.entries = MatrixXcd::Zero(static_cast<Eigen::Index>(nt),
                                 static_cast<Eigen::Index>(mesh.num_vertices()));
    parallel_for(nt, [&](std::size_t i) {
        for (std::size_t j = 0; j < nt; ++j) {
            const Vec3& ny = mesh.normal(j);
            std::array<Complex, 3> acc{};
            detail::for_each_pair_node(
                mesh, i, j, opts,
                [&](const Vec3& x, const Vec3& y, const std::array<double, 3>&,
                    const std::array<double, 3>& by, double w) {
                    const Complex k = w * dphi_dny(lambda, x, y, ny);
                    for (int a = 0; a < 3; ++a)
                        acc[static_cast<std::size_t>(a)] += k * by[static_cast<std::size_t>(a)];
                });
            const auto& tr = mesh.triangle(j);
            for (int a = 0; a < 3; ++a)
                op.entries(static_cast<Eigen::Index>(i), tr.v[a]) +=
                    acc[static_cast<std::size_t>(a)];
        }
    });
    return op;
}

/// Adjoint double layer, P1 rows x P0 cols. Assembled independently of K so the
/// transpose relation K* = K^T stays an internal consistency check.
inline OperatorMatrix assemble_adjoint_double_layer(const SurfaceMesh& mesh,
                                                    const WaveNumber& lambda,
                                                    const AssemblyOptions& opts = {}) {
    detail::check_dof_cap(mesh, opts);
    const std::size_t nt = mesh.num_triangles();
    OperatorMatrix op;
    op.kind = OperatorKind::Kstar;
    op.row_space = SpaceTag::P1_Gamma;
    op.col_space = SpaceTag::P0_Gamma;
    op.lambda = lambda.value;
    op.entries = MatrixXcd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()),
                                 static_cast<Eigen::Index>(nt));
    // Test panels contribute to shared vertex rows; accumulate per-panel local
    // blocks in parallel, then scatter serially in fixed order for determinism.
    std::vector<MatrixXcd> local(nt);
    parallel_for(nt, [&](std::size_t i) {
        const Vec3& nx = mesh.normal(i);
        MatrixXcd block = MatrixXcd::Zero(3, static_cast<Eigen::Index>(nt));
        for (std::size_t j = 0; j < nt; ++j) {
            std::array<Complex, 3> acc{};
            detail::for_each_pair_node(
                mesh, i, j, opts,
                [&](const Vec3& x, const Vec3& y, const std::array<double, 3>& bx,
                    const std::array<double, 3>&, double w) {
                    const Complex k = w * dphi_dnx(lambda, x, y, nx);
                    for (int a = 0; a < 3; ++a)
                        acc[static_cast<std::size_t>(a)] += k * bx[static_cast<std::size_t>(a)];
                });
            for (int a = 0; a < 3; ++a)
                block(a, static_cast<Eigen::Index>(j)) = acc[static_cast<std::size_t>(a)];
        }
        local[i] = std::move(block);
    });
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& tr = mesh.triangle(i);
        for (int a = 0; a < 3; ++a)
            op.entries.row(tr.v[a]) += local[i].row(a);
    }
    return op;
}

/// Hypersingular operator D = d/dn_x (double layer), P1 x P1, assembled in the
/// integration-by-parts form
///   <D u, v> = -int int Phi (curl_G u . curl_G v)
///              + lambda^2 int int Phi (n_x . n_y) u(y) v(x),
/// which reduces every entry to weakly singular integrals. Constants are in the
/// kernel for lambda = 0.
inline OperatorMatrix assemble_hypersingular(const SurfaceMesh& mesh,
                                             const WaveNumber& lambda,
                                             const AssemblyOptions& opts = {}) {
    detail::check_dof_cap(mesh, opts);
    const std::size_t nt = mesh.num_triangles();
    const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
    OperatorMatrix op;
    op.kind = OperatorKind::D;
    op.row_space = op.col_space = SpaceTag::P1_Gamma;
    op.lambda = lambda.value;
    op.entries = MatrixXcd::Zero(nv, nv);
    const Complex lam2 = lambda.value * lambda.value;
    std::vector<MatrixXcd> local(nt);
    parallel_for(nt, [&](std::size_t i) {
        const auto curls_x = detail::hat_surface_curls(mesh, i);
        const Vec3& nx = mesh.normal(i);
        MatrixXcd block = MatrixXcd::Zero(3, nv);
        for (std::size_t j = 0; j < nt; ++j) {
            const auto curls_y = detail::hat_surface_curls(mesh, j);
            const double nxny = nx.dot(mesh.normal(j));
            Complex phi_int = 0.0;                 // int int Phi
            std::array<Complex, 9> mom{};          // int int Phi hat_b(y) hat_a(x)
            detail::for_each_pair_node(
                mesh, i, j, opts,
                [&](const Vec3& x, const Vec3& y, const std::array<double, 3>& bx,
                    const std::array<double, 3>& by, double w) {
                    const Complex k = w * phi(lambda, x, y);
                    phi_int += k;
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b)
                            mom[static_cast<std::size_t>(3 * a + b)] +=
                                k * bx[static_cast<std::size_t>(a)] *
                                by[static_cast<std::size_t>(b)];
                });
            const auto& trj = mesh.triangle(j);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) {
                    const Complex entry =
                        -curls_x[static_cast<std::size_t>(a)].dot(
                            curls_y[static_cast<std::size_t>(b)]) *
                            phi_int +
                        lam2 * nxny * mom[static_cast<std::size_t>(3 * a + b)];
                    block(a, trj.v[b]) += entry;
                }
        }
        local[i] = std::move(block);
    });
    for (std::size_t i = 0; i < nt; ++i) {
        const auto& tr = mesh.triangle(i);
        for (int a = 0; a < 3; ++a)
            op.entries.row(tr.v[a]) += local[i].row(a);
    }
    return op;
}

/// Row/column restriction of a whole-boundary Galerkin matrix to partition
/// blocks. Because columns act on zero-extended densities, the block is a
/// plain submatrix.
inline OperatorMatrix restrict_block(const OperatorMatrix& m, SpaceTag row_space,
                                     SpaceTag col_space, const SurfaceMesh& mesh,
                                     const BoundaryPartition& part) {
    auto indices = [&](SpaceTag full, SpaceTag target) -> std::vector<int> {
        if (target == full) {
            std::vector<int> all(dof_count(full, mesh));
            for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<int>(k);
            return all;
        }
        if (target == SpaceTag::P0_Gamma1 && full == SpaceTag::P0_Gamma)
            return part.gamma1_triangles;
        if (target == SpaceTag::P1_InteriorGamma2 && full == SpaceTag::P1_Gamma)
            return part.interior_gamma2_vertices;
        throw ValidationError("restrict_block: incompatible space restriction");
    };
    const std::vector<int> rows = indices(m.row_space, row_space);
    const std::vector<int> cols = indices(m.col_space, col_space);
    if (rows.empty() || cols.empty())
        throw ValidationError("restrict_block: empty dof set");
    OperatorMatrix out;
    out.kind = m.kind;
    out.row_space = row_space;
    out.col_space = col_space;
    out.lambda = m.lambda;
    out.entries.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c)
            out.entries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                m.entries(rows[r], cols[c]);
    return out;
}

/// Volume source: point atoms plus an optional sampled density with quadrature
/// weights, all supported strictly inside the enclosed volume.
struct VolumeSourceSpec {
    struct Atom {
        Vec3 location;
        Complex weight;
    };
    struct DensitySample {
        Vec3 location;
        double quad_weight;
        Complex value;
    };
    std::vector<Atom> atoms;
    std::vector<DensitySample> density_samples;

    bool empty() const { return atoms.empty() && density_samples.empty(); }
};

/// Newton (volume) potential of the source at a point x.
inline Complex newton_potential_eval(const VolumeSourceSpec& src, const WaveNumber& lambda,
                                     const Vec3& x) {
    Complex acc = 0.0;
    for (const auto& a : src.atoms) acc += a.weight * phi(lambda, x, a.location);
    for (const auto& s : src.density_samples)
        acc += s.quad_weight * s.value * phi(lambda, x, s.location);
    return acc;
}

inline Eigen::Vector3cd newton_potential_grad(const VolumeSourceSpec& src,
                                              const WaveNumber& lambda, const Vec3& x) {
    Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
    for (const auto& a : src.atoms) acc += a.weight * grad_x_phi(lambda, x, a.location);
    for (const auto& s : src.density_samples)
        acc += s.quad_weight * s.value * grad_x_phi(lambda, x, s.location);
    return acc;
}

struct NewtonTraces {
    DensityVector dirichlet;  // P1 on Gamma
    DensityVector neumann;    // P0 on Gamma
};

/// Vertex samples of N h (P1) and panel-averaged grad(N h).n (P0). Valid only
/// when the source is strictly inside, where N h is smooth up to Gamma.
inline NewtonTraces newton_traces(const VolumeSourceSpec& src, const WaveNumber& lambda,
                                  const SurfaceMesh& mesh, int quad_order = 4) {
    NewtonTraces out;
    out.dirichlet = zeros(SpaceTag::P1_Gamma, mesh);
    out.neumann = zeros(SpaceTag::P0_Gamma, mesh);
    if (src.empty()) return out;
    auto check_clearance = [&](const Vec3& p) {
        if (mesh.surface_distance(p) < mesh.max_diameter())
            throw ValidationError(
                "newton_traces: source point within 2 panel diameters of the boundary");
    };
    for (const auto& a : src.atoms) check_clearance(a.location);
    for (const auto& s : src.density_samples) check_clearance(s.location);
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
        out.dirichlet.coeffs(static_cast<Eigen::Index>(v)) =
            newton_potential_eval(src, lambda, mesh.vertex(static_cast<int>(v)));
    const TriangleRule& rule = gauss_triangle(quad_order);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto c = mesh.corners(t);
        const Vec3& n = mesh.normal(t);
        Complex acc = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const auto& b = rule.nodes[q];
            const Vec3 x = b[0] * c[0] + b[1] * c[1] + b[2] * c[2];
            const Eigen::Vector3cd g = newton_potential_grad(src, lambda, x);
            acc += rule.weights[q] * (g(0) * n(0) + g(1) * n(1) + g(2) * n(2));
        }
        out.neumann.coeffs(static_cast<Eigen::Index>(t)) = acc;
    }
    return out;
}

/// Single layer potential of a P0 density at an off-surface point.
inline Complex single_layer_potential(const SurfaceMesh& mesh, const WaveNumber& lambda,
                                      const DensityVector& psi, const Vec3& x,
                                      int quad_order = 6) {
    const TriangleRule& rule = gauss_triangle(quad_order);
    Complex acc = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto c = mesh.corners(t);
        Complex panel = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const auto& b = rule.nodes[q];
            panel += rule.weights[q] * phi(lambda, x, b[0] * c[0] + b[1] * c[1] + b[2] * c[2]);
        }
        acc += mesh.area(t) * psi.coeffs(static_cast<Eigen::Index>(t)) * panel;
    }
    return acc;
}

/// Double layer potential of a P1 density at an off-surface point.
inline Complex double_layer_potential(const SurfaceMesh& mesh, const WaveNumber& lambda,
                                      const DensityVector& phi_density, const Vec3& x,
                                      int quad_order = 6) {
    const TriangleRule& rule = gauss_triangle(quad_order);
    Complex acc = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto c = mesh.corners(t);
        const auto& tr = mesh.triangle(t);
        const Vec3& n = mesh.normal(t);
        Complex panel = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const auto& b = rule.nodes[q];
            const Vec3 y = b[0] * c[0] + b[1] * c[1] + b[2] * c[2];
            const Complex dens = b[0] * phi_density.coeffs(tr.v[0]) +
                                 b[1] * phi_density.coeffs(tr.v[1]) +
                                 b[2] * phi_density.coeffs(tr.v[2]);
            panel += rule.weights[q] * dens * dphi_dny(lambda, x, y, n);
        }
        acc += mesh.area(t) * panel;
    }
    return acc;
}

inline Eigen::Vector3cd single_layer_grad(const SurfaceMesh& mesh, const WaveNumber& lambda,
                                          const DensityVector& psi, const Vec3& x,
                                          int quad_order = 6) {
    const TriangleRule& rule = gauss_triangle(quad_order);
    Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto c = mesh.corners(t);
        Eigen::Vector3cd panel = Eigen::Vector3cd::Zero();
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const auto& b = rule.nodes[q];
            panel += rule.weights[q] *
                     grad_x_phi(lambda, x, b[0] * c[0] + b[1] * c[1] + b[2] * c[2]);
        }
        acc += mesh.area(t) * psi.coeffs(static_cast<Eigen::Index>(t)) * panel;
    }
    return acc;
}

inline Eigen::Vector3cd double_layer_grad(const SurfaceMesh& mesh, const WaveNumber& lambda,
                                          const DensityVector& phi_density, const Vec3& x,
                                          int quad_order = 6) {
    const TriangleRule& rule = gauss_triangle(quad_order);
    Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto c = mesh.corners(t);
        const auto& tr = mesh.triangle(t);
        const Vec3& n = mesh.normal(t);
        Eigen::Vector3cd panel = Eigen::Vector3cd::Zero();
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const auto& b = rule.nodes[q];
            const Vec3 y = b[0] * c[0] + b[1] * c[1] + b[2] * c[2];
            const Complex dens = b[0] * phi_density.coeffs(tr.v[0]) +
                                 b[1] * phi_density.coeffs(tr.v[1]) +
                                 b[2] * phi_density.coeffs(tr.v[2]);
            panel += rule.weights[q] * dens * grad_x_dphi_dny(lambda, x, y, n);
        }
        acc += mesh.area(t) * panel;
    }
    return acc;
}

}  // namespace bemx
