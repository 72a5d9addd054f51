// Discrete trace spaces: P0 (piecewise constant per panel) and continuous P1
// (per vertex), on the whole boundary or on a part of it, plus the mass
// matrices realizing the L2(Gamma) pairings.
#pragma once

#include <functional>
#include <vector>

#include "bemx/common.hpp"
#include "bemx/geometry.hpp"
#include "bemx/quadrature.hpp"

namespace bemx {

enum class SpaceTag {
    P0_Gamma,          // one dof per triangle
    P1_Gamma,          // one dof per vertex
    P0_Gamma1,         // per Gamma1 triangle (discrete H^{-1/2}-type on Gamma1)
    P1_InteriorGamma2  // per vertex with full star in Gamma2 (discrete tilde-H^{1/2})
};

inline std::size_t dof_count(SpaceTag space, const SurfaceMesh& mesh,
                             const BoundaryPartition* part = nullptr) {
    switch (space) {
        case SpaceTag::P0_Gamma: return mesh.num_triangles();
        case SpaceTag::P1_Gamma: return mesh.num_vertices();
        case SpaceTag::P0_Gamma1:
            if (!part) throw ValidationError("dof_count: partition required");
            return part->gamma1_triangles.size();
        case SpaceTag::P1_InteriorGamma2:
            if (!part) throw ValidationError("dof_count: partition required");
            return part->interior_gamma2_vertices.size();
    }
    throw ValidationError("dof_count: unknown space");
}

/// Coefficient vector in one of the discrete trace spaces.
struct DensityVector {
    SpaceTag space = SpaceTag::P0_Gamma;
    VectorXcd coeffs;
};

inline DensityVector zeros(SpaceTag space, const SurfaceMesh& mesh,
                           const BoundaryPartition* part = nullptr) {
    return {space, VectorXcd::Zero(static_cast<Eigen::Index>(dof_count(space, mesh, part)))};
}

/// Zero extension of a sub-boundary density to the whole boundary.
inline DensityVector zero_extend(const DensityVector& d, const SurfaceMesh& mesh,
                                 const BoundaryPartition& part) {
    if (d.space == SpaceTag::P0_Gamma || d.space == SpaceTag::P1_Gamma) return d;
    if (d.space == SpaceTag::P0_Gamma1) {
        DensityVector out = zeros(SpaceTag::P0_Gamma, mesh);
        for (std::size_t k = 0; k < part.gamma1_triangles.size(); ++k)
            out.coeffs(part.gamma1_triangles[k]) = d.coeffs(static_cast<Eigen::Index>(k));
        return out;
    }
    DensityVector out = zeros(SpaceTag::P1_Gamma, mesh);
    for (std::size_t k = 0; k < part.interior_gamma2_vertices.size(); ++k)
        out.coeffs(part.interior_gamma2_vertices[k]) = d.coeffs(static_cast<Eigen::Index>(k));
    return out;
}

/// Restriction of a whole-boundary density onto a sub-boundary space.
inline DensityVector restrict_density(const DensityVector& d, SpaceTag target,
                                      const SurfaceMesh& mesh,
                                      const BoundaryPartition& part) {
    DensityVector out = zeros(target, mesh, &part);
    if (target == SpaceTag::P0_Gamma1) {
        if (d.space != SpaceTag::P0_Gamma)
            throw ValidationError("restrict_density: P0_Gamma source required");
        for (std::size_t k = 0; k < part.gamma1_triangles.size(); ++k)
            out.coeffs(static_cast<Eigen::Index>(k)) = d.coeffs(part.gamma1_triangles[k]);
    } else if (target == SpaceTag::P1_InteriorGamma2) {
        if (d.space != SpaceTag::P1_Gamma)
            throw ValidationError("restrict_density: P1_Gamma source required");
        for (std::size_t k = 0; k < part.interior_gamma2_vertices.size(); ++k)
            out.coeffs(static_cast<Eigen::Index>(k)) =
                d.coeffs(part.interior_gamma2_vertices[k]);
    } else {
        out = d;
    }
    return out;
}

enum class OperatorKind { S, K, Kstar, D, MassP0, MassP1, MassMixed };

/// Dense Galerkin matrix together with its row/column space tags.
struct OperatorMatrix {
    OperatorKind kind = OperatorKind::S;
    SpaceTag row_space = SpaceTag::P0_Gamma;
    SpaceTag col_space = SpaceTag::P0_Gamma;
    Complex lambda{0.0, 0.0};
    MatrixXcd entries;
};

/// P0 mass matrix: diag(panel areas).
inline OperatorMatrix mass_p0(const SurfaceMesh& mesh) {
    OperatorMatrix m;
    m.kind = OperatorKind::MassP0;
    m.row_space = m.col_space = SpaceTag::P0_Gamma;
    const auto n = static_cast<Eigen::Index>(mesh.num_triangles());
    m.entries = MatrixXcd::Zero(n, n);
    for (Eigen::Index t = 0; t < n; ++t)
        m.entries(t, t) = mesh.area(static_cast<std::size_t>(t));
    return m;
}

/// P1 mass matrix, assembled from the exact local matrix A/12 [2 1 1; 1 2 1; 1 1 2].
inline OperatorMatrix mass_p1(const SurfaceMesh& mesh) {
    OperatorMatrix m;
    m.kind = OperatorKind::MassP1;
    m.row_space = m.col_space = SpaceTag::P1_Gamma;
    const auto n = static_cast<Eigen::Index>(mesh.num_vertices());
    m.entries = MatrixXcd::Zero(n, n);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tr = mesh.triangle(t);
        const double a12 = mesh.area(t) / 12.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                m.entries(tr.v[i], tr.v[j]) += (i == j ? 2.0 : 1.0) * a12;
    }
    return m;
}

/// Mixed mass matrix <P1 basis, P0 basis>: rows P0 panels, cols P1 vertices;
/// entry (t, v) = area(t)/3 for each vertex v of panel t.
inline OperatorMatrix mass_mixed(const SurfaceMesh& mesh) {
    OperatorMatrix m;
    m.kind = OperatorKind::MassMixed;
    m.row_space = SpaceTag::P0_Gamma;
    m.col_space = SpaceTag::P1_Gamma;
    m.entries = MatrixXcd::Zero(static_cast<Eigen::Index>(mesh.num_triangles()),
                                static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tr = mesh.triangle(t);
        for (int i = 0; i < 3; ++i)
            m.entries(static_cast<Eigen::Index>(t), tr.v[i]) += mesh.area(t) / 3.0;
    }
    return m;
}

/// L2 projection of a pointwise-evaluable field onto P0 or P1 over Gamma.
inline DensityVector l2_project(const std::function<Complex(const Vec3&)>& f,
                                SpaceTag space, const SurfaceMesh& mesh,
                                int quad_order = 4) {
    const TriangleRule& rule = gauss_triangle(quad_order);
    if (space == SpaceTag::P0_Gamma) {
        DensityVector out = zeros(space, mesh);
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
            const auto c = mesh.corners(t);
            Complex acc = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const auto& b = rule.nodes[q];
                acc += rule.weights[q] * f(b[0] * c[0] + b[1] * c[1] + b[2] * c[2]);
            }
            out.coeffs(static_cast<Eigen::Index>(t)) = acc;  // panel mean
        }
        return out;
    }
    if (space != SpaceTag::P1_Gamma)
        throw ValidationError("l2_project: only whole-boundary spaces supported");
    VectorXcd load = VectorXcd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto c = mesh.corners(t);
        const auto& tr = mesh.triangle(t);
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const auto& b = rule.nodes[q];
            const Complex fv =
                mesh.area(t) * rule.weights[q] * f(b[0] * c[0] + b[1] * c[1] + b[2] * c[2]);
            for (int i = 0; i < 3; ++i) load(tr.v[i]) += fv * b[static_cast<std::size_t>(i)];
        }
    }
    DensityVector out;
    out.space = SpaceTag::P1_Gamma;
    out.coeffs = mass_p1(mesh).entries.partialPivLu().solve(load);
    return out;
}

/// L2(Gamma) norm of a whole-boundary density through its mass matrix.
inline double l2_norm(const DensityVector& d, const SurfaceMesh& mesh) {
    if (d.space == SpaceTag::P0_Gamma) {
        double acc = 0.0;
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
            acc += mesh.area(t) * std::norm(d.coeffs(static_cast<Eigen::Index>(t)));
        return std::sqrt(acc);
    }
    if (d.space == SpaceTag::P1_Gamma) {
        const MatrixXcd& m = mass_p1(mesh).entries;
        return std::sqrt(std::abs((d.coeffs.adjoint() * m * d.coeffs)(0, 0)));
    }
    throw ValidationError("l2_norm: whole-boundary density required");
}

}  // namespace bemx
