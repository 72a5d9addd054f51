// Exact-solution oracles and property suites: manufactured point-source
// problems, jump-relation residuals, far-field decay checks.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "bemx/common.hpp"
#include "bemx/geometry.hpp"
#include "bemx/kernels.hpp"
#include "bemx/operators.hpp"
#include "bemx/solver.hpp"
#include "bemx/spaces.hpp"

namespace bemx {

/// Problem with known exact solution u(x) = Phi_lambda(x - y*): the source sits
/// on the other side of Gamma, so u solves the homogeneous equation on the
/// side of interest and carries exact Cauchy data.
struct ManufacturedCase {
    MixedProblem problem;
    Vec3 source;
    std::vector<Vec3> probes;
    std::vector<Complex> exact_values;

    Complex exact_u(const Vec3& x) const { return phi(problem.lambda, x, source); }
    Eigen::Vector3cd exact_grad(const Vec3& x) const {
        return grad_x_phi(problem.lambda, x, source);
    }

    /// Exact whole-boundary Cauchy data (interpolated/averaged), independent of
    /// any solve; used for representation-formula identities.
    CauchyData exact_cauchy(int quad_order = 6) const {
        const auto& mesh = *problem.mesh;
        CauchyData cd;
        cd.phi = zeros(SpaceTag::P1_Gamma, mesh);
        for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
            cd.phi.coeffs(static_cast<Eigen::Index>(v)) =
                exact_u(mesh.vertex(static_cast<int>(v)));
        const TriangleRule& rule = gauss_triangle(quad_order);
        cd.psi = zeros(SpaceTag::P0_Gamma, mesh);
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
            const auto c = mesh.corners(t);
            const Vec3& n = mesh.normal(t);
            Complex acc = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const auto& b = rule.nodes[q];
                const Eigen::Vector3cd g = exact_grad(b[0] * c[0] + b[1] * c[1] + b[2] * c[2]);
                acc += rule.weights[q] * (g(0) * n(0) + g(1) * n(1) + g(2) * n(2));
            }
            cd.psi.coeffs(static_cast<Eigen::Index>(t)) = acc;
        }
        return cd;
    }
};

inline ManufacturedCase manufactured_case(const WaveNumber& lambda, ProblemSide side,
                                          const Vec3& source, const SurfaceMesh& mesh,
                                          const BoundaryPartition& partition,
                                          const std::vector<Vec3>& probes) {
    const bool interior = side == ProblemSide::Interior;
    if (mesh.contains(source) == interior)
        throw ValidationError("manufactured_case: source must lie on the opposite side");
    if (mesh.surface_distance(source) < 0.1 * mesh.bbox_diagonal())
        throw ValidationError("manufactured_case: source too close to Gamma");
    for (const auto& x : probes) {
        if (mesh.contains(x) != interior)
            throw ValidationError("manufactured_case: probe on the wrong side");
        if (mesh.surface_distance(x) < mesh.max_diameter())
            throw ValidationError("manufactured_case: probe too close to Gamma");
    }
    ManufacturedCase mc;
    mc.source = source;
    mc.probes = probes;
    mc.problem.mesh = &mesh;
    mc.problem.partition = &partition;
    mc.problem.lambda = lambda;
    mc.problem.side = side;
    // Boundary data extracted from the exact solution, restricted to the parts.
    const CauchyData exact = mc.exact_cauchy();
    mc.problem.f1 = zeros(SpaceTag::P1_Gamma, mesh);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        if (partition.labels[t] != 1) continue;
        for (int k = 0; k < 3; ++k) {
            const int v = mesh.triangle(t).v[k];
            mc.problem.f1.coeffs(v) = exact.phi.coeffs(v);
        }
    }
    mc.problem.f2 = zeros(SpaceTag::P0_Gamma, mesh);
    for (int t : partition.gamma2_triangles)
        mc.problem.f2.coeffs(t) = exact.psi.coeffs(t);
    for (const auto& x : probes) mc.exact_values.push_back(mc.exact_u(x));
    return mc;
}

/// Named residuals of the discrete jump relations and operator symmetries.
struct JumpResidual {
    std::string name;
    double value;
};

namespace detail {

inline double p0_residual_norm(const SurfaceMesh& mesh, const VectorXcd& tested_residual) {
    // tested_residual holds <rho, chi_i>; the represented function is
    // M00^{-1} r, whose L2 norm is sqrt(sum |r_i|^2 / area_i).
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        acc += std::norm(tested_residual(static_cast<Eigen::Index>(t))) / mesh.area(t);
    return std::sqrt(acc);
}

}  // namespace detail

/// Mass-weighted residual table for the classical identities at one wavenumber.
/// The lambda = 0 identities ((+-1/2 I + K) 1, D 1, S 1 = 1 on the unit sphere)
/// are only evaluated when lambda = 0.
inline std::vector<JumpResidual> jump_relation_suite(const SurfaceMesh& mesh,
                                                     const WaveNumber& lambda,
                                                     const OperatorSet& ops) {
    std::vector<JumpResidual> table;
    const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
    const VectorXcd ones_p1 = VectorXcd::Constant(nv, Complex(1.0, 0.0));
    const double one_norm = std::sqrt(mesh.total_area());  // ||1||_{L2(Gamma)}

    if (lambda.is_laplace()) {
        // Interior trace of the unit double layer is -1, exterior 0.
        const VectorXcd m_ones = ops.M01.entries * ones_p1;
        const VectorXcd interior = (-0.5) * m_ones + ops.K.entries * ones_p1 + m_ones;
        table.push_back({"(-1/2 I + K)1 + 1",
                         detail::p0_residual_norm(mesh, interior) / one_norm});
        const VectorXcd exterior = 0.5 * m_ones + ops.K.entries * ones_p1;
        table.push_back({"(1/2 I + K)1",
                         detail::p0_residual_norm(mesh, exterior) / one_norm});
        // D annihilates constants.
        table.push_back({"D 1", (ops.D.entries * ones_p1).norm() / ops.D.entries.norm()});
        // On the unit sphere the single layer of the unit density equals 1.
        const auto nt = static_cast<Eigen::Index>(mesh.num_triangles());
        const VectorXcd ones_p0 = VectorXcd::Constant(nt, Complex(1.0, 0.0));
        VectorXcd s_res = ops.S.entries * ones_p0;
        for (Eigen::Index t = 0; t < nt; ++t)
            s_res(t) -= mesh.area(static_cast<std::size_t>(t));
        table.push_back({"S 1 - 1", detail::p0_residual_norm(mesh, s_res) / one_norm});
    }
    // Symmetries hold for every lambda.
    const double s_scale = ops.S.entries.cwiseAbs().maxCoeff();
    table.push_back({"S - S^T", (ops.S.entries - ops.S.entries.transpose())
                                        .cwiseAbs()
                                        .maxCoeff() /
                                    s_scale});
    const double d_scale = ops.D.entries.cwiseAbs().maxCoeff();
    table.push_back({"D - D^T", (ops.D.entries - ops.D.entries.transpose())
                                        .cwiseAbs()
                                        .maxCoeff() /
                                    d_scale});
    const double k_scale = ops.K.entries.cwiseAbs().maxCoeff();
    table.push_back({"K* - K^T", (ops.Kstar.entries - ops.K.entries.transpose())
                                         .cwiseAbs()
                                         .maxCoeff() /
                                     k_scale});
    return table;
}

/// Two-sided trace agreement of the single layer potential for a fixed
/// pseudo-random P0 density: extrapolate along the normal from both sides at a
/// few panels and compare.
inline double single_layer_trace_agreement(const SurfaceMesh& mesh, const WaveNumber& lambda,
                                           unsigned seed = 7) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    DensityVector g = zeros(SpaceTag::P0_Gamma, mesh);
    for (Eigen::Index i = 0; i < g.coeffs.size(); ++i) g.coeffs(i) = unif(rng);
    // Extrapolation offsets stay well below the domain scale so both probe
    // points remain on the intended side even on coarse meshes.
    const double h = std::min(mesh.max_diameter(), 0.1 * mesh.bbox_diagonal());
    double worst = 0.0;
    double scale = 0.0;
    const std::size_t stride = std::max<std::size_t>(1, mesh.num_triangles() / 8);
    for (std::size_t t = 0; t < mesh.num_triangles(); t += stride) {
        const Vec3 p = mesh.centroid(t);
        const Vec3 n = mesh.normal(t);
        // Linear extrapolation v(0) ~ 2 v(t1) - v(t2) with t2 = 2 t1.
        auto extrapolate = [&](double sign) {
            const Complex v1 = single_layer_potential(mesh, lambda, g, p + sign * 0.25 * h * n, 10);
            const Complex v2 = single_layer_potential(mesh, lambda, g, p + sign * 0.5 * h * n, 10);
            return 2.0 * v1 - v2;
        };
        const Complex inner = extrapolate(-1.0);
        const Complex outer = extrapolate(1.0);
        worst = std::max(worst, std::abs(inner - outer));
        scale = std::max({scale, std::abs(inner), std::abs(outer)});
    }
    return scale > 0.0 ? worst / scale : 0.0;
}

/// Far-field decay report for exterior Cauchy data.
struct RadiationRow {
    double radius;
    double max_abs_u_times_r;    // should stabilize for lambda != 0
    double radiation_residual;   // max |du/dr - i lambda u| * r
    double laplace_decay;        // (|u| + r |grad u|) * r for lambda = 0
};

inline std::vector<RadiationRow> radiation_check(const MixedProblem& p, const CauchyData& cd,
                                                 const std::vector<double>& radii) {
    if (p.side != ProblemSide::Exterior)
        throw ValidationError("radiation_check: exterior Cauchy data required");
    const auto& mesh = *p.mesh;
    Vec3 center = Vec3::Zero();
    for (const auto& v : mesh.vertices()) center += v;
    center /= static_cast<double>(mesh.num_vertices());
    double circumradius = 0.0;
    for (const auto& v : mesh.vertices())
        circumradius = std::max(circumradius, (v - center).norm());
    std::vector<Vec3> dirs;
    for (double z = -0.8; z <= 0.81; z += 0.4)
        for (double a = 0.0; a < 2.0 * std::numbers::pi - 1e-9; a += std::numbers::pi / 3.0) {
            const double r = std::sqrt(1.0 - z * z);
            dirs.emplace_back(r * std::cos(a), r * std::sin(a), z);
        }
    std::vector<RadiationRow> rows;
    for (double radius : radii) {
        if (radius < 2.0 * circumradius)
            throw ValidationError("radiation_check: radius below 2x circumradius");
        std::vector<Vec3> pts;
        for (const auto& d : dirs) pts.push_back(radius * d);
        const auto u = evaluate(p, cd, pts);
        const auto grad = evaluate_gradient(p, cd, pts);
        RadiationRow row{radius, 0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Vec3 rhat = pts[i].normalized();
            const Complex dudr =
                grad[i](0) * rhat(0) + grad[i](1) * rhat(1) + grad[i](2) * rhat(2);
            row.max_abs_u_times_r = std::max(row.max_abs_u_times_r, std::abs(u[i]) * radius);
            row.radiation_residual =
                std::max(row.radiation_residual,
                         std::abs(dudr - Complex(0.0, 1.0) * p.lambda.value * u[i]) * radius);
            row.laplace_decay =
                std::max(row.laplace_decay,
                         (std::abs(u[i]) + radius * grad[i].norm()) * radius);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace bemx
