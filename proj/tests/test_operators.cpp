#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bemx/geometry.hpp"
#include "bemx/operators.hpp"
#include "bemx/spaces.hpp"

using namespace bemx;

namespace {

const SurfaceMesh& sphere2() {
    static const SurfaceMesh m = unit_sphere_mesh(2);
    return m;
}

struct FullSet {
    OperatorMatrix S, K, Kstar, D, M01;
};

// Assembled once; the Laplace operators on the unit sphere back most oracles.
const FullSet& laplace_set() {
    static const FullSet set = [] {
        const SurfaceMesh& m = sphere2();
        const WaveNumber lz{Complex(0.0, 0.0)};
        FullSet s;
        s.S = assemble_single_layer(m, lz);
        s.K = assemble_double_layer(m, lz);
        s.Kstar = assemble_adjoint_double_layer(m, lz);
        s.D = assemble_hypersingular(m, lz);
        s.M01 = mass_mixed(m);
        return s;
    }();
    return set;
}

}  // namespace

TEST_CASE("single layer of the unit density on the unit sphere") {
    // The uniform unit charge on the unit sphere has potential 1 on the
    // surface, so the Galerkin rows of S against panel indicators equal the
    // panel areas.
    const SurfaceMesh& m = sphere2();
    const auto nt = static_cast<Eigen::Index>(m.num_triangles());
    const VectorXcd s1 = laplace_set().S.entries * VectorXcd::Constant(nt, 1.0);
    double err2 = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
        const double a = m.area(static_cast<std::size_t>(t));
        err2 += std::norm(s1(t) - Complex(a, 0.0)) / a;
    }
    // dominated by the geometric error of the level-2 icosphere (~1e-2 h^2)
    CHECK(std::sqrt(err2 / m.total_area()) < 1.5e-2);
}

TEST_CASE("double layer of the unit density is -1/2 in the Galerkin sense") {
    const SurfaceMesh& m = sphere2();
    const auto& set = laplace_set();
    const auto nv = static_cast<Eigen::Index>(m.num_vertices());
    const VectorXcd ones_v = VectorXcd::Constant(nv, 1.0);
    const VectorXcd lhs = set.K.entries * ones_v;
    const VectorXcd rhs = -0.5 * set.M01.entries * ones_v;
    CHECK((lhs - rhs).norm() / rhs.norm() < 1e-5);
}

TEST_CASE("hypersingular operator annihilates constants") {
    const SurfaceMesh& m = sphere2();
    const auto nv = static_cast<Eigen::Index>(m.num_vertices());
    const VectorXcd d1 = laplace_set().D.entries * VectorXcd::Constant(nv, 1.0);
    CHECK(d1.norm() < 1e-12 * laplace_set().D.entries.norm());
    (void)m;
}

TEST_CASE("symmetry relations of the Laplace operators") {
    const auto& set = laplace_set();
    const double s_scale = set.S.entries.cwiseAbs().maxCoeff();
    const double d_scale = set.D.entries.cwiseAbs().maxCoeff();
    const double k_scale = set.K.entries.cwiseAbs().maxCoeff();
    CHECK((set.S.entries - set.S.entries.transpose()).cwiseAbs().maxCoeff() / s_scale <
          1e-8);
    CHECK((set.D.entries - set.D.entries.transpose()).cwiseAbs().maxCoeff() / d_scale <
          1e-8);
    CHECK((set.Kstar.entries - set.K.entries.transpose()).cwiseAbs().maxCoeff() / k_scale <
          1e-6);
}

TEST_CASE("hypersingular quadratic form is negative with the known value for z") {
    // On the unit sphere the positive Maue operator W has eigenvalue
    // n(n+1)/(2n+1) on degree-n spherical harmonics, so for u = z (n = 1)
    //   <D z, z> = -<W z, z> = -(2/3) * integral of z^2 = -8*pi/9.
    const SurfaceMesh& m = sphere2();
    DensityVector zc = l2_project([](const Vec3& x) { return Complex(x.z(), 0.0); },
                                  SpaceTag::P1_Gamma, m);
    const Complex q = (zc.coeffs.transpose() * laplace_set().D.entries * zc.coeffs)(0, 0);
    const double expected = -8.0 * M_PI / 9.0;
    CHECK(q.imag() == Catch::Approx(0.0).margin(1e-12));
    CHECK(q.real() < 0.0);
    CHECK(std::abs(q.real() - expected) / std::abs(expected) < 5e-2);
}

TEST_CASE("restricted blocks are submatrices of the full operators") {
    const SurfaceMesh& m = sphere2();
    const BoundaryPartition part = partition_boundary(m, HalfSpaceRule{});
    const auto& set = laplace_set();
    const OperatorMatrix s11 =
        restrict_block(set.S, SpaceTag::P0_Gamma1, SpaceTag::P0_Gamma1, m, part);
    REQUIRE(s11.entries.rows() == static_cast<Eigen::Index>(part.gamma1_triangles.size()));
    for (std::size_t i = 0; i < part.gamma1_triangles.size(); ++i)
        for (std::size_t j = 0; j < part.gamma1_triangles.size(); ++j)
            CHECK(s11.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  set.S.entries(part.gamma1_triangles[i], part.gamma1_triangles[j]));
    const OperatorMatrix k21 =
        restrict_block(set.K, SpaceTag::P0_Gamma1, SpaceTag::P1_InteriorGamma2, m, part);
    CHECK(k21.entries.rows() == static_cast<Eigen::Index>(part.gamma1_triangles.size()));
    CHECK(k21.entries.cols() ==
          static_cast<Eigen::Index>(part.interior_gamma2_vertices.size()));
    CHECK_THROWS_AS(
        restrict_block(set.S, SpaceTag::P1_InteriorGamma2, SpaceTag::P0_Gamma1, m, part),
        ValidationError);
}

TEST_CASE("operators depend continuously on the wavenumber") {
    const SurfaceMesh m = unit_sphere_mesh(1);
    const OperatorMatrix s0 = assemble_single_layer(m, WaveNumber{Complex(0.0, 0.0)});
    const OperatorMatrix s_eps = assemble_single_layer(m, WaveNumber{Complex(1e-6, 0.0)});
    CHECK((s0.entries - s_eps.entries).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("Newton potential traces of a unit atom at the center") {
    const SurfaceMesh& m = sphere2();
    VolumeSourceSpec src;
    src.atoms.push_back({Vec3::Zero(), Complex(1.0, 0.0)});
    const NewtonTraces tr = newton_traces(src, WaveNumber{Complex(0.0, 0.0)}, m);
    const double gd = 1.0 / (4.0 * M_PI);
    // Vertices sit exactly on the unit sphere, so the Dirichlet samples are exact.
    for (Eigen::Index v = 0; v < tr.dirichlet.coeffs.size(); ++v)
        CHECK(std::abs(tr.dirichlet.coeffs(v) - Complex(gd, 0.0)) < 1e-14);
    // Panel quadrature points lie slightly inside the sphere; the normal
    // derivative -x.n/(4*pi*r^3) deviates from -1/(4*pi) at mesh accuracy.
    for (Eigen::Index t = 0; t < tr.neumann.coeffs.size(); ++t)
        CHECK(std::abs(tr.neumann.coeffs(t) - Complex(-gd, 0.0)) < 3e-2 * gd);
}

TEST_CASE("Newton traces reject sources near the boundary") {
    const SurfaceMesh& m = sphere2();
    VolumeSourceSpec src;
    src.atoms.push_back({Vec3(0.999, 0.0, 0.0), Complex(1.0, 0.0)});
    CHECK_THROWS_AS(newton_traces(src, WaveNumber{Complex(0.0, 0.0)}, m), ValidationError);
}

TEST_CASE("potential gradients match finite differences of the potentials") {
    const SurfaceMesh m = unit_sphere_mesh(1);
    const WaveNumber lambda{Complex(1.0, 0.5)};
    DensityVector psi = l2_project(
        [](const Vec3& x) { return Complex(1.0 + x.x(), 0.3 * x.y()); }, SpaceTag::P0_Gamma,
        m);
    DensityVector phi_d = l2_project(
        [](const Vec3& x) { return Complex(x.z(), -0.2); }, SpaceTag::P1_Gamma, m);
    const Vec3 x(2.0, -1.0, 0.5);
    const double h = 1e-5;
    auto fd = [&](auto&& eval) {
        Eigen::Vector3cd g;
        for (int k = 0; k < 3; ++k) {
            Vec3 xp = x, xm = x;
            xp(k) += h;
            xm(k) -= h;
            g(k) = (eval(xp) - eval(xm)) / (2.0 * h);
        }
        return g;
    };
    const Eigen::Vector3cd gs = single_layer_grad(m, lambda, psi, x, 8);
    const Eigen::Vector3cd gs_fd =
        fd([&](const Vec3& p) { return single_layer_potential(m, lambda, psi, p, 8); });
    CHECK((gs - gs_fd).norm() / gs.norm() < 1e-6);
    const Eigen::Vector3cd gk = double_layer_grad(m, lambda, phi_d, x, 8);
    const Eigen::Vector3cd gk_fd =
        fd([&](const Vec3& p) { return double_layer_potential(m, lambda, phi_d, p, 8); });
    CHECK((gk - gk_fd).norm() / gk.norm() < 1e-6);
}

TEST_CASE("assembly respects the dof cap") {
    const SurfaceMesh m = unit_sphere_mesh(1);
    AssemblyOptions opts;
    opts.dof_cap = 10;
    CHECK_THROWS_AS(assemble_single_layer(m, WaveNumber{Complex(0.0, 0.0)}, opts),
                    ValidationError);
}

TEST_CASE("assembly is deterministic across thread counts") {
    const SurfaceMesh m = unit_sphere_mesh(1);
    const WaveNumber lambda{Complex(1.0, 1.0)};
#ifdef _WIN32
    SUCCEED("env manipulation not supported");
#else
    setenv("BEMX_THREADS", "1", 1);
    const OperatorMatrix s1 = assemble_single_layer(m, lambda);
    setenv("BEMX_THREADS", "4", 1);
    const OperatorMatrix s4 = assemble_single_layer(m, lambda);
    unsetenv("BEMX_THREADS");
    CHECK((s1.entries - s4.entries).cwiseAbs().maxCoeff() == 0.0);
#endif
}
