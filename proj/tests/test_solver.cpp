#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bemx/geometry.hpp"
#include "bemx/operators.hpp"
#include "bemx/solver.hpp"
#include "bemx/spaces.hpp"
#include "bemx/verify.hpp"

using namespace bemx;

namespace {

// A 2x2 system with all block sizes 1 that can be solved by hand:
//   K21 = 0, S11 = -1, D22 = 1, K*12 = 0, F* = 1, G* = 2
//   row 1: K21 g1 - S11 g2 = g2 = 1
//   row 2: D22 g1 - K*12 g2 = g1 = 2.
BlockOperator scalar_block() {
    BlockOperator a;
    a.K21 = MatrixXcd::Zero(1, 1);
    a.S11 = -MatrixXcd::Identity(1, 1);
    a.D22 = MatrixXcd::Identity(1, 1);
    a.Kstar12 = MatrixXcd::Zero(1, 1);
    return a;
}

struct Fixture {
    SurfaceMesh mesh = unit_sphere_mesh(2);
    BoundaryPartition part = partition_boundary(mesh, HalfSpaceRule{});
    OperatorSet ops = assemble_operator_set(mesh, WaveNumber{Complex(0.0, 0.0)});
};

const Fixture& fx() {
    static const Fixture f;
    return f;
}

}  // namespace

TEST_CASE("Schur path solves the hand-checked scalar system") {
    const BlockOperator a = scalar_block();
    VectorXcd f(1), g(1);
    f(0) = 1.0;
    g(0) = 2.0;
    const SchurSolution sol = solve_schur(a, f, g);
    CHECK(std::abs(sol.g1(0) - Complex(2.0, 0.0)) < 1e-14);
    CHECK(std::abs(sol.g2(0) - Complex(1.0, 0.0)) < 1e-14);
    const SchurSolution mono = solve_monolithic(a, f, g);
    CHECK(std::abs(mono.g1(0) - Complex(2.0, 0.0)) < 1e-14);
    CHECK(std::abs(mono.g2(0) - Complex(1.0, 0.0)) < 1e-14);
}

TEST_CASE("Schur and monolithic paths agree on random well-conditioned blocks") {
    std::mt19937 rng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_matrix = [&](Eigen::Index r, Eigen::Index c) {
        MatrixXcd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
        return m;
    };
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Index n1 = 7, n2 = 5;
        BlockOperator a;
        a.K21 = random_matrix(n1, n2);
        a.S11 = random_matrix(n1, n1) + 10.0 * MatrixXcd::Identity(n1, n1);
        a.D22 = random_matrix(n2, n2) + 10.0 * MatrixXcd::Identity(n2, n2);
        a.Kstar12 = random_matrix(n2, n1);
        VectorXcd f(n1), g(n2);
        for (Eigen::Index i = 0; i < n1; ++i) f(i) = Complex(gauss(rng), gauss(rng));
        for (Eigen::Index i = 0; i < n2; ++i) g(i) = Complex(gauss(rng), gauss(rng));
        const SchurSolution s = solve_schur(a, f, g);
        const SchurSolution m = solve_monolithic(a, f, g);
        const double sol_norm = std::sqrt(s.g1.squaredNorm() + s.g2.squaredNorm());
        const double diff =
            std::sqrt((s.g1 - m.g1).squaredNorm() + (s.g2 - m.g2).squaredNorm());
        CHECK(diff / sol_norm < 1e-10);
        // Residual of the original block system along the Schur path.
        VectorXcd b(n1 + n2);
        b.head(n1) = f;
        b.tail(n2) = g;
        CHECK((a.apply(s.g1, s.g2) - b).norm() / b.norm() < 1e-12);
    }
}

TEST_CASE("singular blocks are rejected") {
    BlockOperator a = scalar_block();
    a.D22(0, 0) = 0.0;
    VectorXcd f = VectorXcd::Ones(1), g = VectorXcd::Ones(1);
    CHECK_THROWS_AS(solve_schur(a, f, g), NumericalError);
}

TEST_CASE("zero data produces the zero solution") {
    const auto& f = fx();
    MixedProblem p;
    p.mesh = &f.mesh;
    p.partition = &f.part;
    p.lambda = WaveNumber{Complex(0.0, 0.0)};
    p.f1 = zeros(SpaceTag::P1_Gamma, f.mesh);
    p.f2 = zeros(SpaceTag::P0_Gamma, f.mesh);
    const SolveReport r = solve_mixed(p, f.ops);
    CHECK(r.g1.coeffs.norm() == 0.0);
    CHECK(r.g2.coeffs.norm() == 0.0);
    CHECK(r.schur_residual == 0.0);
}

TEST_CASE("the solve is linear in the boundary data") {
    const auto& f = fx();
    const Vec3 src(0.0, 0.0, 3.0);
    const ManufacturedCase mc = manufactured_case(
        WaveNumber{Complex(0.0, 0.0)}, ProblemSide::Interior, src, f.mesh, f.part, {});
    const SolveReport r1 = solve_mixed(mc.problem, f.ops);
    MixedProblem scaled = mc.problem;
    scaled.f1.coeffs *= 10.0;
    scaled.f2.coeffs *= 10.0;
    const SolveReport r10 = solve_mixed(scaled, f.ops);
    CHECK((r10.g1.coeffs - 10.0 * r1.g1.coeffs).norm() / r10.g1.coeffs.norm() < 1e-12);
    CHECK((r10.g2.coeffs - 10.0 * r1.g2.coeffs).norm() / r10.g2.coeffs.norm() < 1e-12);
}

TEST_CASE("manufactured interior Laplace problem is reproduced at probes") {
    const auto& f = fx();
    const Vec3 src(0.0, 0.0, 3.0);
    const std::vector<Vec3> probes{Vec3(0.0, 0.0, 0.0), Vec3(0.3, -0.2, 0.1)};
    const ManufacturedCase mc = manufactured_case(
        WaveNumber{Complex(0.0, 0.0)}, ProblemSide::Interior, src, f.mesh, f.part, probes);
    const SolveReport r = solve_mixed(mc.problem, f.ops);
    CHECK(r.schur_residual < 1e-10);
    CHECK(r.path_discrepancy < 1e-10);
    CHECK(r.condition_estimate > 1.0);
    const std::vector<Complex> u = evaluate(mc.problem, r.cauchy, probes);
    for (std::size_t i = 0; i < probes.size(); ++i)
        CHECK(std::abs(u[i] - mc.exact_values[i]) / std::abs(mc.exact_values[i]) < 1e-2);
}

TEST_CASE("representation formula reproduces exact Cauchy data without a solve") {
    const auto& f = fx();
    const Vec3 src(0.0, 0.0, 3.0);
    const std::vector<Vec3> probes{Vec3(0.0, 0.0, 0.0), Vec3(0.2, 0.4, -0.3)};
    const ManufacturedCase mc = manufactured_case(
        WaveNumber{Complex(1.0, 1.0)}, ProblemSide::Interior, src, f.mesh, f.part, probes);
    const CauchyData exact = mc.exact_cauchy();
    const std::vector<Complex> u = evaluate(mc.problem, exact, probes);
    for (std::size_t i = 0; i < probes.size(); ++i)
        CHECK(std::abs(u[i] - mc.exact_values[i]) / std::abs(mc.exact_values[i]) < 1e-2);
}

TEST_CASE("make_cauchy splices unknowns into the given data") {
    const auto& f = fx();
    MixedProblem p;
    p.mesh = &f.mesh;
    p.partition = &f.part;
    p.f1 = zeros(SpaceTag::P1_Gamma, f.mesh);
    p.f2 = zeros(SpaceTag::P0_Gamma, f.mesh);
    VectorXcd g1 = VectorXcd::Constant(
        static_cast<Eigen::Index>(f.part.interior_gamma2_vertices.size()), Complex(2.0, 1.0));
    VectorXcd g2 = VectorXcd::Constant(
        static_cast<Eigen::Index>(f.part.gamma1_triangles.size()), Complex(-3.0, 0.5));
    const CauchyData cd = make_cauchy(p, g1, g2);
    for (int v : f.part.interior_gamma2_vertices)
        CHECK(cd.phi.coeffs(v) == Complex(2.0, 1.0));
    for (int t : f.part.gamma1_triangles) CHECK(cd.psi.coeffs(t) == Complex(-3.0, 0.5));
    for (int t : f.part.gamma2_triangles) CHECK(cd.psi.coeffs(t) == Complex(0.0, 0.0));
}

TEST_CASE("problem validation rejects inconsistent setups") {
    const auto& f = fx();
    MixedProblem p;
    p.mesh = &f.mesh;
    p.partition = &f.part;
    p.f1 = zeros(SpaceTag::P1_Gamma, f.mesh);
    p.f2 = zeros(SpaceTag::P0_Gamma, f.mesh);

    SECTION("exterior problems admit no volume source") {
        p.side = ProblemSide::Exterior;
        p.volume.atoms.push_back({Vec3::Zero(), Complex(1.0, 0.0)});
        CHECK_THROWS_AS(p.check(), ValidationError);
    }
    SECTION("degenerate partitions are rejected") {
        BoundaryPartition all_dirichlet = f.part;
        all_dirichlet.gamma2_triangles.clear();
        p.partition = &all_dirichlet;
        CHECK_THROWS_AS(p.check(), ValidationError);
    }
    SECTION("wrong density spaces are rejected") {
        p.f1 = zeros(SpaceTag::P0_Gamma, f.mesh);
        CHECK_THROWS_AS(p.check(), ValidationError);
    }
    SECTION("missing mesh is rejected") {
        p.mesh = nullptr;
        CHECK_THROWS_AS(p.check(), ValidationError);
    }
}

TEST_CASE("field evaluation rejects points on the wrong side") {
    const auto& f = fx();
    MixedProblem p;
    p.mesh = &f.mesh;
    p.partition = &f.part;
    p.f1 = zeros(SpaceTag::P1_Gamma, f.mesh);
    p.f2 = zeros(SpaceTag::P0_Gamma, f.mesh);
    CauchyData cd;
    cd.phi = p.f1;
    cd.psi = p.f2;
    CHECK_THROWS_AS(evaluate(p, cd, {Vec3(5.0, 0.0, 0.0)}), ValidationError);
    p.side = ProblemSide::Exterior;
    CHECK_THROWS_AS(evaluate(p, cd, {Vec3(0.0, 0.0, 0.0)}), ValidationError);
}
