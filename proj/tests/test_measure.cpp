#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bemx/geometry.hpp"
#include "bemx/measure.hpp"
#include "bemx/solver.hpp"

using namespace bemx;

namespace {

const SurfaceMesh& sphere2() {
    static const SurfaceMesh m = unit_sphere_mesh(2);
    return m;
}

const VolumeGrid& grid40() {
    static const VolumeGrid g = make_volume_grid(sphere2(), 40);
    return g;
}

}  // namespace

TEST_CASE("volume grid fills the enclosed volume") {
    const SurfaceMesh& m = sphere2();
    const VolumeGrid& g = grid40();
    CHECK(g.cell_volume > 0.0);
    CHECK_FALSE(g.points.empty());
    // Total weight approximates the enclosed volume to a surface-layer error.
    CHECK(std::abs(g.total_weight() - m.enclosed_volume()) / m.enclosed_volume() < 5e-2);
    for (std::size_t i = 0; i < g.points.size(); i += 97) CHECK(m.contains(g.points[i]));
    CHECK_THROWS_AS(make_volume_grid(m, 1), ValidationError);
}

TEST_CASE("total variation sums atom and density masses") {
    MeasureData mu;
    CHECK(total_variation(mu) == 0.0);
    mu.atoms.push_back({Vec3::Zero(), 2.0});
    mu.atoms.push_back({Vec3(0.1, 0.0, 0.0), -3.0});
    CHECK(total_variation(mu) == 5.0);
    mu.smooth_part.push_back({Vec3(0.2, 0.0, 0.0), 0.5, Complex(-4.0, 0.0)});
    CHECK(total_variation(mu) == 7.0);
}

TEST_CASE("mollified atoms keep their mass and support") {
    MeasureData mu;
    mu.atoms.push_back({Vec3(0.0, 0.0, 0.0), 2.5});
    const double eps = 0.15;
    const auto samples = mollify(mu, eps, sphere2(), grid40());
    double mass = 0.0;
    for (const auto& s : samples) {
        CHECK((s.location - Vec3::Zero()).norm() < eps);
        mass += s.quad_weight * s.value.real();
    }
    CHECK(mass == Catch::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("mollification is additive over atoms") {
    MeasureData two;
    two.atoms.push_back({Vec3(0.3, 0.0, 0.0), 1.0});
    two.atoms.push_back({Vec3(-0.3, 0.0, 0.0), -2.0});
    const auto both = mollify(two, 0.12, sphere2(), grid40());
    double mass = 0.0;
    for (const auto& s : both) mass += s.quad_weight * s.value.real();
    CHECK(mass == Catch::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("mollify validates eps against the geometry and the grid") {
    MeasureData mu;
    mu.atoms.push_back({Vec3(0.5, 0.0, 0.0), 1.0});
    CHECK_THROWS_AS(mollify(mu, 0.0, sphere2(), grid40()), ValidationError);
    CHECK_THROWS_AS(mollify(mu, 0.6, sphere2(), grid40()), ValidationError);  // leaks out
    const VolumeGrid coarse = make_volume_grid(sphere2(), 4);
    CHECK_THROWS_AS(mollify(mu, 0.01, sphere2(), coarse), ValidationError);  // unresolved
}

TEST_CASE("weak-* residual vanishes for conserved tests and decays with eps") {
    MeasureData mu;
    mu.atoms.push_back({Vec3(0.2, -0.1, 0.3), 1.75});
    std::vector<std::function<double(const Vec3&)>> constant{
        [](const Vec3&) { return 1.0; }};
    std::vector<std::function<double(const Vec3&)>> quadratic{
        [](const Vec3& x) { return x.squaredNorm(); }};
    const auto fine = mollify(mu, 0.08, sphere2(), grid40());
    const auto coarse = mollify(mu, 0.25, sphere2(), grid40());
    // Mass is conserved exactly by the normalization.
    CHECK(weakstar_residual(mu, fine, constant) < 1e-12);
    // For smooth non-conserved tests the residual is O(eps^2) and monotone here.
    const double r_fine = weakstar_residual(mu, fine, quadratic);
    const double r_coarse = weakstar_residual(mu, coarse, quadratic);
    CHECK(r_fine < r_coarse);
    CHECK(r_coarse < 0.25 * 0.25 * total_variation(mu));
    // No atoms: the smooth part passes through mollification unchanged.
    MeasureData smooth;
    smooth.smooth_part.push_back({Vec3(0.1, 0.0, 0.0), 0.3, Complex(2.0, 0.0)});
    CHECK(weakstar_residual(smooth, mollify(smooth, 0.1, sphere2(), grid40()), quadratic) ==
          0.0);
}

TEST_CASE("truncation clamps to the level") {
    const std::vector<double> v{3.0, -5.0, 1.0, 0.0};
    const std::vector<double> t = truncate(v, 2.0);
    CHECK(t == std::vector<double>{2.0, -2.0, 1.0, 0.0});
    CHECK(truncate(v, 10.0) == v);
    CHECK_THROWS_AS(truncate(v, 0.0), ValidationError);
    CHECK_THROWS_AS(truncate(v, -1.0), ValidationError);
}

TEST_CASE("Marcinkiewicz quasinorm properties") {
    // Constant |value| = 1 on total weight V = 2: sup_b b^r |{|u|>b}| is
    // realized just below b = 1 and equals V exactly.
    std::vector<std::pair<double, double>> flat;
    for (int i = 0; i < 8; ++i) flat.push_back({1.0, 0.25});
    const double r = 1.5;
    const double q_flat = marcinkiewicz_quasinorm(flat, r);
    CHECK(q_flat == Catch::Approx(2.0).epsilon(1e-14));
    // Zero field.
    CHECK(marcinkiewicz_quasinorm({{0.0, 1.0}, {0.0, 2.0}}, r) == 0.0);
    // Homogeneity: scaling the field scales the quasinorm by the r-th power.
    std::vector<std::pair<double, double>> scaled = flat;
    for (auto& s : scaled) s.first *= 3.0;
    CHECK(marcinkiewicz_quasinorm(scaled, r) ==
          Catch::Approx(std::pow(3.0, r) * q_flat).epsilon(1e-12));
    // Dominated by the discrete L^r mass: b^r |{|u|>b}| <= sum w |u|^r.
    std::vector<std::pair<double, double>> mixed{{0.5, 1.0}, {2.0, 0.2}, {7.0, 0.01}};
    double lr = 0.0;
    for (const auto& [value, weight] : mixed) lr += weight * std::pow(value, r);
    CHECK(marcinkiewicz_quasinorm(mixed, r) <= lr);
    CHECK_THROWS_AS(marcinkiewicz_quasinorm({}, r), ValidationError);
    CHECK_THROWS_AS(marcinkiewicz_quasinorm(flat, 0.0), ValidationError);
}

TEST_CASE("approximating solves converge to the atomic reference") {
    const SurfaceMesh& m = sphere2();
    const BoundaryPartition part = partition_boundary(m, HalfSpaceRule{});
    const OperatorSet ops = assemble_operator_set(m, WaveNumber{Complex(0.0, 0.0)});
    MixedProblem base;
    base.mesh = &m;
    base.partition = &part;
    base.lambda = WaveNumber{Complex(0.0, 0.0)};
    base.f1 = zeros(SpaceTag::P1_Gamma, m);
    base.f2 = zeros(SpaceTag::P0_Gamma, m);
    MeasureData mu;
    mu.atoms.push_back({Vec3(0.0, 0.0, 0.0), 1.0});
    const std::vector<double> eps_list{0.3, 0.2, 0.1};
    const ApproxSequenceResult seq = approx_solve_sequence(base, mu, eps_list, grid40(), ops);
    REQUIRE(seq.reports.size() == 3);
    // Inside the eps = 0.3 bump but outside the eps = 0.1 one: outside the
    // support a radial bump reproduces the atom's field exactly, so only a
    // probe in this annulus sees the eps dependence.
    const Vec3 probe(0.15, 0.0, 0.0);
    const Complex u_ref =
        evaluate(seq.reference_problem, seq.reference.cauchy, {probe})[0];
    std::vector<double> gaps;
    for (std::size_t k = 0; k < seq.reports.size(); ++k) {
        const Complex u =
            evaluate(seq.problems[k], seq.reports[k].cauchy, {probe})[0];
        gaps.push_back(std::abs(u - u_ref) / std::abs(u_ref));
    }
    CHECK(gaps[2] < gaps[0]);
    CHECK(gaps[2] < 1e-2);
    // Stability: the solution scale stays bounded by the data scale.
    for (const auto& rep : seq.reports) CHECK(rep.stability_ratio < 10.0);

    // w1q diagnostic stays bounded along the sequence and rejects bad q.
    std::vector<const MixedProblem*> probs;
    std::vector<const CauchyData*> cds;
    for (std::size_t k = 0; k < seq.reports.size(); ++k) {
        probs.push_back(&seq.problems[k]);
        cds.push_back(&seq.reports[k].cauchy);
    }
    const W1qDiagnostic diag = w1q_diagnostic(probs, cds, 1.2, grid40());
    REQUIRE(diag.values.size() == 3);
    CHECK(diag.points_used > 0);
    for (double v : diag.values) {
        CHECK(std::isfinite(v));
        CHECK(v > 0.0);
    }
    // All values within a common constant of each other (uniform boundedness).
    const double vmax = *std::max_element(diag.values.begin(), diag.values.end());
    const double vmin = *std::min_element(diag.values.begin(), diag.values.end());
    CHECK(vmax / vmin < 2.0);
    CHECK_THROWS_AS(w1q_diagnostic(probs, cds, 1.5, grid40()), ValidationError);
    CHECK_THROWS_AS(w1q_diagnostic(probs, cds, -1.0, grid40()), ValidationError);

    // lambda != 0 is rejected.
    MixedProblem helm = base;
    helm.lambda = WaveNumber{Complex(1.0, 1.0)};
    CHECK_THROWS_AS(approx_solve_sequence(helm, mu, eps_list, grid40(), ops),
                    ValidationError);
}
