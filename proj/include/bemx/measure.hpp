// Finite Radon measures supported inside the domain: total variation,
// mollified approximating sequences, and the convergence/boundedness
// diagnostics of the measure-data pipeline.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "bemx/common.hpp"
#include "bemx/geometry.hpp"
#include "bemx/solver.hpp"

namespace bemx {

/// Finite Radon measure: point atoms plus an optional sampled smooth density.
struct MeasureData {
    struct Atom {
        Vec3 location;
        double weight;
    };
    std::vector<Atom> atoms;
    // Smooth part as (location, quadrature weight, density value) samples.
    std::vector<VolumeSourceSpec::DensitySample> smooth_part;

    bool empty() const { return atoms.empty() && smooth_part.empty(); }
};

/// Uniform Cartesian sample points inside the enclosed volume, weight = cell
/// volume; realizes volume integrals at desk scale.
struct VolumeGrid {
    std::vector<Vec3> points;
    double cell_volume = 0.0;

    double total_weight() const { return cell_volume * static_cast<double>(points.size()); }
};

inline VolumeGrid make_volume_grid(const SurfaceMesh& mesh, int cells_per_axis) {
    if (cells_per_axis < 2) throw ValidationError("volume grid: need >= 2 cells per axis");
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (const auto& v : mesh.vertices()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const Vec3 ext = hi - lo;
    const double h = ext.maxCoeff() / cells_per_axis;
    VolumeGrid grid;
    grid.cell_volume = h * h * h;
    std::vector<char> inside;
    std::vector<Vec3> candidates;
    for (double x = lo.x() + 0.5 * h; x < hi.x(); x += h)
        for (double y = lo.y() + 0.5 * h; y < hi.y(); y += h)
            for (double z = lo.z() + 0.5 * h; z < hi.z(); z += h)
                candidates.emplace_back(x, y, z);
    inside.assign(candidates.size(), 0);
    parallel_for(candidates.size(),
                 [&](std::size_t i) { inside[i] = mesh.contains(candidates[i]) ? 1 : 0; });
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (inside[i]) grid.points.push_back(candidates[i]);
    if (grid.total_weight() > 1.02 * mesh.enclosed_volume())
        throw ValidationError("volume grid: inside-test captured too much volume");
    return grid;
}

inline double total_variation(const MeasureData& mu) {
    double tv = 0.0;
    for (const auto& a : mu.atoms) tv += std::abs(a.weight);
    for (const auto& s : mu.smooth_part) tv += s.quad_weight * std::abs(s.value);
    return tv;
}

/// Replaces each atom by the quartic bump (1 - (r/eps)^2)^2 on r < eps,
/// normalized to unit mass on the grid; the smooth part passes through.
inline std::vector<VolumeSourceSpec::DensitySample> mollify(const MeasureData& mu,
                                                            double eps,
                                                            const SurfaceMesh& mesh,
                                                            const VolumeGrid& grid) {
    if (eps <= 0.0) throw ValidationError("mollify: eps must be positive");
    for (const auto& a : mu.atoms)
        if (mesh.surface_distance(a.location) < eps)
            throw ValidationError("mollify: bump of radius eps would leak outside the domain");
    std::vector<VolumeSourceSpec::DensitySample> out = mu.smooth_part;
    for (const auto& a : mu.atoms) {
        std::vector<std::size_t> support;
        double raw_mass = 0.0;
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
            const double r = (grid.points[i] - a.location).norm();
            if (r < eps) {
                support.push_back(i);
                const double s = 1.0 - (r / eps) * (r / eps);
                raw_mass += grid.cell_volume * s * s;
            }
        }
        if (support.empty() || raw_mass <= 0.0)
            throw ValidationError("mollify: grid too coarse to resolve the bump");
        for (std::size_t i : support) {
            const double r = (grid.points[i] - a.location).norm();
            const double s = 1.0 - (r / eps) * (r / eps);
            out.push_back({grid.points[i], grid.cell_volume, a.weight * s * s / raw_mass});
        }
    }
    return out;
}

inline double measure_integral(const MeasureData& mu,
                               const std::function<double(const Vec3&)>& g) {
    double acc = 0.0;
    for (const auto& a : mu.atoms) acc += a.weight * g(a.location);
    for (const auto& s : mu.smooth_part) acc += s.quad_weight * s.value.real() * g(s.location);
    return acc;
}

inline double density_integral(const std::vector<VolumeSourceSpec::DensitySample>& samples,
                               const std::function<double(const Vec3&)>& g) {
    double acc = 0.0;
    for (const auto& s : samples) acc += s.quad_weight * s.value.real() * g(s.location);
    return acc;
}

/// max_g | int g d(mu_eps) - int g d(mu) | over the supplied test functions.
inline double weakstar_residual(const MeasureData& mu,
                                const std::vector<VolumeSourceSpec::DensitySample>& mu_eps,
                                const std::vector<std::function<double(const Vec3&)>>& tests) {
    double worst = 0.0;
    for (const auto& g : tests)
        worst = std::max(worst, std::abs(density_integral(mu_eps, g) - measure_integral(mu, g)));
    return worst;
}

/// Elementwise clamp to [-a, a].
inline std::vector<double> truncate(const std::vector<double>& values, double a) {
    if (a <= 0.0) throw ValidationError("truncate: level must be positive");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = std::max(-a, std::min(a, values[i]));
    return out;
}

/// Empirical weak-L^r constant sup_b b^r * |{ |value| > b }| (volume-weighted).
/// The distribution function is piecewise constant with jumps at the sample
/// magnitudes, so the supremum is attained in the limit b -> |v_i|^- and equals
/// max_i |v_i|^r * weight{ |v| >= |v_i| }; this form is exactly homogeneous.
inline double marcinkiewicz_quasinorm(const std::vector<std::pair<double, double>>& samples,
                                      double r) {
    if (r <= 0.0) throw ValidationError("marcinkiewicz_quasinorm: r must be positive");
    if (samples.empty()) throw ValidationError("marcinkiewicz_quasinorm: empty samples");
    std::vector<std::pair<double, double>> mags;  // (|value|, weight)
    mags.reserve(samples.size());
    for (const auto& [value, weight] : samples) mags.emplace_back(std::abs(value), weight);
    std::sort(mags.begin(), mags.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double best = 0.0;
    double tail_weight = 0.0;  // weight of { |v| >= current level }
    for (std::size_t i = 0; i < mags.size(); ++i) {
        tail_weight += mags[i].second;
        if (mags[i].first == 0.0) break;
        // Merge ties so the tail weight covers all samples at this level.
        if (i + 1 < mags.size() && mags[i + 1].first == mags[i].first) continue;
        best = std::max(best, std::pow(mags[i].first, r) * tail_weight);
    }
    return best;
}

/// One mollified interior solve per eps (lambda = 0) plus the atomic-reference
/// solve; shares one assembled operator set.
struct ApproxSequenceResult {
    std::vector<double> epsilons;
    std::vector<SolveReport> reports;      // one per eps
    SolveReport reference;                 // atomic Newton potential directly
    std::vector<MixedProblem> problems;    // matching `reports`
    MixedProblem reference_problem;
};

inline ApproxSequenceResult approx_solve_sequence(const MixedProblem& base,
                                                  const MeasureData& mu,
                                                  const std::vector<double>& eps_list,
                                                  const VolumeGrid& grid,
                                                  const OperatorSet& ops) {
    if (!base.lambda.is_laplace())
        throw ValidationError("approx_solve_sequence: lambda = 0 required");
    if (base.side != ProblemSide::Interior)
        throw ValidationError("approx_solve_sequence: interior side required");
    ApproxSequenceResult result;
    result.epsilons = eps_list;
    result.reference_problem = base;
    for (const auto& a : mu.atoms)
        result.reference_problem.volume.atoms.push_back({a.location, Complex(a.weight, 0.0)});
    result.reference_problem.volume.density_samples.insert(
        result.reference_problem.volume.density_samples.end(), mu.smooth_part.begin(),
        mu.smooth_part.end());
    result.reference = solve_mixed(result.reference_problem, ops);
    for (double eps : eps_list) {
        MixedProblem p = base;
        p.volume.density_samples = mollify(mu, eps, *base.mesh, grid);
        result.problems.push_back(p);
        result.reports.push_back(solve_mixed(p, ops));
    }
    return result;
}

/// Discrete L^q norms ||u||_q + ||grad u||_q over the grid points at least one
/// panel diameter away from Gamma. Valid for q < 3/2 only.
struct W1qDiagnostic {
    std::vector<double> values;     // one per solve, same order as input reports
    std::size_t points_used = 0;
    std::size_t points_shaved = 0;  // excluded near-boundary shell
};

inline W1qDiagnostic w1q_diagnostic(const std::vector<const MixedProblem*>& problems,
                                    const std::vector<const CauchyData*>& cauchys,
                                    double q, const VolumeGrid& grid) {
    if (q >= 1.5)
        throw ValidationError("w1q_diagnostic: q must be below 3/2 (= N/(N-1) for N=3)");
    if (q <= 0.0) throw ValidationError("w1q_diagnostic: q must be positive");
    if (problems.empty() || problems.size() != cauchys.size())
        throw ValidationError("w1q_diagnostic: mismatched inputs");
    const auto& mesh = *problems.front()->mesh;
    // Evaluation points are staggered a quarter cell off the grid nodes:
    // mollified sources are sampled at the nodes themselves, and the kernel is
    // singular at coincident points. The norm stays a midpoint-type quadrature.
    const double h = std::cbrt(grid.cell_volume);
    const Vec3 stagger = 0.25 * h * Vec3(1.0, 1.0, 1.0);
    std::vector<Vec3> kept;
    for (const auto& x : grid.points) {
        const Vec3 y = x + stagger;
        if (mesh.surface_distance(y) >= mesh.max_diameter() && mesh.contains(y))
            kept.push_back(y);
    }
    W1qDiagnostic diag;
    diag.points_used = kept.size();
    diag.points_shaved = grid.points.size() - kept.size();
    for (std::size_t s = 0; s < problems.size(); ++s) {
        const auto u = evaluate(*problems[s], *cauchys[s], kept);
        const auto grad = evaluate_gradient(*problems[s], *cauchys[s], kept);
        double uq = 0.0, gq = 0.0;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            uq += grid.cell_volume * std::pow(std::abs(u[i]), q);
            gq += grid.cell_volume * std::pow(grad[i].norm(), q);
        }
        diag.values.push_back(std::pow(uq, 1.0 / q) + std::pow(gq, 1.0 / q));
    }
    return diag;
}

}  // namespace bemx
