// Config-driven driver: solve, verify, measure-study, operator-dump.
//
// Exit codes: 0 pass, 1 numerical-threshold failure, 2 input/config error.
// Every run writes a manifest (config echo + versions + timings) next to its
// outputs.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bemx/geometry.hpp"
#include "bemx/io.hpp"
#include "bemx/measure.hpp"
#include "bemx/operators.hpp"
#include "bemx/solver.hpp"
#include "bemx/spaces.hpp"
#include "bemx/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bemx::Vec3 parse_vec3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw bemx::ParseError(std::string("config: ") + what + " must be [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

struct Run {
    json config;
    fs::path out_dir;
    bemx::SurfaceMesh mesh;
    bemx::BoundaryPartition partition;
    bemx::WaveNumber lambda;
    bemx::ProblemSide side = bemx::ProblemSide::Interior;
    bemx::AssemblyOptions opts;
    std::vector<bemx::Vec3> probes;
    std::vector<double> radii;
    json manifest_timings = json::object();
};

bemx::SurfaceMesh build_mesh(const json& cfg) {
    if (!cfg.contains("mesh")) throw bemx::ParseError("config: missing 'mesh'");
    const json& m = cfg["mesh"];
    if (m.contains("builtin_sphere_level"))
        return bemx::unit_sphere_mesh(m["builtin_sphere_level"].get<int>());
    if (m.contains("path")) {
        const std::string fmt = m.value("format", "off");
        if (fmt == "off") return bemx::load_mesh(m["path"], bemx::MeshFormat::OFF);
        if (fmt == "gmsh22") return bemx::load_mesh(m["path"], bemx::MeshFormat::GMSH22);
        throw bemx::ParseError("config: mesh.format must be 'off' or 'gmsh22'");
    }
    throw bemx::ParseError("config: mesh needs 'builtin_sphere_level' or 'path'");
}

bemx::BoundaryPartition build_partition(const json& cfg, const bemx::SurfaceMesh& mesh) {
    if (!cfg.contains("partition")) throw bemx::ParseError("config: missing 'partition'");
    const json& p = cfg["partition"];
    if (p.contains("labels_path")) return bemx::load_partition(mesh, p["labels_path"]);
    if (p.value("rule", "halfspace") != "halfspace")
        throw bemx::ParseError("config: partition.rule must be 'halfspace'");
    bemx::HalfSpaceRule rule;
    if (p.contains("normal")) rule.normal = parse_vec3(p["normal"], "partition.normal");
    rule.offset = p.value("offset", 0.0);
    return bemx::partition_boundary(mesh, rule);
}

Run load_run(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw bemx::ParseError("cannot open config file " + config_path);
    json cfg_in;
    try {
        cfg_in = json::parse(in);
    } catch (const json::exception& e) {
        throw bemx::ParseError(std::string("config: invalid JSON: ") + e.what());
    }
    bemx::SurfaceMesh mesh = build_mesh(cfg_in);
    bemx::BoundaryPartition partition = build_partition(cfg_in, mesh);
    Run run{std::move(cfg_in), {}, std::move(mesh), std::move(partition)};
    const json& cfg = run.config;
    run.out_dir = cfg.value("output_dir", std::string("out"));
    if (cfg.contains("lambda")) {
        const json& l = cfg["lambda"];
        if (!l.is_array() || l.size() != 2)
            throw bemx::ParseError("config: lambda must be [re, im]");
        run.lambda = bemx::WaveNumber(bemx::Complex(l[0].get<double>(), l[1].get<double>()));
    }
    const std::string side = cfg.value("side", "interior");
    if (side == "interior") run.side = bemx::ProblemSide::Interior;
    else if (side == "exterior") run.side = bemx::ProblemSide::Exterior;
    else throw bemx::ParseError("config: side must be 'interior' or 'exterior'");
    if (cfg.contains("quadrature")) {
        const json& q = cfg["quadrature"];
        run.opts.regular_order = q.value("regular_order", run.opts.regular_order);
        run.opts.near_order = q.value("near_order", run.opts.near_order);
        run.opts.near_factor = q.value("near_factor", run.opts.near_factor);
        run.opts.singular_q = q.value("singular_q", run.opts.singular_q);
    }
    run.opts.dof_cap = cfg.value("dof_cap", run.opts.dof_cap);
    for (const auto& p : cfg.value("probes", json::array()))
        run.probes.push_back(parse_vec3(p, "probes entry"));
    for (const auto& r : cfg.value("radii", json::array()))
        run.radii.push_back(r.get<double>());
    return run;
}

bemx::VolumeSourceSpec parse_volume(const json& cfg) {
    bemx::VolumeSourceSpec vol;
    if (!cfg.contains("volume")) return vol;
    for (const auto& a : cfg["volume"].value("atoms", json::array()))
        vol.atoms.push_back({bemx::Vec3(a.at("x").get<double>(), a.at("y").get<double>(),
                                        a.at("z").get<double>()),
                             bemx::Complex(a.at("weight").get<double>(), 0.0)});
    return vol;
}

bemx::MeasureData parse_measure(const json& m) {
    bemx::MeasureData mu;
    for (const auto& a : m.value("atoms", json::array()))
        mu.atoms.push_back({bemx::Vec3(a.at("x").get<double>(), a.at("y").get<double>(),
                                       a.at("z").get<double>()),
                            a.at("weight").get<double>()});
    return mu;
}

// "data" spec: exactly one of manufactured / coefficients / zero. Returns the
// problem plus, for manufactured data, the oracle values at the probes.
struct DataResult {
    bemx::MixedProblem problem;
    std::vector<bemx::Complex> exact_probe_values;  // empty unless manufactured
};

DataResult build_problem(const Run& run) {
    if (!run.config.contains("data")) throw bemx::ParseError("config: missing 'data'");
    const json& d = run.config["data"];
    const std::string type = d.value("type", "");
    DataResult res;
    if (type == "manufactured") {
        if (!d.contains("source")) throw bemx::ParseError("config: data.source required");
        auto mc = bemx::manufactured_case(run.lambda, run.side,
                                          parse_vec3(d["source"], "data.source"), run.mesh,
                                          run.partition, run.probes);
        res.problem = mc.problem;
        res.exact_probe_values = mc.exact_values;
    } else if (type == "zero") {
        res.problem.mesh = &run.mesh;
        res.problem.partition = &run.partition;
        res.problem.lambda = run.lambda;
        res.problem.side = run.side;
        res.problem.f1 = bemx::zeros(bemx::SpaceTag::P1_Gamma, run.mesh);
        res.problem.f2 = bemx::zeros(bemx::SpaceTag::P0_Gamma, run.mesh);
    } else if (type == "coefficients") {
        res.problem.mesh = &run.mesh;
        res.problem.partition = &run.partition;
        res.problem.lambda = run.lambda;
        res.problem.side = run.side;
        res.problem.f1 = bemx::zeros(bemx::SpaceTag::P1_Gamma, run.mesh);
        res.problem.f2 = bemx::zeros(bemx::SpaceTag::P0_Gamma, run.mesh);
        const json f1 = d.value("f1", json::array());
        const json f2 = d.value("f2", json::array());
        if (f1.size() != run.mesh.num_vertices() || f2.size() != run.mesh.num_triangles())
            throw bemx::ParseError("config: data.f1/f2 lengths must match mesh");
        for (std::size_t i = 0; i < f1.size(); ++i)
            res.problem.f1.coeffs(static_cast<Eigen::Index>(i)) = f1[i].get<double>();
        for (std::size_t i = 0; i < f2.size(); ++i)
            res.problem.f2.coeffs(static_cast<Eigen::Index>(i)) = f2[i].get<double>();
        // Honor the zero-extension invariants: f1 lives on Gamma1 vertices,
        // f2 on Gamma2 panels.
        std::vector<bool> on_gamma1(run.mesh.num_vertices(), false);
        for (int t : run.partition.gamma1_triangles)
            for (int k = 0; k < 3; ++k)
                on_gamma1[run.mesh.triangle(static_cast<std::size_t>(t)).v[k]] = true;
        for (std::size_t v = 0; v < run.mesh.num_vertices(); ++v)
            if (!on_gamma1[v]) res.problem.f1.coeffs(static_cast<Eigen::Index>(v)) = 0.0;
        for (int t : run.partition.gamma1_triangles)
            res.problem.f2.coeffs(t) = 0.0;
    } else {
        throw bemx::ParseError(
            "config: data.type must be one of manufactured|coefficients|zero");
    }
    res.problem.volume = parse_volume(run.config);
    return res;
}

void write_manifest(Run& run, const std::string& command, int exit_code) {
    json manifest{
        {"command", command},
        {"config", run.config},
        {"exit_code", exit_code},
        {"timings_ms", run.manifest_timings},
        {"versions",
         {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"cpp", static_cast<long>(__cplusplus)}}},
        {"threads", static_cast<int>(bemx::thread_count())},
    };
    bemx::write_json(run.out_dir / "manifest.json", manifest);
}

class Stopwatch {
  public:
    explicit Stopwatch(Run& run, std::string label)
        : run_(run), label_(std::move(label)), start_(std::chrono::steady_clock::now()) {}
    ~Stopwatch() {
        const auto ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
        run_.manifest_timings[label_] = ms;
    }

  private:
    Run& run_;
    std::string label_;
    std::chrono::steady_clock::time_point start_;
};

int cmd_solve(Run& run) {
    DataResult data = build_problem(run);
    bemx::OperatorSet ops;
    {
        Stopwatch sw(run, "assemble");
        ops = bemx::assemble_operator_set(run.mesh, run.lambda, run.opts);
    }
    bemx::SolveReport report;
    {
        Stopwatch sw(run, "solve");
        report = bemx::solve_mixed(data.problem, ops);
    }
    json rj = bemx::report_to_json(report);
    if (!data.exact_probe_values.empty()) {
        const auto u = bemx::evaluate(data.problem, report.cauchy, run.probes);
        double max_rel = 0.0, scale = 0.0;
        for (const auto& v : data.exact_probe_values) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < u.size(); ++i)
            max_rel = std::max(max_rel, std::abs(u[i] - data.exact_probe_values[i]) / scale);
        rj["max_probe_rel_error"] = max_rel;
    }
    bemx::write_json(run.out_dir / "report.json", rj);
    if (!run.probes.empty()) {
        const auto u = bemx::evaluate(data.problem, report.cauchy, run.probes);
        bemx::write_solution_csv(run.out_dir / "solution.csv", run.probes, u);
    } else {
        bemx::write_solution_csv(run.out_dir / "solution.csv", {}, {});
    }
    return report.schur_residual < 1e-8 ? 0 : 1;
}

int cmd_verify(Run& run) {
    bemx::OperatorSet ops;
    {
        Stopwatch sw(run, "assemble");
        ops = bemx::assemble_operator_set(run.mesh, run.lambda, run.opts);
    }
    auto table = bemx::jump_relation_suite(run.mesh, run.lambda, ops);
    table.push_back({"single layer trace agreement",
                     bemx::single_layer_trace_agreement(run.mesh, run.lambda)});
    bool pass = true;
    json residuals = json::array();
    for (const auto& row : table) {
        double threshold = 5e-2;
        if (row.name == "D 1") threshold = 1e-8;
        if (row.name == "S - S^T" || row.name == "D - D^T" || row.name == "K* - K^T")
            threshold = 1e-6;
        residuals.push_back({{"name", row.name}, {"value", row.value},
                             {"threshold", threshold}});
        if (!(row.value < threshold)) pass = false;
        std::cout << (row.value < threshold ? "pass" : "FAIL") << "  " << row.name << " = "
                  << row.value << "\n";
    }
    double probe_error = -1.0;
    if (run.config.contains("data") &&
        run.config["data"].value("type", "") == "manufactured" && !run.probes.empty()) {
        DataResult data = build_problem(run);
        const auto report = bemx::solve_mixed(data.problem, ops);
        const auto u = bemx::evaluate(data.problem, report.cauchy, run.probes);
        double scale = 0.0;
        for (const auto& v : data.exact_probe_values) scale = std::max(scale, std::abs(v));
        probe_error = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            probe_error =
                std::max(probe_error, std::abs(u[i] - data.exact_probe_values[i]) / scale);
        if (!(probe_error < 1e-2)) pass = false;
        std::cout << (probe_error < 1e-2 ? "pass" : "FAIL")
                  << "  manufactured probe error = " << probe_error << "\n";
        if (run.side == bemx::ProblemSide::Exterior && !run.radii.empty()) {
            const auto rows = bemx::radiation_check(data.problem, report.cauchy, run.radii);
            std::vector<std::vector<double>> csv;
            for (const auto& r : rows)
                csv.push_back({r.radius, r.max_abs_u_times_r, r.radiation_residual,
                               r.laplace_decay});
            bemx::write_csv(run.out_dir / "radiation.csv",
                            {"radius", "max_abs_u_times_r", "radiation_residual",
                             "laplace_decay"},
                            csv);
            if (rows.size() >= 2 &&
                !(rows.back().radiation_residual < 0.5 * rows.front().radiation_residual))
                pass = false;
        }
    }
    json out{{"residuals", residuals}, {"pass", pass}};
    if (probe_error >= 0.0) out["manufactured_probe_error"] = probe_error;
    bemx::write_json(run.out_dir / "verify.json", out);
    std::vector<std::vector<double>> rows;
    json names = json::array();
    for (const auto& row : table) rows.push_back({row.value});
    bemx::write_csv(run.out_dir / "residuals.csv", {"value"}, rows);
    return pass ? 0 : 1;
}

int cmd_measure_study(Run& run) {
    if (!run.lambda.is_laplace())
        throw bemx::ParseError("measure-study: lambda must be 0");
    if (!run.config.contains("measure"))
        throw bemx::ParseError("config: missing 'measure'");
    const json& m = run.config["measure"];
    const bemx::MeasureData mu = parse_measure(m);
    std::vector<double> eps_list;
    for (const auto& e : m.value("eps_list", json::array()))
        eps_list.push_back(e.get<double>());
    const double q = m.value("q", 1.2);
    const int grid_cells = m.value("grid_cells", 16);

    DataResult data = build_problem(run);
    bemx::OperatorSet ops;
    {
        Stopwatch sw(run, "assemble");
        ops = bemx::assemble_operator_set(run.mesh, run.lambda, run.opts);
    }
    if (mu.atoms.empty() && mu.smooth_part.empty()) {
        // Empty measure: plain solve.
        const auto report = bemx::solve_mixed(data.problem, ops);
        bemx::write_json(run.out_dir / "report.json", bemx::report_to_json(report));
        if (!run.probes.empty())
            bemx::write_solution_csv(run.out_dir / "solution.csv", run.probes,
                                     bemx::evaluate(data.problem, report.cauchy, run.probes));
        return report.schur_residual < 1e-8 ? 0 : 1;
    }

    const bemx::VolumeGrid grid = bemx::make_volume_grid(run.mesh, grid_cells);
    bemx::ApproxSequenceResult seq;
    {
        Stopwatch sw(run, "sequence");
        seq = bemx::approx_solve_sequence(data.problem, mu, eps_list, grid, ops);
    }

    // Per-eps observations plus weak-* residuals against 1, x, y, z.
    std::vector<std::function<double(const bemx::Vec3&)>> tests = {
        [](const bemx::Vec3&) { return 1.0; },
        [](const bemx::Vec3& x) { return x.x(); },
        [](const bemx::Vec3& x) { return x.y(); },
        [](const bemx::Vec3& x) { return x.z(); },
    };
    const auto u_ref =
        bemx::evaluate(seq.reference_problem, seq.reference.cauchy, run.probes);
    std::vector<std::vector<double>> obs_rows;
    double final_gap = -1.0;
    double ref_scale = 0.0;
    for (const auto& v : u_ref) ref_scale = std::max(ref_scale, std::abs(v));
    for (std::size_t s = 0; s < seq.reports.size(); ++s) {
        const auto u =
            bemx::evaluate(seq.problems[s], seq.reports[s].cauchy, run.probes);
        double gap = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i)
            gap = std::max(gap, std::abs(u[i] - u_ref[i]));
        if (ref_scale > 0.0) gap /= ref_scale;
        const double wres =
            bemx::weakstar_residual(mu, seq.problems[s].volume.density_samples, tests);
        obs_rows.push_back({seq.epsilons[s], gap, wres});
        final_gap = gap;
    }
    bemx::write_csv(run.out_dir / "measure_study.csv", {"eps", "probe_gap", "weakstar"},
                    obs_rows);

    // W^{1,q} boundedness and Marcinkiewicz diagnostics on the shaved grid.
    std::vector<const bemx::MixedProblem*> problems;
    std::vector<const bemx::CauchyData*> cauchys;
    for (std::size_t s = 0; s < seq.reports.size(); ++s) {
        problems.push_back(&seq.problems[s]);
        cauchys.push_back(&seq.reports[s].cauchy);
    }
    const auto w1q = bemx::w1q_diagnostic(problems, cauchys, q, grid);
    std::vector<std::vector<double>> w1q_rows;
    for (std::size_t s = 0; s < w1q.values.size(); ++s)
        w1q_rows.push_back({seq.epsilons[s], w1q.values[s]});
    bemx::write_csv(run.out_dir / "w1q.csv", {"eps", "w1q"}, w1q_rows);

    std::vector<bemx::Vec3> kept;
    for (const auto& x : grid.points)
        if (run.mesh.surface_distance(x) >= run.mesh.max_diameter()) kept.push_back(x);
    const auto grad_ref =
        bemx::evaluate_gradient(seq.reference_problem, seq.reference.cauchy, kept);
    std::vector<std::pair<double, double>> samples;
    for (const auto& g : grad_ref) samples.emplace_back(g.norm(), grid.cell_volume);
    const double quasinorm = bemx::marcinkiewicz_quasinorm(samples, 1.5);

    json out{{"final_gap", final_gap},
             {"w1q", w1q.values},
             {"w1q_points_used", w1q.points_used},
             {"w1q_points_shaved", w1q.points_shaved},
             {"marcinkiewicz_grad_r1.5", quasinorm},
             {"total_variation", bemx::total_variation(mu)}};
    bemx::write_json(run.out_dir / "measure_report.json", out);
    return (final_gap >= 0.0 && final_gap < 1e-2) ? 0 : 1;
}

int cmd_operator_dump(Run& run) {
    bemx::OperatorSet ops;
    {
        Stopwatch sw(run, "assemble");
        ops = bemx::assemble_operator_set(run.mesh, run.lambda, run.opts);
    }
    bemx::dump_matrix(ops.S, run.out_dir / "S");
    bemx::dump_matrix(ops.K, run.out_dir / "K");
    bemx::dump_matrix(ops.Kstar, run.out_dir / "Kstar");
    bemx::dump_matrix(ops.D, run.out_dir / "D");
    bemx::dump_matrix(ops.M01, run.out_dir / "massMixed");
    bemx::dump_matrix(bemx::mass_p0(run.mesh), run.out_dir / "massP0");
    bemx::dump_matrix(bemx::mass_p1(run.mesh), run.out_dir / "massP1");
    return 0;
}

void write_error_json(const fs::path& out_dir, const std::string& kind,
                      const std::string& message) {
    try {
        bemx::write_json(out_dir / "error.json", json{{"error", kind}, {"message", message}});
    } catch (...) {
        // Output dir unusable; the stderr message still carries the error.
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bemx: Galerkin boundary element solver for mixed problems"};
    app.require_subcommand(1);
    std::string config_path;
    std::string output_override;
    for (const char* name : {"solve", "verify", "measure-study", "operator-dump"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("-c,--config", config_path, "JSON config file")->required();
        sub->add_option("-o,--output", output_override, "override output directory");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    fs::path out_dir = "out";
    try {
        Run run = load_run(config_path);
        if (!output_override.empty()) run.out_dir = output_override;
        out_dir = run.out_dir;
        int code = 0;
        if (command == "solve") code = cmd_solve(run);
        else if (command == "verify") code = cmd_verify(run);
        else if (command == "measure-study") code = cmd_measure_study(run);
        else code = cmd_operator_dump(run);
        write_manifest(run, command, code);
        return code;
    } catch (const bemx::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        write_error_json(out_dir, "config", e.what());
        return 2;
    } catch (const bemx::ValidationError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        write_error_json(out_dir, "validation", e.what());
        return 2;
    } catch (const bemx::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        write_error_json(out_dir, "numerical", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        write_error_json(out_dir, "internal", e.what());
        return 2;
    }
}
