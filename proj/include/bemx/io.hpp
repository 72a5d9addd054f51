// Output formats: flat binary matrix dumps with text descriptors, CSV tables,
// and JSON solve reports.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bemx/common.hpp"
#include "bemx/solver.hpp"
#include "bemx/spaces.hpp"

namespace bemx {

namespace detail {
inline void ensure_parent(const std::filesystem::path& p) {
    const auto dir = p.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
}
}  // namespace detail

inline std::string kind_name(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::S: return "S";
        case OperatorKind::K: return "K";
        case OperatorKind::Kstar: return "Kstar";
        case OperatorKind::D: return "D";
        case OperatorKind::MassP0: return "massP0";
        case OperatorKind::MassP1: return "massP1";
        case OperatorKind::MassMixed: return "massMixed";
    }
    return "?";
}

/// Writes the matrix as row-major complex128 to `<stem>.bin` plus a small text
/// descriptor `<stem>.desc` (rows, cols, kind, lambda).
inline void dump_matrix(const OperatorMatrix& m, const std::filesystem::path& stem) {
    detail::ensure_parent(stem.parent_path() / "x");
    std::ofstream bin(stem.string() + ".bin", std::ios::binary);
    if (!bin) throw Error("cannot open " + stem.string() + ".bin for writing");
    for (Eigen::Index r = 0; r < m.entries.rows(); ++r)
        for (Eigen::Index c = 0; c < m.entries.cols(); ++c) {
            const Complex v = m.entries(r, c);
            const double re = v.real(), im = v.imag();
            bin.write(reinterpret_cast<const char*>(&re), sizeof(double));
            bin.write(reinterpret_cast<const char*>(&im), sizeof(double));
        }
    std::ofstream desc(stem.string() + ".desc");
    desc << "rows " << m.entries.rows() << "\n"
         << "cols " << m.entries.cols() << "\n"
         << "kind " << kind_name(m.kind) << "\n"
         << "lambda " << m.lambda.real() << " " << m.lambda.imag() << "\n"
         << "layout row-major complex128\n";
}

/// Solution samples as `x,y,z,re,im` lines.
inline void write_solution_csv(const std::filesystem::path& path,
                               const std::vector<Vec3>& points,
                               const std::vector<Complex>& values) {
    detail::ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(17);
    out << "x,y,z,re,im\n";
    for (std::size_t i = 0; i < points.size(); ++i)
        out << points[i].x() << "," << points[i].y() << "," << points[i].z() << ","
            << values[i].real() << "," << values[i].imag() << "\n";
}

/// Generic small CSV table.
inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    detail::ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.precision(17);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? "," : "\n");
}

inline nlohmann::json report_to_json(const SolveReport& report) {
    auto vec_to_json = [](const VectorXcd& v) {
        nlohmann::json arr = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i)
            arr.push_back({v(i).real(), v(i).imag()});
        return arr;
    };
    return nlohmann::json{
        {"schur_residual", report.schur_residual},
        {"path_discrepancy", report.path_discrepancy},
        {"condition_estimate", report.condition_estimate},
        {"stability_ratio", report.stability_ratio},
        {"g1", vec_to_json(report.g1.coeffs)},
        {"g2", vec_to_json(report.g2.coeffs)},
        {"phi", vec_to_json(report.cauchy.phi.coeffs)},
        {"psi", vec_to_json(report.cauchy.psi.coeffs)},
    };
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    detail::ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << "\n";
}

}  // namespace bemx
