// Closed oriented triangle surfaces: ingestion, validation, generation,
// refinement and Dirichlet/Neumann partitioning.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bemx/common.hpp"

namespace bemx {

struct Triangle {
    std::array<int, 3> v;  // vertex indices, counterclockwise seen from outside
};

/// Watertight, outward-oriented triangle surface. Immutable after construction.
/// Squared distance from p to triangle (a, b, c); closest-point case analysis
/// over the vertex/edge/face Voronoi regions.
inline double point_triangle_sq_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                                         const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return ap.squaredNorm();
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return bp.squaredNorm();
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return (ap - v * ab).squaredNorm();
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return cp.squaredNorm();
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return (ap - w * ac).squaredNorm();
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - w * (c - b)).squaredNorm();
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return (ap - v * ab - w * ac).squaredNorm();
}

class SurfaceMesh {
public:
    SurfaceMesh(std::vector<Vec3> vertices, std::vector<Triangle> triangles)
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
        compute_derived();
        validate();
    }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_triangles() const { return triangles_.size(); }

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }

    const Vec3& vertex(int i) const { return vertices_[static_cast<std::size_t>(i)]; }
    const Triangle& triangle(std::size_t t) const { return triangles_[t]; }
    const Vec3& normal(std::size_t t) const { return normals_[t]; }
    double area(std::size_t t) const { return areas_[t]; }
    const Vec3& centroid(std::size_t t) const { return centroids_[t]; }
    double diameter(std::size_t t) const { return diameters_[t]; }
    double max_diameter() const { return max_diameter_; }
    double total_area() const { return total_area_; }
    double enclosed_volume() const { return volume_; }
    double bbox_diagonal() const { return bbox_diag_; }

    std::array<Vec3, 3> corners(std::size_t t) const {
        const auto& tr = triangles_[t];
        return {vertices_[static_cast<std::size_t>(tr.v[0])],
                vertices_[static_cast<std::size_t>(tr.v[1])],
                vertices_[static_cast<std::size_t>(tr.v[2])]};
    }

    /// Triangles incident to each vertex.
    const std::vector<std::vector<int>>& vertex_stars() const { return stars_; }

    /// Conservative lower bound on the distance from x to the surface.
    /// Exact Euclidean distance from x to the surface.
    double surface_distance(const Vec3& x) const {
        double d2 = std::numeric_limits<double>::max();
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            // Cheap reject: closest possible point on this panel.
            const double lb = (x - centroids_[t]).norm() - diameters_[t];
            if (lb * lb > d2 && lb > 0.0) continue;
            const auto c = corners(t);
            d2 = std::min(d2, point_triangle_sq_distance(x, c[0], c[1], c[2]));
        }
        return std::sqrt(d2);
    }

    /// Solid-angle winding test; true when x lies strictly inside the enclosed volume.
    bool contains(const Vec3& x) const {
        double omega = 0.0;
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const auto c = corners(t);
            const Vec3 a = c[0] - x, b = c[1] - x, d = c[2] - x;
            const double la = a.norm(), lb = b.norm(), ld = d.norm();
            const double num = a.dot(b.cross(d));
            const double den =
                la * lb * ld + a.dot(b) * ld + b.dot(d) * la + d.dot(a) * lb;
            omega += 2.0 * std::atan2(num, den);
        }
        return omega > 2.0 * std::numbers::pi;  // ~4pi inside, ~0 outside
    }

private:
    void compute_derived() {
        const std::size_t nt = triangles_.size();
        normals_.resize(nt);
        areas_.resize(nt);
        centroids_.resize(nt);
        diameters_.resize(nt);
        stars_.assign(vertices_.size(), {});
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
        Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (const auto& v : vertices_) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        bbox_diag_ = (hi - lo).norm();
        total_area_ = 0.0;
        volume_ = 0.0;
        max_diameter_ = 0.0;
        for (std::size_t t = 0; t < nt; ++t) {
            const auto& tr = triangles_[t];
            for (int k = 0; k < 3; ++k) {
                if (tr.v[k] < 0 || tr.v[k] >= static_cast<int>(vertices_.size()))
                    throw ValidationError("triangle " + std::to_string(t) +
                                          ": vertex index out of range");
                stars_[static_cast<std::size_t>(tr.v[k])].push_back(static_cast<int>(t));
            }
            const auto c = corners(t);
            const Vec3 cr = (c[1] - c[0]).cross(c[2] - c[0]);
            const double a2 = cr.norm();
            areas_[t] = 0.5 * a2;
            normals_[t] = a2 > 0.0 ? Vec3(cr / a2) : Vec3::Zero();
            centroids_[t] = (c[0] + c[1] + c[2]) / 3.0;
            diameters_[t] = std::max({(c[1] - c[0]).norm(), (c[2] - c[1]).norm(),
                                      (c[0] - c[2]).norm()});
            max_diameter_ = std::max(max_diameter_, diameters_[t]);
            total_area_ += areas_[t];
            volume_ += centroids_[t].dot(normals_[t]) * areas_[t] / 3.0;
        }
    }

    void validate() const {
        if (triangles_.empty()) throw ValidationError("mesh has no triangles");
        const double area_floor = 1e-12 * bbox_diag_ * bbox_diag_;
        for (std::size_t t = 0; t < triangles_.size(); ++t)
            if (areas_[t] <= area_floor)
                throw ValidationError("degenerate triangle " + std::to_string(t) +
                                      ": area below 1e-12 * bbox_diag^2");
        // Each undirected edge must appear exactly twice, once per direction.
        std::map<std::pair<int, int>, int> directed;
        for (std::size_t t = 0; t < triangles_.size(); ++t) {
            const auto& tr = triangles_[t];
            for (int k = 0; k < 3; ++k) {
                const int a = tr.v[k], b = tr.v[(k + 1) % 3];
                if (a == b)
                    throw ValidationError("degenerate triangle " + std::to_string(t) +
                                          ": repeated vertex");
                if (++directed[{a, b}] > 1)
                    throw ValidationError(
                        "inconsistent orientation: directed edge (" + std::to_string(a) +
                        "," + std::to_string(b) + ") appears twice (triangle " +
                        std::to_string(t) + ")");
            }
        }
        for (const auto& [edge, count] : directed) {
            const auto rev = directed.find({edge.second, edge.first});
            if (rev == directed.end())
                throw ValidationError("open surface: edge shared by 1 triangle (" +
                                      std::to_string(edge.first) + "," +
                                      std::to_string(edge.second) + ")");
        }
        if (volume_ <= 0.0)
            throw ValidationError("enclosed volume not positive: normals are not outward");
    }

    std::vector<Vec3> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Vec3> normals_;
    std::vector<double> areas_;
    std::vector<Vec3> centroids_;
    std::vector<double> diameters_;
    std::vector<std::vector<int>> stars_;
    double total_area_ = 0.0;
    double volume_ = 0.0;
    double bbox_diag_ = 0.0;
    double max_diameter_ = 0.0;
};

enum class MeshFormat { OFF, GMSH22 };

namespace detail {

inline std::string next_data_line(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        if (line.find_first_not_of(" \t\r\n") != std::string::npos) return line;
    }
    return {};
}

inline SurfaceMesh load_off(std::istream& in) {
    std::string header = next_data_line(in);
    // Tolerate counts on the same line as the OFF token.
    std::istringstream hs(header);
    std::string token;
    hs >> token;
    if (token != "OFF") throw ParseError("OFF: missing OFF header");
    std::size_t nv = 0, nf = 0, ne = 0;
    if (!(hs >> nv >> nf >> ne)) {
        std::istringstream cs(next_data_line(in));
        if (!(cs >> nv >> nf >> ne)) throw ParseError("OFF: malformed counts line");
    }
    std::vector<Vec3> verts(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        std::istringstream ls(next_data_line(in));
        if (!(ls >> verts[i].x() >> verts[i].y() >> verts[i].z()))
            throw ParseError("OFF: malformed vertex line " + std::to_string(i));
    }
    std::vector<Triangle> tris(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        std::istringstream ls(next_data_line(in));
        int n = 0;
        if (!(ls >> n) || n != 3)
            throw ParseError("OFF: face " + std::to_string(i) + " is not a triangle");
        if (!(ls >> tris[i].v[0] >> tris[i].v[1] >> tris[i].v[2]))
            throw ParseError("OFF: malformed face line " + std::to_string(i));
    }
    return SurfaceMesh(std::move(verts), std::move(tris));
}

inline SurfaceMesh load_gmsh22(std::istream& in) {
    std::string line;
    std::map<long, Vec3> nodes;
    std::vector<std::array<long, 3>> raw_tris;
    while (std::getline(in, line)) {
        if (line.rfind("$Nodes", 0) == 0) {
            std::size_t n = 0;
            std::istringstream(next_data_line(in)) >> n;
            for (std::size_t i = 0; i < n; ++i) {
                std::istringstream ls(next_data_line(in));
                long id;
                Vec3 p;
                if (!(ls >> id >> p.x() >> p.y() >> p.z()))
                    throw ParseError("GMSH: malformed node line");
                nodes[id] = p;
            }
        } else if (line.rfind("$Elements", 0) == 0) {
            std::size_t n = 0;
            std::istringstream(next_data_line(in)) >> n;
            for (std::size_t i = 0; i < n; ++i) {
                std::istringstream ls(next_data_line(in));
                long id, type, ntags;
                if (!(ls >> id >> type >> ntags))
                    throw ParseError("GMSH: malformed element line");
                long tag;
                for (long k = 0; k < ntags; ++k) ls >> tag;
                if (type == 2) {  // 3-node triangle
                    std::array<long, 3> t{};
                    if (!(ls >> t[0] >> t[1] >> t[2]))
                        throw ParseError("GMSH: malformed triangle element");
                    raw_tris.push_back(t);
                }
            }
        }
    }
    if (nodes.empty() || raw_tris.empty())
        throw ParseError("GMSH: no nodes or no triangle elements found");
    // Compact node ids to 0-based indices, keeping only referenced nodes.
    std::map<long, int> remap;
    std::vector<Vec3> verts;
    std::vector<Triangle> tris;
    tris.reserve(raw_tris.size());
    for (const auto& rt : raw_tris) {
        Triangle t{};
        for (int k = 0; k < 3; ++k) {
            const auto it = nodes.find(rt[static_cast<std::size_t>(k)]);
            if (it == nodes.end())
                throw ParseError("GMSH: element references unknown node " +
                                 std::to_string(rt[static_cast<std::size_t>(k)]));
            auto [mit, inserted] = remap.try_emplace(it->first, static_cast<int>(verts.size()));
            if (inserted) verts.push_back(it->second);
            t.v[k] = mit->second;
        }
        tris.push_back(t);
    }
    return SurfaceMesh(std::move(verts), std::move(tris));
}

}  // namespace detail

inline SurfaceMesh load_mesh(const std::string& path, MeshFormat format) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mesh file: " + path);
    return format == MeshFormat::OFF ? detail::load_off(in) : detail::load_gmsh22(in);
}

namespace detail {

/// One 4-to-1 subdivision pass; optionally projects every vertex to the unit sphere.
inline SurfaceMesh subdivide(const SurfaceMesh& mesh, bool project_to_unit_sphere) {
    std::vector<Vec3> verts = mesh.vertices();
    std::vector<Triangle> tris;
    tris.reserve(4 * mesh.num_triangles());
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        auto [it, inserted] = midpoint.try_emplace({key.first, key.second},
                                                   static_cast<int>(verts.size()));
        if (inserted)
            verts.push_back(0.5 * (verts[static_cast<std::size_t>(a)] +
                                   verts[static_cast<std::size_t>(b)]));
        return it->second;
    };
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tr = mesh.triangle(t);
        const int a = tr.v[0], b = tr.v[1], c = tr.v[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        tris.push_back({{a, ab, ca}});
        tris.push_back({{ab, b, bc}});
        tris.push_back({{ca, bc, c}});
        tris.push_back({{ab, bc, ca}});
    }
    if (project_to_unit_sphere)
        for (auto& v : verts) v.normalize();
    return SurfaceMesh(std::move(verts), std::move(tris));
}

}  // namespace detail

inline SurfaceMesh refine(const SurfaceMesh& mesh, bool project_to_unit_sphere = false) {
    return detail::subdivide(mesh, project_to_unit_sphere);
}

/// Icosahedron subdivided `level` times, vertices projected to the unit sphere.
inline SurfaceMesh unit_sphere_mesh(int level) {
    if (level < 0) throw ValidationError("unit_sphere_mesh: level must be >= 0");
    if (level > 5)
        throw ValidationError("unit_sphere_mesh: level > 5 exceeds the dense-matrix budget");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v.normalize();
    std::vector<Triangle> tris = {
        {{0, 11, 5}}, {{0, 5, 1}},  {{0, 1, 7}},   {{0, 7, 10}}, {{0, 10, 11}},
        {{1, 5, 9}},  {{5, 11, 4}}, {{11, 10, 2}}, {{10, 7, 6}}, {{7, 1, 8}},
        {{3, 9, 4}},  {{3, 4, 2}},  {{3, 2, 6}},   {{3, 6, 8}},  {{3, 8, 9}},
        {{4, 9, 5}},  {{2, 4, 11}}, {{6, 2, 10}},  {{8, 6, 7}},  {{9, 8, 1}}};
    SurfaceMesh mesh(std::move(verts), std::move(tris));
    for (int l = 0; l < level; ++l) mesh = detail::subdivide(mesh, true);
    return mesh;
}

/// Per-triangle labeling of Gamma into the Dirichlet part (1) and Neumann part (2).
struct BoundaryPartition {
    std::vector<int> labels;                  // 1 or 2, one entry per triangle
    std::vector<int> gamma1_triangles;        // Dirichlet panels
    std::vector<int> gamma2_triangles;        // Neumann panels
    std::vector<int> interior_gamma2_vertices;  // vertices whose whole star is Gamma2

    bool gamma1_empty() const { return gamma1_triangles.empty(); }
    bool gamma2_empty() const { return gamma2_triangles.empty(); }
    bool degenerate() const { return gamma1_empty() || gamma2_empty(); }
};

struct HalfSpaceRule {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;  // centroid.normal > offset -> Gamma1
};

namespace detail {

inline BoundaryPartition finish_partition(const SurfaceMesh& mesh, std::vector<int> labels) {
    BoundaryPartition part;
    part.labels = std::move(labels);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        if (part.labels[t] == 1)
            part.gamma1_triangles.push_back(static_cast<int>(t));
        else if (part.labels[t] == 2)
            part.gamma2_triangles.push_back(static_cast<int>(t));
        else
            throw ValidationError("partition: label of triangle " + std::to_string(t) +
                                  " must be 1 or 2");
    }
    const auto& stars = mesh.vertex_stars();
    for (std::size_t v = 0; v < stars.size(); ++v) {
        bool all2 = !stars[v].empty();
        for (int t : stars[v])
            if (part.labels[static_cast<std::size_t>(t)] != 2) all2 = false;
        if (all2) part.interior_gamma2_vertices.push_back(static_cast<int>(v));
    }
    return part;
}

}  // namespace detail

inline BoundaryPartition partition_boundary(const SurfaceMesh& mesh,
                                            const HalfSpaceRule& rule) {
    std::vector<int> labels(mesh.num_triangles());
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
        labels[t] = mesh.centroid(t).dot(rule.normal) > rule.offset ? 1 : 2;
    return detail::finish_partition(mesh, std::move(labels));
}

inline BoundaryPartition partition_boundary(const SurfaceMesh& mesh,
                                            const std::vector<int>& labels) {
    if (labels.size() != mesh.num_triangles())
        throw ValidationError("partition: labels file has " + std::to_string(labels.size()) +
                              " entries for " + std::to_string(mesh.num_triangles()) +
                              " triangles");
    return detail::finish_partition(mesh, labels);
}

inline BoundaryPartition load_partition(const SurfaceMesh& mesh, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open labels file: " + path);
    std::vector<int> labels;
    int value;
    while (in >> value) labels.push_back(value);
    return partition_boundary(mesh, labels);
}

}  // namespace bemx
