#include "echorec/mesh_enhance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "echorec/errors.hpp"

namespace echorec {

void EchoClassification::validate() const {
    if (probability < 0.0 || probability > 1.0)
        raise(ErrorCode::InvalidConfig, "classification probability outside [0, 1]");
    if (depth <= 0.0) raise(ErrorCode::InvalidConfig, "classification depth must be positive");
}

namespace {

// --- small symmetric 3x3 eigen solver (Jacobi) for plane fitting ----------

struct Mat3 {
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
};

void jacobi_rotate(Mat3& a, Mat3& v, int p, int q) {
    if (std::fabs(a.m[p][q]) < 1e-300) return;
    const double theta = (a.m[q][q] - a.m[p][p]) / (2.0 * a.m[p][q]);
    const double t = (theta >= 0 ? 1.0 : -1.0) /
                     (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    for (int k = 0; k < 3; ++k) {
        const double akp = a.m[k][p], akq = a.m[k][q];
        a.m[k][p] = c * akp - s * akq;
        a.m[k][q] = s * akp + c * akq;
    }
    for (int k = 0; k < 3; ++k) {
        const double apk = a.m[p][k], aqk = a.m[q][k];
        a.m[p][k] = c * apk - s * aqk;
        a.m[q][k] = s * apk + c * aqk;
    }
    for (int k = 0; k < 3; ++k) {
        const double vkp = v.m[k][p], vkq = v.m[k][q];
        v.m[k][p] = c * vkp - s * vkq;
        v.m[k][q] = s * vkp + c * vkq;
    }
}

// eigenvector of the smallest eigenvalue
Vec3 smallest_eigenvector(Mat3 a) {
    Mat3 v;
    v.m[0][0] = v.m[1][1] = v.m[2][2] = 1.0;
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = std::fabs(a.m[0][1]) + std::fabs(a.m[0][2]) + std::fabs(a.m[1][2]);
        if (off < 1e-14) break;
        jacobi_rotate(a, v, 0, 1);
        jacobi_rotate(a, v, 0, 2);
        jacobi_rotate(a, v, 1, 2);
    }
    int best = 0;
    for (int i = 1; i < 3; ++i)
        if (a.m[i][i] < a.m[best][best]) best = i;
    return Vec3{v.m[0][best], v.m[1][best], v.m[2][best]}.normalized();
}

struct FittedPlane {
    Vec3 normal;
    double offset = 0.0;
    double rms = 0.0;
};

FittedPlane fit_plane(const std::vector<Vec3>& pts) {
    Vec3 centroid{0, 0, 0};
    for (const auto& p : pts) centroid += p;
    centroid = centroid / static_cast<double>(pts.size());
    Mat3 cov;
    for (const auto& p : pts) {
        const Vec3 d = p - centroid;
        const double dd[3] = {d.x, d.y, d.z};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) cov.m[i][j] += dd[i] * dd[j];
    }
    FittedPlane plane;
    plane.normal = smallest_eigenvector(cov);
    plane.offset = plane.normal.dot(centroid);
    double acc = 0.0;
    for (const auto& p : pts) {
        const double d = plane.normal.dot(p) - plane.offset;
        acc += d * d;
    }
    plane.rms = std::sqrt(acc / static_cast<double>(pts.size()));
    return plane;
}

// orthonormal in-plane basis with e1 x e2 = n
std::pair<Vec3, Vec3> plane_basis(const Vec3& n) {
    const Vec3 pick = std::fabs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 e1 = n.cross(pick).normalized();
    const Vec3 e2 = n.cross(e1);  // n x e1 completes the right-handed triple
    return {e1, e2};
}

uint64_t edge_key(int a, int b) {
    const uint64_t lo = static_cast<uint64_t>(std::min(a, b));
    const uint64_t hi = static_cast<uint64_t>(std::max(a, b));
    return (hi << 32) | lo;
}

}  // namespace

std::vector<PlanarDiscontinuity> detect_discontinuities(const TriMesh& mesh,
                                                        double planarity_tol) {
    struct EdgeInfo {
        int count = 0;
        int from = -1, to = -1;  // directed as in its (single) face
        int face = -1;
    };
    std::unordered_map<uint64_t, EdgeInfo> edges;
    edges.reserve(mesh.faces.size() * 3);
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (int i = 0; i < 3; ++i) {
            const int a = face.v[static_cast<size_t>(i)];
            const int b = face.v[static_cast<size_t>((i + 1) % 3)];
            EdgeInfo& e = edges[edge_key(a, b)];
            if (e.count++ == 0) {
                e.from = a;
                e.to = b;
                e.face = static_cast<int>(f);
            }
        }
    }

    // boundary edges directed as wound in their face; holes come out wound
    // opposite the outer boundary
    std::map<int, std::vector<std::pair<int, uint64_t>>> outgoing;  // from -> (to, key)
    for (const auto& [key, e] : edges)
        if (e.count == 1) outgoing[e.from].push_back({e.to, key});
    for (auto& [from, list] : outgoing) std::sort(list.begin(), list.end());

    std::vector<PlanarDiscontinuity> loops;
    std::unordered_map<uint64_t, bool> used;

    for (auto& [start, list0] : outgoing) {
        for (auto& [to0, key0] : list0) {
            if (used[key0]) continue;
            std::vector<int> loop;
            int cur = start;
            int next = to0;
            uint64_t key = key0;
            bool closed = false;
            while (true) {
                used[key] = true;
                loop.push_back(cur);
                cur = next;
                if (cur == start) {
                    closed = true;
                    break;
                }
                auto it = outgoing.find(cur);
                bool found = false;
                if (it != outgoing.end()) {
                    for (auto& [to, k] : it->second) {
                        if (!used[k]) {
                            next = to;
                            key = k;
                            found = true;
                            break;
                        }
                    }
                }
                if (!found) break;  // open chain; discard
            }
            if (!closed || loop.size() < 3) continue;

            std::vector<Vec3> pts;
            pts.reserve(loop.size());
            for (int vi : loop) pts.push_back(mesh.vertices[static_cast<size_t>(vi)]);
            FittedPlane plane = fit_plane(pts);
            if (plane.rms > planarity_tol) continue;

            // orient the normal with the faces adjacent to the loop edges
            Vec3 ref{0, 0, 0};
            for (size_t i = 0; i < loop.size(); ++i) {
                const uint64_t k = edge_key(loop[i], loop[(i + 1) % loop.size()]);
                auto it = edges.find(k);
                if (it != edges.end() && it->second.count == 1)
                    ref += mesh.face_normal(static_cast<size_t>(it->second.face));
            }
            if (plane.normal.dot(ref) < 0.0) plane.normal = plane.normal * -1.0;

            Vec3 centroid{0, 0, 0};
            for (const auto& p : pts) centroid += p;
            centroid = centroid / static_cast<double>(pts.size());

            const auto [e1, e2] = plane_basis(plane.normal);
            double signed_area = 0.0;
            for (size_t i = 0; i < pts.size(); ++i) {
                const Vec3& a = pts[i];
                const Vec3& b = pts[(i + 1) % pts.size()];
                const double au = e1.dot(a), av = e2.dot(a);
                const double bu = e1.dot(b), bv = e2.dot(b);
                signed_area += au * bv - bu * av;
            }
            signed_area *= 0.5;

            PlanarDiscontinuity disc;
            disc.boundary_loop = std::move(loop);
            disc.plane_normal = plane.normal;
            disc.plane_offset = plane.normal.dot(centroid);
            disc.planarity_rms = plane.rms;
            disc.area = std::fabs(signed_area);
            disc.is_hole = signed_area < 0.0;
            loops.push_back(std::move(disc));
        }
    }

    std::sort(loops.begin(), loops.end(),
              [](const PlanarDiscontinuity& a, const PlanarDiscontinuity& b) {
                  if (a.area != b.area) return a.area > b.area;
                  return a.boundary_loop < b.boundary_loop;
              });
    return loops;
}

TriMesh depth_filter(const TriMesh& mesh, double depth, double band, const CameraPose& view) {
    if (band <= 0.0) raise(ErrorCode::InvalidConfig, "depth band must be positive");
    TriMesh out;
    out.materials = mesh.materials;
    out.objects = mesh.objects;
    out.mtllib = mesh.mtllib;
    out.uvs = mesh.uvs;
    std::vector<int> vmap(mesh.vertices.size(), -1);
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const double d = view.view_depth(mesh.face_centroid(f));
        if (d < depth - band || d > depth + band) continue;
        TriMesh::Face face = mesh.faces[f];
        for (int i = 0; i < 3; ++i) {
            int& nv = vmap[static_cast<size_t>(face.v[static_cast<size_t>(i)])];
            if (nv < 0) {
                nv = static_cast<int>(out.vertices.size());
                out.vertices.push_back(mesh.vertices[static_cast<size_t>(face.v[static_cast<size_t>(i)])]);
            }
            face.v[static_cast<size_t>(i)] = nv;
        }
        out.faces.push_back(face);
    }
    if (out.faces.empty())
        raise(ErrorCode::EmptyResult, "no faces within the requested depth band");
    return out;
}

std::vector<int> convex_hull_planar(const std::vector<Vec3>& points, const Vec3& normal) {
    if (points.size() < 3)
        raise(ErrorCode::Degenerate, "convex hull needs at least 3 points");
    const auto [e1, e2] = plane_basis(normal.normalized());

    struct P2 {
        double u, v;
        int idx;
    };
    std::vector<P2> pts(points.size());
    for (size_t i = 0; i < points.size(); ++i)
        pts[i] = {e1.dot(points[i]), e2.dot(points[i]), static_cast<int>(i)};
    std::sort(pts.begin(), pts.end(), [](const P2& a, const P2& b) {
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const P2& a, const P2& b) { return a.u == b.u && a.v == b.v; }),
              pts.end());
    if (pts.size() < 3) raise(ErrorCode::Degenerate, "fewer than 3 distinct points");

    auto cross2 = [](const P2& o, const P2& a, const P2& b) {
        return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
    };

    std::vector<P2> hull(2 * pts.size());
    size_t k = 0;
    for (const auto& p : pts) {  // lower
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    const size_t lower = k + 1;
    for (size_t i = pts.size() - 1; i-- > 0;) {  // upper
        const P2& p = pts[i];
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    if (hull.size() < 3) raise(ErrorCode::Degenerate, "points are collinear");

    std::vector<int> out;
    out.reserve(hull.size());
    for (const auto& p : hull) out.push_back(p.idx);
    return out;
}

namespace {

Vec3 move_to_view_depth(const Vec3& p, const CameraPose& pose, double target_depth) {
    const double d = pose.view_depth(p);
    if (d <= 1e-9)
        raise(ErrorCode::Degenerate, "vertex at or behind the camera plane");
    return pose.position + (p - pose.position) * (target_depth / d);
}

bool reflector_material(const std::string& m) { return m == "glass" || m == "mirror"; }

struct ProjectedBox {
    double u0 = 0, v0 = 0, u1 = 0, v1 = 0;
    bool valid = false;
};

ProjectedBox project_bbox(const std::vector<Vec3>& pts, const CameraPose& pose) {
    ProjectedBox box;
    const Vec3 dir = pose.dir();
    Vec3 right = dir.cross(pose.up);
    if (right.norm() < 1e-12) right = dir.cross(Vec3{0, 1, 0});
    if (right.norm() < 1e-12) right = dir.cross(Vec3{1, 0, 0});
    right = right.normalized();
    const Vec3 up = right.cross(dir);
    box.u0 = box.v0 = 1e300;
    box.u1 = box.v1 = -1e300;
    for (const auto& p : pts) {
        const double d = pose.view_depth(p);
        if (d <= 1e-9) return box;  // behind the camera; treat as no overlap
        const Vec3 rel = p - pose.position;
        const double u = right.dot(rel) / d;
        const double v = up.dot(rel) / d;
        box.u0 = std::min(box.u0, u);
        box.u1 = std::max(box.u1, u);
        box.v0 = std::min(box.v0, v);
        box.v1 = std::max(box.v1, v);
    }
    box.valid = true;
    return box;
}

double box_iou(const ProjectedBox& a, const ProjectedBox& b) {
    if (!a.valid || !b.valid) return 0.0;
    const double iw = std::min(a.u1, b.u1) - std::max(a.u0, b.u0);
    const double ih = std::min(a.v1, b.v1) - std::max(a.v0, b.v0);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double area_a = (a.u1 - a.u0) * (a.v1 - a.v0);
    const double area_b = (b.u1 - b.u0) * (b.v1 - b.v0);
    const double uni = area_a + area_b - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

}  // namespace

FilledSurface inpaint(TriMesh& mesh, const PlanarDiscontinuity& disc,
                      const EchoClassification& cls, const EnhanceConfig& cfg) {
    cls.validate();
    if (cls.open_closed != OpenClosed::Closed)
        raise(ErrorCode::PreconditionViolated, "inpaint requires a closed classification");
    if (!reflector_material(cls.material))
        raise(ErrorCode::PreconditionViolated,
              "inpaint requires a reflector material (glass or mirror)");

    const std::vector<int>& loop = disc.boundary_loop;
    std::vector<Vec3> pts;
    pts.reserve(loop.size());
    for (int vi : loop) pts.push_back(mesh.vertices[static_cast<size_t>(vi)]);

    Vec3 centroid{0, 0, 0};
    for (const auto& p : pts) centroid += p;
    centroid = centroid / static_cast<double>(pts.size());

    // plane normal oriented toward the camera
    Vec3 n = disc.plane_normal;
    if (n.dot(cls.pose.position - centroid) < 0.0) n = n * -1.0;

    const int material = mesh.material_index(cls.material);
    FilledSurface surface;
    surface.normal = n;
    surface.material = cls.material;
    surface.pose = cls.pose;

    const std::vector<int> hull_local = convex_hull_planar(pts, n);

    if (cfg.simplify_geometry) {
        // fill the convex hull only; hull vertices move to the classified depth
        std::vector<int> hull_mesh;
        hull_mesh.reserve(hull_local.size());
        for (int li : hull_local) {
            const int vi = loop[static_cast<size_t>(li)];
            mesh.vertices[static_cast<size_t>(vi)] =
                move_to_view_depth(mesh.vertices[static_cast<size_t>(vi)], cls.pose, cls.depth);
            hull_mesh.push_back(vi);
        }
        for (size_t i = 1; i + 1 < hull_mesh.size(); ++i) {
            TriMesh::Face face;
            face.v = {hull_mesh[0], hull_mesh[i], hull_mesh[i + 1]};
            face.material = material;
            mesh.faces.push_back(face);
        }
        surface.hull_vertices = hull_mesh;
    } else {
        // move every loop vertex along its camera ray, then fan from the
        // loop centroid (robust for non-convex loops)
        for (int vi : loop)
            mesh.vertices[static_cast<size_t>(vi)] =
                move_to_view_depth(mesh.vertices[static_cast<size_t>(vi)], cls.pose, cls.depth);

        Vec3 moved_centroid{0, 0, 0};
        for (int vi : loop) moved_centroid += mesh.vertices[static_cast<size_t>(vi)];
        moved_centroid = moved_centroid / static_cast<double>(loop.size());
        const int center = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(moved_centroid);

        // wind the fill toward the camera
        std::vector<int> seq = loop;
        double sa = 0.0;
        const auto [e1, e2] = plane_basis(n);
        for (size_t i = 0; i < seq.size(); ++i) {
            const Vec3& a = mesh.vertices[static_cast<size_t>(seq[i])];
            const Vec3& b = mesh.vertices[static_cast<size_t>(seq[(i + 1) % seq.size()])];
            sa += e1.dot(a) * e2.dot(b) - e1.dot(b) * e2.dot(a);
        }
        if (sa < 0.0) std::reverse(seq.begin(), seq.end());
        for (size_t i = 0; i < seq.size(); ++i) {
            TriMesh::Face face;
            face.v = {center, seq[i], seq[(i + 1) % seq.size()]};
            face.material = material;
            mesh.faces.push_back(face);
            if (mesh.face_area(mesh.faces.size() - 1) <= 0.0) mesh.faces.pop_back();
        }

        std::vector<Vec3> moved_pts;
        for (int vi : loop) moved_pts.push_back(mesh.vertices[static_cast<size_t>(vi)]);
        const std::vector<int> moved_hull = convex_hull_planar(moved_pts, n);
        for (int li : moved_hull)
            surface.hull_vertices.push_back(loop[static_cast<size_t>(li)]);
    }

    return surface;
}

void place_background(TriMesh& mesh, const FilledSurface& surface, const EnhanceConfig& cfg) {
    const int material = mesh.material_index("background");
    std::vector<int> new_vertices;
    new_vertices.reserve(surface.hull_vertices.size());
    for (int vi : surface.hull_vertices) {
        const Vec3 p = mesh.vertices[static_cast<size_t>(vi)] -
                       surface.normal * cfg.background_offset;
        new_vertices.push_back(static_cast<int>(mesh.vertices.size()));
        mesh.vertices.push_back(p);
    }
    for (size_t i = 1; i + 1 < new_vertices.size(); ++i) {
        TriMesh::Face face;
        face.v = {new_vertices[0], new_vertices[i], new_vertices[i + 1]};
        face.material = material;
        mesh.faces.push_back(face);
    }
}

TriMesh remove_loose_components(const TriMesh& mesh, int min_faces) {
    if (min_faces < 0) raise(ErrorCode::InvalidConfig, "min_faces must be >= 0");
    if (min_faces <= 1 || mesh.faces.empty()) return mesh;

    std::vector<int> parent(mesh.faces.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    auto unite = [&](int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
    };

    std::unordered_map<uint64_t, int> first_face;
    first_face.reserve(mesh.faces.size() * 3);
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (int i = 0; i < 3; ++i) {
            const uint64_t key = edge_key(face.v[static_cast<size_t>(i)],
                                          face.v[static_cast<size_t>((i + 1) % 3)]);
            auto [it, inserted] = first_face.try_emplace(key, static_cast<int>(f));
            if (!inserted) unite(it->second, static_cast<int>(f));
        }
    }

    std::unordered_map<int, int> comp_size;
    for (size_t f = 0; f < mesh.faces.size(); ++f) comp_size[find(static_cast<int>(f))]++;

    TriMesh out;
    out.materials = mesh.materials;
    out.objects = mesh.objects;
    out.mtllib = mesh.mtllib;
    out.uvs = mesh.uvs;
    std::vector<int> vmap(mesh.vertices.size(), -1);
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        if (comp_size[find(static_cast<int>(f))] < min_faces) continue;
        TriMesh::Face face = mesh.faces[f];
        for (int i = 0; i < 3; ++i) {
            int& nv = vmap[static_cast<size_t>(face.v[static_cast<size_t>(i)])];
            if (nv < 0) {
                nv = static_cast<int>(out.vertices.size());
                out.vertices.push_back(
                    mesh.vertices[static_cast<size_t>(face.v[static_cast<size_t>(i)])]);
            }
            face.v[static_cast<size_t>(i)] = nv;
        }
        out.faces.push_back(face);
    }
    return out;
}

TriMesh enhance(const TriMesh& mesh, const std::vector<EchoClassification>& classifications,
                const EnhanceConfig& cfg, EnhanceReport* report) {
    EnhanceReport local;
    EnhanceReport& rep = report ? *report : local;
    TriMesh out = mesh;

    std::optional<FilledSurface> previous;
    for (const auto& cls : classifications) {
        try {
            if (cls.open_closed == OpenClosed::Open) {
                ++rep.skipped_open;
                continue;
            }
            if (!reflector_material(cls.material)) {
                ++rep.skipped_material;
                continue;
            }

            const std::vector<PlanarDiscontinuity> loops =
                detect_discontinuities(out, cfg.planarity_tol);
            const PlanarDiscontinuity* pick = nullptr;
            for (const auto& d : loops) {
                if (!d.is_hole) continue;
                Vec3 centroid{0, 0, 0};
                for (int vi : d.boundary_loop)
                    centroid += out.vertices[static_cast<size_t>(vi)];
                centroid = centroid / static_cast<double>(d.boundary_loop.size());
                if (std::fabs(cls.pose.view_depth(centroid) - cls.depth) > cfg.depth_band)
                    continue;
                pick = &d;
                break;  // loops are area-sorted; take the largest match
            }
            if (!pick) {
                ++rep.skipped_no_match;
                continue;
            }

            if (previous) {
                std::vector<Vec3> cand_pts, prev_pts;
                for (int vi : pick->boundary_loop)
                    cand_pts.push_back(out.vertices[static_cast<size_t>(vi)]);
                for (int vi : previous->hull_vertices)
                    prev_pts.push_back(out.vertices[static_cast<size_t>(vi)]);
                const double iou = box_iou(project_bbox(cand_pts, cls.pose),
                                           project_bbox(prev_pts, cls.pose));
                if (iou >= cfg.overlap_epsilon) {
                    ++rep.skipped_overlap;
                    continue;
                }
            }

            FilledSurface surface = inpaint(out, *pick, cls, cfg);
            place_background(out, surface, cfg);
            previous = std::move(surface);
            ++rep.filled;
        } catch (const Error& e) {
            rep.errors.push_back(std::string(error_code_name(e.code())) + ": " + e.what());
        }
    }

    return remove_loose_components(out, cfg.min_component_faces);
}

namespace {

Vec3 parse_triple(const std::string& v, const std::string& path, int line) {
    double x[3];
    size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        const size_t comma = v.find(',', pos);
        const std::string part =
            v.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        char* end = nullptr;
        x[i] = std::strtod(part.c_str(), &end);
        if (end == part.c_str() || *end != '\0') {
            std::ostringstream os;
            os << path << ":" << line << ": expected x,y,z triple, got '" << v << "'";
            raise(ErrorCode::ParseError, os.str());
        }
        if (comma == std::string::npos) {
            if (i != 2) {
                std::ostringstream os;
                os << path << ":" << line << ": expected x,y,z triple, got '" << v << "'";
                raise(ErrorCode::ParseError, os.str());
            }
            break;
        }
        pos = comma + 1;
    }
    return {x[0], x[1], x[2]};
}

}  // namespace

std::vector<EchoClassification> parse_classifications_text(const std::string& text,
                                                           const std::string& path) {
    std::vector<EchoClassification> out;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string token;
        EchoClassification c;
        bool any = false, have_depth = false, have_state = false, have_material = false;
        while (ls >> token) {
            any = true;
            const size_t eq = token.find('=');
            if (eq == std::string::npos) {
                std::ostringstream os;
                os << path << ":" << line_no << ": expected key=value, got '" << token << "'";
                raise(ErrorCode::ParseError, os.str());
            }
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "frame") c.frame_id = std::atoi(value.c_str());
            else if (key == "cam") c.pose.position = parse_triple(value, path, line_no);
            else if (key == "dir") c.pose.forward = parse_triple(value, path, line_no);
            else if (key == "up") c.pose.up = parse_triple(value, path, line_no);
            else if (key == "state") {
                have_state = true;
                if (value == "open") c.open_closed = OpenClosed::Open;
                else if (value == "closed") c.open_closed = OpenClosed::Closed;
                else {
                    std::ostringstream os;
                    os << path << ":" << line_no << ": state must be open or closed";
                    raise(ErrorCode::ParseError, os.str());
                }
            } else if (key == "prob") c.probability = std::atof(value.c_str());
            else if (key == "depth") {
                c.depth = std::atof(value.c_str());
                have_depth = true;
            } else if (key == "material") {
                c.material = value;
                have_material = true;
            } else {
                std::ostringstream os;
                os << path << ":" << line_no << ": unknown key '" << key << "'";
                raise(ErrorCode::ParseError, os.str());
            }
        }
        if (!any) continue;
        if (!have_state || !have_depth || !have_material) {
            std::ostringstream os;
            os << path << ":" << line_no << ": record needs state, depth, and material";
            raise(ErrorCode::ParseError, os.str());
        }
        c.validate();
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<EchoClassification> load_classifications(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_classifications_text(buf.str(), path);
}

std::string classification_to_record(const EchoClassification& c) {
    std::ostringstream os;
    os << "frame=" << c.frame_id;
    os << " cam=" << c.pose.position.x << "," << c.pose.position.y << "," << c.pose.position.z;
    os << " dir=" << c.pose.forward.x << "," << c.pose.forward.y << "," << c.pose.forward.z;
    os << " up=" << c.pose.up.x << "," << c.pose.up.y << "," << c.pose.up.z;
    os << " state=" << (c.open_closed == OpenClosed::Open ? "open" : "closed");
    os << " prob=" << c.probability;
    os << " depth=" << c.depth;
    os << " material=" << c.material;
    return os.str();
}

}  // namespace echorec
