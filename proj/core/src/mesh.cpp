#include "echorec/mesh.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "echorec/errors.hpp"

namespace echorec {

namespace {

[[noreturn]] void obj_fail(const std::string& path, int line, const std::string& msg) {
    std::ostringstream os;
    os << path << ":" << line << ": " << msg;
    raise(ErrorCode::ParseError, os.str());
}

std::string shortest_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// "3", "3/1", "3/1/2", "3//2" -> (vertex, uv) zero-based
std::pair<int, int> parse_face_corner(const std::string& token, size_t n_vertices, size_t n_uvs,
                                      const std::string& path, int line) {
    int vals[3] = {0, 0, 0};
    bool present[3] = {false, false, false};
    int field = 0;
    size_t pos = 0;
    while (pos <= token.size()) {
        const size_t slash = token.find('/', pos);
        const std::string part =
            token.substr(pos, slash == std::string::npos ? std::string::npos : slash - pos);
        if (!part.empty()) {
            char* end = nullptr;
            const long n = std::strtol(part.c_str(), &end, 10);
            if (end == part.c_str() || *end != '\0')
                obj_fail(path, line, "malformed face index '" + part + "'");
            vals[field] = static_cast<int>(n);
            present[field] = true;
        }
        if (slash == std::string::npos) break;
        pos = slash + 1;
        if (++field > 2) obj_fail(path, line, "too many '/' in face corner");
    }
    if (!present[0]) obj_fail(path, line, "face corner lacks a vertex index");
    auto resolve = [&](int idx, size_t count, const char* what) -> int {
        if (idx == 0) obj_fail(path, line, std::string(what) + " index 0 (OBJ is 1-indexed)");
        if (idx < 0) obj_fail(path, line, std::string("negative ") + what + " index unsupported");
        if (static_cast<size_t>(idx) > count)
            obj_fail(path, line, std::string(what) + " index out of range");
        return idx - 1;
    };
    const int v = resolve(vals[0], n_vertices, "vertex");
    const int vt = present[1] ? resolve(vals[1], n_uvs, "uv") : -1;
    return {v, vt};
}

}  // namespace

int TriMesh::material_index(const std::string& name) {
    for (size_t i = 0; i < materials.size(); ++i)
        if (materials[i] == name) return static_cast<int>(i);
    materials.push_back(name);
    return static_cast<int>(materials.size() - 1);
}

Vec3 TriMesh::face_normal(size_t f) const {
    const Face& face = faces[f];
    const Vec3& a = vertices[static_cast<size_t>(face.v[0])];
    const Vec3& b = vertices[static_cast<size_t>(face.v[1])];
    const Vec3& c = vertices[static_cast<size_t>(face.v[2])];
    return (b - a).cross(c - a);
}

double TriMesh::face_area(size_t f) const { return 0.5 * face_normal(f).norm(); }

Vec3 TriMesh::face_centroid(size_t f) const {
    const Face& face = faces[f];
    return (vertices[static_cast<size_t>(face.v[0])] + vertices[static_cast<size_t>(face.v[1])] +
            vertices[static_cast<size_t>(face.v[2])]) /
           3.0;
}

void TriMesh::validate() const {
    for (const auto& face : faces) {
        for (int i = 0; i < 3; ++i) {
            if (face.v[static_cast<size_t>(i)] < 0 ||
                face.v[static_cast<size_t>(i)] >= static_cast<int>(vertices.size()))
                raise(ErrorCode::InvalidConfig, "face vertex index out of range");
            if (face.vt[static_cast<size_t>(i)] >= static_cast<int>(uvs.size()))
                raise(ErrorCode::InvalidConfig, "face uv index out of range");
        }
    }
}

TriMesh parse_obj_text(const std::string& text, const std::string& path, ObjWarnings* warnings) {
    TriMesh mesh;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    int cur_material = -1;
    int cur_object = -1;

    auto warn = [&](const std::string& msg) {
        if (warnings) {
            std::ostringstream os;
            os << path << ":" << line_no << ": " << msg;
            warnings->messages.push_back(os.str());
        }
    };

    while (std::getline(is, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::istringstream ls(raw);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;

        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) obj_fail(path, line_no, "v needs three coordinates");
            mesh.vertices.push_back({x, y, z});
        } else if (tag == "vt") {
            double u, v;
            if (!(ls >> u >> v)) obj_fail(path, line_no, "vt needs two coordinates");
            mesh.uvs.push_back({u, v});
        } else if (tag == "f") {
            std::vector<std::pair<int, int>> corners;
            std::string token;
            while (ls >> token)
                corners.push_back(parse_face_corner(token, mesh.vertices.size(),
                                                    mesh.uvs.size(), path, line_no));
            if (corners.size() < 3) obj_fail(path, line_no, "face needs at least 3 corners");
            if (corners.size() > 3) warn("non-triangular face fan-triangulated");
            for (size_t i = 1; i + 1 < corners.size(); ++i) {
                TriMesh::Face face;
                face.v = {corners[0].first, corners[i].first, corners[i + 1].first};
                face.vt = {corners[0].second, corners[i].second, corners[i + 1].second};
                face.material = cur_material;
                face.object = cur_object;
                mesh.faces.push_back(face);
                if (mesh.face_area(mesh.faces.size() - 1) <= 0.0) {
                    warn("degenerate (zero-area) face dropped");
                    mesh.faces.pop_back();
                }
            }
        } else if (tag == "usemtl") {
            std::string name;
            if (!(ls >> name)) obj_fail(path, line_no, "usemtl needs a name");
            cur_material = mesh.material_index(name);
        } else if (tag == "mtllib") {
            std::string name;
            if (!(ls >> name)) obj_fail(path, line_no, "mtllib needs a file name");
            mesh.mtllib = name;
        } else if (tag == "o") {
            std::string name;
            if (!(ls >> name)) obj_fail(path, line_no, "o needs a name");
            mesh.objects.push_back(name);
            cur_object = static_cast<int>(mesh.objects.size() - 1);
        }
        // other tags (vn, s, g, ...) are outside the subset and skipped
    }

    mesh.validate();
    return mesh;
}

TriMesh load_obj(const std::string& path, ObjWarnings* warnings) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_obj_text(buf.str(), path, warnings);
}

std::string obj_to_text(const TriMesh& mesh) {
    std::ostringstream os;
    if (!mesh.mtllib.empty()) os << "mtllib " << mesh.mtllib << "\n";
    for (const auto& v : mesh.vertices)
        os << "v " << shortest_double(v.x) << " " << shortest_double(v.y) << " "
           << shortest_double(v.z) << "\n";
    for (const auto& uv : mesh.uvs)
        os << "vt " << shortest_double(uv[0]) << " " << shortest_double(uv[1]) << "\n";

    int cur_material = -1;
    int cur_object = -1;
    for (const auto& face : mesh.faces) {
        if (face.object != cur_object && face.object >= 0) {
            os << "o " << mesh.objects[static_cast<size_t>(face.object)] << "\n";
            cur_object = face.object;
        }
        if (face.material != cur_material && face.material >= 0) {
            os << "usemtl " << mesh.materials[static_cast<size_t>(face.material)] << "\n";
            cur_material = face.material;
        }
        os << "f";
        for (int i = 0; i < 3; ++i) {
            os << " " << face.v[static_cast<size_t>(i)] + 1;
            if (face.vt[static_cast<size_t>(i)] >= 0)
                os << "/" << face.vt[static_cast<size_t>(i)] + 1;
        }
        os << "\n";
    }
    return os.str();
}

void save_obj(const std::string& path, const TriMesh& mesh) {
    TriMesh out = mesh;
    if (!out.materials.empty() && out.mtllib.empty()) {
        std::string stem = path;
        const size_t slash = stem.find_last_of('/');
        const size_t dot = stem.find_last_of('.');
        if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
            stem = stem.substr(0, dot);
        const size_t base = stem.find_last_of('/');
        out.mtllib = (base == std::string::npos ? stem : stem.substr(base + 1)) + ".mtl";
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open for write: " + path);
    f << obj_to_text(out);
    if (!f) raise(ErrorCode::IoError, "short write: " + path);

    if (!out.materials.empty() && !out.mtllib.empty()) {
        std::string dir;
        const size_t slash = path.find_last_of('/');
        if (slash != std::string::npos) dir = path.substr(0, slash + 1);
        std::ofstream mf(dir + out.mtllib, std::ios::binary);
        if (!mf) raise(ErrorCode::IoError, "cannot write mtl next to " + path);
        for (const auto& name : out.materials) {
            mf << "newmtl " << name << "\n";
            if (name == "glass") mf << "Kd 0.6 0.8 0.9\nd 0.35\n";
            else if (name == "mirror") mf << "Kd 0.9 0.9 0.95\nKs 1 1 1\n";
            else if (name == "background") mf << "Kd 0.3 0.3 0.3\n";
            else mf << "Kd 0.7 0.7 0.7\n";
            mf << "\n";
        }
    }
}

bool meshes_equivalent(const TriMesh& a, const TriMesh& b, double tol, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (a.vertices.size() != b.vertices.size()) return fail("vertex count differs");
    if (a.faces.size() != b.faces.size()) return fail("face count differs");
    for (size_t i = 0; i < a.vertices.size(); ++i) {
        if (distance(a.vertices[i], b.vertices[i]) > tol)
            return fail("vertex " + std::to_string(i) + " differs");
    }
    for (size_t i = 0; i < a.faces.size(); ++i) {
        if (a.faces[i].v != b.faces[i].v) return fail("face " + std::to_string(i) + " differs");
        const int ma = a.faces[i].material, mb = b.faces[i].material;
        const std::string na = ma >= 0 ? a.materials[static_cast<size_t>(ma)] : "";
        const std::string nb = mb >= 0 ? b.materials[static_cast<size_t>(mb)] : "";
        if (na != nb) return fail("face " + std::to_string(i) + " material differs");
    }
    return true;
}

}  // namespace echorec
