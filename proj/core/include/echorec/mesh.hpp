#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "echorec/vec3.hpp"

namespace echorec {

/// Triangle mesh with optional per-corner texture coordinates and per-face
/// material tags. Parsed from / written to the OBJ subset
/// (v, vt, f, usemtl, mtllib, o).
struct TriMesh {
    struct Face {
        std::array<int, 3> v{-1, -1, -1};    // vertex indices
        std::array<int, 3> vt{-1, -1, -1};   // uv indices, -1 when absent
        int material = -1;                   // index into materials, -1 none
        int object = -1;                     // index into objects, -1 none
    };

    std::vector<Vec3> vertices;
    std::vector<std::array<double, 2>> uvs;
    std::vector<Face> faces;
    std::vector<std::string> materials;
    std::vector<std::string> objects;
    std::string mtllib;

    int material_index(const std::string& name);  // interning lookup (adds)
    double face_area(size_t f) const;
    Vec3 face_normal(size_t f) const;    // unnormalized (area-weighted)
    Vec3 face_centroid(size_t f) const;

    void validate() const;
};

struct ObjWarnings {
    std::vector<std::string> messages;
};

/// Parse errors carry the 1-based line number. Faces with more than three
/// corners are fan-triangulated (warning); degenerate faces are dropped
/// (warning).
TriMesh load_obj(const std::string& path, ObjWarnings* warnings = nullptr);
TriMesh parse_obj_text(const std::string& text, const std::string& path_for_errors,
                       ObjWarnings* warnings = nullptr);

/// Writes vertices with shortest round-trip decimals. When the mesh carries
/// material tags a companion .mtl with stub entries is emitted next to the
/// OBJ.
void save_obj(const std::string& path, const TriMesh& mesh);
std::string obj_to_text(const TriMesh& mesh);

/// Topology + coordinate comparison (coordinates within tol).
bool meshes_equivalent(const TriMesh& a, const TriMesh& b, double tol,
                       std::string* why = nullptr);

}  // namespace echorec
