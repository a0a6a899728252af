#pragma once

#include <optional>
#include <string>
#include <vector>

#include "echorec/mesh.hpp"
#include "echorec/vec3.hpp"

namespace echorec {

struct CameraPose {
    Vec3 position{0, 0, 0};
    Vec3 forward{0, 0, 1};
    Vec3 up{0, 1, 0};

    Vec3 dir() const { return forward.normalized(); }
    double view_depth(const Vec3& p) const { return (p - position).dot(dir()); }
};

/// Closed boundary loop lying on a fitted plane.
struct PlanarDiscontinuity {
    std::vector<int> boundary_loop;  // ordered vertex indices
    Vec3 plane_normal;               // unit, oriented with the adjacent faces
    double plane_offset = 0.0;       // dot(normal, x) = offset
    double planarity_rms = 0.0;      // meters
    double area = 0.0;               // absolute loop area
    bool is_hole = false;            // wound opposite the sheet boundary
};

enum class OpenClosed { Open, Closed };

/// One per-frame inference record, with the camera pose it was made from.
struct EchoClassification {
    int frame_id = 0;
    CameraPose pose;
    OpenClosed open_closed = OpenClosed::Closed;
    double probability = 1.0;
    double depth = 0.0;  // meters
    std::string material;  // "glass", "mirror", "other"

    void validate() const;
};

struct EnhanceConfig {
    double overlap_epsilon = 0.5;      // IoU guard against refilling one hole
    double depth_band = 0.25;          // half-width for depth agreement, meters
    bool simplify_geometry = true;
    double background_offset = 0.3;    // meters behind the filled surface
    int min_component_faces = 0;
    double planarity_tol = 0.02;       // meters
};

/// Boundary loops (edges with exactly one incident face) chained into closed
/// loops, planar within `planarity_tol`, sorted by area descending.
std::vector<PlanarDiscontinuity> detect_discontinuities(const TriMesh& mesh,
                                                        double planarity_tol);

/// Faces whose centroid view-depth lies in [depth - band, depth + band].
/// Throws EmptyResult when nothing survives.
TriMesh depth_filter(const TriMesh& mesh, double depth, double band, const CameraPose& view);

/// 2-D convex hull (monotone chain) of coplanar points, counter-clockwise
/// around `normal`. Returns indices into `points`.
std::vector<int> convex_hull_planar(const std::vector<Vec3>& points, const Vec3& normal);

/// Handle to an inpainted surface for background placement.
struct FilledSurface {
    std::vector<int> hull_vertices;  // mesh vertex indices after any move
    Vec3 normal;                     // unit, facing the camera
    std::string material;
    CameraPose pose;
};

/// Fills one discontinuity per the classification. Requires closed state and
/// a reflector material. simplify_geometry fills the convex hull of the loop
/// (hull vertices moved to the classified view depth); otherwise every loop
/// vertex is moved along its camera ray to the classified depth and the full
/// loop is fan-filled from its centroid.
FilledSurface inpaint(TriMesh& mesh, const PlanarDiscontinuity& disc,
                      const EchoClassification& cls, const EnhanceConfig& cfg);

/// Duplicates the filled hull offset by cfg.background_offset away from the
/// viewer, tagged "background".
void place_background(TriMesh& mesh, const FilledSurface& surface, const EnhanceConfig& cfg);

/// Removes connected components (face adjacency over shared edges) with
/// fewer than min_faces faces.
TriMesh remove_loose_components(const TriMesh& mesh, int min_faces);

struct EnhanceReport {
    int filled = 0;
    int skipped_open = 0;
    int skipped_material = 0;
    int skipped_overlap = 0;
    int skipped_no_match = 0;
    std::vector<std::string> errors;
};

/// Full enhancement loop: per classification, guard (closed, reflector
/// material, overlap below epsilon), pick the best depth-matching hole,
/// inpaint, place background; finally drop loose components. Errors are
/// collected per classification without aborting.
TriMesh enhance(const TriMesh& mesh, const std::vector<EchoClassification>& classifications,
                const EnhanceConfig& cfg, EnhanceReport* report = nullptr);

/// Line-delimited classification records:
///   frame=0 cam=x,y,z dir=x,y,z up=x,y,z state=closed prob=0.97 depth=2.0 material=glass
std::vector<EchoClassification> load_classifications(const std::string& path);
std::vector<EchoClassification> parse_classifications_text(const std::string& text,
                                                           const std::string& path_for_errors);
std::string classification_to_record(const EchoClassification& c);

}  // namespace echorec
