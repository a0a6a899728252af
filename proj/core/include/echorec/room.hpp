#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "echorec/material.hpp"
#include "echorec/vec3.hpp"

namespace echorec {

/// Wall ids of the shoebox: 0:x=0 1:x=L 2:y=0 3:y=W 4:z=0 5:z=H.
enum Wall : int { WallX0 = 0, WallX1, WallY0, WallY1, WallZ0, WallZ1 };

enum class PanelState { Closed, Open };

/// Axis-aligned rectangle on one of the six walls.
struct SurfacePanel {
    std::string name;
    std::array<Vec3, 4> corners{};
    int wall = -1;
    int material = -1;  // index into ShoeboxRoom::materials
    PanelState state = PanelState::Closed;
    bool exterior = false;

    // in-wall rectangle, cached at construction
    double u0 = 0, v0 = 0, u1 = 0, v1 = 0;

    double area() const { return (u1 - u0) * (v1 - v0); }
    bool contains(double u, double v, double tol = 1e-9) const {
        return u >= u0 - tol && u <= u1 + tol && v >= v0 - tol && v <= v1 + tol;
    }

    /// Effective absorption: open panels absorb fully in every band.
    double effective_absorption(const MaterialSpec& m, int band) const {
        return state == PanelState::Open ? 1.0 : m.absorption[static_cast<size_t>(band)];
    }
};

/// Rectangular room with material-tagged wall panels. Geometry is SI (meters)
/// throughout; imperial conversions happen only at the analytics surface.
struct ShoeboxRoom {
    Vec3 dims;  // L, W, H
    std::vector<MaterialSpec> materials;
    std::vector<SurfacePanel> panels;
    double exterior_noise_level_db = -30.0;  // dB relative to the source
    double speed_of_sound = 343.0;

    int material_index(const std::string& name) const;
    int panel_index(const std::string& name) const;

    double wall_area(int wall) const;
    /// Maps a wall-plane point to in-wall coordinates (u, v).
    static std::pair<double, double> wall_uv(int wall, const Vec3& p);
    /// The panel covering (u, v) on `wall`, or null.
    const SurfacePanel* panel_at(int wall, double u, double v) const;

    bool inside(const Vec3& p, double margin = 0.0) const;
    bool has_exterior_panel() const;

    /// Structural checks: positive dims, panels on the boundary, material
    /// invariants. Enough for the analytic operations.
    void validate() const;
    /// Additionally requires every wall to be tiled: per-wall panel area must
    /// equal the wall area. Required before impulse-response synthesis.
    void validate_for_simulation() const;

    /// Builds a panel from an in-wall rectangle.
    static SurfacePanel make_panel(const std::string& name, int wall, const Vec3& dims,
                                   double u0, double v0, double u1, double v1, int material,
                                   PanelState state, bool exterior);
    /// Builds a panel from explicit corners; validates coplanarity (1e-6 m)
    /// and wall membership.
    static SurfacePanel make_panel_from_corners(const std::string& name,
                                                const std::array<Vec3, 4>& corners,
                                                const Vec3& dims, int material, PanelState state,
                                                bool exterior);
};

/// Co-located emitter/recorder pair, vertically separated.
struct SourceReceiver {
    Vec3 source_pos;
    Vec3 receiver_pos;
    double vertical_offset = 0.07;

    void validate(const ShoeboxRoom& room) const;
};

/// Scene description file: [room], [material NAME], [panel NAME],
/// [source_receiver] sections.
struct Scene {
    ShoeboxRoom room;
    std::optional<SourceReceiver> source_receiver;
};

Scene load_scene(const std::string& path);
Scene parse_scene_text(const std::string& text, const std::string& path_for_errors);

constexpr double kFeetPerMeter = 1.0 / 0.3048;
constexpr double kMetersPerFoot = 0.3048;

}  // namespace echorec
