#include "echorec/room.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "echorec/config_text.hpp"
#include "echorec/errors.hpp"

namespace echorec {

namespace {

constexpr double kPlanarTol = 1e-6;

// Axis normal to a wall and the two in-plane axes (u, v).
struct WallFrame {
    int normal_axis;
    double plane_coord;  // 0 or the dim along normal_axis
    int u_axis, v_axis;
};

WallFrame wall_frame(int wall, const Vec3& dims) {
    switch (wall) {
        case WallX0: return {0, 0.0, 1, 2};
        case WallX1: return {0, dims.x, 1, 2};
        case WallY0: return {1, 0.0, 0, 2};
        case WallY1: return {1, dims.y, 0, 2};
        case WallZ0: return {2, 0.0, 0, 1};
        case WallZ1: return {2, dims.z, 0, 1};
        default: raise(ErrorCode::InvalidConfig, "invalid wall id");
    }
}

double axis_get(const Vec3& v, int axis) { return axis == 0 ? v.x : (axis == 1 ? v.y : v.z); }

void axis_set(Vec3& v, int axis, double value) {
    if (axis == 0) v.x = value;
    else if (axis == 1) v.y = value;
    else v.z = value;
}

}  // namespace

void MaterialSpec::validate() const {
    if (name.empty()) raise(ErrorCode::InvalidConfig, "material with empty name");
    for (int b = 0; b < kNumBands; ++b) {
        const double a = absorption[static_cast<size_t>(b)];
        if (a < 0.0 || a > 1.0)
            raise(ErrorCode::InvalidConfig,
                  "material '" + name + "': absorption out of [0,1] in band " + std::to_string(b));
        if (a + transmission > 1.0 + 1e-12)
            raise(ErrorCode::InvalidConfig,
                  "material '" + name + "': absorption + transmission > 1 in band " +
                      std::to_string(b));
    }
    if (transmission < 0.0 || transmission > 1.0)
        raise(ErrorCode::InvalidConfig, "material '" + name + "': transmission out of [0,1]");
}

int ShoeboxRoom::material_index(const std::string& name) const {
    for (size_t i = 0; i < materials.size(); ++i)
        if (materials[i].name == name) return static_cast<int>(i);
    return -1;
}

int ShoeboxRoom::panel_index(const std::string& name) const {
    for (size_t i = 0; i < panels.size(); ++i)
        if (panels[i].name == name) return static_cast<int>(i);
    return -1;
}

double ShoeboxRoom::wall_area(int wall) const {
    const WallFrame f = wall_frame(wall, dims);
    return axis_get(dims, f.u_axis) * axis_get(dims, f.v_axis);
}

std::pair<double, double> ShoeboxRoom::wall_uv(int wall, const Vec3& p) {
    // u/v axis choice matches wall_frame; dims not needed for projection
    switch (wall) {
        case WallX0:
        case WallX1: return {p.y, p.z};
        case WallY0:
        case WallY1: return {p.x, p.z};
        default: return {p.x, p.y};
    }
}

const SurfacePanel* ShoeboxRoom::panel_at(int wall, double u, double v) const {
    for (const auto& p : panels)
        if (p.wall == wall && p.contains(u, v)) return &p;
    return nullptr;
}

bool ShoeboxRoom::inside(const Vec3& p, double margin) const {
    return p.x > margin && p.x < dims.x - margin && p.y > margin && p.y < dims.y - margin &&
           p.z > margin && p.z < dims.z - margin;
}

bool ShoeboxRoom::has_exterior_panel() const {
    for (const auto& p : panels)
        if (p.exterior) return true;
    return false;
}

SurfacePanel ShoeboxRoom::make_panel(const std::string& name, int wall, const Vec3& dims,
                                     double u0, double v0, double u1, double v1, int material,
                                     PanelState state, bool exterior) {
    if (u1 <= u0 || v1 <= v0)
        raise(ErrorCode::InvalidConfig, "panel '" + name + "': empty rectangle");
    const WallFrame f = wall_frame(wall, dims);
    SurfacePanel p;
    p.name = name;
    p.wall = wall;
    p.material = material;
    p.state = state;
    p.exterior = exterior;
    p.u0 = u0; p.v0 = v0; p.u1 = u1; p.v1 = v1;
    const double uu[4] = {u0, u1, u1, u0};
    const double vv[4] = {v0, v0, v1, v1};
    for (int i = 0; i < 4; ++i) {
        Vec3 c;
        axis_set(c, f.normal_axis, f.plane_coord);
        axis_set(c, f.u_axis, uu[i]);
        axis_set(c, f.v_axis, vv[i]);
        p.corners[static_cast<size_t>(i)] = c;
    }
    return p;
}

SurfacePanel ShoeboxRoom::make_panel_from_corners(const std::string& name,
                                                  const std::array<Vec3, 4>& corners,
                                                  const Vec3& dims, int material,
                                                  PanelState state, bool exterior) {
    // identify the wall: all corners share one axis-aligned boundary coordinate
    for (int wall = 0; wall < 6; ++wall) {
        const WallFrame f = wall_frame(wall, dims);
        bool on_wall = true;
        for (const auto& c : corners)
            if (std::fabs(axis_get(c, f.normal_axis) - f.plane_coord) > kPlanarTol) on_wall = false;
        if (!on_wall) continue;
        double u0 = 1e300, v0 = 1e300, u1 = -1e300, v1 = -1e300;
        for (const auto& c : corners) {
            u0 = std::min(u0, axis_get(c, f.u_axis));
            u1 = std::max(u1, axis_get(c, f.u_axis));
            v0 = std::min(v0, axis_get(c, f.v_axis));
            v1 = std::max(v1, axis_get(c, f.v_axis));
        }
        return make_panel(name, wall, dims, u0, v0, u1, v1, material, state, exterior);
    }
    raise(ErrorCode::InvalidConfig,
          "panel '" + name + "': corners are not coplanar on a room wall (tolerance 1e-6 m)");
}

void ShoeboxRoom::validate() const {
    if (dims.x <= 0.0 || dims.y <= 0.0 || dims.z <= 0.0)
        raise(ErrorCode::InvalidConfig, "room dims must be positive");
    for (const auto& m : materials) m.validate();
    for (size_t i = 0; i < materials.size(); ++i)
        for (size_t j = i + 1; j < materials.size(); ++j)
            if (materials[i].name == materials[j].name)
                raise(ErrorCode::InvalidConfig, "duplicate material name: " + materials[i].name);
    for (const auto& p : panels) {
        if (p.wall < 0 || p.wall > 5)
            raise(ErrorCode::InvalidConfig, "panel '" + p.name + "': invalid wall");
        if (p.material < 0 || p.material >= static_cast<int>(materials.size()))
            raise(ErrorCode::InvalidConfig, "panel '" + p.name + "': unknown material");
        if (p.area() <= 0.0)
            raise(ErrorCode::InvalidConfig, "panel '" + p.name + "': nonpositive area");
        const WallFrame f = wall_frame(p.wall, dims);
        const double ulim = axis_get(dims, f.u_axis), vlim = axis_get(dims, f.v_axis);
        if (p.u0 < -kPlanarTol || p.v0 < -kPlanarTol || p.u1 > ulim + kPlanarTol ||
            p.v1 > vlim + kPlanarTol)
            raise(ErrorCode::InvalidConfig,
                  "panel '" + p.name + "': rectangle extends beyond its wall");
    }
}

void ShoeboxRoom::validate_for_simulation() const {
    validate();
    for (int wall = 0; wall < 6; ++wall) {
        double covered = 0.0;
        for (const auto& p : panels)
            if (p.wall == wall) covered += p.area();
        if (std::fabs(covered - wall_area(wall)) > 1e-6)
            raise(ErrorCode::InvalidConfig,
                  "wall " + std::to_string(wall) + " panel area " + std::to_string(covered) +
                      " does not tile wall area " + std::to_string(wall_area(wall)));
    }
}

void SourceReceiver::validate(const ShoeboxRoom& room) const {
    if (!room.inside(source_pos)) raise(ErrorCode::InvalidConfig, "source outside room");
    if (!room.inside(receiver_pos)) raise(ErrorCode::InvalidConfig, "receiver outside room");
    if (vertical_offset < 0.0) raise(ErrorCode::InvalidConfig, "negative vertical offset");
}

namespace {

Vec3 parse_vec3(const ConfigSection& sec, const std::string& key) {
    const std::vector<double> v = sec.get_doubles(key);
    if (v.size() != 3)
        raise(ErrorCode::ParseError, "key '" + key + "': expected 3 numbers");
    return {v[0], v[1], v[2]};
}

int parse_wall(const std::string& w, int line, const std::string& path) {
    if (w == "-x" || w == "x0") return WallX0;
    if (w == "+x" || w == "x1") return WallX1;
    if (w == "-y" || w == "y0") return WallY0;
    if (w == "+y" || w == "y1") return WallY1;
    if (w == "-z" || w == "z0" || w == "floor") return WallZ0;
    if (w == "+z" || w == "z1" || w == "ceiling") return WallZ1;
    std::ostringstream os;
    os << path << ":" << line << ": unknown wall '" << w << "'";
    raise(ErrorCode::ParseError, os.str());
}

}  // namespace

Scene parse_scene_text(const std::string& text, const std::string& path_for_errors) {
    const ConfigFile cfg = parse_config_text(text, path_for_errors);
    Scene scene;
    ShoeboxRoom& room = scene.room;

    const ConfigSection& rs = cfg.require("room");
    if (rs.has("dims_ft")) {
        const Vec3 d = parse_vec3(rs, "dims_ft");
        room.dims = d * kMetersPerFoot;
    } else {
        room.dims = parse_vec3(rs, "dims");
    }
    room.speed_of_sound = rs.get_double("speed_of_sound", 343.0);
    room.exterior_noise_level_db = rs.get_double("exterior_noise_level", -30.0);

    for (const ConfigSection* ms : cfg.find_all("material")) {
        MaterialSpec m;
        m.name = ms->name;
        if (m.name.empty())
            raise(ErrorCode::ParseError, path_for_errors + ": [material] needs a name");
        const std::vector<double> a = ms->get_doubles("absorption");
        if (a.size() == 1) {
            m.absorption.fill(a[0]);
        } else if (a.size() == kNumBands) {
            for (int b = 0; b < kNumBands; ++b) m.absorption[static_cast<size_t>(b)] = a[static_cast<size_t>(b)];
        } else {
            raise(ErrorCode::ParseError,
                  "material '" + m.name + "': absorption needs 1 or 9 coefficients");
        }
        m.transmission = ms->get_double("transmission", 0.0);
        m.is_reflector = ms->get_bool("reflector", false);
        room.materials.push_back(std::move(m));
    }

    for (const ConfigSection* ps : cfg.find_all("panel")) {
        const std::string name = ps->name;
        if (name.empty())
            raise(ErrorCode::ParseError, path_for_errors + ": [panel] needs a name");
        const std::string mat_name = ps->get_string("material");
        const int mat = room.material_index(mat_name);
        if (mat < 0)
            raise(ErrorCode::ParseError, "panel '" + name + "': unknown material '" + mat_name + "'");
        const std::string state_s = ps->get_string("state", "closed");
        PanelState state;
        if (state_s == "open") state = PanelState::Open;
        else if (state_s == "closed") state = PanelState::Closed;
        else raise(ErrorCode::ParseError, "panel '" + name + "': state must be open or closed");
        const bool exterior = ps->get_bool("exterior", false);

        const int wall = parse_wall(ps->get_string("wall"), ps->line, path_for_errors);
        std::vector<double> r;
        double scale = 1.0;
        if (ps->has("rect_ft")) {
            r = ps->get_doubles("rect_ft");
            scale = kMetersPerFoot;
        } else if (ps->has("rect")) {
            r = ps->get_doubles("rect");
        } else {
            // whole wall
            const auto [ulim, vlim] = [&]() -> std::pair<double, double> {
                switch (wall) {
                    case WallX0:
                    case WallX1: return {room.dims.y, room.dims.z};
                    case WallY0:
                    case WallY1: return {room.dims.x, room.dims.z};
                    default: return {room.dims.x, room.dims.y};
                }
            }();
            r = {0.0, 0.0, ulim, vlim};
        }
        if (r.size() != 4)
            raise(ErrorCode::ParseError, "panel '" + name + "': rect needs 4 numbers (u0 v0 u1 v1)");
        room.panels.push_back(ShoeboxRoom::make_panel(name, wall, room.dims, r[0] * scale,
                                                      r[1] * scale, r[2] * scale, r[3] * scale,
                                                      mat, state, exterior));
    }

    if (const ConfigSection* sr = cfg.find("source_receiver")) {
        SourceReceiver s;
        s.source_pos = parse_vec3(*sr, "source");
        if (sr->has("receiver")) {
            s.receiver_pos = parse_vec3(*sr, "receiver");
            s.vertical_offset = s.receiver_pos.z - s.source_pos.z;
        } else {
            s.vertical_offset = sr->get_double("vertical_offset", 0.07);
            s.receiver_pos = s.source_pos + Vec3{0.0, 0.0, s.vertical_offset};
        }
        scene.source_receiver = s;
    }

    room.validate();
    if (scene.source_receiver) scene.source_receiver->validate(room);
    return scene;
}

Scene load_scene(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open scene file: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_scene_text(buf.str(), path);
}

}  // namespace echorec
