#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "echorec/errors.hpp"
#include "echorec/mesh.hpp"
#include "echorec/mesh_enhance.hpp"
#include "echorec/rng.hpp"

using namespace echorec;

namespace {

const std::string kFixtures = ECHOREC_FIXTURE_DIR;
const std::string kTmp = ECHOREC_TMP_DIR;

TriMesh wall_fixture() { return load_obj(kFixtures + "/wall_with_window.obj"); }

EchoClassification window_classification() {
    EchoClassification c;
    c.frame_id = 0;
    c.pose.position = {2.0, 1.5, 0.0};
    c.pose.forward = {0.0, 0.0, 1.0};
    c.pose.up = {0.0, 1.0, 0.0};
    c.open_closed = OpenClosed::Closed;
    c.probability = 0.97;
    c.depth = 2.0;
    c.material = "glass";
    return c;
}

TriMesh unit_cube() {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                  {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
    const int quads[6][4] = {{0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4},
                             {2, 3, 7, 6}, {1, 2, 6, 5}, {3, 0, 4, 7}};
    for (const auto& q : quads) {
        m.faces.push_back({{q[0], q[1], q[2]}, {-1, -1, -1}, -1, -1});
        m.faces.push_back({{q[0], q[2], q[3]}, {-1, -1, -1}, -1, -1});
    }
    return m;
}

/// O(n^3) hull oracle: an input point is a hull vertex iff some ordered pair
/// forms an edge with every other point strictly on one side.
std::set<int> brute_force_hull(const std::vector<Vec3>& pts, const Vec3& normal) {
    const Vec3 n = normal.normalized();
    const Vec3 pick = std::fabs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 e1 = n.cross(pick).normalized();
    const Vec3 e2 = n.cross(e1);
    std::vector<std::pair<double, double>> q(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) q[i] = {e1.dot(pts[i]), e2.dot(pts[i])};

    std::set<int> hull;
    for (size_t i = 0; i < q.size(); ++i) {
        for (size_t j = 0; j < q.size(); ++j) {
            if (i == j) continue;
            bool all_left = true, any = false;
            for (size_t k = 0; k < q.size(); ++k) {
                if (k == i || k == j) continue;
                const double cross = (q[j].first - q[i].first) * (q[k].second - q[i].second) -
                                     (q[j].second - q[i].second) * (q[k].first - q[i].first);
                any = true;
                if (cross < 0.0) {
                    all_left = false;
                    break;
                }
            }
            if (any && all_left) {
                hull.insert(static_cast<int>(i));
                hull.insert(static_cast<int>(j));
            }
        }
    }
    return hull;
}

}  // namespace

TEST_CASE("obj: unit quad parses to 4 vertices and 2 faces") {
    const TriMesh m = parse_obj_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n",
                                     "quad.obj");
    CHECK(m.vertices.size() == 4);
    CHECK(m.faces.size() == 2);
}

TEST_CASE("obj: save/load round trip preserves topology and coordinates") {
    TriMesh m = wall_fixture();
    m.material_index("wall");
    const std::string path = kTmp + "/roundtrip.obj";
    save_obj(path, m);
    const TriMesh back = load_obj(path);
    std::string why;
    CHECK(meshes_equivalent(m, back, 0.0, &why));  // shortest-repr decimals round-trip exactly
    INFO(why);

    // second save is byte-stable
    const std::string path2 = kTmp + "/roundtrip2.obj";
    save_obj(path2, back);
    std::ifstream f1(path), f2(path2);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("obj: 1-indexing is enforced") {
    try {
        parse_obj_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n", "zeroidx.obj");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find("zeroidx.obj:4") != std::string::npos);
    }
}

TEST_CASE("obj: quad faces fan-triangulate with a warning") {
    ObjWarnings warnings;
    const TriMesh m = parse_obj_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n",
                                     "quadface.obj", &warnings);
    CHECK(m.faces.size() == 2);
    REQUIRE(warnings.messages.size() == 1);
    CHECK(warnings.messages[0].find("fan-triangulated") != std::string::npos);
}

TEST_CASE("obj: uv corners survive the round trip") {
    const std::string text =
        "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n";
    const TriMesh m = parse_obj_text(text, "uv.obj");
    REQUIRE(m.uvs.size() == 3);
    CHECK(m.faces[0].vt == std::array<int, 3>{0, 1, 2});
    const std::string path = kTmp + "/uv_roundtrip.obj";
    save_obj(path, m);
    const TriMesh back = load_obj(path);
    CHECK(back.faces[0].vt == m.faces[0].vt);
}

TEST_CASE("detect: watertight cube has no discontinuities") {
    CHECK(detect_discontinuities(unit_cube(), 0.02).empty());
}

TEST_CASE("detect: wall with window yields outer perimeter plus hole") {
    const auto loops = detect_discontinuities(wall_fixture(), 0.02);
    REQUIRE(loops.size() == 2);
    CHECK(loops[0].area > loops[1].area);  // sorted by area descending
    CHECK_FALSE(loops[0].is_hole);
    CHECK(loops[1].is_hole);
    CHECK(loops[0].boundary_loop.size() == 4);
    CHECK(loops[1].boundary_loop.size() == 4);
    CHECK(loops[1].planarity_rms == doctest::Approx(0.0).epsilon(1e-12));
    const std::set<int> hole(loops[1].boundary_loop.begin(), loops[1].boundary_loop.end());
    CHECK(hole == std::set<int>{4, 5, 6, 7});
}

TEST_CASE("detect: noise below the tolerance keeps the loop set") {
    TriMesh m = wall_fixture();
    Rng rng(12);
    for (int vi : {4, 5, 6, 7}) m.vertices[static_cast<size_t>(vi)].z += rng.uniform(-0.004, 0.004);
    const auto loops = detect_discontinuities(m, 0.02);
    REQUIRE(loops.size() == 2);
    const std::set<int> hole(loops[1].boundary_loop.begin(), loops[1].boundary_loop.end());
    CHECK(hole == std::set<int>{4, 5, 6, 7});
    CHECK(loops[1].planarity_rms <= 0.004);

    // and a loop bent past the tolerance is discarded
    TriMesh bent = wall_fixture();
    bent.vertices[5].z += 0.2;
    const auto bent_loops = detect_discontinuities(bent, 0.02);
    CHECK(bent_loops.size() == 1);
}

TEST_CASE("depth filter: identity inside the band, EmptyResult outside") {
    const TriMesh m = wall_fixture();
    CameraPose pose;
    pose.position = {2.0, 1.5, 0.0};
    const TriMesh same = depth_filter(m, 2.0, 0.5, pose);
    CHECK(same.faces.size() == m.faces.size());
    const TriMesh wide = depth_filter(m, 5.0, 1e9, pose);
    CHECK(wide.faces.size() == m.faces.size());
    CHECK_THROWS_AS(depth_filter(m, 10.0, 0.5, pose), Error);
}

TEST_CASE("depth filter: separates two parallel planes 1 m apart") {
    TriMesh m;
    m.vertices = {{0, 0, 2}, {1, 0, 2}, {0, 1, 2}, {0, 0, 3}, {1, 0, 3}, {0, 1, 3}};
    m.faces.push_back({{0, 1, 2}, {-1, -1, -1}, -1, -1});
    m.faces.push_back({{3, 4, 5}, {-1, -1, -1}, -1, -1});
    CameraPose pose;
    const TriMesh near = depth_filter(m, 2.0, 0.2, pose);
    REQUIRE(near.faces.size() == 1);
    CHECK(near.vertices[0].z == 2.0);
    const TriMesh far = depth_filter(m, 3.0, 0.2, pose);
    REQUIRE(far.faces.size() == 1);
    CHECK(far.vertices[0].z == 3.0);
}

TEST_CASE("hull: square corners win over the centroid") {
    const std::vector<Vec3> pts = {{0, 0, 1}, {2, 0, 1}, {2, 2, 1}, {0, 2, 1}, {1, 1, 1}};
    const auto hull = convex_hull_planar(pts, {0, 0, 1});
    CHECK(hull.size() == 4);
    const std::set<int> got(hull.begin(), hull.end());
    CHECK(got == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("hull: idempotence") {
    Rng rng(3);
    std::vector<Vec3> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), 0.5});
    const auto hull1 = convex_hull_planar(pts, {0, 0, 1});
    std::vector<Vec3> hull_pts;
    for (int i : hull1) hull_pts.push_back(pts[static_cast<size_t>(i)]);
    const auto hull2 = convex_hull_planar(hull_pts, {0, 0, 1});
    CHECK(hull2.size() == hull1.size());
}

TEST_CASE("hull: counter-clockwise orientation around the normal") {
    const std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    const auto hull = convex_hull_planar(pts, {0, 0, 1});
    REQUIRE(hull.size() == 4);
    double area2 = 0.0;  // shoelace in the plane, positive = CCW around +z
    for (size_t i = 0; i < hull.size(); ++i) {
        const Vec3& a = pts[static_cast<size_t>(hull[i])];
        const Vec3& b = pts[static_cast<size_t>(hull[(i + 1) % hull.size()])];
        area2 += a.x * b.y - b.x * a.y;
    }
    CHECK(area2 > 0.0);
}

TEST_CASE("hull: 100 random coplanar sets match the brute-force oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const size_t n = 3 + rng.next_u64() % 48;
        // a tilted plane through the origin
        const Vec3 normal =
            Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.2, 1)}.normalized();
        const Vec3 pick = std::fabs(normal.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        const Vec3 e1 = normal.cross(pick).normalized();
        const Vec3 e2 = normal.cross(e1);
        std::vector<Vec3> pts;
        for (size_t i = 0; i < n; ++i)
            pts.push_back(e1 * rng.uniform(-2, 2) + e2 * rng.uniform(-2, 2));
        std::set<int> got;
        try {
            for (int i : convex_hull_planar(pts, normal)) got.insert(i);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Degenerate);
            continue;
        }
        const std::set<int> want = brute_force_hull(pts, normal);
        CHECK(got == want);
    }
}

TEST_CASE("hull: collinear points are degenerate") {
    const std::vector<Vec3> pts = {{0, 0, 0}, {1, 1, 0}, {2, 2, 0}, {3, 3, 0}};
    CHECK_THROWS_AS(convex_hull_planar(pts, {0, 0, 1}), Error);
}

TEST_CASE("inpaint: open classification is refused") {
    TriMesh m = wall_fixture();
    const auto loops = detect_discontinuities(m, 0.02);
    EchoClassification open_cls = window_classification();
    open_cls.open_closed = OpenClosed::Open;
    CHECK_THROWS_AS(inpaint(m, loops[1], open_cls, {}), Error);
    // ... and the non-reflector material too
    EchoClassification wood = window_classification();
    wood.material = "wood";
    CHECK_THROWS_AS(inpaint(m, loops[1], wood, {}), Error);
    std::string why;
    CHECK(meshes_equivalent(m, wall_fixture(), 0.0, &why));
}

TEST_CASE("inpaint: square hole fills with one glass quad at the classified depth") {
    TriMesh m = wall_fixture();
    const auto loops = detect_discontinuities(m, 0.02);
    REQUIRE(loops.size() == 2);
    const EnhanceConfig cfg;
    const FilledSurface surface = inpaint(m, loops[1], window_classification(), cfg);
    CHECK(m.faces.size() == 10);  // 8 + 2 fill triangles
    CHECK(surface.hull_vertices.size() == 4);
    const CameraPose pose = window_classification().pose;
    for (size_t f = 8; f < 10; ++f) {
        CHECK(m.materials[static_cast<size_t>(m.faces[f].material)] == "glass");
        for (int i = 0; i < 3; ++i) {
            const Vec3& v = m.vertices[static_cast<size_t>(m.faces[f].v[static_cast<size_t>(i)])];
            CHECK(std::fabs(pose.view_depth(v) - 2.0) < 1e-6);
        }
    }
    // hole is now closed
    const auto after = detect_discontinuities(m, 0.02);
    REQUIRE(after.size() == 1);
    CHECK_FALSE(after[0].is_hole);
}

TEST_CASE("inpaint: vertex-move branch closes the loop at the classified depth") {
    TriMesh m = wall_fixture();
    const auto loops = detect_discontinuities(m, 0.02);
    EnhanceConfig cfg;
    cfg.simplify_geometry = false;
    EchoClassification cls = window_classification();
    cls.depth = 2.5;  // pull the window half a meter back along the rays
    const FilledSurface surface = inpaint(m, loops[1], cls, cfg);
    (void)surface;
    for (int vi : {4, 5, 6, 7})
        CHECK(std::fabs(cls.pose.view_depth(m.vertices[static_cast<size_t>(vi)]) - 2.5) < 1e-9);
    // loop closed (only the outer perimeter remains)
    const auto after = detect_discontinuities(m, 0.05);
    REQUIRE(after.size() == 1);
    CHECK_FALSE(after[0].is_hole);
}

TEST_CASE("place_background: duplicate hull offset along -normal") {
    TriMesh m = wall_fixture();
    const auto loops = detect_discontinuities(m, 0.02);
    EnhanceConfig cfg;
    const FilledSurface surface = inpaint(m, loops[1], window_classification(), cfg);

    SUBCASE("zero offset is coincident") {
        EnhanceConfig zero = cfg;
        zero.background_offset = 0.0;
        TriMesh mm = m;
        place_background(mm, surface, zero);
        for (size_t v = 8; v < mm.vertices.size(); ++v)
            CHECK(mm.vertices[v].z == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("default offset separates the planes by 0.3 m") {
        TriMesh mm = m;
        place_background(mm, surface, cfg);
        REQUIRE(mm.vertices.size() == 12);
        for (size_t v = 8; v < 12; ++v)
            CHECK(mm.vertices[v].z == doctest::Approx(2.3).epsilon(1e-12));
        // background faces tagged and parallel to the fill
        const Vec3 n_bg = mm.face_normal(mm.faces.size() - 1).normalized();
        const Vec3 n_fill = mm.face_normal(8).normalized();
        CHECK(std::fabs(n_bg.dot(n_fill)) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(mm.materials[static_cast<size_t>(mm.faces.back().material)] == "background");
    }
}

TEST_CASE("remove_loose_components") {
    TriMesh m;
    // 100-face strip
    for (int i = 0; i <= 101; ++i) m.vertices.push_back({static_cast<double>(i), 0, 0});
    for (int i = 0; i <= 101; ++i) m.vertices.push_back({static_cast<double>(i), 1, 0});
    for (int i = 0; i < 50; ++i) {
        m.faces.push_back({{i, i + 1, 102 + i}, {-1, -1, -1}, -1, -1});
        m.faces.push_back({{i + 1, 103 + i, 102 + i}, {-1, -1, -1}, -1, -1});
    }
    // 3-face fan far away
    const int base = static_cast<int>(m.vertices.size());
    m.vertices.push_back({500, 0, 0});
    m.vertices.push_back({501, 0, 0});
    m.vertices.push_back({501, 1, 0});
    m.vertices.push_back({500, 1, 0});
    m.vertices.push_back({500.5, 0.5, 1});
    m.faces.push_back({{base, base + 1, base + 4}, {-1, -1, -1}, -1, -1});
    m.faces.push_back({{base + 1, base + 2, base + 4}, {-1, -1, -1}, -1, -1});
    m.faces.push_back({{base + 2, base + 3, base + 4}, {-1, -1, -1}, -1, -1});

    CHECK(remove_loose_components(m, 0).faces.size() == m.faces.size());
    const TriMesh filtered = remove_loose_components(m, 10);
    CHECK(filtered.faces.size() == 100);

    // union-find result matches an independent BFS component count
    std::vector<std::set<int>> vertex_faces(m.vertices.size());
    for (size_t f = 0; f < m.faces.size(); ++f)
        for (int i = 0; i < 3; ++i)
            vertex_faces[static_cast<size_t>(m.faces[f].v[static_cast<size_t>(i)])].insert(
                static_cast<int>(f));
    std::vector<int> comp(m.faces.size(), -1);
    int n_comp = 0;
    for (size_t f = 0; f < m.faces.size(); ++f) {
        if (comp[f] >= 0) continue;
        std::vector<int> stack{static_cast<int>(f)};
        comp[f] = n_comp;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            for (int i = 0; i < 3; ++i) {
                const int a = m.faces[static_cast<size_t>(cur)].v[static_cast<size_t>(i)];
                const int b = m.faces[static_cast<size_t>(cur)].v[static_cast<size_t>((i + 1) % 3)];
                for (int g : vertex_faces[static_cast<size_t>(a)]) {
                    if (comp[static_cast<size_t>(g)] >= 0) continue;
                    // shared edge, not just shared vertex
                    const auto& fv = m.faces[static_cast<size_t>(g)].v;
                    int shared = 0;
                    for (int j = 0; j < 3; ++j)
                        if (fv[static_cast<size_t>(j)] == a || fv[static_cast<size_t>(j)] == b)
                            ++shared;
                    if (shared >= 2) {
                        comp[static_cast<size_t>(g)] = n_comp;
                        stack.push_back(g);
                    }
                }
            }
        }
        ++n_comp;
    }
    CHECK(n_comp == 2);
}

TEST_CASE("enhance: golden wall-with-window fixture") {
    const TriMesh input = wall_fixture();
    const std::vector<EchoClassification> cls =
        load_classifications(kFixtures + "/wall_with_window_classified.txt");
    EnhanceReport report;
    const TriMesh out = enhance(input, cls, {}, &report);
    CHECK(report.filled == 1);
    CHECK(report.errors.empty());

    const TriMesh golden = load_obj(kFixtures + "/wall_with_window_golden.obj");
    std::string why;
    const bool same = meshes_equivalent(out, golden, 1e-6, &why);
    INFO(why);
    CHECK(same);
}

TEST_CASE("enhance: open classification leaves geometry unchanged") {
    const TriMesh input = wall_fixture();
    EchoClassification open_cls = window_classification();
    open_cls.open_closed = OpenClosed::Open;
    EnhanceReport report;
    const TriMesh out = enhance(input, {open_cls}, {}, &report);
    CHECK(report.filled == 0);
    CHECK(report.skipped_open == 1);
    std::string why;
    CHECK(meshes_equivalent(out, input, 0.0, &why));
}

TEST_CASE("enhance: empty classification list only filters loose components") {
    const TriMesh input = wall_fixture();
    const TriMesh out = enhance(input, {}, {});
    std::string why;
    CHECK(meshes_equivalent(out, input, 0.0, &why));
}

TEST_CASE("enhance: idempotent on its own output") {
    const TriMesh input = wall_fixture();
    const std::vector<EchoClassification> cls =
        load_classifications(kFixtures + "/wall_with_window_classified.txt");
    const TriMesh once = enhance(input, cls, {});
    const TriMesh twice = enhance(once, cls, {});
    std::string why;
    const bool same = meshes_equivalent(twice, once, 0.0, &why);
    INFO(why);
    CHECK(same);
}

TEST_CASE("enhance: overlap guard skips a discontinuity behind the previous fill") {
    // two walls, the deeper one the exact projective image of the first, so
    // its hole lands on the first fill in image space and must be skipped
    TriMesh m = wall_fixture();
    const TriMesh back_wall = wall_fixture();
    const Vec3 cam{2.0, 1.5, 0.0};
    const int off = static_cast<int>(m.vertices.size());
    for (const auto& v : back_wall.vertices) m.vertices.push_back(cam + (v - cam) * 1.5);
    for (const auto& f : back_wall.faces)
        m.faces.push_back({{f.v[0] + off, f.v[1] + off, f.v[2] + off}, {-1, -1, -1}, -1, -1});

    EchoClassification first = window_classification();
    EchoClassification second = window_classification();
    second.frame_id = 1;
    second.depth = 3.0;

    EnhanceReport report;
    const TriMesh out = enhance(m, {first, second}, {}, &report);
    CHECK(report.filled == 1);
    CHECK(report.skipped_overlap == 1);
    (void)out;
}

TEST_CASE("enhance: face and vertex counts never shrink except via filtering ops") {
    const TriMesh input = wall_fixture();
    const std::vector<EchoClassification> cls =
        load_classifications(kFixtures + "/wall_with_window_classified.txt");
    const TriMesh out = enhance(input, cls, {});
    CHECK(out.vertices.size() >= input.vertices.size());
    CHECK(out.faces.size() >= input.faces.size());
    for (size_t f = 0; f < out.faces.size(); ++f) CHECK(out.face_area(f) > 0.0);
}

TEST_CASE("classification records: parse errors carry line numbers") {
    CHECK_THROWS_AS(parse_classifications_text("state=closed depth=2\n", "inline"), Error);
    try {
        parse_classifications_text("frame=0 state=closed depth=2 material=glass\nbad token\n",
                                   "inline");
        CHECK(false);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("inline:2") != std::string::npos);
    }
    const auto recs = parse_classifications_text(
        "# comment\nframe=3 cam=1,2,3 dir=0,0,1 state=open prob=0.5 depth=1.5 material=mirror\n",
        "inline");
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].frame_id == 3);
    CHECK(recs[0].open_closed == OpenClosed::Open);
    CHECK(recs[0].material == "mirror");
}
