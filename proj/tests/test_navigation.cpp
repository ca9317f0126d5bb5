#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "grassbot/navigation.hpp"
#include "grassbot/rng.hpp"

using namespace grassbot;

namespace {

const Polygon kField{{0, 0}, {85.4, 0}, {85.4, 73}, {0, 73}};
const Polygon kEll{{0, 0}, {30, 0}, {30, 12}, {14, 12}, {14, 25}, {0, 25}};

// Per-pixel reference for the centre set.
std::vector<PixelPoint> brute_cent_set(const SegmentationFrame& f, const CameraModel& cam) {
    std::vector<PixelPoint> out;
    for (int v = cam.height / 2; v < cam.height; ++v) {
        std::vector<bool> pass(static_cast<std::size_t>(cam.width));
        for (int u = 0; u < cam.width; ++u) {
            bool ok = point_in_polygon(f.ground_contour, {double(u), double(v)});
            for (const auto& b : f.object_boxes) {
                if (u >= b.u_tl && u <= b.u_br && v >= b.v_tl && v <= b.v_br) ok = false;
            }
            pass[static_cast<std::size_t>(u)] = ok;
        }
        int best_w = 0;
        std::optional<PixelPoint> best;
        for (int u = 0; u < cam.width;) {
            if (!pass[static_cast<std::size_t>(u)]) {
                ++u;
                continue;
            }
            int e = u;
            while (e + 1 < cam.width && pass[static_cast<std::size_t>(e + 1)]) ++e;
            if (e - u > best_w) {
                best_w = e - u;
                best = PixelPoint{(u + e) / 2, v};
            }
            u = e + 1;
        }
        if (best) out.push_back(*best);
    }
    return out;
}

Polygon random_contour(Rng& rng) {
    const Vec2 c{rng.uniform(100, 540), rng.uniform(260, 460)};
    const int n = 3 + static_cast<int>(rng.index(12));
    Polygon p;
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * kPi * (k + rng.uniform(0.0, 0.8)) / n;
        const double r = rng.uniform(20, 400);
        p.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
    // Some vertices on exact integer coordinates to hit the edge cases.
    if (rng.bernoulli(0.5)) {
        for (auto& q : p) q = {std::round(q.x), std::round(q.y)};
    }
    return p;
}

OccupancyGrid grid_of(const Polygon& poly, double res = 0.25) {
    return OccupancyGrid::rasterize(poly, res);
}

SegmentationFrame trapezoid() {
    SegmentationFrame f;
    f.ground_contour = {{100, 479}, {539, 479}, {419, 240}, {220, 240}};
    return f;
}

}  // namespace

TEST(CentSet, MatchesPerPixelReference) {
    const CameraModel cam = CameraModel::standard();
    Rng rng(1234);
    for (int trial = 0; trial < 1000; ++trial) {
        SegmentationFrame f;
        f.ground_contour = random_contour(rng);
        const int boxes = static_cast<int>(rng.index(4));
        for (int k = 0; k < boxes; ++k) {
            const int u0 = static_cast<int>(rng.index(600));
            const int v0 = 200 + static_cast<int>(rng.index(260));
            f.object_boxes.push_back({k, u0, v0, u0 + static_cast<int>(rng.index(80)),
                                      std::min(479, v0 + static_cast<int>(rng.index(80)))});
        }
        const auto fast = compute_cent_set(f, cam);
        const auto slow = brute_cent_set(f, cam);
        ASSERT_EQ(fast, slow) << "trial " << trial;
    }
}

TEST(CentSet, OnePixelRunsNeverQualify) {
    const CameraModel cam = CameraModel::standard();
    SegmentationFrame f = trapezoid();
    f.object_boxes.push_back({0, 0, 240, 639, 479});
    EXPECT_TRUE(compute_cent_set(f, cam).empty());
}

TEST(Direction, SymmetricTrapezoidIsStraightAhead) {
    const CameraModel cam = CameraModel::standard();
    const GroundHomography hom = build_homography(cam);
    const DirectionResult d = find_optimal_direction(trapezoid(), hom, cam);
    // The crossing rule is half-open in v, so the bottom edge row is outside.
    EXPECT_EQ(d.cent.size(), 239u);
    EXPECT_LE(std::abs(d.heading), 0.02);
}

TEST(Direction, RightBlockedTurnsLeft) {
    const CameraModel cam = CameraModel::standard();
    const GroundHomography hom = build_homography(cam);
    SegmentationFrame f;
    f.ground_contour = {{0, 240}, {639, 240}, {639, 479}, {0, 479}};
    f.object_boxes.push_back({0, 320, 240, 639, 479});
    const DirectionResult d = find_optimal_direction(f, hom, cam);
    EXPECT_GT(d.heading, 0.0);
    // Mirrored frame turns the other way.
    f.object_boxes = {{0, 0, 240, 319, 479}};
    EXPECT_LT(find_optimal_direction(f, hom, cam).heading, 0.0);
}

TEST(Direction, EmptyContourHasNoDirection) {
    const CameraModel cam = CameraModel::standard();
    const GroundHomography hom = build_homography(cam);
    EXPECT_THROW(find_optimal_direction(SegmentationFrame{}, hom, cam), NavigationError);
}

TEST(ReturnHeading, AcceptedRayReentersTheField) {
    const Polygon sq{{0, 0}, {40, 0}, {40, 40}, {0, 40}};
    const OccupancyGrid grid = grid_of(sq);
    const Vec2 centroid = free_centroid(grid);
    const double lookahead = 2.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        const Pose2D pose{-rng.uniform(0.1, 1.0), rng.uniform(5, 35), rng.uniform(-kPi, kPi)};
        const ReturnDecision d = return_heading(grid, pose, rng, lookahead, centroid);
        ASSERT_FALSE(d.fallback) << seed;
        ASSERT_GE(d.attempts, 1);
        // Half-plane oracle: the heading must point into x > 0 and the point
        // `lookahead` past the crossing must lie inside the square.
        const double c = std::cos(d.heading);
        ASSERT_GT(c, 0.0) << seed;
        const double to_entry = -pose.x / c;
        const Vec2 far{pose.x + (to_entry + lookahead) * c,
                       pose.y + (to_entry + lookahead) * std::sin(d.heading)};
        ASSERT_TRUE(point_in_polygon(sq, far)) << seed;
    }
}

TEST(ReturnHeading, InsideAcceptsFirstSample) {
    const OccupancyGrid grid = grid_of(kField);
    const Vec2 c = free_centroid(grid);
    EXPECT_NEAR(c.x, 42.7, 0.2);
    EXPECT_NEAR(c.y, 36.5, 0.2);
    Rng rng(3);
    const ReturnDecision d = return_heading(grid, {c.x, c.y, 0.0}, rng, 2.0, c);
    EXPECT_EQ(d.attempts, 1);
    EXPECT_FALSE(d.fallback);
}

TEST(ReturnHeading, FallsBackToCentroidFromAPocket) {
    const OccupancyGrid grid = grid_of(kField);
    const Vec2 c = free_centroid(grid);
    Rng rng(3);
    const Pose2D pose{-10.0, c.y, 1.0};
    const ReturnDecision d = return_heading(grid, pose, rng, 2.0, c, 64);
    EXPECT_TRUE(d.fallback);
    EXPECT_EQ(d.attempts, 64);
    EXPECT_NEAR(d.heading, 0.0, 1e-12);
}

TEST(Coverage, LaneCounts) {
    auto lanes = [](const std::vector<Pose2D>& w) {
        std::set<double> ys;
        for (const auto& p : w) ys.insert(p.y);
        return ys.size();
    };
    const Polygon sq{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    EXPECT_EQ(lanes(coverage_waypoints(grid_of(sq), 2.0)), 5u);
    EXPECT_EQ(lanes(coverage_waypoints(grid_of(kField), 4.0)), 19u);
    EXPECT_THROW(coverage_waypoints(grid_of(sq), 0.0), NavigationError);
}

TEST(Coverage, LShapePathStaysFree) {
    const OccupancyGrid grid = grid_of(kEll);
    const auto w = coverage_waypoints(grid, footprint_width(CameraModel::standard(), 5.0));
    ASSERT_GT(w.size(), 4u);
    for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_TRUE(grid.free_at(w[i].position())) << i;
        if (i == 0) continue;
        const bool clear = grid.traverse(w[i - 1].position(), w[i].position(),
                                         [&](int a, int b) { return grid.at(a, b) == 1; });
        EXPECT_TRUE(clear) << i;
    }
}

TEST(Coverage, CameraFootprintCoversTheField) {
    const CameraModel cam = CameraModel::standard();
    const GroundHomography hom = build_homography(cam);
    const OccupancyGrid grid = grid_of(kField);
    const auto w = coverage_waypoints(grid, footprint_width(cam, 5.0));
    const Polygon view = visible_ground_region(cam, hom);

    // Coarse tally grid over the free cells.
    const double res = 0.5;
    const int nx = static_cast<int>(std::ceil(85.4 / res));
    const int ny = static_cast<int>(std::ceil(73.0 / res));
    std::vector<char> seen(static_cast<std::size_t>(nx * ny), 0);
    auto look = [&](Pose2D p) {
        const double c = std::cos(p.theta), s = std::sin(p.theta);
        Polygon world_view;
        double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
        for (Vec2 q : view) {
            const Vec2 g{p.x + c * q.x - s * q.y, p.y + s * q.x + c * q.y};
            world_view.push_back(g);
            x0 = std::min(x0, g.x);
            x1 = std::max(x1, g.x);
            y0 = std::min(y0, g.y);
            y1 = std::max(y1, g.y);
        }
        for (int j = std::max(0, int(y0 / res)); j <= std::min(ny - 1, int(y1 / res)); ++j) {
            for (int i = std::max(0, int(x0 / res)); i <= std::min(nx - 1, int(x1 / res)); ++i) {
                const Vec2 cc{(i + 0.5) * res, (j + 0.5) * res};
                if (point_in_polygon(world_view, cc)) seen[static_cast<std::size_t>(j * nx + i)] = 1;
            }
        }
    };
    double heading = w.front().theta;
    for (std::size_t k = 1; k < w.size(); ++k) {
        const Vec2 a = w[k - 1].position();
        const Vec2 b = w[k].position();
        const double h = std::atan2(b.y - a.y, b.x - a.x);
        // Turning in place at the waypoint.
        const double turn = normalize_angle(h - heading);
        const int steps = static_cast<int>(std::ceil(std::abs(turn) / 0.1));
        for (int t = 0; t <= steps; ++t) look({a.x, a.y, heading + (steps ? turn * t / steps : 0.0)});
        heading = h;
        const double len = norm(b - a);
        for (double d = 0.0; d <= len; d += 0.5) look({a.x + d * std::cos(h), a.y + d * std::sin(h), h});
        look({b.x, b.y, h});
    }
    std::size_t free_cells = 0, covered = 0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec2 cc{(i + 0.5) * res, (j + 0.5) * res};
            if (!grid.free_at(cc)) continue;
            ++free_cells;
            covered += seen[static_cast<std::size_t>(j * nx + i)];
        }
    }
    const double fraction = double(covered) / double(free_cells);
    RecordProperty("coverage", std::to_string(fraction));
    EXPECT_GE(fraction, 0.99);
}

TEST(AvoidStep, HoldsHeadingForEscapeDistance) {
    const AvoidParams p;
    NavState nav;
    AvoidStepResult r = avoid_step(nav, {0, 0, 0}, 3.0, 0.1, p);
    EXPECT_TRUE(r.done);
    EXPECT_EQ(r.command, Twist{});

    nav.committed_heading = 1.0;
    nav.avoid_distance_remaining = 1.5;
    r = avoid_step(nav, {0, 0, 0}, 3.0, 0.1, p);
    EXPECT_EQ(r.command.v, 0.0);
    EXPECT_GT(r.command.omega, 0.0);
    EXPECT_DOUBLE_EQ(nav.avoid_distance_remaining, 1.5);

    int ticks = 0;
    while (true) {
        r = avoid_step(nav, {0, 0, 1.0}, 3.0, 0.1, p);
        ++ticks;
        EXPECT_DOUBLE_EQ(r.command.v, p.v_max);
        if (r.done) break;
        ASSERT_LT(ticks, 100);
    }
    EXPECT_EQ(ticks, 30);
    EXPECT_FALSE(nav.committed_heading.has_value());

    nav.committed_heading = 0.0;
    nav.avoid_distance_remaining = 1.5;
    r = avoid_step(nav, {0, 0, 0}, 0.2, 0.1, p);
    EXPECT_TRUE(r.emergency);
    EXPECT_EQ(r.command, Twist{});
    EXPECT_DOUBLE_EQ(nav.avoid_distance_remaining, 1.5);
}

TEST(Dispatch, TotalAndWellFormed) {
    const std::array<std::optional<bool>, 3> recog{std::nullopt, false, true};
    const std::array<PickupOutcome, 4> outcomes{PickupOutcome::pending, PickupOutcome::success,
                                                PickupOutcome::retry, PickupOutcome::exhausted};
    int combos = 0;
    for (NavMode m : kAllNavModes) {
        for (int bits = 0; bits < 64; ++bits) {
            for (const auto& r : recog) {
                for (PickupOutcome po : outcomes) {
                    NavSignals s;
                    s.out_of_map = bits & 1;
                    s.objects_visible = bits & 2;
                    s.emergency = bits & 4;
                    s.target_arrived = bits & 8;
                    s.target_lost = bits & 16;
                    s.escape_done = bits & 32;
                    s.return_done = bits & 1 ? false : (bits & 32);
                    s.recognized_garbage = r;
                    s.pickup = po;
                    const NavMode next = dispatch(m, s);
                    ++combos;
                    ASSERT_NE(std::find(kAllNavModes.begin(), kAllNavModes.end(), next),
                              kAllNavModes.end());
                    if (next == NavMode::pickup) {
                        ASSERT_TRUE(m == NavMode::pickup ||
                                    (m == NavMode::recognize && r == std::optional<bool>(true)));
                    }
                    if (next == NavMode::recognize) {
                        ASSERT_TRUE(m == NavMode::recognize || (m == NavMode::track && s.target_arrived));
                    }
                    const bool halted = m == NavMode::recognize || m == NavMode::pickup;
                    if (s.out_of_map && !halted) { ASSERT_EQ(next, NavMode::return_to_map); }
                }
            }
        }
    }
    EXPECT_EQ(combos, 6 * 64 * 3 * 4);
}

TEST(PickupModel, TicksAndRules) {
    const PickupModel pm;
    EXPECT_EQ(pm.ticks(0.1), 14);
    EXPECT_EQ(pm.ticks(0.05), 28);
    EXPECT_EQ(pm.ticks(0.3), 5);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        EXPECT_FALSE(pm.attempt(rng, false, 0.1));
        EXPECT_FALSE(pm.attempt(rng, true, 1.5));
    }
}

namespace {

struct MiniSim {
    World world;
    CameraModel cam = CameraModel::standard();
    GroundHomography hom = build_homography(cam);
    std::unique_ptr<Navigator> nav;
    NavRngs rngs{Rng(1), Rng(2), Rng(3)};
    std::vector<NavMode> modes;
    std::vector<NavEvent> events;
    std::vector<Twist> commands;

    MiniSim(const Polygon& boundary, Pose2D start, CoverageStrategy strategy,
            const ConfusionModel& cm = ConfusionModel::identity()) {
        world.boundary = boundary;
        world.grid = OccupancyGrid::rasterize(boundary, 0.25);
        world.robot.pose = start;
        NavigationConfig cfg;
        cfg.strategy = strategy;
        nav = std::make_unique<Navigator>(world.grid, cam, hom, cm, cfg);
    }

    void tick() {
        const SegmentationFrame f = render_segmentation(world, world.robot.pose, cam, hom);
        Percept p{&f, noiseless_ultrasonic_range(world, world.robot.pose), false};
        NavOutput out = nav->step(world, world.robot.pose, p, rngs);
        for (const auto& e : out.events) {
            if (e.kind == EventKind::pickup_success && e.object_id) world.find(*e.object_id)->picked = true;
            events.push_back(e);
        }
        modes.push_back(nav->state().mode);
        commands.push_back(out.command);
        advance_robot(world, out.command, 0.1);
    }
};

WorldObject object_at(ObjectId id, Vec2 c, ObjectClass cls) {
    WorldObject o;
    o.id = id;
    o.center = c;
    o.true_class = cls;
    o.footprint_radius = 0.05;
    o.height = 0.2;
    return o;
}

}  // namespace

TEST(Navigator, OutsideMapStartsReturnWithRotation) {
    const Polygon sq{{0, 0}, {40, 0}, {40, 40}, {0, 40}};
    MiniSim sim(sq, {-1.0, 20.0, kPi}, CoverageStrategy::planned);
    sim.tick();
    EXPECT_EQ(sim.modes[0], NavMode::return_to_map);
    ASSERT_FALSE(sim.events.empty());
    EXPECT_EQ(sim.events[0].kind, EventKind::boundary_exit);
    const double err = normalize_angle(sim.nav->state().return_heading - kPi);
    if (std::abs(err) > sim.nav->config().return_align_tolerance) { EXPECT_EQ(sim.commands[0].v, 0.0); }
}

TEST(Navigator, ReturnDistanceNeverIncreases) {
    const Polygon sq{{0, 0}, {40, 0}, {40, 40}, {0, 40}};
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        MiniSim sim(sq, {-1.5, 20.0, kPi}, CoverageStrategy::planned);
        sim.rngs.navigation = Rng(seed);
        double prev = distance_to_polygon(sq, sim.world.robot.pose.position());
        for (int t = 0; t < 300; ++t) {
            sim.tick();
            if (sim.modes.back() != NavMode::return_to_map) break;
            const double d = distance_to_polygon(sq, sim.world.robot.pose.position());
            ASSERT_LE(d, prev + 1e-12) << seed << ' ' << t;
            prev = d;
        }
        EXPECT_EQ(distance_to_polygon(sq, sim.world.robot.pose.position()), 0.0) << seed;
    }
}

TEST(Navigator, VisibleBoxStartsTracking) {
    MiniSim sim(kField, {10, 10, 0}, CoverageStrategy::planned);
    sim.world.objects.push_back(object_at(4, {14, 10}, ObjectClass::can));
    sim.tick();
    EXPECT_EQ(sim.modes[0], NavMode::track);
    EXPECT_EQ(sim.nav->state().tracked_object_id, 4);
}

TEST(Navigator, NonGarbageIsAvoidedAndRemembered) {
    MiniSim sim(kField, {10, 10, 0}, CoverageStrategy::planned);
    sim.world.objects.push_back(object_at(9, {13, 10.2}, ObjectClass::shoes));
    bool avoided = false;
    for (int t = 0; t < 1000 && !avoided; ++t) {
        sim.tick();
        for (const auto& e : sim.events) {
            if (e.kind == EventKind::avoid && e.object_id == 9) avoided = true;
        }
    }
    ASSERT_TRUE(avoided);
    EXPECT_EQ(sim.modes.back(), NavMode::avoid);
    EXPECT_TRUE(sim.nav->state().obstacles.contains(9));
    EXPECT_FALSE(sim.world.objects[0].picked);
    // Recognition happened right before.
    const auto it = std::find(sim.modes.begin(), sim.modes.end(), NavMode::recognize);
    EXPECT_NE(it, sim.modes.end());
    EXPECT_EQ(std::find(sim.modes.begin(), sim.modes.end(), NavMode::pickup), sim.modes.end());
}

TEST(Navigator, PickupOnlyFollowsGarbageRecognition) {
    for (auto strategy : {CoverageStrategy::planned, CoverageStrategy::random}) {
        MiniSim sim({{0, 0}, {20, 0}, {20, 15}, {0, 15}}, {2, 2, 0}, strategy,
                    ConfusionModel::from_tables());
        Rng place(11);
        for (int k = 0; k < 12; ++k) {
            const auto cls = static_cast<ObjectClass>(place.index(kObjectClassCount));
            sim.world.objects.push_back(
                object_at(k, {place.uniform(3, 18), place.uniform(3, 13)}, cls));
        }
        for (int t = 0; t < 6000; ++t) sim.tick();
        int pickups = 0;
        for (std::size_t i = 1; i < sim.modes.size(); ++i) {
            if (sim.modes[i] == NavMode::pickup && sim.modes[i - 1] != NavMode::pickup) {
                ++pickups;
                EXPECT_EQ(sim.modes[i - 1], NavMode::recognize) << i;
            }
            if (sim.modes[i] == NavMode::recognize && sim.modes[i - 1] != NavMode::recognize) {
                EXPECT_EQ(sim.modes[i - 1], NavMode::track) << i;
            }
        }
        EXPECT_GT(pickups, 0);
        // Pickup and recognition hold the robot still.
        for (std::size_t i = 0; i < sim.modes.size(); ++i) {
            if (sim.modes[i] == NavMode::pickup || sim.modes[i] == NavMode::recognize) {
                EXPECT_EQ(sim.commands[i], Twist{}) << i;
            }
        }
    }
}
