#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grassbot/camera.hpp"
#include "grassbot/geometry.hpp"
#include "grassbot/localization.hpp"
#include "grassbot/navigation.hpp"
#include "grassbot/perception.hpp"
#include "grassbot/rng.hpp"
#include "grassbot/world.hpp"

namespace grassbot {

// Invalid scenario content. `field` names the offending key (or object).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct ObjectSpec {
    ObjectId id = 0;
    ObjectClass object_class = ObjectClass::bottle;
    Vec2 center;
    double radius = 0.05;
    double height = 0.1;
    double mass = 0.1;
    friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

struct ScenarioConfig {
    std::string name = "scenario";
    Polygon boundary = {{0.0, 0.0}, {30.0, 0.0}, {30.0, 25.0}, {0.0, 25.0}};
    double grid_resolution = 0.25;
    Pose2D start{2.0, 2.0, 0.0};
    double v_max = 0.5;
    double omega_max = 1.0;
    double dt = 0.1;
    CoverageStrategy mode = CoverageStrategy::planned;
    std::uint64_t seed = 1;

    // Explicit objects; when empty, `garbage_count` garbage items and
    // `distractor_count` distractors (about 10% of all objects if negative)
    // are placed from the seed.
    std::vector<ObjectSpec> objects;
    int garbage_count = 0;
    int distractor_count = -1;
    double placement_margin = 1.0;
    double placement_separation = 1.0;
    double start_clearance = 1.5;

    // Camera; tilt <= 0 derives it from the range.
    double camera_height = 0.4;
    double camera_hfov_deg = 60.0;
    double camera_range = 10.0;
    double camera_tilt_deg = 0.0;

    ConfusionModel classifier = ConfusionModel::from_tables();
    SensorNoise noise;
    UltrasonicParams ultrasonic{3.0, 0.01};
    double robot_radius = 0.2;

    double lookahead = 2.0;
    double escape_distance = 1.5;
    double emergency_range = 0.3;
    double lane_spacing = 0.0;
    double lane_inset = 1.0;
    PickupModel pickup;

    CameraModel camera() const {
        CameraModel cam = CameraModel::standard(640, 480, camera_hfov_deg * kPi / 180.0,
                                                camera_height, camera_range);
        if (camera_tilt_deg > 0.0) cam.tilt = camera_tilt_deg * kPi / 180.0;
        return cam;
    }

    NavigationConfig navigation() const {
        NavigationConfig n;
        n.strategy = mode;
        n.dt = dt;
        n.v_max = v_max;
        n.omega_max = omega_max;
        n.robot_radius = robot_radius;
        n.robot_front = robot_radius;
        n.lookahead = lookahead;
        n.escape_distance = escape_distance;
        n.emergency_range = emergency_range;
        n.lane_spacing = lane_spacing;
        n.lane_inset = lane_inset;
        n.pickup = pickup;
        return n;
    }
};

// ---------------------------------------------------------------------------
// Object generation

struct ObjectShape {
    double radius;
    double height;
    double mass;
};

inline ObjectShape nominal_shape(ObjectClass c) {
    switch (c) {
        case ObjectClass::bottle: return {0.035, 0.22, 0.05};
        case ObjectClass::can: return {0.033, 0.12, 0.02};
        case ObjectClass::carton: return {0.05, 0.15, 0.05};
        case ObjectClass::plastic_bag: return {0.10, 0.05, 0.01};
        case ObjectClass::waste_paper: return {0.06, 0.02, 0.005};
        case ObjectClass::cup: return {0.04, 0.10, 0.2};
        case ObjectClass::book: return {0.12, 0.04, 0.5};
        case ObjectClass::shoes: return {0.14, 0.10, 0.6};
        case ObjectClass::phone: return {0.07, 0.01, 0.2};
        case ObjectClass::bag: return {0.18, 0.25, 1.5};
        case ObjectClass::wallet: return {0.06, 0.02, 0.15};
    }
    return {0.05, 0.1, 0.1};
}

// Distractors make up 10% of all objects: d = G / 9, rounded.
inline int effective_distractor_count(const ScenarioConfig& cfg) {
    if (cfg.distractor_count >= 0) return cfg.distractor_count;
    return static_cast<int>(std::lround(cfg.garbage_count / 9.0));
}

// Rejection sampling inside the boundary, away from the edge, the start
// pose and each other. Deterministic in the seed.
inline std::vector<ObjectSpec> place_objects(const ScenarioConfig& cfg) {
    Rng rng = make_stream(cfg.seed, Stream::placement);
    double min_x = cfg.boundary[0].x, max_x = min_x, min_y = cfg.boundary[0].y, max_y = min_y;
    for (Vec2 p : cfg.boundary) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    std::vector<ObjectSpec> out;
    auto place = [&](ObjectClass c) {
        for (int attempt = 0; attempt < 100000; ++attempt) {
            const Vec2 p{rng.uniform(min_x, max_x), rng.uniform(min_y, max_y)};
            if (!point_in_polygon(cfg.boundary, p)) continue;
            if (distance_to_boundary(cfg.boundary, p) < cfg.placement_margin) continue;
            if (norm(p - cfg.start.position()) < cfg.start_clearance) continue;
            const bool crowded = std::any_of(out.begin(), out.end(), [&](const ObjectSpec& o) {
                return norm(o.center - p) < cfg.placement_separation;
            });
            if (crowded) continue;
            const ObjectShape s = nominal_shape(c);
            const double scale = rng.uniform(0.8, 1.2);
            ObjectSpec spec;
            spec.id = static_cast<ObjectId>(out.size() + 1);
            spec.object_class = c;
            spec.center = p;
            spec.radius = s.radius * scale;
            spec.height = s.height * scale;
            spec.mass = s.mass * scale * scale * scale;
            out.push_back(spec);
            return;
        }
        throw ConfigError("garbage.count", "could not place all objects; field too crowded");
    };
    for (int i = 0; i < cfg.garbage_count; ++i) {
        place(static_cast<ObjectClass>(rng.index(kGarbageClassCount)));
    }
    const int distractors = effective_distractor_count(cfg);
    for (int i = 0; i < distractors; ++i) {
        place(static_cast<ObjectClass>(kGarbageClassCount +
                                       rng.index(kObjectClassCount - kGarbageClassCount)));
    }
    return out;
}

inline std::vector<ObjectSpec> resolve_objects(const ScenarioConfig& cfg) {
    return cfg.objects.empty() ? place_objects(cfg) : cfg.objects;
}

// ---------------------------------------------------------------------------
// Text format
//
//   # comment
//   key = value [value ...]
//
// Lengths in metres, times in seconds, angles in the unit the key names
// (`_deg` or radians). `object` and `gps.outage_s` may repeat. Unknown keys
// are rejected.

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        const std::size_t j = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
        if (i > j) out.push_back(s.substr(j, i - j));
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view tok, const std::string& key) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw ConfigError(key, "expected a number, got '" + std::string(tok) + "'");
    }
    return v;
}

template <class Int>
Int parse_int(std::string_view tok, const std::string& key) {
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
        throw ConfigError(key, "expected an integer, got '" + std::string(tok) + "'");
    }
    return v;
}

inline std::vector<double> parse_doubles(std::string_view value, const std::string& key,
                                         std::size_t expected) {
    std::vector<double> out;
    for (auto tok : split_ws(value)) out.push_back(parse_double(tok, key));
    if (expected != 0 && out.size() != expected) {
        throw ConfigError(key, "expected " + std::to_string(expected) + " numbers, got " +
                                   std::to_string(out.size()));
    }
    return out;
}

inline double parse_scalar(std::string_view value, const std::string& key) {
    return parse_doubles(value, key, 1)[0];
}

struct KeyBinding {
    std::string key;
    std::function<void(ScenarioConfig&, std::string_view, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

inline KeyBinding scalar_key(std::string key, double ScenarioConfig::*member) {
    return {std::move(key),
            [member](ScenarioConfig& c, std::string_view v, const std::string& k) {
                c.*member = parse_scalar(v, k);
            },
            [member](const ScenarioConfig& c) { return fmt_double(c.*member); }};
}

template <class Get>
KeyBinding ref_key(std::string key, Get get) {
    return {std::move(key),
            [get](ScenarioConfig& c, std::string_view v, const std::string& k) {
                get(c) = parse_scalar(v, k);
            },
            [get](const ScenarioConfig& c) {
                return fmt_double(get(const_cast<ScenarioConfig&>(c)));
            }};
}

template <class Int, class Get>
KeyBinding int_key(std::string key, Get get) {
    return {std::move(key),
            [get](ScenarioConfig& c, std::string_view v, const std::string& k) {
                const auto toks = split_ws(v);
                if (toks.size() != 1) throw ConfigError(k, "expected one integer");
                get(c) = parse_int<Int>(toks[0], k);
            },
            [get](const ScenarioConfig& c) {
                return std::to_string(get(const_cast<ScenarioConfig&>(c)));
            }};
}

inline const std::vector<KeyBinding>& key_table() {
    static const std::vector<KeyBinding> table = [] {
        std::vector<KeyBinding> t;
        t.push_back({"name",
                     [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         if (v.empty()) throw ConfigError(k, "must not be empty");
                         c.name = std::string(v);
                     },
                     [](const ScenarioConfig& c) { return c.name; }});
        t.push_back({"mode",
                     [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         const auto m = parse_strategy(v);
                         if (!m) throw ConfigError(k, "expected 'planned' or 'random'");
                         c.mode = *m;
                     },
                     [](const ScenarioConfig& c) { return std::string(to_string(c.mode)); }});
        t.push_back(int_key<std::uint64_t>("seed", [](ScenarioConfig& c) -> auto& { return c.seed; }));
        t.push_back(scalar_key("dt_s", &ScenarioConfig::dt));
        t.push_back({"field.boundary_m",
                     [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         const auto xs = parse_doubles(v, k, 0);
                         if (xs.size() % 2 != 0) throw ConfigError(k, "odd number of coordinates");
                         c.boundary.clear();
                         for (std::size_t i = 0; i < xs.size(); i += 2) {
                             c.boundary.push_back({xs[i], xs[i + 1]});
                         }
                     },
                     [](const ScenarioConfig& c) {
                         std::string s;
                         for (Vec2 p : c.boundary) {
                             if (!s.empty()) s += ' ';
                             s += fmt_double(p.x) + ' ' + fmt_double(p.y);
                         }
                         return s;
                     }});
        t.push_back(scalar_key("grid.resolution_m", &ScenarioConfig::grid_resolution));
        t.push_back({"robot.start",
                     [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         const auto xs = parse_doubles(v, k, 3);
                         c.start = {xs[0], xs[1], xs[2]};
                     },
                     [](const ScenarioConfig& c) {
                         return fmt_double(c.start.x) + ' ' + fmt_double(c.start.y) + ' ' +
                                fmt_double(c.start.theta);
                     }});
        t.push_back(scalar_key("robot.v_max_mps", &ScenarioConfig::v_max));
        t.push_back(scalar_key("robot.omega_max_radps", &ScenarioConfig::omega_max));
        t.push_back(scalar_key("robot.radius_m", &ScenarioConfig::robot_radius));
        t.push_back(int_key<int>("garbage.count", [](ScenarioConfig& c) -> auto& { return c.garbage_count; }));
        t.push_back(int_key<int>("distractors.count", [](ScenarioConfig& c) -> auto& { return c.distractor_count; }));
        t.push_back(scalar_key("placement.margin_m", &ScenarioConfig::placement_margin));
        t.push_back(scalar_key("placement.separation_m", &ScenarioConfig::placement_separation));
        t.push_back(scalar_key("placement.start_clearance_m", &ScenarioConfig::start_clearance));
        t.push_back(scalar_key("camera.height_m", &ScenarioConfig::camera_height));
        t.push_back(scalar_key("camera.hfov_deg", &ScenarioConfig::camera_hfov_deg));
        t.push_back(scalar_key("camera.range_m", &ScenarioConfig::camera_range));
        t.push_back(scalar_key("camera.tilt_deg", &ScenarioConfig::camera_tilt_deg));
        t.push_back(ref_key("classifier.threshold", [](ScenarioConfig& c) -> auto& { return c.classifier.threshold; }));
        t.push_back({"classifier.match_conf",
                     [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         const auto xs = parse_doubles(v, k, 2);
                         c.classifier.match_conf_lo = xs[0];
                         c.classifier.match_conf_hi = xs[1];
                     },
                     [](const ScenarioConfig& c) {
                         return fmt_double(c.classifier.match_conf_lo) + ' ' +
                                fmt_double(c.classifier.match_conf_hi);
                     }});
        t.push_back({"classifier.mismatch_conf",
                     [](ScenarioConfig& c, std::string_view v, const std::string& k) {
                         const auto xs = parse_doubles(v, k, 2);
                         c.classifier.mismatch_conf_lo = xs[0];
                         c.classifier.mismatch_conf_hi = xs[1];
                     },
                     [](const ScenarioConfig& c) {
                         return fmt_double(c.classifier.mismatch_conf_lo) + ' ' +
                                fmt_double(c.classifier.mismatch_conf_hi);
                     }});
        for (std::size_t i = 0; i < kObjectClassCount; ++i) {
            const auto cls = static_cast<ObjectClass>(i);
            auto row_of = [cls](ScenarioConfig& c) -> ConfusionRow& {
                return const_cast<ConfusionRow&>(c.classifier.row(cls));
            };
            t.push_back({"classifier.row." + std::string(kObjectClassNames[i]),
                         [row_of](ScenarioConfig& c, std::string_view v, const std::string& k) {
                             const auto xs = parse_doubles(v, k, kPredictedClassCount);
                             std::copy(xs.begin(), xs.end(), row_of(c).begin());
                         },
                         [row_of](const ScenarioConfig& c) {
                             std::string s;
                             for (double p : row_of(const_cast<ScenarioConfig&>(c))) {
                                 if (!s.empty()) s += ' ';
                                 s += fmt_double(p);
                             }
                             return s;
                         }});
        }
        t.push_back(ref_key("odometry.sigma_v_mps", [](ScenarioConfig& c) -> auto& { return c.noise.odom_sigma_v; }));
        t.push_back(ref_key("odometry.sigma_omega_radps", [](ScenarioConfig& c) -> auto& { return c.noise.odom_sigma_omega; }));
        t.push_back(ref_key("gps.sigma_m", [](ScenarioConfig& c) -> auto& { return c.noise.gps_sigma; }));
        t.push_back(ref_key("gps.period_s", [](ScenarioConfig& c) -> auto& { return c.noise.gps_period; }));
        t.push_back(ref_key("ultrasonic.max_range_m", [](ScenarioConfig& c) -> auto& { return c.ultrasonic.max_range; }));
        t.push_back(ref_key("ultrasonic.sigma_m", [](ScenarioConfig& c) -> auto& { return c.ultrasonic.sigma; }));
        t.push_back(scalar_key("nav.lookahead_m", &ScenarioConfig::lookahead));
        t.push_back(scalar_key("nav.escape_m", &ScenarioConfig::escape_distance));
        t.push_back(scalar_key("nav.emergency_range_m", &ScenarioConfig::emergency_range));
        t.push_back(scalar_key("nav.lane_spacing_m", &ScenarioConfig::lane_spacing));
        t.push_back(scalar_key("nav.lane_inset_m", &ScenarioConfig::lane_inset));
        t.push_back(ref_key("pickup.duration_s", [](ScenarioConfig& c) -> auto& { return c.pickup.duration; }));
        t.push_back(ref_key("pickup.success_probability", [](ScenarioConfig& c) -> auto& { return c.pickup.success_probability; }));
        t.push_back(int_key<int>("pickup.max_attempts", [](ScenarioConfig& c) -> auto& { return c.pickup.max_attempts; }));
        t.push_back(ref_key("pickup.reach_m", [](ScenarioConfig& c) -> auto& { return c.pickup.reach; }));
        return t;
    }();
    return table;
}

inline ObjectSpec parse_object_line(std::string_view value, int line_no) {
    const std::string where = "object (line " + std::to_string(line_no) + ")";
    const auto toks = split_ws(value);
    if (toks.size() != 7) {
        throw ConfigError(where, "expected 'id class x_m y_m radius_m height_m mass_kg'");
    }
    ObjectSpec o;
    o.id = parse_int<int>(toks[0], where);
    const std::string field = "object " + std::to_string(o.id);
    const auto cls = parse_object_class(toks[1]);
    if (!cls) throw ConfigError(field, "unknown class '" + std::string(toks[1]) + "'");
    o.object_class = *cls;
    o.center = {parse_double(toks[2], field), parse_double(toks[3], field)};
    o.radius = parse_double(toks[4], field);
    o.height = parse_double(toks[5], field);
    o.mass = parse_double(toks[6], field);
    return o;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(std::istream& in) {
    ScenarioConfig cfg;
    std::set<std::string> seen;
    bool outages_reset = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no), "expected 'key = value'");
        }
        const std::string key(detail::trim(s.substr(0, eq)));
        const std::string_view value = detail::trim(s.substr(eq + 1));
        if (key == "object") {
            cfg.objects.push_back(detail::parse_object_line(value, line_no));
            continue;
        }
        if (key == "gps.outage_s") {
            if (!outages_reset) cfg.noise.gps_outages.clear();
            outages_reset = true;
            const auto xs = detail::parse_doubles(value, key, 2);
            cfg.noise.gps_outages.push_back({xs[0], xs[1]});
            continue;
        }
        const auto& table = detail::key_table();
        const auto it = std::find_if(table.begin(), table.end(),
                                     [&](const detail::KeyBinding& b) { return b.key == key; });
        if (it == table.end()) throw ConfigError(key, "unknown key");
        if (!seen.insert(key).second) throw ConfigError(key, "given more than once");
        it->set(cfg, value, key);
    }
    return cfg;
}

inline ScenarioConfig parse_scenario_string(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario", "cannot open '" + path + "'");
    return parse_scenario(in);
}

// Writes every key; values use 17 significant digits so parsing the output
// reproduces the configuration exactly.
inline void write_scenario(std::ostream& out, const ScenarioConfig& cfg) {
    out << "# grassbot scenario: lengths m, times s, speeds m/s and rad/s,\n"
           "# robot.start = x_m y_m theta_rad\n"
           "# object = id class x_m y_m radius_m height_m mass_kg\n";
    for (const auto& b : detail::key_table()) out << b.key << " = " << b.get(cfg) << '\n';
    for (const auto& w : cfg.noise.gps_outages) {
        out << "gps.outage_s = " << detail::fmt_double(w.start) << ' ' << detail::fmt_double(w.end)
            << '\n';
    }
    for (const auto& o : cfg.objects) {
        out << "object = " << o.id << ' ' << to_string(o.object_class) << ' '
            << detail::fmt_double(o.center.x) << ' ' << detail::fmt_double(o.center.y) << ' '
            << detail::fmt_double(o.radius) << ' ' << detail::fmt_double(o.height) << ' '
            << detail::fmt_double(o.mass) << '\n';
    }
}

inline std::string scenario_to_string(const ScenarioConfig& cfg) {
    std::ostringstream out;
    write_scenario(out, cfg);
    return out.str();
}

// ---------------------------------------------------------------------------
// Validation and world construction

inline void validate(const ScenarioConfig& cfg) {
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be a positive number");
    };
    auto non_negative = [](double v, const char* key) {
        if (!(v >= 0.0)) throw ConfigError(key, "must be non-negative");
    };
    positive(cfg.dt, "dt_s");
    positive(cfg.grid_resolution, "grid.resolution_m");
    positive(cfg.v_max, "robot.v_max_mps");
    positive(cfg.omega_max, "robot.omega_max_radps");
    positive(cfg.robot_radius, "robot.radius_m");
    if (cfg.boundary.size() < 3) throw ConfigError("field.boundary_m", "needs at least 3 vertices");
    if (!(std::abs(polygon_area(cfg.boundary)) > 0.0)) {
        throw ConfigError("field.boundary_m", "polygon has zero area");
    }
    if (cfg.garbage_count < 0) throw ConfigError("garbage.count", "must be non-negative");
    if (!cfg.objects.empty() && (cfg.garbage_count > 0 || cfg.distractor_count > 0)) {
        throw ConfigError("garbage.count", "cannot be combined with explicit objects");
    }
    non_negative(cfg.placement_margin, "placement.margin_m");
    non_negative(cfg.placement_separation, "placement.separation_m");
    non_negative(cfg.start_clearance, "placement.start_clearance_m");

    try {
        cfg.camera().validate();
    } catch (const GeometryError& e) {
        throw ConfigError("camera", e.what());
    }
    try {
        cfg.classifier.validate();
    } catch (const ClassifierError& e) {
        throw ConfigError("classifier", e.what());
    }

    non_negative(cfg.noise.odom_sigma_v, "odometry.sigma_v_mps");
    non_negative(cfg.noise.odom_sigma_omega, "odometry.sigma_omega_radps");
    positive(cfg.noise.gps_sigma, "gps.sigma_m");
    positive(cfg.noise.gps_period, "gps.period_s");
    for (const auto& w : cfg.noise.gps_outages) {
        if (!(w.start < w.end)) throw ConfigError("gps.outage_s", "start must precede end");
    }
    positive(cfg.ultrasonic.max_range, "ultrasonic.max_range_m");
    non_negative(cfg.ultrasonic.sigma, "ultrasonic.sigma_m");
    positive(cfg.lookahead, "nav.lookahead_m");
    positive(cfg.escape_distance, "nav.escape_m");
    non_negative(cfg.emergency_range, "nav.emergency_range_m");
    non_negative(cfg.lane_spacing, "nav.lane_spacing_m");
    non_negative(cfg.lane_inset, "nav.lane_inset_m");
    positive(cfg.pickup.duration, "pickup.duration_s");
    if (!(cfg.pickup.success_probability >= 0.0 && cfg.pickup.success_probability <= 1.0)) {
        throw ConfigError("pickup.success_probability", "must lie in [0, 1]");
    }
    if (cfg.pickup.max_attempts < 1) throw ConfigError("pickup.max_attempts", "must be at least 1");
    positive(cfg.pickup.reach, "pickup.reach_m");

    const OccupancyGrid grid = OccupancyGrid::rasterize(cfg.boundary, cfg.grid_resolution);
    if (!point_in_polygon(cfg.boundary, cfg.start.position()) || !grid.free_at(cfg.start.position())) {
        throw ConfigError("robot.start", "start pose is outside the field boundary");
    }
    std::set<ObjectId> ids;
    for (const auto& o : cfg.objects) {
        const std::string field = "object " + std::to_string(o.id);
        if (!ids.insert(o.id).second) throw ConfigError(field, "duplicate object id");
        if (!point_in_polygon(cfg.boundary, o.center)) {
            throw ConfigError(field, "object " + std::to_string(o.id) +
                                         " lies outside the field boundary");
        }
        if (!grid.free_at(o.center)) {
            throw ConfigError(field, "object " + std::to_string(o.id) + " is not on a free cell");
        }
        if (!(o.radius > 0.0) || !(o.height > 0.0) || !(o.mass >= 0.0)) {
            throw ConfigError(field, "radius and height must be positive, mass non-negative");
        }
    }
}

inline int garbage_total(const std::vector<ObjectSpec>& objects) {
    return static_cast<int>(std::count_if(objects.begin(), objects.end(), [](const ObjectSpec& o) {
        return is_garbage_class(o.object_class);
    }));
}

inline World build_world(const ScenarioConfig& cfg) {
    World w;
    w.boundary = cfg.boundary;
    w.grid = OccupancyGrid::rasterize(cfg.boundary, cfg.grid_resolution);
    for (const auto& o : resolve_objects(cfg)) {
        WorldObject obj;
        obj.id = o.id;
        obj.center = o.center;
        obj.footprint_radius = o.radius;
        obj.height = o.height;
        obj.true_class = o.object_class;
        obj.mass = o.mass;
        w.objects.push_back(obj);
    }
    w.robot.pose = cfg.start;
    w.params.robot_radius = cfg.robot_radius;
    w.params.ultrasonic = cfg.ultrasonic;
    return w;
}

}  // namespace grassbot
