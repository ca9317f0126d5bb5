#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace grassbot {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Wraps into (-pi, pi].
inline double normalize_angle(double a) {
    if (!std::isfinite(a)) return a;
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

using Polygon = std::vector<Vec2>;

// Crossing-number test. A point exactly on an edge may land on either side;
// callers that need consistency across code paths must use this function
// (or the identical crossing expression) everywhere.
inline bool point_in_polygon(std::span<const Vec2> poly, Vec2 p) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2 a = poly[i];
        const Vec2 b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) &&
            p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
            inside = !inside;
        }
    }
    return inside;
}

inline double polygon_area(std::span<const Vec2> poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) a += cross(poly[j], poly[i]);
    return 0.5 * a;
}

inline Vec2 polygon_centroid(std::span<const Vec2> poly) {
    const double area = polygon_area(poly);
    if (std::abs(area) < 1e-12) {
        Vec2 c;
        for (Vec2 p : poly) c = c + p;
        return (1.0 / static_cast<double>(poly.size())) * c;
    }
    double cx = 0.0;
    double cy = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double f = cross(poly[j], poly[i]);
        cx += (poly[j].x + poly[i].x) * f;
        cy += (poly[j].y + poly[i].y) * f;
    }
    return {cx / (6.0 * area), cy / (6.0 * area)};
}

inline double distance_to_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

// Distance to the polygon outline.
inline double distance_to_boundary(std::span<const Vec2> poly, Vec2 p) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        best = std::min(best, distance_to_segment(p, poly[j], poly[i]));
    }
    return best;
}

// Distance to the filled polygon; zero inside.
inline double distance_to_polygon(std::span<const Vec2> poly, Vec2 p) {
    return point_in_polygon(poly, p) ? 0.0 : distance_to_boundary(poly, p);
}

// Sutherland-Hodgman. `clip` must be convex and counter-clockwise; `subject`
// may be any simple polygon (non-convex subjects can yield zero-width bridges).
inline Polygon clip_polygon(std::span<const Vec2> subject, std::span<const Vec2> clip) {
    Polygon out(subject.begin(), subject.end());
    const std::size_t m = clip.size();
    for (std::size_t e = 0; e < m && !out.empty(); ++e) {
        const Vec2 c0 = clip[e];
        const Vec2 c1 = clip[(e + 1) % m];
        const Vec2 edge = c1 - c0;
        auto side = [&](Vec2 p) { return cross(edge, p - c0); };
        Polygon in = std::move(out);
        out.clear();
        for (std::size_t i = 0; i < in.size(); ++i) {
            const Vec2 cur = in[i];
            const Vec2 prev = in[(i + in.size() - 1) % in.size()];
            const double sc = side(cur);
            const double sp = side(prev);
            if (sc >= 0.0) {
                if (sp < 0.0) out.push_back(prev + (sp / (sp - sc)) * (cur - prev));
                out.push_back(cur);
            } else if (sp >= 0.0) {
                out.push_back(prev + (sp / (sp - sc)) * (cur - prev));
            }
        }
    }
    return out;
}

inline Polygon make_ccw(Polygon poly) {
    if (polygon_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
    return poly;
}

}  // namespace grassbot
