#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "grassbot/perception.hpp"
#include "grassbot/scenario.hpp"

namespace grassbot {

// Segmentation frame as text, pixel units (u right, v down, origin top-left):
//
//   # comment
//   vertex u v                      ground contour, in order
//   box id u_tl v_tl u_br v_br      inclusive object box
//
// Malformed lines raise ConfigError naming the line.
inline SegmentationFrame parse_frame(std::istream& in) {
    SegmentationFrame frame;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto toks = detail::split_ws(line);
        if (toks.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        if (toks[0] == "vertex") {
            if (toks.size() != 3) throw ConfigError(where, "expected 'vertex u v'");
            frame.ground_contour.push_back(
                {detail::parse_double(toks[1], where), detail::parse_double(toks[2], where)});
        } else if (toks[0] == "box") {
            if (toks.size() != 6) throw ConfigError(where, "expected 'box id u_tl v_tl u_br v_br'");
            ObjectBox b;
            b.object_id = detail::parse_int<int>(toks[1], where);
            b.u_tl = detail::parse_int<int>(toks[2], where);
            b.v_tl = detail::parse_int<int>(toks[3], where);
            b.u_br = detail::parse_int<int>(toks[4], where);
            b.v_br = detail::parse_int<int>(toks[5], where);
            if (b.u_tl > b.u_br || b.v_tl > b.v_br) throw ConfigError(where, "box corners out of order");
            frame.object_boxes.push_back(b);
        } else {
            throw ConfigError(where, "unknown record '" + std::string(toks[0]) + "'");
        }
    }
    return frame;
}

inline SegmentationFrame load_frame(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("frame", "cannot open '" + path + "'");
    return parse_frame(in);
}

inline void write_frame(std::ostream& out, const SegmentationFrame& frame) {
    out << "# segmentation frame, pixels: u right, v down\n";
    for (Vec2 p : frame.ground_contour) {
        out << "vertex " << detail::fmt_double(p.x) << ' ' << detail::fmt_double(p.y) << '\n';
    }
    for (const auto& b : frame.object_boxes) {
        out << "box " << b.object_id << ' ' << b.u_tl << ' ' << b.v_tl << ' ' << b.u_br << ' '
            << b.v_br << '\n';
    }
}

}  // namespace grassbot
