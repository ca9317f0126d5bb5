#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "grassbot/harness.hpp"
#include "grassbot/scenario.hpp"

namespace grassbot {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double csv_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
    return v;
}

inline int csv_int(const std::string& s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError("bad integer '" + s + "'");
    return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trace CSV: one row per tick. Lengths m, angles rad, speeds m/s and rad/s.

inline constexpr const char* kTraceHeader =
    "t_s,x_m,y_m,theta_rad,est_x_m,est_y_m,est_theta_rad,dr_x_m,dr_y_m,dr_theta_rad,"
    "mode,v_mps,omega_radps,picked,failed,remaining";

inline void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
    out << kTraceHeader << '\n';
    using detail::fmt_double;
    for (const auto& r : trace.ticks) {
        out << fmt_double(r.t) << ',' << fmt_double(r.truth.x) << ',' << fmt_double(r.truth.y)
            << ',' << fmt_double(r.truth.theta) << ',' << fmt_double(r.estimate.x) << ','
            << fmt_double(r.estimate.y) << ',' << fmt_double(r.estimate.theta) << ','
            << fmt_double(r.dead_reckoning.x) << ',' << fmt_double(r.dead_reckoning.y) << ','
            << fmt_double(r.dead_reckoning.theta) << ',' << to_string(r.mode) << ','
            << fmt_double(r.v) << ',' << fmt_double(r.omega) << ',' << r.picked << ','
            << r.failed << ',' << r.remaining << '\n';
    }
}

inline std::vector<TickRecord> read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) throw FormatError("missing trace header");
    std::vector<TickRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 16) throw FormatError("trace row needs 16 fields");
        TickRecord r;
        r.t = detail::csv_double(f[0]);
        r.truth = {detail::csv_double(f[1]), detail::csv_double(f[2]), detail::csv_double(f[3])};
        r.estimate = {detail::csv_double(f[4]), detail::csv_double(f[5]), detail::csv_double(f[6])};
        r.dead_reckoning = {detail::csv_double(f[7]), detail::csv_double(f[8]),
                            detail::csv_double(f[9])};
        const auto mode = parse_nav_mode(f[10]);
        if (!mode) throw FormatError("unknown mode '" + f[10] + "'");
        r.mode = *mode;
        r.v = detail::csv_double(f[11]);
        r.omega = detail::csv_double(f[12]);
        r.picked = detail::csv_int(f[13]);
        r.failed = detail::csv_int(f[14]);
        r.remaining = detail::csv_int(f[15]);
        out.push_back(r);
    }
    return out;
}

inline constexpr const char* kEventsHeader = "t_s,kind,object_id";

inline void write_events_csv(std::ostream& out, const EpisodeTrace& trace) {
    out << kEventsHeader << '\n';
    for (const auto& e : trace.events) {
        out << detail::fmt_double(e.t) << ',' << to_string(e.kind) << ',';
        if (e.object_id) out << *e.object_id;
        out << '\n';
    }
}

inline std::vector<EventRecord> read_events_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kEventsHeader) throw FormatError("missing events header");
    std::vector<EventRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 3) throw FormatError("event row needs 3 fields");
        EventRecord e;
        e.t = detail::csv_double(f[0]);
        const auto kind = parse_event_kind(f[1]);
        if (!kind) throw FormatError("unknown event kind '" + f[1] + "'");
        e.kind = *kind;
        if (!f[2].empty()) e.object_id = detail::csv_int(f[2]);
        out.push_back(e);
    }
    return out;
}

// One-line episode summary.
inline std::string summary_line(const EpisodeTrace& trace) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "scenario=%s seed=%llu mode=%s completed=%s completion_s=%.1f pickups=%d "
                  "failures=%zu abandoned=%d remaining=%d",
                  trace.scenario.c_str(), static_cast<unsigned long long>(trace.seed),
                  std::string(to_string(trace.mode)).c_str(), trace.completed ? "yes" : "no",
                  trace.completion_time, trace.picked(), trace.count(EventKind::pickup_failure),
                  trace.failed(), trace.remaining());
    return buf;
}

inline std::string trace_stem(const EpisodeTrace& trace) {
    return trace.scenario + "_" + std::string(to_string(trace.mode)) + "_seed" +
           std::to_string(trace.seed);
}

// Writes <stem>_trace.csv and <stem>_events.csv; returns the two paths.
inline std::pair<std::filesystem::path, std::filesystem::path> write_trace_files(
    const std::filesystem::path& dir, const EpisodeTrace& trace, const std::string& stem) {
    std::filesystem::create_directories(dir);
    const auto tp = dir / (stem + "_trace.csv");
    const auto ep = dir / (stem + "_events.csv");
    std::ofstream t(tp);
    std::ofstream e(ep);
    if (!t || !e) throw std::runtime_error("cannot write to " + dir.string());
    write_trace_csv(t, trace);
    write_events_csv(e, trace);
    return {tp, ep};
}

// ---------------------------------------------------------------------------
// Experiment report JSON

inline nlohmann::json to_json(const ExperimentReport& rep) {
    using nlohmann::json;
    json j;
    j["scenario"] = rep.scenario;
    j["budget_s"] = std::isfinite(rep.budget) ? json(rep.budget) : json(nullptr);
    j["sample_period_s"] = rep.sample_period;
    j["insufficient"] = rep.insufficient;
    if (rep.insufficient) j["note"] = "insufficient for aggregate claims";
    json eps = json::array();
    for (const auto& e : rep.episodes) {
        eps.push_back({{"garbage", e.garbage},
                       {"mode", to_string(e.mode)},
                       {"seed", e.seed},
                       {"completion_s", e.completion_time},
                       {"completed", e.completed},
                       {"picked", e.picked},
                       {"failed", e.failed},
                       {"remaining_curve", e.remaining_curve},
                       {"rmse_ekf_m", e.rmse_ekf},
                       {"rmse_dead_reckoning_m", e.rmse_dead_reckoning}});
    }
    j["episodes"] = eps;
    json cells = json::array();
    for (const auto& c : rep.cells) {
        cells.push_back({{"garbage", c.garbage},
                         {"mode", to_string(c.mode)},
                         {"episodes", c.episodes},
                         {"completed", c.completed},
                         {"mean_completion_s", c.mean_completion_time},
                         {"mean_remaining_curve", c.mean_remaining_curve}});
    }
    j["cells"] = cells;
    json cmp = json::array();
    for (const auto& m : rep.comparisons) {
        cmp.push_back({{"garbage", m.garbage},
                       {"planned_mean_s", m.planned_mean},
                       {"random_mean_s", m.random_mean},
                       {"ratio_random_over_planned", m.ratio},
                       {"planned_win_fraction", m.planned_win_fraction},
                       {"pairs", m.pairs}});
    }
    j["comparisons"] = cmp;
    return j;
}

inline CoverageStrategy json_strategy(const nlohmann::json& v) {
    const auto s = parse_strategy(v.get<std::string>());
    if (!s) throw FormatError("unknown mode in report");
    return *s;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
    ExperimentReport rep;
    try {
        rep.scenario = j.at("scenario").get<std::string>();
        rep.budget = j.at("budget_s").is_null() ? kUnlimitedBudget : j.at("budget_s").get<double>();
        rep.sample_period = j.at("sample_period_s").get<double>();
        rep.insufficient = j.at("insufficient").get<bool>();
        for (const auto& e : j.at("episodes")) {
            EpisodeSummary s;
            s.garbage = e.at("garbage").get<int>();
            s.mode = json_strategy(e.at("mode"));
            s.seed = e.at("seed").get<std::uint64_t>();
            s.completion_time = e.at("completion_s").get<double>();
            s.completed = e.at("completed").get<bool>();
            s.picked = e.at("picked").get<int>();
            s.failed = e.at("failed").get<int>();
            s.remaining_curve = e.at("remaining_curve").get<std::vector<int>>();
            s.rmse_ekf = e.at("rmse_ekf_m").get<double>();
            s.rmse_dead_reckoning = e.at("rmse_dead_reckoning_m").get<double>();
            rep.episodes.push_back(std::move(s));
        }
        for (const auto& c : j.at("cells")) {
            CellSummary s;
            s.garbage = c.at("garbage").get<int>();
            s.mode = json_strategy(c.at("mode"));
            s.episodes = c.at("episodes").get<int>();
            s.completed = c.at("completed").get<int>();
            s.mean_completion_time = c.at("mean_completion_s").get<double>();
            s.mean_remaining_curve = c.at("mean_remaining_curve").get<std::vector<double>>();
            rep.cells.push_back(std::move(s));
        }
        for (const auto& m : j.at("comparisons")) {
            ModeComparison c;
            c.garbage = m.at("garbage").get<int>();
            c.planned_mean = m.at("planned_mean_s").get<double>();
            c.random_mean = m.at("random_mean_s").get<double>();
            c.ratio = m.at("ratio_random_over_planned").get<double>();
            c.planned_win_fraction = m.at("planned_win_fraction").get<double>();
            c.pairs = m.at("pairs").get<int>();
            rep.comparisons.push_back(c);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
    return rep;
}

inline ExperimentReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    try {
        return report_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
}

// Two columns: time in minutes, mean remaining garbage.
inline void write_curve(std::ostream& out, const CellSummary& cell, double period) {
    out << "# garbage=" << cell.garbage << " mode=" << to_string(cell.mode) << '\n'
        << "# t_min remaining\n";
    for (std::size_t k = 0; k < cell.mean_remaining_curve.size(); ++k) {
        out << detail::fmt_double(k * period / 60.0) << ' '
            << detail::fmt_double(cell.mean_remaining_curve[k]) << '\n';
    }
}

inline std::vector<std::pair<double, double>> read_curve(std::istream& in) {
    std::vector<std::pair<double, double>> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string a, b;
        if (!(ls >> a >> b)) throw FormatError("curve row needs two columns");
        out.emplace_back(detail::csv_double(a), detail::csv_double(b));
    }
    return out;
}

inline std::string curve_filename(const CellSummary& cell) {
    return "curve_" + std::string(to_string(cell.mode)) + "_g" + std::to_string(cell.garbage) +
           ".dat";
}

}  // namespace grassbot
