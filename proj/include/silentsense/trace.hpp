#pragma once

// Event and trace data model, JSON-lines trace I/O, and gesture typing.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core.hpp"

namespace silentsense {

enum class Gesture { Tap, Scroll, Fling };
enum class Scenario { Static, Walking };

inline constexpr std::array<Gesture, 3> kGestures{Gesture::Tap, Gesture::Scroll, Gesture::Fling};

inline std::string_view to_string(Gesture g) {
    switch (g) {
        case Gesture::Tap: return "tap";
        case Gesture::Scroll: return "scroll";
        case Gesture::Fling: return "fling";
    }
    return "?";
}

inline std::string_view to_string(Scenario s) { return s == Scenario::Static ? "static" : "walking"; }

inline std::optional<Gesture> gesture_from_string(std::string_view s) {
    for (Gesture g : kGestures)
        if (to_string(g) == s) return g;
    return std::nullopt;
}

inline std::optional<Scenario> scenario_from_string(std::string_view s) {
    if (s == "static") return Scenario::Static;
    if (s == "walking") return Scenario::Walking;
    return std::nullopt;
}

struct TouchPoint {
    std::int64_t t = 0;  // ms
    double x = 0, y = 0;  // px
    int pressure = 0;     // device level
    double area = 0;
    friend bool operator==(const TouchPoint&, const TouchPoint&) = default;
};

struct TouchEvent {
    std::int64_t id = 0;
    std::string app;
    std::int64_t t_down = 0, t_up = 0;
    std::vector<TouchPoint> points;

    std::int64_t duration_ms() const { return t_up - t_down; }
    friend bool operator==(const TouchEvent&, const TouchEvent&) = default;
};

struct ImuSample {
    std::int64_t t = 0;  // ms
    Vec3 accel;          // m/s^2, device axes
    Vec3 gyro;           // rad/s, device axes
    friend bool operator==(const ImuSample&, const ImuSample&) = default;
};

struct ImuSeries {
    double fs = 100.0;  // nominal rate, Hz
    std::vector<ImuSample> samples;

    bool empty() const { return samples.empty(); }
    std::size_t size() const { return samples.size(); }
    double period_ms() const { return 1000.0 / fs; }

    /// Index of the first sample with t >= time.
    std::size_t lower_index(std::int64_t time) const {
        auto it = std::lower_bound(samples.begin(), samples.end(), time,
                                   [](const ImuSample& s, std::int64_t v) { return s.t < v; });
        return static_cast<std::size_t>(it - samples.begin());
    }

    /// Samples with t in [from, to] (inclusive).
    std::span<const ImuSample> window(std::int64_t from, std::int64_t to) const {
        const std::size_t a = lower_index(from);
        std::size_t b = lower_index(to);
        while (b < samples.size() && samples[b].t <= to) ++b;
        if (b < a) b = a;
        return {samples.data() + a, b - a};
    }

    friend bool operator==(const ImuSeries&, const ImuSeries&) = default;
};

struct AppEvent {
    std::int64_t t = 0;
    std::string app;
    bool sensitive = false;
    friend bool operator==(const AppEvent&, const AppEvent&) = default;
};

/// Ground-truth interval [t_start, t_end].
struct Label {
    std::int64_t t_start = 0, t_end = 0;
    std::string user;
    Scenario scenario = Scenario::Static;

    bool contains(std::int64_t a, std::int64_t b) const { return t_start <= a && b <= t_end; }
    friend bool operator==(const Label&, const Label&) = default;
};

/// Device facts that the raw streams do not carry. Written only when they differ from the defaults.
struct TraceMeta {
    int screen_w = 1080, screen_h = 1800;  // px
    int pressure_levels = 64;              // pressure reported as integer level in [0, pressure_levels]
    double touch_rate_hz = 0.0;            // touch point sampling rate, 0 = unknown
    friend bool operator==(const TraceMeta&, const TraceMeta&) = default;
};

struct SessionTrace {
    TraceMeta meta;
    ImuSeries imu;
    std::vector<TouchEvent> touches;
    std::vector<AppEvent> app_events;
    std::vector<Label> labels;

    /// Label covering the touch, if any.
    const Label* label_for(const TouchEvent& e) const {
        for (const auto& l : labels)
            if (l.contains(e.t_down, e.t_up)) return &l;
        return nullptr;
    }

    friend bool operator==(const SessionTrace&, const SessionTrace&) = default;
};

// ---------------------------------------------------------------------------
// Canonical number formatting

/// Fixed 6-decimal rendering used by every writer in the project. Negative zero prints as zero.
inline std::string format_fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    if (std::string_view(buf) == "-0.000000") return "0.000000";
    return buf;
}

/// The value a writer/parser round trip produces for `v`.
inline double canonical(double v) { return std::strtod(format_fixed(v).c_str(), nullptr); }

inline Vec3 canonical(Vec3 v) { return {canonical(v.x), canonical(v.y), canonical(v.z)}; }

// ---------------------------------------------------------------------------
// Validation

inline void validate(const TouchEvent& e) {
    const std::string where = "touch " + std::to_string(e.id) + ": ";
    if (e.t_up < e.t_down) throw ValidationError(where + "t_up >= t_down violated");
    if (e.points.empty()) throw ValidationError(where + "points must be non-empty");
    if (e.app.empty()) throw ValidationError(where + "app must be non-empty");
    std::int64_t prev = e.t_down;
    for (const auto& p : e.points) {
        if (p.t < prev) throw ValidationError(where + "point timestamps must be non-decreasing");
        if (p.t > e.t_up) throw ValidationError(where + "point timestamps must lie within [t_down, t_up]");
        if (p.pressure < 0) throw ValidationError(where + "pressure >= 0 violated");
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.area))
            throw ValidationError(where + "point coordinates must be finite");
        prev = p.t;
    }
}

inline void validate(const ImuSeries& imu) {
    if (!(imu.fs > 0)) throw ValidationError("imu: nominal rate must be positive");
    const double max_gap = 3.0 * imu.period_ms();
    for (std::size_t i = 0; i < imu.samples.size(); ++i) {
        const auto& s = imu.samples[i];
        if (!is_finite(s.accel) || !is_finite(s.gyro))
            throw ValidationError("imu t=" + std::to_string(s.t) + ": components must be finite");
        if (i > 0) {
            const auto dt = s.t - imu.samples[i - 1].t;
            if (dt <= 0)
                throw ValidationError("imu t=" + std::to_string(s.t) + ": timestamps must be strictly increasing");
            if (static_cast<double>(dt) > max_gap)
                throw ValidationError("imu t=" + std::to_string(s.t) + ": gap exceeds 3 sample periods");
        }
    }
}

inline void validate(const SessionTrace& tr) {
    validate(tr.imu);
    for (const auto& e : tr.touches) validate(e);
    for (const auto& a : tr.app_events)
        if (a.app.empty()) throw ValidationError("app event t=" + std::to_string(a.t) + ": app must be non-empty");
    for (std::size_t i = 0; i < tr.labels.size(); ++i) {
        const auto& l = tr.labels[i];
        if (l.t_end < l.t_start) throw ValidationError("label: t_end >= t_start violated");
        if (i > 0 && l.t_start < tr.labels[i - 1].t_end)
            throw ValidationError("label intervals must be non-overlapping");
    }
    for (const auto& e : tr.touches)
        if (!tr.label_for(e))
            throw ValidationError("touch " + std::to_string(e.id) + ": must fall inside a label interval");
}

// ---------------------------------------------------------------------------
// JSONL writer

namespace detail {

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string json_vec(Vec3 v) {
    return "[" + format_fixed(v.x) + "," + format_fixed(v.y) + "," + format_fixed(v.z) + "]";
}

inline std::string meta_line(const TraceMeta& m, double fs) {
    std::ostringstream o;
    o << R"({"kind":"meta","imu_rate_hz":)" << format_fixed(fs) << R"(,"screen_w":)" << m.screen_w
      << R"(,"screen_h":)" << m.screen_h << R"(,"pressure_levels":)" << m.pressure_levels
      << R"(,"touch_rate_hz":)" << format_fixed(m.touch_rate_hz) << "}";
    return o.str();
}

inline std::string label_line(const Label& l) {
    return R"({"kind":"label","t_start":)" + std::to_string(l.t_start) + R"(,"t_end":)" + std::to_string(l.t_end) +
           R"(,"user":)" + json_string(l.user) + R"(,"scenario":")" + std::string(to_string(l.scenario)) + "\"}";
}

inline std::string app_line(const AppEvent& a) {
    return R"({"kind":"app","t":)" + std::to_string(a.t) + R"(,"app":)" + json_string(a.app) +
           R"(,"sensitive":)" + (a.sensitive ? "true" : "false") + "}";
}

inline std::string touch_line(const TouchEvent& e) {
    std::string s = R"({"kind":"touch","id":)" + std::to_string(e.id) + R"(,"app":)" + json_string(e.app) +
                    R"(,"t_down":)" + std::to_string(e.t_down) + R"(,"t_up":)" + std::to_string(e.t_up) +
                    R"(,"points":[)";
    for (std::size_t i = 0; i < e.points.size(); ++i) {
        const auto& p = e.points[i];
        if (i) s += ",";
        s += "[" + std::to_string(p.t) + "," + format_fixed(p.x) + "," + format_fixed(p.y) + "," +
             std::to_string(p.pressure) + "," + format_fixed(p.area) + "]";
    }
    return s + "]}";
}

inline std::string imu_line(const ImuSample& s) {
    return R"({"kind":"imu","t":)" + std::to_string(s.t) + R"(,"accel":)" + json_vec(s.accel) + R"(,"gyro":)" +
           json_vec(s.gyro) + "}";
}

}  // namespace detail

/// Streams the trace as canonical JSON lines, records merged in time order
/// (ties: label, app, touch, imu).
inline void write_trace(const SessionTrace& tr, std::ostream& out) {
    if (tr.meta != TraceMeta{} || tr.imu.fs != 100.0) out << detail::meta_line(tr.meta, tr.imu.fs) << '\n';
    std::size_t il = 0, ia = 0, it = 0, ii = 0;
    const auto& L = tr.labels;
    const auto& A = tr.app_events;
    const auto& T = tr.touches;
    const auto& I = tr.imu.samples;
    constexpr auto kNone = std::numeric_limits<std::int64_t>::max();
    while (il < L.size() || ia < A.size() || it < T.size() || ii < I.size()) {
        const std::int64_t tl = il < L.size() ? L[il].t_start : kNone;
        const std::int64_t ta = ia < A.size() ? A[ia].t : kNone;
        const std::int64_t tt = it < T.size() ? T[it].t_down : kNone;
        const std::int64_t ti = ii < I.size() ? I[ii].t : kNone;
        const std::int64_t m = std::min({tl, ta, tt, ti});
        if (tl == m) out << detail::label_line(L[il++]) << '\n';
        else if (ta == m) out << detail::app_line(A[ia++]) << '\n';
        else if (tt == m) out << detail::touch_line(T[it++]) << '\n';
        else out << detail::imu_line(I[ii++]) << '\n';
    }
}

inline void write_trace(const SessionTrace& tr, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    write_trace(tr, f);
    if (!f) throw std::runtime_error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// JSONL parser

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key, std::size_t line) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
    return *it;
}

inline std::int64_t get_int(const nlohmann::json& j, const char* key, std::size_t line) {
    const auto& v = field(j, key, line);
    if (!v.is_number_integer()) throw ParseError(std::string("field \"") + key + "\" must be an integer", line);
    return v.get<std::int64_t>();
}

inline double get_num(const nlohmann::json& v, const char* what, std::size_t line) {
    if (!v.is_number()) throw ParseError(std::string(what) + " must be a number", line);
    return v.get<double>();
}

inline std::string get_str(const nlohmann::json& j, const char* key, std::size_t line) {
    const auto& v = field(j, key, line);
    if (!v.is_string()) throw ParseError(std::string("field \"") + key + "\" must be a string", line);
    return v.get<std::string>();
}

inline Vec3 get_vec3(const nlohmann::json& j, const char* key, std::size_t line) {
    const auto& v = field(j, key, line);
    if (!v.is_array() || v.size() != 3) throw ParseError(std::string("field \"") + key + "\" must be [x,y,z]", line);
    return {get_num(v[0], key, line), get_num(v[1], key, line), get_num(v[2], key, line)};
}

}  // namespace detail

/// Parses and validates a JSONL trace stream.
inline SessionTrace parse_trace(std::istream& in) {
    using detail::get_int;
    using detail::get_num;
    using detail::get_str;
    SessionTrace tr;
    std::string text;
    std::size_t line = 0;
    bool seen_record = false;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line);
        }
        if (!j.is_object()) throw ParseError("record must be a JSON object", line);
        const std::string kind = get_str(j, "kind", line);
        if (kind == "meta") {
            if (seen_record) throw ParseError("meta record must come first", line);
            tr.imu.fs = get_num(detail::field(j, "imu_rate_hz", line), "imu_rate_hz", line);
            tr.meta.screen_w = static_cast<int>(get_int(j, "screen_w", line));
            tr.meta.screen_h = static_cast<int>(get_int(j, "screen_h", line));
            tr.meta.pressure_levels = static_cast<int>(get_int(j, "pressure_levels", line));
            tr.meta.touch_rate_hz = get_num(detail::field(j, "touch_rate_hz", line), "touch_rate_hz", line);
        } else if (kind == "imu") {
            tr.imu.samples.push_back(
                {get_int(j, "t", line), detail::get_vec3(j, "accel", line), detail::get_vec3(j, "gyro", line)});
        } else if (kind == "touch") {
            TouchEvent e;
            e.id = get_int(j, "id", line);
            e.app = get_str(j, "app", line);
            e.t_down = get_int(j, "t_down", line);
            e.t_up = get_int(j, "t_up", line);
            const auto& pts = detail::field(j, "points", line);
            if (!pts.is_array()) throw ParseError("field \"points\" must be an array", line);
            for (const auto& p : pts) {
                if (!p.is_array() || p.size() != 5 || !p[0].is_number_integer() || !p[3].is_number_integer())
                    throw ParseError("touch point must be [t,x,y,pressure,area]", line);
                e.points.push_back({p[0].get<std::int64_t>(), get_num(p[1], "x", line), get_num(p[2], "y", line),
                                    p[3].get<int>(), get_num(p[4], "area", line)});
            }
            tr.touches.push_back(std::move(e));
        } else if (kind == "app") {
            const auto& s = detail::field(j, "sensitive", line);
            if (!s.is_boolean()) throw ParseError("field \"sensitive\" must be a boolean", line);
            tr.app_events.push_back({get_int(j, "t", line), get_str(j, "app", line), s.get<bool>()});
        } else if (kind == "label") {
            auto sc = scenario_from_string(get_str(j, "scenario", line));
            if (!sc) throw ParseError("scenario must be \"static\" or \"walking\"", line);
            tr.labels.push_back({get_int(j, "t_start", line), get_int(j, "t_end", line), get_str(j, "user", line), *sc});
        } else {
            throw ParseError("unknown record kind \"" + kind + "\"", line);
        }
        seen_record = true;
    }
    auto by = [](auto key) { return [key](const auto& a, const auto& b) { return key(a) < key(b); }; };
    std::stable_sort(tr.imu.samples.begin(), tr.imu.samples.end(), by([](const ImuSample& s) { return s.t; }));
    std::stable_sort(tr.touches.begin(), tr.touches.end(), by([](const TouchEvent& e) { return e.t_down; }));
    std::stable_sort(tr.app_events.begin(), tr.app_events.end(), by([](const AppEvent& a) { return a.t; }));
    std::stable_sort(tr.labels.begin(), tr.labels.end(), by([](const Label& l) { return l.t_start; }));
    validate(tr);
    return tr;
}

inline SessionTrace parse_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open trace file " + path);
    return parse_trace(f);
}

// ---------------------------------------------------------------------------
// Gesture typing

struct GestureThresholds {
    double tap_max_path_px = 10.0;
    double tap_max_duration_ms = 300.0;
    double fling_min_speed_px_s = 1000.0;
};

inline double path_length(const TouchEvent& e) {
    double len = 0.0;
    for (std::size_t i = 1; i < e.points.size(); ++i)
        len += std::hypot(e.points[i].x - e.points[i - 1].x, e.points[i].y - e.points[i - 1].y);
    return len;
}

inline Gesture classify_gesture(const TouchEvent& e, const GestureThresholds& th = {}) {
    const double path = path_length(e);
    const double duration = static_cast<double>(e.duration_ms());
    if (path < th.tap_max_path_px && duration < th.tap_max_duration_ms) return Gesture::Tap;
    const double speed = duration > 0 ? path / (duration / 1000.0) : std::numeric_limits<double>::infinity();
    return speed > th.fling_min_speed_px_s ? Gesture::Fling : Gesture::Scroll;
}

}  // namespace silentsense
