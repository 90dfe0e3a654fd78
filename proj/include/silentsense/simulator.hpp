#pragma once

// Deterministic synthetic sessions: per-user behavioural profiles, touch gestures with the
// device reaction they cause, walking gait, and scripted multi-user sessions with ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "trace.hpp"

namespace silentsense::sim {

inline constexpr double kScreenW = 1080.0;
inline constexpr double kScreenH = 1800.0;

/// mt19937_64 with distribution code of our own so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }
    double normal(double mean, double sd) { return mean + sd * normal(); }

    std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n))); }
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0;
};

// ---------------------------------------------------------------------------
// Profiles

struct TouchParams {
    double duration_mean = 0, duration_std = 0;  // ms
    double pressure_mean = 0, pressure_std = 0;  // levels
    double cx = 0, cy = 0;                       // coordinate centre, px
    double sx = 0, sy = 0, rho = 0;              // coordinate spread and correlation
    double speed_mean = 0, speed_std = 0;        // px/s, unused for taps
};

struct GaitParams {
    double step_hz = 2.0;
    double displacement_m = 0.04;  // vertical peak-to-trough per step
    double forward_amp = 0.8;      // m/s^2 at the step frequency
    double sway_amp = 0.5;         // m/s^2 at half the step frequency
    double jitter = 0.0;           // relative per-step amplitude variation
    double forward_phase = 0.0;    // rad, relative to the vertical bounce; a property of the gait
    double sway_phase = 0.0;       // rad
};

struct UserProfile {
    std::string user_id;
    std::array<TouchParams, 3> touch;  // indexed by Gesture
    std::array<double, 3> gesture_mix{0.5, 0.3, 0.2};
    double pivot_x = 0, pivot_y = 0;  // holding point, px
    double reaction_gain = 0;         // m/s^2 per px of pivot distance at pressure level 20
    double rotation_gain = 0;         // rad/s per px of pivot distance at pressure level 20
    GaitParams gait;
    double accel_noise = 0.01;  // m/s^2 per axis
    double gyro_noise = 0.002;  // rad/s per axis
    double walking_spread = 2.0;  // multiplier on touch spreads while walking

    const TouchParams& params(Gesture g) const { return touch[static_cast<std::size_t>(g)]; }
};

enum class Archetype { Default, Noiseless, LowerLeftGrip };

inline std::optional<Archetype> archetype_from_string(std::string_view s) {
    if (s == "default") return Archetype::Default;
    if (s == "noiseless") return Archetype::Noiseless;
    if (s == "lower_left_grip") return Archetype::LowerLeftGrip;
    return std::nullopt;
}

inline std::string_view to_string(Archetype a) {
    switch (a) {
        case Archetype::Default: return "default";
        case Archetype::Noiseless: return "noiseless";
        case Archetype::LowerLeftGrip: return "lower_left_grip";
    }
    return "?";
}

inline void check_profile(const UserProfile& p) {
    for (const auto& t : p.touch)
        if (t.duration_std < 0 || t.pressure_std < 0 || t.sx < 0 || t.sy < 0 || t.speed_std < 0)
            throw ValidationError("profile " + p.user_id + ": spreads must be >= 0");
    if (p.reaction_gain < 0 || p.rotation_gain < 0 || p.accel_noise < 0 || p.gyro_noise < 0 || p.gait.jitter < 0)
        throw ValidationError("profile " + p.user_id + ": gains and noise must be >= 0");
    if (p.gait.step_hz < 1.0 || p.gait.step_hz > 3.0)
        throw ValidationError("profile " + p.user_id + ": step frequency must lie in [1, 3] Hz");
    if (p.pivot_x < 0 || p.pivot_x > kScreenW || p.pivot_y < 0 || p.pivot_y > kScreenH)
        throw ValidationError("profile " + p.user_id + ": pivot must lie on the screen");
}

/// Samples a user. Mean durations: taps 70-200 ms, scrolls 200-1200 ms, flings 80-250 ms;
/// mean pressure levels 2-40.
inline UserProfile gen_profile(std::uint64_t seed, Archetype archetype = Archetype::Default) {
    Rng r(seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL);
    UserProfile p;
    p.user_id = "user" + std::to_string(seed);

    const double pressure = r.uniform(2.0, 40.0);
    auto& tap = p.touch[0];
    tap.duration_mean = r.uniform(70.0, 200.0);
    tap.duration_std = r.uniform(10.0, 25.0);
    tap.pressure_mean = pressure;
    tap.pressure_std = r.uniform(1.0, 2.5);
    tap.cx = r.uniform(200.0, 880.0);
    tap.cy = r.uniform(400.0, 1500.0);
    tap.sx = r.uniform(50.0, 140.0);
    tap.sy = r.uniform(50.0, 140.0);
    tap.rho = r.uniform(-0.4, 0.4);

    auto& scroll = p.touch[1];
    scroll.duration_mean = r.uniform(200.0, 1200.0);
    scroll.duration_std = scroll.duration_mean * r.uniform(0.08, 0.15);
    scroll.pressure_mean = std::clamp(pressure * r.uniform(0.8, 1.2), 2.0, 40.0);
    scroll.pressure_std = r.uniform(1.0, 2.5);
    scroll.cx = r.uniform(300.0, 780.0);
    scroll.cy = r.uniform(700.0, 1100.0);
    scroll.sx = r.uniform(40.0, 110.0);
    scroll.sy = r.uniform(40.0, 110.0);
    scroll.rho = r.uniform(-0.3, 0.3);
    scroll.speed_mean = r.uniform(150.0, 600.0);
    scroll.speed_std = scroll.speed_mean * 0.12;

    auto& fling = p.touch[2];
    fling.duration_mean = r.uniform(80.0, 250.0);
    fling.duration_std = fling.duration_mean * r.uniform(0.08, 0.15);
    fling.pressure_mean = std::clamp(pressure * r.uniform(0.8, 1.2), 2.0, 40.0);
    fling.pressure_std = r.uniform(1.0, 2.5);
    fling.cx = r.uniform(300.0, 780.0);
    fling.cy = r.uniform(700.0, 1100.0);
    fling.sx = r.uniform(40.0, 110.0);
    fling.sy = r.uniform(40.0, 110.0);
    fling.rho = r.uniform(-0.3, 0.3);
    fling.speed_mean = r.uniform(1600.0, 3500.0);
    fling.speed_std = fling.speed_mean * 0.12;

    const double w_tap = r.uniform(0.4, 0.6), w_scroll = r.uniform(0.2, 0.35);
    p.gesture_mix = {w_tap, w_scroll, 1.0 - w_tap - w_scroll};

    p.pivot_x = r.uniform(0.0, kScreenW);
    p.pivot_y = r.uniform(1000.0, kScreenH);
    p.reaction_gain = r.uniform(0.5e-4, 1.5e-4);
    p.rotation_gain = r.uniform(1.0e-5, 4.0e-5);

    p.gait.step_hz = r.uniform(1.6, 2.4);
    p.gait.displacement_m = r.uniform(0.025, 0.06);
    p.gait.forward_amp = r.uniform(0.3, 1.5);
    p.gait.sway_amp = r.uniform(0.2, 1.0);
    p.gait.jitter = r.uniform(0.02, 0.06);
    p.gait.forward_phase = r.uniform(0.0, 2.0 * std::numbers::pi);
    p.gait.sway_phase = r.uniform(0.0, 2.0 * std::numbers::pi);

    switch (archetype) {
        case Archetype::Default: break;
        case Archetype::Noiseless:
            p.accel_noise = 0;
            p.gyro_noise = 0;
            p.gait.jitter = 0;
            break;
        case Archetype::LowerLeftGrip:
            p.pivot_x = 80.0;
            p.pivot_y = 1700.0;
            break;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Touches and reactions

struct SynthOptions {
    std::int64_t t_down = 1000;
    bool walking = false;
    Mat3 device_to_earth{};  // device attitude; identity = screen facing up
};

inline Vec3 clamp_to_screen(Vec3 c, double margin = 20.0) {
    return {std::clamp(c.x, margin, kScreenW - margin), std::clamp(c.y, margin, kScreenH - margin), 0.0};
}

/// Draws a touch coordinate from the user's per-gesture distribution.
inline Vec3 sample_coordinate(const UserProfile& p, Gesture g, Rng& rng, bool walking = false) {
    const auto& tp = p.params(g);
    const double k = walking ? p.walking_spread : 1.0;
    const double z1 = rng.normal(), z2 = rng.normal();
    const double x = tp.cx + k * tp.sx * z1;
    const double y = tp.cy + k * tp.sy * (tp.rho * z1 + std::sqrt(1.0 - tp.rho * tp.rho) * z2);
    return clamp_to_screen({x, y, 0});
}

/// One touch gesture around `coord`, timestamps starting at `t_down`.
inline TouchEvent synth_touch(const UserProfile& p, Gesture g, Vec3 coord, std::int64_t t_down, Rng& rng,
                              bool walking = false) {
    const auto& tp = p.params(g);
    const double k = walking ? p.walking_spread : 1.0;
    TouchEvent e;
    e.t_down = t_down;

    double d = rng.normal(tp.duration_mean, tp.duration_std * k);
    switch (g) {
        case Gesture::Tap: d = std::clamp(d, 30.0, 280.0); break;
        case Gesture::Scroll: d = std::clamp(d, 150.0, 2000.0); break;
        case Gesture::Fling: d = std::clamp(d, 50.0, 400.0); break;
    }
    const auto dur = static_cast<std::int64_t>(std::llround(d));
    e.t_up = t_down + dur;

    const int level = static_cast<int>(std::clamp(std::lround(rng.normal(tp.pressure_mean, tp.pressure_std * k)), 1L, 64L));
    auto point_pressure = [&] { return std::clamp(level + static_cast<int>(rng.index(3)) - 1, 1, 64); };
    auto area = [&](int lv) { return canonical(std::max(0.0, 0.02 * lv + rng.normal(0.0, 0.01))); };

    if (g == Gesture::Tap) {
        const double jx = std::clamp(rng.normal(0.0, 1.5), -3.0, 3.0), jy = std::clamp(rng.normal(0.0, 1.5), -3.0, 3.0);
        const int p0 = point_pressure(), p1 = point_pressure();
        e.points.push_back({e.t_down, canonical(coord.x), canonical(coord.y), p0, area(p0)});
        e.points.push_back({e.t_up, canonical(coord.x + jx), canonical(coord.y + jy), p1, area(p1)});
        return e;
    }

    double speed = rng.normal(tp.speed_mean, tp.speed_std * k);
    speed = g == Gesture::Scroll ? std::clamp(speed, 100.0, 900.0) : std::clamp(speed, 1200.0, 6000.0);
    const double path = std::min(speed * d / 1000.0, 1400.0);
    const double angle = (rng.bernoulli(0.5) ? 0.5 : 1.5) * std::numbers::pi + rng.uniform(-0.25, 0.25);
    const Vec3 dir{std::cos(angle), std::sin(angle), 0};
    Vec3 a = coord - (path / 2) * dir, b = coord + (path / 2) * dir;
    // Shift the stroke back onto the screen if it overhangs.
    const Vec3 lo{std::min(a.x, b.x), std::min(a.y, b.y), 0}, hi{std::max(a.x, b.x), std::max(a.y, b.y), 0};
    const Vec3 shift{std::max(0.0, 5.0 - lo.x) - std::max(0.0, hi.x - (kScreenW - 5.0)),
                     std::max(0.0, 5.0 - lo.y) - std::max(0.0, hi.y - (kScreenH - 5.0)), 0};
    a += shift;
    b += shift;
    for (std::int64_t t = e.t_down;; t += 10) {
        const std::int64_t tc = std::min(t, e.t_up);
        const double u = dur > 0 ? static_cast<double>(tc - e.t_down) / static_cast<double>(dur) : 1.0;
        const Vec3 q = a + u * (b - a);
        const int lv = point_pressure();
        e.points.push_back({tc, canonical(q.x), canonical(q.y), lv, area(lv)});
        if (tc == e.t_up) break;
    }
    return e;
}

inline Vec3 centroid(const TouchEvent& e) {
    Vec3 c;
    for (const auto& p : e.points) c += Vec3{p.x, p.y, 0};
    return (1.0 / static_cast<double>(e.points.size())) * c;
}

inline double mean_pressure(const TouchEvent& e) {
    double s = 0;
    for (const auto& p : e.points) s += p.pressure;
    return s / static_cast<double>(e.points.size());
}

/// Reaction window used by the injection model: the mean perturbation is defined over
/// [t_down, t_up + kReactionTailMs].
inline constexpr std::int64_t kReactionTailMs = 50;

inline double vibration_factor(Gesture g) { return g == Gesture::Tap ? 1.0 : g == Gesture::Scroll ? 0.5 : 0.8; }
inline double rotation_factor(Gesture g) { return g == Gesture::Tap ? 1.0 : 0.3; }

/// Mean acceleration perturbation injected for a touch: gain * |coord - pivot| * pressure/20.
inline double injected_vibration(const UserProfile& p, const TouchEvent& e, Gesture g) {
    const Vec3 c = centroid(e);
    return p.reaction_gain * std::hypot(c.x - p.pivot_x, c.y - p.pivot_y) * (mean_pressure(e) / 20.0) *
           vibration_factor(g);
}

inline double injected_rotation(const UserProfile& p, const TouchEvent& e, Gesture g) {
    const Vec3 c = centroid(e);
    return p.rotation_gain * std::hypot(c.x - p.pivot_x, c.y - p.pivot_y) * (mean_pressure(e) / 20.0) *
           rotation_factor(g);
}

/// Adds the half-sine reaction pulse of `e` to device-frame samples. Amplitudes are normalised on
/// the actual sample grid so the mean over the reaction window equals the injected value exactly.
inline void add_reaction(std::span<ImuSample> samples, const UserProfile& p, const TouchEvent& e, Gesture g) {
    const double vib = injected_vibration(p, e, g), rot = injected_rotation(p, e, g);
    const double dur = static_cast<double>(e.duration_ms());
    auto shape = [&](std::int64_t t) {
        if (t < e.t_down || t > e.t_up || dur <= 0) return 0.0;
        return std::sin(std::numbers::pi * static_cast<double>(t - e.t_down) / dur);
    };
    double sum = 0;
    std::size_t count = 0;
    for (const auto& s : samples)
        if (s.t >= e.t_down && s.t <= e.t_up + kReactionTailMs) {
            sum += shape(s.t);
            ++count;
        }
    if (count == 0 || sum <= 0) return;
    const double a_acc = vib * static_cast<double>(count) / sum;
    const double a_rot = rot * static_cast<double>(count) / sum;
    const Vec3 c = centroid(e);
    Vec3 r{c.x - p.pivot_x, c.y - p.pivot_y, 0};
    const double rn = norm(r);
    const Vec3 axis = rn > 0 ? Vec3{-r.y / rn, r.x / rn, 0} : Vec3{1, 0, 0};
    for (auto& s : samples) {
        const double k = shape(s.t);
        if (k == 0) continue;
        s.accel += Vec3{0, 0, a_acc * k};
        s.gyro += (a_rot * k) * axis;
    }
}

/// A single touch with the IMU segment around it, covering [t_down - 200, t_up + 200] ms at 100 Hz.
inline std::pair<TouchEvent, ImuSeries> synth_touch_reaction(const UserProfile& p, Gesture g, Vec3 coord, Rng& rng,
                                                             const SynthOptions& opt = {}) {
    TouchEvent e = synth_touch(p, g, coord, opt.t_down, rng, opt.walking);
    e.app = "app";
    ImuSeries imu;
    const Vec3 g_dev = opt.device_to_earth.transposed() * Vec3{0, 0, kGravity};
    const std::int64_t t0 = ((e.t_down - 200) / 10) * 10 - ((e.t_down - 200) % 10 < 0 ? 10 : 0);
    for (std::int64_t t = t0; t <= e.t_up + 200; t += 10) {
        ImuSample s{t, g_dev, {}};
        imu.samples.push_back(s);
    }
    add_reaction(imu.samples, p, e, g);
    for (auto& s : imu.samples) {
        s.accel = canonical(s.accel + Vec3{rng.normal(0, p.accel_noise), rng.normal(0, p.accel_noise),
                                           rng.normal(0, p.accel_noise)});
        s.gyro = canonical(s.gyro + Vec3{rng.normal(0, p.gyro_noise), rng.normal(0, p.gyro_noise),
                                         rng.normal(0, p.gyro_noise)});
    }
    return {std::move(e), std::move(imu)};
}

// ---------------------------------------------------------------------------
// Walking

/// Vertical acceleration amplitude whose double integral has the given peak-to-trough displacement.
inline double vertical_amplitude(double step_hz, double displacement_m) {
    const double w = 2.0 * std::numbers::pi * step_hz;
    return displacement_m * w * w / 2.0;
}

/// Earth-frame linear acceleration of a walker, continuous in time from the start of walking.
class GaitGenerator {
public:
    GaitGenerator(const GaitParams& gait, Rng& rng)
        : gait_(gait), rng_(&rng), amp_(vertical_amplitude(gait.step_hz, gait.displacement_m)),
          heading_(rng.uniform(0.0, 2.0 * std::numbers::pi)) {}

    /// Linear acceleration (north, east, up) at `tau` seconds since walking began.
    Vec3 at(double tau) {
        const double f = gait_.step_hz;
        const auto step = static_cast<std::size_t>(std::max(0.0, std::floor(f * tau)));
        while (step_gain_.size() <= step) step_gain_.push_back(1.0 + gait_.jitter * rng_->normal());
        const double v = amp_ * step_gain_[step] * std::sin(2.0 * std::numbers::pi * f * tau);
        const double fwd = gait_.forward_amp * std::sin(2.0 * std::numbers::pi * f * tau + gait_.forward_phase);
        const double sway = gait_.sway_amp * std::sin(std::numbers::pi * f * tau + gait_.sway_phase);
        const double c = std::cos(heading_), s = std::sin(heading_);
        return {fwd * c - sway * s, fwd * s + sway * c, v};
    }

private:
    GaitParams gait_;
    Rng* rng_;
    double amp_;
    double heading_;
    std::vector<double> step_gain_;
};

/// n_steps of walking: n_steps / f seconds sampled at fs, starting at t0.
inline ImuSeries synth_walk(const UserProfile& p, int n_steps, Rng& rng, const SynthOptions& opt = {},
                            double fs = 100.0) {
    if (n_steps < 1) throw ValidationError("synth_walk: n_steps must be >= 1");
    ImuSeries imu;
    imu.fs = fs;
    GaitGenerator gait(p.gait, rng);
    const Mat3 to_device = opt.device_to_earth.transposed();
    const auto n = static_cast<std::size_t>(std::llround(n_steps / p.gait.step_hz * fs));
    const auto period = static_cast<std::int64_t>(std::llround(1000.0 / fs));
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = static_cast<double>(i) / fs;
        const Vec3 lin = gait.at(tau);
        Vec3 a = to_device * (lin + Vec3{0, 0, kGravity});
        a += Vec3{rng.normal(0, p.accel_noise), rng.normal(0, p.accel_noise), rng.normal(0, p.accel_noise)};
        const Vec3 w{rng.normal(0, p.gyro_noise), rng.normal(0, p.gyro_noise), rng.normal(0, p.gyro_noise)};
        imu.samples.push_back({opt.t_down + static_cast<std::int64_t>(i) * period, canonical(a), canonical(w)});
    }
    return imu;
}

/// Attitude tilted by `angle` about a horizontal axis at `azimuth`.
inline Mat3 tilt(double azimuth, double angle) { return axis_angle({std::cos(azimuth), std::sin(azimuth), 0}, angle); }

// ---------------------------------------------------------------------------
// Scripts and sessions

struct UserSpec {
    std::string id;
    std::uint64_t seed = 0;
    Archetype archetype = Archetype::Default;
};

struct Segment {
    std::string user;
    std::string app = "app";
    bool sensitive = false;
    Scenario scenario = Scenario::Static;
    int count = 1;  // touch actions
};

struct SessionScript {
    std::uint64_t seed = 0;
    std::vector<UserSpec> users;
    std::vector<Segment> segments;
};

using ProfileMap = std::map<std::string, UserProfile>;

inline ProfileMap make_profiles(const SessionScript& s) {
    ProfileMap m;
    for (const auto& u : s.users) {
        auto p = gen_profile(u.seed, u.archetype);
        p.user_id = u.id;
        m.emplace(u.id, std::move(p));
    }
    return m;
}

inline SessionScript script_from_json(const nlohmann::json& j) {
    SessionScript s;
    try {
        s.seed = j.value("seed", std::uint64_t{0});
        for (const auto& u : j.at("users")) {
            UserSpec spec{u.at("id").get<std::string>(), u.at("seed").get<std::uint64_t>(), Archetype::Default};
            auto a = archetype_from_string(u.value("archetype", std::string("default")));
            if (!a) throw ParseError("unknown archetype for user " + spec.id);
            spec.archetype = *a;
            s.users.push_back(spec);
        }
        for (const auto& g : j.at("segments")) {
            Segment seg;
            seg.user = g.at("user").get<std::string>();
            seg.app = g.value("app", std::string("app"));
            seg.sensitive = g.value("sensitive", false);
            auto sc = scenario_from_string(g.value("scenario", std::string("static")));
            if (!sc) throw ParseError("segment scenario must be \"static\" or \"walking\"");
            seg.scenario = *sc;
            seg.count = g.at("count").get<int>();
            s.segments.push_back(seg);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("script: ") + e.what());
    }
    return s;
}

inline nlohmann::json to_json(const SessionScript& s) {
    nlohmann::json j;
    j["seed"] = s.seed;
    j["users"] = nlohmann::json::array();
    for (const auto& u : s.users)
        j["users"].push_back({{"id", u.id}, {"seed", u.seed}, {"archetype", std::string(to_string(u.archetype))}});
    j["segments"] = nlohmann::json::array();
    for (const auto& g : s.segments)
        j["segments"].push_back({{"user", g.user}, {"app", g.app}, {"sensitive", g.sensitive},
                                 {"scenario", std::string(silentsense::to_string(g.scenario))}, {"count", g.count}});
    return j;
}

inline void validate(const SessionScript& s, const ProfileMap& profiles) {
    for (const auto& g : s.segments) {
        if (g.count < 1) throw ValidationError("script: segment counts must be >= 1");
        if (g.app.empty()) throw ValidationError("script: segment app must be non-empty");
        if (!profiles.count(g.user)) throw ValidationError("script: unknown user_id \"" + g.user + "\"");
    }
    for (const auto& [id, p] : profiles) check_profile(p);
}

inline Gesture sample_gesture(const UserProfile& p, Rng& rng) {
    const double u = rng.uniform();
    if (u < p.gesture_mix[0]) return Gesture::Tap;
    if (u < p.gesture_mix[0] + p.gesture_mix[1]) return Gesture::Scroll;
    return Gesture::Fling;
}

/// Renders a script into a full trace. Segments are laid end to end on one 100 Hz IMU clock; each
/// gets its own device tilt (<= 30 degrees), a lead-in without touches, and a ground-truth label.
inline SessionTrace gen_session(const SessionScript& script, const ProfileMap& profiles) {
    validate(script, profiles);
    Rng rng(script.seed);
    SessionTrace tr;
    constexpr std::int64_t kPeriod = 10;
    std::int64_t t = 0;
    std::int64_t next_id = 0;
    for (const auto& seg : script.segments) {
        const auto& p = profiles.at(seg.user);
        const bool walking = seg.scenario == Scenario::Walking;
        const Mat3 attitude = tilt(rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(0.0, std::numbers::pi / 6));
        const Mat3 to_device = attitude.transposed();
        const std::int64_t start = t;
        tr.app_events.push_back({start, seg.app, seg.sensitive});

        std::int64_t cursor = start + (walking ? 2500 : 1500);
        std::vector<std::pair<TouchEvent, Gesture>> touches;
        for (int i = 0; i < seg.count; ++i) {
            const Gesture g = sample_gesture(p, rng);
            const Vec3 c = sample_coordinate(p, g, rng, walking);
            TouchEvent e = synth_touch(p, g, c, cursor, rng, walking);
            e.id = next_id++;
            e.app = seg.app;
            const double gap = walking ? rng.uniform(1.0, 1.8) * 1000.0 / p.gait.step_hz : rng.uniform(600.0, 1400.0);
            cursor = e.t_up + static_cast<std::int64_t>(std::llround(gap));
            touches.emplace_back(std::move(e), g);
        }
        std::int64_t end = touches.back().first.t_up + 400;
        end = ((end + kPeriod - 1) / kPeriod) * kPeriod;
        tr.labels.push_back({start, end, seg.user, seg.scenario});

        const std::size_t first = tr.imu.samples.size();
        std::optional<GaitGenerator> gait;
        if (walking) gait.emplace(p.gait, rng);
        for (std::int64_t ts = start; ts < end; ts += kPeriod) {
            Vec3 lin{};
            if (gait) lin = gait->at(static_cast<double>(ts - start) / 1000.0);
            tr.imu.samples.push_back({ts, to_device * (lin + Vec3{0, 0, kGravity}), {}});
        }
        std::span<ImuSample> seg_samples(tr.imu.samples.data() + first, tr.imu.samples.size() - first);
        for (const auto& [e, g] : touches) {
            const auto from = static_cast<std::size_t>(std::max<std::int64_t>(0, (e.t_down - start) / kPeriod - 1));
            const auto to = std::min(seg_samples.size(), static_cast<std::size_t>((e.t_up + 200 - start) / kPeriod + 1));
            add_reaction(seg_samples.subspan(from, to - from), p, e, g);
        }
        for (auto& s : seg_samples) {
            s.accel = canonical(s.accel + Vec3{rng.normal(0, p.accel_noise), rng.normal(0, p.accel_noise),
                                               rng.normal(0, p.accel_noise)});
            s.gyro = canonical(s.gyro + Vec3{rng.normal(0, p.gyro_noise), rng.normal(0, p.gyro_noise),
                                             rng.normal(0, p.gyro_noise)});
        }
        for (auto& [e, g] : touches) tr.touches.push_back(std::move(e));
        t = end;
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Canned scripts

struct AppInfo {
    const char* name;
    bool sensitive;
};

inline constexpr std::array<AppInfo, 6> kApps{{{"mail", true},
                                               {"album", true},
                                               {"messages", true},
                                               {"browser", false},
                                               {"game", false},
                                               {"reader", false}}};

/// One owner and a list of guests: an owner warm-up, then (owner block, guest block) per guest.
inline SessionScript identification_script(std::uint64_t seed, std::uint64_t owner_seed,
                                           const std::vector<std::uint64_t>& guest_seeds, Scenario scenario,
                                           int warmup = 100, int owner_block = 50, int guest_block = 60,
                                           int warmup_chunk = 10) {
    SessionScript s;
    s.seed = seed;
    s.users.push_back({"owner", owner_seed, Archetype::Default});
    for (std::size_t i = 0; i < guest_seeds.size(); ++i)
        s.users.push_back({"guest" + std::to_string(i + 1), guest_seeds[i], Archetype::Default});
    Rng r(seed ^ 0xA5A5A5A5ULL);
    auto app = [&] { return kApps[r.index(kApps.size())]; };
    // The warm-up spans several segments so it sees more than one device pose and walk.
    auto a = app();
    for (int left = warmup; left > 0; left -= warmup_chunk) {
        s.segments.push_back({"owner", a.name, a.sensitive, scenario, std::min(left, warmup_chunk)});
        a = app();
    }
    for (std::size_t i = 0; i < guest_seeds.size(); ++i) {
        if (i > 0) a = app();
        s.segments.push_back({"owner", a.name, a.sensitive, scenario, owner_block});
        a = app();
        s.segments.push_back({"guest" + std::to_string(i + 1), a.name, a.sensitive, scenario, guest_block});
    }
    return s;
}

/// Owner/guest hand-over as a two-state chain over fixed-length segments: after each owner segment
/// the device goes to a guest with probability q_o2g; a guest hands it back with probability q_g2o.
inline SessionScript sharing_script(std::uint64_t seed, double q_o2g, double q_g2o, int segments,
                                    int segment_len = 12, double sensitive_share = 0.3, int guests = 5,
                                    int warmup = 100) {
    SessionScript s;
    s.seed = seed;
    Rng r(seed ^ 0x5A5A5A5AULL);
    s.users.push_back({"owner", r.next() % 100000 + 1, Archetype::Default});
    for (int i = 0; i < guests; ++i)
        s.users.push_back({"guest" + std::to_string(i + 1), r.next() % 100000 + 100001, Archetype::Default});
    auto pick_app = [&] {
        const bool sensitive = r.bernoulli(sensitive_share);
        const std::size_t base = sensitive ? 0 : 3;
        return kApps[base + r.index(3)];
    };
    for (int left = warmup; left > 0; left -= 10) s.segments.push_back({"owner", "game", false, Scenario::Static, std::min(left, 10)});
    bool owner = true;
    std::string guest;
    for (int i = 0; i < segments; ++i) {
        if (owner && r.bernoulli(q_o2g)) {
            owner = false;
            guest = "guest" + std::to_string(1 + r.index(static_cast<std::size_t>(guests)));
        } else if (!owner && r.bernoulli(q_g2o)) {
            owner = true;
        }
        const auto a = pick_app();
        s.segments.push_back({owner ? "owner" : guest, a.name, a.sensitive, Scenario::Static, segment_len});
    }
    return s;
}

}  // namespace silentsense::sim
