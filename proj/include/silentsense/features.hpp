#pragma once

// Observations: one touch action turned into a feature vector, either with the device reaction
// it caused (static) or with the walking step nearest to it (walking).

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "dsp.hpp"
#include "trace.hpp"

namespace silentsense {

inline constexpr std::size_t kStaticDims = 6;   // x, y, pressure, duration, vibration, rotation
inline constexpr std::size_t kWalkingDims = 8;  // x, y, pressure, duration, displacement, step Hz, mean EA_h, std EA_v
inline constexpr std::size_t kTouchDims = 4;    // the touch-only prefix shared by both

inline std::size_t dims_for(Scenario s) { return s == Scenario::Static ? kStaticDims : kWalkingDims; }

struct Observation {
    std::string app;
    Gesture gesture = Gesture::Tap;
    Scenario scenario = Scenario::Static;
    std::vector<double> features;
    std::int64_t t = 0;         // t_down of the touch
    std::int64_t touch_id = 0;  // id of the TouchEvent it came from
};

/// No detected step close enough to a touch to describe the walking that accompanied it.
class NotWalking : public ComputeError {
public:
    using ComputeError::ComputeError;
};

/// Scale factors that map a trace's screen onto the 1080 x 1800 reference screen.
struct ScreenScale {
    double x = 1.0, y = 1.0;
    static ScreenScale from(const TraceMeta& m) { return {1080.0 / m.screen_w, 1800.0 / m.screen_h}; }
};

/// Centroid coordinate, mean pressure level and duration of a touch.
inline std::vector<double> touch_features(const TouchEvent& e, ScreenScale scale = {}) {
    if (e.points.empty()) throw ValidationError("touch " + std::to_string(e.id) + ": points must be non-empty");
    if (e.t_up <= e.t_down) throw ComputeError("touch " + std::to_string(e.id) + ": duration must be > 0");
    double x = 0, y = 0, p = 0;
    for (const auto& q : e.points) {
        x += q.x;
        y += q.y;
        p += q.pressure;
    }
    const double n = static_cast<double>(e.points.size());
    return {scale.x * x / n, scale.y * y / n, p / n, static_cast<double>(e.t_up - e.t_down)};
}

inline Observation static_observation(const TouchEvent& e, const ImuSeries& imu, ScreenScale scale = {},
                                      const dsp::ReactionWindows& windows = {}) {
    Observation o{e.app, classify_gesture(e), Scenario::Static, touch_features(e, scale), e.t_down, e.id};
    const auto r = dsp::tap_reaction(imu, e, windows);
    o.features.push_back(r.vibration);
    o.features.push_back(r.rotation);
    return o;
}

/// Index of the step nearest to time t (distance 0 inside a step; ties go to the earlier step),
/// or npos when none lies within `max_gap_ms`.
inline std::size_t nearest_step(std::span<const dsp::Step> steps, std::int64_t t, std::int64_t max_gap_ms = 2000) {
    std::size_t best = static_cast<std::size_t>(-1);
    std::int64_t best_gap = max_gap_ms + 1;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto& s = steps[i];
        const std::int64_t gap = t < s.t_start ? s.t_start - t : t >= s.t_end ? t - s.t_end : 0;
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    return best;
}

struct WalkingFeatures {
    double displacement = 0, step_hz = 0, mean_ea_h = 0, std_ea_v = 0;
};

inline WalkingFeatures walking_features(const dsp::Stream& ea_v, const dsp::Stream& ea_h, const dsp::Step& s) {
    WalkingFeatures w;
    w.displacement = dsp::step_displacement(ea_v, s);
    w.step_hz = 1000.0 / s.duration_ms();
    const double n = static_cast<double>(s.end - s.begin);
    double mv = 0;
    for (std::size_t i = s.begin; i < s.end; ++i) {
        w.mean_ea_h += ea_h.x[i];
        mv += ea_v.x[i];
    }
    w.mean_ea_h /= n;
    mv /= n;
    for (std::size_t i = s.begin; i < s.end; ++i) w.std_ea_v += (ea_v.x[i] - mv) * (ea_v.x[i] - mv);
    w.std_ea_v = std::sqrt(w.std_ea_v / n);
    return w;
}

/// Touch features followed by the walking features of the step nearest to the touch.
inline Observation motion_observation(const TouchEvent& e, const dsp::MotionTrack& track, ScreenScale scale = {},
                                      std::int64_t max_gap_ms = 2000) {
    const auto i = nearest_step(track.steps, e.t_down, max_gap_ms);
    if (i == static_cast<std::size_t>(-1))
        throw NotWalking("touch " + std::to_string(e.id) + ": no step within " + std::to_string(max_gap_ms) + " ms");
    Observation o{e.app, classify_gesture(e), Scenario::Walking, touch_features(e, scale), e.t_down, e.id};
    const auto w = walking_features(track.ea_v, track.ea_h, track.steps[i]);
    o.features.insert(o.features.end(), {w.displacement, w.step_hz, w.mean_ea_h, w.std_ea_v});
    return o;
}

/// Walking iff at least `min_steps` steps are detected in the window.
inline Scenario detect_scenario(std::span<const ImuSample> window, double fs = 100.0, const dsp::DspConfig& cfg = {},
                                std::size_t min_steps = 2) {
    if (window.size() < 2) return Scenario::Static;
    return dsp::track_motion(window, fs, cfg).steps.size() >= min_steps ? Scenario::Walking : Scenario::Static;
}

/// Same rule against a precomputed track: counts steps overlapping [t - window_ms, t].
inline Scenario scenario_at(const dsp::MotionTrack& track, std::int64_t t, std::int64_t window_ms = 2000,
                            std::size_t min_steps = 2) {
    std::size_t n = 0;
    for (const auto& s : track.steps)
        if (s.t_end > t - window_ms && s.t_start <= t) ++n;
    return n >= min_steps ? Scenario::Walking : Scenario::Static;
}

// ---------------------------------------------------------------------------
// Scaling

struct Scaler {
    std::vector<double> mean, std;

    std::size_t dims() const { return mean.size(); }

    std::vector<double> apply(std::span<const double> v) const {
        check(v.size());
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean[i]) / std[i];
        return out;
    }
    std::vector<double> inverse(std::span<const double> v) const {
        check(v.size());
        std::vector<double> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * std[i] + mean[i];
        return out;
    }
    Observation apply(const Observation& o) const {
        Observation r = o;
        r.features = apply(o.features);
        return r;
    }

    friend bool operator==(const Scaler&, const Scaler&) = default;

private:
    void check(std::size_t n) const {
        if (n != mean.size())
            throw ValidationError("scaler: vector has " + std::to_string(n) + " dimensions, expected " +
                                  std::to_string(mean.size()));
    }
};

/// Per-dimension z-scoring; dimensions without variance keep std = 1.
inline Scaler fit_scaler(std::span<const std::vector<double>> data) {
    if (data.size() < 2) throw ValidationError("fit_scaler: need at least 2 vectors");
    const std::size_t d = data.front().size();
    for (const auto& v : data)
        if (v.size() != d) throw ValidationError("fit_scaler: mixed vector dimensions");
    Scaler s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    const double n = static_cast<double>(data.size());
    for (const auto& v : data)
        for (std::size_t i = 0; i < d; ++i) s.mean[i] += v[i];
    for (auto& m : s.mean) m /= n;
    for (const auto& v : data)
        for (std::size_t i = 0; i < d; ++i) s.std[i] += (v[i] - s.mean[i]) * (v[i] - s.mean[i]);
    for (auto& q : s.std) {
        q = std::sqrt(q / n);
        if (!(q > 1e-12)) q = 1.0;
    }
    return s;
}

inline Scaler fit_scaler(std::span<const Observation> obs) {
    if (obs.size() < 2) throw ValidationError("fit_scaler: need at least 2 observations");
    std::vector<std::vector<double>> v;
    v.reserve(obs.size());
    for (const auto& o : obs) {
        if (o.scenario != obs.front().scenario) throw ValidationError("fit_scaler: mixed scenario observations");
        v.push_back(o.features);
    }
    return fit_scaler(std::span<const std::vector<double>>(v));
}

}  // namespace silentsense
