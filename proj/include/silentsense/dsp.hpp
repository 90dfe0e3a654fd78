#pragma once

// Signal processing for touch reactions and walking motion:
//   gravity tracking -> earth frame -> band-pass -> (EA_v, EA_h) -> steps -> per-step features.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "core.hpp"
#include "trace.hpp"

namespace silentsense::dsp {

struct StepConfig {
    double amplitude_threshold = 0.3;  // m/s^2, minimum positive peak of a step
    double min_step_ms = 250.0;
    double max_step_ms = 2000.0;
};

struct ReactionWindows {
    std::int64_t baseline_begin_ms = 150;  // baseline spans [t_down - begin, t_down - end]
    std::int64_t baseline_end_ms = 50;
    std::int64_t tail_ms = 50;  // reaction spans [t_down, t_up + tail]
};

struct DspConfig {
    double gravity_cutoff_hz = 0.3;
    double band_low_hz = 0.8;
    double band_high_hz = 3.0;
    StepConfig steps;
    ReactionWindows reaction;
};

/// Uniformly sampled scalar signal with its timestamps.
struct Stream {
    double fs = 100.0;
    std::vector<std::int64_t> t;
    std::vector<double> x;

    std::size_t size() const { return x.size(); }
    bool empty() const { return x.empty(); }
};

struct EarthAccel {
    std::int64_t t = 0;
    double north = 0, east = 0;  // heading-arbitrary horizontal pair
    double vertical = 0;         // gravity axis, gravity removed
};

struct Step {
    std::int64_t t_start = 0, t_end = 0;  // ms, end exclusive
    std::size_t begin = 0, end = 0;       // sample range [begin, end) into the stream
    double duration_ms() const { return static_cast<double>(t_end - t_start); }
    friend bool operator==(const Step&, const Step&) = default;
};

struct ReactionFeatures {
    double vibration = 0;  // mean |F_tap - baseline|, m/s^2
    double rotation = 0;   // mean |AV_tap - baseline|, rad/s
};

inline double magnitude3(Vec3 v) { return norm(v); }

// ---------------------------------------------------------------------------
// Gravity

/// First-order low-pass of the accelerometer; the output is rescaled to |g|.
class GravityTracker {
public:
    GravityTracker(double fs, double cutoff_hz, Vec3 seed) : state_(seed) {
        const double dt = 1.0 / fs;
        const double rc = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
        alpha_ = dt / (rc + dt);
    }

    Vec3 update(Vec3 accel) {
        state_ += alpha_ * (accel - state_);
        return gravity();
    }

    Vec3 gravity() const {
        const double n = norm(state_);
        return n > 0 ? (kGravity / n) * state_ : state_;
    }

    double alpha() const { return alpha_; }

private:
    Vec3 state_;
    double alpha_ = 0;
};

namespace detail {

inline Vec3 mean_accel(std::span<const ImuSample> s, double fs, double seconds) {
    const std::size_t n = std::min(s.size(), std::max<std::size_t>(1, static_cast<std::size_t>(fs * seconds)));
    Vec3 m;
    for (std::size_t i = 0; i < n; ++i) m += s[i].accel;
    return (1.0 / static_cast<double>(n)) * m;
}

}  // namespace detail

/// Gravity at the end of `window`: the low-pass is seeded with the mean of the first second.
inline Vec3 estimate_gravity(std::span<const ImuSample> window, double fs, double cutoff_hz = 0.3) {
    if (window.empty() || static_cast<double>(window.back().t - window.front().t) + 1000.0 / fs < 1000.0 - 1e-9)
        throw ComputeError("estimate_gravity: window shorter than 1 s");
    GravityTracker g(fs, cutoff_hz, detail::mean_accel(window, fs, 1.0));
    for (const auto& s : window) g.update(s.accel);
    return g.gravity();
}

// ---------------------------------------------------------------------------
// Earth frame

/// Minimal rotation taking direction `g` onto +Z.
inline Mat3 rotation_to_up(Vec3 g) {
    const double n = norm(g);
    const Vec3 u = (1.0 / n) * g;
    const Vec3 up{0, 0, 1};
    const Vec3 axis = cross(u, up);
    const double s = norm(axis);
    const double c = dot(u, up);
    if (s < 1e-12) return c > 0 ? Mat3{} : axis_angle({1, 0, 0}, std::numbers::pi);
    return axis_angle((1.0 / s) * axis, std::atan2(s, c));
}

inline EarthAccel to_earth(Vec3 accel, Vec3 gravity) {
    const double gn = norm(gravity);
    if (!(gn >= 1.0)) throw ComputeError("to_earth: degenerate gravity (|g| < 1 m/s^2)");
    const Vec3 e = rotation_to_up(gravity) * accel;
    return {0, e.x, e.y, e.z - gn};
}

/// Earth-frame acceleration for every sample, with gravity tracked causally.
inline std::vector<EarthAccel> to_earth(std::span<const ImuSample> samples, double fs, double cutoff_hz = 0.3) {
    std::vector<EarthAccel> out;
    if (samples.empty()) return out;
    out.reserve(samples.size());
    GravityTracker g(fs, cutoff_hz, detail::mean_accel(samples, fs, 1.0));
    for (const auto& s : samples) {
        EarthAccel e = to_earth(s.accel, g.update(s.accel));
        e.t = s.t;
        out.push_back(e);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Band-pass

/// Second-order IIR section, transposed direct form II.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
    double z1 = 0, z2 = 0;

    double process(double x) {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }

    void reset() { z1 = z2 = 0; }

    /// |H(e^{jw})| at frequency f for sample rate fs.
    double gain(double f, double fs) const {
        const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * f / fs);
        return std::abs((b0 + b1 * z + b2 * z * z) / (1.0 + a1 * z + a2 * z * z));
    }
};

/// Butterworth band-pass (first-order prototype, one biquad) by the bilinear transform with
/// pre-warped band edges; unity gain at the geometric centre.
inline Biquad design_bandpass(double fs, double low_hz, double high_hz) {
    if (!(low_hz > 0) || !(low_hz < high_hz)) throw ValidationError("bandpass: invalid band (need 0 < low < high)");
    if (!(fs > 2.0 * high_hz)) throw ValidationError("bandpass: fs must exceed 2*high");
    const double k = 2.0 * fs;
    const double wl = k * std::tan(std::numbers::pi * low_hz / fs);
    const double wh = k * std::tan(std::numbers::pi * high_hz / fs);
    const double bw = wh - wl;
    const double w0sq = wl * wh;
    const double a0 = k * k + bw * k + w0sq;
    Biquad q;
    q.b0 = bw * k / a0;
    q.b1 = 0.0;
    q.b2 = -q.b0;
    q.a1 = (2.0 * w0sq - 2.0 * k * k) / a0;
    q.a2 = (k * k - bw * k + w0sq) / a0;
    return q;
}

/// Causal band-pass of one scalar stream from rest.
inline std::vector<double> bandpass(std::span<const double> x, double fs, double low_hz = 0.8, double high_hz = 3.0) {
    Biquad q = design_bandpass(fs, low_hz, high_hz);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = q.process(x[i]);
    return y;
}

/// Band-passes each earth axis; returns the filtered EA'.
inline std::vector<EarthAccel> bandpass(std::span<const EarthAccel> ea, double fs, double low_hz = 0.8,
                                        double high_hz = 3.0) {
    Biquad qn = design_bandpass(fs, low_hz, high_hz), qe = qn, qv = qn;
    std::vector<EarthAccel> out(ea.size());
    for (std::size_t i = 0; i < ea.size(); ++i)
        out[i] = {ea[i].t, qn.process(ea[i].north), qe.process(ea[i].east), qv.process(ea[i].vertical)};
    return out;
}

/// (EA_v, EA_h) from the filtered earth-frame stream.
inline std::pair<Stream, Stream> split_vh(std::span<const EarthAccel> filtered, double fs = 100.0) {
    Stream v{fs, {}, {}}, h{fs, {}, {}};
    v.t.reserve(filtered.size());
    v.x.reserve(filtered.size());
    h.x.reserve(filtered.size());
    for (const auto& e : filtered) {
        v.t.push_back(e.t);
        v.x.push_back(e.vertical);
        h.x.push_back(std::hypot(e.north, e.east));
    }
    h.t = v.t;
    return {std::move(v), std::move(h)};
}

// ---------------------------------------------------------------------------
// Steps

/// Steps delimited by negative-to-positive zero crossings of EA_v. Crossings closer than
/// `min_step_ms` to the open step's start are ignored. A stream that starts non-negative opens a
/// step at sample 0; a trailing step is closed at the end of the stream once its positive peak has
/// been followed by a negative swing.
inline std::vector<Step> detect_steps(const Stream& ea_v, const StepConfig& cfg = {}) {
    std::vector<Step> steps;
    const auto& x = ea_v.x;
    const auto& t = ea_v.t;
    const std::size_t n = x.size();
    if (n < 2) return steps;
    const auto period = static_cast<std::int64_t>(std::llround(1000.0 / ea_v.fs));

    auto accept = [&](std::size_t b, std::size_t e, std::int64_t t_end) {
        const double dur = static_cast<double>(t_end - t[b]);
        if (dur < cfg.min_step_ms || dur > cfg.max_step_ms) return;
        const auto peak = std::max_element(x.begin() + static_cast<std::ptrdiff_t>(b),
                                           x.begin() + static_cast<std::ptrdiff_t>(e));
        if (*peak < cfg.amplitude_threshold) return;
        const double after = *std::min_element(peak, x.begin() + static_cast<std::ptrdiff_t>(e));
        if (after >= 0.0) return;
        steps.push_back({t[b], t_end, b, e});
    };

    std::optional<std::size_t> start;
    if (x[0] >= 0.0) start = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (!(x[i - 1] < 0.0 && x[i] >= 0.0)) continue;
        if (!start) {
            start = i;
            continue;
        }
        if (static_cast<double>(t[i] - t[*start]) < cfg.min_step_ms) continue;
        accept(*start, i, t[i]);
        start = i;
    }
    if (start && n - *start >= 2) accept(*start, n, t[n - 1] + period);
    return steps;
}

/// Peak-to-trough vertical displacement over one step by trapezoidal double integration.
/// The within-step mean is removed from the acceleration and from the integrated velocity,
/// so the step is treated as one period of a periodic motion.
inline double step_displacement(const Stream& ea_v, const Step& s) {
    if (s.end > ea_v.size() || s.begin >= s.end) throw ComputeError("step_displacement: step outside stream");
    const std::size_t n = s.end - s.begin;
    if (n < 3) throw ComputeError("step_displacement: step shorter than 3 samples");
    const double dt = 1.0 / ea_v.fs;
    std::vector<double> a(ea_v.x.begin() + static_cast<std::ptrdiff_t>(s.begin),
                          ea_v.x.begin() + static_cast<std::ptrdiff_t>(s.end));
    auto remove_mean = [](std::vector<double>& v) {
        double m = 0;
        for (double q : v) m += q;
        m /= static_cast<double>(v.size());
        for (double& q : v) q -= m;
    };
    auto integrate = [dt](const std::vector<double>& v) {
        std::vector<double> out(v.size(), 0.0);
        for (std::size_t i = 1; i < v.size(); ++i) out[i] = out[i - 1] + 0.5 * dt * (v[i - 1] + v[i]);
        return out;
    };
    remove_mean(a);
    auto vel = integrate(a);
    remove_mean(vel);
    const auto z = integrate(vel);
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    return *hi - *lo;
}

// ---------------------------------------------------------------------------
// Spectrum

struct SpectrumBin {
    double frequency = 0;  // Hz
    double power = 0;
};

/// Power spectrum (|X_k|^2) of the mean-removed, Hann-windowed stream, bins 0..N/2.
inline std::vector<SpectrumBin> fft_spectrum(std::span<const double> x, double fs) {
    const std::size_t n = x.size();
    if (n < 64) throw ComputeError("fft_spectrum: stream shorter than 64 samples");
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        w[i] = (x[i] - mean) * hann;
    }
    std::vector<std::complex<double>> twiddle(n);
    for (std::size_t i = 0; i < n; ++i)
        twiddle[i] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    std::vector<SpectrumBin> out;
    out.reserve(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> acc = 0;
        std::size_t idx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += w[i] * twiddle[idx];
            idx += k;
            if (idx >= n) idx -= n;
        }
        out.push_back({static_cast<double>(k) * fs / static_cast<double>(n), std::norm(acc)});
    }
    return out;
}

inline double dominant_frequency(std::span<const SpectrumBin> spectrum) {
    auto it = std::max_element(spectrum.begin(), spectrum.end(),
                               [](const SpectrumBin& a, const SpectrumBin& b) { return a.power < b.power; });
    return it == spectrum.end() ? 0.0 : it->frequency;
}

// ---------------------------------------------------------------------------
// Touch reaction

/// Mean perturbation of acceleration (F_tap) and angular velocity (AV_tap) caused by a touch.
/// F_tap is the magnitude of linear acceleration, taken relative to the mean acceleration
/// vector of the baseline window.
inline ReactionFeatures tap_reaction(const ImuSeries& imu, const TouchEvent& e, const ReactionWindows& w = {}) {
    const std::int64_t b0 = e.t_down - w.baseline_begin_ms, b1 = e.t_down - w.baseline_end_ms;
    const std::int64_t r0 = e.t_down, r1 = e.t_up + w.tail_ms;
    if (imu.empty() || imu.samples.front().t > b0 || imu.samples.back().t < r1)
        throw ComputeError("tap_reaction: insufficient IMU coverage for touch " + std::to_string(e.id));
    const auto base = imu.window(b0, b1);
    const auto react = imu.window(r0, r1);
    if (base.empty() || react.empty())
        throw ComputeError("tap_reaction: insufficient IMU coverage for touch " + std::to_string(e.id));

    Vec3 g;
    for (const auto& s : base) g += s.accel;
    g = (1.0 / static_cast<double>(base.size())) * g;

    double f_base = 0, av_base = 0;
    for (const auto& s : base) {
        f_base += magnitude3(s.accel - g);
        av_base += magnitude3(s.gyro);
    }
    f_base /= static_cast<double>(base.size());
    av_base /= static_cast<double>(base.size());

    ReactionFeatures r;
    for (const auto& s : react) {
        r.vibration += std::abs(magnitude3(s.accel - g) - f_base);
        r.rotation += std::abs(magnitude3(s.gyro) - av_base);
    }
    r.vibration /= static_cast<double>(react.size());
    r.rotation /= static_cast<double>(react.size());
    return r;
}

// ---------------------------------------------------------------------------
// Whole-stream motion pipeline

struct MotionTrack {
    Stream vertical_raw;  // earth-frame vertical before filtering
    Stream ea_v, ea_h;
    std::vector<Step> steps;
};

inline MotionTrack track_motion(std::span<const ImuSample> samples, double fs, const DspConfig& cfg = {}) {
    MotionTrack m;
    const auto ea = to_earth(samples, fs, cfg.gravity_cutoff_hz);
    m.vertical_raw.fs = fs;
    for (const auto& e : ea) {
        m.vertical_raw.t.push_back(e.t);
        m.vertical_raw.x.push_back(e.vertical);
    }
    const auto filtered = bandpass(std::span<const EarthAccel>(ea), fs, cfg.band_low_hz, cfg.band_high_hz);
    std::tie(m.ea_v, m.ea_h) = split_vh(filtered, fs);
    m.steps = detect_steps(m.ea_v, cfg.steps);
    return m;
}

inline MotionTrack track_motion(const ImuSeries& imu, const DspConfig& cfg = {}) {
    return track_motion(std::span<const ImuSample>(imu.samples), imu.fs, cfg);
}

}  // namespace silentsense::dsp
