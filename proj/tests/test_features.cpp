#include <gtest/gtest.h>

#include <cmath>

#include "silentsense/features.hpp"
#include "silentsense/simulator.hpp"

using namespace silentsense;

namespace {

ImuSeries still_imu(std::int64_t from, std::int64_t to) {
    ImuSeries imu;
    for (std::int64_t t = from; t <= to; t += 10) imu.samples.push_back({t, {0, 0, kGravity}, {}});
    return imu;
}

ImuSeries clean_walk(int steps, std::uint64_t seed = 1, std::int64_t t0 = 0) {
    auto p = sim::gen_profile(seed, sim::Archetype::Noiseless);
    p.gait.step_hz = 2.0;
    p.gait.displacement_m = 0.04;
    sim::Rng rng(seed);
    sim::SynthOptions opt;
    opt.t_down = t0;
    return sim::synth_walk(p, steps, rng, opt);
}

TouchEvent tap_at(std::int64_t t, double x = 540, double y = 960) {
    return {0, "app", t, t + 100, {{t, x, y, 20, 0.4}, {t + 100, x, y, 20, 0.4}}};
}

}  // namespace

TEST(Static, StillDeviceTap) {
    const auto imu = still_imu(0, 2000);
    const auto o = static_observation(tap_at(1000), imu);
    const std::vector<double> want{540, 960, 20, 100, 0, 0};
    EXPECT_EQ(o.features, want);
    EXPECT_EQ(o.scenario, Scenario::Static);
    EXPECT_EQ(o.gesture, Gesture::Tap);
    EXPECT_EQ(o.t, 1000);
}

TEST(Static, DurationIsExact) {
    sim::Rng rng(3);
    const auto p = sim::gen_profile(3);
    for (int i = 0; i < 50; ++i) {
        const auto [e, imu] = sim::synth_touch_reaction(p, Gesture::Scroll, {540, 900, 0}, rng);
        EXPECT_EQ(static_observation(e, imu).features[3], static_cast<double>(e.t_up - e.t_down));
    }
}

TEST(Static, ReactionFieldsMatchInjection) {
    auto p = sim::gen_profile(6, sim::Archetype::Noiseless);
    sim::Rng rng(6);
    for (int i = 0; i < 20; ++i) {
        const Vec3 c{rng.uniform(100, 980), rng.uniform(100, 1200), 0};
        const auto [e, imu] = sim::synth_touch_reaction(p, Gesture::Tap, c, rng);
        const auto o = static_observation(e, imu);
        const double vib = sim::injected_vibration(p, e, Gesture::Tap), rot = sim::injected_rotation(p, e, Gesture::Tap);
        EXPECT_NEAR(o.features[4], vib, 0.05 * vib);
        EXPECT_NEAR(o.features[5], rot, 0.05 * rot);
    }
}

TEST(Static, TimeShiftChangesOnlyT) {
    sim::Rng rng(9);
    const auto p = sim::gen_profile(9);
    for (std::int64_t shift : {-500, 10, 123450}) {
        auto [e, imu] = sim::synth_touch_reaction(p, Gesture::Tap, {300, 700, 0}, rng);
        const auto a = static_observation(e, imu);
        e.t_down += shift;
        e.t_up += shift;
        for (auto& q : e.points) q.t += shift;
        for (auto& s : imu.samples) s.t += shift;
        const auto b = static_observation(e, imu);
        EXPECT_EQ(a.features, b.features);
        EXPECT_EQ(b.t, a.t + shift);
    }
}

TEST(Static, ScreenIsRescaledToReference) {
    const auto imu = still_imu(0, 2000);
    TraceMeta m;
    m.screen_w = 720;
    m.screen_h = 1200;
    const auto o = static_observation(tap_at(1000, 360, 600), imu, ScreenScale::from(m));
    EXPECT_DOUBLE_EQ(o.features[0], 540);
    EXPECT_DOUBLE_EQ(o.features[1], 900);
}

TEST(Motion, CleanWalkStepFrequency) {
    const auto imu = clean_walk(16);
    const auto track = dsp::track_motion(imu);
    for (std::int64_t t : {2000, 4000, 6000}) {
        const auto o = motion_observation(tap_at(t), track);
        ASSERT_EQ(o.features.size(), kWalkingDims);
        EXPECT_NEAR(o.features[5], 2.0, 0.05);
        EXPECT_EQ(o.scenario, Scenario::Walking);
    }
}

TEST(Motion, VerticalStdIsSinusoidRms) {
    const auto imu = clean_walk(16);
    const auto track = dsp::track_motion(imu);
    // Amplitude of the filtered vertical sinusoid: the injected amplitude times the band-pass gain.
    const double amp = sim::vertical_amplitude(2.0, 0.04) * dsp::design_bandpass(100, 0.8, 3.0).gain(2.0, 100);
    for (std::int64_t t : {2500, 4000, 5500}) {
        const auto o = motion_observation(tap_at(t), track);
        EXPECT_NEAR(o.features[7], amp / std::sqrt(2.0), 0.02 * amp / std::sqrt(2.0));
        EXPECT_NEAR(o.features[4], 0.04, 0.15 * 0.04);
        EXPECT_GT(o.features[6], 0.0);
    }
}

TEST(Motion, NoStepNearbyIsNotWalking) {
    const auto imu = clean_walk(8);
    const auto track = dsp::track_motion(imu);
    EXPECT_THROW(motion_observation(tap_at(9000), track), NotWalking);
    const auto still = dsp::track_motion(still_imu(0, 5000));
    EXPECT_THROW(motion_observation(tap_at(2000), still), NotWalking);
}

TEST(Motion, NearestStepTieGoesToEarlier) {
    const std::vector<dsp::Step> steps{{0, 500, 0, 50}, {700, 1200, 70, 120}};
    EXPECT_EQ(nearest_step(steps, 600), 0u);  // 100 ms from both
    EXPECT_EQ(nearest_step(steps, 601), 1u);
    EXPECT_EQ(nearest_step(steps, 800), 1u);
    EXPECT_EQ(nearest_step(steps, 250), 0u);
    EXPECT_EQ(nearest_step(steps, 4000), static_cast<std::size_t>(-1));
}

TEST(Scenario, Detection) {
    const auto still = still_imu(0, 2000);
    EXPECT_EQ(detect_scenario(still.samples), Scenario::Static);
    const auto walk = clean_walk(4);
    EXPECT_EQ(detect_scenario(walk.samples), Scenario::Walking);
    // A single jolt: one half-second bump on an otherwise still device.
    auto jolt = still_imu(0, 2000);
    for (auto& s : jolt.samples)
        if (s.t >= 1000 && s.t < 1250) s.accel.z += 3.0 * std::sin(std::numbers::pi * static_cast<double>(s.t - 1000) / 250.0);
    EXPECT_EQ(detect_scenario(jolt.samples), Scenario::Static);
}

TEST(Scenario, SimulatedWalkIsWalking) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto p = sim::gen_profile(seed);
        sim::Rng rng(seed);
        const auto imu = sim::synth_walk(p, 4, rng);
        EXPECT_EQ(detect_scenario(imu.samples), Scenario::Walking) << seed;
    }
}

TEST(Scaler, DegenerateVariance) {
    const std::vector<std::vector<double>> same{{1, 2, 3}, {1, 2, 3}};
    const auto s = fit_scaler(std::span<const std::vector<double>>(same));
    EXPECT_EQ(s.std, (std::vector<double>{1, 1, 1}));
    EXPECT_EQ(s.apply(same[0]), (std::vector<double>{0, 0, 0}));
}

TEST(Scaler, StandardisesAndInverts) {
    sim::Rng rng(2);
    std::vector<std::vector<double>> d;
    for (int i = 0; i < 200; ++i) d.push_back({rng.normal(5, 3), rng.uniform(-100, 100), rng.normal(0, 1e-3)});
    const auto s = fit_scaler(std::span<const std::vector<double>>(d));
    for (std::size_t k = 0; k < 3; ++k) {
        double m = 0, v = 0;
        for (const auto& x : d) m += s.apply(x)[k];
        m /= 200;
        for (const auto& x : d) v += std::pow(s.apply(x)[k] - m, 2);
        EXPECT_NEAR(m, 0, 1e-9);
        EXPECT_NEAR(std::sqrt(v / 200), 1, 1e-9);
    }
    for (const auto& x : d) {
        const auto back = s.inverse(s.apply(x));
        for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(back[k], x[k], 1e-9);
    }
}

TEST(Scaler, OrderPreserving) {
    sim::Rng rng(5);
    std::vector<std::vector<double>> d;
    for (int i = 0; i < 50; ++i) d.push_back({rng.normal(), rng.normal(10, 4)});
    const auto s = fit_scaler(std::span<const std::vector<double>>(d));
    for (int i = 0; i < 500; ++i) {
        const std::vector<double> a{rng.normal(), rng.normal(10, 4)}, b{rng.normal(), rng.normal(10, 4)};
        const auto za = s.apply(a), zb = s.apply(b);
        for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(a[k] < b[k], za[k] < zb[k]);
    }
}

TEST(Scaler, RejectsMixedInput) {
    Observation a{"app", Gesture::Tap, Scenario::Static, std::vector<double>(6, 1.0)};
    Observation b{"app", Gesture::Tap, Scenario::Walking, std::vector<double>(8, 1.0)};
    const std::vector<Observation> mixed{a, b};
    EXPECT_THROW(fit_scaler(std::span<const Observation>(mixed)), ValidationError);
    const std::vector<std::vector<double>> dims{{1, 2}, {1, 2, 3}};
    EXPECT_THROW(fit_scaler(std::span<const std::vector<double>>(dims)), ValidationError);
    const std::vector<Observation> fine{a, a};
    EXPECT_THROW(fit_scaler(std::span<const Observation>(fine)).apply(std::vector<double>(8, 0.0)), ValidationError);
}
