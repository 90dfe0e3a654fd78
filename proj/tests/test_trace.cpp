#include <gtest/gtest.h>

#include <sstream>

#include "silentsense/simulator.hpp"
#include "silentsense/trace.hpp"

using namespace silentsense;

namespace {

SessionTrace parse_text(const std::string& s) {
    std::istringstream in(s);
    return parse_trace(in);
}

std::string write_text(const SessionTrace& tr) {
    std::ostringstream out;
    write_trace(tr, out);
    return out.str();
}

SessionTrace small_session(std::uint64_t seed, Scenario scenario = Scenario::Static) {
    sim::SessionScript s;
    s.seed = seed;
    s.users = {{"owner", seed + 1}, {"guest", seed + 2}};
    s.segments = {{"owner", "mail", true, scenario, 6}, {"guest", "game", false, scenario, 4}};
    return sim::gen_session(s, sim::make_profiles(s));
}

TouchEvent line_touch(double length_px, std::int64_t duration_ms) {
    TouchEvent e;
    e.app = "app";
    e.t_down = 1000;
    e.t_up = 1000 + duration_ms;
    const int n = 11;
    for (int i = 0; i < n; ++i) {
        const double u = static_cast<double>(i) / (n - 1);
        e.points.push_back({e.t_down + static_cast<std::int64_t>(u * static_cast<double>(duration_ms)), 500.0 + u * length_px,
                            900.0, 20, 0.4});
    }
    return e;
}

}  // namespace

TEST(Trace, EmptyInputGivesEmptyTrace) {
    const auto tr = parse_text("");
    EXPECT_TRUE(tr.imu.empty());
    EXPECT_TRUE(tr.touches.empty());
    EXPECT_TRUE(tr.app_events.empty());
    EXPECT_TRUE(tr.labels.empty());
}

TEST(Trace, EmptyTraceWritesZeroLines) { EXPECT_EQ(write_text(SessionTrace{}), ""); }

TEST(Trace, SingleImuRecord) {
    const auto tr = parse_text(R"({"kind":"imu","t":0,"accel":[0,0,9.81],"gyro":[0,0,0]})"
                               "\n");
    ASSERT_EQ(tr.imu.size(), 1u);
    EXPECT_EQ(tr.imu.samples[0].t, 0);
    EXPECT_DOUBLE_EQ(tr.imu.samples[0].accel.z, 9.81);
    EXPECT_DOUBLE_EQ(norm(tr.imu.samples[0].gyro), 0.0);
}

TEST(Trace, SingleTouchRoundTripsAllPoints) {
    SessionTrace tr;
    auto e = line_touch(300, 900);
    e.id = 7;
    tr.touches.push_back(e);
    tr.labels.push_back({0, 5000, "owner", Scenario::Static});
    const auto back = parse_text(write_text(tr));
    ASSERT_EQ(back.touches.size(), 1u);
    EXPECT_EQ(back.touches[0].points.size(), e.points.size());
    EXPECT_EQ(back, tr);
}

TEST(Trace, SimulatedTracesRoundTripByteIdentical) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        for (Scenario sc : {Scenario::Static, Scenario::Walking}) {
            const auto tr = small_session(seed, sc);
            const auto text = write_text(tr);
            const auto back = parse_text(text);
            EXPECT_EQ(back, tr) << "seed " << seed;
            EXPECT_EQ(write_text(back), text) << "seed " << seed;
        }
    }
}

TEST(Trace, NonDefaultMetaRoundTrips) {
    auto tr = small_session(4);
    tr.meta.screen_w = 720;
    tr.meta.screen_h = 1280;
    tr.meta.touch_rate_hz = 60;
    const auto text = write_text(tr);
    EXPECT_EQ(text.rfind(R"({"kind":"meta")", 0), 0u);
    EXPECT_EQ(parse_text(text), tr);
}

TEST(Trace, ParseErrorsCarryLineNumbers) {
    const std::string good = R"({"kind":"imu","t":0,"accel":[0,0,9.81],"gyro":[0,0,0]})";
    try {
        parse_text(good + "\n" + good + "\n{not json\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    try {
        parse_text(good + "\n" + R"({"kind":"bogus"})" + "\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_text(R"({"kind":"imu","t":0,"accel":[0,0],"gyro":[0,0,0]})"), ParseError);
}

TEST(Trace, ValidationRejectsBrokenInvariants) {
    // IMU gap of more than three periods.
    EXPECT_THROW(parse_text(R"({"kind":"imu","t":0,"accel":[0,0,9.81],"gyro":[0,0,0]})"
                            "\n"
                            R"({"kind":"imu","t":50,"accel":[0,0,9.81],"gyro":[0,0,0]})"
                            "\n"),
                 ValidationError);
    // Touch outside every label.
    EXPECT_THROW(parse_text(R"({"kind":"label","t_start":0,"t_end":100,"user":"a","scenario":"static"})"
                            "\n"
                            R"({"kind":"touch","id":0,"app":"x","t_down":200,"t_up":250,"points":[[200,1,1,3,0.1]]})"
                            "\n"),
                 ValidationError);
    // t_up before t_down.
    EXPECT_THROW(parse_text(R"({"kind":"touch","id":0,"app":"x","t_down":200,"t_up":150,"points":[[200,1,1,3,0.1]]})"
                            "\n"),
                 ValidationError);
}

TEST(Trace, EveryParsedTouchLiesInALabel) {
    const auto tr = parse_text(write_text(small_session(9)));
    for (const auto& e : tr.touches) EXPECT_NE(tr.label_for(e), nullptr);
}

TEST(Gesture, SpecExamples) {
    TouchEvent tap;
    tap.t_down = 0;
    tap.t_up = 80;
    tap.points = {{0, 100, 100, 10, 0.2}};
    EXPECT_EQ(classify_gesture(tap), Gesture::Tap);
    EXPECT_EQ(classify_gesture(line_touch(400, 200)), Gesture::Fling);
    EXPECT_EQ(classify_gesture(line_touch(300, 900)), Gesture::Scroll);
}

TEST(Gesture, ThresholdEdges) {
    EXPECT_EQ(classify_gesture(line_touch(9.9, 100)), Gesture::Tap);
    EXPECT_NE(classify_gesture(line_touch(10.0, 100)), Gesture::Tap);
    EXPECT_NE(classify_gesture(line_touch(5, 300)), Gesture::Tap);
    EXPECT_EQ(classify_gesture(line_touch(1000, 1000)), Gesture::Scroll);  // exactly 1000 px/s is not a fling
}

TEST(Gesture, SubPixelPerturbationKeepsTaps) {
    sim::Rng rng(42);
    int taps = 0;
    for (std::uint64_t u = 1; u <= 30; ++u) {
        const auto p = sim::gen_profile(u);
        for (int i = 0; i < 30; ++i) {
            const auto c = sim::sample_coordinate(p, Gesture::Tap, rng);
            const auto e = sim::synth_touch(p, Gesture::Tap, c, 1000, rng);
            ASSERT_EQ(classify_gesture(e), Gesture::Tap);
            ++taps;
            // Rigid shift of the whole touch.
            auto shifted = e;
            const double dx = rng.uniform(-0.7, 0.7), dy = rng.uniform(-0.7, 0.7);
            for (auto& q : shifted.points) {
                q.x += dx;
                q.y += dy;
            }
            EXPECT_EQ(classify_gesture(shifted), Gesture::Tap);
            // Independent per-point jitter with |offset| < 1 px.
            auto jittered = e;
            for (auto& q : jittered.points) {
                q.x += rng.uniform(-0.49, 0.49);
                q.y += rng.uniform(-0.49, 0.49);
            }
            EXPECT_EQ(classify_gesture(jittered), Gesture::Tap);
        }
    }
    EXPECT_EQ(taps, 900);
}

TEST(Format, FixedSixDecimals) {
    EXPECT_EQ(format_fixed(9.81), "9.810000");
    EXPECT_EQ(format_fixed(-0.0), "0.000000");
    EXPECT_EQ(format_fixed(-1e-9), "0.000000");
    EXPECT_DOUBLE_EQ(canonical(1.23456789), 1.234568);
}
