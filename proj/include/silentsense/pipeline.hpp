#pragma once

// End-to-end evaluation of one trace: observations -> warm-up models -> judgements ->
// conclusions, once with sensing always on (FAR/FRR curves) and once under the scheduler
// (delay, conclusion accuracy, sensors-off fraction).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "classifier.hpp"
#include "dsp.hpp"
#include "features.hpp"
#include "identifier.hpp"
#include "metrics.hpp"
#include "scheduler.hpp"
#include "svm.hpp"
#include "trace.hpp"

namespace silentsense {

struct EvalConfig {
    std::string owner;  // empty: the user of the first label
    std::size_t warmup_static = 100;
    std::size_t warmup_walking = 30;
    std::size_t max_n = 20;
    bool walking_features = true;  // false keeps only touch features for walking observations
    bool adapt = true;             // buffer confirmed observations and retrain
};

struct PipelineConfig {
    dsp::DspConfig dsp;
    GestureThresholds gestures;
    SvmConfig svm;
    RetrainPolicy retrain;
    BufferPolicy buffers;
    SchedulerConfig scheduler;
    EvalConfig eval;
};

// ---------------------------------------------------------------------------
// Config file

namespace detail {

template <typename T>
void read_key(const nlohmann::json& sec, const char* key, T& out) {
    if (!sec.contains(key)) return;
    try {
        out = sec.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(std::string("config: bad value for \"") + key + "\"");
    }
}

inline void check_keys(const nlohmann::json& sec, const char* name, std::initializer_list<const char*> allowed) {
    if (!sec.is_object()) throw ParseError(std::string("config: section \"") + name + "\" must be an object");
    for (const auto& [k, v] : sec.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ParseError("config: unknown key \"" + k + "\" in section \"" + name + "\"");
    }
}

}  // namespace detail

inline void validate(const PipelineConfig& c);

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::read_key;
    PipelineConfig c;
    if (!j.is_object()) throw ParseError("config: top level must be an object");
    for (const auto& [k, v] : j.items())
        if (k != "dsp" && k != "svm" && k != "scheduler" && k != "eval")
            throw ParseError("config: unknown section \"" + k + "\"");
    if (j.contains("dsp")) {
        const auto& s = j["dsp"];
        check_keys(s, "dsp", {"gravity_cutoff_hz", "band_low_hz", "band_high_hz", "step_threshold", "min_step_ms",
                              "max_step_ms", "baseline_begin_ms", "baseline_end_ms", "reaction_tail_ms",
                              "tap_max_path_px", "tap_max_duration_ms", "fling_min_speed_px_s"});
        read_key(s, "gravity_cutoff_hz", c.dsp.gravity_cutoff_hz);
        read_key(s, "band_low_hz", c.dsp.band_low_hz);
        read_key(s, "band_high_hz", c.dsp.band_high_hz);
        read_key(s, "step_threshold", c.dsp.steps.amplitude_threshold);
        read_key(s, "min_step_ms", c.dsp.steps.min_step_ms);
        read_key(s, "max_step_ms", c.dsp.steps.max_step_ms);
        read_key(s, "baseline_begin_ms", c.dsp.reaction.baseline_begin_ms);
        read_key(s, "baseline_end_ms", c.dsp.reaction.baseline_end_ms);
        read_key(s, "reaction_tail_ms", c.dsp.reaction.tail_ms);
        read_key(s, "tap_max_path_px", c.gestures.tap_max_path_px);
        read_key(s, "tap_max_duration_ms", c.gestures.tap_max_duration_ms);
        read_key(s, "fling_min_speed_px_s", c.gestures.fling_min_speed_px_s);
    }
    if (j.contains("svm")) {
        const auto& s = j["svm"];
        check_keys(s, "svm", {"nu", "C", "gamma", "kernel", "tol", "max_epochs", "one_class_A", "one_class_B",
                              "owner_buffer", "guest_buffer", "buffer_min_confidence", "upgrade_guest",
                              "retrain_guest", "retrain_owner", "min_samples", "gate_threshold"});
        read_key(s, "nu", c.svm.nu);
        read_key(s, "C", c.svm.C);
        if (s.contains("gamma") && !s["gamma"].is_null()) {
            double g = 0;
            read_key(s, "gamma", g);
            c.svm.gamma = g;
        }
        if (s.contains("kernel")) {
            std::string k;
            read_key(s, "kernel", k);
            if (k != "rbf" && k != "linear") throw ParseError("config: kernel must be \"rbf\" or \"linear\"");
            c.svm.kernel = k == "rbf" ? KernelType::Rbf : KernelType::Linear;
        }
        read_key(s, "tol", c.svm.smo.tol);
        read_key(s, "max_epochs", c.svm.smo.max_epochs);
        read_key(s, "one_class_A", c.svm.one_class_a);
        read_key(s, "one_class_B", c.svm.one_class_b);
        read_key(s, "owner_buffer", c.buffers.owner_capacity);
        read_key(s, "guest_buffer", c.buffers.guest_capacity);
        read_key(s, "buffer_min_confidence", c.buffers.min_confidence);
        read_key(s, "upgrade_guest", c.retrain.upgrade_guest);
        read_key(s, "retrain_guest", c.retrain.retrain_guest);
        read_key(s, "retrain_owner", c.retrain.retrain_owner);
        read_key(s, "min_samples", c.retrain.min_samples);
        if (s.contains("gate_threshold")) {
            if (s["gate_threshold"].is_null()) {
                c.svm.gate_threshold.reset();
            } else {
                double g = 0;
                read_key(s, "gate_threshold", g);
                c.svm.gate_threshold = g;
            }
        }
    }
    if (j.contains("scheduler")) {
        const auto& s = j["scheduler"];
        check_keys(s, "scheduler", {"p_theta", "p_phi", "energy_per_observation", "ema_decay", "eps_init", "history",
                                    "prior_o2g", "prior_g2o", "q_o2g", "q_g2o"});
        read_key(s, "p_theta", c.scheduler.p_theta);
        read_key(s, "p_phi", c.scheduler.p_phi);
        read_key(s, "energy_per_observation", c.scheduler.energy_per_observation);
        read_key(s, "ema_decay", c.scheduler.ema_decay);
        read_key(s, "eps_init", c.scheduler.eps_init);
        read_key(s, "history", c.scheduler.history);
        read_key(s, "prior_o2g", c.scheduler.prior_o2g);
        read_key(s, "prior_g2o", c.scheduler.prior_g2o);
        for (const char* k : {"q_o2g", "q_g2o"}) {
            if (!s.contains(k) || s[k].is_null()) continue;
            double q = 0;
            read_key(s, k, q);
            (std::string(k) == "q_o2g" ? c.scheduler.fixed_o2g : c.scheduler.fixed_g2o) = q;
        }
    }
    if (j.contains("eval")) {
        const auto& s = j["eval"];
        check_keys(s, "eval", {"owner", "warmup_static", "warmup_walking", "max_n", "walking_features", "adapt"});
        read_key(s, "owner", c.eval.owner);
        read_key(s, "warmup_static", c.eval.warmup_static);
        read_key(s, "warmup_walking", c.eval.warmup_walking);
        read_key(s, "max_n", c.eval.max_n);
        read_key(s, "walking_features", c.eval.walking_features);
        read_key(s, "adapt", c.eval.adapt);
    }
    validate(c);
    return c;
}

inline void validate(const PipelineConfig& c) {
    auto fail = [](const std::string& m) { throw ValidationError("config: " + m); };
    if (!(c.dsp.band_low_hz > 0 && c.dsp.band_low_hz < c.dsp.band_high_hz)) fail("band must satisfy 0 < low < high");
    if (!(c.svm.nu > 0 && c.svm.nu <= 1)) fail("nu must lie in (0, 1]");
    if (!(c.svm.C > 0)) fail("C must be > 0");
    if (c.svm.gamma && !(*c.svm.gamma > 0)) fail("gamma must be > 0");
    if (!(c.svm.smo.tol > 0) || c.svm.smo.max_epochs < 1) fail("tol must be > 0 and max_epochs >= 1");
    if (!(c.scheduler.p_theta > 0 && c.scheduler.p_theta < 1)) fail("p_theta must lie in (0, 1)");
    if (!(c.scheduler.p_phi >= 0 && c.scheduler.p_phi <= 1)) fail("p_phi must lie in [0, 1]");
    if (!(c.scheduler.energy_per_observation > 0)) fail("energy_per_observation must be > 0");
    if (!(c.scheduler.eps_init > 0.5 && c.scheduler.eps_init <= 1)) fail("eps_init must lie in (0.5, 1]");
    for (auto q : {c.scheduler.fixed_o2g, c.scheduler.fixed_g2o})
        if (q && !(*q >= 0 && *q <= 1)) fail("transfer probabilities must lie in [0, 1]");
    if (c.svm.gate_threshold && !std::isfinite(*c.svm.gate_threshold)) fail("gate_threshold must be finite");
    if (!(c.buffers.min_confidence >= 0.5 && c.buffers.min_confidence <= 1)) fail("buffer_min_confidence must lie in [0.5, 1]");
    if (c.eval.max_n < 1) fail("max_n must be >= 1");
}

inline nlohmann::json to_json(const PipelineConfig& c) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
    return {
        {"dsp",
         {{"gravity_cutoff_hz", c.dsp.gravity_cutoff_hz},
          {"band_low_hz", c.dsp.band_low_hz},
          {"band_high_hz", c.dsp.band_high_hz},
          {"step_threshold", c.dsp.steps.amplitude_threshold},
          {"min_step_ms", c.dsp.steps.min_step_ms},
          {"max_step_ms", c.dsp.steps.max_step_ms},
          {"baseline_begin_ms", c.dsp.reaction.baseline_begin_ms},
          {"baseline_end_ms", c.dsp.reaction.baseline_end_ms},
          {"reaction_tail_ms", c.dsp.reaction.tail_ms},
          {"tap_max_path_px", c.gestures.tap_max_path_px},
          {"tap_max_duration_ms", c.gestures.tap_max_duration_ms},
          {"fling_min_speed_px_s", c.gestures.fling_min_speed_px_s}}},
        {"svm",
         {{"nu", c.svm.nu},
          {"C", c.svm.C},
          {"gamma", opt(c.svm.gamma)},
          {"kernel", c.svm.kernel == KernelType::Rbf ? "rbf" : "linear"},
          {"tol", c.svm.smo.tol},
          {"max_epochs", c.svm.smo.max_epochs},
          {"one_class_A", c.svm.one_class_a},
          {"one_class_B", c.svm.one_class_b},
          {"owner_buffer", c.buffers.owner_capacity},
          {"guest_buffer", c.buffers.guest_capacity},
          {"buffer_min_confidence", c.buffers.min_confidence},
          {"upgrade_guest", c.retrain.upgrade_guest},
          {"retrain_guest", c.retrain.retrain_guest},
          {"retrain_owner", c.retrain.retrain_owner},
          {"min_samples", c.retrain.min_samples},
          {"gate_threshold", opt(c.svm.gate_threshold)}}},
        {"scheduler",
         {{"p_theta", c.scheduler.p_theta},
          {"p_phi", c.scheduler.p_phi},
          {"energy_per_observation", c.scheduler.energy_per_observation},
          {"ema_decay", c.scheduler.ema_decay},
          {"eps_init", c.scheduler.eps_init},
          {"history", c.scheduler.history},
          {"prior_o2g", c.scheduler.prior_o2g},
          {"prior_g2o", c.scheduler.prior_g2o},
          {"q_o2g", opt(c.scheduler.fixed_o2g)},
          {"q_g2o", opt(c.scheduler.fixed_g2o)}}},
        {"eval",
         {{"owner", c.eval.owner},
          {"warmup_static", c.eval.warmup_static},
          {"warmup_walking", c.eval.warmup_walking},
          {"max_n", c.eval.max_n},
          {"walking_features", c.eval.walking_features},
          {"adapt", c.eval.adapt}}}};
}

// ---------------------------------------------------------------------------
// Actions

struct ActionRecord {
    std::size_t index = 0;
    const TouchEvent* touch = nullptr;
    Scenario scenario = Scenario::Static;  // as detected from the IMU
    std::optional<Observation> obs;
    std::string error;  // why obs is missing
    std::optional<std::size_t> label;
    std::string user;
    bool truth_owner = false;
    bool warmup = false;
    bool sensitive = false;
    bool switched_to_sensitive = false;
};

inline std::string resolve_owner(const SessionTrace& tr, const EvalConfig& e) {
    if (!e.owner.empty()) return e.owner;
    return tr.labels.empty() ? std::string() : tr.labels.front().user;
}

/// Builds one record per touch (in time order) with its observation, ground truth and app context.
inline std::vector<ActionRecord> prepare_actions(const SessionTrace& tr, const PipelineConfig& cfg) {
    const std::string owner = resolve_owner(tr, cfg.eval);
    const ScreenScale scale = ScreenScale::from(tr.meta);
    std::optional<dsp::MotionTrack> track;
    if (tr.imu.size() >= 2) track = dsp::track_motion(tr.imu, cfg.dsp);

    std::vector<ActionRecord> out;
    out.reserve(tr.touches.size());
    std::size_t app_i = 0;
    bool sensitive = false, prev_sensitive = false;
    std::size_t warm_static = 0, warm_walking = 0;
    for (std::size_t i = 0; i < tr.touches.size(); ++i) {
        const auto& e = tr.touches[i];
        ActionRecord a;
        a.index = i;
        a.touch = &e;
        while (app_i < tr.app_events.size() && tr.app_events[app_i].t <= e.t_down) sensitive = tr.app_events[app_i++].sensitive;
        a.sensitive = sensitive;
        a.switched_to_sensitive = sensitive && !prev_sensitive;
        prev_sensitive = sensitive;
        for (std::size_t l = 0; l < tr.labels.size(); ++l)
            if (tr.labels[l].contains(e.t_down, e.t_up)) {
                a.label = l;
                a.user = tr.labels[l].user;
                a.truth_owner = a.user == owner;
            }
        a.scenario = track ? scenario_at(*track, e.t_down) : Scenario::Static;
        try {
            if (a.scenario == Scenario::Static) {
                a.obs = static_observation(e, tr.imu, scale, cfg.dsp.reaction);
            } else {
                a.obs = motion_observation(e, *track, scale);
                if (!cfg.eval.walking_features) a.obs->features.resize(kTouchDims);
            }
            a.obs->gesture = classify_gesture(e, cfg.gestures);
        } catch (const ComputeError& ex) {
            a.obs.reset();
            a.error = ex.what();
        }
        if (a.obs && a.truth_owner) {
            auto& count = a.scenario == Scenario::Static ? warm_static : warm_walking;
            const auto limit = a.scenario == Scenario::Static ? cfg.eval.warmup_static : cfg.eval.warmup_walking;
            if (count < limit) {
                a.warmup = true;
                ++count;
            }
        }
        out.push_back(std::move(a));
    }
    return out;
}

/// Initial models and buffers from the warm-up actions.
inline std::pair<ModelBank, TrainingBuffers> warm_up(const std::vector<ActionRecord>& actions, const PipelineConfig& cfg) {
    std::vector<Observation> owner;
    TrainingBuffers buffers(cfg.buffers);
    for (const auto& a : actions)
        if (a.warmup) {
            owner.push_back(*a.obs);
            buffers.add_unchecked(*a.obs, true);
        }
    ModelBank bank;
    for (Scenario s : {Scenario::Static, Scenario::Walking}) {
        try {
            bank.add_initial(owner, s, cfg.svm, cfg.retrain);
        } catch (const ComputeError& ex) {
            throw ComputeError(std::string("warm-up training (") + std::string(to_string(s)) + "): " + ex.what());
        }
    }
    return {std::move(bank), std::move(buffers)};
}

// ---------------------------------------------------------------------------
// Online run

struct ConclusionRecord {
    std::size_t action = 0;
    std::int64_t t = 0;
    bool owner = true;
    bool truth_owner = true;
    double confidence = 0;
    std::size_t delay = 0;
};

struct OnlineResult {
    std::vector<ScoredJudgement> judgements;
    std::vector<ConclusionRecord> conclusions;  // first conclusion of each run
    std::vector<nlohmann::json> decisions;      // one per scored action
    std::vector<nlohmann::json> protection;
    std::size_t actions = 0, sensed = 0, retrains = 0;
    double final_q_o2g = 0, final_q_g2o = 0;
};

inline OnlineResult run_online(const std::vector<ActionRecord>& actions, ModelBank bank, TrainingBuffers buffers,
                               const PipelineConfig& cfg, bool scheduled) {
    OnlineResult r;
    Identifier id(cfg.scheduler.p_theta, cfg.buffers);
    id.buffers() = std::move(buffers);
    Scheduler sch(cfg.scheduler);
    id.on_protection = [&](const ProtectionEvent& ev) {
        r.protection.push_back({{"t", ev.t},
                                {"action", std::string(to_string(ev.action))},
                                {"confidence", ev.confidence},
                                {"delay", id.state().delay()}});
    };
    for (const auto& a : actions) {
        if (a.warmup) continue;
        ++r.actions;
        bool sense = true;
        if (scheduled) {
            sense = sch.before_action(a.sensitive, a.switched_to_sensitive);
            if (sch.last().started) id.restart();
        }
        if (sense) ++r.sensed;
        nlohmann::json d{{"action", a.index}, {"t", a.touch->t_down}, {"touch_id", a.touch->id}, {"sensing", sense}};
        const SvmModel* model = a.obs ? bank.select(a.obs->scenario, a.obs->gesture) : nullptr;
        if (sense && model) {
            Judgement j;
            try {
                j = judge(*model, a.obs->features);
            } catch (const std::exception& ex) {
                throw ComputeError("action " + std::to_string(a.index) + ": " + ex.what());
            }
            r.judgements.push_back({a.index, a.touch->t_down, a.user, a.truth_owner, a.obs->scenario, a.obs->gesture,
                                    j.owner, j.confidence, j.decision, a.label.value_or(0)});
            const auto c = id.observe(j, *a.obs);
            const bool reset = id.state().delay() == 1;
            if (c && c->first_of_run)
                r.conclusions.push_back({a.index, a.touch->t_down, c->owner, a.truth_owner, c->confidence, c->delay});
            if (c && cfg.eval.adapt) r.retrains += bank.update(id.buffers(), a.obs->scenario, cfg.svm, cfg.retrain);
            if (scheduled)
                sch.after_observation(j.confidence, id.state().P(), reset, c ? std::optional<bool>(c->owner) : std::nullopt,
                                      c && c->first_of_run, a.touch->t_down);
            d["judgement"] = {{"identity", j.owner ? "owner" : "guest"}, {"confidence", j.confidence}, {"decision", j.decision}};
            d["P"] = id.state().P();
            d["conclusion"] = c ? nlohmann::json{{"identity", c->owner ? "owner" : "guest"},
                                                 {"confidence", c->confidence},
                                                 {"delay", c->delay}}
                                : nlohmann::json();
        } else {
            d["judgement"] = nullptr;
            if (sense) d["skipped"] = a.obs ? "no model" : a.error;
        }
        if (scheduled) {
            const auto& st = sch.state();
            d["started"] = sch.last().started;
            d["stopped"] = sch.last().stopped;
            d["Pj"] = st.Pj;
            d["E"] = st.E;
            d["q_o2g"] = st.q_o2g;
            d["q_g2o"] = st.q_g2o;
        }
        r.decisions.push_back(std::move(d));
    }
    r.final_q_o2g = sch.state().q_o2g;
    r.final_q_g2o = sch.state().q_g2o;
    return r;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json rates_json(const std::vector<std::optional<double>>& v) {
    auto a = nlohmann::json::array();
    for (const auto& x : v) a.push_back(x ? nlohmann::json(*x) : nlohmann::json());
    return a;
}

inline nlohmann::json curve_json(const RateCurve& c) {
    return {{"far", rates_json(c.far)},
            {"frr", rates_json(c.frr)},
            {"owner_windows", c.owner_windows},
            {"guest_windows", c.guest_windows}};
}

struct PipelineResult {
    nlohmann::json report;
    std::string curves_csv;
    std::string decision_log;    // JSONL, scheduled pass
    std::string protection_log;  // JSONL, scheduled pass
    std::string judgement_log;   // JSONL, always-on pass
    OnlineResult always_on, scheduled;
};

inline std::string jsonl(const std::vector<nlohmann::json>& v) {
    std::string s;
    for (const auto& j : v) s += j.dump() + "\n";
    return s;
}

inline std::string csv_number(const std::optional<double>& v) { return v ? format_fixed(*v) : std::string(); }

inline PipelineResult run_pipeline(const SessionTrace& tr, const PipelineConfig& cfg) {
    const auto actions = prepare_actions(tr, cfg);
    auto [bank, buffers] = warm_up(actions, cfg);
    PipelineResult res;
    res.always_on = run_online(actions, bank, buffers, cfg, false);
    res.scheduled = run_online(actions, bank, buffers, cfg, true);

    auto& rep = res.report;
    rep["format"] = "silentsense-report";
    rep["version"] = 1;
    rep["owner"] = resolve_owner(tr, cfg.eval);
    rep["config"] = to_json(cfg);
    std::size_t warm = 0, skipped = 0;
    auto skipped_list = nlohmann::json::array();
    for (const auto& a : actions) {
        warm += a.warmup;
        if (!a.obs) {
            ++skipped;
            skipped_list.push_back({{"action", a.index}, {"touch_id", a.touch->id}, {"reason", a.error}});
        }
    }
    std::size_t owner_scored = 0, guest_scored = 0;
    for (const auto& j : res.always_on.judgements) (j.truth_owner ? owner_scored : guest_scored)++;
    rep["actions"] = {{"total", actions.size()},
                      {"warmup", warm},
                      {"without_observation", skipped},
                      {"scored", res.always_on.judgements.size()},
                      {"owner", owner_scored},
                      {"guest", guest_scored}};
    rep["skipped"] = skipped_list;

    std::string csv = "scenario,gesture,n,far,frr,owner_windows,guest_windows\n";
    for (Scenario s : {Scenario::Static, Scenario::Walking}) {
        std::vector<ScoredJudgement> js;
        for (const auto& j : res.always_on.judgements)
            if (j.scenario == s) js.push_back(j);
        const std::string key(to_string(s));
        if (js.empty()) {
            rep["curves"][key] = nullptr;
            continue;
        }
        auto emit = [&](const std::string& gname, const RateCurve& c) {
            rep["curves"][key][gname] = curve_json(c);
            for (std::size_t n = 0; n < c.far.size(); ++n)
                csv += key + "," + gname + "," + std::to_string(n + 1) + "," + csv_number(c.far[n]) + "," +
                       csv_number(c.frr[n]) + "," + std::to_string(c.owner_windows[n]) + "," +
                       std::to_string(c.guest_windows[n]) + "\n";
        };
        emit("pooled", compute_far_frr(js, cfg.eval.max_n));
        for (Gesture g : kGestures) emit(std::string(to_string(g)), compute_far_frr(js, cfg.eval.max_n, g));
        auto eer = single_action_eer(js);
        rep["single_action_eer"][key] = eer ? nlohmann::json(*eer) : nlohmann::json();
    }
    auto acc = nlohmann::json::object();
    for (const auto& [u, v] : accuracy_by_user(res.always_on.judgements, cfg.eval.max_n)) acc[u] = rates_json(v);
    rep["accuracy_by_user"] = acc;

    const auto& sc = res.scheduled;
    double delay = 0;
    std::size_t correct = 0;
    for (const auto& c : sc.conclusions) {
        delay += static_cast<double>(c.delay);
        correct += c.owner == c.truth_owner;
    }
    const double n_c = static_cast<double>(sc.conclusions.size());
    auto opt_ratio = [](double a, double b) { return b > 0 ? nlohmann::json(a / b) : nlohmann::json(); };
    rep["online"] = {{"actions", sc.actions},
                     {"sensed", sc.sensed},
                     {"sensors_off_fraction", opt_ratio(static_cast<double>(sc.actions - sc.sensed), static_cast<double>(sc.actions))},
                     {"conclusions", sc.conclusions.size()},
                     {"mean_delay", opt_ratio(delay, n_c)},
                     {"conclusion_accuracy", opt_ratio(static_cast<double>(correct), n_c)},
                     {"energy_saved_fraction",
                      opt_ratio(static_cast<double>(res.always_on.sensed - sc.sensed), static_cast<double>(res.always_on.sensed))},
                     {"protection_events", sc.protection.size()},
                     {"retrains", sc.retrains},
                     {"q_o2g", sc.final_q_o2g},
                     {"q_g2o", sc.final_q_g2o}};
    rep["always_on"] = {{"conclusions", res.always_on.conclusions.size()}, {"retrains", res.always_on.retrains}};

    res.curves_csv = std::move(csv);
    res.decision_log = jsonl(sc.decisions);
    res.protection_log = jsonl(sc.protection);
    std::vector<nlohmann::json> jl;
    for (const auto& j : res.always_on.judgements)
        jl.push_back({{"action", j.action},
                      {"t", j.t},
                      {"user", j.user},
                      {"truth", j.truth_owner ? "owner" : "guest"},
                      {"scenario", std::string(to_string(j.scenario))},
                      {"gesture", std::string(to_string(j.gesture))},
                      {"identity", j.owner ? "owner" : "guest"},
                      {"confidence", j.confidence},
                      {"decision", j.decision},
                      {"segment", j.segment}});
    res.judgement_log = jsonl(jl);
    return res;
}

/// Models trained on every owner observation in a trace; slots with enough labelled guest data
/// are upgraded to two-class models.
inline ModelBank train_from_trace(const SessionTrace& tr, const PipelineConfig& cfg) {
    PipelineConfig c = cfg;
    c.eval.warmup_static = c.eval.warmup_walking = std::numeric_limits<std::size_t>::max();
    const auto actions = prepare_actions(tr, c);
    auto [bank, buffers] = warm_up(actions, c);
    for (const auto& a : actions)
        if (a.obs && a.label && !a.truth_owner) buffers.add_unchecked(*a.obs, false);
    for (Scenario s : {Scenario::Static, Scenario::Walking}) bank.update(buffers, s, c.svm, c.retrain);
    if (bank.empty()) throw ComputeError("train: not enough owner observations to train any model");
    return bank;
}

/// Scheduled identification of every action of a trace with given models (no warm-up).
inline OnlineResult identify_trace(const SessionTrace& tr, const ModelBank& bank, const PipelineConfig& cfg) {
    PipelineConfig c = cfg;
    c.eval.warmup_static = c.eval.warmup_walking = 0;
    return run_online(prepare_actions(tr, c), bank, TrainingBuffers(c.buffers), c, true);
}

/// Tap reactions on the reference screen for the heatmap, optionally restricted to one user.
inline std::vector<TapReaction> tap_reactions(const SessionTrace& tr, const PipelineConfig& cfg,
                                              const std::string& user = {}) {
    std::vector<TapReaction> out;
    PipelineConfig c = cfg;
    c.eval.warmup_static = c.eval.warmup_walking = 0;
    for (const auto& a : prepare_actions(tr, c)) {
        if (!a.obs || a.obs->scenario != Scenario::Static || a.obs->gesture != Gesture::Tap) continue;
        if (!user.empty() && a.user != user) continue;
        const auto& f = a.obs->features;
        out.push_back({f[0], f[1], f[4], f[5]});
    }
    return out;
}

inline std::string heatmap_csv(const Heatmap& h) {
    std::string s = "row,col,count,mean_vibration,mean_rotation\n";
    for (std::size_t r = 0; r < kGridRows; ++r)
        for (std::size_t c = 0; c < kGridCols; ++c) {
            const auto& cell = h.cells[r][c];
            s += std::to_string(r) + "," + std::to_string(c) + "," + std::to_string(cell.count) + "," +
                 format_fixed(cell.vibration) + "," + format_fixed(cell.rotation) + "\n";
        }
    return s;
}

}  // namespace silentsense
