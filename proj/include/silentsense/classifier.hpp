#pragma once

// Self-learning model management: high-confidence observation buffers, per-(scenario, gesture)
// models with a pooled fallback, and the one-class -> two-class upgrade and retraining policy.

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "features.hpp"
#include "svm.hpp"

namespace silentsense {

/// Fixed-capacity FIFO that counts every insertion, including evicted ones.
template <typename T>
class RingBuffer {
public:
    explicit RingBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(T v) {
        if (capacity_ == 0) return;
        if (items_.size() == capacity_) items_.pop_front();
        items_.push_back(std::move(v));
        ++added_;
    }
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::uint64_t added() const { return added_; }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::size_t capacity_;
    std::deque<T> items_;
    std::uint64_t added_ = 0;
};

struct BufferPolicy {
    std::size_t owner_capacity = 500;
    std::size_t guest_capacity = 200;
    double min_confidence = 0.8;
};

/// Observations confirmed by conclusions, split by identity. Only entries with ε >= min_confidence
/// are accepted; the per-gesture counters drive retraining.
class TrainingBuffers {
public:
    explicit TrainingBuffers(BufferPolicy policy = {})
        : policy_(policy), owner_(policy.owner_capacity), guest_(policy.guest_capacity) {}

    /// Returns whether the observation was buffered.
    bool add(const Observation& o, bool owner, double confidence) {
        if (confidence < policy_.min_confidence) return false;
        add_unchecked(o, owner);
        return true;
    }
    /// Warm-up data bypasses the confidence gate.
    void add_unchecked(const Observation& o, bool owner) {
        (owner ? owner_ : guest_).push(o);
        ++(owner ? owner_added_ : guest_added_)[static_cast<std::size_t>(o.gesture)];
    }

    const RingBuffer<Observation>& owner() const { return owner_; }
    const RingBuffer<Observation>& guest() const { return guest_; }
    const BufferPolicy& policy() const { return policy_; }

    /// Insertions so far for one gesture, or over all gestures.
    std::uint64_t owner_added(std::optional<Gesture> g = {}) const { return count(owner_added_, g); }
    std::uint64_t guest_added(std::optional<Gesture> g = {}) const { return count(guest_added_, g); }

    std::vector<std::vector<double>> vectors(bool owner, Scenario s, std::optional<Gesture> g = {}) const {
        std::vector<std::vector<double>> out;
        for (const auto& o : owner ? owner_ : guest_)
            if (o.scenario == s && (!g || o.gesture == *g)) out.push_back(o.features);
        return out;
    }

private:
    static std::uint64_t count(const std::array<std::uint64_t, 3>& a, std::optional<Gesture> g) {
        return g ? a[static_cast<std::size_t>(*g)] : a[0] + a[1] + a[2];
    }

    BufferPolicy policy_;
    RingBuffer<Observation> owner_, guest_;
    std::array<std::uint64_t, 3> owner_added_{}, guest_added_{};
};

struct RetrainPolicy {
    std::size_t upgrade_guest = 20;  // guest vectors needed to move to a two-class model
    std::uint64_t retrain_guest = 10;
    std::uint64_t retrain_owner = 50;
    std::size_t min_samples = 10;  // below this a gesture falls back to the pooled model
};

/// Copy of a one-class model without the in-memory training data.
inline SvmModel strip(const SvmModel& m) {
    SvmModel g = m;
    g.train_x.clear();
    g.train_y.clear();
    g.alpha.clear();
    return g;
}

/// New model for the slot described by `current.meta`, or nothing if the policy does not call
/// for one or training fails (the caller keeps the prior model).
inline std::optional<SvmModel> maybe_retrain(const TrainingBuffers& buf, const SvmModel& current,
                                             const SvmConfig& svm = {}, const RetrainPolicy& policy = {}) {
    const auto& meta = current.meta;
    const auto owner = buf.vectors(true, meta.scenario, meta.gesture);
    const auto guest = buf.vectors(false, meta.scenario, meta.gesture);
    const auto owner_added = buf.owner_added(meta.gesture), guest_added = buf.guest_added(meta.gesture);
    bool due = false;
    if (current.kind == SvmKind::OneClass)
        due = guest.size() >= policy.upgrade_guest;
    else
        due = guest_added >= meta.guest_added + policy.retrain_guest || owner_added >= meta.owner_added + policy.retrain_owner;
    if (!due || owner.size() < policy.min_samples || guest.size() < policy.min_samples) return std::nullopt;
    try {
        auto m = train_two_class(owner, guest, svm);
        if (svm.gate_threshold) {
            m.gate = current.kind == SvmKind::OneClass ? std::make_shared<const SvmModel>(strip(current)) : current.gate;
            m.gate_threshold = *svm.gate_threshold;
        }
        m.meta.scenario = meta.scenario;
        m.meta.gesture = meta.gesture;
        m.meta.owner_added = owner_added;
        m.meta.guest_added = guest_added;
        return m;
    } catch (const ComputeError&) {
        return std::nullopt;
    }
}

/// Models keyed by (scenario, gesture); an entry with no gesture is the scenario's pooled model.
class ModelBank {
public:
    using Key = std::pair<Scenario, std::optional<Gesture>>;

    void put(SvmModel m) {
        Key k{m.meta.scenario, m.meta.gesture};
        models_.insert_or_assign(k, std::move(m));
    }
    const SvmModel* find(Scenario s, std::optional<Gesture> g) const {
        auto it = models_.find({s, g});
        return it == models_.end() ? nullptr : &it->second;
    }
    /// Per-gesture model if one exists, else the pooled model, else null.
    const SvmModel* select(Scenario s, Gesture g) const {
        if (auto* m = find(s, g)) return m;
        return find(s, std::nullopt);
    }
    bool has_scenario(Scenario s) const {
        for (const auto& [k, m] : models_)
            if (k.first == s) return true;
        return false;
    }
    const std::map<Key, SvmModel>& models() const { return models_; }
    bool empty() const { return models_.empty(); }

    /// One-class models from owner observations of one scenario: a model per gesture with enough
    /// samples, plus a pooled model when some gesture falls short.
    static ModelBank train_initial(std::span<const Observation> owner, Scenario s, const SvmConfig& svm = {},
                                   const RetrainPolicy& policy = {}) {
        ModelBank bank;
        bank.add_initial(owner, s, svm, policy);
        return bank;
    }

    void add_initial(std::span<const Observation> owner, Scenario s, const SvmConfig& svm = {},
                     const RetrainPolicy& policy = {}) {
        std::array<std::vector<std::vector<double>>, 3> per;
        std::vector<std::vector<double>> all;
        for (const auto& o : owner) {
            if (o.scenario != s) continue;
            per[static_cast<std::size_t>(o.gesture)].push_back(o.features);
            all.push_back(o.features);
        }
        bool short_gesture = false;
        for (Gesture g : kGestures) {
            const auto& v = per[static_cast<std::size_t>(g)];
            if (v.size() < policy.min_samples) {
                short_gesture = true;
                continue;
            }
            auto m = train_one_class(v, svm);
            m.meta.scenario = s;
            m.meta.gesture = g;
            put(std::move(m));
        }
        if (short_gesture && all.size() >= policy.min_samples) {
            auto m = train_one_class(all, svm);
            m.meta.scenario = s;
            put(std::move(m));
        }
    }

    /// Applies maybe_retrain to every model of scenario s, and creates per-gesture models for
    /// gestures that have gathered enough owner data since. Returns the number of models replaced.
    std::size_t update(const TrainingBuffers& buf, Scenario s, const SvmConfig& svm = {},
                       const RetrainPolicy& policy = {}) {
        std::size_t changed = 0;
        for (Gesture g : kGestures) {
            if (find(s, g)) continue;
            const auto owner = buf.vectors(true, s, g);
            if (owner.size() < policy.min_samples) continue;
            try {
                auto m = train_one_class(owner, svm);
                m.meta.scenario = s;
                m.meta.gesture = g;
                put(std::move(m));
                ++changed;
            } catch (const ComputeError&) {
            }
        }
        std::vector<SvmModel> fresh;
        for (const auto& [k, m] : models_)
            if (k.first == s)
                if (auto r = maybe_retrain(buf, m, svm, policy)) fresh.push_back(std::move(*r));
        for (auto& m : fresh) {
            put(std::move(m));
            ++changed;
        }
        return changed;
    }

private:
    std::map<Key, SvmModel> models_;
};

inline nlohmann::json to_json(const ModelBank& bank) {
    nlohmann::json j;
    j["format"] = "silentsense-models";
    j["version"] = kModelFormatVersion;
    j["models"] = nlohmann::json::array();
    for (const auto& [k, m] : bank.models()) j["models"].push_back(to_json(m));
    return j;
}

inline ModelBank bank_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", std::string()) != "silentsense-models")
        throw ParseError("model file: missing \"format\": \"silentsense-models\"");
    if (j.value("version", 0) != kModelFormatVersion)
        throw ParseError("model file: unsupported version " + j.value("version", nlohmann::json()).dump());
    ModelBank bank;
    if (!j.contains("models") || !j["models"].is_array()) throw ParseError("model file: \"models\" must be an array");
    for (const auto& m : j["models"]) bank.put(model_from_json(m));
    return bank;
}

}  // namespace silentsense
