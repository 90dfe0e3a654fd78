#pragma once

// Streaming identification: runs of consistent judgements accumulate confidence
// P = 1 - prod(1 - ε_i); a conclusion is drawn once P exceeds the threshold.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "classifier.hpp"
#include "core.hpp"
#include "features.hpp"
#include "svm.hpp"

namespace silentsense {

struct LogEntry {
    double confidence = 0;
    std::optional<Observation> observation;  // absent when only the judgement is known
};

/// One run of consistent judgements. Indices are 1-based positions in the judgement stream.
struct IdentityState {
    std::size_t s = 0, k = 0;  // run start and latest index; k == 0 means nothing ingested yet
    bool owner = true;         // verdict shared by the run
    double miss = 1.0;         // prod(1 - ε_i) over the run
    std::vector<LogEntry> log;
    bool concluded = false;       // the run has already produced a conclusion
    std::size_t buffered = 0;     // log entries already offered to the training buffers

    double P() const { return 1.0 - miss; }
    std::size_t delay() const { return k == 0 ? 0 : k - s + 1; }
    bool empty() const { return k == 0; }

    /// P recomputed from the log.
    double recompute() const {
        double m = 1.0;
        for (const auto& e : log) m *= 1.0 - e.confidence;
        return 1.0 - m;
    }
};

struct Conclusion {
    bool owner = true;
    double confidence = 0;
    std::size_t delay = 0;  // observations in the run, k - s + 1
    std::int64_t t = 0;
    bool first_of_run = true;
};

/// Adds a judgement: extends the run if the verdict agrees, otherwise starts a new run at k.
inline IdentityState ingest(IdentityState st, bool owner, double confidence, std::optional<Observation> obs = {}) {
    if (!(confidence >= 0.5 && confidence <= 1.0))
        throw ValidationError("ingest: confidence must lie in [0.5, 1], got " + std::to_string(confidence));
    ++st.k;
    if (st.log.empty() || owner != st.owner) {
        st.s = st.k;
        st.owner = owner;
        st.miss = 1.0;
        st.log.clear();
        st.concluded = false;
        st.buffered = 0;
    }
    st.miss *= 1.0 - confidence;
    st.log.push_back({confidence, std::move(obs)});
    return st;
}

inline IdentityState ingest(IdentityState st, const Judgement& j, std::optional<Observation> obs = {}) {
    return ingest(std::move(st), j.owner, j.confidence, std::move(obs));
}

inline std::optional<Conclusion> try_conclude(const IdentityState& st, double p_theta = 0.98, std::int64_t t = 0) {
    if (st.empty() || !(st.P() > p_theta)) return std::nullopt;
    return Conclusion{st.owner, st.P(), st.delay(), t, !st.concluded};
}

struct ProtectionEvent {
    enum class Action { Enable, Reset };
    Action action = Action::Reset;
    std::int64_t t = 0;
    double confidence = 0;
};

inline std::string_view to_string(ProtectionEvent::Action a) {
    return a == ProtectionEvent::Action::Enable ? "enable" : "reset";
}

/// Protection follows the first conclusion of each run: enabled for a guest, reset for the owner.
/// Every conclusion hands the run's not yet offered observations to the matching buffer.
inline std::optional<ProtectionEvent> on_conclusion(const Conclusion& c, IdentityState& st, TrainingBuffers& buffers) {
    for (std::size_t i = st.buffered; i < st.log.size(); ++i)
        if (st.log[i].observation) buffers.add(*st.log[i].observation, c.owner, st.log[i].confidence);
    st.buffered = st.log.size();
    const bool first = !st.concluded;
    st.concluded = true;
    if (!first) return std::nullopt;
    return ProtectionEvent{c.owner ? ProtectionEvent::Action::Reset : ProtectionEvent::Action::Enable, c.t,
                           c.confidence};
}

/// Ties the pieces together for a single session thread.
class Identifier {
public:
    explicit Identifier(double p_theta = 0.98, BufferPolicy buffers = {}) : p_theta_(p_theta), buffers_(buffers) {}

    std::function<void(const ProtectionEvent&)> on_protection;

    std::optional<Conclusion> observe(const Judgement& j, const Observation& o) {
        state_ = ingest(std::move(state_), j, o);
        auto c = try_conclude(state_, p_theta_, o.t);
        if (c) {
            auto ev = on_conclusion(*c, state_, buffers_);
            if (ev && on_protection) on_protection(*ev);
        }
        return c;
    }

    /// Drops the current run; the next judgement starts afresh.
    void restart() {
        const std::size_t k = state_.k;
        state_ = IdentityState{};
        state_.k = k;
        state_.s = k + 1;
    }

    const IdentityState& state() const { return state_; }
    TrainingBuffers& buffers() { return buffers_; }
    const TrainingBuffers& buffers() const { return buffers_; }
    double p_theta() const { return p_theta_; }

private:
    double p_theta_;
    IdentityState state_;
    TrainingBuffers buffers_;
};

}  // namespace silentsense
