#pragma once

// Observation scheduling: stop sensing once a conclusion is reached and one more observation
// would lower the utility P/E; while off, decay the identity estimate through a two-state
// owner/guest transfer model and restart when it drops below P_φ or a sensitive app comes up.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <cstdint>
#include <deque>
#include <optional>
#include <utility>

#include "core.hpp"

namespace silentsense {

struct SchedulerConfig {
    double p_theta = 0.98;
    double p_phi = 0.8;
    double energy_per_observation = 1.0;
    double ema_decay = 0.95;
    double eps_init = 0.75;
    std::size_t history = 50;  // conclusions used to learn the transfer model
    double prior_o2g = 0.05, prior_g2o = 0.5;
    std::optional<double> fixed_o2g, fixed_g2o;  // bypass learning when set
};

struct SchedulerState {
    bool sensing = true;
    double P = 0;  // accumulated confidence of the current run
    double E = 0;  // energy spent on the current run
    double eps_bar = 0.75, e_bar = 1.0;
    std::optional<bool> last_identity;  // owner = true, from the conclusion that stopped sensing
    std::int64_t last_conclusion_t = 0;
    double Pj = 1.0;  // off-mode estimate that the last identity still holds
    double q_o2g = 0.05, q_g2o = 0.5;
};

inline double utility(double P, double E) {
    if (!(E > 0)) throw ComputeError("utility: energy must be > 0");
    return P / E;
}

/// One-step lookahead: stop iff P > P_θ and U now is at least the expected U after one more observation.
inline bool should_stop(const SchedulerState& st, double p_theta = 0.98) {
    if (!st.sensing || !(st.P > p_theta) || !(st.E > 0)) return false;
    const double p_next = 1.0 - (1.0 - st.P) * (1.0 - st.eps_bar);
    const double e_next = st.E + st.e_bar;
    return st.P / st.E >= p_next / e_next;
}

/// One action's worth of decay of the belief that the last concluded identity still holds.
inline double decay_estimate(double P, bool owner, double q_o2g, double q_g2o) {
    const double leave = owner ? q_o2g : q_g2o;
    const double enter = owner ? q_g2o : q_o2g;
    return std::clamp(P * (1.0 - leave) + (1.0 - P) * enter, 0.0, 1.0);
}

/// Restart on a switch into a sensitive app or once the estimate falls below P_φ.
inline bool should_start(const SchedulerState& st, bool switched_to_sensitive, double p_phi = 0.8) {
    if (st.sensing) return false;
    return switched_to_sensitive || st.Pj < p_phi;
}

/// Laplace-smoothed transition rates between consecutive conclusions (owner = true).
template <typename Range>
std::pair<double, double> learn_transfer(const Range& history, double prior_o2g = 0.05, double prior_g2o = 0.5) {
    if (std::size(history) < 2) return {prior_o2g, prior_g2o};
    double oo = 0, og = 0, go = 0, gg = 0;
    bool first = true, prev = true;
    for (bool cur : history) {
        if (!first) {
            if (prev) (cur ? oo : og) += 1;
            else (cur ? go : gg) += 1;
        }
        first = false;
        prev = cur;
    }
    return {(og + 1) / (oo + og + 2), (go + 1) / (go + gg + 2)};
}

/// Charges one observation: E grows by e, and ε̄, ē track exponential moving averages.
inline SchedulerState account_energy(SchedulerState st, bool taken, double eps, double e = 1.0, double decay = 0.95) {
    if (!taken) return st;
    st.E += e;
    st.e_bar = decay * st.e_bar + (1.0 - decay) * e;
    st.eps_bar = decay * st.eps_bar + (1.0 - decay) * eps;
    return st;
}

/// What the scheduler did at one touch action.
struct Decision {
    bool sensed = false;      // an observation was taken for this action
    bool started = false;     // sensing was switched on at this action
    bool stopped = false;     // sensing was switched off after this action
    bool sensitive = false;   // foreground app sensitive
    double P = 0, Pj = 0, E = 0;
};

/// Per-session scheduling state machine. The caller reports each touch action; when it returns
/// `sensed`, the caller must supply the run's confidence via `after_observation`.
class Scheduler {
public:
    explicit Scheduler(SchedulerConfig cfg = {}) : cfg_(cfg) {
        st_.eps_bar = cfg.eps_init;
        st_.e_bar = cfg.energy_per_observation;
        refresh_transfer();
    }

    /// Called at each touch action before any observation; returns whether to sense it.
    bool before_action(bool sensitive_app, bool switched_to_sensitive) {
        last_ = Decision{};
        last_.sensitive = sensitive_app;
        if (!st_.sensing) {
            st_.Pj = decay_estimate(st_.Pj, st_.last_identity.value_or(true), st_.q_o2g, st_.q_g2o);
            // A sensitive app in the foreground keeps sensing on.
            if (should_start(st_, switched_to_sensitive || sensitive_app, cfg_.p_phi)) {
                st_.sensing = true;
                st_.P = 0;
                st_.E = 0;
                last_.started = true;
            }
        }
        last_.sensed = st_.sensing;
        last_.Pj = st_.Pj;
        return st_.sensing;
    }

    /// Records the observation just taken. `run_reset` tells whether it opened a new run;
    /// `conclusion` carries the identity when the run's P exceeds P_θ. Returns true if sensing stops.
    bool after_observation(double eps, double run_P, bool run_reset, std::optional<bool> conclusion, bool first_of_run,
                           std::int64_t t) {
        if (run_reset) st_.E = 0;
        st_ = account_energy(st_, true, eps, cfg_.energy_per_observation, cfg_.ema_decay);
        st_.P = run_P;
        if (conclusion && first_of_run) {
            history_.push_back(*conclusion);
            while (history_.size() > cfg_.history) history_.pop_front();
            refresh_transfer();
        }
        last_.P = st_.P;
        last_.E = st_.E;
        if (conclusion && !last_.sensitive && should_stop(st_, cfg_.p_theta)) {
            st_.sensing = false;
            st_.last_identity = *conclusion;
            st_.last_conclusion_t = t;
            st_.Pj = st_.P;
            last_.stopped = true;
        }
        return last_.stopped;
    }

    const SchedulerState& state() const { return st_; }
    const Decision& last() const { return last_; }
    const SchedulerConfig& config() const { return cfg_; }

private:
    void refresh_transfer() {
        const auto [o2g, g2o] = learn_transfer(history_, cfg_.prior_o2g, cfg_.prior_g2o);
        st_.q_o2g = cfg_.fixed_o2g.value_or(o2g);
        st_.q_g2o = cfg_.fixed_g2o.value_or(g2o);
    }

    SchedulerConfig cfg_;
    SchedulerState st_;
    std::deque<bool> history_;
    Decision last_;
};

}  // namespace silentsense
