#pragma once

// Evaluation metrics: FAR/FRR as a function of the number of observations behind a conclusion,
// single-action equal error rate, and the touch-reaction heatmap.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "features.hpp"
#include "trace.hpp"

namespace silentsense {

/// A judgement with its ground truth.
struct ScoredJudgement {
    std::size_t action = 0;  // index of the touch action in the trace
    std::int64_t t = 0;
    std::string user;
    bool truth_owner = true;
    Scenario scenario = Scenario::Static;
    Gesture gesture = Gesture::Tap;
    bool owner = true;  // verdict
    double confidence = 0.5;
    double decision = 0;
    std::size_t segment = 0;  // ground-truth label index
};

struct RateCurve {
    std::vector<std::optional<double>> far, frr;  // index n - 1
    std::vector<std::size_t> owner_windows, guest_windows;
};

/// Conclusion of a window: identities compete by accumulated confidence 1 - prod(1 - ε) over
/// the judgements voting for them; on a tie the last judgement decides.
inline bool window_verdict(std::span<const ScoredJudgement> w) {
    double miss_owner = 1.0, miss_guest = 1.0;
    for (const auto& j : w) (j.owner ? miss_owner : miss_guest) *= 1.0 - j.confidence;
    if (miss_owner < miss_guest) return true;
    if (miss_guest < miss_owner) return false;
    return w.back().owner;
}

/// FAR and FRR for n = 1..max_n over sliding windows of n consecutive judgements taken within
/// one ground-truth segment (optionally one gesture only). FAR is averaged over guests, FRR is
/// pooled over the owner's windows. A class with no window yields an absent rate.
inline RateCurve compute_far_frr(std::span<const ScoredJudgement> js, std::size_t max_n,
                                 std::optional<Gesture> gesture = {}) {
    std::map<std::size_t, std::vector<ScoredJudgement>> segments;
    for (const auto& j : js)
        if (!gesture || j.gesture == *gesture) segments[j.segment].push_back(j);

    RateCurve c;
    for (std::size_t n = 1; n <= max_n; ++n) {
        std::size_t owner_total = 0, owner_wrong = 0;
        std::map<std::string, std::pair<std::size_t, std::size_t>> guests;  // user -> (wrong, total)
        for (const auto& [seg, v] : segments) {
            if (v.size() < n) continue;
            for (std::size_t i = 0; i + n <= v.size(); ++i) {
                const bool verdict = window_verdict(std::span<const ScoredJudgement>(v).subspan(i, n));
                if (v[i].truth_owner) {
                    ++owner_total;
                    owner_wrong += verdict ? 0 : 1;
                } else {
                    auto& g = guests[v[i].user];
                    ++g.second;
                    g.first += verdict ? 1 : 0;
                }
            }
        }
        std::size_t guest_total = 0;
        double far_sum = 0;
        for (const auto& [u, wt] : guests) {
            guest_total += wt.second;
            far_sum += static_cast<double>(wt.first) / static_cast<double>(wt.second);
        }
        c.frr.push_back(owner_total ? std::optional<double>(static_cast<double>(owner_wrong) / static_cast<double>(owner_total))
                                    : std::nullopt);
        c.far.push_back(guests.empty() ? std::nullopt : std::optional<double>(far_sum / static_cast<double>(guests.size())));
        c.owner_windows.push_back(owner_total);
        c.guest_windows.push_back(guest_total);
    }
    return c;
}

/// Per-user share of correctly concluded windows, for n = 1..max_n.
inline std::map<std::string, std::vector<std::optional<double>>> accuracy_by_user(std::span<const ScoredJudgement> js,
                                                                                   std::size_t max_n) {
    std::map<std::string, std::vector<std::optional<double>>> out;
    std::map<std::string, std::vector<ScoredJudgement>> per_user;
    for (const auto& j : js) per_user[j.user].push_back(j);
    for (const auto& [u, v] : per_user) {
        const auto c = compute_far_frr(v, max_n);
        auto& acc = out[u];
        for (std::size_t n = 0; n < max_n; ++n) {
            const auto& r = v.front().truth_owner ? c.frr[n] : c.far[n];
            acc.push_back(r ? std::optional<double>(1.0 - *r) : std::nullopt);
        }
    }
    return out;
}

/// Equal error rate of single judgements when thresholding the signed decision value.
inline std::optional<double> single_action_eer(std::span<const ScoredJudgement> js) {
    std::vector<double> owner, guest;
    for (const auto& j : js) (j.truth_owner ? owner : guest).push_back(j.decision);
    if (owner.empty() || guest.empty()) return std::nullopt;
    std::vector<double> th(owner);
    th.insert(th.end(), guest.begin(), guest.end());
    std::sort(th.begin(), th.end());
    std::sort(owner.begin(), owner.end());
    std::sort(guest.begin(), guest.end());
    double best_gap = 2.0, eer = 1.0;
    for (double t : th) {
        // accept as owner iff decision >= t
        const double frr = static_cast<double>(std::lower_bound(owner.begin(), owner.end(), t) - owner.begin()) /
                           static_cast<double>(owner.size());
        const double far = static_cast<double>(guest.end() - std::lower_bound(guest.begin(), guest.end(), t)) /
                           static_cast<double>(guest.size());
        if (std::abs(far - frr) < best_gap) {
            best_gap = std::abs(far - frr);
            eer = (far + frr) / 2.0;
        }
    }
    return eer;
}

// ---------------------------------------------------------------------------
// Heatmap

inline constexpr std::size_t kGridRows = 25, kGridCols = 15;
inline constexpr double kGridCellPx = 72.0;  // 1080 / 15 = 1800 / 25

struct HeatCell {
    double vibration = 0, rotation = 0;  // means over the cell's taps
    std::size_t count = 0;
};

struct Heatmap {
    std::array<std::array<HeatCell, kGridCols>, kGridRows> cells{};

    static std::pair<std::size_t, std::size_t> cell_of(double x, double y) {
        const auto clampi = [](double v, std::size_t hi) {
            const double c = std::floor(v / kGridCellPx);
            return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(hi - 1)));
        };
        return {clampi(y, kGridRows), clampi(x, kGridCols)};
    }
};

struct TapReaction {
    double x = 0, y = 0;  // reference-screen px
    double vibration = 0, rotation = 0;
};

inline Heatmap reaction_heatmap(std::span<const TapReaction> taps) {
    Heatmap h;
    for (const auto& t : taps) {
        const auto [r, c] = Heatmap::cell_of(t.x, t.y);
        auto& cell = h.cells[r][c];
        ++cell.count;
        cell.vibration += (t.vibration - cell.vibration) / static_cast<double>(cell.count);
        cell.rotation += (t.rotation - cell.rotation) / static_cast<double>(cell.count);
    }
    return h;
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(std::span<const double> a, std::span<const double> b) {
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

}  // namespace silentsense
