#pragma once

// Kernel SVMs trained by SMO: a one-class nu-SVM for the owner-only phase and a soft-margin
// two-class SVM once guest data exists, with confidence calibration and JSON persistence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "features.hpp"
#include "trace.hpp"

namespace silentsense {

enum class KernelType { Rbf, Linear };

struct Kernel {
    KernelType type = KernelType::Rbf;
    double gamma = 1.0;

    double operator()(std::span<const double> a, std::span<const double> b) const {
        double s = 0;
        if (type == KernelType::Linear) {
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return s;
        }
        for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
        return std::exp(-gamma * s);
    }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

/// gamma = 1 / (2 * median pairwise squared distance); 1 when all points coincide.
inline double median_gamma(std::span<const std::vector<double>> x) {
    std::vector<double> d;
    d.reserve(x.size() * (x.size() - 1) / 2);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) d.push_back(squared_distance(x[i], x[j]));
    if (d.empty()) return 1.0;
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid > 0 ? 1.0 / (2.0 * *mid) : 1.0;
}

// ---------------------------------------------------------------------------
// Solver

struct SmoOptions {
    double tol = 1e-3;        // stop when the maximal KKT violation drops below this
    long max_epochs = 10000;  // one epoch = n pair updates
};

/// Dual problem  min 1/2 a'Qa + p'a  s.t.  y'a = const, 0 <= a <= C.
struct DualProblem {
    std::size_t n = 0;
    std::vector<double> Q;  // n x n, row-major, signs folded in (Q_ij = y_i y_j K_ij)
    std::vector<double> p;
    std::vector<double> y;  // +1 / -1
    double C = 1.0;
    double q(std::size_t i, std::size_t j) const { return Q[i * n + j]; }
};

struct DualSolution {
    std::vector<double> alpha;
    double rho = 0;  // decision(x) = sum a_i y_i K(x_i, x) - rho
    double gap = 0;  // maximal KKT violation at exit
    long iterations = 0;
};

inline std::vector<double> dual_gradient(const DualProblem& P, std::span<const double> alpha) {
    std::vector<double> G(P.p);
    for (std::size_t j = 0; j < P.n; ++j) {
        if (alpha[j] == 0) continue;
        for (std::size_t i = 0; i < P.n; ++i) G[i] += P.q(i, j) * alpha[j];
    }
    return G;
}

/// Maximal violating pair (i in I_up maximising -yG, j in I_low minimising -yG) and its gap.
struct WorkingPair {
    std::size_t i = 0, j = 0;
    double gap = 0;
    bool found = false;
};

inline WorkingPair select_pair(const DualProblem& P, std::span<const double> alpha, std::span<const double> G) {
    WorkingPair w;
    double up = -std::numeric_limits<double>::infinity(), low = std::numeric_limits<double>::infinity();
    bool have_up = false, have_low = false;
    for (std::size_t t = 0; t < P.n; ++t) {
        const double v = -P.y[t] * G[t];
        const bool in_up = P.y[t] > 0 ? alpha[t] < P.C : alpha[t] > 0;
        const bool in_low = P.y[t] > 0 ? alpha[t] > 0 : alpha[t] < P.C;
        if (in_up && v > up) {
            up = v;
            w.i = t;
            have_up = true;
        }
        if (in_low && v < low) {
            low = v;
            w.j = t;
            have_low = true;
        }
    }
    w.found = have_up && have_low;
    w.gap = w.found ? up - low : 0.0;
    return w;
}

inline double compute_rho(const DualProblem& P, std::span<const double> alpha, std::span<const double> G) {
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum = 0;
    std::size_t free = 0;
    for (std::size_t t = 0; t < P.n; ++t) {
        const double yg = P.y[t] * G[t];
        if (alpha[t] >= P.C) {
            if (P.y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0) {
            if (P.y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            sum += yg;
            ++free;
        }
    }
    if (free > 0) return sum / static_cast<double>(free);
    if (std::isinf(ub)) return lb;
    if (std::isinf(lb)) return ub;
    return (ub + lb) / 2.0;
}

/// SMO from a feasible starting point. Throws ComputeError if the iteration budget runs out.
inline DualSolution solve_dual(const DualProblem& P, std::vector<double> alpha, const SmoOptions& opt = {}) {
    constexpr double kTau = 1e-12;
    const long budget = opt.max_epochs * static_cast<long>(std::max<std::size_t>(P.n, 1));
    DualSolution sol;
    std::vector<double> G = dual_gradient(P, alpha);
    for (;;) {
        while (sol.iterations < budget) {
            const auto w = select_pair(P, alpha, G);
            if (!w.found || w.gap < opt.tol) break;
            const std::size_t i = w.i, j = w.j;
            const double C = P.C;
            const double ai = alpha[i], aj = alpha[j];
            if (P.y[i] != P.y[j]) {
                const double quad = std::max(P.q(i, i) + P.q(j, j) + 2 * P.q(i, j), kTau);
                const double delta = (-G[i] - G[j]) / quad;
                const double diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if (diff > 0) {
                    if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
                } else if (alpha[i] < 0) {
                    alpha[i] = 0;
                    alpha[j] = -diff;
                }
                if (diff > 0) {
                    if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
                } else if (alpha[j] > C) {
                    alpha[j] = C;
                    alpha[i] = C + diff;
                }
            } else {
                const double quad = std::max(P.q(i, i) + P.q(j, j) - 2 * P.q(i, j), kTau);
                const double delta = (G[i] - G[j]) / quad;
                const double sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if (sum > C) {
                    if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
                } else if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = sum;
                }
                if (sum > C) {
                    if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
                } else if (alpha[i] < 0) {
                    alpha[i] = 0;
                    alpha[j] = sum;
                }
            }
            const double di = alpha[i] - ai, dj = alpha[j] - aj;
            for (std::size_t t = 0; t < P.n; ++t) G[t] += P.q(t, i) * di + P.q(t, j) * dj;
            ++sol.iterations;
        }
        // The incremental gradient drifts; confirm convergence on an exact one.
        G = dual_gradient(P, alpha);
        const auto w = select_pair(P, alpha, G);
        sol.gap = w.found ? w.gap : 0.0;
        if (sol.gap < opt.tol) break;
        if (sol.iterations >= budget)
            throw ComputeError("SMO did not converge within " + std::to_string(opt.max_epochs) + " epochs (gap " +
                               std::to_string(sol.gap) + ")");
    }
    sol.rho = compute_rho(P, alpha, G);
    sol.alpha = std::move(alpha);
    return sol;
}

inline std::vector<double> kernel_matrix(const Kernel& k, std::span<const std::vector<double>> x) {
    const std::size_t n = x.size();
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) K[i * n + j] = K[j * n + i] = k(x[i], x[j]);
    return K;
}

// ---------------------------------------------------------------------------
// Models

enum class SvmKind { OneClass, TwoClass };

inline std::string_view to_string(SvmKind k) { return k == SvmKind::OneClass ? "one_class" : "two_class"; }

struct ModelMeta {
    Scenario scenario = Scenario::Static;
    std::optional<Gesture> gesture;  // empty for a model pooled over gestures
    std::size_t n_owner = 0, n_guest = 0;
    std::uint64_t owner_added = 0, guest_added = 0;  // buffer add counters when trained
    friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

struct SvmModel {
    SvmKind kind = SvmKind::OneClass;
    Kernel kernel;
    double nu = 0.1, C = 10.0;
    std::vector<std::vector<double>> sv;  // support vectors, scaled
    std::vector<double> coef;             // alpha_i * y_i
    double rho = 0;
    double margin_scale = 1.0;  // decision values are divided by this before calibration
    double cal_a = 2.0, cal_b = 0.0;
    Scaler scaler;
    ModelMeta meta;

    // Two-class models keep the one-class model they replaced. Observations it finds novel beyond
    // `gate_threshold` (normalised margin) are judged guest whatever the two-class side says, so a
    // guest unlike every buffered guest is not waved through, and self-learned data cannot widen it.
    std::shared_ptr<const SvmModel> gate;
    double gate_threshold = -0.25;

    // Training data kept in memory so the KKT residual can be re-derived; not serialized.
    std::vector<std::vector<double>> train_x;
    std::vector<double> train_y, alpha;

    std::size_t dims() const { return scaler.dims(); }

    /// Raw decision value on a scaled vector; positive means owner.
    double decision_scaled(std::span<const double> z) const {
        double s = -rho;
        for (std::size_t i = 0; i < sv.size(); ++i) s += coef[i] * kernel(sv[i], z);
        return s;
    }
    double decision(std::span<const double> raw) const { return decision_scaled(scaler.apply(raw)); }
};

/// Calibrated confidence 0.5 + 0.5 * sigmoid(A |margin| + B).
inline double confidence(double margin, double a, double b) { return 0.5 + 0.5 * sigmoid(a * std::abs(margin) + b); }

struct Judgement {
    bool owner = true;
    double confidence = 0.5;
    double decision = 0;
};

inline Judgement judge(const SvmModel& m, std::span<const double> features) {
    if (features.size() != m.dims())
        throw ValidationError("judge: observation has " + std::to_string(features.size()) +
                              " dimensions, model expects " + std::to_string(m.dims()));
    if (m.gate) {
        if (features.size() != m.gate->dims()) throw ValidationError("judge: gate dimension mismatch");
        const double g = m.gate->decision(features) / m.gate->margin_scale;
        if (g < m.gate_threshold) return {false, confidence(g, m.gate->cal_a, m.gate->cal_b), g};
    }
    const double d = m.decision(features);
    return {d > 0, confidence(d / m.margin_scale, m.cal_a, m.cal_b), d};
}

inline Judgement judge(const SvmModel& m, const Observation& o) {
    if (o.scenario != m.meta.scenario) throw ValidationError("judge: observation scenario does not match model");
    if (m.meta.gesture && *m.meta.gesture != o.gesture)
        throw ValidationError("judge: observation gesture does not match model");
    return judge(m, std::span<const double>(o.features));
}

/// Maximal KKT violation of the stored dual solution, recomputed from scratch.
inline double kkt_residual(const SvmModel& m) {
    if (m.alpha.empty()) throw ComputeError("kkt_residual: model carries no training data");
    DualProblem P;
    P.n = m.train_x.size();
    P.y = m.train_y;
    P.C = m.kind == SvmKind::OneClass ? 1.0 / (m.nu * static_cast<double>(P.n)) : m.C;
    P.p.assign(P.n, m.kind == SvmKind::OneClass ? 0.0 : -1.0);
    const auto K = kernel_matrix(m.kernel, m.train_x);
    P.Q.resize(P.n * P.n);
    for (std::size_t i = 0; i < P.n; ++i)
        for (std::size_t j = 0; j < P.n; ++j) P.Q[i * P.n + j] = P.y[i] * P.y[j] * K[i * P.n + j];
    const auto G = dual_gradient(P, m.alpha);
    return select_pair(P, m.alpha, G).gap;
}

/// Dual objective 1/2 a'Qa + p'a of the stored solution.
inline double dual_objective(const SvmModel& m) {
    const std::size_t n = m.train_x.size();
    const bool two = m.kind == SvmKind::TwoClass;
    double quad = 0, lin = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (m.alpha[i] == 0) continue;
        lin += two ? -m.alpha[i] : 0.0;
        for (std::size_t j = 0; j < n; ++j)
            quad += m.alpha[i] * m.alpha[j] * m.train_y[i] * m.train_y[j] * m.kernel(m.train_x[i], m.train_x[j]);
    }
    return 0.5 * quad + lin;
}

struct SvmConfig {
    double nu = 0.1;
    double C = 10.0;
    std::optional<double> gamma;  // median heuristic when empty
    KernelType kernel = KernelType::Rbf;
    SmoOptions smo;
    double one_class_a = 2.0, one_class_b = 0.0;
    std::optional<double> gate_threshold = -0.25;  // empty: two-class models without a novelty gate
};

inline void keep_support(SvmModel& m) {
    m.sv.clear();
    m.coef.clear();
    for (std::size_t i = 0; i < m.alpha.size(); ++i)
        if (m.alpha[i] > 0) {
            m.sv.push_back(m.train_x[i]);
            m.coef.push_back(m.alpha[i] * m.train_y[i]);
        }
}

/// One-class nu-SVM on already scaled vectors.
inline SvmModel train_one_class_scaled(std::vector<std::vector<double>> z, const SvmConfig& cfg = {}) {
    const std::size_t n = z.size();
    if (n < 10) throw ComputeError("train_one_class: need at least 10 vectors, got " + std::to_string(n));
    if (!(cfg.nu > 0 && cfg.nu <= 1)) throw ValidationError("train_one_class: nu must lie in (0, 1]");
    SvmModel m;
    m.kind = SvmKind::OneClass;
    m.nu = cfg.nu;
    m.kernel = {cfg.kernel, cfg.gamma.value_or(median_gamma(z))};
    DualProblem P;
    P.n = n;
    P.Q = kernel_matrix(m.kernel, z);
    P.p.assign(n, 0.0);
    P.y.assign(n, 1.0);
    P.C = 1.0 / (cfg.nu * static_cast<double>(n));
    std::vector<double> alpha(n, 0.0);
    const auto full = static_cast<std::size_t>(std::floor(cfg.nu * static_cast<double>(n)));
    for (std::size_t i = 0; i < full && i < n; ++i) alpha[i] = P.C;
    if (full < n) alpha[full] = std::max(0.0, 1.0 - static_cast<double>(full) * P.C);
    auto sol = solve_dual(P, std::move(alpha), cfg.smo);
    m.rho = sol.rho;
    m.margin_scale = std::abs(sol.rho) > 1e-12 ? std::abs(sol.rho) : 1.0;
    m.cal_a = cfg.one_class_a;
    m.cal_b = cfg.one_class_b;
    m.alpha = std::move(sol.alpha);
    m.train_y = P.y;
    m.train_x = std::move(z);
    keep_support(m);
    return m;
}

inline SvmModel train_one_class(std::span<const std::vector<double>> data, const SvmConfig& cfg = {}) {
    if (data.size() < 10) throw ComputeError("train_one_class: need at least 10 vectors, got " + std::to_string(data.size()));
    const Scaler sc = fit_scaler(data);
    std::vector<std::vector<double>> z;
    z.reserve(data.size());
    for (const auto& v : data) z.push_back(sc.apply(v));
    auto m = train_one_class_scaled(std::move(z), cfg);
    m.scaler = sc;
    m.meta.n_owner = data.size();
    return m;
}

/// Soft-margin C-SVM on scaled vectors; y = +1 for owner, -1 for guest. No calibration.
inline SvmModel train_two_class_scaled(std::vector<std::vector<double>> z, std::vector<double> y, double gamma,
                                       const SvmConfig& cfg = {}) {
    const std::size_t n = z.size();
    const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1.0));
    if (pos == 0 || pos == n) throw ComputeError("train_two_class: both classes are required");
    SvmModel m;
    m.kind = SvmKind::TwoClass;
    m.C = cfg.C;
    m.kernel = {cfg.kernel, gamma};
    DualProblem P;
    P.n = n;
    P.Q = kernel_matrix(m.kernel, z);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) P.Q[i * n + j] *= y[i] * y[j];
    P.p.assign(n, -1.0);
    P.y = y;
    P.C = cfg.C;
    auto sol = solve_dual(P, std::vector<double>(n, 0.0), cfg.smo);
    m.rho = sol.rho;
    m.alpha = std::move(sol.alpha);
    m.train_y = std::move(y);
    m.train_x = std::move(z);
    keep_support(m);
    return m;
}

/// Fits (A, B) of 0.5 + 0.5 sigmoid(A|d| + B) to held-out correctness by maximum likelihood,
/// with Platt's smoothed targets. A is kept >= 1e-3 so confidence stays strictly monotone.
inline std::pair<double, double> fit_calibration(std::span<const double> margins, std::span<const char> correct) {
    const std::size_t n = margins.size();
    std::size_t n_ok = 0;
    for (char c : correct) n_ok += c ? 1 : 0;
    const double hi = (static_cast<double>(n_ok) + 1.0) / (static_cast<double>(n_ok) + 2.0);
    const double lo = 1.0 / (static_cast<double>(n - n_ok) + 2.0);
    auto loglik = [&](double a, double b) {
        double l = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double q = sigmoid(a * std::abs(margins[i]) + b);
            const double t = correct[i] ? hi : lo;
            l += t * std::log1p(q) + (1 - t) * std::log1p(-std::min(q, 1 - 1e-15));
        }
        return l;
    };
    // dl/du per sample for u = A|d| + B, and its derivative, in closed form.
    auto dl = [](double q, double t) { return q * (t * (1 - q) / (1 + q) - (1 - t)); };
    double a = 2.0, b = 0.0;
    double cur = loglik(a, b);
    for (int it = 0; it < 100; ++it) {
        double ga = 0, gb = 0, haa = 0, hab = 0, hbb = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = std::abs(margins[i]);
            const double t = correct[i] ? hi : lo;
            const double u = a * x + b;
            const double g = dl(sigmoid(u), t);
            const double h = (dl(sigmoid(u + 1e-5), t) - dl(sigmoid(u - 1e-5), t)) / 2e-5;
            ga += g * x;
            gb += g;
            haa += h * x * x;
            hab += h * x;
            hbb += h;
        }
        // Newton step on the negated Hessian with a small ridge, then backtracking.
        const double r = 1e-9;
        const double A11 = -haa + r, A12 = -hab, A22 = -hbb + r;
        const double det = A11 * A22 - A12 * A12;
        double sa, sb;
        if (det > 1e-18 && A11 > 0) {
            sa = (A22 * ga - A12 * gb) / det;
            sb = (A11 * gb - A12 * ga) / det;
        } else {
            sa = ga;
            sb = gb;
        }
        double step = 1.0;
        bool moved = false;
        while (step > 1e-8) {
            const double na = std::max(1e-3, a + step * sa), nb = b + step * sb;
            const double nl = loglik(na, nb);
            if (nl > cur + 1e-12) {
                a = na;
                b = nb;
                cur = nl;
                moved = true;
                break;
            }
            step /= 2;
        }
        if (!moved || std::abs(ga) + std::abs(gb) < 1e-9) break;
    }
    return {a, b};
}

/// Two-class model on raw owner and guest vectors. Calibration is fitted on every third point
/// held out from a preliminary model; the returned model is then trained on all points.
inline SvmModel train_two_class(std::span<const std::vector<double>> owner, std::span<const std::vector<double>> guest,
                                const SvmConfig& cfg = {}) {
    if (owner.size() < 10 || guest.size() < 10)
        throw ComputeError("train_two_class: need at least 10 owner and 10 guest vectors");
    std::vector<std::vector<double>> raw(owner.begin(), owner.end());
    raw.insert(raw.end(), guest.begin(), guest.end());
    std::vector<double> y(owner.size(), 1.0);
    y.resize(raw.size(), -1.0);
    const Scaler sc = fit_scaler(std::span<const std::vector<double>>(raw));
    std::vector<std::vector<double>> z;
    z.reserve(raw.size());
    for (const auto& v : raw) z.push_back(sc.apply(v));
    const double gamma = cfg.gamma.value_or(median_gamma(z));

    double a = 2.0, b = 0.0;
    {
        std::vector<std::vector<double>> zt, zh;
        std::vector<double> yt, yh;
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (i % 3 == 2) {
                zh.push_back(z[i]);
                yh.push_back(y[i]);
            } else {
                zt.push_back(z[i]);
                yt.push_back(y[i]);
            }
        }
        const auto pos = std::count(yt.begin(), yt.end(), 1.0);
        if (pos > 0 && pos < static_cast<std::ptrdiff_t>(yt.size())) {
            const auto pre = train_two_class_scaled(std::move(zt), std::move(yt), gamma, cfg);
            std::vector<double> d;
            std::vector<char> ok;
            for (std::size_t i = 0; i < zh.size(); ++i) {
                d.push_back(pre.decision_scaled(zh[i]));
                ok.push_back((d.back() > 0) == (yh[i] > 0));
            }
            std::tie(a, b) = fit_calibration(d, ok);
        }
    }
    auto m = train_two_class_scaled(std::move(z), std::move(y), gamma, cfg);
    m.cal_a = a;
    m.cal_b = b;
    m.scaler = sc;
    m.meta.n_owner = owner.size();
    m.meta.n_guest = guest.size();
    return m;
}

// ---------------------------------------------------------------------------
// Serialization

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json to_json(const SvmModel& m) {
    nlohmann::json j;
    j["kind"] = std::string(to_string(m.kind));
    j["kernel"] = {{"type", m.kernel.type == KernelType::Rbf ? "rbf" : "linear"}, {"gamma", m.kernel.gamma}};
    j["nu"] = m.nu;
    j["C"] = m.C;
    j["rho"] = m.rho;
    j["margin_scale"] = m.margin_scale;
    j["calibration"] = {{"A", m.cal_a}, {"B", m.cal_b}};
    j["scaler"] = {{"mean", m.scaler.mean}, {"std", m.scaler.std}};
    j["support_vectors"] = m.sv;
    j["coefficients"] = m.coef;
    j["meta"] = {{"scenario", std::string(to_string(m.meta.scenario))},
                 {"gesture", m.meta.gesture ? nlohmann::json(std::string(to_string(*m.meta.gesture))) : nlohmann::json()},
                 {"n_owner", m.meta.n_owner},
                 {"n_guest", m.meta.n_guest},
                 {"owner_added", m.meta.owner_added},
                 {"guest_added", m.meta.guest_added}};
    if (m.gate) j["gate"] = {{"threshold", m.gate_threshold}, {"model", to_json(*m.gate)}};
    return j;
}

inline SvmModel model_from_json(const nlohmann::json& j) {
    try {
        SvmModel m;
        const auto kind = j.at("kind").get<std::string>();
        if (kind != "one_class" && kind != "two_class") throw ParseError("model: unknown kind \"" + kind + "\"");
        m.kind = kind == "one_class" ? SvmKind::OneClass : SvmKind::TwoClass;
        const auto kt = j.at("kernel").at("type").get<std::string>();
        if (kt != "rbf" && kt != "linear") throw ParseError("model: unknown kernel \"" + kt + "\"");
        m.kernel = {kt == "rbf" ? KernelType::Rbf : KernelType::Linear, j.at("kernel").at("gamma").get<double>()};
        m.nu = j.at("nu").get<double>();
        m.C = j.at("C").get<double>();
        m.rho = j.at("rho").get<double>();
        m.margin_scale = j.at("margin_scale").get<double>();
        m.cal_a = j.at("calibration").at("A").get<double>();
        m.cal_b = j.at("calibration").at("B").get<double>();
        m.scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
        m.scaler.std = j.at("scaler").at("std").get<std::vector<double>>();
        m.sv = j.at("support_vectors").get<std::vector<std::vector<double>>>();
        m.coef = j.at("coefficients").get<std::vector<double>>();
        const auto& meta = j.at("meta");
        auto sc = scenario_from_string(meta.at("scenario").get<std::string>());
        if (!sc) throw ParseError("model: unknown scenario");
        m.meta.scenario = *sc;
        if (!meta.at("gesture").is_null()) {
            auto g = gesture_from_string(meta.at("gesture").get<std::string>());
            if (!g) throw ParseError("model: unknown gesture");
            m.meta.gesture = *g;
        }
        m.meta.n_owner = meta.at("n_owner").get<std::size_t>();
        m.meta.n_guest = meta.at("n_guest").get<std::size_t>();
        m.meta.owner_added = meta.at("owner_added").get<std::uint64_t>();
        m.meta.guest_added = meta.at("guest_added").get<std::uint64_t>();
        if (m.sv.size() != m.coef.size()) throw ParseError("model: support vector and coefficient counts differ");
        for (const auto& v : m.sv)
            if (v.size() != m.scaler.dims()) throw ParseError("model: support vector dimension mismatch");
        if (m.scaler.std.size() != m.scaler.dims()) throw ParseError("model: scaler dimension mismatch");
        if (j.contains("gate") && !j["gate"].is_null()) {
            auto g = model_from_json(j["gate"].at("model"));
            if (g.kind != SvmKind::OneClass || g.gate) throw ParseError("model: gate must be a plain one-class model");
            if (g.dims() != m.dims()) throw ParseError("model: gate dimension mismatch");
            m.gate = std::make_shared<const SvmModel>(std::move(g));
            m.gate_threshold = j["gate"].at("threshold").get<double>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
}

}  // namespace silentsense
