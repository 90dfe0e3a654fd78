// Acceptance run: one PASS/FAIL line per criterion. Tolerances and runtime limits are fixed here.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "silentsense/silentsense.hpp"

#ifndef SILENTSENSE_CLI
#define SILENTSENSE_CLI "silentsense"
#endif

using namespace silentsense;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void run(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %d %s: %s [%.1f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
                limit_s, in_time ? "" : ", exceeded");
    std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

SessionTrace render(const sim::SessionScript& s) { return sim::gen_session(s, sim::make_profiles(s)); }

std::vector<std::uint64_t> guests_for(std::uint64_t seed) {
    std::vector<std::uint64_t> g;
    for (std::uint64_t i = 1; i <= 10; ++i) g.push_back(1000 * seed + i);
    return g;
}

// ---------------------------------------------------------------------------
// 1

Outcome accumulation() {
    IdentityState st;
    for (double e : {0.7, 0.6, 0.5}) st = ingest(st, true, e);
    const double p = st.P();
    bool ok = std::abs(p - 0.94) <= 1e-12;
    // Reset property: a disagreeing verdict always starts a run of length one carrying only its own ε.
    sim::Rng rng(1);
    IdentityState s;
    std::size_t resets = 0, bad = 0;
    for (int i = 0; i < 100000; ++i) {
        const bool prev = s.owner;
        const bool had = !s.empty();
        const bool v = rng.bernoulli(0.9) ? prev : !prev;
        const double e = rng.uniform(0.5, 1.0);
        s = ingest(s, v, e);
        if (had && v != prev) {
            ++resets;
            bad += s.delay() != 1 || s.P() != e || s.s != s.k;
        }
        bad += std::abs(s.P() - s.recompute()) > 1e-12;
    }
    ok = ok && bad == 0 && resets > 1000;
    return {ok, "P(0.7,0.6,0.5) = " + fmt("%.15f", p) + " (|P - 0.94| <= 1e-12); " + std::to_string(resets) +
                    " resets, " + std::to_string(bad) + " violations"};
}

// ---------------------------------------------------------------------------
// 2

Outcome stopping_rule() {
    sim::Rng rng(2);
    const double theta = 0.98;
    int feasible = 0, within = 0, violations = 0;
    double worst = 1.0;
    while (feasible < 500) {
        const int H = 1 + static_cast<int>(rng.index(12));
        std::vector<double> eps(H), P(H), U(H);
        double miss = 1;
        for (int t = 0; t < H; ++t) {
            eps[t] = rng.uniform(0.5, 0.99);
            miss *= 1 - eps[t];
            P[t] = 1 - miss;
            U[t] = P[t] / (t + 1);
        }
        double best = -1;
        for (int t = 0; t < H; ++t)
            if (P[t] > theta) best = std::max(best, U[t]);
        if (best < 0) continue;
        ++feasible;
        SchedulerState st;
        int stop = -1;
        for (int t = 0; t < H && stop < 0; ++t) {
            st = account_energy(st, true, eps[t]);
            st.P = P[t];
            if (should_stop(st, theta)) {
                stop = t;
                violations += !(P[t] > theta);
            }
        }
        if (stop < 0) stop = H - 1;
        const double ratio = U[stop] / best;
        worst = std::min(worst, ratio);
        within += ratio >= 0.9;
    }
    const bool ok = within == feasible && violations == 0;
    return {ok, std::to_string(within) + "/" + std::to_string(feasible) + " horizons within 90% of optimum (worst " +
                    fmt("%.3f", worst) + "), " + std::to_string(violations) + " stops at P <= P_theta"};
}

// ---------------------------------------------------------------------------
// 3

bool solve_linear(std::vector<std::vector<double>> A, std::vector<double> b, std::vector<double>& x) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        if (std::abs(A[piv][c]) < 1e-12) return false;
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = A[r][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t k = r + 1; k < n; ++k) s -= A[r][k] * x[k];
        x[r] = s / A[r][r];
    }
    return true;
}

// Minimum of the two-class dual over all 3^n assignments of each multiplier to 0, C or free.
double enumerate_dual(const std::vector<std::vector<double>>& x, const std::vector<double>& y, const Kernel& k, double C) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> Q(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Q[i][j] = y[i] * y[j] * k(x[i], x[j]);
    double best = std::numeric_limits<double>::infinity();
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= 3;
    for (std::size_t code = 0; code < combos; ++code) {
        std::vector<int> state(n);
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i, c /= 3) state[i] = static_cast<int>(c % 3);
        std::vector<std::size_t> F;
        std::vector<double> a(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (state[i] == 1) a[i] = C;
            if (state[i] == 2) F.push_back(i);
        }
        if (!F.empty()) {
            const std::size_t m = F.size();
            std::vector<std::vector<double>> A(m + 1, std::vector<double>(m + 1, 0.0));
            std::vector<double> b(m + 1, 0.0), sol;
            for (std::size_t r = 0; r < m; ++r) {
                for (std::size_t s = 0; s < m; ++s) A[r][s] = Q[F[r]][F[s]];
                A[r][m] = y[F[r]];
                A[m][r] = y[F[r]];
                b[r] = 1.0;
                for (std::size_t j = 0; j < n; ++j)
                    if (state[j] == 1) b[r] -= Q[F[r]][j] * C;
            }
            for (std::size_t j = 0; j < n; ++j)
                if (state[j] == 1) b[m] -= y[j] * C;
            if (!solve_linear(A, b, sol)) continue;
            bool ok = true;
            for (std::size_t r = 0; r < m; ++r) {
                ok = ok && sol[r] >= -1e-12 && sol[r] <= C + 1e-12;
                a[F[r]] = sol[r];
            }
            if (!ok) continue;
        }
        double eq = 0, obj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            eq += y[i] * a[i];
            obj -= a[i];
            for (std::size_t j = 0; j < n; ++j) obj += 0.5 * a[i] * a[j] * Q[i][j];
        }
        if (std::abs(eq) <= 1e-9) best = std::min(best, obj);
    }
    return best;
}

Outcome svm_correctness() {
    std::vector<const SvmModel*> checked;
    std::vector<SvmModel> keep;
    keep.reserve(64);
    double worst_kkt = 0;
    auto check = [&](SvmModel m) {
        if (m.train_x.empty()) return;
        worst_kkt = std::max(worst_kkt, kkt_residual(m));
        keep.push_back(std::move(m));
    };

    const std::vector<std::vector<double>> six{{0, 0}, {1, 0}, {0, 1}, {3, 3}, {4, 3}, {3, 4}};
    const std::vector<double> y6{-1, -1, -1, 1, 1, 1};
    double worst_gap = 0;
    for (const Kernel k : {Kernel{KernelType::Linear, 0}, Kernel{KernelType::Rbf, 0.1}, Kernel{KernelType::Rbf, 0.5}}) {
        SvmConfig cfg;
        cfg.kernel = k.type;
        auto m = train_two_class_scaled(six, y6, k.gamma, cfg);
        worst_gap = std::max(worst_gap, std::abs(dual_objective(m) - enumerate_dual(six, y6, k, cfg.C)));
        check(std::move(m));
    }

    const std::vector<std::vector<double>> xor_x{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    const std::vector<double> xor_y{1, 1, -1, -1};
    auto xm = train_two_class_scaled(xor_x, xor_y, 1.0);
    int xor_ok = 0;
    for (std::size_t i = 0; i < 4; ++i) xor_ok += (xm.decision_scaled(xor_x[i]) > 0) == (xor_y[i] > 0);
    check(std::move(xm));

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        sim::Rng rng(seed);
        std::vector<std::vector<double>> a, b;
        for (int i = 0; i < 60; ++i) {
            a.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal(), rng.normal()});
            b.push_back({rng.normal(1.5, 1), rng.normal(1, 1), rng.normal(), rng.normal(), rng.normal(), rng.normal()});
        }
        check(train_one_class(a));
        check(train_two_class(a, b));
    }
    const auto bank = train_from_trace(
        render(sim::identification_script(1, 501, guests_for(1), Scenario::Static, 100, 50, 60)), PipelineConfig{});
    for (const auto& [k, m] : bank.models()) check(m);

    const bool ok = worst_kkt <= 1e-3 && worst_gap <= 1e-6 && xor_ok == 4;
    return {ok, std::to_string(keep.size()) + " models, max KKT residual " + fmt("%.2e", worst_kkt) +
                    " (<= 1e-3); six-point dual gap " + fmt("%.2e", worst_gap) + " (<= 1e-6); XOR " +
                    std::to_string(xor_ok) + "/4"};
}

// ---------------------------------------------------------------------------
// 4

Outcome dsp_recovery() {
    auto walk = [](int steps) {
        auto p = sim::gen_profile(1, sim::Archetype::Noiseless);
        p.gait.step_hz = 2.0;
        p.gait.displacement_m = 0.04;
        sim::Rng rng(1);
        return dsp::track_motion(sim::synth_walk(p, steps, rng));
    };
    int exact = 0, tried = 0;
    double worst_step = 0, worst_mean = 0, worst_peak = 0;
    for (int n = 4; n <= 32; ++n) {
        const auto t = walk(n);
        ++tried;
        exact += t.steps.size() == static_cast<std::size_t>(n);
        if (t.steps.size() != static_cast<std::size_t>(n)) continue;
        // Every step but the last, which the end of the stream truncates, plus the mean of all steps.
        double sum = 0;
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
            const double rel = std::abs(dsp::step_displacement(t.ea_v, t.steps[i]) - 0.04) / 0.04;
            sum += dsp::step_displacement(t.ea_v, t.steps[i]);
            if (i + 1 < t.steps.size()) worst_step = std::max(worst_step, rel);
        }
        worst_mean = std::max(worst_mean, std::abs(sum / static_cast<double>(n) - 0.04) / 0.04);
        if (t.ea_v.x.size() >= 64)
            worst_peak = std::max(worst_peak, std::abs(dsp::dominant_frequency(dsp::fft_spectrum(t.ea_v.x, 100)) - 2.0));
    }
    const bool ok = exact == tried && worst_step <= 0.15 && worst_mean <= 0.15 && worst_peak <= 0.1;
    return {ok, "step counts exact " + std::to_string(exact) + "/" + std::to_string(tried) +
                    " (4..32 steps); displacement error max " + fmt("%.1f%%", 100 * worst_step) + " per step, " +
                    fmt("%.1f%%", 100 * worst_mean) + " mean (<= 15%); FFT peak error max " + fmt("%.3f", worst_peak) +
                    " Hz (<= 0.1)"};
}

// ---------------------------------------------------------------------------
// 5, 6

struct Rates {
    double far = 0, frr = 0;
};

// Pooled FAR and FRR for n = 1..20, averaged over ten seeds.
std::vector<Rates> mean_rates(Scenario sc, bool walking_features) {
    std::vector<Rates> r(20);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto script = sc == Scenario::Static
                                ? sim::identification_script(seed, 500 + seed, guests_for(seed), sc, 100, 50, 60)
                                : sim::identification_script(seed, 500 + seed, guests_for(seed), sc, 30, 30, 30);
        PipelineConfig cfg;
        cfg.eval.walking_features = walking_features;
        const auto rep = run_pipeline(render(script), cfg).report;
        const auto& c = rep["curves"][std::string(to_string(sc))]["pooled"];
        for (std::size_t n = 0; n < r.size(); ++n) {
            r[n].far += c["far"][n].get<double>() / 10;
            r[n].frr += c["frr"][n].get<double>() / 10;
        }
    }
    return r;
}

Outcome static_identification() {
    const auto r = mean_rates(Scenario::Static, true)[12];
    return {r.far <= 0.01 && r.frr <= 0.01,
            "FAR@13 " + fmt("%.4f", r.far) + " FRR@13 " + fmt("%.4f", r.frr) + " (both <= 0.01, mean of 10 seeds)"};
}

Outcome walking_identification() {
    const auto full = mean_rates(Scenario::Walking, true), ablated = mean_rates(Scenario::Walking, false);
    const auto full5 = full[4], full4 = full[3], abl4 = ablated[3];
    const double ratio = full4.frr > 0 ? abl4.frr / full4.frr : std::numeric_limits<double>::infinity();
    const bool ok = full5.far <= 0.02 && full5.frr <= 0.02 && ratio >= 3.0;
    return {ok, "FAR@5 " + fmt("%.4f", full5.far) + " FRR@5 " + fmt("%.4f", full5.frr) +
                    " (both <= 0.02); ablation FRR@4 " + fmt("%.4f", abl4.frr) + " vs full " + fmt("%.4f", full4.frr) +
                    " = " + fmt("%.2fx", ratio) + " (>= 3x)"};
}

// ---------------------------------------------------------------------------
// 7

struct Online {
    double delay = 0, accuracy = 0, off = 0;
};

Online mean_online(double q) {
    Online o;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto rep = run_pipeline(render(sim::sharing_script(seed, q, 0.5, 100, 12, 0.1, 5, 100)), {}).report;
        const auto& on = rep["online"];
        o.delay += on["mean_delay"].get<double>() / 10;
        o.accuracy += on["conclusion_accuracy"].get<double>() / 10;
        o.off += on["sensors_off_fraction"].get<double>() / 10;
    }
    return o;
}

Outcome online_decision() {
    const auto a = mean_online(0.1), b = mean_online(0.01);
    const bool ok = a.delay <= 4 && a.accuracy >= 0.95 && a.off >= 0.4 && b.off >= 0.8;
    return {ok, "Q_o2g 0.1: delay " + fmt("%.2f", a.delay) + " (<= 4), accuracy " + fmt("%.3f", a.accuracy) +
                    " (>= 0.95), sensors off " + fmt("%.3f", a.off) + " (>= 0.40); Q_o2g 0.01: sensors off " +
                    fmt("%.3f", b.off) + " (>= 0.80); means of 10 seeds"};
}

// ---------------------------------------------------------------------------
// 8

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

Outcome cli_determinism() {
    const fs::path dir = fs::temp_directory_path() / "silentsense_acceptance";
    fs::remove_all(dir);
    const std::string cli = SILENTSENSE_CLI;
    struct Step {
        std::string name, args, output;  // output relative to the round directory
    };
    const std::vector<Step> steps{
        {"simulate", "simulate --script identification:static --seed 3 --out {}/traces/t.jsonl", "traces/t.jsonl"},
        {"train", "train --trace {}/traces/t.jsonl --out {}/model.json", "model.json"},
        {"identify", "identify --trace {}/traces/t.jsonl --model {}/model.json --ptheta 0.98 --pphi 0.8 --log {}/decisions.jsonl",
         "decisions.jsonl"},
        {"evaluate", "evaluate --traces {}/traces --report {}/report.json", "report.json"},
        {"heatmap", "heatmap --trace {}/traces/t.jsonl --out {}/heatmap.csv", "heatmap.csv"},
    };
    std::string detail;
    bool ok = true;
    for (int round = 0; round < 2; ++round) {
        const fs::path r = dir / std::to_string(round);
        fs::create_directories(r / "traces");
        for (const auto& s : steps) {
            std::string args = s.args;
            for (std::size_t p; (p = args.find("{}")) != std::string::npos;) args.replace(p, 2, r.string());
            const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) {
                ok = false;
                detail += s.name + " failed; ";
            }
        }
    }
    int same = 0;
    for (const auto& s : steps) {
        const auto a = slurp(dir / "0" / s.output), b = slurp(dir / "1" / s.output);
        const bool eq = !a.empty() && a == b;
        same += eq;
        if (!eq) detail += s.name + " differs; ";
    }
    ok = ok && same == static_cast<int>(steps.size());
    fs::remove_all(dir);
    return {ok, detail + std::to_string(same) + "/" + std::to_string(steps.size()) +
                    " subcommands byte-identical across two runs"};
}

}  // namespace

int main() {
    run(1, "accumulated confidence", 1, accumulation);
    run(2, "stopping rule optimality", 30, stopping_rule);
    run(3, "SVM correctness", 10, svm_correctness);
    run(4, "DSP recovery", 5, dsp_recovery);
    run(5, "static identification", 120, static_identification);
    run(6, "walking identification", 120, walking_identification);
    run(7, "online decision", 120, online_decision);
    run(8, "CLI determinism", 60, cli_determinism);
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
