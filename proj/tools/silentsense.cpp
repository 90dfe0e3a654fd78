// Command-line front end: simulate traces, train and apply models, evaluate traces, and build the
// touch-reaction heatmap. Exit codes: 0 success, 1 validation or parse error, 2 runtime error.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "silentsense/silentsense.hpp"

namespace fs = std::filesystem;
using namespace silentsense;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const std::string& path, const char* what) {
    try {
        return nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string(what) + " " + path + ": " + e.what());
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path);
}

PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    return config_from_json(read_json(path, "config"));
}

// Built-in generators: "identification:static", "identification:walking", "sharing:<q_o2g>".
std::optional<sim::SessionScript> builtin_script(const std::string& name, std::uint64_t seed) {
    std::vector<std::uint64_t> guests;
    for (std::uint64_t g = 1; g <= 10; ++g) guests.push_back(1000 * seed + g);
    if (name == "identification:static")
        return sim::identification_script(seed, 500 + seed, guests, Scenario::Static, 100, 50, 60);
    if (name == "identification:walking")
        return sim::identification_script(seed, 500 + seed, guests, Scenario::Walking, 30, 30, 30);
    if (name.rfind("sharing:", 0) == 0) {
        double q = 0;
        try {
            std::size_t used = 0;
            q = std::stod(name.substr(8), &used);
            if (used != name.size() - 8) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ValidationError("script: bad share probability in \"" + name + "\"");
        }
        if (!(q >= 0 && q <= 1)) throw ValidationError("script: share probability must lie in [0, 1]");
        return sim::sharing_script(seed, q, 0.5, 100, 12, 0.1, 5, 100);
    }
    return std::nullopt;
}

int cmd_simulate(const std::string& script, std::optional<std::uint64_t> seed, const std::string& out) {
    sim::SessionScript s;
    if (fs::exists(script)) {
        s = sim::script_from_json(read_json(script, "script"));
        if (seed) s.seed = *seed;
    } else if (auto b = builtin_script(script, seed.value_or(1))) {
        s = std::move(*b);
    } else {
        throw ValidationError("script: no such file or built-in generator \"" + script + "\"");
    }
    const auto tr = sim::gen_session(s, sim::make_profiles(s));
    if (out.empty() || out == "-") write_trace(tr, std::cout);
    else write_trace(tr, out);
    return 0;
}

int cmd_train(const std::string& trace, const std::string& config, const std::string& out) {
    const auto cfg = load_config(config);
    const auto bank = train_from_trace(parse_trace(trace), cfg);
    write_file(out, to_json(bank).dump(1) + "\n");
    return 0;
}

int cmd_identify(const std::string& trace, const std::string& model, const std::string& config,
                 std::optional<double> ptheta, std::optional<double> pphi, const std::string& log,
                 const std::string& protection) {
    auto cfg = load_config(config);
    if (ptheta) cfg.scheduler.p_theta = *ptheta;
    if (pphi) cfg.scheduler.p_phi = *pphi;
    validate(cfg);
    const auto bank = bank_from_json(read_json(model, "model"));
    const auto r = identify_trace(parse_trace(trace), bank, cfg);
    std::string decisions = jsonl(r.decisions), events = jsonl(r.protection);
    if (log.empty() || log == "-") std::cout << decisions;
    else write_file(log, decisions);
    if (!protection.empty()) write_file(protection, events);
    return 0;
}

int cmd_evaluate(const std::string& traces, const std::string& config, const std::string& report,
                 const std::string& logs) {
    const auto cfg = load_config(config);
    std::vector<fs::path> paths;
    if (fs::is_directory(traces)) {
        for (const auto& e : fs::directory_iterator(traces))
            if (e.is_regular_file() && e.path().extension() == ".jsonl") paths.push_back(e.path());
    } else if (fs::is_regular_file(traces)) {
        paths.push_back(traces);
    } else {
        throw ValidationError("evaluate: no such file or directory " + traces);
    }
    if (paths.empty()) throw ValidationError("evaluate: no .jsonl traces in " + traces);
    std::sort(paths.begin(), paths.end());

    // One session per trace, evaluated concurrently; results are gathered in path order.
    const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::vector<PipelineResult> results(paths.size());
    for (std::size_t begin = 0; begin < paths.size(); begin += workers) {
        std::vector<std::future<PipelineResult>> batch;
        for (std::size_t i = begin; i < std::min(paths.size(), begin + workers); ++i)
            batch.push_back(std::async(std::launch::async, [&, i] {
                try {
                    return run_pipeline(parse_trace(paths[i].string()), cfg);
                } catch (const ParseError& e) {
                    throw ParseError(paths[i].filename().string() + ": " + e.what());
                }
            }));
        for (std::size_t i = 0; i < batch.size(); ++i) results[begin + i] = batch[i].get();
    }

    nlohmann::json out;
    out["format"] = "silentsense-evaluation";
    out["version"] = 1;
    out["config"] = to_json(cfg);
    out["traces"] = nlohmann::json::array();
    for (std::size_t i = 0; i < paths.size(); ++i) {
        auto rep = results[i].report;
        rep["trace"] = paths[i].filename().string();
        out["traces"].push_back(std::move(rep));
    }
    write_file(report, out.dump(1) + "\n");

    if (!logs.empty()) {
        fs::create_directories(logs);
        for (std::size_t i = 0; i < paths.size(); ++i) {
            const auto stem = (fs::path(logs) / paths[i].stem()).string();
            write_file(stem + ".curves.csv", results[i].curves_csv);
            write_file(stem + ".decisions.jsonl", results[i].decision_log);
            write_file(stem + ".protection.jsonl", results[i].protection_log);
            write_file(stem + ".judgements.jsonl", results[i].judgement_log);
        }
    }
    return 0;
}

int cmd_heatmap(const std::string& trace, const std::string& config, const std::string& user, const std::string& out) {
    const auto cfg = load_config(config);
    const auto taps = tap_reactions(parse_trace(trace), cfg, user);
    const auto csv = heatmap_csv(reaction_heatmap(taps));
    if (out.empty() || out == "-") std::cout << csv;
    else write_file(out, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"silentsense: implicit owner/guest identification from touch and motion traces"};
    app.require_subcommand(1);

    std::string script, out, trace, model, config, traces, report, logs, log, protection, user;
    std::optional<std::uint64_t> seed;
    std::optional<double> ptheta, pphi;

    auto* simulate = app.add_subcommand("simulate", "render a session script into a JSONL trace");
    simulate->add_option("--script", script, "script JSON file, or identification:static, identification:walking, sharing:<q>")
        ->required();
    simulate->add_option("--seed", seed, "session seed (overrides the script's)");
    simulate->add_option("--out", out, "output trace path (default stdout)");

    auto* train = app.add_subcommand("train", "train models from the owner and guest data of a labelled trace");
    train->add_option("--trace", trace, "JSONL trace")->required();
    train->add_option("--config", config, "config JSON");
    train->add_option("--out", out, "model JSON path")->required();

    auto* identify = app.add_subcommand("identify", "run scheduled identification over a trace");
    identify->add_option("--trace", trace, "JSONL trace")->required();
    identify->add_option("--model", model, "model JSON from train")->required();
    identify->add_option("--config", config, "config JSON");
    identify->add_option("--ptheta", ptheta, "conclusion threshold P_theta");
    identify->add_option("--pphi", pphi, "restart bound P_phi");
    identify->add_option("--log", log, "decision log path (default stdout)");
    identify->add_option("--protection", protection, "protection event log path");

    auto* evaluate = app.add_subcommand("evaluate", "evaluate every trace in a directory");
    evaluate->add_option("--traces", traces, "directory of .jsonl traces, or a single trace")->required();
    evaluate->add_option("--config", config, "config JSON");
    evaluate->add_option("--report", report, "report JSON path")->required();
    evaluate->add_option("--logs", logs, "directory for per-trace curves and logs");

    auto* heatmap = app.add_subcommand("heatmap", "mean tap reaction per screen cell");
    heatmap->add_option("--trace", trace, "JSONL trace")->required();
    heatmap->add_option("--config", config, "config JSON");
    heatmap->add_option("--user", user, "only taps labelled with this user");
    heatmap->add_option("--out", out, "CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*simulate) return cmd_simulate(script, seed, out);
        if (*train) return cmd_train(trace, config, out);
        if (*identify) return cmd_identify(trace, model, config, ptheta, pphi, log, protection);
        if (*evaluate) return cmd_evaluate(traces, config, report, logs);
        if (*heatmap) return cmd_heatmap(trace, config, user, out);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
