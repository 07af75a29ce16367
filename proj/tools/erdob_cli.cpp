// Command-line front end: run, compare, validate and sweep.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "erdob/config.hpp"
#include "erdob/sim.hpp"
#include "erdob/trace_io.hpp"

namespace fs = std::filesystem;
using namespace erdob;

namespace {

constexpr const char* out_dir_env = "ERDOB_OUT_DIR";

// A config argument is a file path or the id of a built-in scenario.
ConfigDoc load_doc(const std::string& arg) {
    if (!fs::exists(arg) && (arg == "example1" || arg == "example2")) {
        ConfigDoc doc;
        doc.set("scenario.name", arg);
        return doc;
    }
    return load_config_doc(arg);
}

fs::path resolve_out(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv(out_dir_env)) {
        return env;
    }
    throw std::runtime_error(std::string("no output directory: pass --out or set ") + out_dir_env);
}

struct Timed {
    SimTrace trace;
    double seconds;
};

Timed timed_run(const SimConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    SimTrace trace = run(cfg);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(trace), s};
}

int report_failure(const std::exception& e) {
    if (const auto* se = dynamic_cast<const SimError*>(&e)) {
        std::cerr << "error: simulation aborted: " << se->what() << " (last valid time " << se->last_valid_time()
                  << " s)\n";
        return 3;
    }
    if (dynamic_cast<const ConfigError*>(&e)) {
        std::cerr << "error: invalid config: " << e.what() << "\n";
        return 2;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 1;
}

int cmd_run(const std::string& config, const std::string& out_flag) {
    const ConfigDoc doc = load_doc(config);
    const SimConfig cfg = build_config(doc);
    const fs::path out = resolve_out(out_flag);
    const Timed r = timed_run(cfg);
    write_run(out, render_run(doc, cfg, r.trace, r.seconds));
    std::cout << metrics_text(metrics(r.trace), {});
    std::cout << "wrote " << out.string() << " (" << r.trace.samples.size() << " samples, " << r.seconds << " s)\n";
    return 0;
}

std::string label_of(const std::string& arg, const SimConfig& cfg) {
    return fs::path(arg).stem().string() + ":" + std::string(to_string(cfg.mode));
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out_flag) {
    // Both configs are validated and both runs finish before anything is written.
    const ConfigDoc doc_a = load_doc(a);
    const ConfigDoc doc_b = load_doc(b);
    const SimConfig cfg_a = build_config(doc_a);
    const SimConfig cfg_b = build_config(doc_b);
    if (cfg_a.scenario.name != cfg_b.scenario.name) {
        throw ConfigError("scenario.name", "cannot compare different scenarios ('" + cfg_a.scenario.name + "' vs '" +
                                               cfg_b.scenario.name + "')");
    }
    const fs::path out = resolve_out(out_flag);
    auto fut_a = std::async(std::launch::async, timed_run, std::cref(cfg_a));
    const Timed rb = timed_run(cfg_b);
    const Timed ra = fut_a.get();
    const Comparison c = compare_traces(ra.trace, rb.trace);
    const RunOutputs out_a = render_run(doc_a, cfg_a, ra.trace, ra.seconds);
    const RunOutputs out_b = render_run(doc_b, cfg_b, rb.trace, rb.seconds);
    const std::string table = comparison_text(c, label_of(a, cfg_a), label_of(b, cfg_b));

    write_run(out / "a", out_a);
    write_run(out / "b", out_b);
    write_file_atomic(out / "comparison.csv", comparison_csv(c));
    write_file_atomic(out / "comparison.txt", table);
    std::cout << table;
    return 0;
}

int cmd_validate(const std::string& config) {
    const SimConfig cfg = build_config(load_doc(config), false);
    bool ok = true;
    for (const auto& c : check_config(cfg)) {
        const char* tag = "PASS";
        if (c.level == CheckResult::Level::Warn) {
            tag = "WARN";
        } else if (c.level == CheckResult::Level::Fail) {
            tag = "FAIL";
            ok = false;
        }
        std::cout << tag << "  " << c.name << ": " << c.detail << "\n";
    }
    std::cout << (ok ? "config valid\n" : "config invalid\n");
    return ok ? 0 : 2;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        out.push_back(item);
    }
    return out;
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& out_flag, unsigned jobs) {
    const auto eq = param.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--param", "expected section.key=v1,v2,...");
    }
    const std::string key = param.substr(0, eq);
    const std::vector<std::string> values = split_list(param.substr(eq + 1));
    const ConfigDoc base = load_doc(config);

    std::vector<ConfigDoc> docs;
    std::vector<SimConfig> cfgs;
    for (const auto& v : values) {
        ConfigDoc doc = base;
        doc.set(key, v);
        cfgs.push_back(build_config(doc));
        docs.push_back(std::move(doc));
    }
    const fs::path out = resolve_out(out_flag);

    struct Result {
        Timed run;
        std::string error;
    };
    std::vector<Result> results(cfgs.size());
    const unsigned width = std::max(1u, jobs);
    for (std::size_t start = 0; start < cfgs.size(); start += width) {
        std::vector<std::future<Result>> batch;
        for (std::size_t i = start; i < std::min(cfgs.size(), start + width); ++i) {
            batch.push_back(std::async(std::launch::async, [&cfg = cfgs[i]]() -> Result {
                try {
                    return {timed_run(cfg), {}};
                } catch (const std::exception& e) {
                    return {{}, e.what()};
                }
            }));
        }
        for (std::size_t j = 0; j < batch.size(); ++j) {
            results[start + j] = batch[j].get();
        }
    }

    std::string summary = key + ",tracking_settle_0.02,eps_settle_0.1,s_error_final,reach_time_0.01,switch_time,error\n";
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    int status = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const fs::path dir = out / (key + "=" + values[i]);
        if (!results[i].error.empty()) {
            summary += values[i] + ",,,,,," + results[i].error + "\n";
            std::cerr << "run " << key << "=" << values[i] << " failed: " << results[i].error << "\n";
            status = 3;
            continue;
        }
        const auto& r = results[i].run;
        write_run(dir, render_run(docs[i], cfgs[i], r.trace, r.seconds));
        const Metrics m = metrics(r.trace);
        summary += values[i] + "," + cell(m.settle_time) + "," + cell(m.eps_error_settle) + "," +
                   cell(m.s_error_final) + "," + cell(m.reach_time) + "," + cell(m.switch_time) + ",\n";
    }
    fs::create_directories(out);
    write_file_atomic(out / "sweep.csv", summary);
    std::cout << summary;
    return status;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Disturbance observer with experience replay: closed-loop simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version_string));

    std::string run_config;
    std::string run_out;
    auto* run_cmd = app.add_subcommand("run", "Simulate one configuration and write its trace and metrics");
    run_cmd->add_option("config", run_config, "Config file, or example1 / example2")->required();
    run_cmd->add_option("--out,-o", run_out, std::string("Output directory (default: $") + out_dir_env + ")");

    std::string cmp_a;
    std::string cmp_b;
    std::string cmp_out;
    auto* cmp_cmd = app.add_subcommand("compare", "Run two configurations of one scenario and tabulate metrics");
    cmp_cmd->add_option("a", cmp_a, "First config")->required();
    cmp_cmd->add_option("b", cmp_b, "Second config")->required();
    cmp_cmd->add_option("--out,-o", cmp_out, "Output directory");

    std::string val_config;
    auto* val_cmd = app.add_subcommand("validate", "Check a configuration without simulating");
    val_cmd->add_option("config", val_config, "Config file, or example1 / example2")->required();

    std::string sw_config;
    std::string sw_param;
    std::string sw_out;
    unsigned sw_jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sw_cmd = app.add_subcommand("sweep", "Run one config over a list of values for a single key");
    sw_cmd->add_option("config", sw_config, "Base config")->required();
    sw_cmd->add_option("--param,-p", sw_param, "section.key=v1,v2,...")->required();
    sw_cmd->add_option("--out,-o", sw_out, "Output directory");
    sw_cmd->add_option("--jobs,-j", sw_jobs, "Parallel runs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            return cmd_run(run_config, run_out);
        }
        if (*cmp_cmd) {
            return cmd_compare(cmp_a, cmp_b, cmp_out);
        }
        if (*val_cmd) {
            return cmd_validate(val_config);
        }
        if (*sw_cmd) {
            return cmd_sweep(sw_config, sw_param, sw_out, sw_jobs);
        }
    } catch (const std::exception& e) {
        return report_failure(e);
    }
    return 0;
}
