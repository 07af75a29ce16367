#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "erdob/config.hpp"
#include "erdob/trace_io.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace erdob;
namespace fs = std::filesystem;

namespace {

const char* const short_ex1 = R"(
[scenario]
name = example1

[sim]
t_end = 9
)";

// A fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("erdob_test_" + tag + "_" + std::to_string(std::rand()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

struct CliResult {
    int status;
    std::string out;
    std::string err;
};

CliResult cli(const std::string& args, const fs::path& scratch) {
    const fs::path o = scratch / "stdout.txt";
    const fs::path e = scratch / "stderr.txt";
    const std::string cmd = std::string(ERDOB_CLI_PATH) + " " + args + " > " + o.string() + " 2> " + e.string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(o), slurp(e)};
}

CheckResult::Level level_of(const std::vector<CheckResult>& rs, const std::string& name) {
    for (const auto& r : rs) {
        if (r.name == name) {
            return r.level;
        }
    }
    FAIL("no check named " << name);
    return CheckResult::Level::Fail;
}

CheckResult::Level worst(const std::vector<CheckResult>& rs) {
    auto w = CheckResult::Level::Pass;
    for (const auto& r : rs) {
        w = std::max(w, r.level);
    }
    return w;
}

}  // namespace

TEST_CASE("config text maps onto the simulation config") {
    const SimConfig cfg = build_config(parse_config_text(R"(
# comment
[scenario]
name = example2

[filter]
a = 4

[observer]
mode = baseline
gamma = 20

[replay]
kappa = 2.5
capacity = 12
t0 = 5

[controller]
k1 = 3
hslash = 7

[sim]
t_end = 12
)"));
    CHECK(cfg.scenario.name == "example2");
    CHECK(cfg.a == 4.0);
    CHECK(cfg.mode == ObserverMode::Baseline);
    CHECK(cfg.gamma == Mat::identity(4) * 20.0);
    CHECK(cfg.kappa == 2.5);
    CHECK(cfg.stack_capacity == 12);
    CHECK(cfg.resolved_t0() == 5.0);
    CHECK(cfg.controller.k1 == 3.0);
    CHECK(cfg.controller.hslash == 7.0);
    CHECK(cfg.t_end == 12.0);
    CHECK(cfg.step == 1e-3);
}

TEST_CASE("an empty config is the first example with defaults") {
    const SimConfig cfg = build_config(parse_config_text(""));
    CHECK(cfg.scenario.name == "example1");
    CHECK(cfg.a == 2.0);
    CHECK(cfg.mode == ObserverMode::Replay);
}

TEST_CASE("config errors carry the field path") {
    auto field_of = [](const std::string& text) -> std::string {
        try {
            build_config(parse_config_text(text));
        } catch (const ConfigError& e) {
            return e.field();
        }
        return "";
    };
    CHECK(field_of("[replay]\nkapa = 1\n") == "replay.kapa");
    CHECK(field_of("[solver]\nstep = 1\n") == "solver");
    CHECK(field_of("[filter]\na = two\n") == "filter.a");
    CHECK(field_of("[scenario]\nname = example1\nS = 0, 1; -1, 0\n") == "scenario.S");
    CHECK(field_of("[scenario]\nname = example3\n") == "scenario.name");
    CHECK(field_of("[observer]\nmode = kalman\n") == "observer.mode");
    CHECK(field_of("[sim]\nstep = -1\n") == "sim.step");
    CHECK(field_of("[observer]\ngamma = 1, 2; 3, 4\n") == "observer.gamma");
}

TEST_CASE("gain condition violation names the condition") {
    try {
        build_config(parse_config_text("[scenario]\nname = example2\n[controller]\nk1 = 0.5\n"));
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("k1 >= ||F||*||D||") != std::string::npos);
    }
}

TEST_CASE("value codecs") {
    CHECK(parse_vec("1, -2.5, 3e-2", "f") == Vec{1.0, -2.5, 0.03});
    CHECK(parse_matrix("1, 2; 3, 4", "f") == Mat{{1, 2}, {3, 4}});
    CHECK_THROWS_AS(parse_matrix("1, 2; 3", "f"), ConfigError);
    CHECK_THROWS_AS(parse_double("1.0x", "f"), ConfigError);
    CHECK(format_matrix(Mat{{1, 2}, {3, 4}}) == "1, 2; 3, 4");
    const double third = 1.0 / 3.0;
    CHECK(parse_double(format_double(third), "f") == third);
    CHECK(parse_double(format_double(0.1), "f") == 0.1);
}

TEST_CASE("effective config reproduces itself") {
    const ConfigDoc doc = parse_config_text("[scenario]\nname = example2\n[replay]\nkappa = 3\n");
    const SimConfig cfg = build_config(doc);
    const ConfigDoc eff = effective_doc(doc, cfg);
    for (const char* section : {"scenario", "filter", "observer", "replay", "controller", "sim"}) {
        CHECK_MESSAGE(eff.sections.count(section) == 1, std::string(section));
    }
    const std::string text = to_ini(eff);
    const ConfigDoc again = parse_config_text(text);
    const SimConfig cfg2 = build_config(again);
    CHECK(to_ini(effective_doc(again, cfg2)) == text);
    CHECK(cfg2.gamma == cfg.gamma);
    CHECK(cfg2.a == cfg.a);
    CHECK(cfg2.kappa == 3.0);
    CHECK(cfg2.resolved_t0() == cfg.resolved_t0());
    CHECK(cfg2.scenario.x0 == cfg.scenario.x0);
    CHECK(cfg2.scenario.exo.initial == cfg.scenario.exo.initial);
}

TEST_CASE("custom scenario from text") {
    const SimConfig cfg = build_config(parse_config_text(R"(
[scenario]
name = custom
m = 2
xi = x1; x2
zeta = 1
phi_star = 0, 1, 1, 0; -1, 0, 0, 1
D = 1, 0; 0, 1
S = 0, 1; -1, 0
reference = 1, 1, 0, 0; 1, 1, 1.5707963267948966, 0
)"));
    CHECK(cfg.scenario.plant.n == 2);
    CHECK(cfg.scenario.plant.regressor_len() == 4);
    const Vec dx = cfg.scenario.plant.rhs({1.0, 2.0}, {0.5, -0.5}, {0.0, 0.0});
    CHECK(oracle::max_abs_diff(dx, {2.5, -1.5}) < 1e-15);
    CHECK(worst(check_config(cfg)) == CheckResult::Level::Pass);
}

TEST_CASE("randomized initial state is seeded") {
    const char* text = "[scenario]\nname = example1\nx0_spread = 0.5\n[sim]\nseed = 7\n";
    const SimConfig a = build_config(parse_config_text(text));
    const SimConfig b = build_config(parse_config_text(text));
    CHECK(a.scenario.x0 == b.scenario.x0);
    CHECK(linalg::norm(a.scenario.x0) > 0.0);
    for (double v : a.scenario.x0) {
        CHECK(std::abs(v) <= 0.5);
    }
    const SimConfig c = build_config(parse_config_text("[scenario]\nx0_spread = 0.5\n[sim]\nseed = 8\n"));
    CHECK(c.scenario.x0 != a.scenario.x0);
}

TEST_CASE("assumption checks") {
    SUBCASE("second example passes with an exact left inverse") {
        const SimConfig cfg = default_config("example2");
        const auto rs = check_config(cfg);
        CHECK(worst(rs) == CheckResult::Level::Pass);
        CHECK(level_of(rs, "disturbance map rank") == CheckResult::Level::Pass);
        const Mat& d = cfg.scenario.plant.dist_map;
        CHECK(support::max_abs_diff(linalg::pinv(d) * d, Mat::identity(2)) < 1e-12);
    }
    SUBCASE("stable exosystem is a warning") {
        SimConfig cfg = default_config("example1");
        cfg.scenario.exo.s_matrix = Mat{{-1, 0}, {0, -1}};
        const auto rs = check_config(cfg);
        CHECK(worst(rs) == CheckResult::Level::Warn);
        CHECK(level_of(rs, "exosystem spectrum") == CheckResult::Level::Warn);
    }
    SUBCASE("dependent disturbance columns fail") {
        SimConfig cfg = default_config("example2");
        cfg.scenario.plant.dist_map = Mat{{0, 0}, {1, 2}, {0, 0}, {1, 2}};
        const auto rs = check_config(cfg);
        CHECK(worst(rs) == CheckResult::Level::Fail);
        bool cites_pinv = false;
        for (const auto& r : rs) {
            if (r.level == CheckResult::Level::Fail && r.detail.find("pseudoinverse") != std::string::npos) {
                cites_pinv = true;
            }
        }
        CHECK(cites_pinv);
    }
    SUBCASE("inadmissible gain fails") {
        SimConfig cfg = default_config("example2");
        cfg.controller.k1 = 0.1;
        CHECK(worst(check_config(cfg)) == CheckResult::Level::Fail);
    }
}

TEST_CASE("trace header contract") {
    SimConfig cfg = default_config("example1");
    cfg.t0 = 0.2;
    cfg.t_end = 1.0;
    const TraceTable t = trace_table(run(cfg));
    const std::vector<std::string> expected{"t",       "x1",      "x2",       "xd1",        "xd2",    "ex1",
                                            "ex2",     "u1",      "u2",       "epsT1",      "epsT2",  "epsThat1",
                                            "epsThat2", "S11hat", "S12hat",   "S21hat",     "S22hat", "Stilde_fro",
                                            "k",       "sigma1",  "sigma2",   "lambda_min", "phase"};
    CHECK(t.header == expected);
    CHECK(t.rows.size() == 101);
    CHECK(t.rows.front().size() == expected.size());
}

TEST_CASE("CSV round trip is exact") {
    SimConfig cfg = default_config("example2");
    cfg.t0 = 0.5;
    cfg.t_end = 2.0;
    const SimTrace tr = run(cfg);
    for (const TraceTable& table : {trace_table(tr), diagnostics_table(tr)}) {
        std::stringstream ss;
        write_csv(ss, table);
        const TraceTable back = read_csv(ss);
        CHECK(back == table);
    }
    const TraceTable t = trace_table(tr);
    const std::size_t col = t.column("S12hat");
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(t.rows[i][col] == tr.samples[i].s_hat(0, 1));
    }
}

TEST_CASE("atomic writes") {
    TempDir dir("atomic");
    const fs::path p = dir.path / "out.txt";
    write_file_atomic(p, "first\n");
    write_file_atomic(p, "second\n");
    CHECK(slurp(p) == "second\n");
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path)) {
        ++files;
    }
    CHECK(files == 1);
    CHECK_THROWS(write_file_atomic("/dev/null/nested/out.txt", "x"));
}

TEST_CASE("manifest echoes the effective config") {
    const ConfigDoc doc = parse_config_text(short_ex1);
    const SimConfig cfg = build_config(doc);
    const RunOutputs out = render_run(doc, cfg, run(cfg), 0.1);
    CHECK(out.manifest.find("\"version\"") != std::string::npos);
    CHECK(out.manifest.find("\"wall_seconds\"") != std::string::npos);
    CHECK(out.manifest.find("\"hslash\"") != std::string::npos);
    CHECK(out.manifest.find("\"record_interval\"") != std::string::npos);
    CHECK(out.metrics.find("s_error_final = ") != std::string::npos);
    CHECK_FALSE(out.figures.empty());
}

TEST_CASE("command line: run, validate and failure exits") {
    TempDir dir("cli");
    const fs::path cfg = dir.path / "short.ini";
    spit(cfg, short_ex1);

    const CliResult ok = cli("run " + cfg.string() + " --out " + (dir.path / "run").string(), dir.path);
    CHECK(ok.status == 0);
    const std::string csv = slurp(dir.path / "run" / "trace.csv");
    CHECK(csv.rfind("t,x1,x2,xd1,xd2,ex1,ex2,u1,u2,", 0) == 0);
    for (const char* f : {"diagnostics.csv", "metrics.txt", "manifest.json", "plots.gp"}) {
        CHECK_MESSAGE(fs::exists(dir.path / "run" / f), std::string(f));
    }

    const fs::path bad = dir.path / "bad.ini";
    spit(bad, "[scenario]\nname = example2\n[controller]\nk1 = 0.5\n");
    const CliResult rejected = cli("run " + bad.string() + " --out " + (dir.path / "bad").string(), dir.path);
    CHECK(rejected.status == 2);
    CHECK(rejected.err.find("k1 >= ||F||*||D||") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "bad"));

    const CliResult unwritable = cli("run " + cfg.string() + " --out /dev/null/out", dir.path);
    CHECK(unwritable.status != 0);
    CHECK_FALSE(unwritable.err.empty());

    const CliResult valid = cli("validate example2", dir.path);
    CHECK(valid.status == 0);
    CHECK(valid.out.find("FAIL") == std::string::npos);
    const CliResult invalid = cli("validate " + bad.string(), dir.path);
    CHECK(invalid.status == 2);
}

TEST_CASE("command line: output directory from the environment") {
    TempDir dir("env");
    const fs::path cfg = dir.path / "short.ini";
    spit(cfg, short_ex1);
    const fs::path target = dir.path / "from_env";
    const CliResult r = cli("run " + cfg.string(), dir.path);
    CHECK(r.status != 0);
    setenv("ERDOB_OUT_DIR", target.string().c_str(), 1);
    const CliResult r2 = cli("run " + cfg.string(), dir.path);
    unsetenv("ERDOB_OUT_DIR");
    CHECK(r2.status == 0);
    CHECK(fs::exists(target / "trace.csv"));
}

TEST_CASE("command line: compare") {
    TempDir dir("cmp");
    const fs::path cfg = dir.path / "short.ini";
    spit(cfg, short_ex1);
    const CliResult same =
        cli("compare " + cfg.string() + " " + cfg.string() + " --out " + (dir.path / "same").string(), dir.path);
    REQUIRE(same.status == 0);
    std::istringstream rows(slurp(dir.path / "same" / "comparison.csv"));
    std::string line;
    std::getline(rows, line);
    CHECK(line == "metric,a,b,delta");
    while (std::getline(rows, line)) {
        const std::string delta = line.substr(line.rfind(',') + 1);
        CHECK_MESSAGE((delta.empty() || std::stod(delta) == 0.0), line);
    }
    CHECK(fs::exists(dir.path / "same" / "a" / "trace.csv"));
    CHECK(fs::exists(dir.path / "same" / "b" / "trace.csv"));

    const fs::path bad = dir.path / "bad.ini";
    spit(bad, "[scenario]\nname = example1\n[replay]\nkapa = 1\n");
    const CliResult partial =
        cli("compare " + cfg.string() + " " + bad.string() + " --out " + (dir.path / "partial").string(), dir.path);
    CHECK(partial.status == 2);
    CHECK_FALSE(fs::exists(dir.path / "partial"));

    const fs::path other = dir.path / "other.ini";
    spit(other, "[scenario]\nname = example2\n[sim]\nt_end = 9\n");
    const CliResult mismatch =
        cli("compare " + cfg.string() + " " + other.string() + " --out " + (dir.path / "mm").string(), dir.path);
    CHECK(mismatch.status != 0);
    CHECK_FALSE(fs::exists(dir.path / "mm"));
}

TEST_CASE("command line: replay settles the first example's disturbance estimate sooner") {
    TempDir dir("cmp_modes");
    const fs::path base = dir.path / "base.ini";
    const fs::path replay = dir.path / "replay.ini";
    spit(base, "[scenario]\nname = example1\n[observer]\nmode = baseline\n");
    spit(replay, "[scenario]\nname = example1\n[observer]\nmode = replay\n");
    const CliResult r =
        cli("compare " + base.string() + " " + replay.string() + " --out " + (dir.path / "out").string(), dir.path);
    REQUIRE(r.status == 0);
    std::istringstream rows(slurp(dir.path / "out" / "comparison.csv"));
    std::string line;
    bool found = false;
    while (std::getline(rows, line)) {
        if (line.rfind("eps_settle_0.1,", 0) == 0) {
            found = true;
            std::istringstream cells(line);
            std::string name, a, b;
            std::getline(cells, name, ',');
            std::getline(cells, a, ',');
            std::getline(cells, b, ',');
            REQUIRE_FALSE(a.empty());
            REQUIRE_FALSE(b.empty());
            CHECK(std::stod(b) < std::stod(a));
        }
    }
    CHECK(found);
}

TEST_CASE("command line: sweep") {
    TempDir dir("sweep");
    const fs::path cfg = dir.path / "short.ini";
    spit(cfg, short_ex1);
    const CliResult r = cli("sweep " + cfg.string() + " --param filter.a=2,3 -j 2 --out " + (dir.path / "sw").string(),
                            dir.path);
    CHECK(r.status == 0);
    const std::string summary = slurp(dir.path / "sw" / "sweep.csv");
    std::size_t lines = 0;
    for (char c : summary) {
        lines += c == '\n';
    }
    CHECK(lines == 3);
    const CliResult bad = cli("sweep " + cfg.string() + " --param filter.b=2 --out " + (dir.path / "sw2").string(),
                              dir.path);
    CHECK(bad.status == 2);
}
