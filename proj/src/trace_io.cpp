#include "erdob/trace_io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#ifndef ERDOB_VERSION
#define ERDOB_VERSION "0.0.0"
#endif

namespace erdob {

const char* const version_string = ERDOB_VERSION;

std::size_t TraceTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw std::out_of_range("no column named '" + name + "'");
}

namespace {

void add_series(std::vector<std::string>& header, const char* stem, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        header.push_back(stem + std::to_string(i + 1));
    }
}

void append(std::vector<double>& row, const Vec& v) { row.insert(row.end(), v.begin(), v.end()); }

}  // namespace

TraceTable trace_table(const SimTrace& trace) {
    TraceTable t;
    const std::size_t n = trace.n;
    const std::size_t d = trace.d;
    t.header.push_back("t");
    add_series(t.header, "x", n);
    add_series(t.header, "xd", n);
    add_series(t.header, "ex", n);
    add_series(t.header, "u", trace.m);
    add_series(t.header, "epsT", d);
    add_series(t.header, "epsThat", d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            t.header.push_back("S" + std::to_string(i + 1) + std::to_string(j + 1) + "hat");
        }
    }
    t.header.push_back("Stilde_fro");
    t.header.push_back("k");
    add_series(t.header, "sigma", n);
    t.header.push_back("lambda_min");
    t.header.push_back("phase");

    for (const auto& s : trace.samples) {
        std::vector<double> row{s.t};
        append(row, s.x);
        append(row, s.x_d);
        append(row, s.e_x);
        append(row, s.u);
        append(row, s.eps_T);
        append(row, s.eps_T_hat);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                row.push_back(s.s_hat(i, j));
            }
        }
        row.push_back(s.s_tilde_fro);
        row.push_back(s.k);
        append(row, s.sigma);
        row.push_back(s.lambda_min);
        row.push_back(s.phase == Phase::Sliding ? 1.0 : 0.0);
        t.rows.push_back(std::move(row));
    }
    return t;
}

TraceTable diagnostics_table(const SimTrace& trace) {
    TraceTable t;
    const std::size_t n = trace.n;
    const std::size_t d = trace.d;
    const std::size_t p = trace.samples.empty() ? 0 : trace.samples.front().h.size();
    t.header.push_back("t");
    add_series(t.header, "epsbar", n);
    add_series(t.header, "etilde", n);
    add_series(t.header, "h", p);
    add_series(t.header, "l", n);
    add_series(t.header, "rho", n);
    add_series(t.header, "eps", d);
    add_series(t.header, "epshat", d);
    add_series(t.header, "rhoDeltahat", d);
    t.header.push_back("lambda1");
    for (const auto& s : trace.samples) {
        std::vector<double> row{s.t};
        append(row, s.eps_bar);
        append(row, s.e_tilde);
        append(row, s.h);
        append(row, s.l);
        append(row, s.rho);
        append(row, s.eps);
        append(row, s.eps_hat);
        append(row, s.rho_delta_hat);
        row.push_back(s.lambda1);
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_csv(std::ostream& out, const TraceTable& table) {
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        out << (i ? "," : "") << table.header[i];
    }
    out << '\n';
    char buf[40];
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            if (i) {
                out << ',';
            }
            out << buf;
        }
        out << '\n';
    }
}

TraceTable read_csv(std::istream& in) {
    TraceTable t;
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("empty CSV input");
    }
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');) {
        t.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<double> row;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p <= end) {
            const char* comma = std::find(p, end, ',');
            double v = 0.0;
            const auto res = std::from_chars(p, comma, v);
            if (res.ec != std::errc{} || res.ptr != comma) {
                throw std::runtime_error("bad number on CSV line " + std::to_string(lineno));
            }
            row.push_back(v);
            p = comma + 1;
        }
        if (row.size() != t.header.size()) {
            throw std::runtime_error("CSV line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                                     " fields, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string() + ": " + std::strerror(errno));
        }
        out << content;
        out.flush();
        if (!out) {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
    }
}

namespace {

std::string opt_text(const std::optional<double>& v) { return v ? format_double(*v) : "absent"; }

std::string tol_tag(const char* stem, double tol) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%g", stem, tol);
    return buf;
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string dat_file(const SimTrace& trace, const std::vector<std::string>& cols,
                     const std::function<std::vector<double>(const TraceSample&)>& row_of) {
    std::string out = "#";
    for (const auto& c : cols) {
        out += " " + c;
    }
    out += "\n";
    char buf[40];
    for (const auto& s : trace.samples) {
        const auto row = row_of(s);
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.10g", row[i]);
            out += (i ? " " : "") + std::string(buf);
        }
        out += "\n";
    }
    return out;
}

std::string series_names(const char* stem, std::size_t count) {
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        out += (i ? " " : "") + std::string(stem) + std::to_string(i + 1);
    }
    return out;
}

std::string gnuplot_script(const SimTrace& trace) {
    const std::size_t n = trace.n;
    const std::size_t d = trace.d;
    std::ostringstream g;
    g << "# gnuplot -c plots.gp\n"
      << "set terminal pngcairo size 900,600\n"
      << "set grid\n"
      << "set xlabel 't [s]'\n\n";

    g << "set output 'disturbance.png'\nset title 'disturbance and estimate'\nplot ";
    for (std::size_t i = 0; i < d; ++i) {
        g << (i ? ", \\\n     " : "") << "'fig_disturbance.dat' u 1:" << 2 + i << " w l t 'epsT" << i + 1 << "', "
          << "'' u 1:" << 2 + d + i << " w l dt 2 t 'epsThat" << i + 1 << "'";
    }
    g << "\n\n";

    g << "set output 's_entries.png'\nset title 'exosystem matrix entries and estimates'\nplot ";
    for (std::size_t i = 0; i < d * d; ++i) {
        g << (i ? ", \\\n     " : "") << "'fig_s_entries.dat' u 1:" << 2 + i << " w l t 'S" << i / d + 1 << i % d + 1
          << "', '' u 1:" << 2 + d * d + i << " w l dt 2 t 'S" << i / d + 1 << i % d + 1 << "hat'";
    }
    g << "\n\n";

    g << "set output 's_error.png'\nset title 'estimation error'\nset logscale y\n"
      << "plot 'fig_s_error.dat' u 1:2 w l t '||S - Shat||_F'\nunset logscale y\n\n";

    g << "set output 'tracking.png'\nset title 'tracking error'\nplot ";
    for (std::size_t i = 0; i < n; ++i) {
        g << (i ? ", " : "") << "'fig_tracking.dat' u 1:" << 2 + 2 * n + i << " w l t 'ex" << i + 1 << "'";
    }
    g << "\n\n";

    g << "set output 'states.png'\nset title 'state and reference'\nplot ";
    for (std::size_t i = 0; i < n; ++i) {
        g << (i ? ", \\\n     " : "") << "'fig_tracking.dat' u 1:" << 2 + i << " w l t 'x" << i + 1 << "', "
          << "'' u 1:" << 2 + n + i << " w l dt 2 t 'xd" << i + 1 << "'";
    }
    g << "\n\n";

    g << "set output 'control.png'\nset title 'control input'\nplot ";
    for (std::size_t i = 0; i < trace.m; ++i) {
        g << (i ? ", " : "") << "'fig_control.dat' u 1:" << 2 + i << " w l t 'u" << i + 1 << "'";
    }
    g << "\n\n";

    g << "set output 'gain.png'\nset title 'switching gain'\nplot 'fig_control.dat' u 1:" << 2 + trace.m
      << " w l t 'k'\n";
    return g.str();
}

}  // namespace

std::string metrics_text(const Metrics& m, const MetricTolerances& tol) {
    std::string out;
    out += tol_tag("tracking_settle", tol.tracking) + " = " + opt_text(m.settle_time) + "\n";
    out += tol_tag("eps_settle", tol.eps_settle) + " = " + opt_text(m.eps_error_settle) + "\n";
    out += "s_error_final = " + opt_text(m.s_error_final) + "\n";
    out += tol_tag("reach_time", tol.sigma_reach) + " = " + opt_text(m.reach_time) + "\n";
    out += "switch_time = " + opt_text(m.switch_time) + "\n";
    return out;
}

std::string comparison_text(const Comparison& c, const std::string& label_a, const std::string& label_b) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-22s %-24s %-24s %-24s\n", "metric", label_a.c_str(), label_b.c_str(),
                  "delta (b - a)");
    os << buf;
    for (const auto& r : c.rows) {
        std::snprintf(buf, sizeof buf, "%-22s %-24s %-24s %-24s\n", r.name.c_str(), opt_text(r.a).c_str(),
                      opt_text(r.b).c_str(), opt_text(r.delta()).c_str());
        os << buf;
    }
    os << "\n";
    std::snprintf(buf, sizeof buf, "%-22s %s\n", "trace quantity", "max |a - b|");
    os << buf;
    for (const auto& d : c.trace_deltas) {
        std::snprintf(buf, sizeof buf, "%-22s %s\n", d.quantity.c_str(), format_double(d.max_abs_delta).c_str());
        os << buf;
    }
    return os.str();
}

std::string comparison_csv(const Comparison& c) {
    std::string out = "metric,a,b,delta\n";
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : c.rows) {
        out += r.name + "," + cell(r.a) + "," + cell(r.b) + "," + cell(r.delta()) + "\n";
    }
    return out;
}

RunOutputs render_run(const ConfigDoc& doc, const SimConfig& cfg, const SimTrace& trace, double wall_seconds) {
    RunOutputs out;
    {
        std::ostringstream os;
        write_csv(os, trace_table(trace));
        out.trace_csv = os.str();
    }
    {
        std::ostringstream os;
        write_csv(os, diagnostics_table(trace));
        out.diagnostics_csv = os.str();
    }
    const MetricTolerances tol;
    const Metrics m = metrics(trace, tol);
    out.metrics = metrics_text(m, tol);

    const ConfigDoc eff = effective_doc(doc, cfg);
    nlohmann::ordered_json j;
    j["version"] = version_string;
    j["scenario"] = trace.scenario;
    j["wall_seconds"] = wall_seconds;
    j["samples"] = trace.samples.size();
    nlohmann::ordered_json conf;
    for (const auto& [section, keys] : eff.sections) {
        for (const auto& [k, v] : keys) {
            conf[section][k] = v;
        }
    }
    j["config"] = conf;
    const auto& pl = cfg.scenario.plant;
    j["resolved"] = {{"phi_star", format_matrix(pl.phi_star)},
                     {"D", format_matrix(pl.dist_map)},
                     {"S", format_matrix(cfg.scenario.exo.s_matrix)},
                     {"x0", format_vec(cfg.scenario.x0)},
                     {"eps_T0", format_vec(cfg.scenario.exo.initial)},
                     {"xi", pl.xi_labels},
                     {"zeta", pl.zeta_labels}};
    j["metrics"] = {{tol_tag("tracking_settle", tol.tracking), opt_json(m.settle_time)},
                    {tol_tag("eps_settle", tol.eps_settle), opt_json(m.eps_error_settle)},
                    {"s_error_final", opt_json(m.s_error_final)},
                    {tol_tag("reach_time", tol.sigma_reach), opt_json(m.reach_time)},
                    {"switch_time", opt_json(m.switch_time)},
                    {"rich_time", opt_json(trace.rich_time)}};
    out.manifest = j.dump(2) + "\n";

    const std::size_t n = trace.n;
    const std::size_t d = trace.d;
    const Mat& s_true = cfg.scenario.exo.s_matrix;
    out.figures.emplace_back(
        "fig_disturbance.dat",
        dat_file(trace, {"t", series_names("epsT", d), series_names("epsThat", d)}, [](const TraceSample& s) {
            std::vector<double> r{s.t};
            append(r, s.eps_T);
            append(r, s.eps_T_hat);
            return r;
        }));
    out.figures.emplace_back("fig_s_entries.dat",
                             dat_file(trace, {"t", "S_row_major", "Shat_row_major"}, [&](const TraceSample& s) {
                                 std::vector<double> r{s.t};
                                 for (std::size_t i = 0; i < d; ++i) {
                                     for (std::size_t k = 0; k < d; ++k) {
                                         r.push_back(s_true(i, k));
                                     }
                                 }
                                 for (std::size_t i = 0; i < d; ++i) {
                                     for (std::size_t k = 0; k < d; ++k) {
                                         r.push_back(s.s_hat(i, k));
                                     }
                                 }
                                 return r;
                             }));
    out.figures.emplace_back("fig_s_error.dat",
                             dat_file(trace, {"t", "Stilde_fro", "lambda_min"}, [](const TraceSample& s) {
                                 return std::vector<double>{s.t, s.s_tilde_fro, s.lambda_min};
                             }));
    out.figures.emplace_back(
        "fig_tracking.dat",
        dat_file(trace, {"t", series_names("x", n), series_names("xd", n), series_names("ex", n)},
                 [](const TraceSample& s) {
                     std::vector<double> r{s.t};
                     append(r, s.x);
                     append(r, s.x_d);
                     append(r, s.e_x);
                     return r;
                 }));
    out.figures.emplace_back(
        "fig_control.dat",
        dat_file(trace, {"t", series_names("u", trace.m), "k", series_names("sigma", n), "phase"},
                 [](const TraceSample& s) {
                     std::vector<double> r{s.t};
                     append(r, s.u);
                     r.push_back(s.k);
                     append(r, s.sigma);
                     r.push_back(s.phase == Phase::Sliding ? 1.0 : 0.0);
                     return r;
                 }));
    out.figures.emplace_back("plots.gp", gnuplot_script(trace));
    return out;
}

void write_run(const std::filesystem::path& dir, const RunOutputs& out) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    write_file_atomic(dir / "trace.csv", out.trace_csv);
    write_file_atomic(dir / "diagnostics.csv", out.diagnostics_csv);
    write_file_atomic(dir / "metrics.txt", out.metrics);
    for (const auto& [name, content] : out.figures) {
        write_file_atomic(dir / name, content);
    }
    // Last, so a present manifest means the run's outputs are complete.
    write_file_atomic(dir / "manifest.json", out.manifest);
}

}  // namespace erdob
