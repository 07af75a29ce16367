#include "erdob/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "erdob/observer.hpp"

namespace erdob {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"scenario",
         {"name", "beta", "masses", "springs", "x0", "x0_spread", "eps_T0", "m", "xi", "zeta", "phi_star", "D", "S",
          "reference"}},
        {"filter", {"a"}},
        {"observer", {"mode", "gamma", "s_hat0"}},
        {"replay", {"kappa", "delta_t", "omega", "capacity", "t0", "record_interval"}},
        {"controller", {"k0", "k1", "hslash", "boundary_layer"}},
        {"sim", {"t_end", "step", "sample_interval", "seed"}},
    };
    return keys;
}

const std::set<std::string> custom_only = {"m", "xi", "zeta", "phi_star", "D", "S", "reference"};

void check_key(const std::string& section, const std::string& key) {
    const auto& keys = known_keys();
    const auto it = keys.find(section);
    if (it == keys.end()) {
        throw ConfigError(section, "unknown section [" + section + "]");
    }
    if (!it->second.contains(key)) {
        throw ConfigError(section + "." + key, "unknown key");
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

class Reader {
public:
    Reader(const ConfigDoc& doc) : doc_(doc) {}

    const std::string* raw(const std::string& section, const std::string& key) const {
        const auto s = doc_.sections.find(section);
        if (s == doc_.sections.end()) {
            return nullptr;
        }
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    void number(const std::string& section, const std::string& key, double& out) const {
        if (const auto* r = raw(section, key)) {
            out = parse_double(*r, section + "." + key);
        }
    }

    void count(const std::string& section, const std::string& key, std::size_t& out) const {
        if (const auto* r = raw(section, key)) {
            const std::string field = section + "." + key;
            const double v = parse_double(*r, field);
            if (v < 0 || v != static_cast<double>(static_cast<std::uint64_t>(v))) {
                throw ConfigError(field, "expected a non-negative integer, got '" + *r + "'");
            }
            out = static_cast<std::size_t>(v);
        }
    }

private:
    const ConfigDoc& doc_;
};

std::vector<BasisAtom> parse_atoms(std::string_view text, std::size_t n, const std::string& field) {
    std::vector<BasisAtom> atoms;
    for (auto part : split(text, ';')) {
        if (part.empty()) {
            throw ConfigError(field, "empty basis entry");
        }
        try {
            atoms.push_back(BasisAtom::parse(part, n));
        } catch (const PlantError& e) {
            throw ConfigError(field, e.what());
        }
    }
    return atoms;
}

std::vector<std::string> labels_of(const std::vector<BasisAtom>& atoms) {
    std::vector<std::string> out;
    for (const auto& a : atoms) {
        out.push_back(a.to_string());
    }
    return out;
}

Scenario custom_scenario(const Reader& r) {
    auto need = [&](const std::string& key) -> const std::string& {
        const auto* v = r.raw("scenario", key);
        if (!v) {
            throw ConfigError("scenario." + key, "required for a custom scenario");
        }
        return *v;
    };
    Scenario sc;
    sc.name = "custom";
    RegressorPlant& p = sc.plant;
    p.phi_star = parse_matrix(need("phi_star"), "scenario.phi_star");
    p.n = p.phi_star.rows();
    std::size_t m = 0;
    r.count("scenario", "m", m);
    if (m == 0) {
        throw ConfigError("scenario.m", "required for a custom scenario and must be positive");
    }
    p.m = m;
    const auto xi = parse_atoms(need("xi"), p.n, "scenario.xi");
    const auto zeta = parse_atoms(need("zeta"), p.n, "scenario.zeta");
    p.p_theta = xi.size();
    p.p_psi = zeta.size();
    p.xi_labels = labels_of(xi);
    p.zeta_labels = labels_of(zeta);
    p.xi = make_basis(xi);
    p.zeta = make_basis(zeta);
    p.dist_map = parse_matrix(need("D"), "scenario.D");
    p.d = p.dist_map.cols();
    sc.exo.s_matrix = parse_matrix(need("S"), "scenario.S");

    const Mat ref = parse_matrix(need("reference"), "scenario.reference");
    if (ref.cols() != 4) {
        throw ConfigError("scenario.reference", "each row must be 'amplitude, frequency, phase, offset'");
    }
    for (std::size_t i = 0; i < ref.rows(); ++i) {
        sc.reference.components.push_back({ref(i, 0), ref(i, 1), ref(i, 2), ref(i, 3)});
    }
    sc.x0 = Vec(p.n, 0.0);
    sc.exo.initial = Vec(p.d, 0.0);
    if (p.d > 0) {
        sc.exo.initial[0] = 1.0;
    }
    sc.default_a = 2.0;
    return sc;
}

Scenario scenario_from(const Reader& r) {
    std::string name = "example1";
    if (const auto* v = r.raw("scenario", "name")) {
        name = *v;
    }
    for (const auto& key : custom_only) {
        if (name != "custom" && r.raw("scenario", key)) {
            throw ConfigError("scenario." + key, "only valid with name = custom");
        }
    }
    if (name != "example2" && (r.raw("scenario", "masses") || r.raw("scenario", "springs"))) {
        throw ConfigError("scenario", "masses and springs are only valid with name = example2");
    }
    if (name == "custom" && r.raw("scenario", "beta")) {
        throw ConfigError("scenario.beta", "not valid with name = custom; give S directly");
    }

    Scenario sc;
    if (name == "example1") {
        Example1Params p;
        r.number("scenario", "beta", p.beta);
        sc = example1(p);
    } else if (name == "example2") {
        Example2Params p;
        r.number("scenario", "beta", p.beta);
        if (const auto* v = r.raw("scenario", "masses")) {
            const Vec mv = parse_vec(*v, "scenario.masses");
            if (mv.size() != 2) {
                throw ConfigError("scenario.masses", "expected 'm1, m2'");
            }
            p.mass1 = mv[0];
            p.mass2 = mv[1];
        }
        if (const auto* v = r.raw("scenario", "springs")) {
            const Vec kv = parse_vec(*v, "scenario.springs");
            if (kv.size() != 2) {
                throw ConfigError("scenario.springs", "expected 'k1, k2'");
            }
            p.spring1 = kv[0];
            p.spring2 = kv[1];
        }
        if (!(p.mass1 > 0.0) || !(p.mass2 > 0.0)) {
            throw ConfigError("scenario.masses", "masses must be positive");
        }
        sc = example2(p);
    } else if (name == "custom") {
        sc = custom_scenario(r);
    } else {
        throw ConfigError("scenario.name", "expected example1, example2 or custom, got '" + name + "'");
    }

    if (const auto* v = r.raw("scenario", "x0")) {
        sc.x0 = parse_vec(*v, "scenario.x0");
    }
    if (const auto* v = r.raw("scenario", "eps_T0")) {
        sc.exo.initial = parse_vec(*v, "scenario.eps_T0");
    }
    sc.exo.state = sc.exo.initial;
    return sc;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_vec(const Vec& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + format_double(v[i]);
    }
    return out;
}

std::string format_matrix(const Mat& m) {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (i) {
            out += "; ";
        }
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out += (j ? ", " : "") + format_double(m(i, j));
        }
    }
    return out;
}

double parse_double(std::string_view text, const std::string& field) {
    const auto t = trim(text);
    double v = 0.0;
    const auto* first = t.data();
    const auto* last = t.data() + t.size();
    if (!t.empty() && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != last) {
        throw ConfigError(field, "expected a number, got '" + std::string(t) + "'");
    }
    return v;
}

Vec parse_vec(std::string_view text, const std::string& field) {
    Vec out;
    for (auto part : split(text, ',')) {
        out.push_back(parse_double(part, field));
    }
    return out;
}

Mat parse_matrix(std::string_view text, const std::string& field) {
    std::vector<Vec> rows;
    for (auto row : split(text, ';')) {
        rows.push_back(parse_vec(row, field));
    }
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows) {
        if (r.size() != cols) {
            throw ConfigError(field, "matrix rows have different lengths");
        }
    }
    Mat m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(i, j) = rows[i][j];
        }
    }
    return m;
}

void ConfigDoc::set(std::string_view dotted_key, std::string value) {
    const auto dot = dotted_key.find('.');
    if (dot == std::string_view::npos) {
        throw ConfigError(std::string(dotted_key), "expected section.key");
    }
    const std::string section(dotted_key.substr(0, dot));
    const std::string key(dotted_key.substr(dot + 1));
    check_key(section, key);
    sections[section][key] = std::move(value);
}

ConfigDoc parse_config_text(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()), e.message());
    }
    ConfigDoc doc;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw ConfigError(section, "key outside of any section");
        }
        for (const auto& [key, value] : body) {
            check_key(section, key);
            doc.sections[section][key] = std::string(trim(value.data()));
        }
    }
    return doc;
}

ConfigDoc load_config_doc(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string(), "cannot read config file");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

SimConfig build_config(const ConfigDoc& doc, bool check) {
    const Reader r(doc);
    SimConfig cfg = default_config(scenario_from(r));

    std::size_t seed = 0;
    r.count("sim", "seed", seed);
    cfg.seed = seed;
    if (const auto* v = r.raw("scenario", "x0_spread")) {
        const double spread = parse_double(*v, "scenario.x0_spread");
        if (!(spread >= 0.0)) {
            throw ConfigError("scenario.x0_spread", "must be non-negative");
        }
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> dist(-spread, spread);
        for (double& xi : cfg.scenario.x0) {
            xi += dist(rng);
        }
    }

    r.number("filter", "a", cfg.a);
    if (const auto* v = r.raw("observer", "mode")) {
        cfg.mode = parse_observer_mode(*v);
    }
    const std::size_t d = cfg.scenario.plant.d;
    if (const auto* v = r.raw("observer", "gamma")) {
        if (v->find(';') == std::string::npos && v->find(',') == std::string::npos) {
            cfg.gamma = scalar_gain(parse_double(*v, "observer.gamma"), d);
        } else {
            cfg.gamma = parse_matrix(*v, "observer.gamma");
        }
    }
    if (const auto* v = r.raw("observer", "s_hat0")) {
        cfg.s_hat0 = parse_matrix(*v, "observer.s_hat0");
    }

    r.number("replay", "kappa", cfg.kappa);
    r.number("replay", "delta_t", cfg.delta_t);
    r.number("replay", "omega", cfg.omega);
    r.count("replay", "capacity", cfg.stack_capacity);
    if (const auto* v = r.raw("replay", "t0")) {
        cfg.t0 = parse_double(*v, "replay.t0");
    }
    r.number("replay", "record_interval", cfg.record_interval);

    r.number("controller", "k0", cfg.controller.k0);
    r.number("controller", "k1", cfg.controller.k1);
    r.number("controller", "hslash", cfg.controller.hslash);
    r.number("controller", "boundary_layer", cfg.controller.boundary_layer);

    r.number("sim", "t_end", cfg.t_end);
    r.number("sim", "step", cfg.step);
    r.number("sim", "sample_interval", cfg.sample_interval);

    if (check) {
        validate(cfg);
    }
    return cfg;
}

std::vector<CheckResult> check_config(const SimConfig& cfg) {
    using Level = CheckResult::Level;
    std::vector<CheckResult> out;
    const auto& pl = cfg.scenario.plant;

    bool plant_ok = true;
    try {
        pl.validate();
        out.push_back({"plant structure", Level::Pass, "n=" + std::to_string(pl.n) + " m=" + std::to_string(pl.m) +
                                                           " d=" + std::to_string(pl.d) + ", f(0) = 0"});
    } catch (const PlantError& e) {
        plant_ok = false;
        out.push_back({"plant structure", Level::Fail, e.what()});
    }

    Mat f_mat;
    try {
        f_mat = linalg::pinv(pl.dist_map);
        const Mat fd = f_mat * pl.dist_map - Mat::identity(pl.d);
        double resid = 0.0;
        for (std::size_t i = 0; i < fd.rows(); ++i) {
            for (std::size_t j = 0; j < fd.cols(); ++j) {
                resid = std::max(resid, std::abs(fd(i, j)));
            }
        }
        out.push_back({"disturbance map rank", resid < 1e-12 ? Level::Pass : Level::Fail,
                       "D has full column rank; max |F*D - I| = " + format_double(resid)});
    } catch (const linalg::LinalgError& e) {
        plant_ok = false;
        out.push_back({"disturbance map rank", Level::Fail,
                       std::string("D needs independent columns for its left pseudoinverse F: ") + e.what()});
    }

    if (plant_ok) {
        try {
            cfg.controller.validate(f_mat, pl.dist_map);
            out.push_back({"controller gains", Level::Pass,
                           "k1 = " + format_double(cfg.controller.k1) + " >= ||F||*||D|| = " +
                               format_double(linalg::spectral_norm(f_mat) * linalg::spectral_norm(pl.dist_map))});
        } catch (const ControlError& e) {
            out.push_back({"controller gains", Level::Fail, e.what()});
        }
    }

    const Mat& s = cfg.scenario.exo.s_matrix;
    if (s.rows() == pl.d && s.cols() == pl.d) {
        const SpectrumReport sr = exosystem_spectrum(s);
        std::string eig;
        for (const auto& z : sr.eigenvalues) {
            eig += (eig.empty() ? "" : ", ") + format_double(z.real()) + (z.imag() < 0 ? " - " : " + ") +
                   format_double(std::abs(z.imag())) + "i";
        }
        if (sr.on_imaginary_axis) {
            out.push_back({"exosystem spectrum", Level::Pass, "eigenvalues on the imaginary axis: " + eig});
        } else {
            out.push_back({"exosystem spectrum", Level::Warn,
                           "eigenvalues off the imaginary axis (" + eig +
                               "); the disturbance is transient or growing rather than persistent"});
        }
    } else {
        out.push_back({"exosystem spectrum", Level::Fail, "S must be " + std::to_string(pl.d) + "x" +
                                                               std::to_string(pl.d)});
    }

    try {
        validate_gain(cfg.gamma, pl.d);
        out.push_back({"observer gain", Level::Pass, "Gamma is symmetric positive definite"});
    } catch (const std::exception& e) {
        out.push_back({"observer gain", Level::Fail, e.what()});
    }

    try {
        validate(cfg);
        out.push_back({"configuration", Level::Pass, "all fields consistent"});
    } catch (const ConfigError& e) {
        out.push_back({"configuration", Level::Fail, e.what()});
    }
    return out;
}

SimConfig load_config(const std::filesystem::path& path) { return build_config(load_config_doc(path)); }

ConfigDoc effective_doc(const ConfigDoc& doc, const SimConfig& cfg) {
    ConfigDoc out = doc;
    auto& sc = out.sections["scenario"];
    sc.try_emplace("name", cfg.scenario.name);
    if (!sc.contains("x0_spread")) {
        sc["x0"] = format_vec(cfg.scenario.x0);
    }
    sc["eps_T0"] = format_vec(cfg.scenario.exo.initial);

    auto& f = out.sections["filter"];
    f["a"] = format_double(cfg.a);

    auto& o = out.sections["observer"];
    o["mode"] = std::string(to_string(cfg.mode));
    o["gamma"] = format_matrix(cfg.gamma);
    o["s_hat0"] = format_matrix(cfg.s_hat0);

    auto& rp = out.sections["replay"];
    rp["kappa"] = format_double(cfg.kappa);
    rp["delta_t"] = format_double(cfg.delta_t);
    rp["omega"] = format_double(cfg.omega);
    rp["capacity"] = std::to_string(cfg.stack_capacity);
    rp["t0"] = format_double(cfg.resolved_t0());
    rp["record_interval"] = format_double(cfg.record_interval);

    auto& c = out.sections["controller"];
    c["k0"] = format_double(cfg.controller.k0);
    c["k1"] = format_double(cfg.controller.k1);
    c["hslash"] = format_double(cfg.controller.hslash);
    c["boundary_layer"] = format_double(cfg.controller.boundary_layer);

    auto& s = out.sections["sim"];
    s["t_end"] = format_double(cfg.t_end);
    s["step"] = format_double(cfg.step);
    s["sample_interval"] = format_double(cfg.sample_interval);
    s["seed"] = std::to_string(cfg.seed);
    return out;
}

std::string to_ini(const ConfigDoc& doc) {
    static const std::vector<std::string> order = {"scenario", "filter", "observer", "replay", "controller", "sim"};
    std::string out;
    for (const auto& section : order) {
        const auto it = doc.sections.find(section);
        if (it == doc.sections.end()) {
            continue;
        }
        out += "[" + section + "]\n";
        for (const auto& [k, v] : it->second) {
            out += k + " = " + v + "\n";
        }
        out += "\n";
    }
    return out;
}

}  // namespace erdob
