#include "erdob/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "erdob/filters.hpp"
#include "erdob/observer.hpp"
#include "erdob/replay.hpp"

namespace erdob {

std::string_view to_string(ObserverMode m) {
    switch (m) {
        case ObserverMode::Baseline:
            return "baseline";
        case ObserverMode::Replay:
            return "replay";
        case ObserverMode::OpenLoopEstimation:
            return "open-loop-estimation";
    }
    return "unknown";
}

ObserverMode parse_observer_mode(std::string_view s) {
    if (s == "baseline") {
        return ObserverMode::Baseline;
    }
    if (s == "replay") {
        return ObserverMode::Replay;
    }
    if (s == "open-loop-estimation") {
        return ObserverMode::OpenLoopEstimation;
    }
    throw ConfigError("observer.mode", "expected baseline, replay or open-loop-estimation, got '" + std::string(s) + "'");
}

SimConfig default_config(Scenario scenario) {
    SimConfig cfg;
    cfg.a = scenario.default_a;
    cfg.gamma = scalar_gain(50.0, scenario.plant.d);
    cfg.s_hat0 = Mat(scenario.plant.d, scenario.plant.d);
    cfg.scenario = std::move(scenario);
    return cfg;
}

SimConfig default_config(std::string_view scenario_name) { return default_config(builtin_scenario(scenario_name)); }

namespace {

std::size_t steps_of(double interval, double step, const char* field) {
    const double ratio = interval / step;
    const auto k = static_cast<std::size_t>(std::llround(ratio));
    if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-6) {
        throw ConfigError(field, "must be a positive whole number of integration steps");
    }
    return k;
}

// Offsets of each block inside the composite ODE state.
struct Layout {
    std::size_t n, d, p;
    std::size_t x, eps_T, h, l, rho, eps, eps_hat, rho_hat, s_vec, e_I, z_run, size;

    Layout(std::size_t n_, std::size_t d_, std::size_t p_) : n(n_), d(d_), p(p_) {
        x = 0;
        eps_T = x + n;
        h = eps_T + d;
        l = h + p;
        rho = l + n;
        eps = rho + n;
        eps_hat = eps + d;
        rho_hat = eps_hat + d;
        s_vec = rho_hat + d;
        e_I = s_vec + d * d;
        z_run = e_I + n;
        size = z_run + n;
    }

    static Vec slice(const Vec& y, std::size_t off, std::size_t len) {
        return Vec(y.begin() + static_cast<std::ptrdiff_t>(off), y.begin() + static_cast<std::ptrdiff_t>(off + len));
    }
    static void put(Vec& y, std::size_t off, const Vec& v) { std::copy(v.begin(), v.end(), y.begin() + static_cast<std::ptrdiff_t>(off)); }
};

// Quantities derived from the composite state at one instant.
struct Snapshot {
    Vec x, eps_T, h, l, rho, eps, eps_hat, rho_hat, s_vec, e_I, z_run;
    Vec eps_bar, eps_meas, eps_T_hat, e_tilde;
    ObserverState obs;
};

Snapshot unpack(const Layout& L, const Vec& y, const RegressorPlant& pl, const Mat& f_mat, const Mat& gamma,
                double a) {
    Snapshot s;
    s.x = Layout::slice(y, L.x, L.n);
    s.eps_T = Layout::slice(y, L.eps_T, L.d);
    s.h = Layout::slice(y, L.h, L.p);
    s.l = Layout::slice(y, L.l, L.n);
    s.rho = Layout::slice(y, L.rho, L.n);
    s.eps = Layout::slice(y, L.eps, L.d);
    s.eps_hat = Layout::slice(y, L.eps_hat, L.d);
    s.rho_hat = Layout::slice(y, L.rho_hat, L.d);
    s.s_vec = Layout::slice(y, L.s_vec, L.d * L.d);
    s.e_I = Layout::slice(y, L.e_I, L.n);
    s.z_run = Layout::slice(y, L.z_run, L.n);
    s.eps_bar = measured_eps_bar(s.x, s.h, s.l, s.rho, pl.phi_star, a);
    s.eps_meas = eps_from_eps_bar(s.eps_bar, f_mat);
    s.obs.s_hat = linalg::unvec(s.s_vec, L.d, L.d);
    s.obs.rho_delta_hat = s.rho_hat;
    s.obs.eps_hat = s.eps_hat;
    s.obs.gamma = gamma;
    s.eps_T_hat = estimate_disturbance(s.obs, s.eps_meas, a);
    s.e_tilde = innovation(s.eps_bar, pl.dist_map, s.eps_hat);
    return s;
}

}  // namespace

void validate(const SimConfig& cfg) {
    const auto& pl = cfg.scenario.plant;
    try {
        pl.validate();
    } catch (const PlantError& e) {
        throw ConfigError("scenario", e.what());
    }
    const std::size_t n = pl.n;
    const std::size_t d = pl.d;
    if (cfg.scenario.x0.size() != n) {
        throw ConfigError("scenario.x0", "expected " + std::to_string(n) + " entries");
    }
    if (cfg.scenario.exo.initial.size() != d) {
        throw ConfigError("scenario.eps_T0", "expected " + std::to_string(d) + " entries");
    }
    if (cfg.scenario.exo.s_matrix.rows() != d || cfg.scenario.exo.s_matrix.cols() != d) {
        throw ConfigError("scenario.S", "expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
    }
    if (cfg.scenario.reference.components.size() != n) {
        throw ConfigError("scenario.reference", "expected " + std::to_string(n) + " components");
    }
    if (!(cfg.a > 0.0)) {
        throw ConfigError("filter.a", "must be positive");
    }
    try {
        validate_gain(cfg.gamma, d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("observer.gamma", e.what());
    }
    if (!cfg.s_hat0.empty() && (cfg.s_hat0.rows() != d || cfg.s_hat0.cols() != d)) {
        throw ConfigError("observer.s_hat0", "expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
    }
    if (!(cfg.kappa > 0.0)) {
        throw ConfigError("replay.kappa", "must be positive");
    }
    if (!(cfg.omega > 0.0)) {
        throw ConfigError("replay.omega", "must be positive");
    }
    if (cfg.stack_capacity < 1) {
        throw ConfigError("replay.capacity", "must be at least 1");
    }
    if (!(cfg.step > 0.0)) {
        throw ConfigError("sim.step", "must be positive");
    }
    if (!(cfg.resolved_t0() >= 0.0)) {
        throw ConfigError("replay.t0", "must be non-negative");
    }
    if (!(cfg.delta_t > 0.0)) {
        throw ConfigError("replay.delta_t", "must be positive");
    }
    steps_of(cfg.delta_t, cfg.step, "replay.delta_t");
    steps_of(cfg.record_interval, cfg.step, "replay.record_interval");
    steps_of(cfg.sample_interval, cfg.step, "sim.sample_interval");
    steps_of(cfg.t_end, cfg.step, "sim.t_end");
    if (!(cfg.t_end > cfg.resolved_t0() + cfg.delta_t)) {
        throw ConfigError("sim.t_end", "must exceed t0 + delta_t = " + std::to_string(cfg.resolved_t0() + cfg.delta_t));
    }
    try {
        cfg.controller.validate(linalg::pinv(pl.dist_map), pl.dist_map);
    } catch (const ControlError& e) {
        throw ConfigError("controller", e.what());
    }
}

SimTrace run(const SimConfig& cfg) {
    validate(cfg);
    const RegressorPlant& pl = cfg.scenario.plant;
    const Mat& s_true = cfg.scenario.exo.s_matrix;
    const Reference& ref = cfg.scenario.reference;
    const std::size_t n = pl.n;
    const std::size_t d = pl.d;
    const double a = cfg.a;
    const double bl = cfg.controller.boundary_layer;
    const Mat f_mat = linalg::pinv(pl.dist_map);
    const Layout L(n, d, pl.regressor_len());

    Vec y(L.size, 0.0);
    Layout::put(y, L.x, cfg.scenario.x0);
    Layout::put(y, L.eps_T, cfg.scenario.exo.initial);
    Layout::put(y, L.rho, cfg.scenario.x0);
    Layout::put(y, L.s_vec, linalg::vec_cols(cfg.s_hat0.empty() ? Mat(d, d) : cfg.s_hat0));

    const bool use_stack = cfg.mode != ObserverMode::Baseline;
    const bool two_phase = cfg.mode == ObserverMode::Replay;
    WindowIntegrals window(cfg.resolved_t0(), cfg.delta_t, cfg.step, n, d);
    HistoryStack stack(cfg.stack_capacity, d * d, cfg.omega, cfg.kappa);
    ControllerState cs(n);

    const auto total_steps = static_cast<std::size_t>(std::llround(cfg.t_end / cfg.step));
    const auto sample_every = steps_of(cfg.sample_interval, cfg.step, "sim.sample_interval");
    const auto record_every = steps_of(cfg.record_interval, cfg.step, "replay.record_interval");
    std::size_t active_steps = 0;

    SimTrace trace;
    trace.scenario = cfg.scenario.name;
    trace.n = n;
    trace.m = pl.m;
    trace.d = d;
    trace.samples.reserve(total_steps / sample_every + 2);

    {
        const Snapshot s0 = unpack(L, y, pl, f_mat, cfg.gamma, a);
        window.accumulate_running(0.0, s0.x, s0.eps_bar, s0.z_run, f_mat, pl.dist_map, a);
    }

    // The control law is evaluated at every RK4 stage from that stage's state.
    struct Law {
        Vec u;
        Vec e_I_rate;
        Vec e_x;
        Vec x_d;
        double gain = 0.0;
    };
    double lambda1 = 0.0;
    auto law = [&](double tt, const Snapshot& st) {
        Law out;
        out.x_d = ref.value(tt);
        const Vec xd_dot = ref.rate(tt);
        out.e_x = tracking_error(st.x, out.x_d);
        out.e_I_rate.assign(n, 0.0);
        const bool sliding = cs.phase == Phase::Sliding;
        const double t_since = sliding ? tt - *cs.t_switch : 0.0;
        out.gain = adaptive_gain(cfg.controller, st.eps_bar, t_since, lambda1);
        try {
            if (sliding) {
                ControllerState stage = cs;
                stage.e_I = st.e_I;
                out.u = itsmc_control(pl, stage, st.x, out.x_d, xd_dot, st.eps_T_hat, out.gain, bl);
                out.e_I_rate = switching(out.e_x, bl);
            } else {
                out.u = pre_rich_control(pl, st.x, out.x_d, xd_dot, st.eps_T_hat, cfg.controller.hslash);
            }
        } catch (const ControlError& e) {
            throw SimError(e.what(), tt);
        }
        return out;
    };

    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * cfg.step;
        const Snapshot s = unpack(L, y, pl, f_mat, cfg.gamma, a);
        cs.e_I = s.e_I;
        if (cs.phase == Phase::Sliding) {
            lambda1 = rate_certificate(stack, cfg.gamma, a).lambda1;
        }
        const Law now = law(t, s);
        const Vec& e_x = now.e_x;

        if (k % sample_every == 0 || k == total_steps) {
            TraceSample ts;
            ts.t = t;
            ts.x = s.x;
            ts.x_d = now.x_d;
            ts.e_x = e_x;
            ts.u = now.u;
            ts.eps_T = s.eps_T;
            ts.eps_T_hat = s.eps_T_hat;
            ts.eps_bar = s.eps_bar;
            ts.s_hat = s.obs.s_hat;
            ts.s_tilde_fro = linalg::frobenius(s_true - s.obs.s_hat);
            ts.e_tilde = s.e_tilde;
            ts.sigma = sliding_surface(cs, e_x);
            ts.k = now.gain;
            ts.lambda_min = stack.lambda_min();
            ts.lambda1 = lambda1;
            ts.phase = cs.phase;
            ts.h = s.h;
            ts.l = s.l;
            ts.rho = s.rho;
            ts.eps = s.eps;
            ts.eps_hat = s.eps_hat;
            ts.rho_delta_hat = s.rho_hat;
            ts.z_running = s.z_run;
            trace.samples.push_back(std::move(ts));
        }
        if (k == total_steps) {
            break;
        }

        const bool replay_on = use_stack && stack.richness().rich;
        auto rhs = [&](double tt, const Vec& ys) {
            const Snapshot st = unpack(L, ys, pl, f_mat, cfg.gamma, a);
            const Law stage = law(tt, st);
            Vec dy(L.size, 0.0);
            const Vec z = pl.regressor(st.x, stage.u);
            const Vec phi_z = pl.phi_star * z;
            Layout::put(dy, L.x, linalg::add(phi_z, pl.dist_map * st.eps_T));
            Layout::put(dy, L.z_run, phi_z);
            Layout::put(dy, L.eps_T, s_true * st.eps_T);
            FilterState fs;
            fs.a = a;
            fs.h = st.h;
            fs.l = st.l;
            fs.rho = st.rho;
            const FilterDerivative fd = filter_rhs(fs, st.x, z);
            Layout::put(dy, L.h, fd.h);
            Layout::put(dy, L.l, fd.l);
            Layout::put(dy, L.rho, fd.rho);
            Layout::put(dy, L.eps, filtered_disturbance_rhs(st.eps, st.eps_T, a));
            const ObserverDerivative od = observer_rhs(st.obs, st.eps_T_hat, a);
            Layout::put(dy, L.eps_hat, od.eps_hat);
            Layout::put(dy, L.rho_hat, od.rho_delta_hat);
            Layout::put(dy, L.s_vec,
                        replay_on ? er_update(st.obs, stack, st.e_tilde, st.eps_bar, f_mat, pl.dist_map)
                                  : baseline_update(st.obs, st.e_tilde, st.eps_bar, f_mat, pl.dist_map));
            Layout::put(dy, L.e_I, stage.e_I_rate);
            return dy;
        };

        try {
            y = linalg::rk4_step(rhs, t, y, cfg.step);
        } catch (const SimError&) {
            throw;
        } catch (const std::exception& e) {
            throw SimError(std::string("integration aborted: ") + e.what(), t);
        }
        if (!linalg::all_finite(y)) {
            throw SimError("integration produced a non-finite state", t);
        }

        const double t_next = static_cast<double>(k + 1) * cfg.step;
        const Snapshot sn = unpack(L, y, pl, f_mat, cfg.gamma, a);
        window.accumulate_running(t_next, sn.x, sn.eps_bar, sn.z_run, f_mat, pl.dist_map, a);
        if (use_stack && window.active()) {
            ++active_steps;
            if (active_steps % record_every == 0) {
                stack.try_record(make_record(window));
            }
        }
        if (two_phase && cs.phase == Phase::Collecting && stack.richness().rich) {
            cs.switch_to_sliding(t_next);
        }
    }

    trace.switch_time = cs.t_switch;
    trace.rich_time = stack.rich_since();
    return trace;
}

std::optional<double> settle_time(const std::vector<double>& times, const std::vector<double>& values, double tol) {
    if (times.empty() || times.size() != values.size()) {
        return std::nullopt;
    }
    for (std::size_t i = values.size(); i-- > 0;) {
        if (!(std::abs(values[i]) < tol)) {
            if (i + 1 == values.size()) {
                return std::nullopt;
            }
            return times[i + 1];
        }
    }
    return times.front();
}

Metrics metrics(const SimTrace& trace, const MetricTolerances& tol) {
    Metrics m;
    if (trace.samples.empty()) {
        return m;
    }
    std::vector<double> times;
    std::vector<double> ex;
    std::vector<double> eps_err;
    for (const auto& s : trace.samples) {
        times.push_back(s.t);
        ex.push_back(linalg::norm_inf(s.e_x));
        eps_err.push_back(linalg::norm(linalg::sub(s.eps_T, s.eps_T_hat)));
    }
    m.settle_time = settle_time(times, ex, tol.tracking);
    m.eps_error_settle = settle_time(times, eps_err, tol.eps_settle);
    m.s_error_final = trace.samples.back().s_tilde_fro;
    m.switch_time = trace.switch_time;
    if (trace.switch_time) {
        for (const auto& s : trace.samples) {
            if (s.t >= *trace.switch_time && linalg::norm(s.sigma) < tol.sigma_reach) {
                m.reach_time = s.t;
                break;
            }
        }
    }
    return m;
}

std::optional<double> ComparisonRow::delta() const {
    if (a && b) {
        return *b - *a;
    }
    return std::nullopt;
}

namespace {

std::string tagged(const char* stem, double tol) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%g", stem, tol);
    return buf;
}

}  // namespace

Comparison compare_traces(const SimTrace& a, const SimTrace& b, const MetricTolerances& tol) {
    if (a.scenario != b.scenario) {
        throw ConfigError("scenario.name", "cannot compare runs of different scenarios ('" + a.scenario + "' vs '" +
                                               b.scenario + "')");
    }
    const Metrics ma = metrics(a, tol);
    const Metrics mb = metrics(b, tol);
    Comparison c;
    c.rows = {{tagged("eps_settle", tol.eps_settle), ma.eps_error_settle, mb.eps_error_settle},
              {"s_error_final", ma.s_error_final, mb.s_error_final},
              {tagged("tracking_settle", tol.tracking), ma.settle_time, mb.settle_time},
              {tagged("reach_time", tol.sigma_reach), ma.reach_time, mb.reach_time},
              {"switch_time", ma.switch_time, mb.switch_time}};

    const std::size_t len = std::min(a.samples.size(), b.samples.size());
    TraceDelta eps{"eps_T_error_norm", 0.0};
    TraceDelta s_err{"s_tilde_fro", 0.0};
    TraceDelta track{"e_x_norm", 0.0};
    TraceDelta ctrl{"u_norm", 0.0};
    TraceDelta gain{"k", 0.0};
    for (std::size_t i = 0; i < len; ++i) {
        const auto& sa = a.samples[i];
        const auto& sb = b.samples[i];
        auto bump = [](TraceDelta& td, double va, double vb) { td.max_abs_delta = std::max(td.max_abs_delta, std::abs(va - vb)); };
        bump(eps, linalg::norm(linalg::sub(sa.eps_T, sa.eps_T_hat)), linalg::norm(linalg::sub(sb.eps_T, sb.eps_T_hat)));
        bump(s_err, sa.s_tilde_fro, sb.s_tilde_fro);
        bump(track, linalg::norm(sa.e_x), linalg::norm(sb.e_x));
        bump(ctrl, linalg::norm(sa.u), linalg::norm(sb.u));
        bump(gain, sa.k, sb.k);
    }
    c.trace_deltas = {eps, s_err, track, ctrl, gain};
    return c;
}

Comparison compare(const SimConfig& a, const SimConfig& b, const MetricTolerances& tol) {
    if (a.scenario.name != b.scenario.name) {
        throw ConfigError("scenario.name", "cannot compare runs of different scenarios ('" + a.scenario.name +
                                               "' vs '" + b.scenario.name + "')");
    }
    validate(a);
    validate(b);
    return compare_traces(run(a), run(b), tol);
}

}  // namespace erdob
