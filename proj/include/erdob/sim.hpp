#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "erdob/controller.hpp"
#include "erdob/linalg.hpp"
#include "erdob/plant.hpp"

namespace erdob {

using linalg::Mat;
using linalg::Vec;

enum class ObserverMode { Baseline, Replay, OpenLoopEstimation };

std::string_view to_string(ObserverMode m);
ObserverMode parse_observer_mode(std::string_view s);

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Raised when the closed loop produces a non-finite state or a rank failure.
class SimError : public std::runtime_error {
public:
    SimError(const std::string& what, double last_valid_time)
        : std::runtime_error(what), last_valid_time_(last_valid_time) {}
    double last_valid_time() const { return last_valid_time_; }

private:
    double last_valid_time_;
};

struct SimConfig {
    Scenario scenario;
    double a = 2.0;
    Mat gamma;
    Mat s_hat0;
    double kappa = 1.0;
    double delta_t = 0.5;
    double omega = 1e-3;
    std::size_t stack_capacity = 20;
    /// Start of data collection; defaults to 14/a so that e^{-a·t0} < 1e-6.
    std::optional<double> t0;
    double record_interval = 0.1;
    ControllerConfig controller;
    ObserverMode mode = ObserverMode::Replay;
    double t_end = 30.0;
    double step = 1e-3;
    double sample_interval = 0.01;
    std::uint64_t seed = 0;

    double resolved_t0() const { return t0 ? *t0 : 14.0 / a; }
};

/// Defaults for a built-in scenario: a from the scenario, Γ = 50·I, Ŝ(0) = 0.
SimConfig default_config(std::string_view scenario_name);
SimConfig default_config(Scenario scenario);

/// Throws ConfigError naming the offending field.
void validate(const SimConfig& cfg);

struct TraceSample {
    double t = 0.0;
    Vec x;
    Vec x_d;
    Vec e_x;
    Vec u;
    Vec eps_T;
    Vec eps_T_hat;
    Vec eps_bar;
    Mat s_hat;
    double s_tilde_fro = 0.0;
    Vec e_tilde;
    Vec sigma;
    double k = 0.0;
    double lambda_min = 0.0;
    double lambda1 = 0.0;
    Phase phase = Phase::Collecting;
    // Filter internals and ground truth, used for identity checks.
    Vec h;
    Vec l;
    Vec rho;
    Vec eps;
    Vec eps_hat;
    Vec rho_delta_hat;
    /// ∫₀ᵗ φ*·z dτ, integrated with the state; window 𝒵 is built from it.
    Vec z_running;
};

struct SimTrace {
    std::string scenario;
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t d = 0;
    std::vector<TraceSample> samples;
    std::optional<double> switch_time;
    std::optional<double> rich_time;
};

SimTrace run(const SimConfig& cfg);

struct MetricTolerances {
    double eps_settle = 0.1;
    double tracking = 0.02;
    double sigma_reach = 1e-2;
};

struct Metrics {
    std::optional<double> settle_time;        // max_i |e_x,i| < tracking from here on
    std::optional<double> s_error_final;      // ‖S̃‖_F at the last sample
    std::optional<double> eps_error_settle;   // ‖ε̃_T‖ < eps_settle from here on
    std::optional<double> reach_time;         // first ‖σ‖ < sigma_reach after the switch
    std::optional<double> switch_time;
};

/// First time after which |values| stays strictly below tol through the end.
std::optional<double> settle_time(const std::vector<double>& times, const std::vector<double>& values, double tol);

Metrics metrics(const SimTrace& trace, const MetricTolerances& tol = {});

struct ComparisonRow {
    std::string name;
    std::optional<double> a;
    std::optional<double> b;
    std::optional<double> delta() const;
};

struct TraceDelta {
    std::string quantity;
    double max_abs_delta = 0.0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    std::vector<TraceDelta> trace_deltas;
};

Comparison compare_traces(const SimTrace& a, const SimTrace& b, const MetricTolerances& tol = {});

/// Runs both configurations; throws ConfigError when the scenarios differ.
Comparison compare(const SimConfig& a, const SimConfig& b, const MetricTolerances& tol = {});

}  // namespace erdob
