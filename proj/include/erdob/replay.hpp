#pragma once

#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "erdob/linalg.hpp"
#include "erdob/observer.hpp"

namespace erdob {

using linalg::Mat;
using linalg::Vec;

/**
 * @brief Trailing-window integrals over [t − Δt, t] used by experience replay.
 *
 *   Y(t) = ∫ kron((F·ε̄)ᵀ, D) dτ      (n × d²)
 *   Ȳ(t) = a·∫ ε̄ dτ
 *   𝒵(t) = ∫ φ*·z dτ
 *
 * Integration starts at t₀ and all three read as zero until t > t₀ + Δt.
 * Y and Ȳ get one trapezoid per step. 𝒵 is either trapezoidal or, when the
 * caller integrates φ*·z alongside the state, the difference of that running
 * integral. Window values are differences of cumulative sums held in a ring
 * that spans exactly the window.
 */
class WindowIntegrals {
public:
    WindowIntegrals(double t0, double delta_t, double step, std::size_t n, std::size_t d);

    /**
     * Feed the sample at grid time t. `phi_z_begin` / `phi_z_end` are φ*·z at
     * the start and end of the step that just finished, evaluated with the
     * input held over that step. Samples before t₀ are ignored.
     */
    void accumulate(double t, const Vec& x, const Vec& eps_bar, const Vec& phi_z_begin, const Vec& phi_z_end,
                    const Mat& f_mat, const Mat& d_mat, double a);

    /// Same, with `z_running` = ∫₀ᵗ φ*·z dτ supplied by the caller's integrator.
    void accumulate_running(double t, const Vec& x, const Vec& eps_bar, const Vec& z_running, const Mat& f_mat,
                            const Mat& d_mat, double a);

    /// Convenience overload for a smooth integrand: φ*·z sampled once per grid point.
    void accumulate(double t, const Vec& x, const Vec& eps_bar, const Vec& phi_z, const Mat& f_mat,
                    const Mat& d_mat, double a);

    bool active() const;
    double time() const { return last_t_; }
    double delta_t() const { return delta_t_; }
    std::size_t window_steps() const { return window_steps_; }

    Mat y() const;
    Vec y_bar() const;
    Vec z_int() const;
    /// x(t) − x(t − Δt).
    Vec x_increment() const;

private:
    struct Snapshot {
        double t;
        Vec x;
        Mat cum_y;
        Vec cum_y_bar;
        Vec cum_z;
    };

    void push(double t, const Vec& x, const Vec& eps_bar, const Vec& z_step, const Mat& f_mat, const Mat& d_mat,
              double a);

    double t0_;
    double delta_t_;
    double step_;
    std::size_t window_steps_;
    std::size_t n_;
    std::size_t d_;
    double last_t_ = 0.0;
    std::size_t samples_ = 0;
    Mat prev_y_integrand_;
    Vec prev_eps_bar_;
    Vec prev_phi_z_;
    Vec prev_z_running_;
    std::deque<Snapshot> ring_;
};

/// One stored window: Yᵢ and the measured target x(tᵢ) − x(tᵢ−Δt) − 𝒵ᵢ − Ȳᵢ.
struct ReplayRecord {
    double t = 0.0;
    Mat y;
    Vec target;
};

ReplayRecord make_record(const WindowIntegrals& w);

/// target − Y·s_vec; with the true vec(S) only the ρ_Δ leakage remains.
Vec integrated_identity_residual(const ReplayRecord& r, const Vec& s_vec);

struct Richness {
    double lambda_min = 0.0;
    bool rich = false;
};

class NotRichError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Bounded history stack with λ_min-maximizing replacement.
 *
 * While below capacity every candidate is appended. At capacity the
 * candidate replaces whichever record yields the largest λ_min(ΣYᵢᵀYᵢ), and
 * only if that beats the current value. λ_min is therefore non-decreasing.
 */
class HistoryStack {
public:
    HistoryStack(std::size_t capacity, std::size_t param_dim, double omega, double kappa);

    /// Returns true if the stack changed.
    bool try_record(ReplayRecord candidate);

    const std::vector<ReplayRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Mat& gram() const { return gram_; }
    double lambda_min() const { return lambda_min_; }
    double omega() const { return omega_; }
    double kappa() const { return kappa_; }

    Richness richness() const { return {lambda_min_, lambda_min_ > omega_}; }
    /// Time of the first insertion that made the stack rich.
    std::optional<double> rich_since() const { return rich_since_; }

    /// Σ Yᵢᵀ·(targetᵢ − Yᵢ·s_vec).
    Vec replay_term(const Vec& s_vec) const;

private:
    Mat gram_of(const std::vector<const ReplayRecord*>& recs) const;
    void refresh(double t);

    std::size_t capacity_;
    std::size_t param_dim_;
    double omega_;
    double kappa_;
    std::vector<ReplayRecord> records_;
    Mat gram_;
    double lambda_min_ = 0.0;
    std::optional<double> rich_since_;
};

/// Baseline gradient law plus κ·Γ·Σ Yᵢᵀ(targetᵢ − Yᵢ·vec(Ŝ)).
Vec er_update(const ObserverState& os, const HistoryStack& stack, const Vec& e_tilde, const Vec& eps_bar,
              const Mat& f_mat, const Mat& d_mat);

struct RateCertificate {
    double lambda1 = 0.0;
    double varpi1 = 0.0;
    double varpi2 = 0.0;
};

/// λ₁ = (2/ϖ₁)·min{a, κ·λ_min}; throws NotRichError before richness.
RateCertificate rate_certificate(const HistoryStack& stack, const Mat& gamma, double a);

}  // namespace erdob
