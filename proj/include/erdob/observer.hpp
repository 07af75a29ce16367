#pragma once

#include "erdob/linalg.hpp"

namespace erdob {

using linalg::Mat;
using linalg::Vec;

/**
 * @brief Adaptive disturbance observer state.
 *
 * Ŝ is vectorized column-major (see linalg::vec_cols) wherever it appears
 * in an update law; Γ acts on that vector.
 */
struct ObserverState {
    Mat s_hat;
    Vec rho_delta_hat;
    Vec eps_hat;
    Mat gamma;
};

/// Γ = γ·I on the d²-dimensional parameter vector.
Mat scalar_gain(double gamma, std::size_t d);

/// Throws std::invalid_argument unless gamma is symmetric positive definite.
void validate_gain(const Mat& gamma, std::size_t d);

/// Ŝ(0) = s_hat0 (zero when empty), ρ̂_Δ(0) = 0, ε̂(0) = 0.
ObserverState init_observer(std::size_t d, Mat gamma, Mat s_hat0 = {});

/// ε̂_T = (Ŝ + a·I)·ε + ρ̂_Δ.
Vec estimate_disturbance(const ObserverState& os, const Vec& eps, double a);

struct ObserverDerivative {
    Vec eps_hat;
    Vec rho_delta_hat;
};

/// ε̂̇ = −a·ε̂ + ε̂_T, ρ̂̇_Δ = −a·ρ̂_Δ.
ObserverDerivative observer_rhs(const ObserverState& os, const Vec& eps_T_hat, double a);

/// ẽ = ε̄ − D·ε̂, which equals x − x̂.
Vec innovation(const Vec& eps_bar, const Mat& d_mat, const Vec& eps_hat);

/// kron((F·ε̄)ᵀ, D), the n×d² map from vec(S) to D·S·F·ε̄.
Mat disturbance_regressor(const Vec& eps_bar, const Mat& f_mat, const Mat& d_mat);

/// Gradient law: d/dt vec(Ŝ) = Γ·kron((F·ε̄)ᵀ, D)ᵀ·ẽ.
Vec baseline_update(const ObserverState& os, const Vec& e_tilde, const Vec& eps_bar, const Mat& f_mat,
                    const Mat& d_mat);

/// V = ẽᵀẽ + vec(S̃)ᵀ·Γ⁻¹·vec(S̃).
double lyapunov_value(const Vec& e_tilde, const Mat& s_tilde, const Mat& gamma);

}  // namespace erdob
