#pragma once

#include <optional>
#include <stdexcept>

#include "erdob/linalg.hpp"
#include "erdob/plant.hpp"

namespace erdob {

using linalg::Mat;
using linalg::Vec;

class ControlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ControllerConfig {
    double k0 = 0.1;
    double k1 = 1.0;
    double hslash = 5.0;
    /// 0 selects the pure sign function; otherwise sgn(s) becomes tanh(s/φ).
    double boundary_layer = 0.0;

    /// Requires k0 > 0, hslash > 0, boundary_layer >= 0 and k1 >= ‖F‖·‖D‖.
    void validate(const Mat& f_mat, const Mat& d_mat) const;
};

enum class Phase { Collecting, Sliding };

struct ControllerState {
    Vec e_I;
    Phase phase = Phase::Collecting;
    std::optional<double> t_switch;

    explicit ControllerState(std::size_t n = 0) : e_I(n, 0.0) {}

    /// Latches the sliding phase once; later calls are no-ops.
    void switch_to_sliding(double t);
};

/// Componentwise sign with sgn(0) = 0, or tanh(s/φ) for φ > 0.
double switching(double s, double boundary_layer);
Vec switching(const Vec& s, double boundary_layer);

Vec tracking_error(const Vec& x, const Vec& x_d);

/// σ = e_x + e_I.
Vec sliding_surface(const ControllerState& cs, const Vec& e_x);

/// k = k₀ + k₁·‖ε̄‖·exp(−λ₁·t_since_switch).
double adaptive_gain(const ControllerConfig& cfg, const Vec& eps_bar, double t_since_switch, double lambda1);

/// g⁺(x) via the left pseudoinverse; throws ControlError when g(x) is rank deficient.
Mat input_pinv(const RegressorPlant& p, const Vec& x);

/// u = g⁺(x)·(−f(x) + ẋ_d − D·ε̂_T − sgn(e_x) − k·sgn(σ)).
Vec itsmc_control(const RegressorPlant& p, const ControllerState& cs, const Vec& x, const Vec& x_d,
                  const Vec& xd_dot, const Vec& eps_T_hat, double k, double boundary_layer = 0.0);

/// u = g⁺(x)·(−f(x) + ẋ_d − D·ε̂_T − ℏ·e_x), used until the stack is rich.
Vec pre_rich_control(const RegressorPlant& p, const Vec& x, const Vec& x_d, const Vec& xd_dot, const Vec& eps_T_hat,
                     double hslash);

}  // namespace erdob
