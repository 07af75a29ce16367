#include "erdob/controller.hpp"

#include <cmath>
#include <sstream>

namespace erdob {

void ControllerConfig::validate(const Mat& f_mat, const Mat& d_mat) const {
    if (!(k0 > 0.0)) {
        throw ControlError("controller.k0 must be positive");
    }
    if (!(hslash > 0.0)) {
        throw ControlError("controller.hslash must be positive");
    }
    if (!(boundary_layer >= 0.0)) {
        throw ControlError("controller.boundary_layer must be non-negative");
    }
    const double bound = linalg::spectral_norm(f_mat) * linalg::spectral_norm(d_mat);
    if (!(k1 >= bound * (1.0 - 1e-12))) {
        std::ostringstream os;
        os.precision(17);
        os << "controller.k1 = " << k1 << " violates the gain condition k1 >= ||F||*||D|| = " << bound;
        throw ControlError(os.str());
    }
}

void ControllerState::switch_to_sliding(double t) {
    if (phase == Phase::Sliding) {
        return;
    }
    phase = Phase::Sliding;
    t_switch = t;
}

double switching(double s, double boundary_layer) {
    if (boundary_layer > 0.0) {
        return std::tanh(s / boundary_layer);
    }
    return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
}

Vec switching(const Vec& s, double boundary_layer) {
    Vec out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = switching(s[i], boundary_layer);
    }
    return out;
}

Vec tracking_error(const Vec& x, const Vec& x_d) { return linalg::sub(x, x_d); }

Vec sliding_surface(const ControllerState& cs, const Vec& e_x) { return linalg::add(e_x, cs.e_I); }

double adaptive_gain(const ControllerConfig& cfg, const Vec& eps_bar, double t_since_switch, double lambda1) {
    return cfg.k0 + cfg.k1 * linalg::norm(eps_bar) * std::exp(-lambda1 * t_since_switch);
}

Mat input_pinv(const RegressorPlant& p, const Vec& x) {
    try {
        return linalg::pinv(p.input_map(x));
    } catch (const linalg::RankDeficientError&) {
        std::ostringstream os;
        os << "input map g(x) lost full column rank at x = [";
        for (std::size_t i = 0; i < x.size(); ++i) {
            os << (i ? ", " : "") << x[i];
        }
        os << "]";
        throw ControlError(os.str());
    }
}

namespace {

// −f(x) + ẋ_d − D·ε̂_T
Vec feedforward(const RegressorPlant& p, const Vec& x, const Vec& xd_dot, const Vec& eps_T_hat) {
    Vec v = linalg::sub(xd_dot, p.drift(x));
    const Vec dist = p.dist_map * eps_T_hat;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] -= dist[i];
    }
    return v;
}

}  // namespace

Vec itsmc_control(const RegressorPlant& p, const ControllerState& cs, const Vec& x, const Vec& x_d,
                  const Vec& xd_dot, const Vec& eps_T_hat, double k, double boundary_layer) {
    const Vec e_x = tracking_error(x, x_d);
    const Vec sigma = sliding_surface(cs, e_x);
    Vec v = feedforward(p, x, xd_dot, eps_T_hat);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] -= switching(e_x[i], boundary_layer) + k * switching(sigma[i], boundary_layer);
    }
    return input_pinv(p, x) * v;
}

Vec pre_rich_control(const RegressorPlant& p, const Vec& x, const Vec& x_d, const Vec& xd_dot, const Vec& eps_T_hat,
                     double hslash) {
    const Vec e_x = tracking_error(x, x_d);
    Vec v = feedforward(p, x, xd_dot, eps_T_hat);
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] -= hslash * e_x[i];
    }
    return input_pinv(p, x) * v;
}

}  // namespace erdob
