#include "erdob/observer.hpp"

#include <stdexcept>
#include <string>

namespace erdob {

Mat scalar_gain(double gamma, std::size_t d) { return Mat::identity(d * d) * gamma; }

void validate_gain(const Mat& gamma, std::size_t d) {
    if (gamma.rows() != d * d || gamma.cols() != d * d) {
        throw std::invalid_argument("observer gain must be " + std::to_string(d * d) + "x" + std::to_string(d * d));
    }
    double lmin = 0.0;
    try {
        lmin = linalg::min_eig_sym(gamma);
    } catch (const linalg::AsymmetricError&) {
        throw std::invalid_argument("observer gain must be symmetric");
    }
    if (!(lmin > 0.0)) {
        throw std::invalid_argument("observer gain must be positive definite");
    }
}

ObserverState init_observer(std::size_t d, Mat gamma, Mat s_hat0) {
    validate_gain(gamma, d);
    ObserverState os;
    os.s_hat = s_hat0.empty() ? Mat(d, d) : std::move(s_hat0);
    if (os.s_hat.rows() != d || os.s_hat.cols() != d) {
        throw std::invalid_argument("initial S estimate must be " + std::to_string(d) + "x" + std::to_string(d));
    }
    os.rho_delta_hat.assign(d, 0.0);
    os.eps_hat.assign(d, 0.0);
    os.gamma = std::move(gamma);
    return os;
}

Vec estimate_disturbance(const ObserverState& os, const Vec& eps, double a) {
    Vec est = os.s_hat * eps;
    for (std::size_t i = 0; i < est.size(); ++i) {
        est[i] += a * eps[i] + os.rho_delta_hat[i];
    }
    return est;
}

ObserverDerivative observer_rhs(const ObserverState& os, const Vec& eps_T_hat, double a) {
    return {linalg::axpy(eps_T_hat, -a, os.eps_hat), linalg::scale(os.rho_delta_hat, -a)};
}

Vec innovation(const Vec& eps_bar, const Mat& d_mat, const Vec& eps_hat) {
    return linalg::sub(eps_bar, d_mat * eps_hat);
}

Mat disturbance_regressor(const Vec& eps_bar, const Mat& f_mat, const Mat& d_mat) {
    return linalg::kron(Mat::row(f_mat * eps_bar), d_mat);
}

Vec baseline_update(const ObserverState& os, const Vec& e_tilde, const Vec& eps_bar, const Mat& f_mat,
                    const Mat& d_mat) {
    const Mat reg = disturbance_regressor(eps_bar, f_mat, d_mat);
    return os.gamma * (reg.transpose() * e_tilde);
}

double lyapunov_value(const Vec& e_tilde, const Mat& s_tilde, const Mat& gamma) {
    const Vec sv = linalg::vec_cols(s_tilde);
    const Mat w = linalg::solve(gamma, Mat::column(sv));
    double v = linalg::dot(e_tilde, e_tilde);
    for (std::size_t i = 0; i < sv.size(); ++i) {
        v += sv[i] * w(i, 0);
    }
    return v;
}

}  // namespace erdob
