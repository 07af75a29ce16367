#include "erdob/filters.hpp"

#include <stdexcept>

namespace erdob {

FilterState init_filters(double a, const Vec& x0, std::size_t regressor_len, std::size_t d) {
    if (!(a > 0.0)) {
        throw std::invalid_argument("filter pole a must be positive");
    }
    FilterState fs;
    fs.a = a;
    fs.h.assign(regressor_len, 0.0);
    fs.l.assign(x0.size(), 0.0);
    fs.rho = x0;
    fs.eps.assign(d, 0.0);
    fs.eps_bar.assign(x0.size(), 0.0);
    return fs;
}

FilterDerivative filter_rhs(const FilterState& fs, const Vec& x, const Vec& z) {
    const double a = fs.a;
    return {linalg::axpy(z, -a, fs.h), linalg::axpy(x, -a, fs.l), linalg::scale(fs.rho, -a)};
}

Vec filtered_disturbance_rhs(const Vec& eps, const Vec& eps_T, double a) { return linalg::axpy(eps_T, -a, eps); }

Vec measured_eps_bar(const Vec& x, const Vec& h, const Vec& l, const Vec& rho, const Mat& phi_star, double a) {
    Vec eb = linalg::sub(x, phi_star * h);
    for (std::size_t i = 0; i < eb.size(); ++i) {
        eb[i] -= a * l[i] + rho[i];
    }
    return eb;
}

Vec measured_eps_bar(const FilterState& fs, const Vec& x, const Mat& phi_star) {
    return measured_eps_bar(x, fs.h, fs.l, fs.rho, phi_star, fs.a);
}

Vec eps_from_eps_bar(const Vec& eps_bar, const Mat& f_mat) { return f_mat * eps_bar; }

}  // namespace erdob
