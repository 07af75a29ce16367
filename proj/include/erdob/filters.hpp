#pragma once

#include "erdob/linalg.hpp"

namespace erdob {

using linalg::Mat;
using linalg::Vec;

/**
 * @brief Filtered-regressor states driven alongside the plant.
 *
 * With pole a > 0: ḣ = −a·h + z, l̇ = −a·l + x, ρ̇ = −a·ρ, started from
 * h(0) = 0, l(0) = 0, ρ(0) = x(0). Then ε̄ = x − φ*·h − a·l − ρ is the
 * low-pass-filtered disturbance D·ε, available from state measurements.
 *
 * `eps` is the true filtered disturbance state (ε̇ = −a·ε + ε_T). It is
 * ground truth for checks only and never feeds the observer.
 */
struct FilterState {
    double a = 1.0;
    Vec h;
    Vec l;
    Vec rho;
    Vec eps;
    Vec eps_bar;
};

FilterState init_filters(double a, const Vec& x0, std::size_t regressor_len, std::size_t d);

struct FilterDerivative {
    Vec h;
    Vec l;
    Vec rho;
};

FilterDerivative filter_rhs(const FilterState& fs, const Vec& x, const Vec& z);

/// ε̇ = −a·ε + ε_T for the ground-truth filtered disturbance.
Vec filtered_disturbance_rhs(const Vec& eps, const Vec& eps_T, double a);

/// ε̄ = x − φ*·h − a·l − ρ.
Vec measured_eps_bar(const Vec& x, const Vec& h, const Vec& l, const Vec& rho, const Mat& phi_star, double a);
Vec measured_eps_bar(const FilterState& fs, const Vec& x, const Mat& phi_star);

/// ε = F·ε̄ with F = D⁺.
Vec eps_from_eps_bar(const Vec& eps_bar, const Mat& f_mat);

}  // namespace erdob
