#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "erdob/linalg.hpp"

namespace erdob {

using linalg::Mat;
using linalg::Vec;

class PlantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Scalar basis function of the state drawn from a small registry.
 *
 * Text forms: `1`, monomials such as `x1`, `x1^3`, `x1*x2^2` (total degree
 * at most 3), and `sin(x2)`, `cos(x1)`. State indices are 1-based in text.
 */
struct BasisAtom {
    enum class Kind { Monomial, Sin, Cos };

    Kind kind = Kind::Monomial;
    std::vector<int> exponents;  // Monomial: one exponent per state
    std::size_t index = 0;       // Sin/Cos: 0-based state index

    double eval(std::span<const double> x) const;
    std::string to_string() const;

    static BasisAtom parse(std::string_view text, std::size_t n);
};

using BasisFn = std::function<Vec(const Vec&)>;

BasisFn make_basis(std::vector<BasisAtom> atoms);

/**
 * @brief Plant ẋ = φ*·z(x,u) + D·ε_T in weight/basis form.
 *
 * The regressor is z = [ξ(x); ζ₁(x)·u; …; ζ_q(x)·u], so the columns of
 * φ* split into the drift weights θ* (first p_θ columns) followed by q
 * blocks of m columns whose weighted sum is the input map g(x).
 */
struct RegressorPlant {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t d = 0;
    std::size_t p_theta = 0;
    std::size_t p_psi = 0;
    Mat phi_star;
    BasisFn xi;
    BasisFn zeta;
    Mat dist_map;
    std::vector<std::string> xi_labels;
    std::vector<std::string> zeta_labels;

    std::size_t regressor_len() const { return p_theta + m * p_psi; }

    Vec regressor(const Vec& x, const Vec& u) const;
    Vec drift(const Vec& x) const;
    Mat input_map(const Vec& x) const;
    Vec rhs(const Vec& x, const Vec& u, const Vec& eps_T) const;

    /// Throws PlantError on inconsistent dimensions, rank-deficient D or f(0) ≠ 0.
    void validate() const;
};

/// Disturbance generator ε̇_T = S·ε_T.
struct Exosystem {
    Mat s_matrix;
    Vec state;
    Vec initial;

    Vec rhs() const { return s_matrix * state; }
    Vec rhs(const Vec& eps_T) const { return s_matrix * eps_T; }
};

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;
    double max_abs_real = 0.0;
    bool on_imaginary_axis = false;
};

/// Eigenvalue placement of S; `on_imaginary_axis` uses |Re λ| < tol.
SpectrumReport exosystem_spectrum(const Mat& s, double tol = 1e-8);

/// Reference component offset + amplitude·sin(frequency·t + phase).
struct Sinusoid {
    double amplitude = 0.0;
    double frequency = 0.0;
    double phase = 0.0;
    double offset = 0.0;
};

struct Reference {
    std::vector<Sinusoid> components;

    Vec value(double t) const;
    Vec rate(double t) const;
};

struct Scenario {
    std::string name;
    RegressorPlant plant;
    Exosystem exo;
    Reference reference;
    Vec x0;
    double default_a = 2.0;
};

struct Example1Params {
    double beta = 2.0;
};

struct Example2Params {
    double beta = 1.5;
    double mass1 = 1.0;
    double mass2 = 1.0;
    double spring1 = 1.0;
    double spring2 = 1.0;
};

Scenario example1(const Example1Params& p = {});
Scenario example2(const Example2Params& p = {});

/// Built-in scenario by id: "example1" or "example2".
Scenario builtin_scenario(std::string_view name);

}  // namespace erdob
