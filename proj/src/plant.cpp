#include "erdob/plant.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace erdob {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_state_index(std::string_view tok, std::size_t n, std::string_view whole) {
    if (tok.size() < 2 || tok[0] != 'x') {
        throw PlantError("basis atom '" + std::string(whole) + "': expected a state name like x1");
    }
    std::size_t idx = 0;
    for (char c : tok.substr(1)) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            throw PlantError("basis atom '" + std::string(whole) + "': bad state name '" + std::string(tok) + "'");
        }
        idx = idx * 10 + static_cast<std::size_t>(c - '0');
    }
    if (idx < 1 || idx > n) {
        throw PlantError("basis atom '" + std::string(whole) + "': state index out of range 1.." + std::to_string(n));
    }
    return idx - 1;
}

}  // namespace

double BasisAtom::eval(std::span<const double> x) const {
    switch (kind) {
        case Kind::Sin:
            return std::sin(x[index]);
        case Kind::Cos:
            return std::cos(x[index]);
        case Kind::Monomial:
            break;
    }
    double v = 1.0;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        for (int k = 0; k < exponents[i]; ++k) {
            v *= x[i];
        }
    }
    return v;
}

std::string BasisAtom::to_string() const {
    switch (kind) {
        case Kind::Sin:
            return "sin(x" + std::to_string(index + 1) + ")";
        case Kind::Cos:
            return "cos(x" + std::to_string(index + 1) + ")";
        case Kind::Monomial:
            break;
    }
    std::string s;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        if (exponents[i] == 0) {
            continue;
        }
        if (!s.empty()) {
            s += "*";
        }
        s += "x" + std::to_string(i + 1);
        if (exponents[i] > 1) {
            s += "^" + std::to_string(exponents[i]);
        }
    }
    return s.empty() ? "1" : s;
}

BasisAtom BasisAtom::parse(std::string_view text, std::size_t n) {
    const std::string t = trim(text);
    BasisAtom atom;
    if (t.empty()) {
        throw PlantError("empty basis atom");
    }
    if (t.starts_with("sin(") || t.starts_with("cos(")) {
        if (t.back() != ')') {
            throw PlantError("basis atom '" + t + "': missing ')'");
        }
        atom.kind = t[0] == 's' ? Kind::Sin : Kind::Cos;
        atom.index = parse_state_index(trim(std::string_view(t).substr(4, t.size() - 5)), n, t);
        return atom;
    }
    atom.kind = Kind::Monomial;
    atom.exponents.assign(n, 0);
    if (t == "1") {
        return atom;
    }
    int degree = 0;
    std::string_view rest = t;
    while (!rest.empty()) {
        const auto star = rest.find('*');
        const std::string factor = trim(rest.substr(0, star));
        rest = star == std::string_view::npos ? std::string_view{} : rest.substr(star + 1);
        const auto caret = factor.find('^');
        const std::size_t idx = parse_state_index(factor.substr(0, caret), n, t);
        int power = 1;
        if (caret != std::string::npos) {
            const std::string ps = factor.substr(caret + 1);
            if (ps.size() != 1 || !std::isdigit(static_cast<unsigned char>(ps[0]))) {
                throw PlantError("basis atom '" + t + "': bad exponent '" + ps + "'");
            }
            power = ps[0] - '0';
        }
        atom.exponents[idx] += power;
        degree += power;
    }
    if (degree > 3) {
        throw PlantError("basis atom '" + t + "': monomial degree exceeds 3");
    }
    return atom;
}

BasisFn make_basis(std::vector<BasisAtom> atoms) {
    return [atoms = std::move(atoms)](const Vec& x) {
        Vec out;
        out.reserve(atoms.size());
        for (const auto& a : atoms) {
            out.push_back(a.eval(x));
        }
        return out;
    };
}

Vec RegressorPlant::regressor(const Vec& x, const Vec& u) const {
    if (x.size() != n || u.size() != m) {
        throw PlantError("regressor: expected x in R^" + std::to_string(n) + " and u in R^" + std::to_string(m));
    }
    Vec z = xi(x);
    const Vec w = zeta(x);
    if (z.size() != p_theta || w.size() != p_psi) {
        throw PlantError("regressor: basis evaluator returned wrong length");
    }
    z.reserve(regressor_len());
    for (double wk : w) {
        for (double uj : u) {
            z.push_back(wk * uj);
        }
    }
    return z;
}

Vec RegressorPlant::drift(const Vec& x) const {
    const Vec b = xi(x);
    Vec f(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p_theta; ++j) {
            f[i] += phi_star(i, j) * b[j];
        }
    }
    return f;
}

Mat RegressorPlant::input_map(const Vec& x) const {
    const Vec w = zeta(x);
    Mat g(n, m);
    for (std::size_t k = 0; k < p_psi; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                g(i, j) += phi_star(i, p_theta + k * m + j) * w[k];
            }
        }
    }
    return g;
}

Vec RegressorPlant::rhs(const Vec& x, const Vec& u, const Vec& eps_T) const {
    if (eps_T.size() != d) {
        throw PlantError("plant rhs: expected eps_T in R^" + std::to_string(d));
    }
    Vec dx = phi_star * regressor(x, u);
    const Vec dist = dist_map * eps_T;
    for (std::size_t i = 0; i < n; ++i) {
        dx[i] += dist[i];
    }
    if (!linalg::all_finite(dx)) {
        throw PlantError("plant rhs: non-finite state derivative");
    }
    return dx;
}

void RegressorPlant::validate() const {
    if (n == 0 || m == 0 || d == 0) {
        throw PlantError("plant: dimensions n, m, d must be positive");
    }
    if (phi_star.rows() != n || phi_star.cols() != regressor_len()) {
        throw PlantError("plant: phi_star must be " + std::to_string(n) + "x" + std::to_string(regressor_len()) +
                         ", got " + std::to_string(phi_star.rows()) + "x" + std::to_string(phi_star.cols()));
    }
    if (dist_map.rows() != n || dist_map.cols() != d) {
        throw PlantError("plant: D must be " + std::to_string(n) + "x" + std::to_string(d));
    }
    if (!phi_star.all_finite() || !dist_map.all_finite()) {
        throw PlantError("plant: non-finite weights");
    }
    try {
        (void)linalg::pinv(dist_map);
    } catch (const linalg::RankDeficientError&) {
        throw PlantError("plant: D lacks full column rank, so F = D⁺ cannot recover the disturbance");
    }
    const Vec f0 = drift(Vec(n, 0.0));
    if (linalg::norm(f0) > 1e-12) {
        throw PlantError("plant: drift violates f(0) = 0");
    }
}

SpectrumReport exosystem_spectrum(const Mat& s, double tol) {
    const auto d = static_cast<Eigen::Index>(s.rows());
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            m(i, j) = s(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
    SpectrumReport rep;
    for (Eigen::Index i = 0; i < d; ++i) {
        const std::complex<double> ev = solver.eigenvalues()(i);
        rep.eigenvalues.push_back(ev);
        rep.max_abs_real = std::max(rep.max_abs_real, std::abs(ev.real()));
    }
    rep.on_imaginary_axis = rep.max_abs_real < tol;
    return rep;
}

Vec Reference::value(double t) const {
    Vec v;
    v.reserve(components.size());
    for (const auto& c : components) {
        v.push_back(c.offset + c.amplitude * std::sin(c.frequency * t + c.phase));
    }
    return v;
}

Vec Reference::rate(double t) const {
    Vec v;
    v.reserve(components.size());
    for (const auto& c : components) {
        v.push_back(c.amplitude * c.frequency * std::cos(c.frequency * t + c.phase));
    }
    return v;
}

Scenario example1(const Example1Params& p) {
    Scenario sc;
    sc.name = "example1";
    auto& pl = sc.plant;
    pl.n = 2;
    pl.m = 2;
    pl.d = 2;
    pl.p_theta = 4;
    pl.p_psi = 1;
    pl.phi_star = Mat{{1, 1, -1, 0, 1, 0}, {-1, 1, 0, -1, 0, 1}};
    pl.xi = [](const Vec& x) {
        const double r2 = x[0] * x[0] + x[1] * x[1];
        return Vec{x[0], x[1], x[0] * r2, x[1] * r2};
    };
    pl.zeta = [](const Vec&) { return Vec{1.0}; };
    pl.xi_labels = {"x1", "x2", "x1*(x1^2+x2^2)", "x2*(x1^2+x2^2)"};
    pl.zeta_labels = {"1"};
    pl.dist_map = Mat::identity(2);
    sc.exo.s_matrix = Mat{{0, p.beta}, {-p.beta, 0}};
    sc.exo.initial = {1.0, 0.0};
    sc.exo.state = sc.exo.initial;
    // x_d = [2 sin 2t, 4 cos 3t]
    sc.reference.components = {{2.0, 2.0, 0.0, 0.0}, {4.0, 3.0, std::numbers::pi / 2.0, 0.0}};
    sc.x0 = {0.0, 0.0};
    sc.default_a = 2.0;
    return sc;
}

Scenario example2(const Example2Params& p) {
    Scenario sc;
    sc.name = "example2";
    auto& pl = sc.plant;
    pl.n = 4;
    pl.m = 2;
    pl.d = 2;
    pl.p_theta = 4;
    pl.p_psi = 1;
    const double m1 = p.mass1;
    const double m2 = p.mass2;
    const double k1 = p.spring1;
    const double k2 = p.spring2;
    // [A | B]; the last row of A is reproduced as published.
    pl.phi_star = Mat{{0, 1, 0, 0, 0, 0},
                      {-(k1 + k2) / m1, 0, k2 / m1, 0, 1.0 / m1, 0},
                      {0, 0, 0, 1, 0, 0},
                      {-k2 / m2, 0, -k2 / m2, 0, 0, 1.0 / m2}};
    pl.xi = [](const Vec& x) { return x; };
    pl.zeta = [](const Vec&) { return Vec{1.0}; };
    pl.xi_labels = {"x1", "x2", "x3", "x4"};
    pl.zeta_labels = {"1"};
    pl.dist_map = Mat{{0, -1}, {1, 0}, {0, -1}, {1, 0}};
    sc.exo.s_matrix = Mat{{0, -p.beta}, {p.beta, 0}};
    sc.exo.initial = {1.0, 0.0};
    sc.exo.state = sc.exo.initial;
    // x_d = [sin t, cos t, cos t, -sin t]
    const double half_pi = std::numbers::pi / 2.0;
    sc.reference.components = {{1.0, 1.0, 0.0, 0.0},
                               {1.0, 1.0, half_pi, 0.0},
                               {1.0, 1.0, half_pi, 0.0},
                               {-1.0, 1.0, 0.0, 0.0}};
    sc.x0 = {0.0, 0.0, 0.0, 0.0};
    sc.default_a = 3.0;
    return sc;
}

Scenario builtin_scenario(std::string_view name) {
    if (name == "example1") {
        return example1();
    }
    if (name == "example2") {
        return example2();
    }
    throw PlantError("unknown scenario id '" + std::string(name) + "' (expected example1 or example2)");
}

}  // namespace erdob
