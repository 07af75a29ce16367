#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace erdob::linalg {

using Vec = std::vector<double>;

class LinalgError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by pinv when AᵀA cannot be inverted to working precision.
class RankDeficientError : public LinalgError {
public:
    using LinalgError::LinalgError;
};

class AsymmetricError : public LinalgError {
public:
    using LinalgError::LinalgError;
};

/// Raised by rk4_step when a stage derivative is NaN or infinite.
class NonFiniteError : public LinalgError {
public:
    using LinalgError::LinalgError;
};

/**
 * @brief Dense real matrix with row-major storage.
 *
 * Sized for the tiny systems handled here (a few rows and columns); every
 * operation allocates and returns a fresh value.
 */
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
    Mat(std::initializer_list<std::initializer_list<double>> rows);

    static Mat identity(std::size_t n);
    static Mat diag(std::span<const double> entries);
    static Mat from_rows(std::size_t rows, std::size_t cols, std::span<const double> row_major);
    static Mat column(std::span<const double> v);
    static Mat row(std::span<const double> v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> data() const { return data_; }

    Mat transpose() const;
    bool all_finite() const;

    Mat& operator+=(const Mat& o);
    Mat& operator-=(const Mat& o);
    Mat& operator*=(double s);

    friend bool operator==(const Mat&, const Mat&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);
Mat operator*(const Mat& a, const Mat& b);
Vec operator*(const Mat& a, std::span<const double> v);

// Vector helpers.
Vec add(std::span<const double> a, std::span<const double> b);
Vec sub(std::span<const double> a, std::span<const double> b);
Vec scale(std::span<const double> a, double s);
/// a + s·b
Vec axpy(std::span<const double> a, double s, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double norm_inf(std::span<const double> a);
double frobenius(const Mat& a);
bool all_finite(std::span<const double> v);

/// Kronecker product: result[(i·p+k),(j·q+l)] = a[i,j]·b[k,l].
Mat kron(const Mat& a, const Mat& b);

/// Left pseudoinverse (AᵀA)⁻¹Aᵀ of a tall full-column-rank matrix.
Mat pinv(const Mat& a);

/// Solves a·x = b (square a) with partial pivoting; throws RankDeficientError.
Mat solve(const Mat& a, const Mat& b);

/// Column-major stacking, so that vec(A·B·C) = kron(Cᵀ, A)·vec(B).
Vec vec_cols(const Mat& a);
Mat unvec(std::span<const double> v, std::size_t rows, std::size_t cols);

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi).
Vec eig_sym(const Mat& a, double sym_tol = 1e-10);
double min_eig_sym(const Mat& a, double sym_tol = 1e-10);
double max_eig_sym(const Mat& a, double sym_tol = 1e-10);

/// Largest singular value.
double spectral_norm(const Mat& a);

using OdeRhs = std::function<Vec(double t, const Vec& y)>;

/// One classical fourth-order Runge-Kutta step of size h.
Vec rk4_step(const OdeRhs& rhs, double t, const Vec& y, double h);

std::string to_string(const Mat& a);

}  // namespace erdob::linalg
