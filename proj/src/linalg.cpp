#include "erdob/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace erdob::linalg {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw LinalgError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()));
    }
}

void require_same_len(std::span<const double> a, std::span<const double> b, const char* op) {
    if (a.size() != b.size()) {
        throw LinalgError(std::string(op) + ": length mismatch " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
    }
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw LinalgError("Mat: ragged initializer");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Mat Mat::identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Mat Mat::diag(std::span<const double> entries) {
    Mat m(entries.size(), entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        m(i, i) = entries[i];
    }
    return m;
}

Mat Mat::from_rows(std::size_t rows, std::size_t cols, std::span<const double> row_major) {
    if (row_major.size() != rows * cols) {
        throw LinalgError("Mat::from_rows: expected " + std::to_string(rows * cols) + " entries, got " +
                          std::to_string(row_major.size()));
    }
    Mat m(rows, cols);
    std::copy(row_major.begin(), row_major.end(), m.data_.begin());
    return m;
}

Mat Mat::column(std::span<const double> v) { return from_rows(v.size(), 1, v); }

Mat Mat::row(std::span<const double> v) { return from_rows(1, v.size(), v); }

Mat Mat::transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            t(c, r) = (*this)(r, c);
        }
    }
    return t;
}

bool Mat::all_finite() const { return linalg::all_finite(data_); }

Mat& Mat::operator+=(const Mat& o) {
    require_same_shape(*this, o, "operator+");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += o.data_[i];
    }
    return *this;
}

Mat& Mat::operator-=(const Mat& o) {
    require_same_shape(*this, o, "operator-");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= o.data_[i];
    }
    return *this;
}

Mat& Mat::operator*=(double s) {
    for (auto& v : data_) {
        v *= s;
    }
    return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat operator*(const Mat& a, const Mat& b) {
    if (a.cols() != b.rows()) {
        throw LinalgError("matmul: inner dimension mismatch " + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()));
    }
    Mat r(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                r(i, j) += aik * b(k, j);
            }
        }
    }
    return r;
}

Vec operator*(const Mat& a, std::span<const double> v) {
    if (a.cols() != v.size()) {
        throw LinalgError("matvec: dimension mismatch " + std::to_string(a.cols()) + " vs " +
                          std::to_string(v.size()));
    }
    Vec r(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            s += a(i, j) * v[j];
        }
        r[i] = s;
    }
    return r;
}

Vec add(std::span<const double> a, std::span<const double> b) {
    require_same_len(a, b, "add");
    Vec r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] += b[i];
    }
    return r;
}

Vec sub(std::span<const double> a, std::span<const double> b) {
    require_same_len(a, b, "sub");
    Vec r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] -= b[i];
    }
    return r;
}

Vec scale(std::span<const double> a, double s) {
    Vec r(a.begin(), a.end());
    for (auto& v : r) {
        v *= s;
    }
    return r;
}

Vec axpy(std::span<const double> a, double s, std::span<const double> b) {
    require_same_len(a, b, "axpy");
    Vec r(a.begin(), a.end());
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] += s * b[i];
    }
    return r;
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_len(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

double frobenius(const Mat& a) { return norm(a.data()); }

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

Mat kron(const Mat& a, const Mat& b) {
    const std::size_t p = b.rows();
    const std::size_t q = b.cols();
    Mat r(a.rows() * p, a.cols() * q);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double aij = a(i, j);
            for (std::size_t k = 0; k < p; ++k) {
                for (std::size_t l = 0; l < q; ++l) {
                    r(i * p + k, j * q + l) = aij * b(k, l);
                }
            }
        }
    }
    return r;
}

Mat solve(const Mat& a, const Mat& b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.rows() != n) {
        throw LinalgError("solve: expected square system");
    }
    Mat lu = a;
    Mat x = b;
    double scale_ref = 0.0;
    for (double v : a.data()) {
        scale_ref = std::max(scale_ref, std::abs(v));
    }
    const double tiny = scale_ref * static_cast<double>(n) * 1e-14;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(lu(r, col)) > std::abs(lu(piv, col))) {
                piv = r;
            }
        }
        if (!(std::abs(lu(piv, col)) > tiny)) {
            throw RankDeficientError("solve: matrix is singular to working precision");
        }
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(lu(piv, c), lu(col, c));
            }
            for (std::size_t c = 0; c < x.cols(); ++c) {
                std::swap(x(piv, c), x(col, c));
            }
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = lu(r, col) / lu(col, col);
            if (f == 0.0) {
                continue;
            }
            for (std::size_t c = col; c < n; ++c) {
                lu(r, c) -= f * lu(col, c);
            }
            for (std::size_t c = 0; c < x.cols(); ++c) {
                x(r, c) -= f * x(col, c);
            }
        }
    }
    for (std::size_t ri = n; ri-- > 0;) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            double s = x(ri, c);
            for (std::size_t k = ri + 1; k < n; ++k) {
                s -= lu(ri, k) * x(k, c);
            }
            x(ri, c) = s / lu(ri, ri);
        }
    }
    return x;
}

Mat pinv(const Mat& a) {
    if (a.rows() < a.cols()) {
        throw RankDeficientError("pinv: expected a tall matrix (rows >= cols), got " + std::to_string(a.rows()) +
                                 "x" + std::to_string(a.cols()));
    }
    const Mat at = a.transpose();
    try {
        return solve(at * a, at);
    } catch (const RankDeficientError&) {
        throw RankDeficientError("pinv: AᵀA is singular; matrix lacks full column rank");
    }
}

Vec vec_cols(const Mat& a) {
    Vec v;
    v.reserve(a.rows() * a.cols());
    for (std::size_t c = 0; c < a.cols(); ++c) {
        for (std::size_t r = 0; r < a.rows(); ++r) {
            v.push_back(a(r, c));
        }
    }
    return v;
}

Mat unvec(std::span<const double> v, std::size_t rows, std::size_t cols) {
    if (v.size() != rows * cols) {
        throw LinalgError("unvec: length " + std::to_string(v.size()) + " does not match " + std::to_string(rows) +
                          "x" + std::to_string(cols));
    }
    Mat m(rows, cols);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t r = 0; r < rows; ++r) {
            m(r, c) = v[c * rows + r];
        }
    }
    return m;
}

Vec eig_sym(const Mat& a, double sym_tol) {
    const std::size_t n = a.rows();
    if (a.cols() != n) {
        throw AsymmetricError("eig_sym: matrix is not square");
    }
    double amax = 0.0;
    for (double v : a.data()) {
        amax = std::max(amax, std::abs(v));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > sym_tol * std::max(1.0, amax)) {
                throw AsymmetricError("eig_sym: matrix is not symmetric");
            }
        }
    }
    Mat m = a;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (m(i, j) + m(j, i));
            m(i, j) = avg;
            m(j, i) = avg;
        }
    }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                total += m(i, j) * m(i, j);
                if (i != j) {
                    off += m(i, j) * m(i, j);
                }
            }
        }
        if (off <= 1e-30 * total || off == 0.0) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m(k, p);
                    const double mkq = m(k, q);
                    m(k, p) = c * mkp - s * mkq;
                    m(k, q) = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m(p, k);
                    const double mqk = m(q, k);
                    m(p, k) = c * mpk - s * mqk;
                    m(q, k) = s * mpk + c * mqk;
                }
            }
        }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) {
        ev[i] = m(i, i);
    }
    std::sort(ev.begin(), ev.end());
    return ev;
}

double min_eig_sym(const Mat& a, double sym_tol) {
    const Vec ev = eig_sym(a, sym_tol);
    return ev.empty() ? 0.0 : ev.front();
}

double max_eig_sym(const Mat& a, double sym_tol) {
    const Vec ev = eig_sym(a, sym_tol);
    return ev.empty() ? 0.0 : ev.back();
}

double spectral_norm(const Mat& a) {
    const Mat ata = a.transpose() * a;
    return std::sqrt(std::max(0.0, max_eig_sym(ata, 1e-8)));
}

Vec rk4_step(const OdeRhs& rhs, double t, const Vec& y, double h) {
    auto checked = [&](double ts, const Vec& ys) {
        Vec k = rhs(ts, ys);
        if (k.size() != y.size()) {
            throw LinalgError("rk4_step: derivative length mismatch");
        }
        if (!all_finite(k)) {
            throw NonFiniteError("rk4_step: non-finite derivative at t=" + std::to_string(ts));
        }
        return k;
    };
    const Vec k1 = checked(t, y);
    const Vec k2 = checked(t + 0.5 * h, axpy(y, 0.5 * h, k1));
    const Vec k3 = checked(t + 0.5 * h, axpy(y, 0.5 * h, k2));
    const Vec k4 = checked(t + h, axpy(y, h, k3));
    Vec out = y;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

std::string to_string(const Mat& a) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            os << (c ? ", " : "") << a(r, c);
        }
        os << (r + 1 < a.rows() ? "; " : "");
    }
    return os.str();
}

}  // namespace erdob::linalg
