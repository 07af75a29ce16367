#pragma once

// Conversions between the library matrix type and the oracle representation.

#include "erdob/linalg.hpp"
#include "oracles.hpp"

namespace support {

inline erdob::linalg::Mat to_mat(const oracle::M& a) {
    erdob::linalg::Mat m(a.size(), a[0].size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a[0].size(); ++j) {
            m(i, j) = a[i][j];
        }
    }
    return m;
}

inline oracle::M to_oracle(const erdob::linalg::Mat& m) {
    oracle::M out = oracle::zeros(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out[i][j] = m(i, j);
        }
    }
    return out;
}

inline double max_abs_diff(const erdob::linalg::Mat& a, const erdob::linalg::Mat& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            d = std::max(d, std::abs(a(i, j) - b(i, j)));
        }
    }
    return d;
}

}  // namespace support
