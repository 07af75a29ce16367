#include "erdob/replay.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace erdob {

WindowIntegrals::WindowIntegrals(double t0, double delta_t, double step, std::size_t n, std::size_t d)
    : t0_(t0), delta_t_(delta_t), step_(step), n_(n), d_(d) {
    if (!(delta_t > 0.0) || !(step > 0.0)) {
        throw std::invalid_argument("window length and step must be positive");
    }
    const double ratio = delta_t / step;
    window_steps_ = static_cast<std::size_t>(std::llround(ratio));
    if (window_steps_ < 1 || std::abs(ratio - static_cast<double>(window_steps_)) > 1e-6) {
        throw std::invalid_argument("window length " + std::to_string(delta_t) +
                                    " must be a whole number of steps of " + std::to_string(step));
    }
}

void WindowIntegrals::push(double t, const Vec& x, const Vec& eps_bar, const Vec& z_step, const Mat& f_mat,
                           const Mat& d_mat, double a) {
    const Mat y_integrand = disturbance_regressor(eps_bar, f_mat, d_mat);
    if (samples_ == 0) {
        ring_.push_back({t, x, Mat(n_, d_ * d_), Vec(n_, 0.0), Vec(n_, 0.0)});
    } else {
        const double h = t - last_t_;
        const Snapshot& prev = ring_.back();
        Snapshot next{t, x, prev.cum_y, prev.cum_y_bar, prev.cum_z};
        next.cum_y += (prev_y_integrand_ + y_integrand) * (0.5 * h);
        for (std::size_t i = 0; i < n_; ++i) {
            next.cum_y_bar[i] += 0.5 * h * a * (prev_eps_bar_[i] + eps_bar[i]);
            next.cum_z[i] += z_step[i];
        }
        ring_.push_back(std::move(next));
        while (ring_.size() > window_steps_ + 1) {
            ring_.pop_front();
        }
    }
    prev_y_integrand_ = y_integrand;
    prev_eps_bar_ = eps_bar;
    last_t_ = t;
    ++samples_;
}

void WindowIntegrals::accumulate(double t, const Vec& x, const Vec& eps_bar, const Vec& phi_z_begin,
                                 const Vec& phi_z_end, const Mat& f_mat, const Mat& d_mat, double a) {
    if (t < t0_ - 0.5 * step_) {
        return;
    }
    const double h = samples_ == 0 ? 0.0 : t - last_t_;
    push(t, x, eps_bar, linalg::scale(linalg::add(phi_z_begin, phi_z_end), 0.5 * h), f_mat, d_mat, a);
    prev_phi_z_ = phi_z_end;
}

void WindowIntegrals::accumulate_running(double t, const Vec& x, const Vec& eps_bar, const Vec& z_running,
                                         const Mat& f_mat, const Mat& d_mat, double a) {
    if (t < t0_ - 0.5 * step_) {
        return;
    }
    const Vec step = samples_ == 0 ? Vec(n_, 0.0) : linalg::sub(z_running, prev_z_running_);
    push(t, x, eps_bar, step, f_mat, d_mat, a);
    prev_z_running_ = z_running;
}

void WindowIntegrals::accumulate(double t, const Vec& x, const Vec& eps_bar, const Vec& phi_z, const Mat& f_mat,
                                 const Mat& d_mat, double a) {
    const Vec begin = samples_ == 0 ? phi_z : prev_phi_z_;
    accumulate(t, x, eps_bar, begin, phi_z, f_mat, d_mat, a);
}

bool WindowIntegrals::active() const { return samples_ >= window_steps_ + 2; }

Mat WindowIntegrals::y() const {
    if (!active()) {
        return Mat(n_, d_ * d_);
    }
    return ring_.back().cum_y - ring_.front().cum_y;
}

Vec WindowIntegrals::y_bar() const {
    if (!active()) {
        return Vec(n_, 0.0);
    }
    return linalg::sub(ring_.back().cum_y_bar, ring_.front().cum_y_bar);
}

Vec WindowIntegrals::z_int() const {
    if (!active()) {
        return Vec(n_, 0.0);
    }
    return linalg::sub(ring_.back().cum_z, ring_.front().cum_z);
}

Vec WindowIntegrals::x_increment() const {
    if (!active()) {
        return Vec(n_, 0.0);
    }
    return linalg::sub(ring_.back().x, ring_.front().x);
}

ReplayRecord make_record(const WindowIntegrals& w) {
    Vec target = w.x_increment();
    const Vec z = w.z_int();
    const Vec yb = w.y_bar();
    for (std::size_t i = 0; i < target.size(); ++i) {
        target[i] -= z[i] + yb[i];
    }
    return {w.time(), w.y(), std::move(target)};
}

Vec integrated_identity_residual(const ReplayRecord& r, const Vec& s_vec) { return linalg::sub(r.target, r.y * s_vec); }

HistoryStack::HistoryStack(std::size_t capacity, std::size_t param_dim, double omega, double kappa)
    : capacity_(capacity), param_dim_(param_dim), omega_(omega), kappa_(kappa), gram_(param_dim, param_dim) {
    if (capacity == 0) {
        throw std::invalid_argument("history stack capacity must be positive");
    }
    if (!(kappa > 0.0)) {
        throw std::invalid_argument("replay gain kappa must be positive");
    }
    if (!(omega > 0.0)) {
        throw std::invalid_argument("richness threshold omega must be positive");
    }
    records_.reserve(capacity);
}

Mat HistoryStack::gram_of(const std::vector<const ReplayRecord*>& recs) const {
    Mat g(param_dim_, param_dim_);
    for (const ReplayRecord* r : recs) {
        g += r->y.transpose() * r->y;
    }
    return g;
}

void HistoryStack::refresh(double t) {
    std::vector<const ReplayRecord*> ptrs;
    for (const auto& r : records_) {
        ptrs.push_back(&r);
    }
    gram_ = gram_of(ptrs);
    // The gram is PSD; clamp the eigen solver's rounding below zero.
    lambda_min_ = std::max(0.0, linalg::min_eig_sym(gram_, 1e-8));
    if (!rich_since_ && lambda_min_ > omega_) {
        rich_since_ = t;
    }
}

bool HistoryStack::try_record(ReplayRecord candidate) {
    if (candidate.y.rows() == 0 || candidate.y.cols() != param_dim_) {
        throw std::invalid_argument("replay record has wrong shape");
    }
    const double t = candidate.t;
    if (records_.size() < capacity_) {
        records_.push_back(std::move(candidate));
        refresh(t);
        return true;
    }
    std::vector<const ReplayRecord*> trial;
    double best = lambda_min_;
    std::optional<std::size_t> best_slot;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        trial.clear();
        for (std::size_t j = 0; j < records_.size(); ++j) {
            trial.push_back(j == i ? &candidate : &records_[j]);
        }
        const double lm = linalg::min_eig_sym(gram_of(trial), 1e-8);
        if (lm > best + 1e-12 * std::max(1.0, std::abs(best))) {
            best = lm;
            best_slot = i;
        }
    }
    if (!best_slot) {
        return false;
    }
    records_[*best_slot] = std::move(candidate);
    refresh(t);
    return true;
}

Vec HistoryStack::replay_term(const Vec& s_vec) const {
    Vec acc(param_dim_, 0.0);
    for (const auto& r : records_) {
        const Vec res = integrated_identity_residual(r, s_vec);
        const Vec contrib = r.y.transpose() * res;
        for (std::size_t i = 0; i < param_dim_; ++i) {
            acc[i] += contrib[i];
        }
    }
    return acc;
}

Vec er_update(const ObserverState& os, const HistoryStack& stack, const Vec& e_tilde, const Vec& eps_bar,
              const Mat& f_mat, const Mat& d_mat) {
    Vec ds = baseline_update(os, e_tilde, eps_bar, f_mat, d_mat);
    if (stack.size() == 0) {
        return ds;
    }
    const Vec replay = os.gamma * stack.replay_term(linalg::vec_cols(os.s_hat));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ds[i] += stack.kappa() * replay[i];
    }
    return ds;
}

RateCertificate rate_certificate(const HistoryStack& stack, const Mat& gamma, double a) {
    const Richness r = stack.richness();
    if (!r.rich) {
        throw NotRichError("rate certificate requested before the history stack is rich (lambda_min=" +
                           std::to_string(r.lambda_min) + ")");
    }
    const linalg::Vec ev = linalg::eig_sym(gamma);
    // Γ⁻¹ has eigenvalues 1/λ(Γ).
    const double inv_max = 1.0 / ev.front();
    const double inv_min = 1.0 / ev.back();
    RateCertificate c;
    c.varpi1 = std::max(1.0, inv_max);
    c.varpi2 = std::min(1.0, inv_min);
    c.lambda1 = 2.0 / c.varpi1 * std::min(a, stack.kappa() * r.lambda_min);
    return c;
}

}  // namespace erdob
