#ifndef FLEXIFILM_SCHEDULE_HPP
#define FLEXIFILM_SCHEDULE_HPP

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "flexifilm/tensor.hpp"

namespace flexifilm {

/// Discrete diffusion timeline, 0-based: t = 0 is the least noisy step.
/// Tables are kept in double; tensors stay float.
struct NoiseSchedule {
    std::vector<double> beta;
    std::vector<double> alpha_bar;
    std::vector<double> snr;

    std::size_t steps() const { return beta.size(); }

    double sqrt_alpha_bar(int t) const { return std::sqrt(alpha_bar.at(std::size_t(t))); }
    double sqrt_one_minus_alpha_bar(int t) const { return std::sqrt(1.0 - alpha_bar.at(std::size_t(t))); }

    // Zero-terminal-SNR schedules legitimately end with beta == 1 and alpha_bar == 0.
    void validate() const {
        const std::size_t n = steps();
        if (n < 2 || alpha_bar.size() != n || snr.size() != n) throw ConfigError("schedule: inconsistent tables");
        for (std::size_t t = 0; t < n; ++t) {
            const bool terminal = t + 1 == n;
            if (!(beta[t] > 0.0) || beta[t] > 1.0 || (beta[t] == 1.0 && !terminal)) {
                throw ConfigError("schedule: beta out of (0,1) at t=" + std::to_string(t));
            }
            if (t > 0 && !(alpha_bar[t] < alpha_bar[t - 1])) throw ConfigError("schedule: alpha_bar not decreasing");
            if (t > 0 && !(snr[t] < snr[t - 1])) throw ConfigError("schedule: snr not decreasing");
        }
        if (alpha_bar[0] > 1.0) throw ConfigError("schedule: alpha_bar[0] > 1");
    }
};

namespace detail {

inline NoiseSchedule schedule_from_alpha_bar(std::vector<double> alpha_bar) {
    NoiseSchedule s;
    const std::size_t n = alpha_bar.size();
    s.beta.resize(n);
    s.snr.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        s.beta[t] = 1.0 - alpha_bar[t] / (t == 0 ? 1.0 : alpha_bar[t - 1]);
        s.snr[t] = alpha_bar[t] / (1.0 - alpha_bar[t]);
    }
    s.alpha_bar = std::move(alpha_bar);
    return s;
}

}  // namespace detail

inline NoiseSchedule make_linear_schedule(std::size_t steps, double beta_start, double beta_end) {
    if (steps < 2) throw ConfigError("make_linear_schedule: need at least 2 steps");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw ConfigError("make_linear_schedule: need 0 < beta_start <= beta_end < 1");
    }
    NoiseSchedule s;
    s.beta.resize(steps);
    s.alpha_bar.resize(steps);
    s.snr.resize(steps);
    double prod = 1.0;
    for (std::size_t t = 0; t < steps; ++t) {
        s.beta[t] = beta_start + (beta_end - beta_start) * double(t) / double(steps - 1);
        prod *= 1.0 - s.beta[t];
        s.alpha_bar[t] = prod;
        s.snr[t] = prod / (1.0 - prod);
    }
    s.validate();
    return s;
}

inline constexpr std::size_t kDefaultTrainSteps = 1000;
inline constexpr double kDefaultBetaStart = 1e-4;
inline constexpr double kDefaultBetaEnd = 0.02;

inline NoiseSchedule default_schedule() {
    return make_linear_schedule(kDefaultTrainSteps, kDefaultBetaStart, kDefaultBetaEnd);
}

/// Shifts and scales sqrt(alpha_bar) so the last step has exactly zero
/// signal while the first keeps its value. Already-zero-terminal schedules
/// come back unchanged.
inline NoiseSchedule rescale_zero_terminal_snr(const NoiseSchedule& s) {
    s.validate();
    const std::size_t n = s.steps();
    const double first = std::sqrt(s.alpha_bar.front());
    const double last = std::sqrt(s.alpha_bar.back());
    if (first == last) throw NumericError("rescale_zero_terminal_snr: degenerate schedule");
    if (last == 0.0) return s;
    const double k = first / (first - last);
    std::vector<double> ab(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double root = (std::sqrt(s.alpha_bar[t]) - last) * k;
        ab[t] = root * root;
    }
    ab.front() = s.alpha_bar.front();
    ab.back() = 0.0;
    auto out = detail::schedule_from_alpha_bar(std::move(ab));
    out.validate();
    return out;
}

inline void check_step(const NoiseSchedule& s, int t, const char* what) {
    if (t < 0 || std::size_t(t) >= s.steps()) {
        throw ContractError(std::string(what) + ": step " + std::to_string(t) + " outside [0," +
                            std::to_string(s.steps()) + ")");
    }
}

/// sqrt(alpha_bar[t])·z0 + sqrt(1 − alpha_bar[t])·eps
inline Tensor q_sample(const Tensor& z0, int t, const Tensor& eps, const NoiseSchedule& s) {
    check_step(s, t, "q_sample");
    require_same_shape(z0, eps, "q_sample");
    const double a = s.sqrt_alpha_bar(t);
    const double b = s.sqrt_one_minus_alpha_bar(t);
    Tensor out(z0.shape());
    auto o = out.mutable_data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = float(a * z0.raw()[i] + b * eps.raw()[i]);
    return out;
}

/// Target of the final DDIM step: the clean sample, alpha_bar = 1.
inline constexpr int kCleanStep = -1;

/// Deterministic (eta = 0) DDIM update from step t to t_prev.
/// t_prev == kCleanStep jumps straight to the predicted clean sample.
inline Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, int t, int t_prev, const NoiseSchedule& s) {
    check_step(s, t, "ddim_step");
    if (t_prev != kCleanStep) check_step(s, t_prev, "ddim_step");
    if (t_prev >= t) throw ContractError("ddim_step: t_prev must precede t");
    require_same_shape(z_t, eps_hat, "ddim_step");
    const double ab = s.alpha_bar[std::size_t(t)];
    if (ab <= 0.0) throw NumericError("ddim_step: alpha_bar is zero at t, epsilon prediction cannot invert it");
    const double ab_prev = t_prev == kCleanStep ? 1.0 : s.alpha_bar[std::size_t(t_prev)];
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    const double pa = std::sqrt(ab_prev), pb = std::sqrt(1.0 - ab_prev);
    Tensor out(z_t.shape());
    auto o = out.mutable_data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        const double e = eps_hat.raw()[i];
        const double x0 = (z_t.raw()[i] - sb * e) / sa;
        o[i] = float(pa * x0 + pb * e);
    }
    return out;
}

/// Uniformly strided sampling steps, highest first: with T train steps and
/// n substeps, step k (0-based) is round((k+1)·T/n) − 1, so the ladder always
/// starts at T − 1.
inline std::vector<int> ddim_ladder(const NoiseSchedule& s, std::size_t substeps) {
    const std::size_t T = s.steps();
    if (substeps < 1 || substeps > T) throw ConfigError("ddim_ladder: substeps must be in [1, T]");
    std::vector<int> ladder(substeps);
    for (std::size_t k = 0; k < substeps; ++k) {
        ladder[substeps - 1 - k] = int(std::llround(double(k + 1) * double(T) / double(substeps))) - 1;
    }
    return ladder;
}

struct SnrRow {
    int t;  // 0-based
    double beta;
    double alpha_bar;
    double snr;
    double sqrt_alpha_bar;
};

struct SnrReport {
    std::vector<SnrRow> rows;
    double terminal_snr = 0.0;
    bool flagged = false;  // terminal SNR > 0

    static constexpr const char* kFlag = "non-zero terminal SNR";
};

inline SnrReport snr_report(const NoiseSchedule& s) {
    SnrReport r;
    r.rows.reserve(s.steps());
    for (std::size_t t = 0; t < s.steps(); ++t) {
        r.rows.push_back({int(t), s.beta[t], s.alpha_bar[t], s.snr[t], std::sqrt(s.alpha_bar[t])});
    }
    r.terminal_snr = s.snr.back();
    r.flagged = r.terminal_snr > 0.0;
    return r;
}

// Columns t, beta, alpha_bar, snr; t is printed 1-based (t=1000 is the last step).
inline void write_snr_csv(std::ostream& os, const SnrReport& r) {
    os << "t,beta,alpha_bar,snr\n";
    os.precision(17);
    for (const auto& row : r.rows) {
        os << row.t + 1 << ',' << row.beta << ',' << row.alpha_bar << ',' << row.snr << '\n';
    }
}

}  // namespace flexifilm

#endif
