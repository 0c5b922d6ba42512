#ifndef FLEXIFILM_EVAL_HPP
#define FLEXIFILM_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "flexifilm/ops.hpp"
#include "flexifilm/rng.hpp"
#include "flexifilm/tensor.hpp"

// Desk-scale metrics. The feature extractor is a fixed random conv stack
// (never trained); metrics built on it are reported as "-lite".

namespace flexifilm {

inline constexpr std::uint64_t kFeatureSeed = 0xfea7u;
inline constexpr double kPsnrCap = 99.0;
inline constexpr double kDefaultPeak = 2.0;  // pixels span [-1, 1]
inline constexpr std::size_t kSsimWindow = 8;
inline constexpr std::size_t kVideoFeatureDim = 16;

/// conv5x5/2 (8) -> relu -> conv3x3/2 (16) -> relu -> 4x4 average pool,
/// giving 256 features per frame.
class FeatureExtractor {
public:
    FeatureExtractor() {
        Rng rng(kFeatureSeed);
        w1_ = draw(rng, kC1 * 3 * 25, 1.0 / std::sqrt(3.0 * 25));
        w2_ = draw(rng, kC2 * kC1 * 9, 1.0 / std::sqrt(double(kC1) * 9));
        proj_ = draw(rng, kVideoFeatureDim * 2 * frame_dim(), 1.0 / std::sqrt(2.0 * frame_dim()));
    }

    static constexpr std::size_t frame_dim() { return kC2 * kPool * kPool; }

    /// frame [3, H, W] -> 256 features
    std::vector<double> frame_features(const float* px, std::size_t h, std::size_t w) const {
        if (h < 8 || w < 8) throw ShapeError("feature extractor: frame smaller than 8x8");
        std::size_t h1 = 0, w1 = 0, h2 = 0, w2 = 0;
        std::vector<double> in(px, px + 3 * h * w);
        const auto a = conv_relu(in, 3, h, w, w1_, kC1, 5, 2, 2, h1, w1);
        const auto b = conv_relu(a, kC1, h1, w1, w2_, kC2, 3, 2, 1, h2, w2);
        std::vector<double> out(frame_dim(), 0.0);
        for (std::size_t c = 0; c < kC2; ++c)
            for (std::size_t by = 0; by < kPool; ++by)
                for (std::size_t bx = 0; bx < kPool; ++bx) {
                    const std::size_t y0 = by * h2 / kPool, y1 = std::max(y0 + 1, (by + 1) * h2 / kPool);
                    const std::size_t x0 = bx * w2 / kPool, x1 = std::max(x0 + 1, (bx + 1) * w2 / kPool);
                    double s = 0.0;
                    for (std::size_t y = y0; y < y1; ++y)
                        for (std::size_t x = x0; x < x1; ++x) s += b[(c * h2 + y) * w2 + x];
                    out[(c * kPool + by) * kPool + bx] = s / double((y1 - y0) * (x1 - x0));
                }
        return out;
    }

    /// video [F, 3, H, W] -> one feature row per frame
    std::vector<std::vector<double>> video_frame_features(const Tensor& video) const {
        check_video(video);
        const std::size_t f = video.extent(0), h = video.extent(2), w = video.extent(3);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < f; ++i) rows.push_back(frame_features(video.raw() + i * 3 * h * w, h, w));
        return rows;
    }

    /// Spatiotemporal pooling: mean frame features and mean absolute
    /// adjacent-frame change, projected to kVideoFeatureDim.
    std::vector<double> video_features(const Tensor& video) const {
        const auto rows = video_frame_features(video);
        const std::size_t d = frame_dim();
        std::vector<double> pooled(2 * d, 0.0);
        for (const auto& r : rows)
            for (std::size_t j = 0; j < d; ++j) pooled[j] += r[j] / double(rows.size());
        for (std::size_t i = 1; i < rows.size(); ++i)
            for (std::size_t j = 0; j < d; ++j) pooled[d + j] += std::abs(rows[i][j] - rows[i - 1][j]) / double(rows.size() - 1);
        std::vector<double> out(kVideoFeatureDim, 0.0);
        for (std::size_t k = 0; k < kVideoFeatureDim; ++k)
            for (std::size_t j = 0; j < 2 * d; ++j) out[k] += proj_[k * 2 * d + j] * pooled[j];
        return out;
    }

    static void check_video(const Tensor& v) {
        if (v.rank() != 4 || v.extent(1) != 3) throw ShapeError("expected [frames, 3, H, W] video");
    }

private:
    static constexpr std::size_t kC1 = 8, kC2 = 16, kPool = 4;

    static std::vector<double> draw(Rng& rng, std::size_t n, double sd) {
        std::vector<double> w(n);
        for (auto& v : w) v = rng.normal() * sd;
        return w;
    }

    static std::vector<double> conv_relu(const std::vector<double>& in, std::size_t cin, std::size_t h, std::size_t w,
                                         const std::vector<double>& weight, std::size_t cout, std::size_t k,
                                         std::size_t stride, std::size_t pad, std::size_t& ho, std::size_t& wo) {
        ho = (h + 2 * pad - k) / stride + 1;
        wo = (w + 2 * pad - k) / stride + 1;
        std::vector<double> out(cout * ho * wo, 0.0);
        for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t y = 0; y < ho; ++y)
                for (std::size_t x = 0; x < wo; ++x) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < cin; ++c)
                        for (std::size_t ky = 0; ky < k; ++ky) {
                            const long iy = long(y * stride + ky) - long(pad);
                            if (iy < 0 || iy >= long(h)) continue;
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const long ix = long(x * stride + kx) - long(pad);
                                if (ix < 0 || ix >= long(w)) continue;
                                s += weight[((o * cin + c) * k + ky) * k + kx] * in[(c * h + std::size_t(iy)) * w + std::size_t(ix)];
                            }
                        }
                    out[(o * ho + y) * wo + x] = std::max(0.0, s);
                }
        return out;
    }

    std::vector<double> w1_, w2_, proj_;
};

inline const FeatureExtractor& default_extractor() {
    static const FeatureExtractor fx;
    return fx;
}

/// Cosine of mean-centred feature vectors; two flat vectors count as equal.
inline double centred_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= double(a.size());
    mb /= double(b.size());
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += (a[i] - ma) * (b[i] - mb);
        aa += (a[i] - ma) * (a[i] - ma);
        bb += (b[i] - mb) * (b[i] - mb);
    }
    if (aa == 0.0 || bb == 0.0) return aa == bb ? 1.0 : 0.0;
    return ab / std::sqrt(aa * bb);
}

/// Mean adjacent-frame cosine of extractor features ("consistency-lite").
inline double consistency_score(const Tensor& video, const FeatureExtractor& fx = default_extractor()) {
    FeatureExtractor::check_video(video);
    if (video.extent(0) < 2) throw ContractError("consistency_score: need at least two frames");
    const auto rows = fx.video_frame_features(video);
    double s = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) s += centred_cosine(rows[i - 1], rows[i]);
    return s / double(rows.size() - 1);
}

inline double psnr(const Tensor& a, const Tensor& b, double peak = kDefaultPeak) {
    require_same_shape(a, b, "psnr");
    if (!(peak > 0.0)) throw ConfigError("psnr: peak must be positive");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double d = double(a.raw()[i]) - b.raw()[i];
        mse += d * d;
    }
    mse /= double(a.numel());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

/// Mean local SSIM over every 8x8 window (stride 1) of every channel.
/// Frames are [C, H, W] or [H, W].
inline double ssim(const Tensor& a, const Tensor& b, double peak = kDefaultPeak) {
    require_same_shape(a, b, "ssim");
    if (a.rank() != 2 && a.rank() != 3) throw ShapeError("ssim: expected [C,H,W] or [H,W] frame");
    const std::size_t c = a.rank() == 3 ? a.extent(0) : 1;
    const std::size_t h = a.extent(a.rank() - 2), w = a.extent(a.rank() - 1);
    const std::size_t k = kSsimWindow;
    if (h < k || w < k) throw ShapeError("ssim: frame smaller than the 8x8 window");
    const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
    const double n = double(k * k);
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t ch = 0; ch < c; ++ch) {
        const float* pa = a.raw() + ch * h * w;
        const float* pb = b.raw() + ch * h * w;
        for (std::size_t y = 0; y + k <= h; ++y)
            for (std::size_t x = 0; x + k <= w; ++x) {
                double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                for (std::size_t dy = 0; dy < k; ++dy)
                    for (std::size_t dx = 0; dx < k; ++dx) {
                        const double va = pa[(y + dy) * w + x + dx], vb = pb[(y + dy) * w + x + dx];
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                const double ma = sa / n, mb = sb / n;
                const double va = saa / n - ma * ma, vb = sbb / n - mb * mb, cov = sab / n - ma * mb;
                total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++windows;
            }
    }
    return total / double(windows);
}

/// Frame-averaged PSNR/SSIM between two equal-length videos [F, C, H, W].
inline double video_psnr(const Tensor& a, const Tensor& b, double peak = kDefaultPeak) {
    require_same_shape(a, b, "video_psnr");
    const std::size_t f = a.extent(0), per = a.numel() / f;
    double s = 0.0;
    for (std::size_t i = 0; i < f; ++i) {
        Shape fs(a.shape().begin() + 1, a.shape().end());
        s += psnr(Tensor(fs, std::vector<float>(a.raw() + i * per, a.raw() + (i + 1) * per)),
                  Tensor(fs, std::vector<float>(b.raw() + i * per, b.raw() + (i + 1) * per)), peak);
    }
    return s / double(f);
}

inline double video_ssim(const Tensor& a, const Tensor& b, double peak = kDefaultPeak) {
    require_same_shape(a, b, "video_ssim");
    const std::size_t f = a.extent(0), per = a.numel() / f;
    double s = 0.0;
    for (std::size_t i = 0; i < f; ++i) {
        Shape fs(a.shape().begin() + 1, a.shape().end());
        s += ssim(Tensor(fs, std::vector<float>(a.raw() + i * per, a.raw() + (i + 1) * per)),
                  Tensor(fs, std::vector<float>(b.raw() + i * per, b.raw() + (i + 1) * per)), peak);
    }
    return s / double(f);
}

struct FrechetResult {
    double distance = 0.0;
    bool regularized = false;  // a covariance was singular and got +1e-6·I
};

/// |μa − μb|² + tr(Σa + Σb − 2(Σa Σb)^½), rows are samples. The cross term
/// uses tr((Σa^½ Σb Σa^½)^½), which only needs symmetric eigensolves.
inline FrechetResult frechet_lite(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.cols() != b.cols()) throw ShapeError("frechet_lite: feature dimensions differ");
    const Eigen::Index d = a.cols();
    if (a.rows() < d + 1 || b.rows() < d + 1) throw ContractError("frechet_lite: each set needs at least dim+1 samples");
    auto moments = [](const Eigen::MatrixXd& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
        mu = x.colwise().mean().transpose();
        const Eigen::MatrixXd c = x.rowwise() - mu.transpose();
        cov = (c.transpose() * c) / double(x.rows() - 1);
    };
    Eigen::VectorXd mu_a, mu_b;
    Eigen::MatrixXd sa, sb;
    moments(a, mu_a, sa);
    moments(b, mu_b, sb);

    FrechetResult out;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(sa), eb(sb);
    const double tiny = 1e-12;
    if (ea.eigenvalues().minCoeff() < tiny || eb.eigenvalues().minCoeff() < tiny) {
        out.regularized = true;
        sa += 1e-6 * Eigen::MatrixXd::Identity(d, d);
        sb += 1e-6 * Eigen::MatrixXd::Identity(d, d);
        ea.compute(sa);
    }
    const Eigen::VectorXd la = ea.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd sqrt_a = ea.eigenvectors() * la.asDiagonal() * ea.eigenvectors().transpose();
    const Eigen::MatrixXd m = sqrt_a * sb * sqrt_a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    const double cross = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    out.distance = std::max(0.0, (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * cross);
    return out;
}

inline Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ShapeError("to_matrix: no rows");
    Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
    return m;
}

/// Sliding windows of `window` frames (stride 1) from one video, one pooled
/// feature row each; the sample sets fvd-lite compares.
inline std::vector<std::vector<double>> windowed_video_features(const Tensor& video, std::size_t window,
                                                                const FeatureExtractor& fx = default_extractor()) {
    FeatureExtractor::check_video(video);
    if (window < 2 || video.extent(0) < window) throw ContractError("fvd-lite: video shorter than the window");
    std::vector<std::vector<double>> rows;
    for (std::size_t s = 0; s + window <= video.extent(0); ++s) {
        std::vector<std::size_t> idx(window);
        for (std::size_t i = 0; i < window; ++i) idx[i] = s + i;
        rows.push_back(fx.video_features(gather_rows(video, idx)));
    }
    return rows;
}

}  // namespace flexifilm

#endif
