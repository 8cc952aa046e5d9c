#pragma once

#include <Eigen/Dense>
#include <numeric>

#include "council/data.hpp"
#include "council/model.hpp"

namespace council {

struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic stand-in for a pretrained feature network: images are
// area-downsampled to a small grid, flattened, passed through a fixed
// seeded Gaussian projection and squashed with tanh. Two extractors built
// with the same parameters produce bitwise-identical features.
class FeatureExtractor {
public:
    explicit FeatureExtractor(int64_t grid = 8, int64_t feature_dim = 32,
                              uint64_t seed = 0x6665617475726573ULL)
        : grid_(grid), dim_(feature_dim) {
        if (grid <= 0 || feature_dim <= 0)
            throw MetricError("FeatureExtractor: grid and feature_dim must be positive");
        const int64_t in_dim = 3 * grid_ * grid_;
        std::mt19937_64 rng(seed);
        std::normal_distribution<real> gauss(0.0, 1.0);
        proj_.resize(dim_, in_dim);
        const real s = 1.0 / std::sqrt(static_cast<real>(in_dim));
        for (int64_t r = 0; r < dim_; ++r)
            for (int64_t c = 0; c < in_dim; ++c) proj_(r, c) = gauss(rng) * s;
    }

    int64_t feature_dim() const { return dim_; }

    // images: (B, 3, H, W) in [-1, 1] -> (B, feature_dim)
    Eigen::MatrixXd operator()(const Tensor& images) const {
        if (images.ndim() != 4 || images.dim(1) != 3)
            throw MetricError("FeatureExtractor: expected (B,3,H,W), got " +
                              Tensor::shape_str(images.shape()));
        const int64_t B = images.dim(0), H = images.dim(2), W = images.dim(3);
        if (H < grid_ || W < grid_)
            throw MetricError("FeatureExtractor: image smaller than feature grid");
        const int64_t in_dim = 3 * grid_ * grid_;
        Eigen::MatrixXd flat(in_dim, B);
        for (int64_t b = 0; b < B; ++b) {
            for (int64_t c = 0; c < 3; ++c) {
                const real* plane = images.data() + (b * 3 + c) * H * W;
                for (int64_t gy = 0; gy < grid_; ++gy) {
                    const int64_t y0 = gy * H / grid_, y1 = (gy + 1) * H / grid_;
                    for (int64_t gx = 0; gx < grid_; ++gx) {
                        const int64_t x0 = gx * W / grid_, x1 = (gx + 1) * W / grid_;
                        real acc = 0;
                        for (int64_t y = y0; y < y1; ++y)
                            for (int64_t x = x0; x < x1; ++x) acc += plane[y * W + x];
                        flat((c * grid_ + gy) * grid_ + gx, b) =
                            acc / static_cast<real>((y1 - y0) * (x1 - x0));
                    }
                }
            }
        }
        Eigen::MatrixXd out = (proj_ * flat).transpose(); // (B, dim)
        return out.array().tanh().matrix();
    }

private:
    int64_t grid_, dim_;
    Eigen::MatrixXd proj_;
};

namespace detail {

inline Eigen::VectorXd feature_mean(const Eigen::MatrixXd& f) {
    return f.colwise().mean().transpose();
}

// Unbiased sample covariance with a small diagonal jitter for stability.
inline Eigen::MatrixXd feature_cov(const Eigen::MatrixXd& f) {
    const int64_t n = f.rows();
    Eigen::MatrixXd centered = f.rowwise() - f.colwise().mean();
    Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n - 1);
    cov.diagonal().array() += 1e-6;
    return cov;
}

// Symmetric positive-semidefinite square root via eigendecomposition;
// negative eigenvalues from roundoff are clamped to zero.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (m + m.transpose()));
    if (es.info() != Eigen::Success)
        throw MetricError("psd_sqrt: eigendecomposition failed");
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

// Cubic polynomial kernel (x.y / d + 1)^3 evaluated on all row pairs.
inline Eigen::MatrixXd poly3_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double d = static_cast<double>(a.cols());
    Eigen::MatrixXd k = (a * b.transpose() / d).array() + 1.0;
    return k.array().cube();
}

// Unbiased MMD^2 with the cubic kernel over the given index subsets.
inline double mmd2_unbiased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const int64_t m = x.rows(), n = y.rows();
    if (m < 2 || n < 2)
        throw MetricError("mmd2: need at least two samples per side");
    Eigen::MatrixXd kxx = poly3_kernel(x, x);
    Eigen::MatrixXd kyy = poly3_kernel(y, y);
    Eigen::MatrixXd kxy = poly3_kernel(x, y);
    const double sxx = kxx.sum() - kxx.trace();
    const double syy = kyy.sum() - kyy.trace();
    return sxx / static_cast<double>(m * (m - 1)) +
           syy / static_cast<double>(n * (n - 1)) -
           2.0 * kxy.sum() / static_cast<double>(m * n);
}

inline double mean_pairwise_l1(const std::vector<Tensor>& set, const char* who) {
    if (set.size() < 2)
        throw std::invalid_argument(std::string(who) + ": needs at least two tensors");
    for (const auto& t : set)
        if (t.shape() != set[0].shape())
            throw ShapeError(std::string(who) + ": tensor shape mismatch");
    double acc = 0;
    int64_t pairs = 0;
    for (size_t i = 0; i < set.size(); ++i)
        for (size_t j = i + 1; j < set.size(); ++j) {
            double d = 0;
            for (int64_t k = 0; k < set[i].numel(); ++k)
                d += std::abs(set[i][k] - set[j][k]);
            acc += d / static_cast<double>(set[i].numel());
            ++pairs;
        }
    return acc / static_cast<double>(pairs);
}

} // namespace detail

// Frechet distance between Gaussians fitted to the two feature sets:
// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2).
inline double compute_fid(const Eigen::MatrixXd& fa, const Eigen::MatrixXd& fb) {
    if (fa.cols() != fb.cols())
        throw MetricError("compute_fid: feature dimension mismatch");
    if (fa.rows() < 2 || fb.rows() < 2)
        throw MetricError("compute_fid: need at least two samples per side");
    Eigen::VectorXd mu_a = detail::feature_mean(fa), mu_b = detail::feature_mean(fb);
    Eigen::MatrixXd sa = detail::feature_cov(fa), sb = detail::feature_cov(fb);
    Eigen::MatrixXd sa_half = detail::psd_sqrt(sa);
    Eigen::MatrixXd inner = detail::psd_sqrt(sa_half * sb * sa_half);
    double fid = (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() -
                 2.0 * inner.trace();
    return std::max(fid, 0.0);
}

struct KidResult {
    double mean = 0;
    double stderr_ = 0;
    int64_t subset_size = 0;
    int64_t n_subsets = 0;
};

// Kernel inception distance: unbiased MMD^2 with the cubic polynomial
// kernel, averaged over random subsets, with the standard error across
// subsets for separation checks.
inline KidResult compute_kid(const Eigen::MatrixXd& fa, const Eigen::MatrixXd& fb,
                             int64_t subset_size = 100, int64_t n_subsets = 10,
                             uint64_t seed = 0x6b69647365656473ULL) {
    if (fa.cols() != fb.cols())
        throw MetricError("compute_kid: feature dimension mismatch");
    if (n_subsets < 1) throw MetricError("compute_kid: n_subsets must be >= 1");
    const int64_t m = std::min<int64_t>(subset_size, std::min(fa.rows(), fb.rows()));
    if (m < 2) throw MetricError("compute_kid: need at least two samples per side");

    std::mt19937_64 rng(seed);
    auto subset = [&](const Eigen::MatrixXd& f) {
        std::vector<int64_t> idx(f.rows());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        Eigen::MatrixXd out(m, f.cols());
        for (int64_t i = 0; i < m; ++i) out.row(i) = f.row(idx[i]);
        return out;
    };

    std::vector<double> vals(n_subsets);
    for (int64_t s = 0; s < n_subsets; ++s)
        vals[s] = detail::mmd2_unbiased(subset(fa), subset(fb));
    const double mean =
        std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(n_subsets);
    double var = 0;
    for (double v : vals) var += (v - mean) * (v - mean);
    const double se = n_subsets > 1
                          ? std::sqrt(var / static_cast<double>(n_subsets - 1)) /
                                std::sqrt(static_cast<double>(n_subsets))
                          : 0.0;
    return {mean, se, m, n_subsets};
}

// Mean pairwise per-pixel L1 between translations of the same inputs under
// different entropy draws. Zero means the generator ignores z.
inline double compute_diversity(const std::vector<Tensor>& outputs_per_z) {
    return detail::mean_pairwise_l1(outputs_per_z, "compute_diversity");
}

// Mean pairwise per-pixel L1 across members translating the same inputs with
// matched entropy draws. Smaller means the council agrees more.
inline double compute_agreement(const std::vector<Tensor>& outputs_per_member) {
    if (outputs_per_member.size() < 2)
        throw std::invalid_argument("compute_agreement: needs at least two members");
    return detail::mean_pairwise_l1(outputs_per_member, "compute_agreement");
}

struct KidPoint {
    int64_t iteration = 0;
    KidResult kid;
};

// Writes a tab-delimited table of KID versus iteration and renders a simple
// curve with stderr whiskers. Points must be sorted by iteration.
inline void kid_vs_iteration_report(const std::vector<KidPoint>& points,
                                    const fs::path& table_path,
                                    const fs::path& plot_path) {
    if (points.empty()) throw MetricError("kid_vs_iteration_report: no points");
    for (size_t i = 1; i < points.size(); ++i)
        if (points[i].iteration <= points[i - 1].iteration)
            throw MetricError("kid_vs_iteration_report: iterations must be increasing");

    if (table_path.has_parent_path()) fs::create_directories(table_path.parent_path());
    std::ofstream table(table_path);
    if (!table) throw MetricError("cannot write " + table_path.string());
    table << "iteration\tkid_mean\tkid_stderr\n";
    table.precision(10);
    for (const auto& p : points)
        table << p.iteration << '\t' << p.kid.mean << '\t' << p.kid.stderr_ << '\n';

    const int W = 640, H = 400, pad = 50;
    cv::Mat canvas(H, W, CV_8UC3, cv::Scalar(255, 255, 255));
    double lo = points[0].kid.mean, hi = points[0].kid.mean;
    for (const auto& p : points) {
        lo = std::min(lo, p.kid.mean - p.kid.stderr_);
        hi = std::max(hi, p.kid.mean + p.kid.stderr_);
    }
    if (hi - lo < 1e-12) hi = lo + 1e-12;
    const double it_lo = static_cast<double>(points.front().iteration);
    const double it_hi = static_cast<double>(points.back().iteration);
    auto px = [&](double it) {
        double t = it_hi > it_lo ? (it - it_lo) / (it_hi - it_lo) : 0.5;
        return pad + static_cast<int>(t * (W - 2 * pad));
    };
    auto py = [&](double v) {
        return H - pad - static_cast<int>((v - lo) / (hi - lo) * (H - 2 * pad));
    };
    cv::line(canvas, {pad, H - pad}, {W - pad, H - pad}, {0, 0, 0});
    cv::line(canvas, {pad, pad}, {pad, H - pad}, {0, 0, 0});
    cv::Point prev;
    for (size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        cv::Point pt(px(static_cast<double>(p.iteration)), py(p.kid.mean));
        cv::line(canvas, {pt.x, py(p.kid.mean - p.kid.stderr_)},
                 {pt.x, py(p.kid.mean + p.kid.stderr_)}, {180, 180, 180});
        cv::circle(canvas, pt, 3, {0, 0, 200}, cv::FILLED);
        if (i) cv::line(canvas, prev, pt, {0, 0, 200});
        prev = pt;
        cv::putText(canvas, std::to_string(p.iteration), {pt.x - 12, H - pad + 18},
                    cv::FONT_HERSHEY_SIMPLEX, 0.35, {0, 0, 0});
    }
    {
        std::ostringstream os;
        os.precision(4);
        os << "kid [" << lo << ", " << hi << "]";
        cv::putText(canvas, os.str(), {pad, pad - 12}, cv::FONT_HERSHEY_SIMPLEX, 0.45,
                    {0, 0, 0});
    }
    if (plot_path.has_parent_path()) fs::create_directories(plot_path.parent_path());
    if (!cv::imwrite(plot_path.string(), canvas))
        throw MetricError("cannot write " + plot_path.string());
}

} // namespace council
