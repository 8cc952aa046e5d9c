#pragma once

#include <filesystem>
#include <iostream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "council/config.hpp"
#include "council/tensor.hpp"

namespace council {

namespace fs = std::filesystem;

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AugmentationSpec {
    bool enabled = true;
    double hflip_p = 0.5;
    double hue_max = 0.0;          // fraction of the hue circle
    double grayscale_p = 0.0;
    double rotation_max_deg = 0.0;
    double translate_frac = 0.0;
    double perspective_distortion = 0.0;
    double perspective_p = 0.0;

    static AugmentationSpec from_config(const CouncilConfig& c) {
        AugmentationSpec s;
        s.enabled = c.aug_enabled;
        s.hflip_p = c.hflip_p;
        s.hue_max = c.hue_max;
        s.grayscale_p = c.grayscale_p;
        s.rotation_max_deg = c.rotation_max_deg;
        s.translate_frac = c.translate_frac;
        s.perspective_distortion = c.perspective_distortion;
        s.perspective_p = c.perspective_p;
        return s;
    }
};

// Shuffle/epoch position of a dataset, for exact training resume.
struct StreamState {
    std::string rng;
    std::vector<int64_t> perm;
    int64_t cursor = 0;
    int64_t count = 0;
};

namespace detail {

inline std::string rng_to_string(const std::mt19937_64& rng) {
    std::ostringstream os;
    os << rng;
    return os.str();
}

inline void rng_from_string(std::mt19937_64& rng, const std::string& s) {
    std::istringstream is(s);
    is >> rng;
    if (!is) throw DataError("corrupt RNG state");
}

} // namespace detail

// Unpaired single-domain image folder, decoded into memory, resized and
// normalized to [-1, 1] at serving time. Augmentation draws come from the
// dataset's own RNG stream so that the two domains stay independent.
class DomainDataset {
public:
    enum class Tag { Source, Target };

    DomainDataset() = default;

    static DomainDataset load(const fs::path& root, Tag tag, int64_t resolution,
                              AugmentationSpec spec, uint64_t seed) {
        DomainDataset d;
        d.root_ = root;
        d.tag_ = tag;
        d.resolution_ = resolution;
        d.spec_ = spec;
        d.rng_.seed(seed);
        if (!fs::is_directory(root)) throw DataError("dataset folder not found: " + root.string());

        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(root))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end()); // lexicographic before shuffling

        int64_t skipped = 0;
        for (const auto& f : files) {
            cv::Mat img = cv::imread(f.string(), cv::IMREAD_COLOR);
            if (img.empty()) {
                std::cerr << "warning: skipping undecodable file " << f << "\n";
                ++skipped;
                continue;
            }
            d.images_.push_back(img);
        }
        if (skipped) std::cerr << "warning: skipped " << skipped << " undecodable file(s) in "
                               << root << "\n";
        if (d.images_.empty()) throw DataError("no decodable images in: " + root.string());
        d.reshuffle();
        return d;
    }

    // In-memory construction; used by the toy generator and tests.
    static DomainDataset from_images(std::vector<cv::Mat> images, Tag tag, int64_t resolution,
                                     AugmentationSpec spec, uint64_t seed) {
        if (images.empty()) throw DataError("dataset is empty");
        DomainDataset d;
        d.tag_ = tag;
        d.resolution_ = resolution;
        d.spec_ = spec;
        d.rng_.seed(seed);
        d.images_ = std::move(images);
        d.reshuffle();
        return d;
    }

    int64_t count() const { return static_cast<int64_t>(images_.size()); }
    int64_t resolution() const { return resolution_; }
    Tag tag() const { return tag_; }
    AugmentationSpec& augmentation() { return spec_; }
    const fs::path& root() const { return root_; }

    // (batch, 3, H, W), RGB, values in [-1, 1]. Wraps around epochs.
    Tensor next_batch(int64_t batch_size) {
        Tensor out({batch_size, 3, resolution_, resolution_});
        for (int64_t b = 0; b < batch_size; ++b) {
            if (cursor_ >= count()) reshuffle();
            cv::Mat img = serve(images_[static_cast<size_t>(perm_[cursor_++])]);
            const int64_t hw = resolution_ * resolution_;
            for (int64_t y = 0; y < resolution_; ++y)
                for (int64_t x = 0; x < resolution_; ++x) {
                    cv::Vec3b px = img.at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x));
                    // OpenCV is BGR; serve channels as RGB
                    out[(b * 3 + 0) * hw + y * resolution_ + x] = px[2] / 127.5 - 1.0;
                    out[(b * 3 + 1) * hw + y * resolution_ + x] = px[1] / 127.5 - 1.0;
                    out[(b * 3 + 2) * hw + y * resolution_ + x] = px[0] / 127.5 - 1.0;
                }
        }
        return out;
    }

    StreamState stream_state() const {
        return {detail::rng_to_string(rng_), perm_, cursor_, count()};
    }

    void restore_stream(const StreamState& s) {
        if (s.count != count())
            throw DataError("checkpoint dataset size " + std::to_string(s.count) +
                            " does not match loaded dataset size " + std::to_string(count()));
        detail::rng_from_string(rng_, s.rng);
        perm_ = s.perm;
        cursor_ = s.cursor;
    }

private:
    void reshuffle() {
        perm_.resize(images_.size());
        std::iota(perm_.begin(), perm_.end(), 0);
        for (size_t i = perm_.size(); i > 1; --i) {
            std::uniform_int_distribution<size_t> u(0, i - 1);
            std::swap(perm_[i - 1], perm_[u(rng_)]);
        }
        cursor_ = 0;
    }

    // Augment (geometric ops last), resize, 8-bit BGR out. All random draws
    // happen unconditionally to keep the stream aligned across spec changes.
    cv::Mat serve(const cv::Mat& orig) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_real_distribution<double> sym(-1.0, 1.0);
        const double r_flip = u01(rng_);
        const double r_hue = sym(rng_);
        const double r_gray = u01(rng_);
        const double r_rot = sym(rng_);
        const double r_tx = sym(rng_);
        const double r_ty = sym(rng_);
        const double r_persp = u01(rng_);
        double corners[8];
        for (double& c : corners) c = u01(rng_);

        cv::Mat img = orig;
        if (spec_.enabled) {
            if (spec_.hflip_p > 0 && r_flip < spec_.hflip_p) {
                cv::Mat flipped;
                cv::flip(img, flipped, 1);
                img = flipped;
            }
            if (spec_.hue_max > 0) {
                cv::Mat hsv;
                cv::cvtColor(img, hsv, cv::COLOR_BGR2HSV);
                int shift = static_cast<int>(std::lround(r_hue * spec_.hue_max * 180.0));
                for (int y = 0; y < hsv.rows; ++y)
                    for (int x = 0; x < hsv.cols; ++x) {
                        auto& px = hsv.at<cv::Vec3b>(y, x);
                        px[0] = static_cast<uchar>(((px[0] + shift) % 180 + 180) % 180);
                    }
                cv::cvtColor(hsv, img, cv::COLOR_HSV2BGR);
            }
            if (spec_.grayscale_p > 0 && r_gray < spec_.grayscale_p) {
                cv::Mat gray;
                cv::cvtColor(img, gray, cv::COLOR_BGR2GRAY);
                cv::cvtColor(gray, img, cv::COLOR_GRAY2BGR);
            }
            if (spec_.rotation_max_deg > 0) {
                cv::Mat rot = cv::getRotationMatrix2D(
                    cv::Point2f(img.cols / 2.0f, img.rows / 2.0f),
                    r_rot * spec_.rotation_max_deg, 1.0);
                cv::Mat dst;
                cv::warpAffine(img, dst, rot, img.size(), cv::INTER_LINEAR,
                               cv::BORDER_CONSTANT, cv::Scalar(0, 0, 0));
                img = dst;
            }
            if (spec_.translate_frac > 0) {
                cv::Mat shift = (cv::Mat_<double>(2, 3) << 1, 0,
                                 r_tx * spec_.translate_frac * img.cols, 0, 1,
                                 r_ty * spec_.translate_frac * img.rows);
                cv::Mat dst;
                cv::warpAffine(img, dst, shift, img.size(), cv::INTER_LINEAR,
                               cv::BORDER_CONSTANT, cv::Scalar(0, 0, 0));
                img = dst;
            }
            if (spec_.perspective_p > 0 && r_persp < spec_.perspective_p &&
                spec_.perspective_distortion > 0) {
                const float w = static_cast<float>(img.cols), h = static_cast<float>(img.rows);
                const float d = static_cast<float>(spec_.perspective_distortion);
                cv::Point2f src[4] = {{0, 0}, {w, 0}, {w, h}, {0, h}};
                cv::Point2f dstpts[4] = {
                    {w * d * static_cast<float>(corners[0]), h * d * static_cast<float>(corners[1])},
                    {w - w * d * static_cast<float>(corners[2]), h * d * static_cast<float>(corners[3])},
                    {w - w * d * static_cast<float>(corners[4]), h - h * d * static_cast<float>(corners[5])},
                    {w * d * static_cast<float>(corners[6]), h - h * d * static_cast<float>(corners[7])}};
                cv::Mat m = cv::getPerspectiveTransform(src, dstpts);
                cv::Mat dst;
                cv::warpPerspective(img, dst, m, img.size(), cv::INTER_LINEAR,
                                    cv::BORDER_CONSTANT, cv::Scalar(0, 0, 0));
                img = dst;
            }
        }
        cv::Mat resized;
        if (img.cols != resolution_ || img.rows != resolution_)
            cv::resize(img, resized, cv::Size(static_cast<int>(resolution_),
                                              static_cast<int>(resolution_)),
                       0, 0, cv::INTER_LINEAR);
        else
            resized = img.clone();
        return resized;
    }

    fs::path root_;
    Tag tag_ = Tag::Source;
    int64_t resolution_ = 64;
    AugmentationSpec spec_;
    std::vector<cv::Mat> images_;
    std::vector<int64_t> perm_;
    int64_t cursor_ = 0;
    std::mt19937_64 rng_;
};

// ---- synthetic two-domain data ---------------------------------------------

enum class ToyKind { OutlineVsFilled, TwoColorPalettes };

inline ToyKind toy_kind_from_string(const std::string& s) {
    if (s == "outline-vs-filled-shapes" || s == "outline-vs-filled") return ToyKind::OutlineVsFilled;
    if (s == "two-color-palettes") return ToyKind::TwoColorPalettes;
    throw ConfigError("unknown toy dataset kind '" + s +
                      "' (valid: outline-vs-filled-shapes, two-color-palettes)");
}

// Renders paired scene structure (one random convex-ish polygon per image,
// identical across domains) with domain-specific styling. Rendered at 4x and
// downsampled for soft edges.
inline std::pair<std::vector<cv::Mat>, std::vector<cv::Mat>>
render_toy_images(ToyKind kind, int64_t n, int64_t resolution, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int R = static_cast<int>(resolution) * 4;

    std::vector<cv::Mat> domain_s, domain_t;
    for (int64_t i = 0; i < n; ++i) {
        const int n_vertices = 3 + static_cast<int>(u01(rng) * 4); // 3..6
        const double cx = R * (0.3 + 0.4 * u01(rng));
        const double cy = R * (0.3 + 0.4 * u01(rng));
        const double radius = R * (0.15 + 0.2 * u01(rng));
        const double phase = u01(rng) * 2 * M_PI;
        std::vector<cv::Point> poly;
        for (int v = 0; v < n_vertices; ++v) {
            double ang = phase + 2 * M_PI * v / n_vertices;
            double r = radius * (0.75 + 0.25 * u01(rng));
            poly.emplace_back(static_cast<int>(cx + r * std::cos(ang)),
                              static_cast<int>(cy + r * std::sin(ang)));
        }
        const int shade = 30 + static_cast<int>(u01(rng) * 60);

        cv::Mat a(R, R, CV_8UC3, cv::Scalar(235, 235, 235));
        cv::Mat b(R, R, CV_8UC3, cv::Scalar(235, 235, 235));
        if (kind == ToyKind::OutlineVsFilled) {
            cv::polylines(a, std::vector<std::vector<cv::Point>>{poly}, true,
                          cv::Scalar(shade, shade, shade), std::max(1, R / 32));
            cv::fillPoly(b, std::vector<std::vector<cv::Point>>{poly},
                         cv::Scalar(shade, shade, shade));
        } else {
            // same filled shape, different palettes (warm vs cold)
            cv::fillPoly(a, std::vector<std::vector<cv::Point>>{poly},
                         cv::Scalar(40, 60, 180 + shade / 3)); // BGR: reddish
            cv::fillPoly(b, std::vector<std::vector<cv::Point>>{poly},
                         cv::Scalar(180 + shade / 3, 80, 40)); // BGR: bluish
        }
        cv::Mat as, bs;
        cv::resize(a, as, cv::Size(static_cast<int>(resolution), static_cast<int>(resolution)),
                   0, 0, cv::INTER_AREA);
        cv::resize(b, bs, cv::Size(static_cast<int>(resolution), static_cast<int>(resolution)),
                   0, 0, cv::INTER_AREA);
        domain_s.push_back(as);
        domain_t.push_back(bs);
    }
    return {domain_s, domain_t};
}

// Writes PNG folders (the same layout real datasets use) and returns the
// loaded dataset pair.
inline std::pair<DomainDataset, DomainDataset>
make_toy_dataset(ToyKind kind, int64_t n, int64_t resolution, uint64_t seed,
                 const fs::path& dir_s, const fs::path& dir_t,
                 AugmentationSpec spec = AugmentationSpec{}) {
    auto [imgs_s, imgs_t] = render_toy_images(kind, n, resolution, seed);
    fs::create_directories(dir_s);
    fs::create_directories(dir_t);
    char name[32];
    for (int64_t i = 0; i < n; ++i) {
        std::snprintf(name, sizeof(name), "%06lld.png", static_cast<long long>(i));
        cv::imwrite((dir_s / name).string(), imgs_s[static_cast<size_t>(i)]);
        cv::imwrite((dir_t / name).string(), imgs_t[static_cast<size_t>(i)]);
    }
    return {DomainDataset::load(dir_s, DomainDataset::Tag::Source, resolution, spec, seed + 1),
            DomainDataset::load(dir_t, DomainDataset::Tag::Target, resolution, spec, seed + 2)};
}

// ---- tensor <-> image helpers ----------------------------------------------

inline cv::Mat tensor_to_mat(const Tensor& t, int64_t index) {
    const int64_t C = t.dim(1), H = t.dim(2), W = t.dim(3), hw = H * W;
    cv::Mat img(static_cast<int>(H), static_cast<int>(W), CV_8UC3);
    auto to8 = [](real v) {
        return static_cast<uchar>(std::clamp((v + 1.0) * 127.5, 0.0, 255.0));
    };
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
            auto& px = img.at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x));
            if (C == 1) {
                uchar g = static_cast<uchar>(
                    std::clamp(t[index * hw + y * W + x] * 255.0, 0.0, 255.0));
                px = {g, g, g}; // mask channel rendered as grayscale in [0,1]
            } else {
                px[2] = to8(t[(index * 3 + 0) * hw + y * W + x]);
                px[1] = to8(t[(index * 3 + 1) * hw + y * W + x]);
                px[0] = to8(t[(index * 3 + 2) * hw + y * W + x]);
            }
        }
    return img;
}

} // namespace council
