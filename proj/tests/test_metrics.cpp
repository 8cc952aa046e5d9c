#include <catch2/catch_amalgamated.hpp>

#include "council/metrics.hpp"

using namespace council;

namespace {

Eigen::MatrixXd gaussian_samples(int64_t n, int64_t d, double mean, double stddev,
                                 uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(mean, stddev);
    Eigen::MatrixXd out(n, d);
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < d; ++j) out(i, j) = g(rng);
    return out;
}

// Brute-force unbiased MMD^2 with the cubic kernel, written as the direct
// double loop so it shares no code with the implementation under test.
double mmd2_reference(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const double d = static_cast<double>(x.cols());
    auto k = [&](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
        double v = a.dot(b) / d + 1.0;
        return v * v * v;
    };
    double sxx = 0, syy = 0, sxy = 0;
    for (int64_t i = 0; i < x.rows(); ++i)
        for (int64_t j = 0; j < x.rows(); ++j)
            if (i != j) sxx += k(x.row(i), x.row(j));
    for (int64_t i = 0; i < y.rows(); ++i)
        for (int64_t j = 0; j < y.rows(); ++j)
            if (i != j) syy += k(y.row(i), y.row(j));
    for (int64_t i = 0; i < x.rows(); ++i)
        for (int64_t j = 0; j < y.rows(); ++j) sxy += k(x.row(i), y.row(j));
    const double m = static_cast<double>(x.rows()), n = static_cast<double>(y.rows());
    return sxx / (m * (m - 1)) + syy / (n * (n - 1)) - 2.0 * sxy / (m * n);
}

} // namespace

TEST_CASE("fid: unit-variance 1-d gaussians three apart score 9") {
    // analytic: |0-3|^2 + (1 + 1 - 2*sqrt(1*1)) = 9
    auto a = gaussian_samples(10000, 1, 0.0, 1.0, 1);
    auto b = gaussian_samples(10000, 1, 3.0, 1.0, 2);
    double fid = compute_fid(a, b);
    CHECK(fid == Catch::Approx(9.0).epsilon(0.05));
}

TEST_CASE("fid: identical sets score zero, order does not matter") {
    auto a = gaussian_samples(500, 4, 0.0, 1.0, 3);
    CHECK(compute_fid(a, a) == Catch::Approx(0.0).margin(1e-8));

    auto b = gaussian_samples(500, 4, 1.0, 2.0, 4);
    CHECK(compute_fid(a, b) == Catch::Approx(compute_fid(b, a)).margin(1e-8));
    CHECK(compute_fid(a, b) > 0.0);

    CHECK_THROWS_AS(compute_fid(gaussian_samples(1, 4, 0, 1, 5), b), MetricError);
    CHECK_THROWS_AS(compute_fid(gaussian_samples(5, 3, 0, 1, 5), b), MetricError);
}

TEST_CASE("kid: single full-set subset matches the brute-force estimator") {
    auto x = gaussian_samples(8, 3, 0.0, 1.0, 6);
    auto y = gaussian_samples(8, 3, 0.5, 1.0, 7);
    KidResult r = compute_kid(x, y, /*subset_size=*/1000, /*n_subsets=*/1);
    CHECK(r.subset_size == 8);
    CHECK(r.mean == Catch::Approx(mmd2_reference(x, y)).margin(1e-10));
}

TEST_CASE("kid: matched distributions score near zero; separated sets do not") {
    auto a = gaussian_samples(200, 4, 0.0, 1.0, 8);
    auto a2 = gaussian_samples(200, 4, 0.0, 1.0, 28);
    KidResult same = compute_kid(a, a2, 50, 10);
    CHECK(std::abs(same.mean) < 0.1);

    auto b = gaussian_samples(200, 4, 2.0, 1.0, 9);
    KidResult apart = compute_kid(a, b, 50, 10);
    CHECK(apart.mean > same.mean + 3 * (apart.stderr_ + same.stderr_));
    CHECK(apart.stderr_ > 0);
}

TEST_CASE("feature extractor: deterministic, shape, constant-image pooling") {
    FeatureExtractor f1(4, 16), f2(4, 16);
    std::mt19937_64 rng(10);
    Tensor imgs = Tensor::randn({5, 3, 16, 16}, rng);
    imgs.scale_(0.1);
    Eigen::MatrixXd a = f1(imgs), b = f2(imgs);
    REQUIRE(a.rows() == 5);
    REQUIRE(a.cols() == 16);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    // a constant image pools to a constant vector, so features equal
    // tanh(projection row sums * value)
    Tensor flat = Tensor::full({1, 3, 16, 16}, 0.25);
    Eigen::MatrixXd fa = f1(flat);
    Tensor flat8 = Tensor::full({1, 3, 8, 8}, 0.25); // pooling is size-invariant
    CHECK((f1(flat8) - fa).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(f1(Tensor::full({2, 1, 16, 16}, 0.0)), MetricError);
    CHECK_THROWS_AS(f1(Tensor::full({2, 3, 2, 2}, 0.0)), MetricError);
}

TEST_CASE("diversity and agreement: hand values and guards") {
    Tensor a = Tensor::full({1, 3, 2, 2}, 0.0);
    Tensor b = Tensor::full({1, 3, 2, 2}, 0.5);
    Tensor c = Tensor::full({1, 3, 2, 2}, 1.0);
    // pairs: |a-b|=0.5, |a-c|=1.0, |b-c|=0.5 -> mean 2/3
    CHECK(compute_diversity({a, b, c}) == Catch::Approx(2.0 / 3.0).margin(1e-12));
    CHECK(compute_diversity({a, a}) == 0.0);
    CHECK(compute_agreement({b, c}) == Catch::Approx(0.5).margin(1e-12));

    CHECK_THROWS_AS(compute_diversity({a}), std::invalid_argument);
    CHECK_THROWS_AS(compute_agreement({a}), std::invalid_argument);
    CHECK_THROWS_AS(compute_agreement({a, Tensor::full({1, 3, 4, 4}, 0.0)}), ShapeError);
}

TEST_CASE("kid report: table contents and plot file") {
    const fs::path dir = fs::temp_directory_path() / "council_metrics_test";
    fs::remove_all(dir);
    std::vector<KidPoint> pts = {{500, {0.30, 0.02, 50, 10}},
                                 {2500, {0.12, 0.01, 50, 10}},
                                 {5000, {0.05, 0.01, 50, 10}}};
    kid_vs_iteration_report(pts, dir / "kid.tsv", dir / "kid.png");

    std::ifstream in(dir / "kid.tsv");
    std::string header, l1;
    std::getline(in, header);
    std::getline(in, l1);
    CHECK(header == "iteration\tkid_mean\tkid_stderr");
    CHECK(l1.rfind("500\t0.3", 0) == 0);
    CHECK(!cv::imread((dir / "kid.png").string()).empty());

    CHECK_THROWS_AS(kid_vs_iteration_report({}, dir / "x.tsv", dir / "x.png"), MetricError);
    std::vector<KidPoint> bad = {{10, {}}, {5, {}}};
    CHECK_THROWS_AS(kid_vs_iteration_report(bad, dir / "x.tsv", dir / "x.png"), MetricError);
}
