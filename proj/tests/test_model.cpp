#include <catch2/catch_amalgamated.hpp>

#include "council/model.hpp"

using namespace council;

namespace {

Tensor random_images(int64_t b, int64_t hw, std::mt19937_64& rng) {
    Tensor t({b, 3, hw, hw});
    std::uniform_real_distribution<real> u(-1.0, 1.0);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = u(rng);
    return t;
}

CouncilConfig small_cfg() {
    CouncilConfig cfg = CouncilConfig::preset("toy");
    cfg.image_size = 16;
    return cfg;
}

} // namespace

TEST_CASE("encode: shape arithmetic") {
    CouncilConfig cfg;
    cfg.image_size = 64;
    cfg.base_channels = 16;
    cfg.n_downsample = 2; // code channels 64
    std::mt19937_64 rng(7);
    CouncilMember m(cfg, rng);
    Var x(random_images(3, 64, rng));
    Var code = m.encode(x);
    CHECK(code.shape() == std::vector<int64_t>{3, 64, 16, 16});
}

TEST_CASE("encode: invalid spatial dims rejected") {
    CouncilConfig cfg = small_cfg();
    std::mt19937_64 rng(7);
    CouncilMember m(cfg, rng);
    Tensor bad({2, 3, 30, 30});
    CHECK_THROWS_AS(m.encode(Var(bad)), ShapeError);
    Tensor bad_ch({2, 4, 16, 16});
    CHECK_THROWS_AS(m.encode(Var(bad_ch)), ShapeError);
}

TEST_CASE("encode: zero parameters give a zero code") {
    CouncilConfig cfg = small_cfg();
    std::mt19937_64 rng(7);
    CouncilMember m(cfg, rng);
    for (auto& p : m.gen_params().params()) p.value_mut().fill(0.0);
    Var code = m.encode(Var(random_images(2, 16, rng)));
    CHECK(code.value().min() == 0.0);
    CHECK(code.value().max() == 0.0);
}

TEST_CASE("same seed, same input: bitwise-identical forward") {
    CouncilConfig cfg = small_cfg();
    std::mt19937_64 rng_a(42), rng_b(42), rng_x(1);
    CouncilMember a(cfg, rng_a), b(cfg, rng_b);
    Tensor x = random_images(2, 16, rng_x);
    std::mt19937_64 rz_a(9), rz_b(9);
    auto za = EntropyVector::sample(2, cfg.entropy_dim, rz_a);
    auto zb = EntropyVector::sample(2, cfg.entropy_dim, rz_b);
    GeneratorOutput oa = a.translate(Var(x), za);
    GeneratorOutput ob = b.translate(Var(x), zb);
    REQUIRE(oa.composite.value().numel() == ob.composite.value().numel());
    for (int64_t i = 0; i < oa.composite.value().numel(); ++i)
        REQUIRE(oa.composite.value()[i] == ob.composite.value()[i]);
}

TEST_CASE("translate: shape, range, and composition with encode/decode") {
    CouncilConfig cfg = small_cfg();
    std::mt19937_64 rng(3);
    CouncilMember m(cfg, rng);
    Tensor x = random_images(2, 16, rng);
    auto z = EntropyVector::sample(2, cfg.entropy_dim, rng);

    GeneratorOutput via_translate = m.translate(Var(x), z);
    Var xv(x);
    GeneratorOutput via_parts = m.decode(m.encode(xv), Var(z.data), xv);

    CHECK(via_translate.composite.shape() == x.shape());
    CHECK(via_translate.composite.value().min() >= -1.0);
    CHECK(via_translate.composite.value().max() <= 1.0);
    for (int64_t i = 0; i < x.numel(); ++i)
        REQUIRE(via_translate.composite.value()[i] == via_parts.composite.value()[i]);
}

TEST_CASE("decode: entropy-dim mismatch rejected") {
    CouncilConfig cfg = small_cfg();
    std::mt19937_64 rng(3);
    CouncilMember m(cfg, rng);
    Var x(random_images(1, 16, rng));
    Var bad_z(Tensor::randn({1, cfg.entropy_dim + 1}, rng));
    CHECK_THROWS_AS(m.decode(m.encode(x), bad_z, x), ShapeError);
}

TEST_CASE("decode: focus disabled means composite == rgb") {
    CouncilConfig cfg = small_cfg();
    cfg.focus_enabled = false;
    std::mt19937_64 rng(5);
    CouncilMember m(cfg, rng);
    auto z = EntropyVector::sample(1, cfg.entropy_dim, rng);
    GeneratorOutput out = m.translate(Var(random_images(1, 16, rng)), z);
    CHECK_FALSE(out.has_mask());
    for (int64_t i = 0; i < out.rgb.value().numel(); ++i)
        REQUIRE(out.composite.value()[i] == out.rgb.value()[i]);
}

TEST_CASE("decode: compositing algebra holds and mask 0 copies the input") {
    CouncilConfig cfg = small_cfg();
    REQUIRE(cfg.focus_enabled);
    std::mt19937_64 rng(5);
    CouncilMember m(cfg, rng);
    Tensor x = random_images(2, 16, rng);
    auto z = EntropyVector::sample(2, cfg.entropy_dim, rng);

    GeneratorOutput out = m.translate(Var(x), z);
    REQUIRE(out.has_mask());
    CHECK(out.mask.value().min() >= 0.0);
    CHECK(out.mask.value().max() <= 1.0);
    const int64_t hw = 16 * 16;
    for (int64_t b = 0; b < 2; ++b)
        for (int64_t c = 0; c < 3; ++c)
            for (int64_t i = 0; i < hw; ++i) {
                real mv = out.mask.value()[b * hw + i];
                real expect = mv * out.rgb.value()[(b * 3 + c) * hw + i] +
                              (1 - mv) * x[(b * 3 + c) * hw + i];
                REQUIRE(out.composite.value()[(b * 3 + c) * hw + i] ==
                        Catch::Approx(expect).margin(1e-12));
            }

    // Clamp the mask channel of the output conv to force sigmoid to exactly 0:
    // composite must then equal the input bitwise.
    auto& params = m.gen_params().params();
    for (auto& p : params) {
        const auto& s = p.value().shape();
        if (s.size() == 4 && s[0] == 4 && s[2] == 7) {
            int64_t per_out = p.value().numel() / 4;
            for (int64_t i = 3 * per_out; i < 4 * per_out; ++i) p.value_mut()[i] = 0.0;
        } else if (s.size() == 1 && s[0] == 4) {
            p.value_mut()[3] = -1e4;
        }
    }
    GeneratorOutput zero_mask = m.translate(Var(x), z);
    CHECK(zero_mask.mask.value().max() == 0.0);
    for (int64_t i = 0; i < x.numel(); ++i)
        REQUIRE(zero_mask.composite.value()[i] == x[i]);
}

TEST_CASE("gan_discriminate: patch map shapes per scale") {
    CouncilConfig cfg;
    cfg.image_size = 64;
    cfg.disc_layers = 3;
    std::mt19937_64 rng(11);

    SECTION("single scale, 64x64 -> 8x8 patch field") {
        cfg.disc_scales = 1;
        CouncilMember m(cfg, rng);
        auto scores = m.gan_discriminate(Var(random_images(1, 64, rng)));
        REQUIRE(scores.size() == 1);
        CHECK(scores[0].shape() == std::vector<int64_t>{1, 1, 8, 8});
    }
    SECTION("two scales halve the spatial dims") {
        cfg.disc_scales = 2;
        CouncilMember m(cfg, rng);
        auto scores = m.gan_discriminate(Var(random_images(1, 64, rng)));
        REQUIRE(scores.size() == 2);
        CHECK(scores[0].shape() == std::vector<int64_t>{1, 1, 8, 8});
        CHECK(scores[1].shape() == std::vector<int64_t>{1, 1, 4, 4});
    }
}

TEST_CASE("discriminators: zero params give zero scores; shapes match") {
    CouncilConfig cfg = small_cfg();
    std::mt19937_64 rng(13);
    CouncilMember m(cfg, rng);
    for (auto& p : m.gan_disc_params().params()) p.value_mut().fill(0.0);
    for (auto& p : m.council_disc_params().params()) p.value_mut().fill(0.0);
    Tensor x = random_images(2, 16, rng);
    Tensor y = random_images(2, 16, rng);
    auto gan_scores = m.gan_discriminate(Var(x));
    auto council_scores = m.council_discriminate(Var(y), Var(x));
    REQUIRE(gan_scores.size() == council_scores.size());
    for (size_t s = 0; s < gan_scores.size(); ++s) {
        CHECK(gan_scores[s].shape() == council_scores[s].shape());
        CHECK(gan_scores[s].value().max() == 0.0);
        CHECK(council_scores[s].value().max() == 0.0);
    }
}

TEST_CASE("council_discriminate: argument order matters") {
    CouncilConfig cfg = small_cfg();
    std::mt19937_64 rng(17);
    CouncilMember m(cfg, rng);
    Tensor a = random_images(1, 16, rng);
    Tensor b = random_images(1, 16, rng);
    auto fwd = m.council_discriminate(Var(a), Var(b));
    auto swapped = m.council_discriminate(Var(b), Var(a));
    real diff = 0;
    for (int64_t i = 0; i < fwd[0].value().numel(); ++i)
        diff += std::abs(fwd[0].value()[i] - swapped[0].value()[i]);
    CHECK(diff > 0.0);
    CHECK_THROWS_AS(m.council_discriminate(Var(a), Var(random_images(2, 16, rng))),
                    ShapeError);
}

TEST_CASE("member networks share no parameters") {
    CouncilConfig cfg = small_cfg();
    std::mt19937_64 rng(19);
    CouncilMember m(cfg, rng);
    std::set<const void*> seen;
    auto collect = [&](const ParamStore& ps) {
        for (const auto& p : ps.params()) REQUIRE(seen.insert(p.node().get()).second);
    };
    collect(m.gen_params());
    collect(m.gan_disc_params());
    collect(m.council_disc_params());
}
