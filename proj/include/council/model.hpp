#pragma once

#include <optional>

#include "council/config.hpp"
#include "council/nn.hpp"

namespace council {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Batch of images, channels-first, values in [-1, 1].
struct ImageBatch {
    Tensor data; // (B, 3, H, W)

    void validate(int64_t n_downsample) const {
        if (data.ndim() != 4 || data.dim(1) != 3)
            throw ShapeError("ImageBatch: expected (B,3,H,W), got " +
                             Tensor::shape_str(data.shape()));
        const int64_t f = int64_t(1) << n_downsample;
        if (data.dim(2) % f || data.dim(3) % f)
            throw ShapeError("ImageBatch: spatial dims must be divisible by " +
                             std::to_string(f));
        if (data.min() < -1.0 - 1e-9 || data.max() > 1.0 + 1e-9)
            throw std::invalid_argument("ImageBatch: values outside [-1,1]");
    }
};

// Style input z. `scale` realizes the alpha-damping applied to other members'
// vectors when they feed a council discriminator.
struct EntropyVector {
    Tensor data; // (B, entropy_dim)

    static EntropyVector sample(int64_t batch, int64_t dim, std::mt19937_64& rng,
                                real scale = 1.0) {
        EntropyVector z{Tensor::randn({batch, dim}, rng)};
        if (scale != 1.0) z.data.scale_(scale);
        return z;
    }

    EntropyVector scaled(real s) const {
        EntropyVector z{data};
        z.data.scale_(s);
        return z;
    }
};

// Raw decoder output plus the focus composite. When focus mode is off the
// mask is absent and composite aliases rgb.
struct GeneratorOutput {
    Var rgb;
    Var mask;      // undefined unless focus mode is on
    Var composite;

    bool has_mask() const { return mask.defined(); }
};

class Encoder {
public:
    Encoder() = default;
    Encoder(ParamStore& ps, const CouncilConfig& cfg, std::mt19937_64& rng) {
        int64_t ch = cfg.base_channels;
        stem_ = Conv2dLayer(ps, 3, ch, 7, 1, 3, rng);
        for (int64_t i = 0; i < cfg.n_downsample; ++i) {
            down_.emplace_back(ps, ch, ch * 2, 4, 2, 1, rng);
            ch *= 2;
        }
        for (int64_t i = 0; i < cfg.n_res_blocks; ++i) {
            res_.emplace_back(ps, ch, ch, 3, 1, 1, rng);
            res_.emplace_back(ps, ch, ch, 3, 1, 1, rng);
        }
    }

    Var operator()(const Var& x) const {
        Var h = relu(instance_norm(stem_(x)));
        for (const auto& d : down_) h = relu(instance_norm(d(h)));
        for (size_t i = 0; i + 1 < res_.size(); i += 2) {
            Var r = instance_norm(res_[i + 1](relu(instance_norm(res_[i](h)))));
            h = h + r;
        }
        if (!h.value().all_finite())
            throw DivergenceError("Encoder: non-finite content code");
        return h;
    }

private:
    Conv2dLayer stem_;
    std::vector<Conv2dLayer> down_;
    std::vector<Conv2dLayer> res_; // pairs of convs per residual block
};

class Decoder {
public:
    Decoder() = default;
    Decoder(ParamStore& ps, const CouncilConfig& cfg, std::mt19937_64& rng)
        : n_res_(cfg.n_res_blocks), code_ch_(cfg.code_channels()),
          entropy_dim_(cfg.entropy_dim), focus_(cfg.focus_enabled) {
        // AdaIN parameters: (gamma, beta) per norm, two norms per residual block
        const int64_t n_adain = 2 * n_res_;
        mlp1_ = LinearLayer(ps, entropy_dim_, cfg.mlp_hidden, rng);
        mlp2_ = LinearLayer(ps, cfg.mlp_hidden, cfg.mlp_hidden, rng);
        mlp3_ = LinearLayer(ps, cfg.mlp_hidden, n_adain * 2 * code_ch_, rng);
        for (int64_t i = 0; i < n_res_; ++i) {
            res_.emplace_back(ps, code_ch_, code_ch_, 3, 1, 1, rng);
            res_.emplace_back(ps, code_ch_, code_ch_, 3, 1, 1, rng);
        }
        int64_t ch = code_ch_;
        for (int64_t i = 0; i < cfg.n_downsample; ++i) {
            up_.emplace_back(ps, ch, ch / 2, 5, 1, 2, rng);
            ch /= 2;
        }
        // near-zero output init: training starts from a smooth mid-gray image
        // instead of saturated tanh noise, which stabilizes small councils
        out_ = Conv2dLayer(ps, ch, focus_ ? 4 : 3, 7, 1, 3, rng, 0.05);
    }

    GeneratorOutput operator()(const Var& code, const Var& z, const Var& input_image) const {
        if (z.value().ndim() != 2 || z.value().dim(1) != entropy_dim_)
            throw ShapeError("Decoder: entropy vector dim mismatch, expected " +
                             std::to_string(entropy_dim_) + ", got " +
                             Tensor::shape_str(z.value().shape()));
        if (focus_ && !input_image.defined())
            throw std::invalid_argument("Decoder: focus mode needs the input image");

        const int64_t B = code.value().dim(0);
        Var style = mlp3_(relu(mlp2_(relu(mlp1_(z))))); // (B, n_adain*2*C)

        Var h = code;
        for (int64_t i = 0; i < n_res_; ++i) {
            Var a = adain(res_[2 * i](h), style, B, 2 * i);
            Var r = adain(res_[2 * i + 1](relu(a)), style, B, 2 * i + 1);
            h = h + r;
        }
        for (const auto& u : up_) h = relu(instance_norm(u(upsample_nearest2(h))));
        Var raw = out_(h);

        GeneratorOutput out;
        if (focus_) {
            out.rgb = tanh(slice_channels(raw, 0, 3));
            out.mask = sigmoid(slice_channels(raw, 3, 4));
            // composite = mask * rgb + (1 - mask) * input
            Var mask3 = concat_channels(concat_channels(out.mask, out.mask), out.mask);
            Var ones(Tensor::full(mask3.shape(), 1.0));
            out.composite = mask3 * out.rgb + (ones - mask3) * input_image;
        } else {
            out.rgb = tanh(raw);
            out.composite = out.rgb;
        }
        return out;
    }

private:
    // Pull this block's (gamma, beta) slice out of the MLP output and apply it.
    Var adain(const Var& x, const Var& style, int64_t B, int64_t norm_idx) const {
        Var flat = reshape(style, {B, style.value().numel() / B, 1, 1});
        int64_t off = norm_idx * 2 * code_ch_;
        Var gamma_raw = slice_channels(flat, off, off + code_ch_);
        Var beta = slice_channels(flat, off + code_ch_, off + 2 * code_ch_);
        Var gamma = add_scalar(gamma_raw, 1.0); // identity-centered scale
        return channel_affine(instance_norm(x), gamma, beta);
    }

    int64_t n_res_ = 0, code_ch_ = 0, entropy_dim_ = 0;
    bool focus_ = false;
    LinearLayer mlp1_, mlp2_, mlp3_;
    std::vector<Conv2dLayer> res_;
    std::vector<Conv2dLayer> up_;
    Conv2dLayer out_;
};

// Patch discriminator; identical topology serves D (3 input channels) and
// D-hat (6 channels: output concatenated with input). Multi-scale variants
// run the same stack on average-pooled copies.
class PatchDiscriminator {
public:
    PatchDiscriminator() = default;
    PatchDiscriminator(ParamStore& ps, const CouncilConfig& cfg, int64_t in_channels,
                       std::mt19937_64& rng)
        : n_scales_(cfg.disc_scales) {
        for (int64_t s = 0; s < n_scales_; ++s) {
            std::vector<Conv2dLayer> stack;
            int64_t ch = cfg.disc_base_channels;
            stack.emplace_back(ps, in_channels, ch, 4, 2, 1, rng);
            for (int64_t i = 1; i < cfg.disc_layers; ++i) {
                stack.emplace_back(ps, ch, ch * 2, 4, 2, 1, rng);
                ch *= 2;
            }
            stack.emplace_back(ps, ch, 1, 3, 1, 1, rng);
            scales_.push_back(std::move(stack));
        }
    }

    // One unbounded patch score map per scale (least-squares formulation).
    std::vector<Var> operator()(const Var& img) const {
        std::vector<Var> scores;
        Var x = img;
        for (int64_t s = 0; s < n_scales_; ++s) {
            const auto& stack = scales_[s];
            Var h = leaky_relu(stack[0](x));
            for (size_t i = 1; i + 1 < stack.size(); ++i) h = leaky_relu(stack[i](h));
            scores.push_back(stack.back()(h));
            if (s + 1 < n_scales_) x = avg_pool2(x);
        }
        return scores;
    }

private:
    int64_t n_scales_ = 1;
    std::vector<std::vector<Conv2dLayer>> scales_;
};

// One council triplet: generator (encoder + decoder), GAN discriminator and
// council discriminator, with per-network parameter stores and optimizers.
class CouncilMember {
public:
    CouncilMember() = default;
    CouncilMember(const CouncilConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
        encoder_ = Encoder(gen_params_, cfg, rng);
        decoder_ = Decoder(gen_params_, cfg, rng);
        gan_disc_ = PatchDiscriminator(gan_params_, cfg, 3, rng);
        council_disc_ = PatchDiscriminator(council_params_, cfg, 6, rng);
        gen_opt_ = Adam(gen_params_, cfg.adam_beta1, cfg.adam_beta2);
        gan_opt_ = Adam(gan_params_, cfg.adam_beta1, cfg.adam_beta2);
        council_opt_ = Adam(council_params_, cfg.adam_beta1, cfg.adam_beta2);
    }

    // optimizers hold pointers into the parameter stores
    CouncilMember(const CouncilMember&) = delete;
    CouncilMember& operator=(const CouncilMember&) = delete;

    Var encode(const Var& x) const {
        ImageBatch{x.value()}.validate(cfg_.n_downsample);
        return encoder_(x);
    }

    GeneratorOutput decode(const Var& code, const Var& z, const Var& input_image) const {
        return decoder_(code, z, input_image);
    }

    GeneratorOutput translate(const Var& x, const EntropyVector& z) const {
        Var zv(z.data);
        return decoder_(encode(x), zv, x);
    }

    std::vector<Var> gan_discriminate(const Var& img) const {
        if (img.value().ndim() != 4 || img.value().dim(1) != 3)
            throw ShapeError("gan_discriminate: expected (B,3,H,W)");
        return gan_disc_(img);
    }

    std::vector<Var> council_discriminate(const Var& output, const Var& input) const {
        if (!output.value().same_shape(input.value()))
            throw ShapeError("council_discriminate: output/input shape mismatch " +
                             Tensor::shape_str(output.value().shape()) + " vs " +
                             Tensor::shape_str(input.value().shape()));
        return council_disc_(concat_channels(output, input));
    }

    ParamStore& gen_params() { return gen_params_; }
    ParamStore& gan_disc_params() { return gan_params_; }
    ParamStore& council_disc_params() { return council_params_; }
    const ParamStore& gen_params() const { return gen_params_; }
    const ParamStore& gan_disc_params() const { return gan_params_; }
    const ParamStore& council_disc_params() const { return council_params_; }

    Adam& gen_opt() { return gen_opt_; }
    Adam& gan_opt() { return gan_opt_; }
    Adam& council_opt() { return council_opt_; }

    const CouncilConfig& config() const { return cfg_; }

private:
    CouncilConfig cfg_;
    ParamStore gen_params_, gan_params_, council_params_;
    Encoder encoder_;
    Decoder decoder_;
    PatchDiscriminator gan_disc_, council_disc_;
    Adam gen_opt_, gan_opt_, council_opt_;
};

} // namespace council
