#pragma once

#include <memory>

#include "council/serialize.hpp"

namespace council {

struct TrainCallbacks {
    std::function<void(const struct TrainState&, const std::vector<LossReport>&)> on_log;
    std::function<void(struct TrainState&)> on_checkpoint;
    std::function<void(struct TrainState&)> on_sample;
};

struct TrainState {
    int64_t iteration = 0;
    double lr_current = 0;
    CouncilConfig config;
    std::vector<std::unique_ptr<CouncilMember>> members;
    std::mt19937_64 rng; // entropy sampling stream
    int64_t disc_steps = 0, gen_steps = 0;

    // dataset stream states captured at checkpoint time; applied on resume
    bool has_streams = false;
    StreamState source_stream, target_stream;

    static TrainState init(const CouncilConfig& cfg, uint64_t seed) {
        cfg.validate();
        TrainState s;
        s.config = cfg;
        s.rng.seed(seed);
        for (int64_t i = 0; i < cfg.n_members; ++i)
            s.members.push_back(std::make_unique<CouncilMember>(cfg, s.rng));
        s.lr_current = cfg.lr_at(0);
        return s;
    }
};

namespace detail {

inline bool council_active(const TrainState& s) {
    return s.iteration >= s.config.loss_activation_iter && s.config.n_members >= 2 &&
           s.config.ablation != Ablation::GanOnly && s.config.lambda1 > 0;
}

inline bool focus_active(const TrainState& s) {
    return s.config.focus_enabled && s.iteration >= s.config.loss_activation_iter &&
           s.config.ablation != Ablation::CouncilOnly && s.config.lambda2 > 0;
}

inline void check_finite(real v, const TrainState& s, int64_t member, const char* loss_name) {
    if (!std::isfinite(v))
        throw DivergenceError("training diverged at iteration " + std::to_string(s.iteration) +
                              ", member " + std::to_string(member) + ", loss " + loss_name);
}

struct MemberOutputs {
    Var own;    // composite from the member's own entropy draw, detached
    Var scaled; // composite from the alpha-scaled draw, detached
};

} // namespace detail

// One discriminator pass: updates every member's D on fresh real/fake pairs
// and, once the council loss is active, every D-hat on a snapshot of all
// members' outputs for the same source batch. Generators are never touched.
inline std::vector<LossReport> train_discriminators_step(TrainState& s, const Tensor& batch_s,
                                                         const Tensor& batch_t) {
    const auto& cfg = s.config;
    const int64_t n = cfg.n_members;
    const int64_t b = batch_s.dim(0);
    const bool council = detail::council_active(s);
    Var xs(batch_s);
    Var xt(batch_t);

    // snapshot all generator outputs up front (detached)
    std::vector<detail::MemberOutputs> outs(n);
    for (int64_t i = 0; i < n; ++i) {
        auto z = EntropyVector::sample(b, cfg.entropy_dim, s.rng);
        Var code = s.members[i]->encode(xs);
        outs[i].own = s.members[i]->decode(code, Var(z.data), xs).composite.detach();
        if (council) {
            const bool naive = cfg.ablation == Ablation::NaiveCouncil;
            EntropyVector zc = naive ? z : z.scaled(cfg.alpha);
            outs[i].scaled = s.members[i]->decode(code, Var(zc.data), xs).composite.detach();
        }
    }

    std::vector<LossReport> reports(n);
    for (int64_t i = 0; i < n; ++i) {
        CouncilMember& m = *s.members[i];

        m.gan_disc_params().zero_grad();
        Var d_loss = gan_d_loss(m.gan_discriminate(xt), m.gan_discriminate(outs[i].own));
        detail::check_finite(d_loss.item(), s, i, "gan_d");
        d_loss.backward();
        m.gan_opt().step(s.lr_current);
        reports[i].gan_d = d_loss.item();

        if (council) {
            m.council_disc_params().zero_grad();
            std::vector<ImagePair> others;
            for (int64_t j = 0; j < n; ++j)
                if (j != i) others.emplace_back(outs[j].scaled, xs);
            Var c_loss = council_d_loss(m, {outs[i].own, xs}, others);
            detail::check_finite(c_loss.item(), s, i, "council_d");
            c_loss.backward();
            m.council_opt().step(s.lr_current);
            reports[i].council_d = c_loss.item();
        }
    }
    ++s.disc_steps;
    return reports;
}

// One generator pass: each member minimizes gan_g + l1*council_g + l2*focus
// on its own fresh forward. Discriminator parameters are left untouched.
inline std::vector<LossReport> train_generator_step(TrainState& s, const Tensor& batch_s) {
    const auto& cfg = s.config;
    const int64_t n = cfg.n_members;
    const int64_t b = batch_s.dim(0);
    const bool council = detail::council_active(s);
    const bool focus = detail::focus_active(s);
    const real l1 = cfg.ablation == Ablation::GanOnly ? 0.0 : cfg.lambda1;
    const real l2 = cfg.ablation == Ablation::CouncilOnly ? 0.0 : cfg.lambda2;
    Var xs(batch_s);

    std::vector<LossReport> reports(n);
    for (int64_t i = 0; i < n; ++i) {
        CouncilMember& m = *s.members[i];
        auto z = EntropyVector::sample(b, cfg.entropy_dim, s.rng);
        GeneratorOutput out = m.translate(xs, z);

        Var gan_g = gan_g_loss(m.gan_discriminate(out.composite));
        Var council_g, focus_v;
        if (council) council_g = council_g_loss(m, {out.composite, xs});
        if (focus) focus_v = focus_loss(out.mask, cfg.delta, cfg.epsilon);

        Var total = total_g_objective(gan_g, council ? council_g : Var(),
                                      focus ? focus_v : Var(), council ? l1 : 0.0,
                                      focus ? l2 : 0.0);
        detail::check_finite(total.item(), s, i, "total_g");

        m.gen_params().zero_grad();
        total.backward();
        m.gen_opt().step(s.lr_current);

        reports[i].gan_g = gan_g.item();
        reports[i].council_g = council ? council_g.item() : 0.0;
        reports[i].focus = focus ? focus_v.item() : 0.0;
        reports[i].total_g = total.item();
    }
    ++s.gen_steps;
    return reports;
}

// ---- checkpointing ----------------------------------------------------------

inline fs::path member_checkpoint_path(const fs::path& dir, int64_t member, int64_t iter) {
    return dir / ("member" + std::to_string(member) + "_iter" + std::to_string(iter) + ".bin");
}
inline fs::path trainer_checkpoint_path(const fs::path& dir, int64_t iter) {
    return dir / ("trainer_iter" + std::to_string(iter) + ".bin");
}

inline void save_checkpoint(const TrainState& s, const DomainDataset& ds_s,
                            const DomainDataset& ds_t, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    for (int64_t i = 0; i < s.config.n_members; ++i) {
        fs::path p = member_checkpoint_path(dir, i, s.iteration);
        std::ofstream os(p, std::ios::binary);
        if (!os) throw CheckpointError("cannot write checkpoint: " + p.string());
        save_member(os, *s.members[i], s.config, s.iteration, i);
    }
    fs::path tp = trainer_checkpoint_path(dir, s.iteration);
    std::ofstream os(tp, std::ios::binary);
    if (!os) throw CheckpointError("cannot write checkpoint: " + tp.string());
    os.write("CNCLTR01", 8);
    io::write_string(os, s.config.serialize());
    io::write_u64(os, static_cast<uint64_t>(s.iteration));
    io::write_f64(os, s.lr_current);
    io::write_string(os, detail::rng_to_string(s.rng));
    io::write_u64(os, static_cast<uint64_t>(s.disc_steps));
    io::write_u64(os, static_cast<uint64_t>(s.gen_steps));
    io::write_stream_state(os, ds_s.stream_state());
    io::write_stream_state(os, ds_t.stream_state());
}

// Rebuilds a TrainState from `dir` at iteration `iter` under the given
// config. Datasets are reattached separately via attach_streams.
inline TrainState load_checkpoint(const fs::path& dir, int64_t iter,
                                  const CouncilConfig& cfg) {
    fs::path tp = trainer_checkpoint_path(dir, iter);
    std::ifstream is(tp, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint not found: " + tp.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "CNCLTR01")
        throw CheckpointError("not a trainer checkpoint: " + tp.string());
    std::istringstream cfg_in(io::read_string(is));
    CouncilConfig stored = CouncilConfig::parse(cfg_in);
    if (detail::arch_signature(stored) != detail::arch_signature(cfg))
        throw CheckpointError("checkpoint/config incompatibility: stored architecture [" +
                              detail::arch_signature(stored) + "] vs current [" +
                              detail::arch_signature(cfg) + "]");

    TrainState s = TrainState::init(cfg, 0);
    s.iteration = static_cast<int64_t>(io::read_u64(is));
    s.lr_current = io::read_f64(is);
    detail::rng_from_string(s.rng, io::read_string(is));
    s.disc_steps = static_cast<int64_t>(io::read_u64(is));
    s.gen_steps = static_cast<int64_t>(io::read_u64(is));
    s.source_stream = io::read_stream_state(is);
    s.target_stream = io::read_stream_state(is);
    s.has_streams = true;

    for (int64_t i = 0; i < cfg.n_members; ++i) {
        fs::path mp = member_checkpoint_path(dir, i, iter);
        std::ifstream ms(mp, std::ios::binary);
        if (!ms) throw CheckpointError("checkpoint not found: " + mp.string());
        load_member(ms, *s.members[i], cfg);
    }
    return s;
}

// Loads a single member (for translate/evaluate commands that do not resume
// training).
inline std::unique_ptr<CouncilMember> load_member_checkpoint(const fs::path& dir, int64_t member,
                                                             int64_t iter,
                                                             const CouncilConfig& cfg) {
    fs::path mp = member_checkpoint_path(dir, member, iter);
    std::ifstream ms(mp, std::ios::binary);
    if (!ms) throw CheckpointError("checkpoint not found: " + mp.string());
    std::mt19937_64 rng(0);
    auto m = std::make_unique<CouncilMember>(cfg, rng);
    load_member(ms, *m, cfg);
    return m;
}

// Iterations present in a checkpoint directory, ascending.
inline std::vector<int64_t> list_checkpoint_iterations(const fs::path& dir) {
    std::vector<int64_t> iters;
    if (!fs::is_directory(dir)) return iters;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string name = e.path().filename().string();
        if (name.rfind("trainer_iter", 0) == 0 && name.size() > 16)
            iters.push_back(std::stoll(name.substr(12, name.size() - 16)));
    }
    std::sort(iters.begin(), iters.end());
    return iters;
}

// ---- sample grids -----------------------------------------------------------

// iter{t}_member{i}_z{k}.png (+ _mask.png when focus mode is on). Uses an
// iteration-derived RNG so sampling never perturbs the training stream.
inline void write_sample_images(const TrainState& s, const Tensor& probe, int64_t n_styles,
                                const fs::path& dir) {
    fs::create_directories(dir);
    std::mt19937_64 rng(0x5a11ce5eed ^ static_cast<uint64_t>(s.iteration));
    for (int64_t k = 0; k < n_styles; ++k) {
        auto z = EntropyVector::sample(probe.dim(0), s.config.entropy_dim, rng);
        for (int64_t i = 0; i < s.config.n_members; ++i) {
            GeneratorOutput out = s.members[i]->translate(Var(probe), z);
            std::string stem = "iter" + std::to_string(s.iteration) + "_member" +
                               std::to_string(i) + "_z" + std::to_string(k);
            cv::imwrite((dir / (stem + ".png")).string(),
                        tensor_to_mat(out.composite.value(), 0));
            if (out.has_mask())
                cv::imwrite((dir / (stem + "_mask.png")).string(),
                            tensor_to_mat(out.mask.value(), 0));
        }
    }
}

// ---- the loop ---------------------------------------------------------------

// Interleaved schedule: per iteration, n_members discriminator steps on fresh
// batches, then one generator step. Runs until config.max_iterations.
inline TrainState run_training(TrainState state, DomainDataset& ds_s, DomainDataset& ds_t,
                               const TrainCallbacks& cb = {}) {
    const auto& cfg = state.config;
    if (state.has_streams) {
        ds_s.restore_stream(state.source_stream);
        ds_t.restore_stream(state.target_stream);
        state.has_streams = false;
    }
    while (state.iteration < cfg.max_iterations) {
        state.lr_current = cfg.lr_at(state.iteration);
        if (cfg.aug_clean_after >= 0 && state.iteration >= cfg.aug_clean_after) {
            ds_s.augmentation().enabled = false;
            ds_t.augmentation().enabled = false;
        }

        std::vector<LossReport> merged(cfg.n_members);
        for (int64_t d = 0; d < cfg.n_members; ++d) {
            auto r = train_discriminators_step(state, ds_s.next_batch(cfg.batch_size),
                                               ds_t.next_batch(cfg.batch_size));
            for (int64_t i = 0; i < cfg.n_members; ++i) {
                merged[i].gan_d = r[i].gan_d;
                merged[i].council_d = r[i].council_d;
            }
        }
        auto g = train_generator_step(state, ds_s.next_batch(cfg.batch_size));
        for (int64_t i = 0; i < cfg.n_members; ++i) {
            merged[i].gan_g = g[i].gan_g;
            merged[i].council_g = g[i].council_g;
            merged[i].focus = g[i].focus;
            merged[i].total_g = g[i].total_g;
        }
        ++state.iteration;

        if (cb.on_log && cfg.log_every > 0 && state.iteration % cfg.log_every == 0)
            cb.on_log(state, merged);
        if (cb.on_sample && cfg.sample_every > 0 && state.iteration % cfg.sample_every == 0)
            cb.on_sample(state);
        if (cb.on_checkpoint && cfg.checkpoint_every > 0 &&
            (state.iteration % cfg.checkpoint_every == 0 ||
             state.iteration == cfg.max_iterations))
            cb.on_checkpoint(state);
    }
    return state;
}

} // namespace council
