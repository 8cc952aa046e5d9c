#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <iomanip>

#include "council/metrics.hpp"
#include "council/trainer.hpp"

using namespace council;

namespace {

constexpr const char* kVersion = "council 1.0.0";

// ---- shared config plumbing -------------------------------------------------

struct ConfigOpts {
    std::string config_path, preset, ablation;
    int64_t iters = -1, members = -1;
    double lambda1 = -1, lambda2 = -1, alpha = -1;
    int focus = 0; // CLI11 flag count: 0 unset, >0 --focus, <0 --no-focus

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", config_path, "flat key=value config file");
        cmd.add_option("--preset", preset, "toy | male2female | selfie2anime | glasses");
        cmd.add_option("--iters", iters, "override max_iterations");
        cmd.add_option("--members", members, "override n_members");
        cmd.add_option("--lambda1", lambda1, "council loss weight");
        cmd.add_option("--lambda2", lambda2, "focus loss weight");
        cmd.add_option("--alpha", alpha, "entropy damping for other members");
        cmd.add_flag("--focus,!--no-focus", focus, "toggle the focus-mask channel");
        cmd.add_option("--ablation", ablation,
                       "full | gan-only | council-only | naive-council");
    }

    CouncilConfig build(const CLI::App& cmd) const {
        CouncilConfig cfg =
            preset.empty() ? CouncilConfig{} : CouncilConfig::preset(preset);
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config file: " + config_path);
            cfg.apply_stream(in);
        }
        if (cmd.count("--iters")) cfg.max_iterations = iters;
        if (cmd.count("--members")) cfg.n_members = members;
        if (cmd.count("--lambda1")) cfg.lambda1 = lambda1;
        if (cmd.count("--lambda2")) cfg.lambda2 = lambda2;
        if (cmd.count("--alpha")) cfg.alpha = alpha;
        if (focus != 0) cfg.focus_enabled = focus > 0;
        if (!ablation.empty()) cfg.ablation = ablation_from_string(ablation);
        cfg.validate();
        return cfg;
    }
};

fs::path resolve_out(const std::string& out, const std::string& fallback_name) {
    const char* root = std::getenv("COUNCIL_OUT_ROOT");
    if (!out.empty()) return out;
    return fs::path(root ? root : "runs") / fallback_name;
}

std::string timestamp() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream os;
    os << std::put_time(std::gmtime(&t), "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

// ---- checkpoint helpers -----------------------------------------------------

CouncilConfig checkpoint_config(const fs::path& dir, int64_t iter) {
    fs::path tp = trainer_checkpoint_path(dir, iter);
    std::ifstream is(tp, std::ios::binary);
    if (!is) throw CheckpointError("checkpoint not found: " + tp.string());
    char magic[8];
    is.read(magic, 8);
    if (!is || std::string(magic, 8) != "CNCLTR01")
        throw CheckpointError("not a trainer checkpoint: " + tp.string());
    std::istringstream cfg_in(io::read_string(is));
    return CouncilConfig::parse(cfg_in);
}

int64_t pick_iteration(const fs::path& dir, int64_t requested) {
    if (requested >= 0) return requested;
    auto iters = list_checkpoint_iterations(dir);
    if (iters.empty()) throw CheckpointError("no checkpoints in: " + dir.string());
    return iters.back();
}

// ---- image plumbing ---------------------------------------------------------

// Sorted, deterministic load of a folder into one (N,3,S,S) tensor.
Tensor dir_to_tensor(const fs::path& dir, int64_t size,
                     std::vector<std::string>* stems = nullptr) {
    if (!fs::is_directory(dir)) throw DataError("dataset folder not found: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());

    std::vector<cv::Mat> imgs;
    for (const auto& f : files) {
        cv::Mat img = cv::imread(f.string(), cv::IMREAD_COLOR);
        if (img.empty()) {
            std::cerr << "warning: skipping undecodable file " << f << "\n";
            continue;
        }
        cv::Mat resized;
        cv::resize(img, resized, cv::Size(static_cast<int>(size), static_cast<int>(size)),
                   0, 0, cv::INTER_AREA);
        imgs.push_back(resized);
        if (stems) stems->push_back(f.stem().string());
    }
    if (imgs.empty()) throw DataError("no decodable images in: " + dir.string());

    Tensor out({static_cast<int64_t>(imgs.size()), 3, size, size});
    for (size_t n = 0; n < imgs.size(); ++n)
        for (int64_t y = 0; y < size; ++y)
            for (int64_t x = 0; x < size; ++x) {
                cv::Vec3b px = imgs[n].at<cv::Vec3b>(static_cast<int>(y), static_cast<int>(x));
                const int64_t base = static_cast<int64_t>(n) * 3 * size * size;
                out[base + 0 * size * size + y * size + x] = px[2] / 127.5 - 1.0;
                out[base + 1 * size * size + y * size + x] = px[1] / 127.5 - 1.0;
                out[base + 2 * size * size + y * size + x] = px[0] / 127.5 - 1.0;
            }
    return out;
}

Tensor slice_batch(const Tensor& all, int64_t from, int64_t to) {
    const int64_t per = all.numel() / all.dim(0);
    Tensor out({to - from, all.dim(1), all.dim(2), all.dim(3)});
    std::copy(all.data() + from * per, all.data() + to * per, out.data());
    return out;
}

// Translates every image with one entropy draw per batch; deterministic
// under the given rng state.
Tensor translate_set(const CouncilMember& m, const Tensor& inputs, int64_t entropy_dim,
                     std::mt19937_64& rng) {
    const int64_t N = inputs.dim(0), chunk = 8;
    Tensor out(inputs.shape());
    const int64_t per = out.numel() / N;
    for (int64_t at = 0; at < N; at += chunk) {
        const int64_t hi = std::min(N, at + chunk);
        Tensor batch = slice_batch(inputs, at, hi);
        auto z = EntropyVector::sample(hi - at, entropy_dim, rng);
        Tensor got = m.translate(Var(batch), z).composite.value();
        std::copy(got.data(), got.data() + got.numel(), out.data() + at * per);
    }
    return out;
}

// ---- subcommand bodies ------------------------------------------------------

int cmd_make_dataset(const std::string& kind, int64_t count, int64_t size, uint64_t seed,
                     const fs::path& out) {
    AugmentationSpec no_aug;
    no_aug.enabled = false;
    auto [ds_s, ds_t] = make_toy_dataset(toy_kind_from_string(kind), count, size, seed,
                                         out / "source", out / "target", no_aug);
    std::cout << "wrote " << ds_s.count() << " source and " << ds_t.count()
              << " target images under " << out << "\n";
    return 0;
}

int cmd_train(const CouncilConfig& cfg, const fs::path& source, const fs::path& target,
              const fs::path& out, uint64_t seed, bool resume) {
    AugmentationSpec spec = AugmentationSpec::from_config(cfg);
    DomainDataset ds_s =
        DomainDataset::load(source, DomainDataset::Tag::Source, cfg.image_size, spec, seed + 1);
    DomainDataset ds_t =
        DomainDataset::load(target, DomainDataset::Tag::Target, cfg.image_size, spec, seed + 2);

    const fs::path ckpt_dir = out / "checkpoints";
    fs::create_directories(out);

    TrainState state = [&] {
        if (resume) {
            auto iters = list_checkpoint_iterations(ckpt_dir);
            if (!iters.empty()) {
                std::cout << "resuming from iteration " << iters.back() << "\n";
                return load_checkpoint(ckpt_dir, iters.back(), cfg);
            }
        }
        return TrainState::init(cfg, seed);
    }();

    // manifest precedes iteration 1 and is never rewritten
    const fs::path manifest = out / "manifest.txt";
    if (!fs::exists(manifest)) {
        std::ofstream mf(manifest);
        if (!mf) throw DataError("cannot write " + manifest.string());
        mf << "version = " << kVersion << "\n"
           << "start_time = " << timestamp() << "\n"
           << "seed = " << seed << "\n"
           << "source = " << source.string() << "\n"
           << "target = " << target.string() << "\n"
           << "out = " << out.string() << "\n"
           << "# config snapshot\n"
           << cfg.serialize();
    }

    // fixed probe batch for sample grids, drawn outside the training streams
    AugmentationSpec no_aug;
    no_aug.enabled = false;
    DomainDataset probe_ds =
        DomainDataset::load(source, DomainDataset::Tag::Source, cfg.image_size, no_aug, 7777);
    Tensor probe = probe_ds.next_batch(std::min<int64_t>(4, probe_ds.count()));

    std::ofstream log(out / "loss_log.txt", std::ios::app);

    TrainCallbacks cb;
    cb.on_log = [&](const TrainState& s, const std::vector<LossReport>& r) {
        for (size_t i = 0; i < r.size(); ++i) {
            log << r[i].record(s.iteration, static_cast<int64_t>(i)) << "\n";
            if (s.iteration % (10 * std::max<int64_t>(1, cfg.log_every)) == 0)
                std::cout << r[i].record(s.iteration, static_cast<int64_t>(i)) << "\n";
        }
        log.flush();
    };
    cb.on_checkpoint = [&](TrainState& s) { save_checkpoint(s, ds_s, ds_t, ckpt_dir); };
    cb.on_sample = [&](TrainState& s) { write_sample_images(s, probe, 3, out / "samples"); };

    TrainState end = run_training(std::move(state), ds_s, ds_t, cb);
    std::cout << "finished at iteration " << end.iteration << " (lr " << end.lr_current
              << ", " << end.disc_steps << " disc steps, " << end.gen_steps
              << " gen steps)\n";
    return 0;
}

int cmd_translate(const fs::path& ckpt_dir, int64_t iter, const fs::path& input,
                  const fs::path& out, int64_t n_styles, int64_t member_select,
                  uint64_t seed) {
    iter = pick_iteration(ckpt_dir, iter);
    CouncilConfig cfg = checkpoint_config(ckpt_dir, iter);

    std::vector<std::string> stems;
    Tensor inputs = dir_to_tensor(input, cfg.image_size, &stems);

    std::vector<int64_t> members;
    if (member_select >= 0) {
        if (member_select >= cfg.n_members)
            throw ConfigError("member " + std::to_string(member_select) +
                              " out of range (council has " + std::to_string(cfg.n_members) +
                              ")");
        members.push_back(member_select);
    } else {
        for (int64_t i = 0; i < cfg.n_members; ++i) members.push_back(i);
    }

    fs::create_directories(out);
    std::mt19937_64 rng(seed);
    int64_t written = 0;
    for (int64_t k = 0; k < n_styles; ++k) {
        auto z = EntropyVector::sample(inputs.dim(0), cfg.entropy_dim, rng);
        for (int64_t i : members) {
            auto m = load_member_checkpoint(ckpt_dir, i, iter, cfg);
            GeneratorOutput got = m->translate(Var(inputs), z);
            for (int64_t n = 0; n < inputs.dim(0); ++n) {
                std::string stem =
                    stems[n] + "_member" + std::to_string(i) + "_z" + std::to_string(k);
                cv::imwrite((out / (stem + ".png")).string(),
                            tensor_to_mat(got.composite.value(), n));
                if (got.has_mask())
                    cv::imwrite((out / (stem + "_mask.png")).string(),
                                tensor_to_mat(got.mask.value(), n));
                ++written;
            }
        }
    }
    std::cout << "wrote " << written << " translations to " << out << "\n";
    return 0;
}

int cmd_evaluate(const fs::path& ckpt_dir, int64_t iter, const fs::path& source,
                 const fs::path& target, const fs::path& out, uint64_t seed) {
    iter = pick_iteration(ckpt_dir, iter);
    CouncilConfig cfg = checkpoint_config(ckpt_dir, iter);

    Tensor src = dir_to_tensor(source, cfg.image_size);
    Tensor tgt = dir_to_tensor(target, cfg.image_size);
    FeatureExtractor extractor(std::min<int64_t>(8, cfg.image_size), 32);
    Eigen::MatrixXd f_tgt = extractor(tgt);
    const int64_t kid_subset = std::min<int64_t>(100, std::min(src.dim(0), tgt.dim(0)));

    fs::create_directories(out);
    std::ofstream table(out / "metrics.tsv");
    if (!table) throw DataError("cannot write " + (out / "metrics.tsv").string());
    table << "member\tfid\tkid_mean\tkid_stderr\tdiversity\n";
    table.precision(10);

    const int64_t n_probe = std::min<int64_t>(8, src.dim(0));
    Tensor probe = slice_batch(src, 0, n_probe);

    std::vector<Tensor> member_probe_outs;
    double fid_sum = 0, kid_sum = 0;
    for (int64_t i = 0; i < cfg.n_members; ++i) {
        auto m = load_member_checkpoint(ckpt_dir, i, iter, cfg);

        std::mt19937_64 rng(seed + static_cast<uint64_t>(i));
        Tensor gen = translate_set(*m, src, cfg.entropy_dim, rng);
        double fid = compute_fid(extractor(gen), f_tgt);
        KidResult kid = compute_kid(extractor(gen), f_tgt, kid_subset, 10, seed);

        std::mt19937_64 zrng(seed ^ 0xd1f5ULL);
        std::vector<Tensor> per_z;
        for (int k = 0; k < 4; ++k) {
            auto z = EntropyVector::sample(n_probe, cfg.entropy_dim, zrng);
            per_z.push_back(m->translate(Var(probe), z).composite.value());
        }
        double diversity = compute_diversity(per_z);
        member_probe_outs.push_back(per_z[0]); // matched z across members

        std::cout << "member " << i << ": fid=" << fid << " kid=" << kid.mean << "+-"
                  << kid.stderr_ << " diversity=" << diversity << "\n";
        table << i << '\t' << fid << '\t' << kid.mean << '\t' << kid.stderr_ << '\t'
              << diversity << '\n';
        fid_sum += fid;
        kid_sum += kid.mean;
    }

    if (cfg.n_members >= 2) {
        double agreement = compute_agreement(member_probe_outs);
        std::cout << "council: mean fid=" << fid_sum / cfg.n_members
                  << " mean kid=" << kid_sum / cfg.n_members << " agreement=" << agreement
                  << "\n";
        table << "council\t" << fid_sum / cfg.n_members << '\t' << kid_sum / cfg.n_members
              << "\t-\t-\n";
        table << "# agreement = " << agreement << "\n";
    }
    std::cout << "wrote " << (out / "metrics.tsv") << "\n";
    return 0;
}

int cmd_report(const fs::path& ckpt_dir, const fs::path& source, const fs::path& target,
               const fs::path& out, uint64_t seed) {
    auto iters = list_checkpoint_iterations(ckpt_dir);
    if (iters.empty()) throw CheckpointError("no checkpoints in: " + ckpt_dir.string());

    std::vector<KidPoint> points;
    for (int64_t it : iters) {
        CouncilConfig cfg = checkpoint_config(ckpt_dir, it);
        Tensor src = dir_to_tensor(source, cfg.image_size);
        Tensor tgt = dir_to_tensor(target, cfg.image_size);
        FeatureExtractor extractor(std::min<int64_t>(8, cfg.image_size), 32);
        const int64_t kid_subset = std::min<int64_t>(100, std::min(src.dim(0), tgt.dim(0)));

        // pool the generated set across members
        std::vector<Eigen::MatrixXd> feats;
        bool gap = false;
        for (int64_t i = 0; i < cfg.n_members; ++i) {
            if (!fs::exists(member_checkpoint_path(ckpt_dir, i, it))) {
                std::cerr << "warning: gap at iteration " << it << " (member " << i
                          << " checkpoint missing), skipping\n";
                gap = true;
                break;
            }
            auto m = load_member_checkpoint(ckpt_dir, i, it, cfg);
            std::mt19937_64 rng(seed + static_cast<uint64_t>(i));
            feats.push_back(extractor(translate_set(*m, src, cfg.entropy_dim, rng)));
        }
        if (gap) continue;
        Eigen::MatrixXd pooled(feats.size() * feats[0].rows(), feats[0].cols());
        for (size_t i = 0; i < feats.size(); ++i)
            pooled.middleRows(static_cast<int64_t>(i) * feats[0].rows(), feats[0].rows()) =
                feats[i];
        KidResult kid = compute_kid(pooled, extractor(tgt), kid_subset, 10, seed);
        points.push_back({it, kid});
        std::cout << "iteration " << it << ": kid=" << kid.mean << "+-" << kid.stderr_
                  << "\n";
    }
    if (points.empty()) throw CheckpointError("every checkpoint had gaps; nothing to report");

    fs::create_directories(out);
    kid_vs_iteration_report(points, out / "kid_vs_iteration.tsv",
                            out / "kid_vs_iteration.png");
    std::cout << "wrote " << (out / "kid_vs_iteration.tsv") << " and "
              << (out / "kid_vs_iteration.png") << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Council-of-GANs unpaired image translation toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    uint64_t seed = 0;
    std::string out;

    // make-dataset
    auto* mk = app.add_subcommand("make-dataset", "render a synthetic two-domain dataset");
    std::string mk_kind = "outline-vs-filled";
    int64_t mk_count = 64, mk_size = 16;
    mk->add_option("--kind", mk_kind, "outline-vs-filled | two-color-palettes");
    mk->add_option("--count", mk_count, "images per domain");
    mk->add_option("--size", mk_size, "square resolution");
    mk->add_option("--seed", seed, "rng seed");
    mk->add_option("--out", out, "output folder (default $COUNCIL_OUT_ROOT/dataset)");

    // train
    auto* tr = app.add_subcommand("train", "train a council on two image folders");
    ConfigOpts tr_cfg;
    tr_cfg.attach(*tr);
    std::string tr_source, tr_target;
    bool tr_resume = false;
    tr->add_option("--source", tr_source, "source-domain image folder")->required();
    tr->add_option("--target", tr_target, "target-domain image folder")->required();
    tr->add_option("--seed", seed, "rng seed");
    tr->add_option("--out", out, "run folder (default $COUNCIL_OUT_ROOT/train)");
    tr->add_flag("--resume", tr_resume, "continue from the latest checkpoint in --out");

    // translate
    auto* tl = app.add_subcommand("translate", "run a trained council on an image folder");
    std::string tl_ckpt, tl_input;
    int64_t tl_iter = -1, tl_styles = 3, tl_member = -1;
    tl->add_option("--checkpoint", tl_ckpt, "checkpoint folder")->required();
    tl->add_option("--iter", tl_iter, "checkpoint iteration (default: latest)");
    tl->add_option("--input", tl_input, "input image folder")->required();
    tl->add_option("--n-styles", tl_styles, "entropy draws per input");
    tl->add_option("--member", tl_member, "single member index (default: all)");
    tl->add_option("--seed", seed, "rng seed");
    tl->add_option("--out", out, "output folder (default $COUNCIL_OUT_ROOT/translate)");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "FID/KID/diversity/agreement at a checkpoint");
    std::string ev_ckpt, ev_source, ev_target;
    int64_t ev_iter = -1;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint folder")->required();
    ev->add_option("--iter", ev_iter, "checkpoint iteration (default: latest)");
    ev->add_option("--source", ev_source, "source-domain image folder")->required();
    ev->add_option("--target", ev_target, "target-domain image folder")->required();
    ev->add_option("--seed", seed, "rng seed");
    ev->add_option("--out", out, "output folder (default $COUNCIL_OUT_ROOT/evaluate)");

    // report
    auto* rp = app.add_subcommand("report", "KID-vs-iteration table and curve");
    std::string rp_ckpt, rp_source, rp_target;
    rp->add_option("--checkpoint", rp_ckpt, "checkpoint folder")->required();
    rp->add_option("--source", rp_source, "source-domain image folder")->required();
    rp->add_option("--target", rp_target, "target-domain image folder")->required();
    rp->add_option("--seed", seed, "rng seed");
    rp->add_option("--out", out, "output folder (default $COUNCIL_OUT_ROOT/report)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (mk->parsed())
            return cmd_make_dataset(mk_kind, mk_count, mk_size, seed,
                                    resolve_out(out, "dataset"));
        if (tr->parsed())
            return cmd_train(tr_cfg.build(*tr), tr_source, tr_target,
                             resolve_out(out, "train"), seed, tr_resume);
        if (tl->parsed())
            return cmd_translate(tl_ckpt, tl_iter, tl_input, resolve_out(out, "translate"),
                                 tl_styles, tl_member, seed);
        if (ev->parsed())
            return cmd_evaluate(ev_ckpt, ev_iter, ev_source, ev_target,
                                resolve_out(out, "evaluate"), seed);
        if (rp->parsed())
            return cmd_report(rp_ckpt, rp_source, rp_target, resolve_out(out, "report"),
                              seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
