#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace council {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Ablation { Full, GanOnly, CouncilOnly, NaiveCouncil };

inline std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::Full: return "full";
        case Ablation::GanOnly: return "gan-only";
        case Ablation::CouncilOnly: return "council-only";
        case Ablation::NaiveCouncil: return "naive-council";
    }
    return "full";
}

inline Ablation ablation_from_string(const std::string& s) {
    if (s == "full") return Ablation::Full;
    if (s == "gan-only") return Ablation::GanOnly;
    if (s == "council-only") return Ablation::CouncilOnly;
    if (s == "naive-council") return Ablation::NaiveCouncil;
    throw ConfigError("unknown ablation mode: " + s +
                      " (valid: full, gan-only, council-only, naive-council)");
}

// Every scalar knob of the system. Stored and exchanged as a flat key=value
// text document; CLI flags override file values.
struct CouncilConfig {
    // council
    int64_t n_members = 4;
    double alpha = 0.8;
    double lambda1 = 0.2;
    double lambda2 = 0.025;
    double delta = 0.001;
    double epsilon = 0.01;
    int64_t entropy_dim = 8;
    bool focus_enabled = true;

    // optimizer / schedule
    double learning_rate = 1e-4;
    double lr_decay_factor = 0.5;
    int64_t lr_decay_every = 100000;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    int64_t batch_size = 3;
    int64_t loss_activation_iter = 10000;
    int64_t max_iterations = 200000;

    // architecture
    int64_t image_size = 64;
    int64_t base_channels = 16;
    int64_t n_downsample = 2;
    int64_t n_res_blocks = 4;
    int64_t mlp_hidden = 64;
    int64_t disc_base_channels = 16;
    int64_t disc_layers = 3;
    int64_t disc_scales = 1;

    // augmentation
    bool aug_enabled = true;
    double hflip_p = 0.5;
    double hue_max = 0.0;
    double grayscale_p = 0.0;
    double rotation_max_deg = 0.0;
    double translate_frac = 0.0;
    double perspective_distortion = 0.0;
    double perspective_p = 0.0;
    int64_t aug_clean_after = -1; // iteration after which augmentation turns off; -1 = never

    // bookkeeping
    int64_t checkpoint_every = 1000;
    int64_t sample_every = 1000;
    int64_t log_every = 100;
    Ablation ablation = Ablation::Full;

    void validate() const {
        if (n_members < 1) throw ConfigError("n_members must be >= 1");
        if (lambda1 > 0 && n_members < 2 && ablation != Ablation::GanOnly)
            throw ConfigError("n_members must be >= 2 when the council loss is active");
        if (epsilon <= 0) throw ConfigError("epsilon must be > 0");
        if (lambda1 < 0 || lambda2 < 0) throw ConfigError("lambda weights must be >= 0");
        if (alpha < 0 || alpha > 1) throw ConfigError("alpha must lie in [0,1]");
        if (delta < 0) throw ConfigError("delta must be >= 0");
        if (entropy_dim < 1) throw ConfigError("entropy_dim must be positive");
        if (batch_size < 1) throw ConfigError("batch_size must be positive");
        if (image_size % (int64_t(1) << n_downsample))
            throw ConfigError("image_size must be divisible by 2^n_downsample");
        for (double p : {hflip_p, grayscale_p, perspective_p})
            if (p < 0 || p > 1) throw ConfigError("augmentation probabilities must lie in [0,1]");
    }

    int64_t code_channels() const { return base_channels << n_downsample; }
    int64_t downsample_factor() const { return int64_t(1) << n_downsample; }

    double lr_at(int64_t iteration) const {
        double lr = learning_rate;
        for (int64_t k = 0; k < iteration / lr_decay_every; ++k) lr *= lr_decay_factor;
        return lr;
    }

    using Setter = std::function<void(CouncilConfig&, const std::string&)>;

    static const std::map<std::string, Setter>& setters() {
        static const std::map<std::string, Setter> table = [] {
            std::map<std::string, Setter> m;
            auto i64 = [&m](const std::string& k, int64_t CouncilConfig::*f) {
                m[k] = [f, k](CouncilConfig& c, const std::string& v) { c.*f = parse_int(k, v); };
            };
            auto f64 = [&m](const std::string& k, double CouncilConfig::*f) {
                m[k] = [f, k](CouncilConfig& c, const std::string& v) { c.*f = parse_double(k, v); };
            };
            auto b = [&m](const std::string& k, bool CouncilConfig::*f) {
                m[k] = [f, k](CouncilConfig& c, const std::string& v) { c.*f = parse_bool(k, v); };
            };
            i64("n_members", &CouncilConfig::n_members);
            f64("alpha", &CouncilConfig::alpha);
            f64("lambda1", &CouncilConfig::lambda1);
            f64("lambda2", &CouncilConfig::lambda2);
            f64("delta", &CouncilConfig::delta);
            f64("epsilon", &CouncilConfig::epsilon);
            i64("entropy_dim", &CouncilConfig::entropy_dim);
            b("focus_enabled", &CouncilConfig::focus_enabled);
            f64("learning_rate", &CouncilConfig::learning_rate);
            f64("lr_decay_factor", &CouncilConfig::lr_decay_factor);
            i64("lr_decay_every", &CouncilConfig::lr_decay_every);
            f64("adam_beta1", &CouncilConfig::adam_beta1);
            f64("adam_beta2", &CouncilConfig::adam_beta2);
            i64("batch_size", &CouncilConfig::batch_size);
            i64("loss_activation_iter", &CouncilConfig::loss_activation_iter);
            i64("max_iterations", &CouncilConfig::max_iterations);
            i64("image_size", &CouncilConfig::image_size);
            i64("base_channels", &CouncilConfig::base_channels);
            i64("n_downsample", &CouncilConfig::n_downsample);
            i64("n_res_blocks", &CouncilConfig::n_res_blocks);
            i64("mlp_hidden", &CouncilConfig::mlp_hidden);
            i64("disc_base_channels", &CouncilConfig::disc_base_channels);
            i64("disc_layers", &CouncilConfig::disc_layers);
            i64("disc_scales", &CouncilConfig::disc_scales);
            b("aug_enabled", &CouncilConfig::aug_enabled);
            f64("hflip_p", &CouncilConfig::hflip_p);
            f64("hue_max", &CouncilConfig::hue_max);
            f64("grayscale_p", &CouncilConfig::grayscale_p);
            f64("rotation_max_deg", &CouncilConfig::rotation_max_deg);
            f64("translate_frac", &CouncilConfig::translate_frac);
            f64("perspective_distortion", &CouncilConfig::perspective_distortion);
            f64("perspective_p", &CouncilConfig::perspective_p);
            i64("aug_clean_after", &CouncilConfig::aug_clean_after);
            i64("checkpoint_every", &CouncilConfig::checkpoint_every);
            i64("sample_every", &CouncilConfig::sample_every);
            i64("log_every", &CouncilConfig::log_every);
            m["ablation"] = [](CouncilConfig& c, const std::string& v) {
                c.ablation = ablation_from_string(v);
            };
            return m;
        }();
        return table;
    }

    void set(const std::string& key, const std::string& value) {
        auto it = setters().find(key);
        if (it == setters().end()) {
            std::string valid;
            for (const auto& [k, _] : setters()) valid += (valid.empty() ? "" : ", ") + k;
            throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid);
        }
        it->second(*this, value);
    }

    std::string serialize() const {
        std::ostringstream os;
        os.precision(17);
        os << "n_members = " << n_members << "\n"
           << "alpha = " << alpha << "\n"
           << "lambda1 = " << lambda1 << "\n"
           << "lambda2 = " << lambda2 << "\n"
           << "delta = " << delta << "\n"
           << "epsilon = " << epsilon << "\n"
           << "entropy_dim = " << entropy_dim << "\n"
           << "focus_enabled = " << (focus_enabled ? "true" : "false") << "\n"
           << "learning_rate = " << learning_rate << "\n"
           << "lr_decay_factor = " << lr_decay_factor << "\n"
           << "lr_decay_every = " << lr_decay_every << "\n"
           << "adam_beta1 = " << adam_beta1 << "\n"
           << "adam_beta2 = " << adam_beta2 << "\n"
           << "batch_size = " << batch_size << "\n"
           << "loss_activation_iter = " << loss_activation_iter << "\n"
           << "max_iterations = " << max_iterations << "\n"
           << "image_size = " << image_size << "\n"
           << "base_channels = " << base_channels << "\n"
           << "n_downsample = " << n_downsample << "\n"
           << "n_res_blocks = " << n_res_blocks << "\n"
           << "mlp_hidden = " << mlp_hidden << "\n"
           << "disc_base_channels = " << disc_base_channels << "\n"
           << "disc_layers = " << disc_layers << "\n"
           << "disc_scales = " << disc_scales << "\n"
           << "aug_enabled = " << (aug_enabled ? "true" : "false") << "\n"
           << "hflip_p = " << hflip_p << "\n"
           << "hue_max = " << hue_max << "\n"
           << "grayscale_p = " << grayscale_p << "\n"
           << "rotation_max_deg = " << rotation_max_deg << "\n"
           << "translate_frac = " << translate_frac << "\n"
           << "perspective_distortion = " << perspective_distortion << "\n"
           << "perspective_p = " << perspective_p << "\n"
           << "aug_clean_after = " << aug_clean_after << "\n"
           << "checkpoint_every = " << checkpoint_every << "\n"
           << "sample_every = " << sample_every << "\n"
           << "log_every = " << log_every << "\n"
           << "ablation = " << to_string(ablation) << "\n";
        return os.str();
    }

    static CouncilConfig parse(std::istream& in) {
        CouncilConfig c;
        c.apply_stream(in);
        return c;
    }

    void apply_stream(std::istream& in) {
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            auto eq = line.find('=');
            if (eq == std::string::npos) {
                if (line.find_first_not_of(" \t\r") != std::string::npos)
                    throw ConfigError("config line " + std::to_string(lineno) +
                                      ": expected 'key = value'");
                continue;
            }
            set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
    }

    static CouncilConfig load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        return parse(in);
    }

    // Application presets carry the published per-task weights; "toy" is the
    // desk-scale setup used by the synthetic datasets and the test suite.
    static CouncilConfig preset(const std::string& name) {
        CouncilConfig c;
        if (name == "male2female") {
            c.lambda1 = 0.2;
            c.lambda2 = 0.025;
            c.focus_enabled = true;
            c.image_size = 128;
            c.disc_scales = 3;
        } else if (name == "selfie2anime") {
            c.lambda1 = 0.5;
            c.lambda2 = 0.0;
            c.focus_enabled = false;
            c.image_size = 128;
            c.disc_scales = 3;
            c.hue_max = 0.15;
            c.grayscale_p = 0.25;
            c.rotation_max_deg = 35.0;
            c.translate_frac = 0.1;
            c.perspective_distortion = 0.35;
            c.perspective_p = 0.5;
        } else if (name == "glasses") {
            c.lambda1 = 0.2;
            c.lambda2 = 0.2;
            c.focus_enabled = true;
            c.image_size = 128;
            c.disc_scales = 3;
        } else if (name == "toy") {
            c.n_members = 2;
            c.lambda1 = 0.2;
            // Focus-loss forces scale with pixel count: the sharpness barrier
            // goes as lambda2/(eps^2 P) and the delta area term as
            // lambda2*delta*mean, so at P=256 the published weights pin the
            // mask at 0.5. Rebalanced for 16x16, with a gentler lr to match.
            c.lambda2 = 0.01;
            c.delta = 3.0;
            c.learning_rate = 3e-5;
            c.focus_enabled = true;
            c.image_size = 16;
            c.base_channels = 8;
            c.n_res_blocks = 2;
            c.mlp_hidden = 32;
            c.disc_base_channels = 8;
            c.disc_layers = 2;
            c.disc_scales = 1;
            c.entropy_dim = 8;
            c.max_iterations = 5000;
            c.loss_activation_iter = 500;
            c.lr_decay_every = 2500;
            c.checkpoint_every = 500;
            c.sample_every = 1000;
            c.log_every = 100;
            c.aug_enabled = false;
        } else {
            throw ConfigError("unknown preset '" + name +
                              "' (valid: toy, male2female, selfie2anime, glasses)");
        }
        return c;
    }

private:
    static std::string trim(const std::string& s) {
        auto a = s.find_first_not_of(" \t\r");
        auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? "" : s.substr(a, b - a + 1);
    }
    static int64_t parse_int(const std::string& k, const std::string& v) {
        try {
            size_t pos = 0;
            int64_t r = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (const std::exception&) {
            throw ConfigError("key '" + k + "': expected integer, got '" + v + "'");
        }
    }
    static double parse_double(const std::string& k, const std::string& v) {
        try {
            size_t pos = 0;
            double r = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (const std::exception&) {
            throw ConfigError("key '" + k + "': expected number, got '" + v + "'");
        }
    }
    static bool parse_bool(const std::string& k, const std::string& v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ConfigError("key '" + k + "': expected true/false, got '" + v + "'");
    }
};

} // namespace council
