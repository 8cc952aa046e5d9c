#pragma once

#include "council/model.hpp"

namespace council {

// Per-member scalar record of one optimization step.
struct LossReport {
    real gan_d = 0;
    real gan_g = 0;
    real council_d = 0;
    real council_g = 0;
    real focus = 0;
    real total_g = 0;

    bool all_finite() const {
        for (real v : {gan_d, gan_g, council_d, council_g, focus, total_g})
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string record(int64_t iteration, int64_t member) const {
        std::ostringstream os;
        os.precision(10);
        os << "iter=" << iteration << " member=" << member << " gan_d=" << gan_d
           << " gan_g=" << gan_g << " council_d=" << council_d
           << " council_g=" << council_g << " focus=" << focus << " total_g=" << total_g;
        return os.str();
    }
};

using ScoreMaps = std::vector<Var>;
using ImagePair = std::pair<Var, Var>; // (output, input)

namespace detail {

inline void check_finite_scores(const ScoreMaps& s, const char* who) {
    for (const auto& v : s)
        if (!v.value().all_finite())
            throw DivergenceError(std::string(who) + ": non-finite discriminator scores");
}

// Mean over scales of mean squared distance to a constant target.
inline Var ls_loss(const ScoreMaps& scores, real target) {
    Var acc;
    for (const auto& s : scores) {
        Var term = mean_all(square(add_scalar(s, -target)));
        acc = acc.defined() ? acc + term : term;
    }
    return scale(acc, 1.0 / static_cast<real>(scores.size()));
}

} // namespace detail

// Least-squares GAN discriminator loss: real -> 1, fake -> 0. The fake
// scores must be computed on gradient-detached generator outputs.
inline Var gan_d_loss(const ScoreMaps& scores_real, const ScoreMaps& scores_fake) {
    detail::check_finite_scores(scores_real, "gan_d_loss");
    detail::check_finite_scores(scores_fake, "gan_d_loss");
    return detail::ls_loss(scores_real, 1.0) + detail::ls_loss(scores_fake, 0.0);
}

// Generator side: push own fakes toward the "real" target.
inline Var gan_g_loss(const ScoreMaps& scores_fake) {
    detail::check_finite_scores(scores_fake, "gan_g_loss");
    return detail::ls_loss(scores_fake, 1.0);
}

// Score-level council discriminator loss: own pair -> 0, each other pair
// -> 1, other terms averaged over j != i.
inline Var council_d_loss_scores(const ScoreMaps& own_scores,
                                 const std::vector<ScoreMaps>& other_scores) {
    if (other_scores.empty())
        throw std::invalid_argument("council_d_loss: needs at least one other member");
    Var own = detail::ls_loss(own_scores, 0.0);
    Var others;
    for (const auto& s : other_scores) {
        Var term = detail::ls_loss(s, 1.0);
        others = others.defined() ? others + term : term;
    }
    Var total = own + scale(others, 1.0 / static_cast<real>(other_scores.size()));
    if (!total.value().all_finite())
        throw DivergenceError("council_d_loss: non-finite loss");
    return total;
}

// Council discriminator loss. D-hat learns to score its own generator's
// (output, input) pair as 0 and every other member's pair as 1. Other
// members' outputs must arrive detached and built from alpha-scaled entropy
// vectors.
inline Var council_d_loss(const CouncilMember& member, const ImagePair& own_pair,
                          const std::vector<ImagePair>& other_pairs) {
    if (other_pairs.empty())
        throw std::invalid_argument("council_d_loss: needs at least one other member");
    std::vector<ScoreMaps> others;
    others.reserve(other_pairs.size());
    for (const auto& [out, in] : other_pairs)
        others.push_back(member.council_discriminate(out, in));
    return council_d_loss_scores(member.council_discriminate(own_pair.first, own_pair.second),
                                 others);
}

// Generator side of the council game: G_i is rewarded when D-hat_i mistakes
// its output for another member's.
inline Var council_g_loss(const CouncilMember& member, const ImagePair& own_pair) {
    Var loss = detail::ls_loss(member.council_discriminate(own_pair.first, own_pair.second), 1.0);
    if (!loss.value().all_finite())
        throw DivergenceError("council_g_loss: non-finite loss");
    return loss;
}

// Ablation variant operating on raw generator outputs paired with the shared
// input image; coincides with council_d_loss when alpha = 1 and the entropy
// draws match.
inline Var naive_council_d_loss(const CouncilMember& member, const Var& own_output,
                                const std::vector<Var>& other_outputs, const Var& input) {
    std::vector<ImagePair> others;
    others.reserve(other_outputs.size());
    for (const auto& o : other_outputs) others.emplace_back(o, input);
    return council_d_loss(member, {own_output, input}, others);
}

// Mask economy term: per image, delta * (sum m)^2 / P plus the mean of
// 1 / (|m - 0.5| + eps); both normalized by the pixel count P, averaged over
// the batch. Drives masks small and binary.
inline Var focus_loss(const Var& mask, real delta, real epsilon) {
    if (epsilon <= 0) throw ConfigError("focus_loss: epsilon must be > 0");
    if (delta < 0) throw ConfigError("focus_loss: delta must be >= 0");
    const int64_t batch = mask.value().dim(0);
    const real P = static_cast<real>(mask.value().numel() / batch);
    Var area = sum_per_sample(mask);                         // (B,)
    Var size_term = scale(square(area), delta / P);
    Var sharp = reciprocal(add_scalar(abs(add_scalar(mask, -0.5)), epsilon));
    Var sharp_term = scale(sum_per_sample(sharp), 1.0 / P);  // (B,)
    return mean_all(size_term + sharp_term);
}

// Full generator objective: gan_g + lambda1 * council_g + lambda2 * focus.
// Pass undefined Vars for terms that are inactive.
inline Var total_g_objective(const Var& gan_g, const Var& council_g, const Var& focus,
                             real lambda1, real lambda2) {
    if (lambda1 < 0 || lambda2 < 0)
        throw ConfigError("total_g_objective: lambda weights must be >= 0");
    Var total = gan_g;
    if (council_g.defined() && lambda1 > 0) total = total + scale(council_g, lambda1);
    if (focus.defined() && lambda2 > 0) total = total + scale(focus, lambda2);
    return total;
}

} // namespace council
