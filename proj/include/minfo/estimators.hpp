#pragma once
// Value functions, estimate formulas and analytic optimal-discriminator
// forms for every estimator family: MMIE and alpha-MMIE (MIM-based), plus
// the MINE, NWJ, SMILE, iDIME and dDIME baselines. Units are nats.
//
// Overflow policy: the raw exponentials in J_MIM / J_alpha_MIM are computed
// directly and a non-finite result is the failure signal (never clamped);
// log-mean-exp terms in MINE/SMILE use max-shift stabilization, which is
// mathematically neutral.

#include "minfo/common.hpp"
#include "minfo/nn.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace minfo::est {

enum class EstimatorKind { Mmie, AlphaMmie, Mine, Nwj, Smile, Idime, Ddime };

inline const char* kind_name(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Mmie: return "mmie";
        case EstimatorKind::AlphaMmie: return "alpha-mmie";
        case EstimatorKind::Mine: return "mine";
        case EstimatorKind::Nwj: return "nwj";
        case EstimatorKind::Smile: return "smile";
        case EstimatorKind::Idime: return "idime";
        case EstimatorKind::Ddime: return "ddime";
    }
    return "?";
}

inline EstimatorKind kind_from_name(const std::string& s) {
    if (s == "mmie") return EstimatorKind::Mmie;
    if (s == "alpha-mmie" || s == "alphammie" || s == "alpha_mmie") return EstimatorKind::AlphaMmie;
    if (s == "mine") return EstimatorKind::Mine;
    if (s == "nwj") return EstimatorKind::Nwj;
    if (s == "smile") return EstimatorKind::Smile;
    if (s == "idime") return EstimatorKind::Idime;
    if (s == "ddime") return EstimatorKind::Ddime;
    throw std::invalid_argument("unknown estimator: " + s);
}

struct EstimatorConfig {
    EstimatorKind kind = EstimatorKind::Mmie;
    double alpha = 0.5;      // AlphaMmie shift / Ddime scale
    double tau = 1.0;        // Smile clip
    double ema_rate = 0.99;  // Mine: weight of the new batch in the EMA
    // AlphaMmie only: resolve alpha per channel via the selection guideline
    // (alpha = -beta/2 * min(R1, R2)) instead of using the fixed value above.
    bool auto_alpha = true;
    double beta = 0.7;

    static EstimatorConfig mmie() { return {EstimatorKind::Mmie}; }
    static EstimatorConfig alpha_mmie(double a) {
        EstimatorConfig c{EstimatorKind::AlphaMmie};
        c.alpha = a;
        c.auto_alpha = false;
        return c;
    }
    static EstimatorConfig alpha_mmie_auto(double beta = 0.7) {
        EstimatorConfig c{EstimatorKind::AlphaMmie};
        c.auto_alpha = true;
        c.beta = beta;
        return c;
    }
    static EstimatorConfig mine(double ema_rate = 0.99) {
        EstimatorConfig c{EstimatorKind::Mine};
        c.ema_rate = ema_rate;
        return c;
    }
    static EstimatorConfig nwj() { return {EstimatorKind::Nwj}; }
    static EstimatorConfig smile(double tau = 1.0) {
        EstimatorConfig c{EstimatorKind::Smile};
        c.tau = tau;
        return c;
    }
    static EstimatorConfig idime() { return {EstimatorKind::Idime}; }
    static EstimatorConfig ddime(double a) {
        EstimatorConfig c{EstimatorKind::Ddime};
        c.alpha = a;
        return c;
    }

    void validate() const {
        if (kind == EstimatorKind::Ddime && !(alpha > 0.0))
            throw std::invalid_argument("EstimatorConfig: dDIME alpha must be > 0");
        if (kind == EstimatorKind::Smile && !(tau > 0.0))
            throw std::invalid_argument("EstimatorConfig: SMILE tau must be > 0");
        if (kind == EstimatorKind::Mine && !(ema_rate > 0.0 && ema_rate <= 1.0))
            throw std::invalid_argument("EstimatorConfig: MINE ema_rate must be in (0,1]");
        if (kind == EstimatorKind::AlphaMmie && auto_alpha && !(beta > 0.0 && beta <= 1.0))
            throw std::invalid_argument("EstimatorConfig: beta must be in (0,1]");
    }
};

// Discriminator evaluated on paired samples (d_joint) and on permuted pairs
// (d_marginal). Finiteness is tracked by consumers, not enforced here.
struct DiscriminatorOutputs {
    Vector joint;
    Vector marginal;
};

// ---- MMIE ------------------------------------------------------------

// J_MIM(D) = E_joint[exp(1 - D)] + E_marginal[exp(D)], minimized in D.
inline double j_mim(const DiscriminatorOutputs& o) {
    return (1.0 - o.joint.array()).exp().mean() + o.marginal.array().exp().mean();
}

// I_MMIE = 2 E_joint[D] - 1.
inline double i_mmie(const DiscriminatorOutputs& o) { return 2.0 * o.joint.mean() - 1.0; }

// ---- alpha-MMIE ------------------------------------------------------

inline double j_alpha_mim(const DiscriminatorOutputs& o, double alpha) {
    return (alpha - o.joint.array()).exp().mean() + (o.marginal.array() - alpha).exp().mean();
}

inline double i_alpha_mmie(const DiscriminatorOutputs& o, double alpha) {
    return 2.0 * o.joint.mean() - 2.0 * alpha;
}

// alpha selection: zero-mean discriminator output implies alpha = -I/2;
// I is pre-estimated as beta * min(R1, R2) with R1 the Gaussian-input AWGN
// closed form and R2 = ln M for a discrete input (absent: R2 = +inf).
inline double select_alpha(int d, double sigma2, std::optional<int> M, double beta = 0.7) {
    if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("select_alpha: beta must be in (0,1]");
    const double r1 = 0.5 * static_cast<double>(d) * std::log1p(1.0 / sigma2);
    const double r2 = M ? std::log(static_cast<double>(*M)) : std::numeric_limits<double>::infinity();
    return -0.5 * beta * std::min(r1, r2);
}

// ---- iDIME (sigmoid head, outputs in (0,1)) ---------------------------

// J(D) = E_marginal[ln D] + E_joint[ln(1 - D)], maximized. D saturating to
// exactly 0 or 1 yields +-inf here, which is the failure signal.
inline double j_idime(const DiscriminatorOutputs& o) {
    return o.marginal.array().log().mean() + (1.0 - o.joint.array()).log().mean();
}

inline double i_idime(const DiscriminatorOutputs& o) {
    return ((1.0 - o.joint.array()) / o.joint.array()).log().mean();
}

// ---- dDIME (softplus head, outputs > 0) --------------------------------

// J_alpha(D) = alpha E_joint[ln D] - E_marginal[D], maximized.
inline double j_ddime(const DiscriminatorOutputs& o, double alpha) {
    return alpha * o.joint.array().log().mean() - o.marginal.mean();
}

inline double i_ddime_lb(const DiscriminatorOutputs& o, double alpha) {
    return j_ddime(o, alpha) / alpha + 1.0 - std::log(alpha);
}

inline double i_ddime_point(const DiscriminatorOutputs& o, double alpha) {
    return o.joint.array().log().mean() - std::log(alpha);
}

// ---- MINE / NWJ / SMILE (linear head) ----------------------------------

inline double i_mine(const DiscriminatorOutputs& o) {
    return o.joint.mean() - log_mean_exp(o.marginal);
}

inline double i_nwj(const DiscriminatorOutputs& o) {
    return o.joint.mean() - (o.marginal.array() - 1.0).exp().mean();
}

inline double i_smile(const DiscriminatorOutputs& o, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("i_smile: tau must be > 0");
    Vector clipped = o.marginal.array().min(tau).max(-tau);
    return o.joint.mean() - log_mean_exp(clipped);
}

// MINE's moving-average partition denominator, kept in log domain so that
// large discriminator outputs cannot overflow the state.
// ema <- (1 - rate) * ema + rate * mean(exp(T_marginal)); rate = 1 reproduces
// the plain Donsker-Varadhan gradient.
struct MineEmaState {
    bool initialized = false;
    double log_value = 0.0;

    double update(double log_batch_mean, double rate) {
        if (!initialized || rate >= 1.0) {
            log_value = log_batch_mean;
            initialized = true;
        } else {
            log_value = log_add_exp(std::log1p(-rate) + log_value, std::log(rate) + log_batch_mean);
        }
        return log_value;
    }
};

// Training loss for MINE: -mean(T_joint) + mean(exp(T_marginal))/ema, with
// the EMA treated as a constant. Returns the loss and updates the state.
inline double mine_loss(const DiscriminatorOutputs& o, MineEmaState& state, double ema_rate) {
    const double log_batch = log_mean_exp(o.marginal);
    const double log_ema = state.update(log_batch, ema_rate);
    return -o.joint.mean() + std::exp(log_batch - log_ema);
}

// ---- Renyi link --------------------------------------------------------

// Lower bound on R_1/2(p_XY || p_X p_Y): -2 ln J_MIM(D) + 1 + 2 ln 2, tight
// at the optimal discriminator.
inline double renyi_capacity_lb(double j_mim_value) {
    if (!(j_mim_value > 0.0))
        throw std::invalid_argument("renyi_capacity_lb: J value must be > 0");
    return -2.0 * std::log(j_mim_value) + 1.0 + 2.0 * kLn2;
}

// ---- Analytic optimal discriminators (test oracles) ---------------------

inline double d_star(EstimatorKind kind, double log_ratio, double alpha = 0.5) {
    switch (kind) {
        case EstimatorKind::Mmie:
            return 0.5 + 0.5 * log_ratio;
        case EstimatorKind::AlphaMmie:
            return alpha + 0.5 * log_ratio;
        case EstimatorKind::Mine:   // optimal up to an additive constant
        case EstimatorKind::Smile:
            return log_ratio;
        case EstimatorKind::Nwj:
            return 1.0 + log_ratio;
        case EstimatorKind::Idime:
            return 1.0 / (1.0 + std::exp(log_ratio));
        case EstimatorKind::Ddime:
            return alpha * std::exp(log_ratio);
    }
    return 0.0;
}

inline DiscriminatorOutputs d_star_oracle(EstimatorKind kind, const Vector& log_ratio_joint,
                                          const Vector& log_ratio_marginal, double alpha = 0.5) {
    DiscriminatorOutputs o;
    o.joint = log_ratio_joint.unaryExpr([&](double r) { return d_star(kind, r, alpha); });
    o.marginal = log_ratio_marginal.unaryExpr([&](double r) { return d_star(kind, r, alpha); });
    return o;
}

// ---- Training glue -------------------------------------------------------

inline nn::Activation head_activation(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Idime: return nn::Activation::Sigmoid;
        case EstimatorKind::Ddime: return nn::Activation::Softplus;
        default: return nn::Activation::Linear;
    }
}

// Loss (minimized) and its gradients w.r.t. the discriminator outputs for one
// batch. Maximized objectives are negated. The gradients are the raw chain
// terms; saturation-induced non-finite values propagate on purpose.
struct TrainingGrads {
    double loss = 0.0;
    Vector d_joint;
    Vector d_marginal;
};

inline TrainingGrads training_grads(const EstimatorConfig& cfg, const DiscriminatorOutputs& o,
                                    MineEmaState* mine_state = nullptr) {
    const double nj = static_cast<double>(o.joint.size());
    const double nm = static_cast<double>(o.marginal.size());
    TrainingGrads g;
    switch (cfg.kind) {
        case EstimatorKind::Mmie:
            g.loss = j_mim(o);
            g.d_joint = -(1.0 - o.joint.array()).exp() / nj;
            g.d_marginal = o.marginal.array().exp() / nm;
            break;
        case EstimatorKind::AlphaMmie:
            g.loss = j_alpha_mim(o, cfg.alpha);
            g.d_joint = -(cfg.alpha - o.joint.array()).exp() / nj;
            g.d_marginal = (o.marginal.array() - cfg.alpha).exp() / nm;
            break;
        case EstimatorKind::Mine: {
            if (!mine_state) throw std::invalid_argument("training_grads: MINE needs EMA state");
            g.loss = mine_loss(o, *mine_state, cfg.ema_rate);
            g.d_joint = Vector::Constant(o.joint.size(), -1.0 / nj);
            g.d_marginal = (o.marginal.array() - mine_state->log_value).exp() / nm;
            break;
        }
        case EstimatorKind::Nwj:
            g.loss = -i_nwj(o);
            g.d_joint = Vector::Constant(o.joint.size(), -1.0 / nj);
            g.d_marginal = (o.marginal.array() - 1.0).exp() / nm;
            break;
        case EstimatorKind::Smile: {
            g.loss = -i_smile(o, cfg.tau);
            g.d_joint = Vector::Constant(o.joint.size(), -1.0 / nj);
            Vector clipped = o.marginal.array().min(cfg.tau).max(-cfg.tau);
            const double lme = log_mean_exp(clipped);
            g.d_marginal = Vector::Zero(o.marginal.size());
            for (int i = 0; i < o.marginal.size(); ++i)
                if (std::abs(o.marginal(i)) < cfg.tau)
                    g.d_marginal(i) = std::exp(o.marginal(i) - lme) / nm;
            break;
        }
        case EstimatorKind::Idime:
            g.loss = -j_idime(o);
            g.d_joint = (1.0 / (1.0 - o.joint.array())) / nj;
            g.d_marginal = (-1.0 / o.marginal.array()) / nm;
            break;
        case EstimatorKind::Ddime:
            g.loss = -j_ddime(o, cfg.alpha);
            g.d_joint = (-cfg.alpha / o.joint.array()) / nj;
            g.d_marginal = Vector::Constant(o.marginal.size(), 1.0 / nm);
            break;
    }
    return g;
}

// Per-batch estimate in nats. dDIME reports the point estimate
// E_joint[ln(D/alpha)]; the lower-bound form stays available as i_ddime_lb.
inline double estimate(const EstimatorConfig& cfg, const DiscriminatorOutputs& o) {
    switch (cfg.kind) {
        case EstimatorKind::Mmie: return i_mmie(o);
        case EstimatorKind::AlphaMmie: return i_alpha_mmie(o, cfg.alpha);
        case EstimatorKind::Mine: return i_mine(o);
        case EstimatorKind::Nwj: return i_nwj(o);
        case EstimatorKind::Smile: return i_smile(o, cfg.tau);
        case EstimatorKind::Idime: return i_idime(o);
        case EstimatorKind::Ddime: return i_ddime_point(o, cfg.alpha);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace minfo::est
