#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "genlearn/config.hpp"
#include "genlearn/errors.hpp"
#include "genlearn/latent.hpp"  // sample_mean / sample_covariance
#include "genlearn/matrix.hpp"
#include "genlearn/neuralnet.hpp"
#include "genlearn/rng.hpp"

namespace genlearn {

/// Noising schedule. All tables are 1-indexed by the step t (slot 0 unused).
/// alpha holds the running products prod_{tau<=t}(1-beta_tau); sigma2 and
/// beta_prime are the matched backward variances, defined for t >= 2 and
/// extended to t = 1 by beta_prime_1 := beta_1.
struct DiffusionSchedule {
    std::size_t T = 0;
    Vec beta;
    Vec alpha;
    Vec beta_prime;
    Vec sigma2;

    double beta_at(std::size_t t) const {
        check(t);
        return beta[t];
    }
    double alpha_at(std::size_t t) const {
        check(t);
        return alpha[t];
    }
    double beta_prime_at(std::size_t t) const {
        check(t);
        return beta_prime[t];
    }
    double sigma2_at(std::size_t t) const {
        if (t < 2 || t > T) throw std::invalid_argument("sigma2_at: requires 2 <= t <= T");
        return sigma2[t];
    }

  private:
    void check(std::size_t t) const {
        if (t < 1 || t > T) throw std::invalid_argument("schedule: step out of range");
    }
};

struct BetaSpec {
    enum class Kind { kConstant, kLinear } kind;
    double lo, hi;

    static BetaSpec constant(double b) { return {Kind::kConstant, b, b}; }
    static BetaSpec linear(double lo, double hi) { return {Kind::kLinear, lo, hi}; }
};

inline DiffusionSchedule make_schedule(std::size_t T, const Vec& betas) {
    if (T < 2) throw InvalidSchedule("make_schedule: requires T >= 2");
    if (betas.size() != T) throw InvalidSchedule("make_schedule: needs one beta per step");
    DiffusionSchedule s;
    s.T = T;
    s.beta.assign(T + 1, 0.0);
    s.alpha.assign(T + 1, 1.0);
    s.beta_prime.assign(T + 1, 0.0);
    s.sigma2.assign(T + 1, 0.0);
    for (std::size_t t = 1; t <= T; ++t) {
        const double b = betas[t - 1];
        if (!(b > 0.0) || !(b < 1.0))
            throw InvalidSchedule("make_schedule: beta must lie in (0,1)");
        s.beta[t] = b;
        s.alpha[t] = s.alpha[t - 1] * (1.0 - b);
    }
    s.beta_prime[1] = s.beta[1];
    for (std::size_t t = 2; t <= T; ++t) {
        const double v = s.beta[t] * (1.0 - s.alpha[t - 1]) / (1.0 - s.alpha[t]);
        s.sigma2[t] = v;
        s.beta_prime[t] = v;
    }
    return s;
}

inline DiffusionSchedule make_schedule(std::size_t T, const BetaSpec& spec) {
    if (T < 2) throw InvalidSchedule("make_schedule: requires T >= 2");
    Vec betas(T);
    for (std::size_t t = 0; t < T; ++t) {
        betas[t] = spec.kind == BetaSpec::Kind::kConstant
                       ? spec.lo
                       : spec.lo + (spec.hi - spec.lo) * static_cast<double>(t) /
                             static_cast<double>(T - 1);
    }
    return make_schedule(T, betas);
}

struct ForwardDraw {
    Vec z;      // z_t = sqrt(alpha_t) x + sqrt(1-alpha_t) w
    Vec noise;  // the w draw, kept as the training target
};

inline ForwardDraw forward_marginal(const DiffusionSchedule& s, const Vec& x, std::size_t t,
                                    Rng& rng) {
    const double a = s.alpha_at(t);
    ForwardDraw d;
    d.noise = sample_std_normal(rng, x.size());
    d.z = std::sqrt(a) * x;
    axpy(std::sqrt(1.0 - a), d.noise, d.z);
    return d;
}

struct PosteriorParams {
    Vec mean;
    double var;
};

/// Exact conditional backward posterior of z_{t-1} given (z_t, x), t >= 2.
inline PosteriorParams backward_posterior(const DiffusionSchedule& s, const Vec& x,
                                          const Vec& z_t, std::size_t t) {
    if (t < 2 || t > s.T)
        throw std::invalid_argument("backward_posterior: requires 2 <= t <= T");
    const double beta = s.beta_at(t);
    const double a_prev = s.alpha_at(t - 1);
    const double a = s.alpha_at(t);
    const double cz = (1.0 - a_prev) * std::sqrt(1.0 - beta) / (1.0 - a);
    const double cx = std::sqrt(a_prev) * beta / (1.0 - a);
    PosteriorParams p;
    p.mean = cz * z_t;
    axpy(cx, x, p.mean);
    p.var = s.sigma2_at(t);
    return p;
}

enum class DenoiserMode { kMean, kNoise };

/// Network over (z_t, t); the step enters as the pair (t/T, sqrt(alpha_t)).
struct DenoiserNet {
    MlpParams net;
    DenoiserMode mode = DenoiserMode::kMean;
    std::size_t data_dim() const { return net.output_dim(); }
};

inline DenoiserNet make_denoiser(std::size_t data_dim, const std::vector<std::size_t>& hidden,
                                 Activation act, DenoiserMode mode, Rng& rng) {
    DenoiserNet d;
    d.mode = mode;
    d.net = make_mlp(data_dim + 2, hidden, act, data_dim, OutputHead::kGaussianRegression, rng);
    return d;
}

inline Vec denoiser_input(const DiffusionSchedule& s, const Vec& z, std::size_t t) {
    Vec in = z;
    in.push_back(static_cast<double>(t) / static_cast<double>(s.T));
    in.push_back(std::sqrt(s.alpha_at(t)));
    return in;
}

/// Raw network output: mu_t(z) in mean mode, v_t(z) in noise mode.
inline Vec denoiser_eval(const DenoiserNet& d, const DiffusionSchedule& s, const Vec& z,
                         std::size_t t) {
    return predict(d.net, denoiser_input(s, z, t));
}

/// Mean parameterized through a noise estimate:
/// mu = (z - beta_t/sqrt(1-alpha_t) * v) / sqrt(1-beta_t).
inline Vec mean_from_noise(const DiffusionSchedule& s, const Vec& z, std::size_t t,
                           const Vec& v) {
    const double beta = s.beta_at(t);
    Vec mu = z;
    axpy(-beta / std::sqrt(1.0 - s.alpha_at(t)), v, mu);
    return (1.0 / std::sqrt(1.0 - beta)) * mu;
}

inline Vec denoiser_mean(const DenoiserNet& d, const DiffusionSchedule& s, const Vec& z,
                         std::size_t t) {
    const Vec out = denoiser_eval(d, s, z, t);
    return d.mode == DenoiserMode::kMean ? out : mean_from_noise(s, z, t, out);
}

/// Optional per-step weight on the noise loss (off by default).
inline double noise_loss_weight(const DiffusionSchedule& s, std::size_t t) {
    const double beta = s.beta_at(t);
    return beta / (2.0 * (1.0 - s.alpha_at(t)) * (1.0 - beta));
}

/// Reconstruction negative log-likelihood at t = 1 with variance beta_1.
inline double reconstruction_nll(const DiffusionSchedule& s, const Vec& x, const Vec& mu1) {
    const double var = s.beta_prime_at(1);
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double r = x[j] - mu1[j];
        sq += r * r;
    }
    return sq / (2.0 * var) + 0.5 * static_cast<double>(x.size()) * std::log(2.0 * M_PI * var);
}

/// Per-draw training loss with the forward draw pinned (z_t, w given).
inline double diffusion_loss_given(const DenoiserNet& net, const DiffusionSchedule& s,
                                   const Vec& x, std::size_t t, const Vec& z, const Vec& w,
                                   bool weighted = false) {
    if (t == 1) return reconstruction_nll(s, x, denoiser_mean(net, s, z, 1));
    if (net.mode == DenoiserMode::kMean) {
        const Vec m = backward_posterior(s, x, z, t).mean;
        return squared_norm(m - denoiser_eval(net, s, z, t));
    }
    const double base = squared_norm(denoiser_eval(net, s, z, t) - w);
    return weighted ? noise_loss_weight(s, t) * base : base;
}

/// Single-draw training loss: sample (z_t, w), then the squared matching
/// error (t >= 2) or the reconstruction term (t = 1).
inline double diffusion_loss(const DenoiserNet& net, const DiffusionSchedule& s, const Vec& x,
                             std::size_t t, Rng& rng, bool weighted = false) {
    const ForwardDraw d = forward_marginal(s, x, t, rng);
    return diffusion_loss_given(net, s, x, t, d.z, d.noise, weighted);
}

/// Trained model bundle: net + schedule + the stored standardization.
struct DiffusionModel {
    DenoiserNet net;
    DiffusionSchedule schedule;
    Vec data_mean;
    Vec data_scale;
};

struct DiffusionTrainResult {
    DiffusionModel model;
    Vec loss_trace;                  // per-step batch mean loss
    std::vector<std::size_t> step_t; // the t drawn at each step
};

/// Training loop: per step draw a batch, one uniform t, fresh noise per
/// sample, gradient step on the per-sample loss. Data are standardized
/// internally; the transform is stored on the model.
inline DiffusionTrainResult diffusion_train(const DenseMatrix& ds, const DiffusionSchedule& s,
                                            const std::vector<std::size_t>& hidden,
                                            const ExperimentConfig& cfg,
                                            DenoiserMode mode = DenoiserMode::kMean,
                                            bool weighted = false,
                                            Activation hidden_act = Activation::kRelu) {
    const std::size_t n = ds.rows(), dim = ds.cols();
    DiffusionTrainResult out;
    out.model.schedule = s;
    out.model.data_mean = sample_mean(ds);
    out.model.data_scale.assign(dim, 1.0);
    {
        const DenseMatrix cov = sample_covariance(ds, out.model.data_mean);
        for (std::size_t j = 0; j < dim; ++j)
            out.model.data_scale[j] = cov(j, j) > 1e-12 ? std::sqrt(cov(j, j)) : 1.0;
    }
    DenseMatrix std_data(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            std_data(i, j) = (ds(i, j) - out.model.data_mean[j]) / out.model.data_scale[j];

    Rng init_rng = Rng(cfg.seed).split("diffusion-init");
    out.model.net = make_denoiser(dim, hidden, hidden_act, mode, init_rng);
    Rng step_rng = Rng(cfg.seed).split("diffusion-train");

    const std::size_t batch = std::min<std::size_t>(std::max<std::size_t>(cfg.batch_size, 1), n);
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        const std::size_t t = 1 + step_rng.uniform_index(s.T);
        MlpGradients grads = zero_gradients(out.model.net.net);
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
            const Vec x = std_data.row(step_rng.uniform_index(n));
            const ForwardDraw draw = forward_marginal(s, x, t, step_rng);
            const Vec in = denoiser_input(s, draw.z, t);
            const ForwardCache cache = forward(out.model.net.net, in);
            const Vec& raw = cache.output();

            Vec dout(dim, 0.0);
            if (t == 1) {
                // Squared-norm step toward x, matching the scale of the
                // t >= 2 terms (the beta_1-weighted log-density gradient
                // points the same way but explodes for small beta_1).
                Vec mu = raw;
                if (mode == DenoiserMode::kNoise) mu = mean_from_noise(s, draw.z, 1, raw);
                batch_loss += squared_norm(x - mu);
                for (std::size_t j = 0; j < dim; ++j) dout[j] = 2.0 * (mu[j] - x[j]);
                if (mode == DenoiserMode::kNoise) {
                    const double jac = -s.beta_at(1) /
                                       (std::sqrt(1.0 - s.alpha_at(1)) *
                                        std::sqrt(1.0 - s.beta_at(1)));
                    for (double& v : dout) v *= jac;
                }
            } else if (mode == DenoiserMode::kMean) {
                const Vec m = backward_posterior(s, x, draw.z, t).mean;
                batch_loss += squared_norm(m - raw);
                for (std::size_t j = 0; j < dim; ++j) dout[j] = 2.0 * (raw[j] - m[j]);
            } else {
                const double wgt = weighted ? noise_loss_weight(s, t) : 1.0;
                batch_loss += wgt * squared_norm(raw - draw.noise);
                for (std::size_t j = 0; j < dim; ++j)
                    dout[j] = 2.0 * wgt * (raw[j] - draw.noise[j]);
            }
            const BackwardResult back = backward_from_output(out.model.net.net, cache, dout);
            for (std::size_t li = 0; li < grads.size(); ++li)
                for (std::size_t e = 0; e < grads[li].data().size(); ++e)
                    grads[li].data()[e] += back.grads[li].data()[e];
        }
        batch_loss /= static_cast<double>(batch);
        if (!std::isfinite(batch_loss))
            throw TrainingDivergence(step, "diffusion_train: non-finite loss");
        apply_update(out.model.net.net, grads, -cfg.learning_rate / static_cast<double>(batch));
        out.loss_trace.push_back(batch_loss);
        out.step_t.push_back(t);
    }
    return out;
}

/// z_T ~ N(0,I); z_{t-1} = mu_t(z_t) + sqrt(beta'_t) u_t down to the final
/// x = mu_1(z_1) + sqrt(beta'_1) u_1. Works in standardized coordinates.
template <class MeanFn>
Vec sample_backward_chain(const MeanFn& mean_fn, const DiffusionSchedule& s, std::size_t dim,
                          Rng& rng) {
    Vec z = sample_std_normal(rng, dim);
    for (std::size_t t = s.T; t >= 1; --t) {
        Vec next = mean_fn(z, t);
        const Vec u = sample_std_normal(rng, dim);
        axpy(std::sqrt(s.beta_prime_at(t)), u, next);
        z = std::move(next);
        if (t == 1) break;
    }
    return z;
}

/// Draw one sample from a trained model (raw data coordinates).
inline Vec diffusion_sample(const DiffusionModel& model, Rng& rng) {
    const std::size_t dim = model.net.data_dim();
    Vec x = sample_backward_chain(
        [&](const Vec& z, std::size_t t) {
            return denoiser_mean(model.net, model.schedule, z, t);
        },
        model.schedule, dim, rng);
    for (std::size_t j = 0; j < dim; ++j)
        x[j] = model.data_mean[j] + model.data_scale[j] * x[j];
    return x;
}

struct ScoreGapReport {
    double mean_matching_loss;    // sum_t E (1/2 sigma_t^2) ||m_t - mu_t||^2
    double score_matching_loss;   // the same objective after the exact
                                  // mean-to-score change of variables
    double difference;            // theta-independent (identically zero)
    double bridge_residual_exact;     // m_t vs (z + beta_t * score)/sqrt(1-beta_t)
    double bridge_residual_approx;    // m_t vs z + sigma_t^2 * score
};

/// Evaluates the T-1 matching terms both as mean matching and as denoising
/// score matching on a shared Monte-Carlo sample. The model score is read
/// off the mean via s(z) = (sqrt(1-beta_t) mu(z) - z)/beta_t, the exact
/// inverse of the mean parameterization; with it the two losses coincide
/// term by term. The report also measures both forms of the posterior-mean
/// score bridge (the exact one and the small-beta approximation).
inline ScoreGapReport elbo_score_gap(const DenoiserNet& net, const DiffusionSchedule& s,
                                     const Vec& x, Rng& rng, std::size_t mc_samples = 16) {
    ScoreGapReport r{0.0, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t t = 2; t <= s.T; ++t) {
        const double beta = s.beta_at(t);
        const double a = s.alpha_at(t);
        const double sig2 = s.sigma2_at(t);
        double mean_term = 0.0, score_term = 0.0;
        for (std::size_t j = 0; j < mc_samples; ++j) {
            const ForwardDraw d = forward_marginal(s, x, t, rng);
            const Vec m = backward_posterior(s, x, d.z, t).mean;
            const Vec mu = denoiser_mean(net, s, d.z, t);
            mean_term += squared_norm(m - mu) / (2.0 * sig2);

            // Gaussian score of the forward marginal given x.
            Vec score_target = std::sqrt(a) * x;
            axpy(-1.0, d.z, score_target);
            for (double& v : score_target) v /= (1.0 - a);
            // Model score from the exact change of variables.
            Vec model_score = std::sqrt(1.0 - beta) * mu;
            axpy(-1.0, d.z, model_score);
            for (double& v : model_score) v /= beta;
            score_term += beta * beta / (2.0 * sig2 * (1.0 - beta)) *
                          squared_norm(score_target - model_score);

            // Bridge residuals.
            Vec bridge_exact = d.z;
            axpy(beta, score_target, bridge_exact);
            for (double& v : bridge_exact) v /= std::sqrt(1.0 - beta);
            r.bridge_residual_exact =
                std::max(r.bridge_residual_exact, norm_inf(m - bridge_exact));
            Vec bridge_approx = d.z;
            axpy(sig2, score_target, bridge_approx);
            r.bridge_residual_approx =
                std::max(r.bridge_residual_approx, norm_inf(m - bridge_approx));
        }
        r.mean_matching_loss += mean_term / static_cast<double>(mc_samples);
        r.score_matching_loss += score_term / static_cast<double>(mc_samples);
    }
    r.difference = r.mean_matching_loss - r.score_matching_loss;
    return r;
}

}  // namespace genlearn
