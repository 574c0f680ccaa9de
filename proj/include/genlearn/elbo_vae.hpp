#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "genlearn/config.hpp"
#include "genlearn/errors.hpp"
#include "genlearn/latent.hpp"
#include "genlearn/neuralnet.hpp"
#include "genlearn/pmf.hpp"
#include "genlearn/rng.hpp"

namespace genlearn {

/// KL(N(mu, diag(var)) || N(0, I)) in nats: (1/2) sum (mu^2 + var - 1 - ln var).
inline double gaussian_kl_std(const Vec& mu, const Vec& var) {
    if (mu.size() != var.size()) throw std::invalid_argument("gaussian_kl_std: size mismatch");
    double kl = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (!(var[k] > 0.0))
            throw std::invalid_argument("gaussian_kl_std: variances must be positive");
        kl += mu[k] * mu[k] + var[k] - 1.0 - std::log(var[k]);
    }
    return 0.5 * kl;
}

struct ElboReport {
    double elbo;            // nats
    double reconstruction;  // E_g[log f(x|Z)]
    double kl;              // D(g || prior)
    std::optional<double> exact_loglik;  // when the model admits one
    std::optional<double> gap;           // exact_loglik - elbo
};

/// ELBO for a discrete-latent Gaussian mixture, where everything is exact:
/// reconstruction under g, KL(g || mixing weights), the true log f(x), and
/// the gap (which equals KL(g || posterior)).
inline ElboReport elbo_tractable(const GmmParams& model, const Vec& x, const Pmf& g) {
    if (g.size() != model.components())
        throw std::invalid_argument("elbo_tractable: g must range over the components");
    ElboReport r{0.0, 0.0, 0.0, std::nullopt, std::nullopt};
    for (std::size_t j = 0; j < g.size(); ++j) {
        if (g[j] == 0.0) continue;
        r.reconstruction += g[j] * mvn_logpdf(x, model.means[j], model.covs[j]);
        r.kl += model.weights[j] > 0.0
                    ? g[j] * std::log(g[j] / model.weights[j])
                    : std::numeric_limits<double>::infinity();
    }
    r.elbo = r.reconstruction - r.kl;
    r.exact_loglik = gmm_logpdf(model, x);
    r.gap = *r.exact_loglik - r.elbo;
    return r;
}

/// Amortized Gaussian encoder + Gaussian decoder with fixed isotropic noise.
struct VaeModel {
    MlpParams encoder;  // x -> (mu, log var) in R^{2K}
    MlpParams decoder;  // z -> decoder mean in R^M
    std::size_t latent_dim;
    double decoder_var;
};

inline VaeModel make_vae(std::size_t data_dim, std::size_t latent_dim,
                         const std::vector<std::size_t>& encoder_hidden,
                         const std::vector<std::size_t>& decoder_hidden, Activation act,
                         double decoder_var, Rng& rng) {
    if (!(latent_dim < data_dim)) throw std::invalid_argument("make_vae: requires K < M");
    if (!(decoder_var > 0.0)) throw std::invalid_argument("make_vae: decoder_var must be > 0");
    VaeModel m;
    m.latent_dim = latent_dim;
    m.decoder_var = decoder_var;
    m.encoder = make_mlp(data_dim, encoder_hidden, act, 2 * latent_dim,
                         OutputHead::kGaussianRegression, rng);
    m.decoder = make_mlp(latent_dim, decoder_hidden, act, data_dim,
                         OutputHead::kGaussianRegression, rng);
    return m;
}

inline double gaussian_loglik_iso(const Vec& x, const Vec& mean, double var) {
    double sq = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double r = x[j] - mean[j];
        sq += r * r;
    }
    return -0.5 * static_cast<double>(x.size()) * std::log(2.0 * M_PI * var) -
           sq / (2.0 * var);
}

/// Single-sample ELBO with the encoder outputs and noise draws pinned; the
/// reparameterized z is mu + exp(logvar/2) * eps.
inline double vae_elbo_given_outputs(const VaeModel& m, const Vec& x, const Vec& mu,
                                     const Vec& logvar, const std::vector<Vec>& eps) {
    double recon = 0.0;
    for (const Vec& e : eps) {
        Vec z(m.latent_dim);
        for (std::size_t k = 0; k < m.latent_dim; ++k)
            z[k] = mu[k] + std::exp(0.5 * logvar[k]) * e[k];
        recon += gaussian_loglik_iso(x, predict(m.decoder, z), m.decoder_var);
    }
    recon /= static_cast<double>(eps.size());
    Vec var(m.latent_dim);
    for (std::size_t k = 0; k < m.latent_dim; ++k) var[k] = std::exp(logvar[k]);
    return recon - gaussian_kl_std(mu, var);
}

struct VaeOutputGrad {
    Vec dmu;
    Vec dlogvar;
};

/// d(ELBO)/d(encoder outputs) on the same frozen noise. The reconstruction
/// pathway flows through z; the KL term is closed-form.
inline VaeOutputGrad vae_elbo_output_grad(const VaeModel& m, const Vec& x, const Vec& mu,
                                          const Vec& logvar, const std::vector<Vec>& eps) {
    VaeOutputGrad g{Vec(m.latent_dim, 0.0), Vec(m.latent_dim, 0.0)};
    const double inv_mc = 1.0 / static_cast<double>(eps.size());
    for (const Vec& e : eps) {
        Vec z(m.latent_dim);
        for (std::size_t k = 0; k < m.latent_dim; ++k)
            z[k] = mu[k] + std::exp(0.5 * logvar[k]) * e[k];
        const ForwardCache cache = forward(m.decoder, z);
        Vec dout(x.size());
        for (std::size_t j = 0; j < x.size(); ++j)
            dout[j] = (x[j] - cache.output()[j]) / m.decoder_var;
        const BackwardResult back = backward_from_output(m.decoder, cache, dout);
        for (std::size_t k = 0; k < m.latent_dim; ++k) {
            g.dmu[k] += inv_mc * back.input_grad[k];
            g.dlogvar[k] += inv_mc * back.input_grad[k] * 0.5 * std::exp(0.5 * logvar[k]) * e[k];
        }
    }
    for (std::size_t k = 0; k < m.latent_dim; ++k) {
        g.dmu[k] -= mu[k];
        g.dlogvar[k] -= 0.5 * (std::exp(logvar[k]) - 1.0);
    }
    return g;
}

/// Monte-Carlo ELBO over a batch (per-sample means). Deterministic given rng.
inline ElboReport vae_loss(const VaeModel& m, const DenseMatrix& batch, Rng& rng,
                           std::size_t mc_samples) {
    if (mc_samples == 0) throw std::invalid_argument("vae_loss: mc_samples must be >= 1");
    ElboReport r{0.0, 0.0, 0.0, std::nullopt, std::nullopt};
    const auto n = static_cast<double>(batch.rows());
    for (std::size_t i = 0; i < batch.rows(); ++i) {
        const Vec x = batch.row(i);
        const Vec enc = predict(m.encoder, x);
        Vec mu(enc.begin(), enc.begin() + static_cast<std::ptrdiff_t>(m.latent_dim));
        Vec logvar(enc.begin() + static_cast<std::ptrdiff_t>(m.latent_dim), enc.end());
        double recon = 0.0;
        for (std::size_t s = 0; s < mc_samples; ++s) {
            const Vec e = sample_std_normal(rng, m.latent_dim);
            Vec z(m.latent_dim);
            for (std::size_t k = 0; k < m.latent_dim; ++k)
                z[k] = mu[k] + std::exp(0.5 * logvar[k]) * e[k];
            recon += gaussian_loglik_iso(x, predict(m.decoder, z), m.decoder_var);
        }
        recon /= static_cast<double>(mc_samples);
        Vec var(m.latent_dim);
        for (std::size_t k = 0; k < m.latent_dim; ++k) var[k] = std::exp(logvar[k]);
        const double kl = gaussian_kl_std(mu, var);
        r.reconstruction += recon / n;
        r.kl += kl / n;
    }
    r.elbo = r.reconstruction - r.kl;
    if (!std::isfinite(r.elbo)) throw TrainingDivergence(0, "vae_loss: non-finite ELBO");
    return r;
}

/// Decoder draw: z ~ N(0,I) -> decoder mean + isotropic noise.
inline Vec vae_sample(const VaeModel& m, Rng& rng) {
    const Vec z = sample_std_normal(rng, m.latent_dim);
    Vec x = predict(m.decoder, z);
    const Vec noise = sample_std_normal(rng, x.size());
    axpy(std::sqrt(m.decoder_var), noise, x);
    return x;
}

struct VaeTrainResult {
    VaeModel model;
    Vec elbo_trace;  // per-epoch mean per-sample ELBO
};

/// Joint stochastic gradient ascent on the ELBO with the reparameterization
/// pathway in the encoder gradients.
inline VaeTrainResult vae_train(const DenseMatrix& ds, std::size_t latent_dim,
                                const std::vector<std::size_t>& encoder_hidden,
                                const std::vector<std::size_t>& decoder_hidden, Activation act,
                                double decoder_var, const ExperimentConfig& cfg) {
    const std::size_t n = ds.rows();
    Rng init_rng = Rng(cfg.seed).split("vae-init");
    VaeModel model = make_vae(ds.cols(), latent_dim, encoder_hidden, decoder_hidden, act,
                              decoder_var, init_rng);
    Rng shuffle_rng = Rng(cfg.seed).split("vae-shuffle");
    Rng noise_rng = Rng(cfg.seed).split("vae-noise");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::min<std::size_t>(std::max<std::size_t>(cfg.batch_size, 1), n);
    const std::size_t mc = std::max<std::size_t>(cfg.mc_samples, 1);

    VaeTrainResult out;
    double epoch_elbo = 0.0;
    std::size_t epoch_samples = 0, cursor = n;
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        if (cursor >= n) {
            if (epoch_samples == n) {
                out.elbo_trace.push_back(epoch_elbo / static_cast<double>(n));
            }
            epoch_elbo = 0.0;
            epoch_samples = 0;
            for (std::size_t i = n; i-- > 1;)
                std::swap(order[i], order[shuffle_rng.uniform_index(i + 1)]);
            cursor = 0;
        }
        const std::size_t take = std::min(batch, n - cursor);
        MlpGradients enc_grads = zero_gradients(model.encoder);
        MlpGradients dec_grads = zero_gradients(model.decoder);
        for (std::size_t b = 0; b < take; ++b) {
            const Vec x = ds.row(order[cursor + b]);
            const ForwardCache enc_cache = forward(model.encoder, x);
            const Vec& enc_out = enc_cache.output();
            Vec mu(enc_out.begin(), enc_out.begin() + static_cast<std::ptrdiff_t>(latent_dim));
            Vec logvar(enc_out.begin() + static_cast<std::ptrdiff_t>(latent_dim), enc_out.end());

            VaeOutputGrad og{Vec(latent_dim, 0.0), Vec(latent_dim, 0.0)};
            double recon = 0.0;
            const double inv_mc = 1.0 / static_cast<double>(mc);
            for (std::size_t s = 0; s < mc; ++s) {
                const Vec e = sample_std_normal(noise_rng, latent_dim);
                Vec z(latent_dim);
                for (std::size_t k = 0; k < latent_dim; ++k)
                    z[k] = mu[k] + std::exp(0.5 * logvar[k]) * e[k];
                const ForwardCache dec_cache = forward(model.decoder, z);
                recon += inv_mc * gaussian_loglik_iso(x, dec_cache.output(), decoder_var);
                Vec dout(x.size());
                for (std::size_t j = 0; j < x.size(); ++j)
                    dout[j] = inv_mc * (x[j] - dec_cache.output()[j]) / decoder_var;
                const BackwardResult dec_back =
                    backward_from_output(model.decoder, dec_cache, dout);
                for (std::size_t li = 0; li < dec_grads.size(); ++li)
                    for (std::size_t e2 = 0; e2 < dec_grads[li].data().size(); ++e2)
                        dec_grads[li].data()[e2] += dec_back.grads[li].data()[e2];
                for (std::size_t k = 0; k < latent_dim; ++k) {
                    og.dmu[k] += dec_back.input_grad[k];
                    og.dlogvar[k] +=
                        dec_back.input_grad[k] * 0.5 * std::exp(0.5 * logvar[k]) * e[k];
                }
            }
            Vec var(latent_dim);
            for (std::size_t k = 0; k < latent_dim; ++k) var[k] = std::exp(logvar[k]);
            const double elbo_i = recon - gaussian_kl_std(mu, var);
            if (!std::isfinite(elbo_i))
                throw TrainingDivergence(step, "vae_train: non-finite ELBO");
            epoch_elbo += elbo_i;
            ++epoch_samples;
            for (std::size_t k = 0; k < latent_dim; ++k) {
                og.dmu[k] -= mu[k];
                og.dlogvar[k] -= 0.5 * (var[k] - 1.0);
            }
            Vec enc_dout(2 * latent_dim);
            for (std::size_t k = 0; k < latent_dim; ++k) {
                enc_dout[k] = og.dmu[k];
                enc_dout[latent_dim + k] = og.dlogvar[k];
            }
            const BackwardResult enc_back =
                backward_from_output(model.encoder, enc_cache, enc_dout);
            for (std::size_t li = 0; li < enc_grads.size(); ++li)
                for (std::size_t e2 = 0; e2 < enc_grads[li].data().size(); ++e2)
                    enc_grads[li].data()[e2] += enc_back.grads[li].data()[e2];
        }
        cursor += take;
        const double scale = cfg.learning_rate / static_cast<double>(take);
        apply_update(model.encoder, enc_grads, scale);  // ascent
        apply_update(model.decoder, dec_grads, scale);
    }
    if (cursor >= n && epoch_samples == n)
        out.elbo_trace.push_back(epoch_elbo / static_cast<double>(n));
    out.model = std::move(model);
    return out;
}

}  // namespace genlearn
