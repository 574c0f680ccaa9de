#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "genlearn/config.hpp"
#include "genlearn/divergence.hpp"
#include "genlearn/errors.hpp"
#include "genlearn/latent.hpp"  // sample_mean / sample_covariance
#include "genlearn/neuralnet.hpp"
#include "genlearn/rng.hpp"

namespace genlearn {

/// Generator/discriminator pair with the stored data standardization.
struct GanModel {
    MlpParams generator;      // z in R^K -> x in R^M
    MlpParams discriminator;  // x -> (0,1) through the logistic head
    std::size_t latent_dim;
    Vec data_mean, data_scale;
};

inline GanModel make_gan(std::size_t data_dim, std::size_t latent_dim,
                         const std::vector<std::size_t>& gen_hidden,
                         const std::vector<std::size_t>& disc_hidden, Activation act,
                         Rng& rng) {
    GanModel m;
    m.latent_dim = latent_dim;
    m.generator = make_mlp(latent_dim, gen_hidden, act, data_dim,
                           OutputHead::kGaussianRegression, rng);
    m.discriminator = make_mlp(data_dim, disc_hidden, act, 1, OutputHead::kBernoulli, rng);
    m.data_mean.assign(data_dim, 0.0);
    m.data_scale.assign(data_dim, 1.0);
    return m;
}

/// Discriminator outputs are clamped away from {0,1} before any logarithm.
inline double clamp_discriminator(double d) {
    return std::min(std::max(d, 1e-6), 1.0 - 1e-6);
}

/// Empirical E_data[log2 d(X)] + E_model[log2(1 - d(X))], in bits.
inline double value_function(const MlpParams& discriminator, const DenseMatrix& data_batch,
                             const DenseMatrix& model_batch) {
    if (data_batch.rows() == 0 || model_batch.rows() == 0)
        throw std::invalid_argument("value_function: batches must be non-empty");
    double v = 0.0;
    for (std::size_t i = 0; i < data_batch.rows(); ++i)
        v += std::log2(clamp_discriminator(predict(discriminator, data_batch.row(i))[0])) /
             static_cast<double>(data_batch.rows());
    for (std::size_t i = 0; i < model_batch.rows(); ++i)
        v += std::log2(1.0 -
                       clamp_discriminator(predict(discriminator, model_batch.row(i))[0])) /
             static_cast<double>(model_batch.rows());
    return v;
}

/// Generator outputs in raw data coordinates.
inline Vec gan_sample(const GanModel& m, Rng& rng) {
    Vec x = predict(m.generator, sample_std_normal(rng, m.latent_dim));
    for (std::size_t j = 0; j < x.size(); ++j)
        x[j] = m.data_mean[j] + m.data_scale[j] * x[j];
    return x;
}

struct GanStepInfo {
    double d_objective_before;  // bits, on this step's batch and z draws
    double d_objective_after;
    double g_objective_before;  // bits, generator term only
    double g_objective_after;
};

namespace detail {

inline double generator_objective_bits(const GanModel& m, const DenseMatrix& fakes) {
    double v = 0.0;
    for (std::size_t i = 0; i < fakes.rows(); ++i)
        v += std::log2(1.0 -
                       clamp_discriminator(predict(m.discriminator, fakes.row(i))[0])) /
             static_cast<double>(fakes.rows());
    return v;
}

}  // namespace detail

/// One minimax round on a standardized batch: a discriminator ascent step on
/// the two-term objective, then a generator descent step on the fake term,
/// both over the same fresh z draws. The discriminator step backtracks (step
/// halving) when cfg.backtracking is set.
inline GanStepInfo gan_train_step(GanModel& m, const DenseMatrix& batch, Rng& rng,
                                  const ExperimentConfig& cfg, double d_lr = -1.0,
                                  double g_lr = -1.0) {
    const std::size_t b = batch.rows();
    if (b == 0) throw std::invalid_argument("gan_train_step: empty batch");
    // Negative overrides mean "use the shared rate"; zero is an exact freeze.
    if (d_lr < 0.0) d_lr = cfg.learning_rate;
    if (g_lr < 0.0) g_lr = cfg.learning_rate;
    const std::size_t dim = batch.cols();

    DenseMatrix z(b, m.latent_dim);
    for (std::size_t i = 0; i < b; ++i) {
        const Vec zi = sample_std_normal(rng, m.latent_dim);
        for (std::size_t k = 0; k < m.latent_dim; ++k) z(i, k) = zi[k];
    }
    DenseMatrix fakes(b, dim);
    for (std::size_t i = 0; i < b; ++i) {
        const Vec xi = predict(m.generator, z.row(i));
        for (std::size_t j = 0; j < dim; ++j) fakes(i, j) = xi[j];
    }

    GanStepInfo info{};
    info.d_objective_before = value_function(m.discriminator, batch, fakes);

    // Discriminator ascent on log d(x) + log(1 - d(g(z))).
    MlpGradients d_grads = zero_gradients(m.discriminator);
    for (std::size_t i = 0; i < b; ++i) {
        const ForwardCache c = forward(m.discriminator, batch.row(i));
        const BackwardResult back =
            backward_from_last_pre(m.discriminator, c, Vec{1.0 - c.output()[0]});
        for (std::size_t li = 0; li < d_grads.size(); ++li)
            for (std::size_t e = 0; e < d_grads[li].data().size(); ++e)
                d_grads[li].data()[e] += back.grads[li].data()[e];
    }
    for (std::size_t i = 0; i < b; ++i) {
        const ForwardCache c = forward(m.discriminator, fakes.row(i));
        const BackwardResult back =
            backward_from_last_pre(m.discriminator, c, Vec{-c.output()[0]});
        for (std::size_t li = 0; li < d_grads.size(); ++li)
            for (std::size_t e = 0; e < d_grads[li].data().size(); ++e)
                d_grads[li].data()[e] += back.grads[li].data()[e];
    }
    double step = d_lr / static_cast<double>(b);
    MlpParams saved = m.discriminator;
    for (int halvings = 0;; ++halvings) {
        apply_update(m.discriminator, d_grads, step);
        const double after = value_function(m.discriminator, batch, fakes);
        if (!cfg.backtracking || after >= info.d_objective_before || halvings >= 20) {
            info.d_objective_after = after;
            break;
        }
        m.discriminator = saved;
        step *= 0.5;
    }
    if (!m.discriminator.layers.front().weights.all_finite())
        throw TrainingDivergence(0, "gan_train_step: discriminator diverged");

    // Generator descent on log(1 - d(g(z))) through the updated discriminator.
    info.g_objective_before = detail::generator_objective_bits(m, fakes);
    MlpGradients g_grads = zero_gradients(m.generator);
    for (std::size_t i = 0; i < b; ++i) {
        const ForwardCache gc = forward(m.generator, z.row(i));
        const ForwardCache dc = forward(m.discriminator, gc.output());
        // d/da log(1 - sigmoid(a)) = -d
        const BackwardResult d_back =
            backward_from_last_pre(m.discriminator, dc, Vec{-dc.output()[0]});
        const BackwardResult g_back = backward_from_output(m.generator, gc, d_back.input_grad);
        for (std::size_t li = 0; li < g_grads.size(); ++li)
            for (std::size_t e = 0; e < g_grads[li].data().size(); ++e)
                g_grads[li].data()[e] += g_back.grads[li].data()[e];
    }
    apply_update(m.generator, g_grads, -g_lr / static_cast<double>(b));
    if (!m.generator.layers.front().weights.all_finite())
        throw TrainingDivergence(0, "gan_train_step: generator diverged");

    DenseMatrix fakes_after(b, dim);
    for (std::size_t i = 0; i < b; ++i) {
        const Vec xi = predict(m.generator, z.row(i));
        for (std::size_t j = 0; j < dim; ++j) fakes_after(i, j) = xi[j];
    }
    info.g_objective_after = detail::generator_objective_bits(m, fakes_after);
    return info;
}

struct MinimaxTrace {
    Vec d_objective;  // bits per step
    Vec g_objective;
};

struct GanTrainResult {
    GanModel model;
    MinimaxTrace trace;
};

/// Alternating minimax training over minibatches of standardized data.
inline GanTrainResult gan_train(const DenseMatrix& ds, std::size_t latent_dim,
                                const std::vector<std::size_t>& gen_hidden,
                                const std::vector<std::size_t>& disc_hidden, Activation act,
                                const ExperimentConfig& cfg, double d_lr = -1.0,
                                double g_lr = -1.0) {
    const std::size_t n = ds.rows(), dim = ds.cols();
    GanTrainResult out;
    Rng init_rng = Rng(cfg.seed).split("gan-init");
    out.model = make_gan(dim, latent_dim, gen_hidden, disc_hidden, act, init_rng);
    out.model.data_mean = sample_mean(ds);
    {
        const DenseMatrix cov = sample_covariance(ds, out.model.data_mean);
        for (std::size_t j = 0; j < dim; ++j)
            out.model.data_scale[j] = cov(j, j) > 1e-12 ? std::sqrt(cov(j, j)) : 1.0;
    }
    DenseMatrix std_data(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            std_data(i, j) = (ds(i, j) - out.model.data_mean[j]) / out.model.data_scale[j];

    Rng step_rng = Rng(cfg.seed).split("gan-train");
    const std::size_t batch = std::min<std::size_t>(std::max<std::size_t>(cfg.batch_size, 1), n);
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        DenseMatrix mini(batch, dim);
        for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t idx = step_rng.uniform_index(n);
            for (std::size_t j = 0; j < dim; ++j) mini(i, j) = std_data(idx, j);
        }
        const GanStepInfo info = gan_train_step(out.model, mini, step_rng, cfg, d_lr, g_lr);
        out.trace.d_objective.push_back(info.d_objective_after);
        out.trace.g_objective.push_back(info.g_objective_after);
    }
    return out;
}

struct OptimalDiscriminatorReport {
    Vec d_star;                  // p/(p+q) per point
    double value_bits;           // D(p||m) + D(q||m) - 2
    double stationarity_residual;  // max |p/d - q/(1-d)|
    double js_identity_error;    // |value - (JS - 2)|
};

/// Closed-form optimum of the log discriminator game on discrete supports.
inline OptimalDiscriminatorReport optimal_discriminator_check(const Pmf& p, const Pmf& q) {
    const GameValue v = game_value(p, q, GameSpec::gan_log());
    OptimalDiscriminatorReport r{v.d_star, v.value, 0.0, 0.0};
    for (std::size_t x = 0; x < p.size(); ++x) {
        const double d = v.d_star[x];
        if (d > 0.0 && d < 1.0)
            r.stationarity_residual =
                std::max(r.stationarity_residual, std::abs(p[x] / d - q[x] / (1.0 - d)));
    }
    r.js_identity_error = std::abs(v.value - (js_divergence(p, q) - 2.0));
    return r;
}

}  // namespace genlearn
