// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances in code; the oracles live in
// test_util.hpp or inline here and never share a code path with the
// implementation they check.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "genlearn/autoregressive.hpp"
#include "genlearn/diffusion.hpp"
#include "genlearn/divergence.hpp"
#include "genlearn/elbo_vae.hpp"
#include "genlearn/finite_diff.hpp"
#include "genlearn/gan.hpp"
#include "genlearn/latent.hpp"
#include "genlearn/neuralnet.hpp"
#include "genlearn/quadrature.hpp"
#include "genlearn/regression.hpp"
#include "genlearn/score.hpp"
#include "../test_util.hpp"

using namespace genlearn;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

// ---- criterion 1: least squares ----
void criterion_least_squares(Check& c) {
    Rng rng(1001);
    for (int trial = 0; trial < 20; ++trial) {
        DenseMatrix x(40, 3);
        Vec y(40);
        for (std::size_t i = 0; i < 40; ++i) {
            for (std::size_t j = 0; j < 3; ++j) x(i, j) = 2.0 * rng.uniform() - 1.0;
            y[i] = rng.gaussian();
        }
        const LabeledDataset ds{x, y};
        const LinRegParams p = fit_linear(ds);
        const Vec w_ga = testutil::linreg_gradient_ascent(ds);
        c.require(norm2(p.w - w_ga) < 1e-6, "closed form vs gradient ascent distance");
    }
    DenseMatrix x(5, 1);
    Vec y(5);
    for (std::size_t i = 0; i < 5; ++i) {
        x(i, 0) = static_cast<double>(i);
        y[i] = 2.0 + 3.0 * x(i, 0);
    }
    c.require(fit_linear({x, y}).sigma2 < 1e-12, "exact-fit sigma2");
}

// ---- criterion 2: gradients ----
void criterion_gradients(Check& c) {
    // Logistic analytic gradient vs finite differences.
    Rng rng(1002);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 30, k = 3;
        DenseMatrix x(n, k);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) x(i, j) = 2.0 * rng.uniform() - 1.0;
            labels[i] = rng.uniform() < 0.5 ? 0 : 1;
        }
        const ClassDataset ds{x, labels, 2};
        Vec w(k + 1);
        for (double& v : w) v = rng.gaussian();
        const Vec analytic = logistic_grad(ds, w);
        const Vec numeric =
            finite_diff_grad([&](const Vec& ww) { return logistic_loglik(ds, ww); }, w, 1e-6);
        for (std::size_t j = 0; j <= k; ++j)
            c.require(std::abs(numeric[j] - analytic[j]) <
                          1e-5 * std::max(1.0, std::abs(analytic[j])),
                      "logistic gradient vs finite differences");
    }

    // Backprop vs finite differences across 50 random architectures.
    const std::vector<Activation> acts{Activation::kIdentity, Activation::kLogistic,
                                       Activation::kRelu};
    const std::vector<OutputHead> heads{OutputHead::kGaussianRegression, OutputHead::kBernoulli,
                                        OutputHead::kCategorical};
    int done = 0;
    for (std::uint64_t seed = 0; done < 50 && seed < 500; ++seed) {
        Rng arng(2000 + seed);
        const Activation act = acts[arng.uniform_index(acts.size())];
        const OutputHead head = heads[arng.uniform_index(heads.size())];
        std::vector<std::size_t> hidden(arng.uniform_index(4));
        for (auto& w : hidden) w = 1 + arng.uniform_index(8);
        const std::size_t in = 1 + arng.uniform_index(4);
        const std::size_t out =
            head == OutputHead::kBernoulli ? 1 : 2 + arng.uniform_index(3);
        MlpParams net = make_mlp(in, hidden, act, out, head, arng);
        TrainData d{DenseMatrix(4, in),
                    DenseMatrix(4, head == OutputHead::kGaussianRegression ? out : 1)};
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < in; ++j) d.inputs(i, j) = arng.gaussian();
            if (head == OutputHead::kGaussianRegression)
                for (std::size_t j = 0; j < out; ++j) d.targets(i, j) = arng.gaussian();
            else if (head == OutputHead::kBernoulli)
                d.targets(i, 0) = arng.uniform() < 0.5 ? 0.0 : 1.0;
            else
                d.targets(i, 0) = static_cast<double>(arng.uniform_index(out));
        }
        if (act == Activation::kRelu) {
            double min_pre = HUGE_VAL;
            for (std::size_t i = 0; i < 4; ++i) {
                const ForwardCache cache = forward(net, d.inputs.row(i));
                for (std::size_t li = 0; li < net.layers.size(); ++li)
                    if (net.layers[li].activation == Activation::kRelu)
                        for (double a : cache.pre[li]) min_pre = std::min(min_pre, std::abs(a));
            }
            if (min_pre < 1e-3) continue;  // keep kinks away from the probes
        }
        ++done;
        const MlpGradients analytic = backward(net, d);
        Vec flat_analytic;
        for (const auto& gm : analytic)
            flat_analytic.insert(flat_analytic.end(), gm.data().begin(), gm.data().end());
        MlpParams probe = net;
        const Vec numeric = finite_diff_grad(
            [&](const Vec& p) {
                unflatten_params(probe, p);
                return loss(probe, d);
            },
            flatten_params(net), 1e-6);
        for (std::size_t i = 0; i < numeric.size(); ++i)
            c.require(std::abs(numeric[i] - flat_analytic[i]) <
                          1e-5 * std::max(1.0, std::abs(flat_analytic[i])),
                      "backprop vs finite differences");
    }
    c.require(done == 50, "architecture sweep completed");

    // Concavity: analytic Hessian never has a positive eigenvalue.
    Rng hrng(1003);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 1 + hrng.uniform_index(4);
        const std::size_t n = 10 + hrng.uniform_index(30);
        DenseMatrix x(n, k);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) x(i, j) = 2.0 * hrng.uniform() - 1.0;
            labels[i] = hrng.uniform() < 0.5 ? 0 : 1;
        }
        Vec w(k + 1);
        for (double& v : w) v = 2.0 * hrng.uniform() - 1.0;
        const EighResult eig = eigh_sym(logistic_hessian({x, labels, 2}, w));
        c.require(eig.eigenvalues.front() <= 1e-9, "logistic Hessian eigenvalue");
    }
}

// ---- criterion 3: f-divergence battery ----
void criterion_f_divergences(Check& c) {
    const std::vector<FDivSpec> specs{
        FDivSpec::kl(),           FDivSpec::reverse_kl(), FDivSpec::tv(),
        FDivSpec::hockey_stick(1.0), FDivSpec::hockey_stick(2.0), FDivSpec::chi_sq(),
        FDivSpec::js(),           FDivSpec::hellinger_sq()};
    Rng rng(1004);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t nx = 2 + rng.uniform_index(6);
        const std::size_t ny = 2 + rng.uniform_index(6);
        const Pmf p = Pmf::random(rng, nx);
        const Pmf q = Pmf::random(rng, nx);
        const Channel ch = Channel::random(rng, nx, ny);
        const auto [py, qy] = data_processed(p, q, ch);
        for (const auto& spec : specs) {
            const double din = f_divergence(p, q, spec);
            c.require(din >= -1e-10, "non-negativity");
            c.require(std::abs(f_divergence(p, p, spec)) <= 1e-10, "D(p||p) = 0");
            c.require(f_divergence(py, qy, spec) <= din + 1e-10, "data processing");
        }
    }
    const Pmf p({0.5, 0.5}), q({0.25, 0.75});
    c.require(std::abs(f_divergence(p, q, FDivSpec::kl()) - 0.207518) < 1e-6, "frozen KL");
    c.require(std::abs(f_divergence(p, q, FDivSpec::chi_sq()) - 1.0 / 3.0) < 1e-12,
              "frozen chi-squared");
}

// ---- criterion 4: metric-side identities ----
void criterion_metric_identities(Check& c) {
    Rng rng(1005);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(6);
        const Pmf p = Pmf::random(rng, n);
        const Pmf q = Pmf::random(rng, n);
        const Pmf r = Pmf::random(rng, n);
        c.require(std::sqrt(js_divergence(p, r)) <=
                      std::sqrt(js_divergence(p, q)) + std::sqrt(js_divergence(q, r)) + 1e-10,
                  "sqrt-JS triangle inequality");
        const double h = hellinger(p, q);
        const double tv = f_divergence(p, q, FDivSpec::tv());
        c.require(h * h <= tv + 1e-10, "Hellinger lower sandwich");
        c.require(tv <= std::sqrt(2.0) * h + 1e-10, "Hellinger upper sandwich");
        c.require(kl_divergence(p, q) >= 2.0 / std::log(2.0) * h * h - 1e-10,
                  "KL lower bound");
        for (double alpha : {0.5, 2.0, 5.0}) {
            // Independent direct route to the Renyi divergence.
            double power_sum = 0.0;
            for (std::size_t x = 0; x < n; ++x)
                power_sum += std::pow(p[x], alpha) * std::pow(q[x], 1.0 - alpha);
            const double direct = std::log2(power_sum) / (alpha - 1.0);
            c.require(std::abs(renyi_divergence(p, q, alpha) - direct) < 1e-10,
                      "Renyi vs f_alpha relation");
        }
    }
}

// ---- criterion 5: GAN optimum ----
void criterion_gan_optimum(Check& c) {
    Rng rng(1006);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(6);
        const Pmf p = Pmf::random(rng, n);
        const Pmf q = Pmf::random(rng, n);
        const GameValue v = game_value(p, q, GameSpec::gan_log());
        for (std::size_t x = 0; x < n; ++x) {
            const double d = v.d_star[x];
            c.require(std::abs(d - p[x] / (p[x] + q[x])) < 1e-15, "d* closed form");
            if (d > 0.0 && d < 1.0)
                c.require(std::abs(p[x] / d - q[x] / (1.0 - d)) < 1e-10,
                          "stationarity residual");
        }
        double grid = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            double best = -1e300;
            for (double d = 1e-6; d <= 1.0 - 1e-6; d += 1e-4)
                best = std::max(best, p[x] * std::log2(d) + q[x] * std::log2(1.0 - d));
            grid += best;
        }
        c.require(grid <= v.value + 1e-6, "grid search never beats the closed form");
        c.require(std::abs(v.value - (js_divergence(p, q) - 2.0)) < 1e-10,
                  "value equals D(p||m)+D(q||m)-2 bits");
    }
}

// ---- criterion 6: PPCA ----
void criterion_ppca(Check& c) {
    Rng rng(1007);
    for (int trial = 0; trial < 10; ++trial) {
        DenseMatrix w(5, 2);
        for (double& v : w.data()) v = rng.gaussian();
        Vec mu(5);
        for (double& v : mu) v = rng.gaussian();
        DenseMatrix data(300, 5);
        for (std::size_t i = 0; i < 300; ++i) {
            const Vec z = sample_std_normal(rng, 2);
            Vec x = matvec(w, z) + mu;
            axpy(0.7, sample_std_normal(rng, 5), x);
            for (std::size_t j = 0; j < 5; ++j) data(i, j) = x[j];
        }
        const PpcaParams fit = ppca_fit(data, 2);
        const double closed = ppca_loglik(fit, data);
        double best = -HUGE_VAL;
        for (int start = 0; start < 10; ++start)
            best = std::max(best, testutil::ppca_gradient_ascent(data, 2, rng, 2000));
        c.require(closed >= best - 1e-6, "closed form beats numerical maximization");

        const double base = ppca_loglik(fit, data);
        for (int probe = 0; probe < 3; ++probe) {
            PpcaParams rotated = fit;
            rotated.W = matmul(fit.W, testutil::random_orthogonal(rng, 2));
            c.require(std::abs(ppca_loglik(rotated, data) - base) <= 1e-9 * std::abs(base),
                      "rotational invariance");
        }
    }
}

// ---- criterion 7: EM ----
void criterion_em(Check& c) {
    Rng data_rng(1008);
    DenseMatrix data(200, 1);
    for (std::size_t i = 0; i < 200; ++i)
        data(i, 0) = (i % 2 == 0 ? -1.5 : 2.0) + data_rng.gaussian();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng init_rng(seed);
        EmState state = em_init(data, 2, init_rng);
        for (int step = 0; step < 100; ++step) {
            state = em_step(state, data);
            const std::size_t last = state.loglik_trace.size() - 1;
            c.require(state.loglik_trace[last] >= state.loglik_trace[last - 1] - 1e-9,
                      "EM monotonicity");
        }
    }

    DenseMatrix sep(400, 1);
    for (std::size_t i = 0; i < 400; ++i)
        sep(i, 0) = (i % 2 == 0 ? -5.0 : 5.0) + data_rng.gaussian();
    ExperimentConfig cfg;
    cfg.seed = 5;
    cfg.max_steps = 200;
    const EmState state = em_fit(sep, 2, cfg);
    const bool lo_first = state.params.means[0][0] < state.params.means[1][0];
    c.require(std::abs(state.params.means[lo_first ? 0 : 1][0] + 5.0) < 0.2,
              "recovered low mean");
    c.require(std::abs(state.params.means[lo_first ? 1 : 0][0] - 5.0) < 0.2,
              "recovered high mean");
    c.require(std::abs(state.params.weights[0] - 0.5) < 0.05, "recovered weights");
}

// ---- criterion 8: ELBO ----
void criterion_elbo(Check& c) {
    Rng rng(1009);
    for (int trial = 0; trial < 100; ++trial) {
        GmmParams g;
        const std::size_t d = 2 + rng.uniform_index(3);
        Vec raw(d);
        double sum = 0.0;
        for (double& v : raw) {
            v = 0.2 + rng.uniform();
            sum += v;
        }
        for (double& v : raw) v /= sum;
        g.weights = raw;
        for (std::size_t j = 0; j < d; ++j) {
            g.means.push_back({2.0 * rng.gaussian(), 2.0 * rng.gaussian()});
            DenseMatrix cov(2, 2);
            cov(0, 0) = 0.5 + rng.uniform();
            cov(1, 1) = 0.5 + rng.uniform();
            g.covs.push_back(cov);
        }
        const Vec x{rng.gaussian(), rng.gaussian()};
        const Pmf post = gmm_posterior(g, x);
        const ElboReport tight = elbo_tractable(g, x, post);
        c.require(std::abs(*tight.gap) < 1e-10, "tightness at the posterior");

        const Pmf probe = Pmf::random(rng, d);
        const ElboReport r = elbo_tractable(g, x, probe);
        double kl = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            if (probe[j] > 0.0) kl += probe[j] * std::log(probe[j] / post[j]);
        c.require(std::abs(*r.gap - kl) < 1e-10, "gap equals KL(g||posterior)");
    }

    Rng qrng(1010);
    for (int trial = 0; trial < 50; ++trial) {
        const double mu = 3.0 * (qrng.uniform() - 0.5);
        const double var = 0.2 + 2.0 * qrng.uniform();
        const double sd = std::sqrt(var);
        auto normal_pdf = [](double x, double m, double v) {
            return std::exp(-(x - m) * (x - m) / (2.0 * v)) / std::sqrt(2.0 * M_PI * v);
        };
        const double quad = quad_1d(
            [&](double z) {
                const double gz = normal_pdf(z, mu, var);
                return gz <= 0.0 ? 0.0 : gz * std::log(gz / normal_pdf(z, 0.0, 1.0));
            },
            mu - 8.0 * sd, mu + 8.0 * sd, 4096);
        c.require(std::abs(gaussian_kl_std({mu}, {var}) - quad) < 1e-7,
                  "closed-form KL vs quadrature");
    }
}

// ---- criterion 9: diffusion identities ----
void criterion_diffusion_identities(Check& c) {
    Rng rng(1011);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t T = 3 + rng.uniform_index(8);
        Vec betas(T);
        for (double& b : betas) b = 0.02 + 0.4 * rng.uniform();
        const DiffusionSchedule s = make_schedule(T, betas);
        for (std::size_t t = 2; t <= T; ++t)
            c.require(s.sigma2_at(t) == s.beta_prime_at(t), "sigma2 == beta-prime");
        const std::size_t t = 2 + rng.uniform_index(T - 1);
        const Vec x{2.0 * rng.gaussian()};
        const Vec z{2.0 * rng.gaussian()};
        const PosteriorParams p = backward_posterior(s, x, z, t);
        const double a_prev = s.alpha_at(t - 1), a = s.alpha_at(t);
        const double cov = std::sqrt(1.0 - s.beta_at(t)) * (1.0 - a_prev);
        const double mean_oracle =
            std::sqrt(a_prev) * x[0] + cov / (1.0 - a) * (z[0] - std::sqrt(a) * x[0]);
        const double var_oracle = (1.0 - a_prev) - cov * cov / (1.0 - a);
        c.require(std::abs(p.mean[0] - mean_oracle) < 1e-10, "posterior mean conditioning");
        c.require(std::abs(p.var - var_oracle) < 1e-10, "posterior variance conditioning");
    }

    // Mean mode vs noise mode under the exact change of variables.
    Rng nrng(1012);
    const DiffusionSchedule s = make_schedule(12, BetaSpec::linear(0.02, 0.25));
    DenoiserNet noise_net;
    noise_net.mode = DenoiserMode::kNoise;
    noise_net.net =
        make_mlp(3, {6}, Activation::kLogistic, 1, OutputHead::kGaussianRegression, nrng);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t t = 2 + nrng.uniform_index(11);
        const Vec x{nrng.gaussian()};
        const ForwardDraw d = forward_marginal(s, x, t, nrng);
        const Vec v = denoiser_eval(noise_net, s, d.z, t);
        const Vec m = backward_posterior(s, x, d.z, t).mean;
        const double mean_loss = squared_norm(m - mean_from_noise(s, d.z, t, v));
        const double beta = s.beta_at(t);
        const double factor = beta * beta / ((1.0 - beta) * (1.0 - s.alpha_at(t)));
        c.require(std::abs(mean_loss - factor * squared_norm(v - d.noise)) <
                      1e-10 * std::max(1.0, mean_loss),
                  "mean-mode vs noise-mode equality");
    }

    // Mean-matching vs score-matching difference across parameter probes.
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    Rng prng(1013);
    for (int probe = 0; probe < 5; ++probe) {
        DenoiserNet net;
        net.mode = DenoiserMode::kMean;
        net.net =
            make_mlp(4, {6}, Activation::kLogistic, 2, OutputHead::kGaussianRegression, prng);
        Rng mc(31);  // shared Monte-Carlo draws
        const ScoreGapReport r = elbo_score_gap(net, s, {0.4, -0.9}, mc, 8);
        lo = std::min(lo, r.difference);
        hi = std::max(hi, r.difference);
        c.require(r.bridge_residual_exact < 1e-10, "exact posterior-mean score bridge");
    }
    c.require(hi - lo < 1e-8, "loss difference constant across probes");
}

// ---- criterion 10: diffusion end-to-end smoke ----
void criterion_diffusion_smoke(Check& c) {
    Rng data_rng(1014);
    DenseMatrix ds(400, 2);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const double cx = i % 2 == 0 ? -2.0 : 2.0;
        ds(i, 0) = cx + 0.5 * data_rng.gaussian();
        ds(i, 1) = 0.5 * data_rng.gaussian();
    }
    const DiffusionSchedule s = make_schedule(50, BetaSpec::linear(1e-4, 0.05));
    int passes = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        ExperimentConfig cfg;
        cfg.seed = seed;
        cfg.learning_rate = 0.01;
        cfg.max_steps = 6000;
        cfg.batch_size = 64;
        const DiffusionTrainResult r = diffusion_train(ds, s, {32, 32}, cfg);
        double head = 0.0, tail = 0.0;
        for (int i = 0; i < 100; ++i) {
            head += r.loss_trace[i] / 100.0;
            tail += r.loss_trace[r.loss_trace.size() - 1 - i] / 100.0;
        }
        if (tail >= head) continue;  // moving average must decrease
        Rng srng(seed + 50);
        int near_lo = 0, near_hi = 0;
        for (int i = 0; i < 1000; ++i) {
            const Vec x = diffusion_sample(r.model, srng);
            if (std::hypot(x[0] + 2.0, x[1]) < 1.5) ++near_lo;
            if (std::hypot(x[0] - 2.0, x[1]) < 1.5) ++near_hi;
        }
        if (near_lo >= 100 && near_hi >= 100) ++passes;
    }
    c.require(passes >= 2, "3-seed majority of mode coverage");
}

// ---- criterion 11: Tweedie ----
void criterion_tweedie(Check& c) {
    {
        const double mu0 = 0.7, s0sq = 1.1, sigma2 = 0.5;
        const Density1D marginal = gaussian_density(mu0, s0sq + sigma2);
        for (int i = 0; i < 20; ++i) {
            const double y = -4.0 + 8.0 * i / 19.0;
            const double shrinkage = mu0 + s0sq / (s0sq + sigma2) * (y - mu0);
            c.require(std::abs(tweedie_estimate(marginal, y, sigma2) - shrinkage) < 1e-10,
                      "Gaussian shrinkage");
        }
    }
    {
        const Density1D marginal = mixture_density({0.5, 0.5}, {-1.0, 1.0}, {1.0, 1.0});
        for (int i = 0; i < 20; ++i) {
            const double y = -3.0 + 6.0 * i / 19.0;
            c.require(std::abs(tweedie_estimate(marginal, y, 1.0) - std::tanh(y)) < 1e-4,
                      "two-point prior Bayes");
        }
    }
    Rng rng(1015);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 2 + rng.uniform_index(2);
        Vec w(d), mus(d), vars(d);
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            w[j] = 0.2 + rng.uniform();
            sum += w[j];
            mus[j] = 4.0 * (rng.uniform() - 0.5);
            vars[j] = 0.3 + rng.uniform();
        }
        for (double& v : w) v /= sum;
        const double sigma2 = 0.2 + 0.5 * rng.uniform();
        const Density1D prior = mixture_density(w, mus, vars);
        Vec smoothed = vars;
        for (double& v : smoothed) v += sigma2;
        const Density1D marginal = mixture_density(w, mus, smoothed);
        for (int p = 0; p < 20; ++p) {
            const double y = -4.0 + 8.0 * p / 19.0;
            auto joint = [&](double x) {
                return prior.pdf(x) * std::exp(normal_logpdf_1d(y, x, sigma2));
            };
            const double num =
                quad_1d([&](double x) { return x * joint(x); }, prior.lo, prior.hi, 8192);
            const double den = quad_1d(joint, prior.lo, prior.hi, 8192);
            c.require(std::abs(tweedie_estimate(marginal, y, sigma2) - num / den) < 1e-4,
                      "mixture prior vs quadrature posterior mean");
        }
    }
}

// ---- criterion 12: denoising score matching ----
void criterion_dsm(Check& c) {
    {
        const double s0sq = 1.3, sigma2 = 0.25;
        Rng rng(1016);
        const std::size_t n = 40000000;
        double syy = 0.0, suy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = std::sqrt(s0sq) * rng.gaussian();
            const double y = x + std::sqrt(sigma2) * rng.gaussian();
            syy += y * y;
            suy += (x - y) / sigma2 * y;
        }
        c.require(std::abs(suy / syy + 1.0 / (s0sq + sigma2)) < 1e-3,
                  "linear-family minimizer slope");
    }
    {
        Rng data_rng(1017);
        DenseMatrix ds(2000, 1);
        for (double& v : ds.data()) v = 3.0 + data_rng.gaussian();
        ExperimentConfig cfg;
        cfg.seed = 41;
        cfg.learning_rate = 0.01;
        cfg.max_steps = 50000;
        cfg.batch_size = 64;
        const ScoreModel m = dsm_train(ds, 0.25, {16}, cfg, Activation::kRelu);
        for (double y = 1.0; y <= 5.0 + 1e-9; y += 0.5)
            c.require(std::abs(score_eval(m, {y})[0] + (y - 3.0) / 1.25) < 0.1,
                      "trained score vs analytic");
    }
}

// ---- criterion 13: autoregressive ----
void criterion_autoregressive(Check& c) {
    {
        MarkovModel uniform;
        uniform.vocab = 6;
        uniform.order = 1;
        uniform.alpha = 1.0;
        Rng rng(1018);
        SequenceDataset ds{{}, 6};
        for (int i = 0; i < 5; ++i) {
            std::vector<int> seq;
            for (int k = 0; k < 10; ++k) seq.push_back(static_cast<int>(rng.uniform_index(6)));
            ds.sequences.push_back(seq);
        }
        c.require(std::abs(perplexity(uniform, ds) - 6.0) < 1e-12,
                  "uniform-model perplexity equals V");
    }
    {
        Rng gen(1019);
        const double p01 = 0.2, p10 = 0.3;
        auto sample_chain = [&](std::size_t len) {
            std::vector<int> seq;
            int s = gen.uniform() < p10 / (p01 + p10) ? 0 : 1;
            seq.push_back(s);
            for (std::size_t k = 1; k < len; ++k) {
                if (gen.uniform() < (s == 0 ? p01 : p10)) s = 1 - s;
                seq.push_back(s);
            }
            return seq;
        };
        SequenceDataset train{{}, 2}, test{{}, 2};
        for (int i = 0; i < 200; ++i) train.sequences.push_back(sample_chain(21));
        for (int i = 0; i < 200; ++i) test.sequences.push_back(sample_chain(21));
        ExperimentConfig cfg;
        cfg.seed = 11;
        cfg.learning_rate = 0.5;
        cfg.max_steps = 4000;
        cfg.batch_size = 64;
        const NeuralArFit fit = fit_neural_ar(train, 1, cfg);
        auto h = [](double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); };
        const double pi0 = p10 / (p01 + p10);
        const double target = std::exp2(pi0 * h(p01) + (1.0 - pi0) * h(p10));
        c.require(std::abs(perplexity(fit.model, test) - target) < 0.05 * target,
                  "neural AR reaches the entropy-rate perplexity");
    }
    {
        Rng gen(1020);
        SequenceDataset ds{{}, 2};
        for (int i = 0; i < 50; ++i) {
            std::vector<int> seq;
            int s = 0;
            for (int k = 0; k < 40; ++k) {
                if (gen.uniform() < (s == 0 ? 0.25 : 0.4)) s = 1 - s;
                seq.push_back(s);
            }
            ds.sequences.push_back(seq);
        }
        const MarkovModel m = fit_markov(ds, 1, 1.0);
        Rng srng(1021);
        const std::vector<int> long_seq = sample_ancestral(m, srng, 100000);
        DenseMatrix counts(2, 2);
        for (std::size_t k = 1; k < long_seq.size(); ++k)
            counts(static_cast<std::size_t>(long_seq[k - 1]),
                   static_cast<std::size_t>(long_seq[k])) += 1.0;
        for (std::size_t a = 0; a < 2; ++a) {
            const double total = counts(a, 0) + counts(a, 1);
            const Vec row = m.cond_probs({static_cast<int>(a)});
            for (std::size_t b = 0; b < 2; ++b)
                c.require(std::abs(counts(a, b) / total - row[b]) < 0.01,
                          "ancestral transition frequencies");
        }
    }
}

// ---- criterion 14: reproducibility through the CLI ----
void criterion_reproducibility(Check& c) {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "genlearn_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    auto shell = [](const std::string& cmd) {
        return WEXITSTATUS(std::system((cmd + " >/dev/null 2>&1").c_str()));
    };
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string cli = GENLEARN_CLI_PATH;

    const fs::path gen = root / "gen";
    c.require(shell(cli + " gen-data --kind mixture2d --n 80 --seed 3 --out " + gen.string()) ==
                  0,
              "gen-data run");
    const fs::path seq = root / "seq";
    c.require(shell(cli + " gen-data --kind markov_chain --n 30 --length 15 --seed 4 --out " +
                    seq.string()) == 0,
              "gen-data sequences run");

    const std::vector<std::pair<std::string, std::string>> trainers{
        {"diff", " train-diffusion --data " + (gen / "data.csv").string() +
                     " --seed 7 --lr 0.01 --steps 150 --batch 16 --T 10 --hidden 8 --out "},
        {"gan", " train-gan --data " + (gen / "data.csv").string() +
                    " --seed 7 --lr 0.02 --steps 100 --batch 16 --latent 2 --gen-hidden 6 "
                    "--disc-hidden 6 --out "},
        {"vae", " train-vae --data " + (gen / "data.csv").string() +
                    " --seed 7 --lr 0.01 --steps 200 --batch 16 --latent 1 --out "},
        {"gmm", " fit-gmm --data " + (gen / "data.csv").string() +
                    " --seed 7 --steps 40 --components 2 --out "},
        {"nar", " fit-neural-ar --data " + (seq / "seqs.txt").string() +
                    " --seed 7 --lr 0.3 --steps 300 --batch 32 --context 1 --out "}};
    for (const auto& [name, args] : trainers) {
        const fs::path out = root / name;
        c.require(shell(cli + args + out.string()) == 0, name + " first run");
        const std::string metrics = slurp(out / "metrics.jsonl");
        const std::string model = slurp(out / "model.json");
        const std::string manifest = slurp(out / "manifest.json");
        c.require(!metrics.empty(), name + " wrote metrics");
        c.require(shell(cli + args + out.string()) == 0, name + " second run");
        c.require(slurp(out / "metrics.jsonl") == metrics, name + " metrics byte-identical");
        c.require(slurp(out / "model.json") == model, name + " model byte-identical");
        c.require(slurp(out / "manifest.json") == manifest, name + " manifest byte-identical");
    }
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<void(Check&)> body;
    };
    const std::vector<Criterion> criteria{
        {"least squares closed form", criterion_least_squares},
        {"gradients and concavity", criterion_gradients},
        {"f-divergence battery", criterion_f_divergences},
        {"JS metric, Hellinger and Renyi identities", criterion_metric_identities},
        {"GAN optimal discriminator", criterion_gan_optimum},
        {"PPCA closed form", criterion_ppca},
        {"EM monotonicity and recovery", criterion_em},
        {"ELBO decomposition and Gaussian KL", criterion_elbo},
        {"diffusion identities", criterion_diffusion_identities},
        {"diffusion end-to-end smoke", criterion_diffusion_smoke},
        {"Tweedie estimates", criterion_tweedie},
        {"denoising score matching", criterion_dsm},
        {"autoregressive models", criterion_autoregressive},
        {"CLI reproducibility", criterion_reproducibility},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check check;
        try {
            criteria[i].body(check);
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %2zu: %s%s%s\n", check.ok ? "PASS" : "FAIL", i + 1,
                    criteria[i].name, check.ok ? "" : " — ",
                    check.ok ? "" : check.detail.c_str());
        std::fflush(stdout);
        if (!check.ok) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
