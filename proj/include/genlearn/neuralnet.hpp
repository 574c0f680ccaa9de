#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "genlearn/config.hpp"
#include "genlearn/errors.hpp"
#include "genlearn/matrix.hpp"
#include "genlearn/regression.hpp"  // sigmoid, softmax
#include "genlearn/rng.hpp"

namespace genlearn {

enum class Activation { kIdentity, kLogistic, kRelu, kHeaviside, kSoftmax };
enum class OutputHead { kGaussianRegression, kBernoulli, kCategorical };

/// One affine layer; weights are out x (in+1) with the bias in column 0.
struct Layer {
    DenseMatrix weights;
    Activation activation;
};

struct MlpParams {
    std::vector<Layer> layers;
    OutputHead head = OutputHead::kGaussianRegression;
    double sigma2 = 1.0;  // gaussian-head noise variance (fixed hyperparameter)

    std::size_t input_dim() const { return layers.front().weights.cols() - 1; }
    std::size_t output_dim() const { return layers.back().weights.rows(); }
};

inline Activation head_activation(OutputHead head) {
    switch (head) {
        case OutputHead::kGaussianRegression: return Activation::kIdentity;
        case OutputHead::kBernoulli: return Activation::kLogistic;
        case OutputHead::kCategorical: return Activation::kSoftmax;
    }
    return Activation::kIdentity;
}

/// Uniform(-s, s) init with s = 1/sqrt(fan_in).
inline MlpParams make_mlp(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                          Activation hidden_act, std::size_t output_dim, OutputHead head,
                          Rng& rng, double sigma2 = 1.0) {
    MlpParams net;
    net.head = head;
    net.sigma2 = sigma2;
    std::size_t in = input_dim;
    auto add_layer = [&](std::size_t out, Activation act) {
        Layer l{DenseMatrix(out, in + 1), act};
        const double s = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in, 1)));
        for (double& w : l.weights.data()) w = s * (2.0 * rng.uniform() - 1.0);
        net.layers.push_back(std::move(l));
        in = out;
    };
    for (std::size_t width : hidden) add_layer(width, hidden_act);
    add_layer(output_dim, head_activation(head));
    return net;
}

inline Vec apply_activation(Activation act, const Vec& a) {
    switch (act) {
        case Activation::kIdentity: return a;
        case Activation::kLogistic: {
            Vec z(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) z[i] = sigmoid(a[i]);
            return z;
        }
        case Activation::kRelu: {
            Vec z(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) z[i] = std::max(a[i], 0.0);
            return z;
        }
        case Activation::kHeaviside: {
            Vec z(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) z[i] = a[i] >= 0.0 ? 1.0 : 0.0;
            return z;
        }
        case Activation::kSoftmax: return softmax(a);
    }
    return a;
}

/// dL/d_pre from dL/d_post; softmax applies its full Jacobian.
inline Vec activation_backward(Activation act, const Vec& pre, const Vec& post,
                               const Vec& dpost) {
    Vec dpre(pre.size());
    switch (act) {
        case Activation::kIdentity: return dpost;
        case Activation::kLogistic:
            for (std::size_t i = 0; i < pre.size(); ++i)
                dpre[i] = dpost[i] * post[i] * (1.0 - post[i]);
            return dpre;
        case Activation::kRelu:
            // Subgradient at 0 defined as 0.
            for (std::size_t i = 0; i < pre.size(); ++i)
                dpre[i] = pre[i] > 0.0 ? dpost[i] : 0.0;
            return dpre;
        case Activation::kHeaviside:
            throw NonDifferentiableActivation("heaviside has no gradient");
        case Activation::kSoftmax: {
            const double inner = dot(dpost, post);
            for (std::size_t i = 0; i < pre.size(); ++i)
                dpre[i] = post[i] * (dpost[i] - inner);
            return dpre;
        }
    }
    return dpre;
}

struct ForwardCache {
    std::vector<Vec> inputs;  // inputs[l] = layer l's input; inputs[0] = x
    std::vector<Vec> pre;     // pre[l] = W_l [1; inputs[l]]
    std::vector<Vec> post;    // post[l] = act_l(pre[l])
    const Vec& output() const { return post.back(); }
};

inline ForwardCache forward(const MlpParams& net, const Vec& x) {
    if (x.size() != net.input_dim())
        throw std::invalid_argument("forward: input width mismatch");
    ForwardCache cache;
    Vec z = x;
    for (const Layer& layer : net.layers) {
        cache.inputs.push_back(z);
        Vec a(layer.weights.rows());
        for (std::size_t i = 0; i < layer.weights.rows(); ++i) {
            double s = layer.weights(i, 0);
            for (std::size_t j = 0; j < z.size(); ++j) s += layer.weights(i, j + 1) * z[j];
            a[i] = s;
        }
        cache.pre.push_back(a);
        z = apply_activation(layer.activation, a);
        cache.post.push_back(z);
    }
    return cache;
}

inline Vec predict(const MlpParams& net, const Vec& x) { return forward(net, x).output(); }

using MlpGradients = std::vector<DenseMatrix>;  // same shapes as the layer weights

inline MlpGradients zero_gradients(const MlpParams& net) {
    MlpGradients g;
    g.reserve(net.layers.size());
    for (const Layer& l : net.layers) g.emplace_back(l.weights.rows(), l.weights.cols());
    return g;
}

struct BackwardResult {
    MlpGradients grads;
    Vec input_grad;
};

/// Backpropagate from a delta at the final layer's pre-activation.
inline BackwardResult backward_from_last_pre(const MlpParams& net, const ForwardCache& cache,
                                             Vec delta) {
    BackwardResult res;
    res.grads = zero_gradients(net);
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const Layer& layer = net.layers[li];
        const Vec& in = cache.inputs[li];
        DenseMatrix& g = res.grads[li];
        for (std::size_t i = 0; i < delta.size(); ++i) {
            g(i, 0) += delta[i];
            for (std::size_t j = 0; j < in.size(); ++j) g(i, j + 1) += delta[i] * in[j];
        }
        Vec dinput(in.size(), 0.0);
        for (std::size_t j = 0; j < in.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < delta.size(); ++i) s += layer.weights(i, j + 1) * delta[i];
            dinput[j] = s;
        }
        if (li == 0) {
            res.input_grad = std::move(dinput);
        } else {
            delta = activation_backward(net.layers[li - 1].activation, cache.pre[li - 1],
                                        cache.post[li - 1], dinput);
        }
    }
    return res;
}

/// Backpropagate an arbitrary dL/d_output through the net (used by models
/// that stack their own losses on top of a network output).
inline BackwardResult backward_from_output(const MlpParams& net, const ForwardCache& cache,
                                           const Vec& doutput) {
    const Layer& last = net.layers.back();
    Vec delta =
        activation_backward(last.activation, cache.pre.back(), cache.post.back(), doutput);
    return backward_from_last_pre(net, cache, delta);
}

inline void check_no_heaviside(const MlpParams& net) {
    for (const Layer& l : net.layers)
        if (l.activation == Activation::kHeaviside)
            throw NonDifferentiableActivation("heaviside present; no gradient");
}

/// Batched supervised data for network training. Target layout per head:
/// gaussian n x M, bernoulli n x 1 in {0,1}, categorical n x 1 class index.
struct TrainData {
    DenseMatrix inputs;
    DenseMatrix targets;
};

inline double clamp_prob(double p) { return std::min(std::max(p, 1e-12), 1.0 - 1e-12); }

/// Negative conditional log-likelihood of the batch under the head, in nats.
inline double loss(const MlpParams& net, const TrainData& batch) {
    const std::size_t n = batch.inputs.rows();
    if (batch.targets.rows() != n) throw std::invalid_argument("loss: row counts disagree");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec out = predict(net, batch.inputs.row(i));
        switch (net.head) {
            case OutputHead::kGaussianRegression: {
                if (batch.targets.cols() != out.size())
                    throw std::invalid_argument("loss: target width mismatch");
                double sq = 0.0;
                for (std::size_t j = 0; j < out.size(); ++j) {
                    const double r = batch.targets(i, j) - out[j];
                    sq += r * r;
                }
                total += sq / (2.0 * net.sigma2) +
                         0.5 * static_cast<double>(out.size()) *
                             std::log(2.0 * M_PI * net.sigma2);
                break;
            }
            case OutputHead::kBernoulli: {
                if (batch.targets.cols() != 1 || out.size() != 1)
                    throw std::invalid_argument("loss: bernoulli head expects scalar targets");
                const double y = batch.targets(i, 0);
                if (y != 0.0 && y != 1.0)
                    throw std::invalid_argument("loss: bernoulli target must be 0 or 1");
                const double p = clamp_prob(out[0]);
                total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
                break;
            }
            case OutputHead::kCategorical: {
                if (batch.targets.cols() != 1)
                    throw std::invalid_argument("loss: categorical head expects class indices");
                const auto y = static_cast<std::size_t>(batch.targets(i, 0));
                if (y >= out.size())
                    throw std::invalid_argument("loss: class index out of range");
                total -= std::log(clamp_prob(out[y]));
                break;
            }
        }
    }
    return total;
}

/// Exact gradient of loss() with respect to every weight (summed over batch).
inline MlpGradients backward(const MlpParams& net, const TrainData& batch) {
    check_no_heaviside(net);
    MlpGradients total = zero_gradients(net);
    for (std::size_t i = 0; i < batch.inputs.rows(); ++i) {
        const ForwardCache cache = forward(net, batch.inputs.row(i));
        const Vec& out = cache.output();
        Vec delta(out.size());
        switch (net.head) {
            case OutputHead::kGaussianRegression:
                for (std::size_t j = 0; j < out.size(); ++j)
                    delta[j] = (out[j] - batch.targets(i, j)) / net.sigma2;
                break;
            case OutputHead::kBernoulli:
                delta[0] = out[0] - batch.targets(i, 0);
                break;
            case OutputHead::kCategorical: {
                const auto y = static_cast<std::size_t>(batch.targets(i, 0));
                delta = out;
                delta[y] -= 1.0;
                break;
            }
        }
        const BackwardResult res = backward_from_last_pre(net, cache, std::move(delta));
        for (std::size_t li = 0; li < total.size(); ++li)
            for (std::size_t e = 0; e < total[li].data().size(); ++e)
                total[li].data()[e] += res.grads[li].data()[e];
    }
    return total;
}

inline void apply_update(MlpParams& net, const MlpGradients& grads, double scale) {
    for (std::size_t li = 0; li < net.layers.size(); ++li)
        for (std::size_t e = 0; e < net.layers[li].weights.data().size(); ++e)
            net.layers[li].weights.data()[e] += scale * grads[li].data()[e];
}

inline Vec flatten_params(const MlpParams& net) {
    Vec flat;
    for (const Layer& l : net.layers)
        flat.insert(flat.end(), l.weights.data().begin(), l.weights.data().end());
    return flat;
}

inline void unflatten_params(MlpParams& net, const Vec& flat) {
    std::size_t off = 0;
    for (Layer& l : net.layers) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + l.weights.data().size()),
                  l.weights.data().begin());
        off += l.weights.data().size();
    }
}

struct TrainResult {
    MlpParams net;
    Vec loss_trace;  // per-epoch mean per-sample loss (per-step for train_gd)
};

/// Stochastic gradient descent with seeded shuffling. cfg.max_steps counts
/// gradient updates; the trace holds one mean-loss entry per (possibly
/// partial) epoch.
inline TrainResult train_sgd(MlpParams net, const TrainData& data, const ExperimentConfig& cfg) {
    const std::size_t n = data.inputs.rows();
    if (cfg.batch_size > n) throw std::invalid_argument("train_sgd: batch_size > n");
    const std::size_t batch = std::max<std::size_t>(cfg.batch_size, 1);
    Rng rng = Rng(cfg.seed).split("mlp-train-shuffle");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult out;
    double epoch_loss = 0.0;
    std::size_t epoch_batches = 0, cursor = n;
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        if (cursor >= n) {
            // Record completed epochs only; a trailing partial pass is dropped.
            if (epoch_batches > 0) {
                out.loss_trace.push_back(epoch_loss / static_cast<double>(epoch_batches));
                epoch_loss = 0.0;
                epoch_batches = 0;
            }
            for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng.uniform_index(i + 1)]);
            cursor = 0;
        }
        const std::size_t take = std::min(batch, n - cursor);
        TrainData mini{DenseMatrix(take, data.inputs.cols()),
                       DenseMatrix(take, data.targets.cols())};
        for (std::size_t b = 0; b < take; ++b) {
            const std::size_t idx = order[cursor + b];
            for (std::size_t j = 0; j < data.inputs.cols(); ++j)
                mini.inputs(b, j) = data.inputs(idx, j);
            for (std::size_t j = 0; j < data.targets.cols(); ++j)
                mini.targets(b, j) = data.targets(idx, j);
        }
        cursor += take;
        const double batch_loss = loss(net, mini) / static_cast<double>(take);
        if (!std::isfinite(batch_loss))
            throw TrainingDivergence(step, "train_sgd: non-finite loss");
        const MlpGradients grads = backward(net, mini);
        apply_update(net, grads, -cfg.learning_rate / static_cast<double>(take));
        epoch_loss += batch_loss;
        ++epoch_batches;
    }
    if (cursor >= n && epoch_batches > 0)
        out.loss_trace.push_back(epoch_loss / static_cast<double>(epoch_batches));
    if (out.loss_trace.empty() && epoch_batches > 0)
        out.loss_trace.push_back(epoch_loss / static_cast<double>(epoch_batches));
    out.net = std::move(net);
    return out;
}

/// Full-batch gradient descent with a halving line search; the loss trace is
/// non-increasing by construction.
inline TrainResult train_gd(MlpParams net, const TrainData& data, const ExperimentConfig& cfg) {
    const auto n = static_cast<double>(data.inputs.rows());
    double lr = cfg.learning_rate;
    TrainResult out;
    double current = loss(net, data) / n;
    out.loss_trace.push_back(current);
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        const MlpGradients grads = backward(net, data);
        MlpParams cand = net;
        apply_update(cand, grads, -lr / n);
        double cand_loss = loss(cand, data) / n;
        if (cfg.backtracking) {
            int halvings = 0;
            while ((cand_loss > current || !std::isfinite(cand_loss)) && halvings < 40) {
                lr *= 0.5;
                cand = net;
                apply_update(cand, grads, -lr / n);
                cand_loss = loss(cand, data) / n;
                ++halvings;
            }
            if (cand_loss > current || !std::isfinite(cand_loss)) break;
            // Regrow after an accepted step so one hostile region does not
            // permanently shrink the step size.
            if (halvings == 0) lr = std::min(lr * 1.1, cfg.learning_rate * 64.0);
        } else if (!std::isfinite(cand_loss)) {
            throw TrainingDivergence(step, "train_gd: non-finite loss");
        }
        net = std::move(cand);
        current = cand_loss;
        out.loss_trace.push_back(current);
    }
    out.net = std::move(net);
    return out;
}

}  // namespace genlearn
