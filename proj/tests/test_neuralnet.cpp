#include <gtest/gtest.h>

#include <cmath>

#include "genlearn/finite_diff.hpp"
#include "genlearn/linalg.hpp"
#include "genlearn/neuralnet.hpp"
#include "genlearn/rng.hpp"

using namespace genlearn;

namespace {

MlpParams random_net(Rng& rng, std::size_t in, const std::vector<std::size_t>& hidden,
                     Activation act, std::size_t out, OutputHead head) {
    return make_mlp(in, hidden, act, out, head, rng);
}

TrainData random_batch(Rng& rng, const MlpParams& net, std::size_t n) {
    TrainData d{DenseMatrix(n, net.input_dim()), DenseMatrix(n, 1)};
    switch (net.head) {
        case OutputHead::kGaussianRegression:
            d.targets = DenseMatrix(n, net.output_dim());
            break;
        default:
            break;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < net.input_dim(); ++j) d.inputs(i, j) = rng.gaussian();
        switch (net.head) {
            case OutputHead::kGaussianRegression:
                for (std::size_t j = 0; j < net.output_dim(); ++j)
                    d.targets(i, j) = rng.gaussian();
                break;
            case OutputHead::kBernoulli:
                d.targets(i, 0) = rng.uniform() < 0.5 ? 0.0 : 1.0;
                break;
            case OutputHead::kCategorical:
                d.targets(i, 0) = static_cast<double>(rng.uniform_index(net.output_dim()));
                break;
        }
    }
    return d;
}

double min_relu_preactivation(const MlpParams& net, const TrainData& d) {
    double m = HUGE_VAL;
    for (std::size_t i = 0; i < d.inputs.rows(); ++i) {
        const ForwardCache c = forward(net, d.inputs.row(i));
        for (std::size_t li = 0; li < net.layers.size(); ++li)
            if (net.layers[li].activation == Activation::kRelu)
                for (double a : c.pre[li]) m = std::min(m, std::abs(a));
    }
    return m;
}

}  // namespace

TEST(Forward, IdentityNetCollapsesToMatrixProduct) {
    Rng rng(31);
    MlpParams net = random_net(rng, 3, {4, 2}, Activation::kIdentity, 2,
                               OutputHead::kGaussianRegression);
    for (Layer& l : net.layers)
        for (std::size_t i = 0; i < l.weights.rows(); ++i) l.weights(i, 0) = 0.0;
    const Vec x{0.3, -1.2, 0.7};
    // Product of the bias-free blocks.
    Vec z = x;
    for (const Layer& l : net.layers) {
        Vec nz(l.weights.rows(), 0.0);
        for (std::size_t i = 0; i < l.weights.rows(); ++i)
            for (std::size_t j = 0; j < z.size(); ++j) nz[i] += l.weights(i, j + 1) * z[j];
        z = nz;
    }
    const Vec out = predict(net, x);
    for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(out[i], z[i], 1e-14);
}

TEST(Forward, ReluClampsNegatives) {
    const Vec out = apply_activation(Activation::kRelu, {-1.0, 2.0, 0.0});
    EXPECT_EQ(out[0], 0.0);
    EXPECT_EQ(out[1], 2.0);
    EXPECT_EQ(out[2], 0.0);
}

TEST(Forward, SingleLogisticLayerReproducesLogisticRegression) {
    MlpParams net;
    net.head = OutputHead::kBernoulli;
    net.layers.push_back({DenseMatrix(1, 2, Vec{0.4, -1.3}), Activation::kLogistic});
    for (double x : {-2.0, -0.5, 0.0, 1.7}) {
        EXPECT_NEAR(predict(net, {x})[0], sigmoid(0.4 - 1.3 * x), 1e-12);
    }
}

TEST(Forward, HeavisideForwardOnlyPerceptron) {
    MlpParams net;
    net.head = OutputHead::kGaussianRegression;
    net.layers.push_back({DenseMatrix(1, 2, Vec{0.0, 1.0}), Activation::kHeaviside});
    EXPECT_EQ(predict(net, {2.0})[0], 1.0);
    EXPECT_EQ(predict(net, {-2.0})[0], 0.0);
    TrainData d{DenseMatrix(1, 1, Vec{1.0}), DenseMatrix(1, 1, Vec{1.0})};
    EXPECT_THROW(backward(net, d), NonDifferentiableActivation);
}

TEST(Forward, DimensionMismatchRejected) {
    Rng rng(32);
    const MlpParams net =
        random_net(rng, 3, {4}, Activation::kRelu, 1, OutputHead::kGaussianRegression);
    EXPECT_THROW(predict(net, {1.0, 2.0}), std::invalid_argument);
}

TEST(Loss, BernoulliAtHalfIsNLog2) {
    Rng rng(33);
    MlpParams net = random_net(rng, 2, {3}, Activation::kLogistic, 1, OutputHead::kBernoulli);
    for (Layer& l : net.layers)
        for (double& w : l.weights.data()) w = 0.0;
    const TrainData d = random_batch(rng, net, 16);
    EXPECT_NEAR(loss(net, d), 16.0 * std::log(2.0), 1e-12);
}

TEST(Loss, CategoricalHitWithSaturatedLogitsIsZero) {
    MlpParams net;
    net.head = OutputHead::kCategorical;
    net.layers.push_back({DenseMatrix(3, 2, Vec{80.0, 0.0, 0.0, 0.0, 0.0, 0.0}),
                          Activation::kSoftmax});
    TrainData d{DenseMatrix(1, 1, Vec{0.0}), DenseMatrix(1, 1, Vec{0.0})};
    EXPECT_NEAR(loss(net, d), 0.0, 1e-12);
}

TEST(Loss, GaussianExactFitLeavesOnlyTheConstant) {
    MlpParams net;
    net.head = OutputHead::kGaussianRegression;
    net.sigma2 = 1.0;
    net.layers.push_back({DenseMatrix(1, 2, Vec{0.0, 1.0}), Activation::kIdentity});
    const std::size_t n = 9;
    TrainData d{DenseMatrix(n, 1), DenseMatrix(n, 1)};
    for (std::size_t i = 0; i < n; ++i) {
        d.inputs(i, 0) = static_cast<double>(i);
        d.targets(i, 0) = static_cast<double>(i);
    }
    EXPECT_NEAR(loss(net, d), static_cast<double>(n) * 0.5 * std::log(2.0 * M_PI), 1e-12);
}

TEST(Backward, ZeroNetBalancedTargetsGiveZeroGradient) {
    MlpParams net;
    net.head = OutputHead::kBernoulli;
    net.layers.push_back({DenseMatrix(3, 3), Activation::kLogistic});
    net.layers.push_back({DenseMatrix(1, 4), Activation::kLogistic});
    TrainData d{DenseMatrix(4, 2), DenseMatrix(4, 1)};
    for (std::size_t i = 0; i < 4; ++i) {
        d.inputs(i, 0) = 0.7;
        d.inputs(i, 1) = -0.2;
        d.targets(i, 0) = i < 2 ? 0.0 : 1.0;
    }
    const MlpGradients g = backward(net, d);
    for (const DenseMatrix& layer : g)
        for (double v : layer.data()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Backward, MatchesFiniteDifferencesOnTwoHiddenLayerNet) {
    Rng rng(34);
    MlpParams net =
        random_net(rng, 3, {4, 3}, Activation::kLogistic, 2, OutputHead::kGaussianRegression);
    const TrainData d = random_batch(rng, net, 8);
    const MlpGradients analytic = backward(net, d);
    Vec flat_analytic;
    for (const auto& gm : analytic)
        flat_analytic.insert(flat_analytic.end(), gm.data().begin(), gm.data().end());
    const Vec flat = flatten_params(net);
    MlpParams probe = net;
    const Vec numeric = finite_diff_grad(
        [&](const Vec& p) {
            unflatten_params(probe, p);
            return loss(probe, d);
        },
        flat, 1e-5);
    for (std::size_t i = 0; i < flat.size(); ++i)
        EXPECT_NEAR(numeric[i], flat_analytic[i], 1e-5 * std::max(1.0, std::abs(flat_analytic[i])));
}

TEST(Backward, SoftmaxCategoricalDeltaIsProbsMinusOneHot) {
    Rng rng(35);
    const MlpParams net =
        random_net(rng, 2, {}, Activation::kIdentity, 4, OutputHead::kCategorical);
    TrainData d{DenseMatrix(1, 2, Vec{0.3, -0.8}), DenseMatrix(1, 1, Vec{2.0})};
    const Vec probs = predict(net, d.inputs.row(0));
    const MlpGradients g = backward(net, d);
    // With a single linear layer, the bias-column gradient is the final delta.
    for (std::size_t c = 0; c < 4; ++c) {
        const double expected = probs[c] - (c == 2 ? 1.0 : 0.0);
        EXPECT_NEAR(g[0](c, 0), expected, 1e-10);
    }
}

TEST(Backward, GradientCheckSweepAcrossArchitecturesAndHeads) {
    const std::vector<Activation> acts{Activation::kIdentity, Activation::kLogistic,
                                       Activation::kRelu};
    const std::vector<OutputHead> heads{OutputHead::kGaussianRegression, OutputHead::kBernoulli,
                                        OutputHead::kCategorical};
    int done = 0;
    for (std::uint64_t seed = 0; done < 50 && seed < 500; ++seed) {
        Rng rng(1000 + seed);
        const Activation act = acts[rng.uniform_index(acts.size())];
        const OutputHead head = heads[rng.uniform_index(heads.size())];
        std::vector<std::size_t> hidden(rng.uniform_index(4));  // up to 3 hidden layers
        for (auto& w : hidden) w = 1 + rng.uniform_index(8);
        const std::size_t in = 1 + rng.uniform_index(4);
        const std::size_t out = head == OutputHead::kBernoulli ? 1 : 1 + rng.uniform_index(4);
        MlpParams net = make_mlp(in, hidden, act, head == OutputHead::kCategorical
                                                      ? std::max<std::size_t>(out, 2)
                                                      : out,
                                 head, rng);
        const TrainData d = random_batch(rng, net, 4);
        // Skip draws whose relu kinks sit inside the finite-difference probe.
        if (act == Activation::kRelu && min_relu_preactivation(net, d) < 1e-3) continue;
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
            EXPECT_NEAR(numeric[i], flat_analytic[i],
                        1e-5 * std::max(1.0, std::abs(flat_analytic[i])))
                << "seed " << seed;
    }
    EXPECT_EQ(done, 50);
}

TEST(Train, ZeroLearningRateIsANullUpdate) {
    Rng rng(36);
    const MlpParams net =
        random_net(rng, 2, {4}, Activation::kLogistic, 1, OutputHead::kGaussianRegression);
    const TrainData d = random_batch(rng, net, 10);
    ExperimentConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.max_steps = 25;
    cfg.batch_size = 5;
    cfg.seed = 7;
    const TrainResult r = train_sgd(net, d, cfg);
    EXPECT_EQ(flatten_params(r.net), flatten_params(net));
    for (std::size_t i = 1; i < r.loss_trace.size(); ++i)
        EXPECT_NEAR(r.loss_trace[i], r.loss_trace[0], 1e-12);
}

TEST(Train, SameSeedGivesBitIdenticalTraces) {
    Rng rng(37);
    const MlpParams net =
        random_net(rng, 2, {6}, Activation::kLogistic, 1, OutputHead::kGaussianRegression);
    const TrainData d = random_batch(rng, net, 24);
    ExperimentConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.max_steps = 60;
    cfg.batch_size = 8;
    cfg.seed = 99;
    const TrainResult a = train_sgd(net, d, cfg);
    const TrainResult b = train_sgd(net, d, cfg);
    ASSERT_EQ(a.loss_trace.size(), b.loss_trace.size());
    for (std::size_t i = 0; i < a.loss_trace.size(); ++i)
        EXPECT_EQ(a.loss_trace[i], b.loss_trace[i]);
    EXPECT_EQ(flatten_params(a.net), flatten_params(b.net));
}

TEST(Train, FullBatchBacktrackingTraceIsNonIncreasing) {
    Rng rng(38);
    const MlpParams net =
        random_net(rng, 2, {5}, Activation::kLogistic, 1, OutputHead::kBernoulli);
    const TrainData d = random_batch(rng, net, 30);
    ExperimentConfig cfg;
    cfg.learning_rate = 8.0;  // hostile step size; the line search must tame it
    cfg.max_steps = 120;
    const TrainResult r = train_gd(net, d, cfg);
    for (std::size_t i = 1; i < r.loss_trace.size(); ++i)
        EXPECT_LE(r.loss_trace[i], r.loss_trace[i - 1] + 1e-15);
}

TEST(Train, UniversalApproximationOnSine) {
    Rng rng(39);
    MlpParams net =
        make_mlp(1, {16}, Activation::kLogistic, 1, OutputHead::kGaussianRegression, rng);
    const std::size_t n = 64;
    TrainData d{DenseMatrix(n, 1), DenseMatrix(n, 1)};
    for (std::size_t i = 0; i < n; ++i) {
        d.inputs(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
        d.targets(i, 0) = std::sin(2.0 * M_PI * d.inputs(i, 0));
    }
    ExperimentConfig cfg;
    cfg.learning_rate = 2.0;
    cfg.max_steps = 30000;
    const TrainResult r = train_gd(net, d, cfg);
    double max_err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        max_err = std::max(max_err,
                           std::abs(predict(r.net, d.inputs.row(i))[0] - d.targets(i, 0)));
    EXPECT_LT(max_err, 0.05);
}

TEST(Forward, ReluNetWithUnitOperatorNormsIsOneLipschitz) {
    Rng rng(40);
    for (int trial = 0; trial < 5; ++trial) {
        MlpParams net =
            random_net(rng, 3, {6, 6}, Activation::kRelu, 2, OutputHead::kGaussianRegression);
        // Scale every bias-free block to operator norm 1.
        for (Layer& l : net.layers) {
            DenseMatrix b(l.weights.rows(), l.weights.cols() - 1);
            for (std::size_t i = 0; i < b.rows(); ++i)
                for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) = l.weights(i, j + 1);
            const EighResult e = eigh_sym(matmul(transpose(b), b));
            const double opnorm = std::sqrt(std::max(e.eigenvalues.front(), 1e-300));
            for (std::size_t i = 0; i < b.rows(); ++i)
                for (std::size_t j = 0; j < b.cols(); ++j)
                    l.weights(i, j + 1) /= opnorm;
        }
        for (int pair = 0; pair < 50; ++pair) {
            const Vec x = sample_std_normal(rng, 3);
            const Vec y = sample_std_normal(rng, 3);
            const double num = norm2(predict(net, x) - predict(net, y));
            const double den = norm2(x - y);
            EXPECT_LE(num / den, 1.0 + 1e-9);
        }
    }
}
