#include <gtest/gtest.h>

#include "genlearn/serialize.hpp"

using namespace genlearn;

namespace {

// Round-trip property: serialization preserves behavior, not just bytes.
template <class Model, class ToJson, class FromJson, class Probe>
void expect_roundtrip(const Model& model, ToJson to, FromJson from, Probe probe) {
    const Json j = to(model);
    const Model back = from(Json::parse(j.dump()));
    probe(model, back);
}

}  // namespace

TEST(Serialize, MlpRoundTripPreservesPredictions) {
    Rng rng(141);
    const MlpParams net =
        make_mlp(3, {5, 4}, Activation::kRelu, 2, OutputHead::kGaussianRegression, rng);
    const Json j = to_json(net);
    EXPECT_EQ(j.at("schema"), "mlp-v1");
    const MlpParams back = mlp_from_json(Json::parse(j.dump()));
    EXPECT_EQ(flatten_params(net), flatten_params(back));
    Rng prng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec x = sample_std_normal(prng, 3);
        EXPECT_EQ(predict(net, x), predict(back, x));
    }
}

TEST(Serialize, MarkovRoundTripPreservesConditionals) {
    Rng rng(142);
    SequenceDataset ds{{}, 4};
    for (int i = 0; i < 10; ++i) {
        std::vector<int> seq;
        for (int k = 0; k < 12; ++k) seq.push_back(static_cast<int>(rng.uniform_index(4)));
        ds.sequences.push_back(seq);
    }
    const MarkovModel m = fit_markov(ds, 2, 0.5);
    const MarkovModel back = markov_from_json(Json::parse(to_json(m).dump()));
    std::vector<int> prefix;
    for (int probe = 0; probe < 30; ++probe) {
        EXPECT_EQ(m.cond_probs(prefix), back.cond_probs(prefix));
        prefix.push_back(static_cast<int>(rng.uniform_index(4)));
    }
}

TEST(Serialize, GenerativeModelsRoundTripPreservesSamples) {
    Rng rng(143);
    // GMM
    GmmParams g;
    g.weights = {0.3, 0.7};
    g.means = {{-1.0, 0.5}, {2.0, -0.5}};
    g.covs = {DenseMatrix::identity(2), DenseMatrix::identity(2)};
    {
        const GmmParams back = gmm_from_json(Json::parse(to_json(g).dump()));
        Rng a(5), b(5);
        EXPECT_EQ(gmm_sample(g, a), gmm_sample(back, b));
    }
    // Diffusion
    {
        DenseMatrix ds(30, 2);
        for (double& v : ds.data()) v = rng.gaussian();
        ExperimentConfig cfg;
        cfg.seed = 3;
        cfg.max_steps = 50;
        cfg.batch_size = 8;
        cfg.learning_rate = 0.01;
        const DiffusionTrainResult r =
            diffusion_train(ds, make_schedule(6, BetaSpec::linear(0.02, 0.2)), {4}, cfg);
        const DiffusionModel back = diffusion_from_json(Json::parse(to_json(r.model).dump()));
        Rng a(9), b(9);
        EXPECT_EQ(diffusion_sample(r.model, a), diffusion_sample(back, b));
    }
    // VAE
    {
        Rng init(7);
        const VaeModel m = make_vae(3, 1, {4}, {4}, Activation::kLogistic, 0.2, init);
        const VaeModel back = vae_from_json(Json::parse(to_json(m).dump()));
        Rng a(2), b(2);
        EXPECT_EQ(vae_sample(m, a), vae_sample(back, b));
    }
    // GAN
    {
        Rng init(8);
        GanModel m = make_gan(2, 1, {4}, {4}, Activation::kLogistic, init);
        m.data_mean = {0.5, -0.5};
        m.data_scale = {2.0, 1.5};
        const GanModel back = gan_from_json(Json::parse(to_json(m).dump()));
        Rng a(3), b(3);
        EXPECT_EQ(gan_sample(m, a), gan_sample(back, b));
    }
}

TEST(Serialize, ScheduleRoundTripIsExact) {
    const DiffusionSchedule s = make_schedule(12, BetaSpec::linear(1e-4, 0.05));
    const DiffusionSchedule back = schedule_from_json(Json::parse(schedule_to_json(s).dump()));
    EXPECT_EQ(s.beta, back.beta);
    EXPECT_EQ(s.alpha, back.alpha);
    EXPECT_EQ(s.sigma2, back.sigma2);
}

TEST(Serialize, DensitySpecsParse) {
    const Density1D g = density_from_json(Json{{"type", "gaussian"}, {"mu", 1.0}, {"var", 2.0}});
    EXPECT_NEAR(score_of(g, 0.0), 0.5, 1e-12);
    const Density1D m = density_from_json(Json{{"type", "mixture"},
                                               {"weights", Vec{0.5, 0.5}},
                                               {"mus", Vec{-1.0, 1.0}},
                                               {"vars", Vec{1.0, 1.0}}});
    EXPECT_NEAR(score_of(m, 0.0), 0.0, 1e-12);  // symmetric mixture
    EXPECT_THROW(density_from_json(Json{{"type", "unknown"}}), std::invalid_argument);
}

TEST(Serialize, SchemaMismatchIsRejected) {
    const Json j{{"schema", "linreg-v1"}, {"w", Vec{1.0}}, {"sigma2", 1.0}, {"rss", 1.0},
                 {"exact_fit", false}};
    EXPECT_THROW(mlp_from_json(j), std::invalid_argument);
    EXPECT_THROW(gmm_from_json(j), std::invalid_argument);
}
