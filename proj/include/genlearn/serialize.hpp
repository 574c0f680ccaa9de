#pragma once

// JSON (de)serialization for every model record the CLI can write. Schemas
// are versioned through the "schema" field.

#include <string>

#include <json.hpp>

#include "genlearn/autoregressive.hpp"
#include "genlearn/diffusion.hpp"
#include "genlearn/elbo_vae.hpp"
#include "genlearn/gan.hpp"
#include "genlearn/latent.hpp"
#include "genlearn/neuralnet.hpp"
#include "genlearn/regression.hpp"
#include "genlearn/score.hpp"

namespace genlearn {

using Json = nlohmann::json;

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::kIdentity: return "identity";
        case Activation::kLogistic: return "logistic";
        case Activation::kRelu: return "relu";
        case Activation::kHeaviside: return "heaviside";
        case Activation::kSoftmax: return "softmax";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::kIdentity;
    if (s == "logistic") return Activation::kLogistic;
    if (s == "relu") return Activation::kRelu;
    if (s == "heaviside") return Activation::kHeaviside;
    if (s == "softmax") return Activation::kSoftmax;
    throw std::invalid_argument("unknown activation: " + s);
}

inline const char* to_string(OutputHead h) {
    switch (h) {
        case OutputHead::kGaussianRegression: return "gaussian";
        case OutputHead::kBernoulli: return "bernoulli";
        case OutputHead::kCategorical: return "categorical";
    }
    return "?";
}

inline OutputHead head_from_string(const std::string& s) {
    if (s == "gaussian") return OutputHead::kGaussianRegression;
    if (s == "bernoulli") return OutputHead::kBernoulli;
    if (s == "categorical") return OutputHead::kCategorical;
    throw std::invalid_argument("unknown output head: " + s);
}

inline Json to_json(const DenseMatrix& m) {
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline DenseMatrix matrix_from_json(const Json& j) {
    return DenseMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                       j.at("data").get<Vec>());
}

inline Json to_json(const MlpParams& net) {
    Json layers = Json::array();
    for (const Layer& l : net.layers)
        layers.push_back(Json{{"weights", to_json(l.weights)},
                              {"activation", to_string(l.activation)}});
    return Json{{"schema", "mlp-v1"},
                {"head", to_string(net.head)},
                {"sigma2", net.sigma2},
                {"layers", layers}};
}

inline MlpParams mlp_from_json(const Json& j) {
    if (j.at("schema") != "mlp-v1") throw std::invalid_argument("expected mlp-v1 record");
    MlpParams net;
    net.head = head_from_string(j.at("head").get<std::string>());
    net.sigma2 = j.at("sigma2").get<double>();
    for (const Json& lj : j.at("layers"))
        net.layers.push_back({matrix_from_json(lj.at("weights")),
                              activation_from_string(lj.at("activation").get<std::string>())});
    return net;
}

inline Json to_json(const LinRegParams& p) {
    return Json{{"schema", "linreg-v1"}, {"w", p.w}, {"sigma2", p.sigma2}, {"rss", p.rss},
                {"exact_fit", p.exact_fit}};
}

inline LinRegParams linreg_from_json(const Json& j) {
    if (j.at("schema") != "linreg-v1") throw std::invalid_argument("expected linreg-v1 record");
    return LinRegParams{j.at("w").get<Vec>(), j.at("sigma2").get<double>(),
                        j.at("rss").get<double>(), j.at("exact_fit").get<bool>()};
}

inline Json logreg_to_json(const Vec& w) {
    return Json{{"schema", "logreg-v1"}, {"w", w}};
}

inline Vec logreg_from_json(const Json& j) {
    if (j.at("schema") != "logreg-v1") throw std::invalid_argument("expected logreg-v1 record");
    return j.at("w").get<Vec>();
}

inline Json to_json(const MulticlassParams& p) {
    return Json{{"schema", "multiclass-v1"}, {"weights", to_json(p.weights)}};
}

inline MulticlassParams multiclass_from_json(const Json& j) {
    if (j.at("schema") != "multiclass-v1")
        throw std::invalid_argument("expected multiclass-v1 record");
    return MulticlassParams{matrix_from_json(j.at("weights"))};
}

inline Json to_json(const MarkovModel& m) {
    Json counts = Json::array();
    for (const auto& [key, row] : m.counts)
        counts.push_back(Json{{"key", key}, {"counts", row}});
    return Json{{"schema", "markov-v1"},
                {"vocab", m.vocab},
                {"order", m.order},
                {"alpha", m.alpha},
                {"counts", counts}};
}

inline MarkovModel markov_from_json(const Json& j) {
    if (j.at("schema") != "markov-v1") throw std::invalid_argument("expected markov-v1 record");
    MarkovModel m;
    m.vocab = j.at("vocab").get<std::size_t>();
    m.order = j.at("order").get<std::size_t>();
    m.alpha = j.at("alpha").get<double>();
    for (const Json& cj : j.at("counts"))
        m.counts.emplace(cj.at("key").get<std::uint64_t>(), cj.at("counts").get<Vec>());
    return m;
}

inline Json to_json(const NeuralArModel& m) {
    return Json{{"schema", "neural-ar-v1"},
                {"vocab", m.vocab},
                {"context", m.context},
                {"net", to_json(m.net)}};
}

inline NeuralArModel neural_ar_from_json(const Json& j) {
    if (j.at("schema") != "neural-ar-v1")
        throw std::invalid_argument("expected neural-ar-v1 record");
    NeuralArModel m;
    m.vocab = j.at("vocab").get<std::size_t>();
    m.context = j.at("context").get<std::size_t>();
    m.net = mlp_from_json(j.at("net"));
    return m;
}

inline Json to_json(const GmmParams& g) {
    Json means = Json::array(), covs = Json::array();
    for (const Vec& mu : g.means) means.push_back(mu);
    for (const DenseMatrix& c : g.covs) covs.push_back(to_json(c));
    return Json{{"schema", "gmm-v1"}, {"weights", g.weights}, {"means", means}, {"covs", covs}};
}

inline GmmParams gmm_from_json(const Json& j) {
    if (j.at("schema") != "gmm-v1") throw std::invalid_argument("expected gmm-v1 record");
    GmmParams g;
    g.weights = j.at("weights").get<Vec>();
    for (const Json& mj : j.at("means")) g.means.push_back(mj.get<Vec>());
    for (const Json& cj : j.at("covs")) g.covs.push_back(matrix_from_json(cj));
    validate(g);
    return g;
}

inline Json to_json(const PpcaParams& p) {
    return Json{{"schema", "ppca-v1"}, {"W", to_json(p.W)}, {"mu", p.mu},
                {"sigma2", p.sigma2}};
}

inline PpcaParams ppca_from_json(const Json& j) {
    if (j.at("schema") != "ppca-v1") throw std::invalid_argument("expected ppca-v1 record");
    return PpcaParams{matrix_from_json(j.at("W")), j.at("mu").get<Vec>(),
                      j.at("sigma2").get<double>()};
}

inline Json to_json(const VaeModel& m) {
    return Json{{"schema", "vae-v1"},
                {"latent_dim", m.latent_dim},
                {"decoder_var", m.decoder_var},
                {"encoder", to_json(m.encoder)},
                {"decoder", to_json(m.decoder)}};
}

inline VaeModel vae_from_json(const Json& j) {
    if (j.at("schema") != "vae-v1") throw std::invalid_argument("expected vae-v1 record");
    VaeModel m;
    m.latent_dim = j.at("latent_dim").get<std::size_t>();
    m.decoder_var = j.at("decoder_var").get<double>();
    m.encoder = mlp_from_json(j.at("encoder"));
    m.decoder = mlp_from_json(j.at("decoder"));
    return m;
}

inline Json schedule_to_json(const DiffusionSchedule& s) {
    Vec betas(s.beta.begin() + 1, s.beta.end());
    return Json{{"T", s.T}, {"beta", betas}};
}

inline DiffusionSchedule schedule_from_json(const Json& j) {
    return make_schedule(j.at("T").get<std::size_t>(), j.at("beta").get<Vec>());
}

inline Json to_json(const DiffusionModel& m) {
    return Json{{"schema", "diffusion-v1"},
                {"schedule", schedule_to_json(m.schedule)},
                {"mode", m.net.mode == DenoiserMode::kMean ? "mean" : "noise"},
                {"net", to_json(m.net.net)},
                {"data_mean", m.data_mean},
                {"data_scale", m.data_scale}};
}

inline DiffusionModel diffusion_from_json(const Json& j) {
    if (j.at("schema") != "diffusion-v1")
        throw std::invalid_argument("expected diffusion-v1 record");
    DiffusionModel m;
    m.schedule = schedule_from_json(j.at("schedule"));
    m.net.mode =
        j.at("mode").get<std::string>() == "mean" ? DenoiserMode::kMean : DenoiserMode::kNoise;
    m.net.net = mlp_from_json(j.at("net"));
    m.data_mean = j.at("data_mean").get<Vec>();
    m.data_scale = j.at("data_scale").get<Vec>();
    return m;
}

inline Json to_json(const GanModel& m) {
    return Json{{"schema", "gan-v1"},
                {"latent_dim", m.latent_dim},
                {"generator", to_json(m.generator)},
                {"discriminator", to_json(m.discriminator)},
                {"data_mean", m.data_mean},
                {"data_scale", m.data_scale}};
}

inline GanModel gan_from_json(const Json& j) {
    if (j.at("schema") != "gan-v1") throw std::invalid_argument("expected gan-v1 record");
    GanModel m;
    m.latent_dim = j.at("latent_dim").get<std::size_t>();
    m.generator = mlp_from_json(j.at("generator"));
    m.discriminator = mlp_from_json(j.at("discriminator"));
    m.data_mean = j.at("data_mean").get<Vec>();
    m.data_scale = j.at("data_scale").get<Vec>();
    return m;
}

inline Json to_json(const ScoreModel& m) {
    return Json{{"schema", "score-v1"}, {"sigma2", m.sigma2}, {"net", to_json(m.net)}};
}

inline ScoreModel score_from_json(const Json& j) {
    if (j.at("schema") != "score-v1") throw std::invalid_argument("expected score-v1 record");
    return ScoreModel{mlp_from_json(j.at("net")), j.at("sigma2").get<double>()};
}

/// Density specs for the score CLI: gaussian, mixture, energy-poly.
inline Density1D density_from_json(const Json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "gaussian")
        return gaussian_density(j.at("mu").get<double>(), j.at("var").get<double>());
    if (type == "mixture")
        return mixture_density(j.at("weights").get<Vec>(), j.at("mus").get<Vec>(),
                               j.at("vars").get<Vec>());
    if (type == "energy_poly")
        return energy_poly_density(j.at("coeffs").get<Vec>(), j.at("lo").get<double>(),
                                   j.at("hi").get<double>());
    throw std::invalid_argument("unknown density type: " + type);
}

}  // namespace genlearn
