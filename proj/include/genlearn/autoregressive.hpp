#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "genlearn/config.hpp"
#include "genlearn/errors.hpp"
#include "genlearn/neuralnet.hpp"
#include "genlearn/rng.hpp"

namespace genlearn {

/// Integer sequences over {0..vocab-1}. Fitting and perplexity require a
/// uniform length; log-likelihood accepts any.
struct SequenceDataset {
    std::vector<std::vector<int>> sequences;
    std::size_t vocab;
};

inline void check_symbols(const SequenceDataset& ds) {
    for (const auto& seq : ds.sequences)
        for (int s : seq)
            if (s < 0 || static_cast<std::size_t>(s) >= ds.vocab)
                throw std::invalid_argument("sequence symbol out of range");
}

inline void check_uniform_length(const SequenceDataset& ds) {
    for (const auto& seq : ds.sequences)
        if (seq.size() != ds.sequences.front().size())
            throw std::invalid_argument("sequences must have uniform length");
}

/// Frequency-table Markov estimator with additive smoothing. Sequence starts
/// are padded with a reserved context-only symbol (index = vocab), so p(x_1)
/// is an ordinary table row.
struct MarkovModel {
    std::size_t vocab = 0;
    std::size_t order = 0;
    double alpha = 1.0;
    std::map<std::uint64_t, Vec> counts;  // context key -> per-symbol counts

    static constexpr std::size_t kMaxOrder = 4;

    std::uint64_t context_key(const std::vector<int>& window) const {
        std::uint64_t key = 0;
        const std::uint64_t base = vocab + 1;
        for (int s : window) key = key * base + static_cast<std::uint64_t>(s);
        return key;
    }

    /// Last `order` symbols of the prefix, start-padded with the pad symbol.
    std::vector<int> context_window(const std::vector<int>& prefix) const {
        std::vector<int> w(order, static_cast<int>(vocab));
        const std::size_t have = std::min(prefix.size(), order);
        for (std::size_t i = 0; i < have; ++i)
            w[order - have + i] = prefix[prefix.size() - have + i];
        return w;
    }

    /// Conditional pmf row for a context; smoothing keeps it a pmf for a>0.
    Vec conditional_row(const std::vector<int>& prefix) const {
        Vec row(vocab, 0.0);
        const auto it = counts.find(context_key(context_window(prefix)));
        double total = 0.0;
        if (it != counts.end())
            for (double c : it->second) total += c;
        const double denom = total + alpha * static_cast<double>(vocab);
        if (denom <= 0.0) return row;  // alpha = 0 and unseen context
        for (std::size_t s = 0; s < vocab; ++s) {
            const double c = (it != counts.end()) ? it->second[s] : 0.0;
            row[s] = (c + alpha) / denom;
        }
        return row;
    }

    Vec cond_probs(const std::vector<int>& prefix) const { return conditional_row(prefix); }
};

inline MarkovModel fit_markov(const SequenceDataset& ds, std::size_t order, double alpha) {
    if (order > MarkovModel::kMaxOrder)
        throw ContextTooLarge("fit_markov: order must be <= 4");
    if (!(alpha >= 0.0)) throw std::invalid_argument("fit_markov: alpha must be >= 0");
    check_symbols(ds);
    MarkovModel m;
    m.vocab = ds.vocab;
    m.order = order;
    m.alpha = alpha;
    for (const auto& seq : ds.sequences) {
        std::vector<int> prefix;
        for (int s : seq) {
            const std::uint64_t key = m.context_key(m.context_window(prefix));
            auto [it, inserted] = m.counts.try_emplace(key, Vec(ds.vocab, 0.0));
            it->second[static_cast<std::size_t>(s)] += 1.0;
            prefix.push_back(s);
        }
    }
    return m;
}

/// Shared-parameter neural next-token model over a fixed context window.
struct NeuralArModel {
    std::size_t vocab = 0;
    std::size_t context = 0;
    MlpParams net;

    std::size_t input_width() const { return std::max<std::size_t>(context * (vocab + 1), 1); }

    Vec encode_context(const std::vector<int>& prefix) const {
        Vec x(input_width(), 0.0);
        if (context == 0) return x;  // bias-only marginal model
        const std::size_t pad = vocab;
        for (std::size_t slot = 0; slot < context; ++slot) {
            std::size_t sym = pad;
            if (prefix.size() + slot >= context)
                sym = static_cast<std::size_t>(prefix[prefix.size() + slot - context]);
            x[slot * (vocab + 1) + sym] = 1.0;
        }
        return x;
    }

    Vec cond_probs(const std::vector<int>& prefix) const {
        return predict(net, encode_context(prefix));  // categorical head: softmax output
    }
};

/// Chain-rule log-likelihood in bits; -inf (saturating) on a zero conditional.
template <class Model>
double sequence_loglik(const Model& model, const std::vector<int>& seq) {
    double bits = 0.0;
    std::vector<int> prefix;
    for (int s : seq) {
        const Vec probs = model.cond_probs(prefix);
        const double p = probs[static_cast<std::size_t>(s)];
        if (p <= 0.0) return -std::numeric_limits<double>::infinity();
        bits += std::log2(p);
        prefix.push_back(s);
    }
    return bits;
}

template <class Model>
double dataset_loglik(const Model& model, const SequenceDataset& ds) {
    double bits = 0.0;
    for (const auto& seq : ds.sequences) bits += sequence_loglik(model, seq);
    return bits;
}

/// Exponential of the per-token negative log-likelihood; tokens run from
/// k = 2 by default (include_first switches to k = 1).
template <class Model>
double perplexity(const Model& model, const SequenceDataset& ds, bool include_first = false) {
    if (ds.sequences.empty()) throw std::invalid_argument("perplexity: requires n >= 1");
    check_uniform_length(ds);
    const std::size_t len = ds.sequences.front().size();
    if (len < 2) throw std::invalid_argument("perplexity: requires K >= 2");
    const std::size_t first = include_first ? 0 : 1;
    double bits = 0.0;
    std::size_t tokens = 0;
    for (const auto& seq : ds.sequences) {
        std::vector<int> prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(first));
        for (std::size_t k = first; k < len; ++k) {
            const Vec probs = model.cond_probs(prefix);
            const double p = probs[static_cast<std::size_t>(seq[k])];
            if (p <= 0.0) return std::numeric_limits<double>::infinity();
            bits -= std::log2(p);
            prefix.push_back(seq[k]);
            ++tokens;
        }
    }
    return std::exp2(bits / static_cast<double>(tokens));
}

template <class Model>
std::vector<int> sample_ancestral(const Model& model, Rng& rng, std::size_t length) {
    if (length == 0) throw std::invalid_argument("sample_ancestral: length must be >= 1");
    std::vector<int> seq;
    seq.reserve(length);
    for (std::size_t k = 0; k < length; ++k) {
        const Vec probs = model.cond_probs(seq);
        const double u = rng.uniform();
        double cum = 0.0;
        int drawn = static_cast<int>(probs.size()) - 1;
        for (std::size_t s = 0; s < probs.size(); ++s) {
            cum += probs[s];
            if (u < cum) {
                drawn = static_cast<int>(s);
                break;
            }
        }
        seq.push_back(drawn);
    }
    return seq;
}

struct NeuralArFit {
    NeuralArModel model;
    Vec perplexity_trace;  // per-epoch training perplexity (all tokens)
};

/// SGD on the next-token categorical loss over every (context, next) pair.
inline NeuralArFit fit_neural_ar(const SequenceDataset& ds, std::size_t context,
                                 const ExperimentConfig& cfg,
                                 const std::vector<std::size_t>& hidden = {}) {
    if (ds.vocab < 2) throw std::invalid_argument("fit_neural_ar: requires V >= 2");
    check_symbols(ds);
    NeuralArFit fit;
    fit.model.vocab = ds.vocab;
    fit.model.context = context;
    Rng rng = Rng(cfg.seed).split("neural-ar-init");
    fit.model.net = make_mlp(fit.model.input_width(), hidden, Activation::kLogistic, ds.vocab,
                             OutputHead::kCategorical, rng);
    // Start the logits layer near zero so the untrained model is near-uniform.
    for (double& w : fit.model.net.layers.back().weights.data()) w *= 0.05;

    std::size_t pairs = 0;
    for (const auto& seq : ds.sequences) pairs += seq.size();
    TrainData data{DenseMatrix(pairs, fit.model.input_width()), DenseMatrix(pairs, 1)};
    std::size_t row = 0;
    for (const auto& seq : ds.sequences) {
        std::vector<int> prefix;
        for (int s : seq) {
            const Vec x = fit.model.encode_context(prefix);
            for (std::size_t j = 0; j < x.size(); ++j) data.inputs(row, j) = x[j];
            data.targets(row, 0) = static_cast<double>(s);
            prefix.push_back(s);
            ++row;
        }
    }

    ExperimentConfig train_cfg = cfg;
    train_cfg.batch_size = std::min<std::size_t>(cfg.batch_size, pairs);
    const TrainResult r = train_sgd(fit.model.net, data, train_cfg);
    fit.model.net = r.net;
    for (double nats : r.loss_trace) fit.perplexity_trace.push_back(std::exp(nats));
    return fit;
}

}  // namespace genlearn
