// genlearn: batch experiment runner for the model library.
//
// Every run writes its outputs atomically plus a manifest with input/output
// checksums; re-running a command with the same arguments and seed produces
// byte-identical files. Exit codes: 0 success, 1 numeric failure, 2 usage.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genlearn/divergence.hpp"
#include "genlearn/io.hpp"
#include "genlearn/serialize.hpp"

namespace fs = std::filesystem;
using namespace genlearn;

namespace {

struct RunContext {
    std::vector<std::string> command;
    ExperimentConfig cfg;
    fs::path out_dir;
    Json input_checksums = Json::object();
    Json output_checksums = Json::object();

    void resolve_out_dir() {
        if (const char* env = std::getenv("GENLEARN_OUT")) out_dir = env;
        if (out_dir.empty()) throw std::invalid_argument("an output directory is required");
        fs::create_directories(out_dir);
    }

    std::string read_input(const fs::path& path) {
        const std::string bytes = read_file(path);
        input_checksums[path.string()] = fnv1a_hex(bytes);
        return bytes;
    }

    void write_output(const std::string& name, const std::string& bytes) {
        const fs::path path = out_dir / name;
        write_file_atomic(path, bytes);
        output_checksums[name] = fnv1a_hex(bytes);
    }

    void finish() {
        Json manifest{{"schema", "run-manifest-v1"},
                      {"command", command},
                      {"config",
                       {{"seed", cfg.seed},
                        {"learning_rate", cfg.learning_rate},
                        {"max_steps", cfg.max_steps},
                        {"batch_size", cfg.batch_size},
                        {"mc_samples", cfg.mc_samples}}},
                      {"inputs", input_checksums},
                      {"outputs", output_checksums}};
        write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    }
};

Vec parse_doubles(const std::string& csv) {
    Vec out;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ',')) out.push_back(std::stod(cell));
    if (out.empty()) throw std::invalid_argument("expected a comma-separated list of numbers");
    return out;
}

std::vector<std::size_t> parse_widths(const std::string& csv) {
    std::vector<std::size_t> out;
    if (csv.empty()) return out;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ',')) out.push_back(std::stoul(cell));
    return out;
}

/// Split a supervised CSV into features (all but last column) + target.
std::pair<DenseMatrix, Vec> split_supervised(const CsvTable& t) {
    if (t.values.cols() < 2)
        throw std::invalid_argument("supervised data needs at least two columns");
    DenseMatrix x(t.values.rows(), t.values.cols() - 1);
    Vec y(t.values.rows());
    for (std::size_t i = 0; i < t.values.rows(); ++i) {
        for (std::size_t j = 0; j + 1 < t.values.cols(); ++j) x(i, j) = t.values(i, j);
        y[i] = t.values(i, t.values.cols() - 1);
    }
    return {std::move(x), std::move(y)};
}

ClassDataset as_class_dataset(const CsvTable& t) {
    auto [x, y] = split_supervised(t);
    std::vector<int> labels(y.size());
    int max_label = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        labels[i] = static_cast<int>(y[i]);
        if (labels[i] < 0 || static_cast<double>(labels[i]) != y[i])
            throw std::invalid_argument("labels must be non-negative integers");
        max_label = std::max(max_label, labels[i]);
    }
    return ClassDataset{std::move(x), std::move(labels),
                        static_cast<std::size_t>(max_label) + 1};
}

std::string metrics_line(const Json& record) { return record.dump() + "\n"; }

// ---- subcommand bodies ----

void run_gen_data(RunContext& ctx, const std::string& kind, std::size_t n, double slope,
                  double intercept, double noise, std::size_t length, double p01, double p10) {
    ctx.resolve_out_dir();
    Rng rng = Rng(ctx.cfg.seed).split("gen-data");
    if (kind == "line") {
        DenseMatrix rows(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = 2.0 * rng.uniform() - 1.0;
            rows(i, 0) = x;
            rows(i, 1) = intercept + slope * x + (noise > 0.0 ? noise * rng.gaussian() : 0.0);
        }
        ctx.write_output("data.csv", to_csv({"x1", "y"}, rows));
    } else if (kind == "mixture2d") {
        DenseMatrix rows(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            const double cx = rng.uniform() < 0.5 ? -2.0 : 2.0;
            rows(i, 0) = cx + 0.5 * rng.gaussian();
            rows(i, 1) = 0.5 * rng.gaussian();
        }
        ctx.write_output("data.csv", to_csv({"x1", "x2"}, rows));
    } else if (kind == "separated_gaussians") {
        DenseMatrix rows(n, 1);
        for (std::size_t i = 0; i < n; ++i)
            rows(i, 0) = (i % 2 == 0 ? -5.0 : 5.0) + rng.gaussian();
        ctx.write_output("data.csv", to_csv({"x1"}, rows));
    } else if (kind == "markov_chain") {
        SequenceDataset ds{{}, 2};
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<int> seq;
            int s = rng.uniform() < p10 / (p01 + p10) ? 0 : 1;
            seq.push_back(s);
            for (std::size_t k = 1; k < length; ++k) {
                if (rng.uniform() < (s == 0 ? p01 : p10)) s = 1 - s;
                seq.push_back(s);
            }
            ds.sequences.push_back(std::move(seq));
        }
        ctx.write_output("seqs.txt", to_sequence_text(ds));
    } else {
        throw CLI::ValidationError("--kind", "unknown data kind: " + kind);
    }
    ctx.finish();
}

void run_fit_linreg(RunContext& ctx, const std::string& data_path) {
    ctx.resolve_out_dir();
    const CsvTable t = parse_csv(ctx.read_input(data_path));
    auto [x, y] = split_supervised(t);
    const LabeledDataset ds{std::move(x), std::move(y)};
    const LinRegParams p = fit_linear(ds);
    ctx.write_output("model.json", to_json(p).dump(2) + "\n");
    ctx.write_output("metrics.jsonl",
                     metrics_line({{"step", 0},
                                   {"loglik", linear_loglik(ds, p.w, std::max(p.sigma2, 1e-300))},
                                   {"sigma2", p.sigma2},
                                   {"rss", p.rss}}));
    ctx.finish();
    std::cout << "sigma2 " << format_double(p.sigma2) << "\n";
}

void run_fit_logreg(RunContext& ctx, const std::string& data_path) {
    ctx.resolve_out_dir();
    const ClassDataset ds = as_class_dataset(parse_csv(ctx.read_input(data_path)));
    const LogisticFit fit = fit_logistic(ds, ctx.cfg);
    ctx.write_output("model.json", logreg_to_json(fit.w).dump(2) + "\n");
    std::string metrics;
    for (std::size_t i = 0; i < fit.loglik_trace.size(); ++i)
        metrics += metrics_line({{"step", i}, {"loglik", fit.loglik_trace[i]}});
    ctx.write_output("metrics.jsonl", metrics);
    ctx.finish();
    std::cout << "final loglik " << format_double(fit.loglik_trace.back()) << "\n";
}

void run_fit_multiclass(RunContext& ctx, const std::string& data_path) {
    ctx.resolve_out_dir();
    const ClassDataset ds = as_class_dataset(parse_csv(ctx.read_input(data_path)));
    const MulticlassFit fit = fit_multiclass(ds, ctx.cfg);
    ctx.write_output("model.json", to_json(fit.params).dump(2) + "\n");
    std::string metrics;
    for (std::size_t i = 0; i < fit.loglik_trace.size(); ++i)
        metrics += metrics_line({{"step", i}, {"loglik", fit.loglik_trace[i]}});
    ctx.write_output("metrics.jsonl", metrics);
    ctx.finish();
    std::cout << "final loglik " << format_double(fit.loglik_trace.back()) << "\n";
}

void run_fit_markov(RunContext& ctx, const std::string& data_path, std::size_t order,
                    double alpha, std::size_t vocab) {
    ctx.resolve_out_dir();
    const SequenceDataset ds = parse_sequences(ctx.read_input(data_path), vocab);
    const MarkovModel m = fit_markov(ds, order, alpha);
    ctx.write_output("model.json", to_json(m).dump(2) + "\n");
    const double ppl = perplexity(m, ds);
    ctx.write_output("metrics.jsonl", metrics_line({{"step", 0}, {"perplexity", ppl}}));
    ctx.finish();
    std::cout << "train perplexity " << format_double(ppl) << "\n";
}

void run_fit_neural_ar(RunContext& ctx, const std::string& data_path, std::size_t context,
                       const std::string& hidden, std::size_t vocab) {
    ctx.resolve_out_dir();
    const SequenceDataset ds = parse_sequences(ctx.read_input(data_path), vocab);
    const NeuralArFit fit = fit_neural_ar(ds, context, ctx.cfg, parse_widths(hidden));
    ctx.write_output("model.json", to_json(fit.model).dump(2) + "\n");
    std::string metrics;
    for (std::size_t i = 0; i < fit.perplexity_trace.size(); ++i)
        metrics += metrics_line({{"step", i}, {"perplexity", fit.perplexity_trace[i]}});
    ctx.write_output("metrics.jsonl", metrics);
    ctx.finish();
    std::cout << "train perplexity " << format_double(perplexity(fit.model, ds)) << "\n";
}

void run_fit_gmm(RunContext& ctx, const std::string& data_path, std::size_t components) {
    ctx.resolve_out_dir();
    const CsvTable t = parse_csv(ctx.read_input(data_path));
    const EmState state = em_fit(t.values, components, ctx.cfg);
    ctx.write_output("model.json", to_json(state.params).dump(2) + "\n");
    std::string metrics;
    for (std::size_t i = 0; i < state.loglik_trace.size(); ++i)
        metrics += metrics_line({{"step", i}, {"loglik", state.loglik_trace[i]}});
    ctx.write_output("metrics.jsonl", metrics);
    ctx.finish();
    std::cout << "final loglik " << format_double(state.loglik_trace.back()) << "\n";
}

void run_fit_ppca(RunContext& ctx, const std::string& data_path, std::size_t latent) {
    ctx.resolve_out_dir();
    const CsvTable t = parse_csv(ctx.read_input(data_path));
    const PpcaParams p = ppca_fit(t.values, latent);
    ctx.write_output("model.json", to_json(p).dump(2) + "\n");
    const double ll = p.sigma2 > 0.0 ? ppca_loglik(p, t.values) : 0.0;
    ctx.write_output("metrics.jsonl", metrics_line({{"step", 0}, {"loglik", ll}}));
    ctx.finish();
    std::cout << "sigma2 " << format_double(p.sigma2) << "\n";
}

void run_train_mlp(RunContext& ctx, const std::string& data_path, const std::string& head,
                   const std::string& hidden, const std::string& activation) {
    ctx.resolve_out_dir();
    const CsvTable t = parse_csv(ctx.read_input(data_path));
    auto [x, y] = split_supervised(t);
    const OutputHead h = head_from_string(head);
    std::size_t out_dim = 1;
    if (h == OutputHead::kCategorical) {
        double max_label = 0.0;
        for (double v : y) max_label = std::max(max_label, v);
        out_dim = static_cast<std::size_t>(max_label) + 1;
    }
    Rng init_rng = Rng(ctx.cfg.seed).split("mlp-init");
    MlpParams net = make_mlp(x.cols(), parse_widths(hidden),
                             activation_from_string(activation), out_dim, h, init_rng);
    DenseMatrix targets(y.size(), 1);
    for (std::size_t i = 0; i < y.size(); ++i) targets(i, 0) = y[i];
    const TrainResult r = train_sgd(std::move(net), {std::move(x), std::move(targets)}, ctx.cfg);
    ctx.write_output("model.json", to_json(r.net).dump(2) + "\n");
    std::string metrics;
    for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
        metrics += metrics_line({{"step", i}, {"loss", r.loss_trace[i]}});
    ctx.write_output("metrics.jsonl", metrics);
    ctx.finish();
    std::cout << "final loss " << format_double(r.loss_trace.back()) << "\n";
}

void run_train_vae(RunContext& ctx, const std::string& data_path, std::size_t latent,
                   const std::string& enc_hidden, const std::string& dec_hidden,
                   double decoder_var) {
    ctx.resolve_out_dir();
    const CsvTable t = parse_csv(ctx.read_input(data_path));
    const VaeTrainResult r = vae_train(t.values, latent, parse_widths(enc_hidden),
                                       parse_widths(dec_hidden), Activation::kLogistic,
                                       decoder_var, ctx.cfg);
    ctx.write_output("model.json", to_json(r.model).dump(2) + "\n");
    std::string metrics;
    for (std::size_t i = 0; i < r.elbo_trace.size(); ++i)
        metrics += metrics_line({{"step", i}, {"elbo", r.elbo_trace[i]}});
    ctx.write_output("metrics.jsonl", metrics);
    ctx.finish();
    std::cout << "final elbo " << format_double(r.elbo_trace.back()) << "\n";
}

void run_train_diffusion(RunContext& ctx, const std::string& data_path,
                         const std::string& schedule_path, std::size_t T, double beta_lo,
                         double beta_hi, const std::string& hidden, const std::string& mode) {
    ctx.resolve_out_dir();
    const CsvTable t = parse_csv(ctx.read_input(data_path));
    DiffusionSchedule schedule =
        schedule_path.empty()
            ? make_schedule(T, BetaSpec::linear(beta_lo, beta_hi))
            : schedule_from_json(Json::parse(ctx.read_input(schedule_path)));
    const DenoiserMode m = mode == "noise" ? DenoiserMode::kNoise : DenoiserMode::kMean;
    const DiffusionTrainResult r =
        diffusion_train(t.values, schedule, parse_widths(hidden), ctx.cfg, m);
    ctx.write_output("model.json", to_json(r.model).dump(2) + "\n");
    std::string metrics;
    for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
        metrics += metrics_line(
            {{"step", i}, {"t", r.step_t[i]}, {"loss", r.loss_trace[i]}});
    ctx.write_output("metrics.jsonl", metrics);
    ctx.finish();
    std::cout << "final loss " << format_double(r.loss_trace.back()) << "\n";
}

void run_train_gan(RunContext& ctx, const std::string& data_path, std::size_t latent,
                   const std::string& gen_hidden, const std::string& disc_hidden, double d_lr,
                   double g_lr) {
    ctx.resolve_out_dir();
    const CsvTable t = parse_csv(ctx.read_input(data_path));
    const GanTrainResult r =
        gan_train(t.values, latent, parse_widths(gen_hidden), parse_widths(disc_hidden),
                  Activation::kLogistic, ctx.cfg, d_lr, g_lr);
    ctx.write_output("model.json", to_json(r.model).dump(2) + "\n");
    std::string metrics;
    for (std::size_t i = 0; i < r.trace.d_objective.size(); ++i)
        metrics += metrics_line({{"step", i},
                                 {"d_obj", r.trace.d_objective[i]},
                                 {"g_obj", r.trace.g_objective[i]}});
    ctx.write_output("metrics.jsonl", metrics);
    ctx.finish();
    std::cout << "final d_obj " << format_double(r.trace.d_objective.back()) << "\n";
}

void run_train_score(RunContext& ctx, const std::string& data_path, double sigma2,
                     const std::string& hidden) {
    ctx.resolve_out_dir();
    const CsvTable t = parse_csv(ctx.read_input(data_path));
    const ScoreModel m = dsm_train(t.values, sigma2, parse_widths(hidden), ctx.cfg);
    ctx.write_output("model.json", to_json(m).dump(2) + "\n");
    Rng eval_rng = Rng(ctx.cfg.seed).split("dsm-eval");
    const double objective = dsm_objective(m, t.values, eval_rng, sigma2);
    ctx.write_output("metrics.jsonl",
                     metrics_line({{"step", ctx.cfg.max_steps}, {"objective", objective}}));
    ctx.finish();
    std::cout << "objective " << format_double(objective) << "\n";
}

void run_sample(RunContext& ctx, const std::string& model_path, std::size_t n,
                std::size_t length) {
    ctx.resolve_out_dir();
    const Json j = Json::parse(ctx.read_input(model_path));
    const std::string schema = j.at("schema").get<std::string>();
    Rng rng = Rng(ctx.cfg.seed).split("sample");
    if (schema == "diffusion-v1" || schema == "gan-v1" || schema == "vae-v1" ||
        schema == "gmm-v1") {
        std::vector<Vec> rows;
        for (std::size_t i = 0; i < n; ++i) {
            if (schema == "diffusion-v1") {
                static const DiffusionModel m = diffusion_from_json(j);
                rows.push_back(diffusion_sample(m, rng));
            } else if (schema == "gan-v1") {
                static const GanModel m = gan_from_json(j);
                rows.push_back(gan_sample(m, rng));
            } else if (schema == "vae-v1") {
                static const VaeModel m = vae_from_json(j);
                rows.push_back(vae_sample(m, rng));
            } else {
                static const GmmParams m = gmm_from_json(j);
                rows.push_back(gmm_sample(m, rng));
            }
        }
        std::vector<std::string> header;
        for (std::size_t c = 0; c < rows.front().size(); ++c)
            header.push_back("x" + std::to_string(c + 1));
        ctx.write_output("samples.csv", to_csv(header, DenseMatrix::from_rows(rows)));
    } else if (schema == "markov-v1" || schema == "neural-ar-v1") {
        SequenceDataset out{{}, 0};
        if (schema == "markov-v1") {
            const MarkovModel m = markov_from_json(j);
            out.vocab = m.vocab;
            for (std::size_t i = 0; i < n; ++i)
                out.sequences.push_back(sample_ancestral(m, rng, length));
        } else {
            const NeuralArModel m = neural_ar_from_json(j);
            out.vocab = m.vocab;
            for (std::size_t i = 0; i < n; ++i)
                out.sequences.push_back(sample_ancestral(m, rng, length));
        }
        ctx.write_output("samples.txt", to_sequence_text(out));
    } else {
        throw std::invalid_argument("cannot sample from schema " + schema);
    }
    ctx.finish();
}

void run_evaluate(RunContext& ctx, const std::string& model_path, const std::string& data_path,
                  const std::string& metric) {
    ctx.resolve_out_dir();
    const Json j = Json::parse(ctx.read_input(model_path));
    const std::string schema = j.at("schema").get<std::string>();
    double value = 0.0;
    if (metric == "perplexity" || metric == "loglik") {
        SequenceDataset ds = parse_sequences(ctx.read_input(data_path));
        if (schema == "markov-v1") {
            const MarkovModel m = markov_from_json(j);
            ds.vocab = m.vocab;
            value = metric == "perplexity" ? perplexity(m, ds) : dataset_loglik(m, ds);
        } else if (schema == "neural-ar-v1") {
            const NeuralArModel m = neural_ar_from_json(j);
            ds.vocab = m.vocab;
            value = metric == "perplexity" ? perplexity(m, ds) : dataset_loglik(m, ds);
        } else {
            throw std::invalid_argument(metric + " needs a sequence model");
        }
    } else if (metric == "mse") {
        const CsvTable t = parse_csv(ctx.read_input(data_path));
        auto [x, y] = split_supervised(t);
        const LinRegParams p = linreg_from_json(j);
        double mse = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double r = y[i] - predict_linear(p, x.row(i));
            mse += r * r / static_cast<double>(x.rows());
        }
        value = mse;
    } else if (metric == "accuracy") {
        const ClassDataset ds = as_class_dataset(parse_csv(ctx.read_input(data_path)));
        std::size_t hits = 0;
        for (std::size_t i = 0; i < ds.inputs.rows(); ++i) {
            int pred;
            if (schema == "logreg-v1")
                pred = predict_logistic(logreg_from_json(j), ds.inputs.row(i)) > 0.5 ? 1 : 0;
            else if (schema == "multiclass-v1")
                pred = predict_multiclass(multiclass_from_json(j), ds.inputs.row(i));
            else
                throw std::invalid_argument("accuracy needs a classifier model");
            if (pred == ds.labels[i]) ++hits;
        }
        value = static_cast<double>(hits) / static_cast<double>(ds.inputs.rows());
    } else {
        throw std::invalid_argument("unknown metric: " + metric);
    }
    ctx.write_output("metrics.jsonl", metrics_line({{"metric", metric}, {"value", value}}));
    ctx.finish();
    std::cout << format_double(value) << "\n";
}

void run_divergence(const std::string& p_csv, const std::string& q_csv, const std::string& spec,
                    double gamma, double alpha) {
    const Pmf p(parse_doubles(p_csv));
    const Pmf q(parse_doubles(q_csv));
    double value;
    bool bits = false;
    if (spec == "kl") {
        value = f_divergence(p, q, FDivSpec::kl());
        bits = true;
    } else if (spec == "reverse_kl") {
        value = f_divergence(p, q, FDivSpec::reverse_kl());
        bits = true;
    } else if (spec == "tv") {
        value = f_divergence(p, q, FDivSpec::tv());
    } else if (spec == "hockey_stick") {
        value = f_divergence(p, q, FDivSpec::hockey_stick(gamma));
    } else if (spec == "chi_sq") {
        value = f_divergence(p, q, FDivSpec::chi_sq());
    } else if (spec == "js") {
        value = js_divergence(p, q);
        bits = true;
    } else if (spec == "hellinger") {
        value = hellinger(p, q);
    } else if (spec == "hellinger_sq") {
        value = f_divergence(p, q, FDivSpec::hellinger_sq());
    } else if (spec == "renyi" || spec == "renyi_gen") {
        value = renyi_divergence(p, q, alpha);
        bits = true;
    } else if (spec == "cross_entropy") {
        value = cross_entropy(p, q);
        bits = true;
    } else {
        throw std::invalid_argument("unknown divergence spec: " + spec);
    }
    std::cout << format_double(value) << (bits ? " bits" : "") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale generative-model trainers, samplers and divergences"};
    app.require_subcommand(1);

    RunContext ctx;
    for (int i = 0; i < argc; ++i) ctx.command.emplace_back(argv[i]);

    bool seed_set = false;
    auto add_common = [&](CLI::App* cmd, bool needs_seed = true) {
        cmd->add_option("--out", ctx.out_dir, "output directory (or GENLEARN_OUT)");
        auto* seed = cmd->add_option("--seed", ctx.cfg.seed, "deterministic seed (required)");
        if (needs_seed) seed->required();
        seed->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--lr", ctx.cfg.learning_rate, "learning rate");
        cmd->add_option("--steps", ctx.cfg.max_steps, "gradient/EM step budget");
        cmd->add_option("--batch", ctx.cfg.batch_size, "minibatch size");
        cmd->add_option("--mc-samples", ctx.cfg.mc_samples, "Monte-Carlo samples");
    };

    // gen-data
    std::string kind;
    std::size_t n = 100, length = 20;
    double slope = 3.0, intercept = 2.0, noise = 0.0, p01 = 0.2, p10 = 0.3;
    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
    add_common(gen);
    gen->add_option("--kind", kind, "line | mixture2d | separated_gaussians | markov_chain")
        ->required();
    gen->add_option("--n", n, "number of rows / sequences");
    gen->add_option("--slope", slope);
    gen->add_option("--intercept", intercept);
    gen->add_option("--noise", noise);
    gen->add_option("--length", length, "sequence length");
    gen->add_option("--p01", p01);
    gen->add_option("--p10", p10);
    gen->callback([&] { run_gen_data(ctx, kind, n, slope, intercept, noise, length, p01, p10); });

    std::string data_path, model_path, hidden, enc_hidden, dec_hidden, head = "gaussian";
    std::string activation = "logistic", mode = "mean", metric, spec, p_csv, q_csv;
    std::string schedule_path;
    std::size_t order = 1, vocab = 0, context = 1, components = 2, latent = 1, T = 50;
    std::size_t sample_n = 100;
    double alpha = 1.0, decoder_var = 0.1, beta_lo = 1e-4, beta_hi = 0.05, sigma2 = 0.25;
    double d_lr = -1.0, g_lr = -1.0, gamma = 1.0, renyi_alpha = 2.0;

    auto* linreg = app.add_subcommand("fit-linreg", "closed-form least squares");
    add_common(linreg, false);
    linreg->add_option("--data", data_path)->required();
    linreg->callback([&] { run_fit_linreg(ctx, data_path); });

    auto* logreg = app.add_subcommand("fit-logreg", "gradient-ascent logistic regression");
    add_common(logreg, false);
    logreg->add_option("--data", data_path)->required();
    logreg->callback([&] { run_fit_logreg(ctx, data_path); });

    auto* multi = app.add_subcommand("fit-multiclass", "softmax regression");
    add_common(multi, false);
    multi->add_option("--data", data_path)->required();
    multi->callback([&] { run_fit_multiclass(ctx, data_path); });

    auto* markov = app.add_subcommand("fit-markov", "frequency-table Markov model");
    add_common(markov, false);
    markov->add_option("--data", data_path)->required();
    markov->add_option("--order", order);
    markov->add_option("--alpha", alpha, "additive smoothing");
    markov->add_option("--vocab", vocab, "alphabet size (0 = infer)");
    markov->callback([&] { run_fit_markov(ctx, data_path, order, alpha, vocab); });

    auto* nar = app.add_subcommand("fit-neural-ar", "shared-parameter neural next-token model");
    add_common(nar);
    nar->add_option("--data", data_path)->required();
    nar->add_option("--context", context);
    nar->add_option("--hidden", hidden, "comma-separated widths");
    nar->add_option("--vocab", vocab);
    nar->callback([&] { run_fit_neural_ar(ctx, data_path, context, hidden, vocab); });

    auto* gmm = app.add_subcommand("fit-gmm", "EM for Gaussian mixtures");
    add_common(gmm);
    gmm->add_option("--data", data_path)->required();
    gmm->add_option("--components", components);
    gmm->callback([&] { run_fit_gmm(ctx, data_path, components); });

    auto* ppca = app.add_subcommand("fit-ppca", "closed-form probabilistic PCA");
    add_common(ppca, false);
    ppca->add_option("--data", data_path)->required();
    ppca->add_option("--latent", latent)->required();
    ppca->callback([&] { run_fit_ppca(ctx, data_path, latent); });

    auto* mlp = app.add_subcommand("train-mlp", "feedforward network by SGD");
    add_common(mlp);
    mlp->add_option("--data", data_path)->required();
    mlp->add_option("--head", head, "gaussian | bernoulli | categorical");
    mlp->add_option("--hidden", hidden);
    mlp->add_option("--activation", activation);
    mlp->callback([&] { run_train_mlp(ctx, data_path, head, hidden, activation); });

    auto* vae = app.add_subcommand("train-vae", "variational autoencoder");
    add_common(vae);
    vae->add_option("--data", data_path)->required();
    vae->add_option("--latent", latent);
    vae->add_option("--enc-hidden", enc_hidden);
    vae->add_option("--dec-hidden", dec_hidden);
    vae->add_option("--decoder-var", decoder_var);
    vae->callback(
        [&] { run_train_vae(ctx, data_path, latent, enc_hidden, dec_hidden, decoder_var); });

    auto* diff = app.add_subcommand("train-diffusion", "denoising diffusion model");
    add_common(diff);
    diff->add_option("--data", data_path)->required();
    diff->add_option("--schedule", schedule_path, "schedule JSON (overrides --T/--beta-*)");
    diff->add_option("--T", T);
    diff->add_option("--beta-lo", beta_lo);
    diff->add_option("--beta-hi", beta_hi);
    diff->add_option("--hidden", hidden);
    diff->add_option("--mode", mode, "mean | noise");
    diff->callback([&] {
        run_train_diffusion(ctx, data_path, schedule_path, T, beta_lo, beta_hi, hidden, mode);
    });

    auto* gan = app.add_subcommand("train-gan", "two-player minimax training");
    add_common(gan);
    gan->add_option("--data", data_path)->required();
    gan->add_option("--latent", latent);
    gan->add_option("--gen-hidden", dec_hidden);
    gan->add_option("--disc-hidden", enc_hidden);
    gan->add_option("--d-lr", d_lr, "discriminator rate (default: --lr)");
    gan->add_option("--g-lr", g_lr, "generator rate (default: --lr)");
    gan->callback(
        [&] { run_train_gan(ctx, data_path, latent, dec_hidden, enc_hidden, d_lr, g_lr); });

    auto* score = app.add_subcommand("train-score", "denoising score matching");
    add_common(score);
    score->add_option("--data", data_path)->required();
    score->add_option("--sigma2", sigma2);
    score->add_option("--hidden", hidden);
    score->callback([&] { run_train_score(ctx, data_path, sigma2, hidden); });

    auto* sample = app.add_subcommand("sample", "draw from a trained model");
    add_common(sample);
    sample->add_option("--model", model_path)->required();
    sample->add_option("--n", sample_n);
    sample->add_option("--length", length, "sequence length (sequence models)");
    sample->callback([&] { run_sample(ctx, model_path, sample_n, length); });

    auto* eval = app.add_subcommand("evaluate", "score a model on a dataset");
    add_common(eval, false);
    eval->add_option("--model", model_path)->required();
    eval->add_option("--data", data_path)->required();
    eval->add_option("--metric", metric, "perplexity | loglik | mse | accuracy")->required();
    eval->callback([&] { run_evaluate(ctx, model_path, data_path, metric); });

    auto* div = app.add_subcommand("divergence", "divergences between finite pmfs");
    div->add_option("--p", p_csv, "comma-separated probabilities")->required();
    div->add_option("--q", q_csv, "comma-separated probabilities")->required();
    div->add_option("--spec", spec,
                    "kl | reverse_kl | tv | hockey_stick | chi_sq | js | hellinger | "
                    "hellinger_sq | renyi_gen | cross_entropy")
        ->required();
    div->add_option("--gamma", gamma, "hockey-stick parameter");
    div->add_option("--alpha", renyi_alpha, "Renyi order");
    div->callback([&] { run_divergence(p_csv, q_csv, spec, gamma, renyi_alpha); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
