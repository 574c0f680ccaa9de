#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "genlearn/config.hpp"
#include "genlearn/errors.hpp"
#include "genlearn/linalg.hpp"
#include "genlearn/matrix.hpp"

namespace genlearn {

/// Supervised regression data: raw features (no intercept column) + targets.
struct LabeledDataset {
    DenseMatrix inputs;  // n x K
    Vec targets;         // length n
};

/// Classification data with integer labels in {0..num_classes-1}.
struct ClassDataset {
    DenseMatrix inputs;       // n x K
    std::vector<int> labels;  // length n
    std::size_t num_classes;
};

inline Vec augment(const Vec& x) {
    Vec a(x.size() + 1);
    a[0] = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) a[i + 1] = x[i];
    return a;
}

/// Design matrix with the intercept column of ones prepended.
inline DenseMatrix design_matrix(const DenseMatrix& inputs) {
    DenseMatrix x(inputs.rows(), inputs.cols() + 1);
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        x(i, 0) = 1.0;
        for (std::size_t j = 0; j < inputs.cols(); ++j) x(i, j + 1) = inputs(i, j);
    }
    return x;
}

struct LinRegParams {
    Vec w;          // length K+1, intercept first
    double sigma2;  // mean squared residual
    double rss;     // n * sigma2
    bool exact_fit; // sigma2 collapsed to (numerical) zero
};

/// Closed-form least squares through the normal equations.
inline LinRegParams fit_linear(const LabeledDataset& ds) {
    const std::size_t n = ds.inputs.rows(), k = ds.inputs.cols();
    if (ds.targets.size() != n) throw std::invalid_argument("fit_linear: row counts disagree");
    if (n < k + 1) throw std::invalid_argument("fit_linear: requires n >= K+1");
    const DenseMatrix x = design_matrix(ds.inputs);
    const DenseMatrix xt = transpose(x);
    const DenseMatrix gram = matmul(xt, x);
    const EighResult eig = eigh_sym(gram);
    const double lmax = eig.eigenvalues.front(), lmin = eig.eigenvalues.back();
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw SingularDesign("fit_linear: design matrix is rank deficient");
    const Vec xty = matvec(xt, ds.targets);
    // w = V diag(1/lambda) V^T X^T y
    const Vec proj = matvec(transpose(eig.eigenvectors), xty);
    Vec scaled(proj.size());
    for (std::size_t i = 0; i < proj.size(); ++i) scaled[i] = proj[i] / eig.eigenvalues[i];
    LinRegParams p;
    p.w = matvec(eig.eigenvectors, scaled);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ds.targets[i] - dot(p.w, x.row(i));
        rss += r * r;
    }
    p.rss = rss;
    p.sigma2 = rss / static_cast<double>(n);
    p.exact_fit = p.sigma2 <= 1e-24;
    return p;
}

inline double predict_linear(const LinRegParams& params, const Vec& x) {
    if (x.size() + 1 != params.w.size())
        throw std::invalid_argument("predict_linear: feature length mismatch");
    return dot(params.w, augment(x));
}

/// Gaussian conditional log-likelihood of the data (nats).
inline double linear_loglik(const LabeledDataset& ds, const Vec& w, double sigma2) {
    const std::size_t n = ds.inputs.rows();
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ds.targets[i] - dot(w, augment(ds.inputs.row(i)));
        rss += r * r;
    }
    return -0.5 * static_cast<double>(n) * std::log(2.0 * M_PI * sigma2) - rss / (2.0 * sigma2);
}

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

/// Numerically safe softmax; outputs sum to 1 within 1e-12.
inline Vec softmax(const Vec& a) {
    double m = a[0];
    for (double v : a) m = std::max(m, v);
    Vec p(a.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        p[i] = std::exp(a[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

inline void check_binary(const ClassDataset& ds) {
    if (ds.num_classes != 2) throw std::invalid_argument("expected binary labels");
    for (int y : ds.labels)
        if (y != 0 && y != 1) throw std::invalid_argument("expected labels in {0,1}");
}

/// Bernoulli log-likelihood (nats) of binary labels under logistic weights.
inline double logistic_loglik(const ClassDataset& ds, const Vec& w) {
    double l = 0.0;
    for (std::size_t i = 0; i < ds.inputs.rows(); ++i) {
        const double a = dot(w, augment(ds.inputs.row(i)));
        // y log p + (1-y) log(1-p), written through log1p(exp) for stability
        l += (ds.labels[i] == 1 ? a : 0.0) - (a > 0.0 ? a + std::log1p(std::exp(-a))
                                                      : std::log1p(std::exp(a)));
    }
    return l;
}

inline Vec logistic_grad(const ClassDataset& ds, const Vec& w) {
    Vec g(w.size(), 0.0);
    for (std::size_t i = 0; i < ds.inputs.rows(); ++i) {
        const Vec xi = augment(ds.inputs.row(i));
        const double p = sigmoid(dot(w, xi));
        axpy(static_cast<double>(ds.labels[i]) - p, xi, g);
    }
    return g;
}

/// Analytic Hessian -sum p_i (1-p_i) x_i x_i^T (negative semidefinite).
inline DenseMatrix logistic_hessian(const ClassDataset& ds, const Vec& w) {
    DenseMatrix h(w.size(), w.size());
    for (std::size_t i = 0; i < ds.inputs.rows(); ++i) {
        const Vec xi = augment(ds.inputs.row(i));
        const double p = sigmoid(dot(w, xi));
        const double c = -p * (1.0 - p);
        for (std::size_t a = 0; a < xi.size(); ++a)
            for (std::size_t b = 0; b < xi.size(); ++b) h(a, b) += c * xi[a] * xi[b];
    }
    return h;
}

enum class StopReason { kGradientConverged, kMaxSteps, kLineSearchFailed };

namespace detail {

/// Gradient ascent from w=0 with a halving line search; shared by the
/// logistic and softmax fitters. Objective and gradient are callables over
/// the flat parameter vector.
template <class Obj, class Grad>
StopReason ascend(Vec& w, Vec& trace, const Obj& obj, const Grad& grad,
                  const ExperimentConfig& cfg) {
    double gamma = cfg.learning_rate;
    if (!(gamma > 0.0)) throw std::invalid_argument("learning rate must be positive");
    double val = obj(w);
    trace.push_back(val);
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        const Vec g = grad(w);
        if (norm_inf(g) < 1e-8) return StopReason::kGradientConverged;
        Vec cand = w;
        axpy(gamma, g, cand);
        double cand_val = obj(cand);
        if (cfg.backtracking) {
            int halvings = 0;
            while (cand_val < val && halvings < 40) {
                gamma *= 0.5;
                cand = w;
                axpy(gamma, g, cand);
                cand_val = obj(cand);
                ++halvings;
            }
            if (cand_val < val) return StopReason::kLineSearchFailed;
        } else if (norm_inf(cand) > 1e8) {
            throw StepSizeTooLarge("gradient ascent diverged: ||w|| > 1e8");
        }
        w = cand;
        val = cand_val;
        trace.push_back(val);
    }
    return StopReason::kMaxSteps;
}

}  // namespace detail

struct LogisticFit {
    Vec w;  // length K+1
    Vec loglik_trace;
    StopReason stop;
};

/// Gradient-ascent logistic regression from w = 0.
inline LogisticFit fit_logistic(const ClassDataset& ds, const ExperimentConfig& cfg) {
    check_binary(ds);
    LogisticFit fit;
    fit.w.assign(ds.inputs.cols() + 1, 0.0);
    fit.stop = detail::ascend(
        fit.w, fit.loglik_trace, [&](const Vec& w) { return logistic_loglik(ds, w); },
        [&](const Vec& w) { return logistic_grad(ds, w); }, cfg);
    return fit;
}

inline double predict_logistic(const Vec& w, const Vec& x) {
    return sigmoid(dot(w, augment(x)));
}

struct MulticlassParams {
    DenseMatrix weights;  // M x (K+1), row m is class m's weight vector
};

inline Vec multiclass_logits(const MulticlassParams& p, const Vec& x) {
    return matvec(p.weights, augment(x));
}

inline double multiclass_loglik(const ClassDataset& ds, const MulticlassParams& p) {
    double l = 0.0;
    for (std::size_t i = 0; i < ds.inputs.rows(); ++i) {
        const Vec probs = softmax(multiclass_logits(p, ds.inputs.row(i)));
        l += std::log(probs[static_cast<std::size_t>(ds.labels[i])]);
    }
    return l;
}

struct MulticlassFit {
    MulticlassParams params;
    Vec loglik_trace;
    StopReason stop;
};

/// Gradient-ascent softmax regression with one-hot targets.
inline MulticlassFit fit_multiclass(const ClassDataset& ds, const ExperimentConfig& cfg) {
    const std::size_t m = ds.num_classes, k = ds.inputs.cols();
    if (m < 2) throw std::invalid_argument("fit_multiclass: requires M >= 2");
    for (int y : ds.labels)
        if (y < 0 || static_cast<std::size_t>(y) >= m)
            throw std::invalid_argument("fit_multiclass: label out of range");

    auto unflatten = [&](const Vec& flat) {
        MulticlassParams p{DenseMatrix(m, k + 1, flat)};
        return p;
    };
    auto obj = [&](const Vec& flat) { return multiclass_loglik(ds, unflatten(flat)); };
    auto grad = [&](const Vec& flat) {
        const MulticlassParams p = unflatten(flat);
        DenseMatrix g(m, k + 1);
        for (std::size_t i = 0; i < ds.inputs.rows(); ++i) {
            const Vec xi = augment(ds.inputs.row(i));
            const Vec probs = softmax(matvec(p.weights, xi));
            for (std::size_t c = 0; c < m; ++c) {
                const double coef = (ds.labels[i] == static_cast<int>(c) ? 1.0 : 0.0) - probs[c];
                for (std::size_t j = 0; j <= k; ++j) g(c, j) += coef * xi[j];
            }
        }
        return g.data();
    };

    Vec flat(m * (k + 1), 0.0);
    MulticlassFit fit;
    fit.stop = detail::ascend(flat, fit.loglik_trace, obj, grad, cfg);
    fit.params = unflatten(flat);
    return fit;
}

inline int predict_multiclass(const MulticlassParams& p, const Vec& x) {
    const Vec logits = multiclass_logits(p, x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return static_cast<int>(best);
}

}  // namespace genlearn
