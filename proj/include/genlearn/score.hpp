#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "genlearn/config.hpp"
#include "genlearn/errors.hpp"
#include "genlearn/matrix.hpp"
#include "genlearn/neuralnet.hpp"
#include "genlearn/quadrature.hpp"
#include "genlearn/rng.hpp"

namespace genlearn {

// All logarithms in this module are natural.

/// Differentiable density on a truncated 1-D domain. The analytic score is
/// optional; score_of falls back to central differences of the log-density.
struct Density1D {
    std::function<double(double)> log_pdf;  // -inf where the density vanishes
    std::function<double(double)> score;    // may be empty
    double lo, hi;

    double pdf(double x) const {
        const double l = log_pdf(x);
        return l == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(l);
    }
};

struct DensityND {
    std::function<double(const Vec&)> log_pdf;
    std::function<Vec(const Vec&)> score;  // may be empty
    Vec lo, hi;

    std::size_t dim() const { return lo.size(); }
    double pdf(const Vec& x) const {
        const double l = log_pdf(x);
        return l == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(l);
    }
};

inline double normal_logpdf_1d(double x, double mu, double var) {
    return -0.5 * std::log(2.0 * M_PI * var) - (x - mu) * (x - mu) / (2.0 * var);
}

inline Density1D gaussian_density(double mu, double var) {
    if (!(var > 0.0)) throw std::invalid_argument("gaussian_density: var must be positive");
    Density1D d;
    d.log_pdf = [mu, var](double x) { return normal_logpdf_1d(x, mu, var); };
    d.score = [mu, var](double x) { return -(x - mu) / var; };
    const double sd = std::sqrt(var);
    d.lo = mu - 8.0 * sd;
    d.hi = mu + 8.0 * sd;
    return d;
}

/// Gaussian mixture density with analytic score (the widest component sets
/// the +-8 sigma truncation).
inline Density1D mixture_density(const Vec& weights, const Vec& mus, const Vec& vars) {
    if (weights.size() != mus.size() || weights.size() != vars.size() || weights.empty())
        throw std::invalid_argument("mixture_density: component lists disagree");
    for (double v : vars)
        if (!(v > 0.0)) throw std::invalid_argument("mixture_density: variances must be positive");
    Density1D d;
    d.log_pdf = [=](double x) {
        double p = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j)
            p += weights[j] * std::exp(normal_logpdf_1d(x, mus[j], vars[j]));
        return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    };
    d.score = [=](double x) {
        double p = 0.0, dp = 0.0;
        for (std::size_t j = 0; j < weights.size(); ++j) {
            const double c = weights[j] * std::exp(normal_logpdf_1d(x, mus[j], vars[j]));
            p += c;
            dp += c * (-(x - mus[j]) / vars[j]);
        }
        return p > 0.0 ? dp / p : 0.0;
    };
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        const double sd = std::sqrt(vars[j]);
        lo = std::min(lo, mus[j] - 8.0 * sd);
        hi = std::max(hi, mus[j] + 8.0 * sd);
    }
    d.lo = lo;
    d.hi = hi;
    return d;
}

/// Energy-based density exp(phi(x))/Z on [lo, hi] with polynomial energy
/// phi(x) = sum_k coeffs[k] x^k. The score never needs Z.
inline Density1D energy_poly_density(const Vec& coeffs, double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("energy_poly_density: requires lo < hi");
    auto phi = [coeffs](double x) {
        double v = 0.0, p = 1.0;
        for (double c : coeffs) {
            v += c * p;
            p *= x;
        }
        return v;
    };
    const double log_z = std::log(quad_1d([&](double x) { return std::exp(phi(x)); }, lo, hi,
                                          4096));
    Density1D d;
    d.log_pdf = [phi, log_z, lo, hi](double x) {
        if (x < lo || x > hi) return -std::numeric_limits<double>::infinity();
        return phi(x) - log_z;
    };
    d.score = [coeffs, lo, hi](double x) {
        if (x < lo || x > hi) return 0.0;
        double v = 0.0, p = 1.0;
        for (std::size_t k = 1; k < coeffs.size(); ++k) {
            v += static_cast<double>(k) * coeffs[k] * p;
            p *= x;
        }
        return v;
    };
    d.lo = lo;
    d.hi = hi;
    return d;
}

inline DensityND gaussian_density_nd(const Vec& mu, double var) {
    if (!(var > 0.0)) throw std::invalid_argument("gaussian_density_nd: var must be positive");
    DensityND d;
    const std::size_t k = mu.size();
    d.log_pdf = [mu, var, k](const Vec& x) {
        double sq = 0.0;
        for (std::size_t j = 0; j < k; ++j) sq += (x[j] - mu[j]) * (x[j] - mu[j]);
        return -0.5 * static_cast<double>(k) * std::log(2.0 * M_PI * var) - sq / (2.0 * var);
    };
    d.score = [mu, var, k](const Vec& x) {
        Vec s(k);
        for (std::size_t j = 0; j < k; ++j) s[j] = -(x[j] - mu[j]) / var;
        return s;
    };
    const double sd = std::sqrt(var);
    d.lo = mu;
    d.hi = mu;
    for (std::size_t j = 0; j < k; ++j) {
        d.lo[j] -= 8.0 * sd;
        d.hi[j] += 8.0 * sd;
    }
    return d;
}

/// grad ln f(x); zero where the density vanishes.
inline double score_of(const Density1D& d, double x) {
    if (d.log_pdf(x) == -std::numeric_limits<double>::infinity()) return 0.0;
    if (d.score) return d.score(x);
    const double h = 1e-5;
    return (d.log_pdf(x + h) - d.log_pdf(x - h)) / (2.0 * h);
}

inline Vec score_of(const DensityND& d, const Vec& x) {
    if (d.log_pdf(x) == -std::numeric_limits<double>::infinity()) return Vec(x.size(), 0.0);
    if (d.score) return d.score(x);
    const double h = 1e-5;
    Vec g(x.size());
    Vec probe = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        probe[j] = x[j] + h;
        const double fp = d.log_pdf(probe);
        probe[j] = x[j] - h;
        const double fm = d.log_pdf(probe);
        probe[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// (1/2) int f ||s_f - s_g||^2 by composite Simpson; two refinements must
/// agree within 1e-4 or the result is rejected.
inline double fisher_divergence(const Density1D& f, const Density1D& g) {
    const double lo = std::max(f.lo, g.lo), hi = std::min(f.hi, g.hi);
    if (!(lo < hi)) throw std::invalid_argument("fisher_divergence: disjoint domains");
    auto integrand = [&](double x) {
        const double fx = f.pdf(x);
        if (fx <= 0.0) return 0.0;
        const double diff = score_of(f, x) - score_of(g, x);
        return 0.5 * fx * diff * diff;
    };
    const double coarse = quad_1d(integrand, lo, hi, 4096);
    const double fine = quad_1d(integrand, lo, hi, 8192);
    if (std::abs(fine - coarse) > 1e-4)
        throw AccuracyFailure("fisher_divergence: quadrature did not converge");
    return fine;
}

inline double fisher_divergence(const DensityND& f, const DensityND& g) {
    if (f.dim() != 2 || g.dim() != 2)
        throw std::invalid_argument("fisher_divergence: tensor grids support 2-D only");
    const double lox = std::max(f.lo[0], g.lo[0]), hix = std::min(f.hi[0], g.hi[0]);
    const double loy = std::max(f.lo[1], g.lo[1]), hiy = std::min(f.hi[1], g.hi[1]);
    auto integrand = [&](double x, double y) {
        const Vec p{x, y};
        const double fx = f.pdf(p);
        if (fx <= 0.0) return 0.0;
        const Vec diff = score_of(f, p) - score_of(g, p);
        return 0.5 * fx * squared_norm(diff);
    };
    const double coarse = quad_2d(integrand, lox, hix, loy, hiy, 128, 128);
    const double fine = quad_2d(integrand, lox, hix, loy, hiy, 256, 256);
    if (std::abs(fine - coarse) > 1e-4)
        throw AccuracyFailure("fisher_divergence: quadrature did not converge");
    return fine;
}

/// Derived density of y = a x.
inline Density1D scale_density(const Density1D& f, double a) {
    if (a == 0.0) throw std::invalid_argument("scale_density: a must be nonzero");
    Density1D d;
    const double log_jac = std::log(std::abs(a));
    d.log_pdf = [f, a, log_jac](double y) { return f.log_pdf(y / a) - log_jac; };
    if (f.score) {
        d.score = [f, a](double y) { return f.score(y / a) / a; };
    }
    d.lo = std::min(a * f.lo, a * f.hi);
    d.hi = std::max(a * f.lo, a * f.hi);
    return d;
}

struct FisherScalingReport {
    double scaled;    // D_F between the derived densities of y = a x
    double expected;  // (1/a^2) D_F(f || g)
};

inline FisherScalingReport fisher_scaling_check(const Density1D& f, const Density1D& g,
                                                double a) {
    if (a == 0.0) throw std::invalid_argument("fisher_scaling_check: a must be nonzero");
    FisherScalingReport r;
    r.scaled = fisher_divergence(scale_density(f, a), scale_density(g, a));
    r.expected = fisher_divergence(f, g) / (a * a);
    return r;
}

/// Neural score model s_theta: R^K -> R^K for a fixed noise level.
struct ScoreModel {
    MlpParams net;
    double sigma2;
};

inline Vec score_eval(const ScoreModel& m, const Vec& y) { return predict(m.net, y); }

/// Monte-Carlo denoising score-matching objective over a clean batch:
/// (1/2) E || (x - y)/sigma^2 - s(y) ||^2 with y = x + N(0, sigma^2 I).
template <class ScoreFn>
double dsm_objective_with(const ScoreFn& s, const DenseMatrix& batch, Rng& rng, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("dsm_objective: sigma2 must be positive");
    const double sd = std::sqrt(sigma2);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.rows(); ++i) {
        const Vec x = batch.row(i);
        const Vec eps = sample_std_normal(rng, x.size());
        Vec y = x;
        axpy(sd, eps, y);
        Vec target = x - y;
        for (double& v : target) v /= sigma2;
        total += 0.5 * squared_norm(target - s(x, y));
    }
    return total / static_cast<double>(batch.rows());
}

inline double dsm_objective(const ScoreModel& m, const DenseMatrix& batch, Rng& rng,
                            double sigma2) {
    return dsm_objective_with(
        [&](const Vec&, const Vec& y) { return score_eval(m, y); }, batch, rng, sigma2);
}

/// SGD on the denoising score-matching objective.
inline ScoreModel dsm_train(const DenseMatrix& ds, double sigma2,
                            const std::vector<std::size_t>& hidden,
                            const ExperimentConfig& cfg,
                            Activation act = Activation::kLogistic) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("dsm_train: sigma2 must be positive");
    const std::size_t n = ds.rows(), dim = ds.cols();
    Rng init_rng = Rng(cfg.seed).split("dsm-init");
    ScoreModel m{make_mlp(dim, hidden, act, dim, OutputHead::kGaussianRegression, init_rng),
                 sigma2};
    Rng step_rng = Rng(cfg.seed).split("dsm-train");
    const double sd = std::sqrt(sigma2);
    const std::size_t batch = std::min<std::size_t>(std::max<std::size_t>(cfg.batch_size, 1), n);
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        MlpGradients grads = zero_gradients(m.net);
        for (std::size_t b = 0; b < batch; ++b) {
            const Vec x = ds.row(step_rng.uniform_index(n));
            const Vec eps = sample_std_normal(step_rng, dim);
            Vec y = x;
            axpy(sd, eps, y);
            Vec target = x - y;
            for (double& v : target) v /= sigma2;
            const ForwardCache cache = forward(m.net, y);
            Vec dout = cache.output() - target;  // d/ds of (1/2)||target - s||^2
            if (!std::isfinite(squared_norm(dout)))
                throw TrainingDivergence(step, "dsm_train: non-finite gradient");
            const BackwardResult back = backward_from_output(m.net, cache, dout);
            for (std::size_t li = 0; li < grads.size(); ++li)
                for (std::size_t e = 0; e < grads[li].data().size(); ++e)
                    grads[li].data()[e] += back.grads[li].data()[e];
        }
        apply_update(m.net, grads, -cfg.learning_rate / static_cast<double>(batch));
    }
    return m;
}

/// Posterior-mean estimate under Gaussian corruption: y + sigma^2 * score of
/// the observation marginal at y.
inline double tweedie_estimate(const Density1D& f_y, double y, double sigma2) {
    if (sigma2 == 0.0) return y;
    return y + sigma2 * score_of(f_y, y);
}

inline Vec tweedie_estimate(const DensityND& f_y, const Vec& y, double sigma2) {
    if (sigma2 == 0.0) return y;
    Vec est = y;
    axpy(sigma2, score_of(f_y, y), est);
    return est;
}

}  // namespace genlearn
