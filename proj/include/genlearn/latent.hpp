#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "genlearn/config.hpp"
#include "genlearn/errors.hpp"
#include "genlearn/linalg.hpp"
#include "genlearn/matrix.hpp"
#include "genlearn/pmf.hpp"
#include "genlearn/rng.hpp"

namespace genlearn {

inline Vec sample_mean(const DenseMatrix& data) {
    Vec mu(data.cols(), 0.0);
    for (std::size_t i = 0; i < data.rows(); ++i)
        for (std::size_t j = 0; j < data.cols(); ++j) mu[j] += data(i, j);
    for (double& v : mu) v /= static_cast<double>(data.rows());
    return mu;
}

inline DenseMatrix sample_covariance(const DenseMatrix& data, const Vec& mean) {
    const std::size_t n = data.rows(), m = data.cols();
    DenseMatrix s(m, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < m; ++a) {
            const double da = data(i, a) - mean[a];
            for (std::size_t b = 0; b < m; ++b) s(a, b) += da * (data(i, b) - mean[b]);
        }
    for (double& v : s.data()) v /= static_cast<double>(n);
    return s;
}

inline double mvn_logpdf(const Vec& x, const Vec& mu, const DenseMatrix& cov) {
    const std::size_t m = x.size();
    if (mu.size() != m || cov.rows() != m || cov.cols() != m)
        throw std::invalid_argument("mvn_logpdf: dimension mismatch");
    const DenseMatrix l = cholesky(cov);
    // Forward-substitute y = L^{-1} (x - mu); the quadratic form is ||y||^2.
    Vec y(m);
    for (std::size_t i = 0; i < m; ++i) {
        double s = x[i] - mu[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    return -0.5 * (static_cast<double>(m) * std::log(2.0 * M_PI) + cholesky_logdet(l) +
                   squared_norm(y));
}

// ---- probabilistic PCA ----

struct PpcaParams {
    DenseMatrix W;  // M x K
    Vec mu;         // length M
    double sigma2;
};

/// Closed-form maximum likelihood fit: top-K eigenpairs of the sample
/// covariance, residual spectrum averaged into sigma^2, V = I.
inline PpcaParams ppca_fit(const DenseMatrix& data, std::size_t k) {
    const std::size_t n = data.rows(), m = data.cols();
    if (!(n > m)) throw std::invalid_argument("ppca_fit: requires n > M");
    if (!(m >= k + 1)) throw std::invalid_argument("ppca_fit: requires M >= K+1");
    PpcaParams p;
    p.mu = sample_mean(data);
    const DenseMatrix s = sample_covariance(data, p.mu);
    const EighResult eig = eigh_sym(s);
    double resid = 0.0;
    for (std::size_t j = k; j < m; ++j) resid += eig.eigenvalues[j];
    p.sigma2 = std::max(resid / static_cast<double>(m - k), 0.0);
    const double tol = 1e-12 * std::max(1.0, std::abs(eig.eigenvalues.front()));
    p.W = DenseMatrix(m, k);
    for (std::size_t j = 0; j < k; ++j) {
        const double gap = eig.eigenvalues[j] - p.sigma2;
        if (gap < -tol)
            throw DegenerateSpectrum("ppca_fit: eigenvalue below the noise floor");
        const double scale = std::sqrt(std::max(gap, 0.0));
        for (std::size_t i = 0; i < m; ++i) p.W(i, j) = eig.eigenvectors(i, j) * scale;
    }
    return p;
}

/// Marginal covariance C = W W^T + sigma^2 I (named C; the latent width is K).
inline DenseMatrix ppca_marginal_cov(const PpcaParams& p) {
    const std::size_t m = p.W.rows();
    DenseMatrix c = matmul(p.W, transpose(p.W));
    for (std::size_t i = 0; i < m; ++i) c(i, i) += p.sigma2;
    return c;
}

/// Gaussian log-likelihood of the dataset under the PPCA marginal (nats).
inline double ppca_loglik(const PpcaParams& p, const DenseMatrix& data) {
    const DenseMatrix c = ppca_marginal_cov(p);
    double l = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) l += mvn_logpdf(data.row(i), p.mu, c);
    return l;
}

struct GaussianPosterior {
    Vec mean;
    DenseMatrix cov;
};

/// Exact latent posterior N(A^{-1} W^T (x - mu), sigma^2 A^{-1}),
/// A = W^T W + sigma^2 I.
inline GaussianPosterior ppca_posterior(const PpcaParams& p, const Vec& x) {
    if (!(p.sigma2 > 0.0)) throw std::invalid_argument("ppca_posterior: requires sigma2 > 0");
    const std::size_t k = p.W.cols();
    DenseMatrix a = matmul(transpose(p.W), p.W);
    for (std::size_t i = 0; i < k; ++i) a(i, i) += p.sigma2;
    const DenseMatrix a_inv = spd_inverse(a);
    GaussianPosterior post;
    post.mean = matvec(a_inv, matvec(transpose(p.W), x - p.mu));
    post.cov = a_inv;
    for (double& v : post.cov.data()) v *= p.sigma2;
    return post;
}

// ---- Gaussian mixtures and EM ----

struct GmmParams {
    Vec weights;                    // mixing proportions, a pmf over components
    std::vector<Vec> means;         // d vectors of length M
    std::vector<DenseMatrix> covs;  // d SPD matrices M x M

    std::size_t components() const { return weights.size(); }
    std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
};

inline void validate(const GmmParams& g) {
    if (g.weights.empty() || g.means.size() != g.weights.size() ||
        g.covs.size() != g.weights.size())
        throw InvalidModel("GmmParams: component counts disagree");
    (void)Pmf(g.weights);
    for (std::size_t j = 0; j < g.components(); ++j) {
        try {
            (void)cholesky(g.covs[j]);
        } catch (const NumericError&) {
            throw InvalidModel("GmmParams: covariance is not positive definite");
        }
    }
}

inline double gmm_logpdf(const GmmParams& g, const Vec& x) {
    double best = -std::numeric_limits<double>::infinity();
    Vec logs(g.components());
    for (std::size_t j = 0; j < g.components(); ++j) {
        logs[j] = g.weights[j] > 0.0
                      ? std::log(g.weights[j]) + mvn_logpdf(x, g.means[j], g.covs[j])
                      : -std::numeric_limits<double>::infinity();
        best = std::max(best, logs[j]);
    }
    double sum = 0.0;
    for (double l : logs) sum += std::exp(l - best);
    return best + std::log(sum);
}

inline double gmm_pdf(const GmmParams& g, const Vec& x) { return std::exp(gmm_logpdf(g, x)); }

/// Bayes posterior over components, computed in log space.
inline Pmf gmm_posterior(const GmmParams& g, const Vec& x) {
    Vec logs(g.components());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < g.components(); ++j) {
        logs[j] = g.weights[j] > 0.0
                      ? std::log(g.weights[j]) + mvn_logpdf(x, g.means[j], g.covs[j])
                      : -std::numeric_limits<double>::infinity();
        best = std::max(best, logs[j]);
    }
    Vec post(g.components());
    for (std::size_t j = 0; j < g.components(); ++j) post[j] = std::exp(logs[j] - best);
    return Pmf::normalized(std::move(post));
}

inline Vec gmm_sample(const GmmParams& g, Rng& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t j = g.components() - 1;
    for (std::size_t c = 0; c < g.components(); ++c) {
        cum += g.weights[c];
        if (u < cum) {
            j = c;
            break;
        }
    }
    const DenseMatrix l = cholesky(g.covs[j]);
    Vec x = g.means[j];
    const Vec z = sample_std_normal(rng, x.size());
    for (std::size_t a = 0; a < x.size(); ++a)
        for (std::size_t b = 0; b <= a; ++b) x[a] += l(a, b) * z[b];
    return x;
}

inline double gmm_loglik(const GmmParams& g, const DenseMatrix& data) {
    double l = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) l += gmm_logpdf(g, data.row(i));
    return l;
}

struct EmState {
    GmmParams params;
    DenseMatrix responsibilities;  // n x d, rows sum to 1
    Vec loglik_trace;              // nats; non-decreasing up to 1e-9 slack
};

inline double covariance_floor(const DenseMatrix& data) {
    const DenseMatrix s = sample_covariance(data, sample_mean(data));
    double tr = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) tr += s(i, i);
    return 1e-8 * tr / static_cast<double>(s.rows());
}

/// k-means++-style seeding: spread means over data points, shared covariance.
inline EmState em_init(const DenseMatrix& data, std::size_t d, Rng& rng) {
    const std::size_t n = data.rows();
    if (d == 0 || n == 0) throw std::invalid_argument("em_init: empty input");
    GmmParams g;
    g.weights.assign(d, 1.0 / static_cast<double>(d));
    std::vector<std::size_t> chosen{rng.uniform_index(n)};
    while (chosen.size() < d) {
        Vec dist2(n, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c : chosen) best = std::min(best, squared_norm(data.row(i) - data.row(c)));
            dist2[i] = best;
            total += best;
        }
        std::size_t pick = rng.uniform_index(n);
        if (total > 0.0) {
            const double u = rng.uniform() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += dist2[i];
                if (u < cum) {
                    pick = i;
                    break;
                }
            }
        }
        chosen.push_back(pick);
    }
    DenseMatrix cov = sample_covariance(data, sample_mean(data));
    const double floor = covariance_floor(data);
    for (std::size_t i = 0; i < cov.rows(); ++i) cov(i, i) += std::max(floor, 1e-12);
    for (std::size_t j = 0; j < d; ++j) {
        g.means.push_back(data.row(chosen[j]));
        g.covs.push_back(cov);
    }
    EmState state;
    state.params = std::move(g);
    state.responsibilities = DenseMatrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const Pmf post = gmm_posterior(state.params, data.row(i));
        for (std::size_t j = 0; j < d; ++j) state.responsibilities(i, j) = post[j];
    }
    state.loglik_trace.push_back(gmm_loglik(state.params, data));
    return state;
}

/// One E+M sweep; appends the new log-likelihood to the trace.
inline EmState em_step(const EmState& state, const DenseMatrix& data) {
    const std::size_t n = data.rows();
    const std::size_t d = state.params.components();
    const std::size_t m = data.cols();

    EmState next;
    next.loglik_trace = state.loglik_trace;
    next.responsibilities = DenseMatrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const Pmf post = gmm_posterior(state.params, data.row(i));
        for (std::size_t j = 0; j < d; ++j) next.responsibilities(i, j) = post[j];
    }

    GmmParams g;
    g.weights.assign(d, 0.0);
    const double floor = covariance_floor(data);
    for (std::size_t j = 0; j < d; ++j) {
        double nj = 0.0;
        for (std::size_t i = 0; i < n; ++i) nj += next.responsibilities(i, j);
        if (nj < 1e-8)
            throw ComponentCollapse(j, "em_step: component lost all responsibility");
        Vec mu(m, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            axpy(next.responsibilities(i, j), data.row(i), mu);
        for (double& v : mu) v /= nj;
        DenseMatrix cov(m, m);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec r = data.row(i) - mu;
            const double w = next.responsibilities(i, j);
            for (std::size_t a = 0; a < m; ++a)
                for (std::size_t b = 0; b < m; ++b) cov(a, b) += w * r[a] * r[b];
        }
        for (double& v : cov.data()) v /= nj;
        for (std::size_t a = 0; a < m; ++a) cov(a, a) += floor;
        try {
            (void)cholesky(cov);
        } catch (const NumericError&) {
            throw ComponentCollapse(j, "em_step: covariance became singular");
        }
        g.weights[j] = nj / static_cast<double>(n);
        g.means.push_back(std::move(mu));
        g.covs.push_back(std::move(cov));
    }
    next.params = std::move(g);
    next.loglik_trace.push_back(gmm_loglik(next.params, data));
    return next;
}

/// EM to convergence (|delta loglik| < 1e-8 or cfg.max_steps). On a component
/// collapse the offending component is reseeded from a random data point
/// once; a second collapse aborts.
inline EmState em_fit(const DenseMatrix& data, std::size_t d, const ExperimentConfig& cfg) {
    const std::size_t n = data.rows(), m = data.cols();
    if (n < d * (m + 1)) throw std::invalid_argument("em_fit: too few samples for d components");
    Rng rng = Rng(cfg.seed).split("em-init");
    EmState state = em_init(data, d, rng);
    bool restarted = false;
    for (std::size_t step = 0; step < cfg.max_steps; ++step) {
        EmState next;
        try {
            next = em_step(state, data);
        } catch (const ComponentCollapse& collapse) {
            if (restarted) throw;
            restarted = true;
            state.params.means[collapse.component] = data.row(rng.uniform_index(n));
            DenseMatrix cov = sample_covariance(data, sample_mean(data));
            const double floor = covariance_floor(data);
            for (std::size_t i = 0; i < m; ++i) cov(i, i) += std::max(floor, 1e-12);
            state.params.covs[collapse.component] = cov;
            state.params.weights[collapse.component] = 1.0 / static_cast<double>(d);
            double total = 0.0;
            for (std::size_t j = 0; j < d; ++j) total += state.params.weights[j];
            for (std::size_t j = 0; j < d; ++j) state.params.weights[j] /= total;
            continue;
        }
        const double prev = state.loglik_trace.back();
        state = std::move(next);
        if (std::abs(state.loglik_trace.back() - prev) < 1e-8) break;
    }
    return state;
}

}  // namespace genlearn
