#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "genlearn/errors.hpp"
#include "genlearn/matrix.hpp"
#include "genlearn/pmf.hpp"

namespace genlearn {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double log2_safe(double x) { return std::log2(x); }

enum class FDivName {
    kKl,
    kReverseKl,
    kTv,
    kHockeyStick,
    kChiSq,
    kJs,
    kHellingerSq,
    kRenyi,
};

inline const char* to_string(FDivName n) {
    switch (n) {
        case FDivName::kKl: return "kl";
        case FDivName::kReverseKl: return "reverse_kl";
        case FDivName::kTv: return "tv";
        case FDivName::kHockeyStick: return "hockey_stick";
        case FDivName::kChiSq: return "chi_sq";
        case FDivName::kJs: return "js";
        case FDivName::kHellingerSq: return "hellinger_sq";
        case FDivName::kRenyi: return "renyi_gen";
    }
    return "?";
}

/// A convex generator f:(0,inf)->R with f(1)=0, together with its analytic
/// boundary limits. Log-based generators use base 2, so kl/reverse_kl/js
/// divergences come out in bits.
class FDivSpec {
  public:
    static FDivSpec kl() { return FDivSpec(FDivName::kKl, 0.0); }
    static FDivSpec reverse_kl() { return FDivSpec(FDivName::kReverseKl, 0.0); }
    static FDivSpec tv() { return FDivSpec(FDivName::kTv, 0.0); }
    static FDivSpec hockey_stick(double gamma) { return FDivSpec(FDivName::kHockeyStick, gamma); }
    static FDivSpec chi_sq() { return FDivSpec(FDivName::kChiSq, 0.0); }
    static FDivSpec js() { return FDivSpec(FDivName::kJs, 0.0); }
    static FDivSpec hellinger_sq() { return FDivSpec(FDivName::kHellingerSq, 0.0); }
    static FDivSpec renyi_gen(double alpha) {
        if (!(alpha > 0.0) || alpha == 1.0)
            throw std::invalid_argument("renyi_gen: requires alpha > 0, alpha != 1");
        return FDivSpec(FDivName::kRenyi, alpha);
    }

    FDivName name() const { return name_; }
    double param() const { return param_; }

    /// f(t) for t > 0.
    double operator()(double t) const {
        switch (name_) {
            case FDivName::kKl: return t * std::log2(t);
            case FDivName::kReverseKl: return -std::log2(t);
            case FDivName::kTv: return 0.5 * std::abs(t - 1.0);
            case FDivName::kHockeyStick: return std::max(t - param_, 0.0);
            case FDivName::kChiSq: return (t - 1.0) * (t - 1.0);
            case FDivName::kJs:
                return t * std::log2(2.0 * t / (t + 1.0)) + std::log2(2.0 / (t + 1.0));
            case FDivName::kHellingerSq: {
                const double d = std::sqrt(t) - 1.0;
                return 0.5 * d * d;
            }
            case FDivName::kRenyi: return (std::pow(t, param_) - 1.0) / (param_ - 1.0);
        }
        return 0.0;
    }

    /// lim_{t->0+} f(t).
    double at_zero() const {
        switch (name_) {
            case FDivName::kKl: return 0.0;
            case FDivName::kReverseKl: return kInf;
            case FDivName::kTv: return 0.5;
            case FDivName::kHockeyStick: return 0.0;  // gamma >= 1
            case FDivName::kChiSq: return 1.0;
            case FDivName::kJs: return 1.0;
            case FDivName::kHellingerSq: return 0.5;
            case FDivName::kRenyi: return 1.0 / (1.0 - param_);
        }
        return 0.0;
    }

    /// lim_{t->inf} f(t)/t, which gives the 0*f(a/0) = a*lim convention.
    double slope_at_inf() const {
        switch (name_) {
            case FDivName::kKl: return kInf;
            case FDivName::kReverseKl: return 0.0;
            case FDivName::kTv: return 0.5;
            case FDivName::kHockeyStick: return 1.0;
            case FDivName::kChiSq: return kInf;
            case FDivName::kJs: return 1.0;
            case FDivName::kHellingerSq: return 0.5;
            case FDivName::kRenyi: return (param_ > 1.0) ? kInf : 0.0;
        }
        return 0.0;
    }

    /// Midpoint convexity on a grid plus f(1)=0, both within 1e-12.
    void validate() const {
        if (std::abs((*this)(1.0)) > 1e-12)
            throw InvalidSpec(std::string("FDivSpec ") + to_string(name_) + ": f(1) != 0");
        const double lo = 0.05, hi = 5.0;
        const int steps = 99;
        const double h = (hi - lo) / steps;
        for (int i = 1; i < steps; ++i) {
            const double t = lo + h * i;
            const double mid = (*this)(t);
            const double avg = 0.5 * ((*this)(t - h) + (*this)(t + h));
            if (mid > avg + 1e-12)
                throw InvalidSpec(std::string("FDivSpec ") + to_string(name_) +
                                  ": generator is not convex");
        }
    }

  private:
    FDivSpec(FDivName name, double param) : name_(name), param_(param) { validate(); }

    FDivName name_;
    double param_;
};

inline void check_same_alphabet(const Pmf& p, const Pmf& q) {
    if (p.size() != q.size()) throw std::invalid_argument("pmf alphabets do not match");
}

/// H(p, q) = -sum p(x) log2 q(x), in bits; +inf when q misses mass of p.
inline double cross_entropy(const Pmf& p, const Pmf& q) {
    check_same_alphabet(p, q);
    double h = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        if (p[x] == 0.0) continue;
        if (q[x] == 0.0) return kInf;
        h -= p[x] * std::log2(q[x]);
    }
    return h;
}

/// sum_x q(x) f(p(x)/q(x)) with the 0-mass conventions evaluated analytically.
inline double f_divergence(const Pmf& p, const Pmf& q, const FDivSpec& spec) {
    check_same_alphabet(p, q);
    double d = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        const double px = p[x], qx = q[x];
        if (qx > 0.0 && px > 0.0) {
            d += qx * spec(px / qx);
        } else if (qx > 0.0) {
            d += qx * spec.at_zero();
        } else if (px > 0.0) {
            d += px * spec.slope_at_inf();
        }
        if (d == kInf) return kInf;
    }
    return d;
}

inline double kl_divergence(const Pmf& p, const Pmf& q) {
    return f_divergence(p, q, FDivSpec::kl());
}

/// D(p||m) + D(q||m) with m = (p+q)/2, in bits; no 1/2 prefactor.
inline double js_divergence(const Pmf& p, const Pmf& q) {
    check_same_alphabet(p, q);
    double d = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        const double m = 0.5 * (p[x] + q[x]);
        if (p[x] > 0.0) d += p[x] * std::log2(p[x] / m);
        if (q[x] > 0.0) d += q[x] * std::log2(q[x] / m);
    }
    return d;
}

/// (1/sqrt(2)) * ||sqrt(p) - sqrt(q)||_2.
inline double hellinger(const Pmf& p, const Pmf& q) {
    check_same_alphabet(p, q);
    double s = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) {
        const double d = std::sqrt(p[x]) - std::sqrt(q[x]);
        s += d * d;
    }
    return std::sqrt(0.5 * s);
}

/// Renyi divergence of order alpha, in bits, through the f_alpha generator.
inline double renyi_divergence(const Pmf& p, const Pmf& q, double alpha) {
    if (!(alpha > 0.0) || alpha == 1.0)
        throw std::invalid_argument("renyi_divergence: requires alpha > 0, alpha != 1");
    const double d = f_divergence(p, q, FDivSpec::renyi_gen(alpha));
    const double inner = 1.0 + (alpha - 1.0) * d;
    if (inner <= 0.0) return kInf;
    return std::log2(inner) / (alpha - 1.0);
}

/// Row-stochastic transition matrix p(y|x); rows indexed by x.
class Channel {
  public:
    explicit Channel(DenseMatrix transition) : transition_(std::move(transition)) {
        for (std::size_t i = 0; i < transition_.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < transition_.cols(); ++j) {
                if (!(transition_(i, j) >= 0.0))
                    throw std::invalid_argument("Channel: negative transition probability");
                sum += transition_(i, j);
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw std::invalid_argument("Channel: row is not a pmf");
        }
    }

    static Channel identity(std::size_t n) { return Channel(DenseMatrix::identity(n)); }

    static Channel random(Rng& rng, std::size_t in, std::size_t out) {
        DenseMatrix t(in, out);
        for (std::size_t i = 0; i < in; ++i) {
            const Pmf row = Pmf::random(rng, out);
            for (std::size_t j = 0; j < out; ++j) t(i, j) = row[j];
        }
        return Channel(std::move(t));
    }

    const DenseMatrix& transition() const { return transition_; }
    std::size_t input_size() const { return transition_.rows(); }
    std::size_t output_size() const { return transition_.cols(); }

  private:
    DenseMatrix transition_;
};

/// Push (p, q) through the channel: the output-marginal pair of Thm's
/// data-processing setup.
inline std::pair<Pmf, Pmf> data_processed(const Pmf& p, const Pmf& q, const Channel& ch) {
    check_same_alphabet(p, q);
    if (ch.input_size() != p.size())
        throw std::invalid_argument("data_processed: channel rows must match the alphabet");
    Vec py(ch.output_size(), 0.0), qy(ch.output_size(), 0.0);
    for (std::size_t x = 0; x < p.size(); ++x)
        for (std::size_t y = 0; y < ch.output_size(); ++y) {
            py[y] += p[x] * ch.transition()(x, y);
            qy[y] += q[x] * ch.transition()(x, y);
        }
    return {Pmf::normalized(std::move(py)), Pmf::normalized(std::move(qy))};
}

// ---- two-player game values over discrete distributions ----

enum class GameName { kGanLog, kFganA, kFganB, kFganC };

/// Per-point-separable discriminator game. The range constraint is implied by
/// the tag: gan_log uses d in (0,1); fgan_a |d| <= 1/2; fgan_b unconstrained;
/// fgan_c d < 1.
struct GameSpec {
    GameName name;
    double gamma = 1.0;  // only fgan_a

    static GameSpec gan_log() { return {GameName::kGanLog, 0.0}; }
    static GameSpec fgan_a(double gamma) {
        if (!(gamma >= 1.0)) throw std::invalid_argument("fgan_a: requires gamma >= 1");
        return {GameName::kFganA, gamma};
    }
    static GameSpec fgan_b() { return {GameName::kFganB, 0.0}; }
    static GameSpec fgan_c() { return {GameName::kFganC, 0.0}; }
};

struct GameValue {
    double value;  // gan_log in bits; the others are plain expectations
    Vec d_star;    // per-point maximizer (may be +-inf at zero-mass edges)
};

/// Maximal value of the discriminator payoff, maximized per point in closed
/// form, together with the per-point argmax.
inline GameValue game_value(const Pmf& p, const Pmf& q, const GameSpec& game) {
    check_same_alphabet(p, q);
    GameValue out{0.0, Vec(p.size(), 0.0)};
    for (std::size_t x = 0; x < p.size(); ++x) {
        const double px = p[x], qx = q[x];
        double d = 0.0, contrib = 0.0;
        switch (game.name) {
            case GameName::kGanLog: {
                if (px == 0.0 && qx == 0.0) {
                    d = 0.5;
                } else {
                    d = px / (px + qx);
                    if (px > 0.0) contrib += px * std::log2(d);
                    if (qx > 0.0) contrib += qx * std::log2(1.0 - d);
                }
                break;
            }
            case GameName::kFganA: {
                const double diff = px - game.gamma * qx;
                d = (diff >= 0.0) ? 0.5 : -0.5;
                contrib = 0.5 * std::abs(diff);
                break;
            }
            case GameName::kFganB: {
                if (qx > 0.0) {
                    d = 2.0 * (px / qx - 1.0);
                    contrib = (px - qx) * (px - qx) / qx;
                } else if (px > 0.0) {
                    d = kInf;  // payoff p*d is unbounded above
                    contrib = kInf;
                }
                break;
            }
            case GameName::kFganC: {
                if (px > 0.0) {
                    d = 1.0 - std::sqrt(qx / px);
                } else {
                    d = (qx > 0.0) ? -kInf : 0.0;  // supremum approached, not attained
                }
                const double diff = std::sqrt(px) - std::sqrt(qx);
                contrib = diff * diff;
                break;
            }
        }
        out.d_star[x] = d;
        out.value += contrib;
        if (out.value == kInf) return out;
    }
    return out;
}

}  // namespace genlearn
