#pragma once

#include <cmath>
#include <stdexcept>

#include "genlearn/matrix.hpp"
#include "genlearn/rng.hpp"

namespace genlearn {

/// Finite probability vector over an indexed alphabet.
class Pmf {
  public:
    explicit Pmf(Vec probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw std::invalid_argument("Pmf: empty alphabet");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0)) throw std::invalid_argument("Pmf: negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("Pmf: entries must sum to 1");
    }

    static Pmf uniform(std::size_t n) {
        if (n == 0) throw std::invalid_argument("Pmf::uniform: empty alphabet");
        return Pmf(Vec(n, 1.0 / static_cast<double>(n)));
    }

    /// Clamp tiny negatives and renormalize; for building pmfs from arithmetic.
    static Pmf normalized(Vec raw) {
        double sum = 0.0;
        for (double& p : raw) {
            if (p < 0.0) {
                if (p < -1e-12) throw std::invalid_argument("Pmf::normalized: negative entry");
                p = 0.0;
            }
            sum += p;
        }
        if (!(sum > 0.0)) throw std::invalid_argument("Pmf::normalized: zero mass");
        for (double& p : raw) p /= sum;
        return Pmf(std::move(raw));
    }

    static Pmf random(Rng& rng, std::size_t n) {
        Vec raw(n);
        for (double& p : raw) p = -std::log(1.0 - rng.uniform());
        return normalized(std::move(raw));
    }

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    const Vec& probs() const { return probs_; }

  private:
    Vec probs_;
};

}  // namespace genlearn
