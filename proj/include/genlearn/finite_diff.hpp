#pragma once

#include <stdexcept>

#include "genlearn/matrix.hpp"

namespace genlearn {

/// Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / (2h).
template <class F>
Vec finite_diff_grad(F&& f, const Vec& x, double h = 1e-5) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
    Vec g(x.size());
    Vec probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        probe[i] = xi + h;
        const double fp = f(probe);
        probe[i] = xi - h;
        const double fm = f(probe);
        probe[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace genlearn
