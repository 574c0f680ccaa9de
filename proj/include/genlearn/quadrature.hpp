#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>

namespace genlearn {

/// Composite Simpson rule with n subintervals (rounded up to even, min 16).
template <class F>
double quad_1d(F&& f, double lo, double hi, std::size_t n = 1024) {
    if (!(lo < hi)) throw std::invalid_argument("quad_1d: requires lo < hi");
    if (n < 16) n = 16;
    if (n % 2 != 0) ++n;
    const double h = (hi - lo) / static_cast<double>(n);
    double s = f(lo) + f(hi);
    for (std::size_t i = 1; i < n; ++i) {
        const double x = lo + h * static_cast<double>(i);
        s += f(x) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    return s * h / 3.0;
}

/// Tensor-product Simpson rule on [lox,hix] x [loy,hiy].
template <class F>
double quad_2d(F&& f, double lox, double hix, double loy, double hiy, std::size_t nx = 256,
               std::size_t ny = 256) {
    if (!(lox < hix) || !(loy < hiy)) throw std::invalid_argument("quad_2d: requires lo < hi");
    if (nx < 16) nx = 16;
    if (ny < 16) ny = 16;
    if (nx % 2 != 0) ++nx;
    if (ny % 2 != 0) ++ny;
    const double hx = (hix - lox) / static_cast<double>(nx);
    const double hy = (hiy - loy) / static_cast<double>(ny);
    auto wt = [](std::size_t i, std::size_t n) {
        if (i == 0 || i == n) return 1.0;
        return (i % 2 == 1) ? 4.0 : 2.0;
    };
    double s = 0.0;
    for (std::size_t i = 0; i <= nx; ++i) {
        const double x = lox + hx * static_cast<double>(i);
        double row = 0.0;
        for (std::size_t j = 0; j <= ny; ++j) {
            const double y = loy + hy * static_cast<double>(j);
            row += wt(j, ny) * f(x, y);
        }
        s += wt(i, nx) * row;
    }
    return s * hx * hy / 9.0;
}

}  // namespace genlearn
