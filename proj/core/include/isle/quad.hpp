#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

namespace isle {

// Adaptive Gauss-Kronrod 7-15 quadrature.  Endpoint singularities must be
// removed by substitution before calling (the callers in cft.cpp do so).
namespace detail {
// abscissa, Gauss weight, Kronrod weight (positive half; x=0 row first)
inline constexpr double gk_nodes[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529}};
} // namespace detail

template <class F>
double quad_gk15(const F& f, double a, double b, double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double y0 = f(c);
    double g7 = detail::gk_nodes[0][1] * y0;
    double k15 = detail::gk_nodes[0][2] * y0;
    for (int i = 1; i < 8; ++i) {
        const double dx = h * detail::gk_nodes[i][0];
        const double yi = f(c + dx) + f(c - dx);
        g7 += detail::gk_nodes[i][1] * yi;
        k15 += detail::gk_nodes[i][2] * yi;
    }
    g7 *= h;
    k15 *= h;
    err = std::abs(k15 - g7);
    return k15;
}

// Bisect panels until the summed Kronrod-Gauss discrepancy meets the target.
template <class F>
double quad_adaptive(const F& f, double a, double b, double abs_tol = 1e-13,
                     double rel_tol = 1e-12, int max_depth = 48) {
    struct Rec {
        static double go(const F& f, double a, double b, double tol, int depth, double whole,
                         double err) {
            if (err <= tol || depth <= 0) return whole;
            const double m = 0.5 * (a + b);
            double el, er;
            const double left = quad_gk15(f, a, m, el);
            const double right = quad_gk15(f, m, b, er);
            return go(f, a, m, 0.5 * tol, depth - 1, left, el) +
                   go(f, m, b, 0.5 * tol, depth - 1, right, er);
        }
    };
    double err;
    const double whole = quad_gk15(f, a, b, err);
    const double tol = std::max(abs_tol, rel_tol * std::abs(whole));
    return Rec::go(f, a, b, tol, max_depth, whole, err);
}

} // namespace isle
