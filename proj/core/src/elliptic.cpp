#include "isle/elliptic.hpp"

#include <vector>

namespace isle {

double elliptic_K(double k) {
    if (!(k >= 0.0 && k < 1.0)) throw std::domain_error("elliptic_K: modulus outside [0,1)");
    double a = 1.0, b = std::sqrt(1.0 - k * k);
    while (std::abs(a - b) > 1e-16 * a) {
        const double an = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = an;
    }
    return M_PI / (2.0 * a);
}

// Descending Landen transformation.  Classic algorithm (Abramowitz & Stegun
// 16.12); accurate to ~1e-15 away from k=1.
JacobiSCD jacobi_scd(double u, double k) {
    if (k < 1e-14) return {std::sin(u), std::cos(u), 1.0};
    if (k > 1.0 - 1e-14) {
        const double t = std::tanh(u);
        return {t, 1.0 / std::cosh(u), 1.0 / std::cosh(u)};
    }
    std::vector<double> ks;
    double kk = k;
    while (kk > 1e-15) {
        const double kp = std::sqrt(1.0 - kk * kk);
        const double k1 = (1.0 - kp) / (1.0 + kp);
        ks.push_back(k1);
        kk = k1;
        if (ks.size() > 64) break;
    }
    // scale argument down the ladder
    double factor = 1.0;
    for (double k1 : ks) factor *= 1.0 / (1.0 + k1);
    double phi = u * factor; // sn ~ sin at the bottom (k -> 0)
    double sn = std::sin(phi), cn = std::cos(phi), dn = 1.0;
    // ascend
    for (auto it = ks.rbegin(); it != ks.rend(); ++it) {
        const double k1 = *it;
        const double denom = 1.0 + k1 * sn * sn;
        const double sn_new = (1.0 + k1) * sn / denom;
        // cn, dn recovered from sn via the ascending relations
        const double cn_new = cn * dn / denom;
        const double dn_new = (1.0 - k1 * sn * sn) / denom;
        sn = sn_new;
        cn = cn_new;
        dn = dn_new;
    }
    // at the top of the ladder dn carries modulus k
    return {sn, cn, dn};
}

cplx jacobi_sn(cplx z, double k) {
    const double kp = std::sqrt(1.0 - k * k);
    const JacobiSCD re = jacobi_scd(z.real(), k);
    const JacobiSCD im = jacobi_scd(z.imag(), kp);
    const double denom = im.cn * im.cn + k * k * re.sn * re.sn * im.sn * im.sn;
    const double x = re.sn * im.dn / denom;
    const double y = re.cn * re.dn * im.sn * im.cn / denom;
    return {x, y};
}

cplx jacobi_sn_deriv(cplx z, double k) {
    // cn(z) dn(z) via the same addition formulas
    const double kp = std::sqrt(1.0 - k * k);
    const JacobiSCD re = jacobi_scd(z.real(), k);
    const JacobiSCD im = jacobi_scd(z.imag(), kp);
    const double denom = im.cn * im.cn + k * k * re.sn * re.sn * im.sn * im.sn;
    const cplx cn((re.cn * im.cn) / denom, -(re.sn * re.dn * im.sn * im.dn) / denom);
    const cplx dn((re.dn * im.cn * im.dn) / denom,
                  -(k * k * re.sn * re.cn * im.sn) / denom);
    return cn * dn;
}

RectToHalfPlane::RectToHalfPlane(double width, double height) : w_(width), h_(height) {
    if (!(width > 0.0 && height > 0.0))
        throw std::domain_error("RectToHalfPlane: degenerate rectangle");
    // solve K'(k)/K(k) = 2h/w by bisection in k
    const double target = 2.0 * height / width;
    double lo = 1e-12, hi = 1.0 - 1e-12;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double ratio = elliptic_K(std::sqrt(1.0 - mid * mid)) / elliptic_K(mid);
        // ratio decreases in k
        if (ratio > target)
            lo = mid;
        else
            hi = mid;
    }
    k_ = 0.5 * (lo + hi);
    K_ = elliptic_K(k_);
}

cplx RectToHalfPlane::map(cplx z) const {
    const cplx zeta = (2.0 * K_ / w_) * (z - cplx(0.5 * w_, 0.0));
    return jacobi_sn(zeta, k_);
}

cplx RectToHalfPlane::deriv(cplx z) const {
    const cplx zeta = (2.0 * K_ / w_) * (z - cplx(0.5 * w_, 0.0));
    return (2.0 * K_ / w_) * jacobi_sn_deriv(zeta, k_);
}

} // namespace isle
