#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

namespace isle {

using cplx = std::complex<double>;

// Complete elliptic integral K(k) by the arithmetic-geometric mean.
double elliptic_K(double k);

// Jacobi elliptic functions sn, cn, dn of real argument, modulus k in [0,1).
struct JacobiSCD {
    double sn, cn, dn;
};
JacobiSCD jacobi_scd(double u, double k);

// sn(u + i v, k) via the addition formula with the complementary modulus.
cplx jacobi_sn(cplx z, double k);
// d/dz sn(z,k) = cn(z,k) dn(z,k)
cplx jacobi_sn_deriv(cplx z, double k);

// Conformal map of an axis-aligned rectangle (0,w) x (0,h) onto the upper
// half-plane H, with bottom-left -> -1, bottom-right -> +1, top corners
// -> +-1/k.  The modulus is fixed by K'(k)/K(k) = 2h/w.
class RectToHalfPlane {
public:
    RectToHalfPlane(double width, double height);

    cplx map(cplx z) const;   // z in the closed rectangle
    cplx deriv(cplx z) const; // complex derivative of the map

    double modulus() const { return k_; }
    double quarter_period() const { return K_; }

private:
    double w_, h_, k_, K_;
};

} // namespace isle
