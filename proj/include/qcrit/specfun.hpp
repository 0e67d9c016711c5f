#pragma once

#include <cmath>
#include <limits>

#include "qcrit/common.hpp"

namespace qcrit {

namespace detail {

// Smallest-term truncation of the divergent large-z expansion
// U(-1/2,0,z) ~ sqrt(z) * sum_k (-1/2)_k (1/2)_k / (k! (-z)^k).
inline double tricomi_u_asymptotic(double z) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 40; ++k) {
        const double next = term * (k - 0.5) * (k + 0.5) / ((k + 1) * (-z));
        if (std::abs(next) >= std::abs(term)) break;  // series started diverging
        sum += next;
        term = next;
        if (std::abs(next) < 1e-17 * std::abs(sum)) break;
    }
    return std::sqrt(z) * sum;
}

}  // namespace detail

// Tricomi confluent hypergeometric U(a,b,z), restricted to the branch
// a = -1/2, b = 0, z >= 0 used by the quartic-fluctuation averages.
// Identity used for moderate z:
//   U(-1/2,0,z) = z/(2*sqrt(pi)) * exp(z/2) * (K0(z/2) + K1(z/2))
// with U(-1/2,0,0) = 1/sqrt(pi) and U -> sqrt(z) as z -> inf.
inline double tricomi_u(double a, double b, double z) {
    require(a == -0.5 && b == 0.0, "tricomi_u implemented only for a=-1/2, b=0");
    require(std::isfinite(z) && z >= 0.0, "tricomi_u requires finite z >= 0");
    constexpr double inv_sqrt_pi = 0.5641895835477562869;
    if (z < 1e-12) return inv_sqrt_pi;  // K1 pole cancels; limit is exact here
    if (z >= 30.0) return detail::tricomi_u_asymptotic(z);
    const double h = 0.5 * z;
    const double k0 = std::cyl_bessel_k(0.0, h);
    const double k1 = std::cyl_bessel_k(1.0, h);
    return z * (0.5 * inv_sqrt_pi) * std::exp(h) * (k0 + k1);
}

struct JacobiTriple {
    double sn = 0.0;
    double cn = 1.0;
    double dn = 1.0;
};

namespace detail {

// Descending Landen / arithmetic-geometric-mean evaluation, 0 <= m < 1.
inline JacobiTriple jacobi_agm(double u, double m) {
    if (m < 1e-14) {
        // sn = sin u + O(m); below double resolution of the AGM ladder.
        return {std::sin(u), std::cos(u), std::sqrt(1.0 - m * std::sin(u) * std::sin(u))};
    }
    double a[32], c[32];
    double an = 1.0, bn = std::sqrt(1.0 - m), cn = std::sqrt(m);
    int n = 0;
    a[0] = an;
    c[0] = cn;
    while (n < 31 && std::abs(cn) > 1e-17 * an) {
        const double a_next = 0.5 * (an + bn);
        const double b_next = std::sqrt(an * bn);
        cn = 0.5 * (an - bn);
        an = a_next;
        bn = b_next;
        ++n;
        a[n] = an;
        c[n] = cn;
    }
    // Reduce by the real period 4K, K = pi / (2 * AGM(1, sqrt(1-m))).
    const double quarter_k = 0.5 * M_PI / an;
    double ur = std::fmod(u, 4.0 * quarter_k);
    double phi = std::ldexp(1.0, n) * an * ur;
    for (int i = n; i >= 1; --i) {
        const double s = std::sin(phi);
        double arg = c[i] / a[i] * s;
        if (arg > 1.0) arg = 1.0;
        if (arg < -1.0) arg = -1.0;
        phi = 0.5 * (phi + std::asin(arg));
    }
    JacobiTriple out;
    out.sn = std::sin(phi);
    out.cn = std::cos(phi);
    out.dn = std::sqrt(std::max(0.0, 1.0 - m * out.sn * out.sn));
    return out;
}

}  // namespace detail

// Jacobi elliptic sn/cn/dn with parameter m (the modulus squared), m <= 1.
// Negative m is mapped onto the canonical interval via
//   sn(u | -mu) = sn(v | m1) / (sqrt(1+mu) * dn(v | m1)),
//   cn(u | -mu) = cn(v | m1) / dn(v | m1),
//   dn(u | -mu) = 1 / dn(v | m1),
// with m1 = mu/(1+mu) and v = u*sqrt(1+mu).
inline JacobiTriple jacobi_elliptic(double u, double m) {
    require(std::isfinite(u) && std::isfinite(m) && m <= 1.0,
            "jacobi_elliptic requires finite u and m <= 1");
    if (m >= 1.0 - 1e-14) {
        const double t = std::tanh(u);
        const double s = 1.0 / std::cosh(u);
        return {t, s, s};
    }
    if (m >= 0.0) return detail::jacobi_agm(u, m);
    const double mu = -m;
    const double scale = std::sqrt(1.0 + mu);
    const JacobiTriple t = detail::jacobi_agm(u * scale, mu / (1.0 + mu));
    require_numeric(t.dn > 0.0, "jacobi_elliptic: dn vanished in negative-m map");
    return {t.sn / (scale * t.dn), t.cn / t.dn, 1.0 / t.dn};
}

inline double jacobi_sn(double u, double m) { return jacobi_elliptic(u, m).sn; }

// Inverse error function. Polynomial seed refined by two Newton steps on erf,
// giving close to full double accuracy on (-1, 1).
inline double erf_inv(double y) {
    require(std::isfinite(y) && y > -1.0 && y < 1.0, "erf_inv requires y in (-1,1)");
    if (y == 0.0) return 0.0;
    double w = -std::log((1.0 - y) * (1.0 + y));
    double p;
    if (w < 5.0) {
        w -= 2.5;
        p = 2.81022636e-08;
        p = 3.43273939e-07 + p * w;
        p = -3.5233877e-06 + p * w;
        p = -4.39150654e-06 + p * w;
        p = 0.00021858087 + p * w;
        p = -0.00125372503 + p * w;
        p = -0.00417768164 + p * w;
        p = 0.246640727 + p * w;
        p = 1.50140941 + p * w;
    } else {
        w = std::sqrt(w) - 3.0;
        p = -0.000200214257;
        p = 0.000100950558 + p * w;
        p = 0.00134934322 + p * w;
        p = -0.00367342844 + p * w;
        p = 0.00573950773 + p * w;
        p = -0.0076224613 + p * w;
        p = 0.00943887047 + p * w;
        p = 1.00167406 + p * w;
        p = 2.83297682 + p * w;
    }
    double x = p * y;
    constexpr double half_sqrt_pi = 0.8862269254527580137;
    for (int it = 0; it < 2; ++it) {
        const double err = std::erf(x) - y;
        x -= err * half_sqrt_pi * std::exp(x * x);
    }
    return x;
}

// Standard normal draw via inverse transform, deterministic given the stream.
inline double normal_draw(SplitRng& rng) {
    double u = rng.uniform();
    // keep strictly inside (0,1) so erf_inv stays in-domain
    if (u <= 0.0) u = 0x1.0p-53;
    return std::sqrt(2.0) * erf_inv(2.0 * u - 1.0);
}

}  // namespace qcrit
