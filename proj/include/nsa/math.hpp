#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

// Deterministic replacements for the handful of libm functions the library
// depends on. libm results differ between platforms by a few ulp, which would
// break byte-identical dataset generation across machines. These use only
// correctly-rounded IEEE-754 arithmetic and exact operations (frexp, ldexp,
// floor), so the results are identical everywhere.

namespace nsa::detail {

inline double portable_log(double x) {
    if (std::isnan(x)) return x;
    if (x < 0.0) return std::numeric_limits<double>::quiet_NaN();
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    if (std::isinf(x)) return x;

    int e = 0;
    double m = std::frexp(x, &e);  // m in [0.5, 1)
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        e -= 1;
    }
    // log(m) = 2 atanh(z) with z = (m-1)/(m+1), |z| <= 0.1716
    const double z = (m - 1.0) / (m + 1.0);
    const double z2 = z * z;
    double p = 1.0 / 19.0;
    p = p * z2 + 1.0 / 17.0;
    p = p * z2 + 1.0 / 15.0;
    p = p * z2 + 1.0 / 13.0;
    p = p * z2 + 1.0 / 11.0;
    p = p * z2 + 1.0 / 9.0;
    p = p * z2 + 1.0 / 7.0;
    p = p * z2 + 1.0 / 5.0;
    p = p * z2 + 1.0 / 3.0;
    p = p * z2 + 1.0;
    const double r = 2.0 * z * p;
    // ln2 split so e*C1 is exact
    const double C1 = 0.693359375;
    const double C2 = -2.121944400546905827679e-4;
    return (e * C2 + r) + e * C1;
}

inline double portable_exp(double x) {
    if (std::isnan(x)) return x;
    if (x > 709.782712893384) return std::numeric_limits<double>::infinity();
    if (x < -745.133219101941) return 0.0;

    const double LOG2E = 1.4426950408889634074;
    const double k = std::floor(x * LOG2E + 0.5);
    const int n = static_cast<int>(k);
    const double C1 = 0.693145751953125;          // high bits of ln2, exact
    const double C2 = 1.42860682030941723212e-6;  // ln2 - C1
    const double r = (x - k * C1) - k * C2;       // |r| <= 0.3466

    double p = 1.0 / 6227020800.0;  // 1/13!
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    return std::ldexp(p, n);
}

namespace impl {

inline double sin_poly(double r) {
    const double r2 = r * r;
    double p = -1.0 / 1307674368000.0;  // -1/15!
    p = p * r2 + 1.0 / 6227020800.0;
    p = p * r2 - 1.0 / 39916800.0;
    p = p * r2 + 1.0 / 362880.0;
    p = p * r2 - 1.0 / 5040.0;
    p = p * r2 + 1.0 / 120.0;
    p = p * r2 - 1.0 / 6.0;
    return r + r * r2 * p;
}

inline double cos_poly(double r) {
    const double r2 = r * r;
    double p = 1.0 / 20922789888000.0;  // 1/16!
    p = p * r2 - 1.0 / 87178291200.0;
    p = p * r2 + 1.0 / 479001600.0;
    p = p * r2 - 1.0 / 3628800.0;
    p = p * r2 + 1.0 / 40320.0;
    p = p * r2 - 1.0 / 720.0;
    p = p * r2 + 1.0 / 24.0;
    p = p * r2 - 0.5;
    return 1.0 + r2 * p;
}

// Reduces x to r with |r| <= pi/4 and the quadrant index of x / (pi/2).
// Accurate for the ranges this library uses (|x| well below 1e6).
inline int sincos_reduce(double x, double& r) {
    const double TWO_OVER_PI = 0.63661977236758134308;
    const double k = std::floor(x * TWO_OVER_PI + 0.5);
    const double P1 = 1.57079632673412561417e0;
    const double P2 = 6.07710050650619224932e-11;
    const double P3 = 2.02226624879595063154e-21;
    r = ((x - k * P1) - k * P2) - k * P3;
    const long long ki = static_cast<long long>(k);
    return static_cast<int>(((ki % 4) + 4) % 4);
}

}  // namespace impl

inline double portable_sin(double x) {
    if (!std::isfinite(x)) return std::numeric_limits<double>::quiet_NaN();
    double r = 0.0;
    switch (impl::sincos_reduce(x, r)) {
        case 0: return impl::sin_poly(r);
        case 1: return impl::cos_poly(r);
        case 2: return -impl::sin_poly(r);
        default: return -impl::cos_poly(r);
    }
}

inline double portable_cos(double x) {
    if (!std::isfinite(x)) return std::numeric_limits<double>::quiet_NaN();
    double r = 0.0;
    switch (impl::sincos_reduce(x, r)) {
        case 0: return impl::cos_poly(r);
        case 1: return -impl::sin_poly(r);
        case 2: return -impl::cos_poly(r);
        default: return impl::sin_poly(r);
    }
}

}  // namespace nsa::detail
