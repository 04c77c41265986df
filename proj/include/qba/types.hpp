#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qba {

using Cplx = std::complex<double>;

// Default relative tolerance for identity checks. Identities are exact;
// the slack only absorbs floating-point rounding.
inline constexpr double identity_tol = 1e-10;

// A coefficient denominator smaller than this (relative to scale) is
// treated as a pole hit and aborts the evaluation.
inline constexpr double pole_guard = 1e-12;

struct SingularParameter : std::runtime_error {
    explicit SingularParameter(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

struct InvalidConfig : std::runtime_error {
    explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};

// q^k for integer k, exact repeated multiplication.
inline Cplx qpow(Cplx q, long k) {
    if (k < 0) return Cplx(1.0) / qpow(q, -k);
    Cplx r(1.0), b = q;
    unsigned long e = static_cast<unsigned long>(k);
    while (e) {
        if (e & 1ul) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

// num/den with a pole guard: |den| must not be negligible relative to the
// larger of 1 and |num|.
inline Cplx guarded_div(Cplx num, Cplx den, const char* where) {
    double scale = std::max(1.0, std::abs(num));
    if (std::abs(den) < pole_guard * scale)
        throw SingularParameter(std::string("singular parameter in ") + where);
    return num / den;
}

}  // namespace qba
