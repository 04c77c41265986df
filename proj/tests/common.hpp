#pragma once

// Shared helpers for the test suites: seeded random parameter draws and
// independent brute-force evaluators used as oracles. The oracle code paths
// deliberately re-derive entries from the defining sums instead of calling
// the library builders.

#include <random>

#include "qba/rmatrix.hpp"
#include "qba/tensor.hpp"

namespace qt {

using qba::Cplx;
using qba::Dims;
using qba::TensorOp;

inline std::mt19937_64 rng(unsigned seed) { return std::mt19937_64(seed); }

inline double rand_real(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

// Random complex number with modulus in [lo, hi] and arbitrary phase.
inline Cplx rand_cplx(std::mt19937_64& g, double lo = 0.5, double hi = 2.0) {
    double r = rand_real(g, lo, hi);
    double ph = rand_real(g, 0.0, 6.2831853071795864769);
    return Cplx(r * std::cos(ph), r * std::sin(ph));
}

// Random deformation parameter away from 0 and +-1.
inline Cplx rand_q(std::mt19937_64& g) {
    for (;;) {
        Cplx q = rand_cplx(g, 0.6, 1.8);
        if (std::abs(q - Cplx(1.0)) > 0.15 && std::abs(q + Cplx(1.0)) > 0.15 && std::abs(std::abs(q) - 1.0) > 0.02)
            return q;
    }
}

inline TensorOp rand_op(std::mt19937_64& g, const Dims& rd, const Dims& cd) {
    TensorOp t(rd, cd);
    for (long i = 0; i < t.rows(); ++i)
        for (long j = 0; j < t.cols(); ++j) t.mat(i, j) = rand_cplx(g, 0.0, 1.0);
    return t;
}

// --- independent entry evaluators -----------------------------------------

// Entry <i1 i2| R(u,v) |j1 j2> of the trigonometric R-matrix, evaluated
// directly from the defining sums (zero-based indices).
inline Cplx oracle_r_entry(const qba::DeformParams& p, Cplx u, Cplx v, int i1, int i2, int j1, int j2) {
    int N = 2 * p.n;
    auto bar = [N](int i) { return N - 1 - i; };
    Cplx q = p.q, qm = q - Cplx(1.0) / q;
    Cplx acc(0.0);
    // constant part
    if (i1 == j1 && i2 == j2) {
        int d1 = (i1 == i2) ? 1 : 0;
        int d2 = (i1 == bar(i2)) ? 1 : 0;
        acc += qba::qpow(q, d1 - d2);
    }
    if (i1 < j1 && j1 == i2 && i1 == j2) acc += qm;  // e_{i1 j1} (x) e_{j1 i1}
    if (i1 < j1 && i2 == bar(i1) && j2 == bar(j1))
        acc -= qm * qba::qpow(q, p.nu[i1] - p.nu[j1]) * Cplx(p.theta_sign[i1] * p.theta_sign[j1]);
    // permutation part
    if (i1 == j2 && i2 == j1) acc += qm / (v / u - Cplx(1.0));
    // Q part
    if (i2 == bar(i1) && j2 == bar(j1))
        acc -= qm / (qba::qpow(q, 2 * p.kappa) * v / u - Cplx(1.0)) * qba::qpow(q, p.nu[i1] - p.nu[j1]) *
               Cplx(p.theta_sign[i1] * p.theta_sign[j1]);
    return acc;
}

inline TensorOp oracle_r(const qba::DeformParams& p, Cplx u, Cplx v) {
    int N = 2 * p.n;
    TensorOp t(Dims{N, N}, Dims{N, N});
    for (int i1 = 0; i1 < N; ++i1)
        for (int i2 = 0; i2 < N; ++i2)
            for (int j1 = 0; j1 < N; ++j1)
                for (int j2 = 0; j2 < N; ++j2)
                    t.mat(static_cast<long>(i1) * N + i2, static_cast<long>(j1) * N + j2) =
                        oracle_r_entry(p, u, v, i1, i2, j1, j2);
    return t;
}

// Entry of the reduced constant operator R^{(k,l)}_q from the defining sum
// (one-based summation translated to zero-based storage).
inline TensorOp oracle_reduced_rq(const qba::DeformParams& p, int k, int l) {
    int mk = p.n - k + 1, ml = p.n - l + 1, sh = k - l;
    Cplx q = p.q, qm = q - Cplx(1.0) / q;
    TensorOp t(Dims{mk, ml}, Dims{mk, ml});
    for (int i = 0; i < mk; ++i)
        for (int j = 0; j < ml; ++j)
            t.mat(static_cast<long>(i) * ml + j, static_cast<long>(i) * ml + j) +=
                qba::qpow(q, (i + sh == j) ? 1 : 0);
    for (int i = 0; i < mk; ++i)
        for (int j = i + 1; j < mk; ++j)
            t.mat(static_cast<long>(i) * ml + (j + sh), static_cast<long>(j) * ml + (i + sh)) += qm;
    return t;
}

inline double rel(double x, double scale) { return x / std::max(1.0, scale); }

}  // namespace qt
