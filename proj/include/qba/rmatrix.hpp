#pragma once

#include <vector>

#include "qba/linalg.hpp"
#include "qba/tensor.hpp"

namespace qba {

// Deformation data shared by every R-matrix builder. theta = -1 selects the
// symplectic family, theta = +1 the orthogonal one.
struct DeformParams {
    int n = 1;
    int theta = -1;
    Cplx q{0.0, 0.0};
    int kappa = 0;        // n - theta
    int theta_prime = 0;  // (theta + 1) / 2
    std::vector<int> nu;          // 2n signed integers, nu[bar(i)] = -nu[i]
    std::vector<int> theta_sign;  // per-index sign theta_i

    int N() const { return 2 * n; }
    int bar(int i0) const { return 2 * n - 1 - i0; }  // zero-based index reflection
    Cplx qp(long k) const { return qpow(q, k); }

    DeformParams with_q_inverted() const {
        DeformParams p = *this;
        p.q = Cplx(1.0) / q;
        return p;
    }
};

inline DeformParams make_deform(int n, int theta, Cplx q) {
    if (n < 1) throw InvalidConfig("rank n must be positive");
    if (theta != 1 && theta != -1) throw InvalidConfig("theta must be +1 or -1");
    double eps = 1e-8;
    if (std::abs(q) < eps || std::abs(q - Cplx(1.0)) < eps || std::abs(q + Cplx(1.0)) < eps)
        throw InvalidConfig("q must satisfy q != 0 and q != +1, -1");
    DeformParams p;
    p.n = n;
    p.theta = theta;
    p.q = q;
    p.kappa = n - theta;
    p.theta_prime = (theta + 1) / 2;
    p.nu.resize(2 * n);
    for (int i = 1; i <= n; ++i) p.nu[i - 1] = i - 1 - n + p.theta_prime;
    for (int j = 1; j <= n; ++j) p.nu[n + j - 1] = j - p.theta_prime;
    p.theta_sign.assign(2 * n, 1);
    if (theta == -1)
        for (int i = 0; i < n; ++i) p.theta_sign[i] = -1;
    return p;
}

namespace detail {
inline TensorOp unit2(int d1, int d2, int r1, int c1, int r2, int c2) {
    TensorOp t(Dims{d1, d2}, Dims{d1, d2});
    t.mat(static_cast<long>(r1) * d2 + r2, static_cast<long>(c1) * d2 + c2) = 1.0;
    return t;
}
}  // namespace detail

struct BasicTriple {
    TensorOp rq, p, qq;
};

// Constant matrices on C^{2n} (x) C^{2n}: the braid-limit R_q, the
// permutation P, and the rank-structured Q_q.
inline BasicTriple build_basic(const DeformParams& p) {
    int N = p.N();
    Cplx qm = p.q - Cplx(1.0) / p.q;
    TensorOp rq(Dims{N, N}, Dims{N, N});
    TensorOp perm(Dims{N, N}, Dims{N, N});
    TensorOp qq(Dims{N, N}, Dims{N, N});
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            int dij = (i == j) ? 1 : 0;
            int dibj = (i == p.bar(j)) ? 1 : 0;
            rq.mat(static_cast<long>(i) * N + j, static_cast<long>(i) * N + j) += p.qp(dij - dibj);
            perm.mat(static_cast<long>(i) * N + j, static_cast<long>(j) * N + i) = 1.0;
            Cplx w = p.qp(p.nu[i] - p.nu[j]) * Cplx(p.theta_sign[i] * p.theta_sign[j]);
            // Q_q entry: (e_ij (x) e_{bar i, bar j})
            qq.mat(static_cast<long>(i) * N + p.bar(i), static_cast<long>(j) * N + p.bar(j)) += w;
        }
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j) {
            // (q - 1/q) * (e_ij (x) e_ji - q^{nu_i - nu_j} theta_ij e_ij (x) e_{bar i, bar j})
            rq.mat(static_cast<long>(i) * N + j, static_cast<long>(j) * N + i) += qm;
            Cplx w = p.qp(p.nu[i] - p.nu[j]) * Cplx(p.theta_sign[i] * p.theta_sign[j]);
            rq.mat(static_cast<long>(i) * N + p.bar(i), static_cast<long>(j) * N + p.bar(j)) -= qm * w;
        }
    return {std::move(rq), std::move(perm), std::move(qq)};
}

// Trigonometric R-matrix on C^{2n} (x) C^{2n}.
inline TensorOp build_r(const DeformParams& p, Cplx u, Cplx v) {
    if (std::abs(u) < pole_guard) throw SingularParameter("R(u,v): u = 0");
    auto b = build_basic(p);
    Cplx qm = p.q - Cplx(1.0) / p.q;
    Cplx x = v / u;
    Cplx cp = guarded_div(qm, x - Cplx(1.0), "R(u,v) permutation coefficient");
    Cplx cq = guarded_div(qm, p.qp(2 * p.kappa) * x - Cplx(1.0), "R(u,v) Q coefficient");
    return b.rq + cp * b.p - cq * b.qq;
}

struct ReducedTriple {
    TensorOp rq, p, qq;
};

// Reduced constant operators on C^{n-k+1} (x) C^{n-l+1}, defined for l <= k.
// Index shifts: the k-space index i sits at original position i + k - 1, so
// pairings against the l-space use i' = i + k - l.
inline ReducedTriple build_reduced(const DeformParams& p, int k, int l) {
    if (l < 1 || k < l || k > p.n) throw InvalidConfig("build_reduced: need 1 <= l <= k <= n");
    int mk = p.n - k + 1, ml = p.n - l + 1;
    int shift = k - l;
    Cplx qm = p.q - Cplx(1.0) / p.q;
    TensorOp rq(Dims{mk, ml}, Dims{mk, ml});
    TensorOp perm(Dims{mk, ml}, Dims{mk, ml});
    TensorOp qq(Dims{mk, ml}, Dims{mk, ml});
    for (int i = 0; i < mk; ++i)
        for (int j = 0; j < ml; ++j) {
            int d = (i + shift == j) ? 1 : 0;
            rq.mat(static_cast<long>(i) * ml + j, static_cast<long>(i) * ml + j) += p.qp(d);
        }
    for (int i = 0; i < mk; ++i)
        for (int j = 0; j < mk; ++j) {
            int ip = i + shift, jp = j + shift;  // indices in the l-space
            perm.mat(static_cast<long>(i) * ml + jp, static_cast<long>(j) * ml + ip) += 1.0;
            if (i < j) rq.mat(static_cast<long>(i) * ml + jp, static_cast<long>(j) * ml + ip) += qm;
            int bi = mk - 1 - i, bj = mk - 1 - j;  // reflection within the k-space range
            qq.mat(static_cast<long>(i) * ml + bi, static_cast<long>(j) * ml + bj) += p.qp(i - j);
        }
    return {std::move(rq), std::move(perm), std::move(qq)};
}

// Applies the reduced bar transposition  e_ij -> q^{j-i} e_{bar j, bar i}
// to one leg (of dimension n - l + 1) of an operator.
inline TensorOp transpose_omega_bar_reduced(const TensorOp& op, int leg, const DeformParams& p, int l) {
    int m = p.n - l + 1;
    if (op.row_dims[leg] != m || op.col_dims[leg] != m)
        throw DimensionError("omega_bar: leg dimension does not match reduced space");
    auto rstr = strides_of(op.row_dims);
    auto cstr = strides_of(op.col_dims);
    TensorOp out(op.row_dims, op.col_dims);
    Odometer orow(op.row_dims);
    for (long r = 0; r < op.rows(); ++r, orow.next()) {
        int a = orow.idx[leg];
        Odometer ocol(op.col_dims);
        for (long c = 0; c < op.cols(); ++c, ocol.next()) {
            Cplx z = op.mat(r, c);
            if (z == Cplx(0.0)) continue;
            int b = ocol.idx[leg];
            // e_ab on the leg maps to q^{b-a} e_{bar b, bar a}
            long nr = r + (static_cast<long>(m - 1 - b) - a) * rstr[leg];
            long nc = c + (static_cast<long>(m - 1 - a) - b) * cstr[leg];
            out.mat(nr, nc) += z * p.qp(b - a);
        }
    }
    return out;
}

// Inverse of the bar transposition: e_ij -> q^{i-j} e_{bar j, bar i}.
inline TensorOp transpose_omega_reduced(const TensorOp& op, int leg, const DeformParams& p, int l) {
    int m = p.n - l + 1;
    if (op.row_dims[leg] != m || op.col_dims[leg] != m)
        throw DimensionError("omega: leg dimension does not match reduced space");
    auto rstr = strides_of(op.row_dims);
    auto cstr = strides_of(op.col_dims);
    TensorOp out(op.row_dims, op.col_dims);
    Odometer orow(op.row_dims);
    for (long r = 0; r < op.rows(); ++r, orow.next()) {
        int a = orow.idx[leg];
        Odometer ocol(op.col_dims);
        for (long c = 0; c < op.cols(); ++c, ocol.next()) {
            Cplx z = op.mat(r, c);
            if (z == Cplx(0.0)) continue;
            int b = ocol.idx[leg];
            long nr = r + (static_cast<long>(m - 1 - b) - a) * rstr[leg];
            long nc = c + (static_cast<long>(m - 1 - a) - b) * cstr[leg];
            out.mat(nr, nc) += z * p.qp(a - b);
        }
    }
    return out;
}

// Full weighted transposition on a C^{2n} leg:
// e_ij -> theta_ij q^{nu_i - nu_j} e_{bar j, bar i}.
inline TensorOp transpose_omega_full(const TensorOp& op, int leg, const DeformParams& p) {
    int N = p.N();
    if (op.row_dims[leg] != N || op.col_dims[leg] != N)
        throw DimensionError("omega_full: leg dimension mismatch");
    auto rstr = strides_of(op.row_dims);
    auto cstr = strides_of(op.col_dims);
    TensorOp out(op.row_dims, op.col_dims);
    Odometer orow(op.row_dims);
    for (long r = 0; r < op.rows(); ++r, orow.next()) {
        int a = orow.idx[leg];
        Odometer ocol(op.col_dims);
        for (long c = 0; c < op.cols(); ++c, ocol.next()) {
            Cplx z = op.mat(r, c);
            if (z == Cplx(0.0)) continue;
            int b = ocol.idx[leg];
            Cplx w = p.qp(p.nu[a] - p.nu[b]) * Cplx(p.theta_sign[a] * p.theta_sign[b]);
            long nr = r + (static_cast<long>(N - 1 - b) - a) * rstr[leg];
            long nc = c + (static_cast<long>(N - 1 - a) - b) * cstr[leg];
            out.mat(nr, nc) += z * w;
        }
    }
    return out;
}

// Plain reflection transposition on a C^{2n} leg: e_ij -> e_{bar j, bar i}.
inline TensorOp transpose_t_plain(const TensorOp& op, int leg) {
    int N = op.row_dims[leg];
    if (op.col_dims[leg] != N) throw DimensionError("t_plain: leg not square");
    auto rstr = strides_of(op.row_dims);
    auto cstr = strides_of(op.col_dims);
    TensorOp out(op.row_dims, op.col_dims);
    Odometer orow(op.row_dims);
    for (long r = 0; r < op.rows(); ++r, orow.next()) {
        int a = orow.idx[leg];
        Odometer ocol(op.col_dims);
        for (long c = 0; c < op.cols(); ++c, ocol.next()) {
            Cplx z = op.mat(r, c);
            if (z == Cplx(0.0)) continue;
            int b = ocol.idx[leg];
            long nr = r + (static_cast<long>(N - 1 - b) - a) * rstr[leg];
            long nc = c + (static_cast<long>(N - 1 - a) - b) * cstr[leg];
            out.mat(nr, nc) += z;
        }
    }
    return out;
}

// Reduced R-matrix R^{(k,l)}(u,v) = R^{(k,l)}_q + (q - 1/q)/(v/u - 1) P^{(k,l)}.
inline TensorOp build_r_reduced(const DeformParams& p, int k, int l, Cplx u, Cplx v) {
    if (std::abs(u) < pole_guard) throw SingularParameter("reduced R: u = 0");
    auto t = build_reduced(p, k, l);
    Cplx qm = p.q - Cplx(1.0) / p.q;
    Cplx cp = guarded_div(qm, v / u - Cplx(1.0), "reduced R coefficient");
    return t.rq + cp * t.p;
}

// K^{(k,l)}(u,v): bar-transposition (second leg) of the q-inverted reduced R.
inline TensorOp build_k_reduced(const DeformParams& p, int k, int l, Cplx u, Cplx v) {
    TensorOp r = build_r_reduced(p.with_q_inverted(), k, l, u, v);
    return transpose_omega_bar_reduced(r, 1, p, l);
}

// U^{(k,k)}(u,v), the off-diagonal block of the six-vertex decomposition.
inline TensorOp build_u_block(const DeformParams& p, int k, Cplx u, Cplx v) {
    if (std::abs(v) < pole_guard) throw SingularParameter("U block: v = 0");
    auto t = build_reduced(p, k, k);
    Cplx qm = p.q - Cplx(1.0) / p.q;
    int kp = p.kappa - k + 1;
    Cplx c1 = guarded_div(qm, u / v - Cplx(1.0), "U block permutation coefficient");
    Cplx c2 = guarded_div(Cplx(p.theta) * qm, p.qp(-kp) * u / v - p.qp(kp), "U block Q coefficient");
    return (-c1) * t.p + c2 * t.qq;
}

// Ubar^{(k,k)}(v,u) = P U^{(k,k)}_{1/q}(v,u) P.
inline TensorOp build_ubar_block(const DeformParams& p, int k, Cplx v, Cplx u) {
    auto t = build_reduced(p, k, k);
    TensorOp inner = build_u_block(p.with_q_inverted(), k, v, u);
    return t.p * inner * t.p;
}

// Triangular elementary operators on C^{n-l+1} and their rational combination.
struct EOps {
    int m = 0;  // space dimension
    std::vector<TensorOp> plus;   // indexed (i,j) flattened as i*m + j
    std::vector<TensorOp> minus;  // same layout

    const TensorOp& ep(int i, int j) const { return plus[static_cast<size_t>(i) * m + j]; }
    const TensorOp& em(int i, int j) const { return minus[static_cast<size_t>(i) * m + j]; }
};

inline EOps build_e_ops(const DeformParams& p, int l) {
    int m = p.n - l + 1;
    Cplx qm = p.q - Cplx(1.0) / p.q;
    EOps out;
    out.m = m;
    out.plus.assign(static_cast<size_t>(m) * m, TensorOp(Dims{m}, Dims{m}));
    out.minus.assign(static_cast<size_t>(m) * m, TensorOp(Dims{m}, Dims{m}));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            TensorOp& ep = out.plus[static_cast<size_t>(i) * m + j];
            TensorOp& em = out.minus[static_cast<size_t>(i) * m + j];
            if (i == j) {
                for (int t = 0; t < m; ++t) {
                    ep.mat(t, t) = p.qp(t == i ? -1 : 0);
                    em.mat(t, t) = p.qp(t == i ? 1 : 0);
                }
            } else if (i < j) {
                ep.mat(i, j) = -qm;
            } else {  // i > j
                em.mat(i, j) = qm;
            }
        }
    return out;
}

// E^{(l)}_{ij}(u) = E^+_{ij}/(1-u) + E^-_{ij}/(1-1/u).
inline TensorOp e_op_at(const EOps& e, int i, int j, Cplx u) {
    Cplx cp = guarded_div(Cplx(1.0), Cplx(1.0) - u, "E(u) pole at u = 1");
    Cplx cm = guarded_div(Cplx(1.0), Cplx(1.0) - Cplx(1.0) / u, "E(u) pole at u = 1");
    return cp * e.ep(i, j) + cm * e.em(i, j);
}

// Six-vertex block structure of the full R-matrix under C^{2n} = C^2 (x) C^n.
struct SixVertexBlocks {
    TensorOp r_block;     // (1,1)-(1,1) block, acts on C^n (x) C^n
    TensorOp k_block;     // (1,2)-(1,2) and (2,1)-(2,1) block
    TensorOp u_block;     // (1,2)-(2,1) block
    TensorOp ubar_block;  // (2,1)-(1,2) block
    double max_offpattern = 0.0;  // largest entry outside the displayed pattern
    double k_mismatch = 0.0;      // deviation between the two K positions
};

inline SixVertexBlocks block_decompose(const TensorOp& r, const DeformParams& p) {
    int n = p.n, N = p.N();
    if (r.row_dims != Dims{N, N}) throw DimensionError("block_decompose: expected two C^{2n} legs");
    // Reinterpret each 2n leg as (2, n) and sort the C^2 legs to the front.
    TensorOp split(Dims{2, n, 2, n}, Dims{2, n, 2, n}, r.mat);
    TensorOp sorted = permute_legs(split, {0, 2, 1, 3});
    long nn = static_cast<long>(n) * n;
    auto blk = [&](int a, int b, int c, int d) {
        // rows with C^2 indices (a,b), cols with (c,d)
        Matrix m(nn, nn);
        long roff = (static_cast<long>(a) * 2 + b) * nn;
        long coff = (static_cast<long>(c) * 2 + d) * nn;
        m = sorted.mat.block(roff, coff, nn, nn);
        return TensorOp(Dims{n, n}, Dims{n, n}, m);
    };
    SixVertexBlocks out;
    out.r_block = blk(0, 0, 0, 0);
    out.k_block = blk(0, 1, 0, 1);
    TensorOp k2 = blk(1, 0, 1, 0);
    out.u_block = blk(0, 1, 1, 0);
    out.ubar_block = blk(1, 0, 0, 1);
    out.k_mismatch = rel_defect(out.k_block, k2);
    TensorOp bottom = blk(1, 1, 1, 1);
    out.max_offpattern = rel_defect(out.r_block, bottom);
    // every block outside the six-vertex pattern must vanish
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) {
                    bool on = (a == c && b == d) || (a == 0 && b == 1 && c == 1 && d == 0) ||
                              (a == 1 && b == 0 && c == 0 && d == 1);
                    if (!on) out.max_offpattern = std::max(out.max_offpattern, blk(a, b, c, d).mat.norm());
                }
    return out;
}

}  // namespace qba
