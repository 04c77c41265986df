#pragma once

#include <vector>

#include "qba/chain.hpp"

namespace qba {

// Magnon numbers m_0..m_{n-1} and the per-level root lists.
struct MagnonConfig {
    std::vector<int> m;
    std::vector<std::vector<Cplx>> roots;

    int levels() const { return static_cast<int>(m.size()); }
    int total() const {
        int t = 0;
        for (int x : m) t += x;
        return t;
    }
};

inline MagnonConfig make_magnons(const ChainSpec& spec, std::vector<int> m,
                                 std::vector<std::vector<Cplx>> roots) {
    if (static_cast<int>(m.size()) != spec.p.n) throw InvalidConfig("need one magnon number per level");
    if (roots.size() != m.size()) throw InvalidConfig("need one root list per level");
    for (size_t k = 0; k < m.size(); ++k) {
        if (m[k] < 0) throw InvalidConfig("magnon numbers must be non-negative");
        if (static_cast<int>(roots[k].size()) != m[k]) throw InvalidConfig("root list length mismatch");
        for (int i = 0; i < m[k]; ++i) {
            if (std::abs(roots[k][i]) < pole_guard) throw InvalidConfig("roots must be nonzero");
            for (int j = i + 1; j < m[k]; ++j)
                if (std::abs(roots[k][i] - roots[k][j]) < 1e-8 * std::abs(roots[k][i]))
                    throw InvalidConfig("roots within a level must be distinct");
        }
    }
    MagnonConfig cfg{std::move(m), std::move(roots)};
    return cfg;
}

// Leg layout of the level-k quantum space: reduced chain legs, then the two
// groups of level-one auxiliary legs (dimension n each), then one group of
// legs of dimension n-l for each level l+1 up to k. All legs are kept at
// every level; higher-level operators act as the identity on legs their
// recursion does not touch.
struct LevelSpace {
    int k = 1;
    int n = 1;
    int chain_legs = 0;
    std::vector<int> m;
    Dims dims;

    int tl_leg(int i) const { return chain_legs + i; }
    int a_leg(int i) const { return chain_legs + m[0] + i; }
    int w_leg(int l, int i) const {  // l = 1..k-1, legs of dimension n - l
        int off = chain_legs + 2 * m[0];
        for (int t = 1; t < l; ++t) off += m[t];
        return off + i;
    }
};

inline LevelSpace level_space(const ChainSpec& spec, const MagnonConfig& cfg, int k) {
    if (k < 1 || k > spec.p.n) throw InvalidConfig("level out of range");
    LevelSpace ls;
    ls.k = k;
    ls.n = spec.p.n;
    ls.chain_legs = spec.total_legs();
    ls.m = cfg.m;
    ls.dims = spec.reduced_dims();
    for (int i = 0; i < cfg.m[0]; ++i) ls.dims.push_back(spec.p.n);
    for (int i = 0; i < cfg.m[0]; ++i) ls.dims.push_back(spec.p.n);
    for (int l = 1; l <= k - 1; ++l)
        for (int i = 0; i < cfg.m[l]; ++i) ls.dims.push_back(spec.p.n - l);
    return ls;
}

// Fusion-point singlet vectors. The recursion wraps new legs around the old
// ones: (first new leg, old legs, last new leg).
inline StateVec xi_vector(int n, int theta, Cplx q, int j) {
    if (j == 0) return StateVec::scalar_one();
    if (theta == -1) {  // symmetric reference state
        StateVec v = StateVec::unit(n, 0);
        for (int t = 1; t < 2 * j; ++t) v = kron(v, StateVec::unit(n, 0));
        return v;
    }
    StateVec v = kron(StateVec::unit(n, 0), StateVec::unit(n, 1));
    v.v -= q * kron(StateVec::unit(n, 1), StateVec::unit(n, 0)).v;
    for (int t = 2; t <= j; ++t) {
        StateVec a = kron(kron(StateVec::unit(n, 0), v), StateVec::unit(n, 1));
        StateVec b = kron(kron(StateVec::unit(n, 1), v), StateVec::unit(n, 0));
        v = a - q * b;
    }
    return v;
}

namespace detail {
// xi in the storage layout: first-group legs by label ascending, then the
// second group. The recursion emits the first group in reverse label order.
inline StateVec xi_stored(int n, int theta, Cplx q, int m0) {
    StateVec x = xi_vector(n, theta, q, m0);
    if (m0 <= 1) return x;
    std::vector<int> perm(2 * m0);
    for (int i = 0; i < m0; ++i) perm[i] = m0 - 1 - i;
    for (int i = 0; i < m0; ++i) perm[m0 + i] = m0 + i;
    return permute_legs(x, perm);
}
}  // namespace detail

// Level-k nested vacuum vector on the level_space(k) legs.
inline StateVec nested_vacuum(const ChainSpec& spec, const MagnonConfig& cfg, int k) {
    auto red = ambient_reduced(spec);
    StateVec v = kron(red.eta, detail::xi_stored(spec.p.n, spec.p.theta, spec.p.q, cfg.m[0]));
    for (int l = 1; l <= k - 1; ++l)
        for (int i = 0; i < cfg.m[l]; ++i) v = kron(v, StateVec::unit(spec.p.n - l, 0));
    return v;
}

// Drops the first row and column of the auxiliary (first) leg.
inline TensorOp reduce_aux(const TensorOp& op) {
    int d = op.row_dims[0];
    if (d < 2) throw DimensionError("reduce_aux: auxiliary leg has dimension < 2");
    if (op.col_dims[0] != d) throw DimensionError("reduce_aux: auxiliary leg not square");
    Dims rd = op.row_dims, cd = op.col_dims;
    rd[0] = d - 1;
    cd[0] = d - 1;
    long nr = dim_product(Dims(op.row_dims.begin() + 1, op.row_dims.end()));
    long nc = dim_product(Dims(op.col_dims.begin() + 1, op.col_dims.end()));
    TensorOp out(rd, cd);
    out.mat = op.mat.block(nr, nc, static_cast<long>(d - 1) * nr, static_cast<long>(d - 1) * nc);
    return out;
}

namespace detail {

struct NestedBuild {
    TensorOp a, d;
};

// Builds the level-k nested monodromies on (aux, level-k legs). Level one
// dresses the reduced sub-monodromies with chains over the level-one legs at
// the fusion-point shifts; each further level reduces the auxiliary space
// and appends a chain over its own group of legs. legs_level >= k selects a
// larger leg set on which the operator acts as the identity beyond level k.
inline NestedBuild build_nested(const ChainSpec& spec, const MagnonConfig& cfg, int k, Cplx v,
                                int legs_level = 0) {
    const auto& p = spec.p;
    auto ls = level_space(spec, cfg, legs_level > k ? legs_level : k);
    Dims all{p.n};
    all.insert(all.end(), ls.dims.begin(), ls.dims.end());
    int m0 = cfg.m[0];

    auto embed_chain_op = [&](const TensorOp& op) {
        std::vector<int> legs{0};
        for (int t = 0; t < ls.chain_legs; ++t) legs.push_back(1 + t);
        return embed(op, legs, all);
    };

    // chains multiply left to right: labels descending over the first group,
    // then ascending over the second, then the sub-monodromy
    TensorOp a = embed_chain_op(build_A1(spec, v));
    for (int i = m0 - 1; i >= 0; --i)
        a = embed(build_k_reduced(p, 1, 1, v, cfg.roots[0][i]), {0, 1 + ls.a_leg(i)}, all) * a;
    for (int i = 0; i < m0; ++i)
        a = embed(build_k_reduced(p, 1, 1, v, p.qp(2 * p.theta) * cfg.roots[0][i]), {0, 1 + ls.tl_leg(i)}, all) * a;

    TensorOp d = embed_chain_op(build_D1(spec, v));
    for (int i = m0 - 1; i >= 0; --i)
        d = d * embed(build_r_reduced(p, 1, 1, v, cfg.roots[0][i]), {0, 1 + ls.tl_leg(i)}, all);
    for (int i = 0; i < m0; ++i)
        d = d * embed(build_r_reduced(p, 1, 1, v, p.qp(-2 * p.theta) * cfg.roots[0][i]), {0, 1 + ls.a_leg(i)}, all);
    // The bar transposition inside the K-matrices reverses their natural
    // auxiliary grading: the corner that nests is the bottom-right one.
    // Flip the auxiliary basis so the shared reduction (drop the first
    // row/column) and the corner element conventions apply to both towers.
    {
        TensorOp flip({p.n}, {p.n});
        for (int i = 0; i < p.n; ++i) flip.mat(i, p.n - 1 - i) = 1.0;
        TensorOp fl = embed(flip, {0}, all);
        d = fl * d * fl;
    }

    for (int lev = 2; lev <= k; ++lev) {
        a = reduce_aux(a);
        d = reduce_aux(d);
        Dims cur = a.row_dims;
        int kp = p.kappa - lev + 1;
        int md = p.n - lev + 1;
        for (int i = 0; i < cfg.m[lev - 1]; ++i)
            a = a * embed(build_r_reduced(p, lev, lev, v, cfg.roots[lev - 1][i]), {0, 1 + ls.w_leg(lev - 1, i)}, cur);
        // The descending tower couples through bar-transposed matrices; in
        // the flipped auxiliary basis its chain factors are the K-matrices
        // at the kappa-shifted points, conjugated by the same reversal.
        TensorOp flip({md}, {md});
        for (int i = 0; i < md; ++i) flip.mat(i, md - 1 - i) = 1.0;
        TensorOp fid = kron(flip, TensorOp::identity({md}));
        TensorOp pre = TensorOp::identity(cur);
        for (int i = 0; i < cfg.m[lev - 1]; ++i) {
            TensorOp kk = build_k_reduced(p, lev, lev, v, p.qp(2 * kp) * cfg.roots[lev - 1][i]);
            pre = pre * embed(fid * kk * fid, {0, 1 + ls.w_leg(lev - 1, i)}, cur);
        }
        d = pre * d;
    }
    return {std::move(a), std::move(d)};
}

}  // namespace detail

inline TensorOp build_Ak(const ChainSpec& spec, const MagnonConfig& cfg, int k, Cplx v) {
    return detail::build_nested(spec, cfg, k, v).a;
}

inline TensorOp build_Dk(const ChainSpec& spec, const MagnonConfig& cfg, int k, Cplx v) {
    return detail::build_nested(spec, cfg, k, v).d;
}

inline TensorOp transfer_tau_k(const ChainSpec& spec, const MagnonConfig& cfg, int k, Cplx v) {
    return partial_trace(build_Ak(spec, cfg, k, v), {0});
}

inline TensorOp transfer_tilde_k(const ChainSpec& spec, const MagnonConfig& cfg, int k, Cplx v) {
    return partial_trace(build_Dk(spec, cfg, k, v), {0});
}

namespace detail {
inline Cplx frac(Cplx num, Cplx den) { return guarded_div(num, den, "vacuum eigenvalue"); }
}

// Closed-form value by which the corner entry of the level-k monodromy acts
// on the level-k vacuum. The factors compose structurally: the chain weight,
// the level-(k-1) dressing for k >= 2, and the level-one chain contribution
// which is nontrivial only at the two top levels.
inline Cplx vacuum_eigenvalue_a(const ChainSpec& spec, const MagnonConfig& cfg, int k, Cplx v) {
    const auto& p = spec.p;
    Cplx q = p.q;
    Cplx val = weight_product(spec, k, v);
    if (k >= 2)
        for (Cplx u : cfg.roots[k - 1])
            val *= detail::frac(v / q - q * u, v - u);
    if (k == p.n - 1)
        for (Cplx u : cfg.roots[0])
            val *= detail::frac(qpow(q, p.theta_prime) * v - qpow(q, -p.theta_prime) * u, v - u);
    if (k == p.n)
        for (Cplx u : cfg.roots[0])
            val *= detail::frac(qpow(q, 2 - p.theta_prime) * v - qpow(q, p.theta_prime - 2) * u, v - u);
    return val;
}

inline Cplx vacuum_eigenvalue_d(const ChainSpec& spec, const MagnonConfig& cfg, int k, Cplx v) {
    const auto& p = spec.p;
    Cplx q = p.q;
    Cplx val = weight_product(spec, 2 * p.n - k + 1, v);
    if (k >= 2) {
        int kp = p.kappa - k + 1;
        for (Cplx u : cfg.roots[k - 1])
            val *= detail::frac(q * v - qpow(q, 2 * kp - 1) * u, v - qpow(q, 2 * kp) * u);
    }
    if (k == p.n - 1)
        for (Cplx u : cfg.roots[0])
            val *= detail::frac(qpow(q, -p.theta_prime) * v - qpow(q, p.theta_prime) * u, v - u);
    if (k == p.n)
        for (Cplx u : cfg.roots[0])
            val *= detail::frac(qpow(q, p.theta_prime - 2) * v - qpow(q, 2 - p.theta_prime) * u, v - u);
    return val;
}

// Orthogonal projector onto the span of the level-k quantum space inside its
// ambient legs, computed from the fused chain projector at level one and the
// kernel of the strictly-lower nested entries at higher levels. The kernel
// is intersected at two generic spectral points: the entries are rational in
// the parameter, and a single point can admit accidental extra kernel.
inline TensorOp level_projector(const ChainSpec& spec, const MagnonConfig& cfg, int k) {
    auto red = ambient_reduced(spec);
    auto ls = level_space(spec, cfg, k);
    // basis of the level-1 space: image of the reduced chain projector,
    // tensored with the full level-one leg space
    Eigen::ColPivHouseholderQR<Matrix> qr(red.projector.mat);
    qr.setThreshold(1e-10);
    long r = qr.rank();
    Matrix qfull = qr.householderQ() * Matrix::Identity(red.projector.mat.rows(), r);
    long wdim = 1;
    for (size_t t = red.dims.size(); t < ls.dims.size(); ++t) wdim *= ls.dims[t];
    Matrix basis(dim_product(ls.dims), r * wdim);
    for (long i = 0; i < r; ++i)
        for (long w = 0; w < wdim; ++w) {
            Vector col = Vector::Zero(dim_product(ls.dims));
            for (long c = 0; c < qfull.rows(); ++c) col(c * wdim + w) = qfull(c, i);
            basis.col(i * wdim + w) = col;
        }
    for (int lev = 2; lev <= k; ++lev) {
        // intersect with the kernel of the strictly-lower entries of the
        // level-(lev-1) nested monodromy, extended to the level-k legs
        for (Cplx probe : {Cplx(0.7310529, 0.4321703), Cplx(1.4127751, -0.2618034)}) {
            auto lower = detail::build_nested(spec, cfg, lev - 1, probe, k).a;
            int ad = lower.row_dims[0];
            std::vector<Matrix> stack;
            for (int i = 0; i < ad; ++i)
                for (int j = 0; j < i; ++j) stack.push_back(aux_block(lower, i, j).mat * basis);
            if (!stack.empty()) {
                Matrix y = null_space(stack, 1e-8);
                basis = basis * y;
            }
        }
    }
    Matrix proj = span_projector(basis);
    return TensorOp(ls.dims, ls.dims, proj);
}

}  // namespace qba
