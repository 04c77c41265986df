#pragma once

#include <utility>
#include <vector>

#include "qba/rmatrix.hpp"

namespace qba {

inline Cplx q_int(Cplx q, int k) {
    if (k < 0) throw InvalidConfig("q_int: negative argument");
    return (qpow(q, k) - qpow(q, -k)) / (q - Cplx(1.0) / q);
}

inline Cplx q_factorial(Cplx q, int k) {
    Cplx r(1.0);
    for (int j = 1; j <= k; ++j) r *= q_int(q, j);
    return r;
}

struct Site {
    int s = 1;   // fusion degree
    Cplx c{1.0}; // inhomogeneity
};

// Spin-chain definition. Sites carry (skew)symmetric fused representations
// of degree s_i at marked point c_i.
struct ChainSpec {
    DeformParams p;
    std::vector<Site> sites;
    bool allow_special_inhomogeneities = false;

    int ell() const { return static_cast<int>(sites.size()); }
    int total_legs() const {
        int t = 0;
        for (const auto& s : sites) t += s.s;
        return t;
    }
    Dims ambient_dims() const { return Dims(total_legs(), p.N()); }
    Dims reduced_dims() const { return Dims(total_legs(), p.n); }
    // первый leg of site i within the chain leg list
    int site_leg_begin(int i) const {
        int t = 0;
        for (int j = 0; j < i; ++j) t += sites[j].s;
        return t;
    }
};

inline ChainSpec make_chain(const DeformParams& p, std::vector<Site> sites, bool allow_special = false) {
    ChainSpec spec{p, std::move(sites), allow_special};
    for (const auto& s : spec.sites) {
        if (s.s < 1) throw InvalidConfig("site fusion degree must be positive");
        if (p.theta == -1 && s.s > p.n) throw InvalidConfig("symplectic sites require s <= n");
        if (std::abs(s.c) < pole_guard) throw InvalidConfig("inhomogeneities must be nonzero");
    }
    if (!allow_special) {
        int range = 2 * (spec.total_legs() + p.n + 2);
        for (int i = 0; i < spec.ell(); ++i)
            for (int j = 0; j < spec.ell(); ++j) {
                if (i == j) continue;
                Cplx ratio = spec.sites[i].c / spec.sites[j].c;
                for (int m = -range; m <= range; ++m)
                    if (std::abs(ratio - p.qp(2 * m)) < 1e-8 * std::abs(p.qp(2 * m)))
                        throw InvalidConfig("inhomogeneity ratio hits q^{2Z}; pass the override to allow");
            }
    }
    return spec;
}

namespace detail {

// Ordered product of adjacent-pair factors R_{i,i+1}(arg_i, 1) P_{i,i+1}
// shared by the full and reduced fusion projectors. The j-th outer block
// runs the pairs (1,2) ... (j-1,j) left to right. Pushing the swaps through
// turns the i-th factor of a block into a coupling between the first leg
// and leg i+1 of the fusion string c, q^{2 theta} c, ..., so its spectral
// argument is q^{-2 i theta}.
template <typename RBuilder>
TensorOp fusion_product(const DeformParams& p, int s, int d, RBuilder&& rb) {
    Dims amb(s, d);
    TensorOp swap({d, d}, {d, d});
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) swap.mat(static_cast<long>(a) * d + b, static_cast<long>(b) * d + a) = 1.0;
    TensorOp acc = TensorOp::identity(amb);
    for (int j = s; j >= 2; --j) {
        for (int i = 1; i <= j - 1; ++i) {
            Cplx arg = qpow(p.q, -2L * i * p.theta);
            TensorOp factor = rb(arg) * swap;
            acc = acc * embed(factor, {i - 1, i}, amb);
        }
    }
    return (Cplx(p.theta) / q_factorial(p.q, s)) * acc;
}

}  // namespace detail

// Idempotent projector cutting the degree-s fused site representation out of
// (C^{2n})^(x s).
inline TensorOp fusion_projector(const DeformParams& p, int s) {
    if (s < 1) throw InvalidConfig("fusion degree must be positive");
    if (p.theta == -1 && s > p.n) throw InvalidConfig("symplectic fusion requires s <= n");
    if (s == 1) return TensorOp::identity({p.N()});
    return detail::fusion_product(p, s, p.N(), [&](Cplx arg) { return build_r(p, arg, Cplx(1.0)); });
}

// Companion projector on the reduced legs (C^n)^(x s).
inline TensorOp reduced_fusion_projector(const DeformParams& p, int s) {
    if (s == 1) return TensorOp::identity({p.n});
    return detail::fusion_product(p, s, p.n, [&](Cplx arg) { return build_r_reduced(p, 1, 1, arg, Cplx(1.0)); });
}

namespace detail {
inline StateVec weighted_sign_sum(int d, Cplx q, int s) {
    // sum over permutations with sign and q^(inversion count)
    std::vector<int> perm(s);
    for (int i = 0; i < s; ++i) perm[i] = i;
    StateVec out(Dims(s, d));
    do {
        int inv = 0;
        for (int a = 0; a < s; ++a)
            for (int b = a + 1; b < s; ++b)
                if (perm[a] > perm[b]) ++inv;
        double sign = (inv % 2 == 0) ? 1.0 : -1.0;
        std::vector<int> idx(perm.begin(), perm.end());
        auto str = strides_of(out.dims);
        long flat = 0;
        for (int t = 0; t < s; ++t) flat += idx[t] * str[t];
        out.v(flat) += sign * qpow(q, inv);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}
}  // namespace detail

// Lowest weight vector of a fused site: e_1^(x s) in the symmetric case, the
// signed q-weighted sum over permutations in the skewsymmetric case.
inline StateVec lowest_weight_vector(const DeformParams& p, int s) {
    int N = p.N();
    if (p.theta == 1) {
        StateVec v = StateVec::unit(N, 0);
        for (int i = 1; i < s; ++i) v = kron(v, StateVec::unit(N, 0));
        return v;
    }
    return detail::weighted_sign_sum(N, p.q, s);
}

inline StateVec reduced_lowest_weight_vector(const DeformParams& p, int s) {
    if (p.theta == 1) {
        StateVec v = StateVec::unit(p.n, 0);
        for (int i = 1; i < s; ++i) v = kron(v, StateVec::unit(p.n, 0));
        return v;
    }
    return detail::weighted_sign_sum(p.n, p.q, s);
}

// Lowest-weight component lambda^(i)_j(u, c_i), 1-based j in 1..2n.
inline Cplx weight_lambda(const ChainSpec& spec, int site, int j, Cplx u) {
    const auto& p = spec.p;
    int s = spec.sites[site].s, N = p.N();
    Cplx c = spec.sites[site].c, q = p.q;
    if (j < 1 || j > N) throw InvalidConfig("weight index out of range");
    if (p.theta == 1) {  // symmetric
        if (j == 1) return guarded_div(qpow(q, s) * c - qpow(q, -s) * u, c - u, "weight pole");
        if (j == N)
            return guarded_div(qpow(q, -1) * c - qpow(q, -2 * p.kappa + 1) * u,
                               qpow(q, s - 1) * c - qpow(q, -2 * p.kappa - s + 1) * u, "weight pole");
        return Cplx(1.0);
    }
    // skewsymmetric
    if (j <= s) return guarded_div(q * c - u / q, c - u, "weight pole");
    if (j >= N - s + 1)
        return guarded_div(qpow(q, -s) * c - qpow(q, -2 * p.kappa + s) * u,
                           qpow(q, -s + 1) * c - qpow(q, -2 * p.kappa + s - 1) * u, "weight pole");
    return Cplx(1.0);
}

// Product over sites of a weight component.
inline Cplx weight_product(const ChainSpec& spec, int j, Cplx u) {
    Cplx r(1.0);
    for (int i = 0; i < spec.ell(); ++i) r *= weight_lambda(spec, i, j, u);
    return r;
}

// Ambient-space bookkeeping: chain legs, per-site ranges, site projectors.
struct Ambient {
    Dims dims;
    TensorOp projector;  // on the chain legs only
    StateVec eta;        // lowest weight vector of the whole chain
};

inline Ambient ambient_full(const ChainSpec& spec) {
    Ambient a;
    a.dims = spec.ambient_dims();
    a.projector = TensorOp::scalar(1.0);
    a.eta = StateVec::scalar_one();
    for (const auto& st : spec.sites) {
        a.projector = kron(a.projector, fusion_projector(spec.p, st.s));
        a.eta = kron(a.eta, lowest_weight_vector(spec.p, st.s));
    }
    return a;
}

inline Ambient ambient_reduced(const ChainSpec& spec) {
    Ambient a;
    a.dims = spec.reduced_dims();
    a.projector = TensorOp::scalar(1.0);
    a.eta = StateVec::scalar_one();
    for (const auto& st : spec.sites) {
        a.projector = kron(a.projector, reduced_fusion_projector(spec.p, st.s));
        a.eta = kron(a.eta, reduced_lowest_weight_vector(spec.p, st.s));
    }
    return a;
}

namespace detail {
// Shared site-ordered product: factor(site, inner_index, leg) embedded on
// (aux, leg) with sites ascending and the inner index ascending.
template <typename Factory>
TensorOp site_product(const ChainSpec& spec, int aux_dim, const Dims& leg_dims, Factory&& f) {
    Dims all;
    all.push_back(aux_dim);
    all.insert(all.end(), leg_dims.begin(), leg_dims.end());
    TensorOp acc = TensorOp::identity(all);
    int leg = 0;
    for (int i = 0; i < spec.ell(); ++i)
        for (int j = 0; j < spec.sites[i].s; ++j, ++leg)
            acc = acc * embed(f(i, j), {0, 1 + leg}, all);
    return acc;
}
}  // namespace detail

// Fused monodromy matrix on C^{2n} (x) ambient chain legs; the site
// projectors are applied on both sides so the operator restricts to the
// fused representation.
inline TensorOp build_T(const ChainSpec& spec, Cplx u) {
    auto amb = ambient_full(spec);
    TensorOp raw = detail::site_product(spec, spec.p.N(), amb.dims, [&](int i, int j) {
        return build_r(spec.p, u, spec.p.qp(2 * spec.p.theta * j) * spec.sites[i].c);
    });
    TensorOp proj = embed(amb.projector, [&] {
        std::vector<int> legs(amb.dims.size());
        for (size_t t = 0; t < legs.size(); ++t) legs[t] = 1 + static_cast<int>(t);
        return legs;
    }(), raw.row_dims);
    return proj * raw * proj;
}

// Upper-left sub-monodromy acting on the reduced legs.
inline TensorOp build_A1(const ChainSpec& spec, Cplx u) {
    auto amb = ambient_reduced(spec);
    TensorOp raw = detail::site_product(spec, spec.p.n, amb.dims, [&](int i, int j) {
        return build_r_reduced(spec.p, 1, 1, u, spec.p.qp(2 * spec.p.theta * j) * spec.sites[i].c);
    });
    TensorOp proj = embed(amb.projector, [&] {
        std::vector<int> legs(amb.dims.size());
        for (size_t t = 0; t < legs.size(); ++t) legs[t] = 1 + static_cast<int>(t);
        return legs;
    }(), raw.row_dims);
    return proj * raw * proj;
}

// Lower-right sub-monodromy acting on the reduced legs.
inline TensorOp build_D1(const ChainSpec& spec, Cplx u) {
    auto amb = ambient_reduced(spec);
    TensorOp raw = detail::site_product(spec, spec.p.n, amb.dims, [&](int i, int j) {
        return build_k_reduced(spec.p, 1, 1, u,
                               spec.p.qp(2 * spec.p.kappa + 2 * spec.p.theta * j) * spec.sites[i].c);
    });
    TensorOp proj = embed(amb.projector, [&] {
        std::vector<int> legs(amb.dims.size());
        for (size_t t = 0; t < legs.size(); ++t) legs[t] = 1 + static_cast<int>(t);
        return legs;
    }(), raw.row_dims);
    return proj * raw * proj;
}

// Matrix element t_{ab} of an operator whose first leg is the auxiliary
// space (zero-based a, b).
inline TensorOp aux_block(const TensorOp& op, int a, int b) {
    Dims rd(op.row_dims.begin() + 1, op.row_dims.end());
    Dims cd(op.col_dims.begin() + 1, op.col_dims.end());
    long nr = dim_product(rd), nc = dim_product(cd);
    return TensorOp(rd, cd, op.mat.block(static_cast<long>(a) * nr, static_cast<long>(b) * nc, nr, nc));
}

// m x m family of auxiliary-space blocks starting at row r0, column c0,
// reassembled as an operator whose first leg has dimension m.
inline TensorOp aux_subblock(const TensorOp& op, int r0, int c0, int m) {
    Dims rd(op.row_dims.begin() + 1, op.row_dims.end());
    Dims cd(op.col_dims.begin() + 1, op.col_dims.end());
    long nr = dim_product(rd), nc = dim_product(cd);
    Dims ord{m}, ocd{m};
    ord.insert(ord.end(), rd.begin(), rd.end());
    ocd.insert(ocd.end(), cd.begin(), cd.end());
    TensorOp out(ord, ocd);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            out.mat.block(static_cast<long>(a) * nr, static_cast<long>(b) * nc, nr, nc) =
                op.mat.block(static_cast<long>(r0 + a) * nr, static_cast<long>(c0 + b) * nc, nr, nc);
    return out;
}

// Leg-wise inclusion of the reduced chain space into the ambient one,
// sending the reduced basis to the first n ambient basis vectors.
inline TensorOp inclusion_reduced(const ChainSpec& spec) {
    int n = spec.p.n, N = spec.p.N();
    TensorOp inc({N}, {n});
    for (int i = 0; i < n; ++i) inc.mat(i, i) = 1.0;
    TensorOp out = TensorOp::scalar(1.0);
    for (int t = 0; t < spec.total_legs(); ++t) out = kron(out, inc);
    return out;
}

// Applies the fused monodromy to a state on (aux, chain legs) without
// materializing the matrix; used where the ambient dimension is large.
inline StateVec apply_T(const ChainSpec& spec, Cplx u, const StateVec& state) {
    auto amb = ambient_full(spec);
    StateVec v = state;
    auto apply_proj = [&](StateVec x) {
        int leg = 1;
        for (const auto& st : spec.sites) {
            std::vector<int> legs(st.s);
            for (int j = 0; j < st.s; ++j) legs[j] = leg + j;
            x = apply_on_legs(fusion_projector(spec.p, st.s), legs, x);
            leg += st.s;
        }
        return x;
    };
    v = apply_proj(v);
    // rightmost monodromy factor acts first
    for (int i = spec.ell() - 1; i >= 0; --i)
        for (int j = spec.sites[i].s - 1; j >= 0; --j) {
            TensorOp r = build_r(spec.p, u, spec.p.qp(2 * spec.p.theta * j) * spec.sites[i].c);
            v = apply_on_legs(r, {0, 1 + spec.site_leg_begin(i) + j}, v);
        }
    return apply_proj(v);
}

// Level-0 transfer matrix tau(v) = tr_a T_a(v).
inline TensorOp transfer_tau(const ChainSpec& spec, Cplx v) { return partial_trace(build_T(spec, v), {0}); }

}  // namespace qba
