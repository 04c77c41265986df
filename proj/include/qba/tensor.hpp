#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "qba/types.hpp"

namespace qba {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Dims = std::vector<int>;

inline long dim_product(const Dims& d) {
    long p = 1;
    for (int x : d) p *= x;
    return p;
}

// Strides for the row-major, first-leg-slowest flattening used everywhere:
// flat = sum_t idx[t] * stride[t], stride[last] = 1.
inline std::vector<long> strides_of(const Dims& d) {
    std::vector<long> s(d.size(), 1);
    for (int t = static_cast<int>(d.size()) - 2; t >= 0; --t) s[t] = s[t + 1] * d[t + 1];
    return s;
}

// Dense complex linear operator with explicit leg-dimension metadata.
// Every tensor-space object in the library (R-matrices, monodromies,
// projectors) is carried by this type.
struct TensorOp {
    Dims row_dims;
    Dims col_dims;
    Matrix mat;

    TensorOp() = default;
    TensorOp(Dims rd, Dims cd) : row_dims(std::move(rd)), col_dims(std::move(cd)) {
        mat = Matrix::Zero(dim_product(row_dims), dim_product(col_dims));
    }
    TensorOp(Dims rd, Dims cd, Matrix m) : row_dims(std::move(rd)), col_dims(std::move(cd)), mat(std::move(m)) {
        if (mat.rows() != dim_product(row_dims) || mat.cols() != dim_product(col_dims))
            throw DimensionError("TensorOp: entry count does not match declared leg dimensions");
    }

    long rows() const { return mat.rows(); }
    long cols() const { return mat.cols(); }
    int nlegs() const { return static_cast<int>(row_dims.size()); }
    bool square() const { return row_dims == col_dims; }

    static TensorOp identity(const Dims& d) {
        long n = dim_product(d);
        return TensorOp(d, d, Matrix::Identity(n, n));
    }
    static TensorOp scalar(Cplx z) {
        TensorOp t(Dims{}, Dims{});
        t.mat(0, 0) = z;
        return t;
    }

    TensorOp operator*(const TensorOp& o) const {
        if (col_dims != o.row_dims) throw DimensionError("TensorOp product: leg mismatch");
        return TensorOp(row_dims, o.col_dims, mat * o.mat);
    }
    TensorOp operator+(const TensorOp& o) const {
        if (row_dims != o.row_dims || col_dims != o.col_dims)
            throw DimensionError("TensorOp sum: leg mismatch");
        return TensorOp(row_dims, col_dims, mat + o.mat);
    }
    TensorOp operator-(const TensorOp& o) const {
        if (row_dims != o.row_dims || col_dims != o.col_dims)
            throw DimensionError("TensorOp difference: leg mismatch");
        return TensorOp(row_dims, col_dims, mat - o.mat);
    }
    TensorOp operator*(Cplx z) const { return TensorOp(row_dims, col_dims, mat * z); }
    friend TensorOp operator*(Cplx z, const TensorOp& t) { return t * z; }
};

// Dense state vector over an ordered list of legs.
struct StateVec {
    Dims dims;
    Vector v;

    StateVec() = default;
    explicit StateVec(Dims d) : dims(std::move(d)) { v = Vector::Zero(dim_product(dims)); }
    StateVec(Dims d, Vector x) : dims(std::move(d)), v(std::move(x)) {
        if (v.size() != dim_product(dims)) throw DimensionError("StateVec: size mismatch");
    }

    static StateVec basis(const Dims& d, const std::vector<int>& idx) {
        StateVec s(d);
        auto str = strides_of(d);
        long flat = 0;
        for (size_t t = 0; t < d.size(); ++t) flat += idx[t] * str[t];
        s.v(flat) = 1.0;
        return s;
    }
    static StateVec unit(int d, int i) {  // e_i in C^d, zero-based index
        StateVec s(Dims{d});
        s.v(i) = 1.0;
        return s;
    }
    static StateVec scalar_one() {
        StateVec s((Dims{}));
        s.v(0) = 1.0;
        return s;
    }
    double norm() const { return v.norm(); }
    StateVec operator*(Cplx z) const { return StateVec(dims, v * z); }
    friend StateVec operator*(Cplx z, const StateVec& s) { return s * z; }
    StateVec operator+(const StateVec& o) const {
        if (dims != o.dims) throw DimensionError("StateVec sum: leg mismatch");
        return StateVec(dims, v + o.v);
    }
    StateVec operator-(const StateVec& o) const {
        if (dims != o.dims) throw DimensionError("StateVec difference: leg mismatch");
        return StateVec(dims, v - o.v);
    }
};

// Simple multi-index iterator over a dimension list.
struct Odometer {
    const Dims& dims;
    std::vector<int> idx;
    bool done;
    explicit Odometer(const Dims& d) : dims(d), idx(d.size(), 0), done(dim_product(d) == 0) {}
    void next() {
        for (int t = static_cast<int>(dims.size()) - 1; t >= 0; --t) {
            if (++idx[t] < dims[t]) return;
            idx[t] = 0;
        }
        done = true;
    }
};

// Kronecker product; leg lists concatenate, first leg slowest.
inline TensorOp kron(const TensorOp& a, const TensorOp& b) {
    Dims rd(a.row_dims), cd(a.col_dims);
    rd.insert(rd.end(), b.row_dims.begin(), b.row_dims.end());
    cd.insert(cd.end(), b.col_dims.begin(), b.col_dims.end());
    Matrix m(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            m.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a.mat(i, j) * b.mat;
    return TensorOp(std::move(rd), std::move(cd), std::move(m));
}

inline StateVec kron(const StateVec& a, const StateVec& b) {
    Dims d(a.dims);
    d.insert(d.end(), b.dims.begin(), b.dims.end());
    Vector v(a.v.size() * b.v.size());
    for (long i = 0; i < a.v.size(); ++i) v.segment(i * b.v.size(), b.v.size()) = a.v(i) * b.v;
    return StateVec(std::move(d), std::move(v));
}

// Reorders legs of a square operator. perm[t] gives the old position of the
// leg that ends up at position t.
inline TensorOp permute_legs(const TensorOp& op, const std::vector<int>& perm) {
    if (!op.square()) throw DimensionError("permute_legs: square operator required");
    Dims nd(perm.size());
    for (size_t t = 0; t < perm.size(); ++t) nd[t] = op.row_dims[perm[t]];
    auto ostr = strides_of(op.row_dims);
    auto nstr = strides_of(nd);
    long n = op.rows();
    std::vector<long> map(n);
    Odometer o(op.row_dims);
    for (long f = 0; f < n; ++f, o.next()) {
        long g = 0;
        for (size_t t = 0; t < perm.size(); ++t) g += o.idx[perm[t]] * nstr[t];
        map[f] = g;
    }
    Matrix m(n, n);
    for (long r = 0; r < n; ++r)
        for (long c = 0; c < n; ++c) m(map[r], map[c]) = op.mat(r, c);
    return TensorOp(nd, nd, std::move(m));
}

inline StateVec permute_legs(const StateVec& s, const std::vector<int>& perm) {
    Dims nd(perm.size());
    for (size_t t = 0; t < perm.size(); ++t) nd[t] = s.dims[perm[t]];
    auto nstr = strides_of(nd);
    Vector v(s.v.size());
    Odometer o(s.dims);
    for (long f = 0; f < s.v.size(); ++f, o.next()) {
        long g = 0;
        for (size_t t = 0; t < perm.size(); ++t) g += o.idx[perm[t]] * nstr[t];
        v(g) = s.v(f);
    }
    return StateVec(std::move(nd), std::move(v));
}

// Places a square operator on the chosen legs of an ambient space, identity
// elsewhere. Legs may be given in any order (the operator's own legs are
// matched position-by-position to `legs`); non-adjacent and permuted legs are
// handled by index arithmetic rather than materialized permutations.
inline TensorOp embed(const TensorOp& op, const std::vector<int>& legs, const Dims& ambient) {
    if (!op.square()) throw DimensionError("embed: square operator required");
    if (static_cast<int>(legs.size()) != op.nlegs())
        throw DimensionError("embed: leg count mismatch");
    for (size_t t = 0; t < legs.size(); ++t) {
        if (legs[t] < 0 || legs[t] >= static_cast<int>(ambient.size()))
            throw DimensionError("embed: leg index out of range: " + std::to_string(legs[t]));
        if (ambient[legs[t]] != op.row_dims[t])
            throw DimensionError("embed: dimension mismatch at ambient leg " + std::to_string(legs[t]));
    }
    std::vector<char> used(ambient.size(), 0);
    for (int l : legs) {
        if (used[l]) throw DimensionError("embed: repeated leg");
        used[l] = 1;
    }
    std::vector<int> rest;
    Dims rest_dims;
    for (size_t t = 0; t < ambient.size(); ++t)
        if (!used[t]) {
            rest.push_back(static_cast<int>(t));
            rest_dims.push_back(ambient[t]);
        }
    auto astr = strides_of(ambient);
    auto opstr = strides_of(op.row_dims);

    long n = dim_product(ambient);
    TensorOp out(ambient, ambient);
    // Offsets of each op row/col flat index inside the ambient flattening.
    long opn = op.rows();
    std::vector<long> opoff(opn);
    {
        Odometer o(op.row_dims);
        for (long f = 0; f < opn; ++f, o.next()) {
            long g = 0;
            for (size_t t = 0; t < legs.size(); ++t) g += static_cast<long>(o.idx[t]) * astr[legs[t]];
            opoff[f] = g;
        }
    }
    long rn = dim_product(rest_dims);
    std::vector<long> restoff(rn);
    {
        Odometer o(rest_dims);
        for (long f = 0; f < rn; ++f, o.next()) {
            long g = 0;
            for (size_t t = 0; t < rest.size(); ++t) g += static_cast<long>(o.idx[t]) * astr[rest[t]];
            restoff[f] = g;
        }
    }
    for (long a = 0; a < opn; ++a)
        for (long b = 0; b < opn; ++b) {
            Cplx z = op.mat(a, b);
            if (z == Cplx(0.0)) continue;
            for (long r = 0; r < rn; ++r) out.mat(opoff[a] + restoff[r], opoff[b] + restoff[r]) = z;
        }
    (void)n;
    return out;
}

// Partial trace over the listed legs (each must be square).
inline TensorOp partial_trace(const TensorOp& op, const std::vector<int>& legs) {
    for (int l : legs)
        if (op.row_dims[l] != op.col_dims[l])
            throw DimensionError("partial_trace: traced leg not square: " + std::to_string(l));
    std::vector<char> traced(op.row_dims.size(), 0);
    for (int l : legs) traced[l] = 1;
    Dims kept_r, kept_c, traced_d;
    std::vector<int> kept_pos, traced_pos;
    for (size_t t = 0; t < op.row_dims.size(); ++t) {
        if (traced[t]) {
            traced_pos.push_back(static_cast<int>(t));
            traced_d.push_back(op.row_dims[t]);
        } else {
            kept_pos.push_back(static_cast<int>(t));
            kept_r.push_back(op.row_dims[t]);
            kept_c.push_back(op.col_dims[t]);
        }
    }
    auto rstr = strides_of(op.row_dims);
    auto cstr = strides_of(op.col_dims);
    TensorOp out(kept_r, kept_c);

    long kr = dim_product(kept_r), kc = dim_product(kept_c), td = dim_product(traced_d);
    std::vector<long> kroff(kr), kcoff(kc), troff_r(td), troff_c(td);
    {
        Odometer o(kept_r);
        for (long f = 0; f < kr; ++f, o.next()) {
            long g = 0;
            for (size_t t = 0; t < kept_pos.size(); ++t) g += static_cast<long>(o.idx[t]) * rstr[kept_pos[t]];
            kroff[f] = g;
        }
    }
    {
        Odometer o(kept_c);
        for (long f = 0; f < kc; ++f, o.next()) {
            long g = 0;
            for (size_t t = 0; t < kept_pos.size(); ++t) g += static_cast<long>(o.idx[t]) * cstr[kept_pos[t]];
            kcoff[f] = g;
        }
    }
    {
        Odometer o(traced_d);
        for (long f = 0; f < td; ++f, o.next()) {
            long gr = 0, gc = 0;
            for (size_t t = 0; t < traced_pos.size(); ++t) {
                gr += static_cast<long>(o.idx[t]) * rstr[traced_pos[t]];
                gc += static_cast<long>(o.idx[t]) * cstr[traced_pos[t]];
            }
            troff_r[f] = gr;
            troff_c[f] = gc;
        }
    }
    for (long r = 0; r < kr; ++r)
        for (long c = 0; c < kc; ++c) {
            Cplx acc(0.0);
            for (long t = 0; t < td; ++t) acc += op.mat(kroff[r] + troff_r[t], kcoff[c] + troff_c[t]);
            out.mat(r, c) = acc;
        }
    return out;
}

inline Cplx trace(const TensorOp& op) {
    if (!op.square()) throw DimensionError("trace: square operator required");
    return op.mat.trace();
}

inline StateVec apply(const TensorOp& op, const StateVec& s) {
    if (op.col_dims != s.dims) throw DimensionError("apply: leg mismatch");
    return StateVec(op.row_dims, op.mat * s.v);
}

// Applies a square operator to the chosen legs of a state without
// materializing the embedded matrix.
inline StateVec apply_on_legs(const TensorOp& op, const std::vector<int>& legs, const StateVec& s) {
    if (!op.square()) throw DimensionError("apply_on_legs: square operator required");
    for (size_t t = 0; t < legs.size(); ++t)
        if (s.dims[legs[t]] != op.row_dims[t])
            throw DimensionError("apply_on_legs: dimension mismatch at leg " + std::to_string(legs[t]));
    std::vector<char> used(s.dims.size(), 0);
    for (int l : legs) used[l] = 1;
    std::vector<int> rest;
    Dims rest_dims;
    for (size_t t = 0; t < s.dims.size(); ++t)
        if (!used[t]) {
            rest.push_back(static_cast<int>(t));
            rest_dims.push_back(s.dims[t]);
        }
    auto str = strides_of(s.dims);
    long opn = op.rows(), rn = dim_product(rest_dims);
    std::vector<long> opoff(opn), restoff(rn);
    {
        Odometer o(op.row_dims);
        for (long f = 0; f < opn; ++f, o.next()) {
            long g = 0;
            for (size_t t = 0; t < legs.size(); ++t) g += static_cast<long>(o.idx[t]) * str[legs[t]];
            opoff[f] = g;
        }
    }
    {
        Odometer o(rest_dims);
        for (long f = 0; f < rn; ++f, o.next()) {
            long g = 0;
            for (size_t t = 0; t < rest.size(); ++t) g += static_cast<long>(o.idx[t]) * str[rest[t]];
            restoff[f] = g;
        }
    }
    StateVec out(s.dims);
    for (long r = 0; r < rn; ++r)
        for (long a = 0; a < opn; ++a) {
            Cplx acc(0.0);
            for (long b = 0; b < opn; ++b) {
                Cplx z = op.mat(a, b);
                if (z != Cplx(0.0)) acc += z * s.v(opoff[b] + restoff[r]);
            }
            out.v(opoff[a] + restoff[r]) = acc;
        }
    return out;
}

// Contracts one leg of a state against a covector: out = sum_j w[j] * s|leg=j.
inline StateVec contract_leg(const StateVec& s, int leg, const Vector& w) {
    if (w.size() != s.dims[leg]) throw DimensionError("contract_leg: covector size mismatch");
    Dims nd;
    for (size_t t = 0; t < s.dims.size(); ++t)
        if (static_cast<int>(t) != leg) nd.push_back(s.dims[t]);
    auto str = strides_of(s.dims);
    StateVec out(nd);
    Odometer o(nd);
    auto nstr = strides_of(nd);
    (void)nstr;
    for (long f = 0; f < out.v.size(); ++f, o.next()) {
        long base = 0;
        int tt = 0;
        for (size_t t = 0; t < s.dims.size(); ++t) {
            if (static_cast<int>(t) == leg) continue;
            base += static_cast<long>(o.idx[tt]) * str[t];
            ++tt;
        }
        Cplx acc(0.0);
        for (int j = 0; j < s.dims[leg]; ++j) acc += w(j) * s.v(base + j * str[leg]);
        out.v(f) = acc;
    }
    return out;
}

inline double fro(const TensorOp& a) { return a.mat.norm(); }

// Relative deviation used by every identity check in the suite.
inline double rel_defect(const TensorOp& a, const TensorOp& b) {
    double scale = std::max(1.0, std::max(a.mat.norm(), b.mat.norm()));
    return (a.mat - b.mat).norm() / scale;
}

inline double rel_defect(const StateVec& a, const StateVec& b) {
    double scale = std::max(1.0, std::max(a.v.norm(), b.v.norm()));
    return (a.v - b.v).norm() / scale;
}

}  // namespace qba
