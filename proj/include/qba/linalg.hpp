#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <vector>

#include "qba/tensor.hpp"

namespace qba {

inline constexpr long default_dim_cap = 4096;

struct EigenPair {
    Cplx value;
    Vector vec;
};

struct EigenDecomposition {
    std::vector<EigenPair> pairs;  // sorted by real part, then imaginary part
    bool converged = true;
    double max_residual = 0.0;  // max ||A v - lambda v|| / ||A||_F over pairs
};

// Full eigendecomposition of a general (non-Hermitian) dense operator.
// Backed by a Hessenberg-reduction + shifted-QR solver.
inline EigenDecomposition eig_general(const TensorOp& a, long dim_cap = default_dim_cap) {
    if (!a.square()) throw DimensionError("eig_general: square operator required");
    if (a.rows() > dim_cap)
        throw DimensionError("eig_general: dimension " + std::to_string(a.rows()) +
                             " exceeds cap " + std::to_string(dim_cap));
    Eigen::ComplexEigenSolver<Matrix> es(a.mat, /*computeEigenvectors=*/true);
    EigenDecomposition out;
    out.converged = (es.info() == Eigen::Success);
    long n = a.rows();
    out.pairs.resize(n);
    double anorm = a.mat.norm();
    for (long i = 0; i < n; ++i) {
        out.pairs[i].value = es.eigenvalues()(i);
        out.pairs[i].vec = es.eigenvectors().col(i);
        double res = (a.mat * out.pairs[i].vec - out.pairs[i].value * out.pairs[i].vec).norm();
        out.max_residual = std::max(out.max_residual, res / std::max(1.0, anorm));
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const EigenPair& x, const EigenPair& y) {
        if (x.value.real() != y.value.real()) return x.value.real() < y.value.real();
        return x.value.imag() < y.value.imag();
    });
    return out;
}

// Count of singular values above tol * sigma_max.
inline int rank_numeric(const TensorOp& a, double tol = 1e-9) {
    if (a.rows() == 0 || a.cols() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(a.mat);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (long i = 0; i < s.size(); ++i)
        if (s(i) > tol * s(0)) ++r;
    return r;
}

inline TensorOp inverse(const TensorOp& a) {
    if (!a.square()) throw DimensionError("inverse: square operator required");
    Eigen::PartialPivLU<Matrix> lu(a.mat);
    return TensorOp(a.row_dims, a.col_dims, lu.inverse());
}

// Orthonormal basis of the joint kernel of a stack of operators (rows of all
// operators stacked), via SVD with a relative threshold.
inline Matrix null_space(const std::vector<Matrix>& ops, double tol = 1e-8) {
    if (ops.empty()) throw DimensionError("null_space: empty stack");
    long cols = ops[0].cols(), rows = 0;
    for (const auto& m : ops) rows += m.rows();
    Matrix stack(rows, cols);
    long at = 0;
    for (const auto& m : ops) {
        stack.middleRows(at, m.rows()) = m;
        at += m.rows();
    }
    Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    double smax = s.size() ? s(0) : 0.0;
    long r = 0;
    for (long i = 0; i < s.size(); ++i)
        if (s(i) > tol * std::max(1.0, smax)) ++r;
    return svd.matrixV().rightCols(cols - r);
}

// Orthogonal projector onto the column span of b (columns assumed independent).
inline Matrix span_projector(const Matrix& b) {
    Eigen::HouseholderQR<Matrix> qr(b);
    Matrix q = qr.householderQ() * Matrix::Identity(b.rows(), b.cols());
    return q * q.adjoint();
}

}  // namespace qba
