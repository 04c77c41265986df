#include <catch2/catch_amalgamated.hpp>

#include "common.hpp"
#include "qba/rmatrix.hpp"

using namespace qba;

namespace {

TensorOp embed_r3(const TensorOp& r, int a, int b, int N) {
    return embed(r, {a, b}, {N, N, N});
}

double ybe_defect(const DeformParams& p, Cplx u, Cplx v, Cplx w) {
    int N = p.N();
    auto r12 = embed_r3(build_r(p, u, v), 0, 1, N);
    auto r13 = embed_r3(build_r(p, u, w), 0, 2, N);
    auto r23 = embed_r3(build_r(p, v, w), 1, 2, N);
    return rel_defect(r12 * r13 * r23, r23 * r13 * r12);
}

}  // namespace

TEST_CASE("deformation data satisfies the reflection antisymmetry") {
    for (int theta : {-1, 1})
        for (int n : {1, 2, 3}) {
            auto p = make_deform(n, theta, Cplx(1.3));
            for (int i = 0; i < 2 * n; ++i) {
                REQUIRE(p.nu[p.bar(i)] == -p.nu[i]);
                if (theta == 1) REQUIRE(p.theta_sign[i] == 1);
                if (theta == -1) REQUIRE(p.theta_sign[i] == (i < n ? -1 : 1));
            }
            REQUIRE(p.kappa == n - theta);
        }
    // sp(4): nu = (-2,-1,1,2)
    auto p = make_deform(2, -1, Cplx(1.3));
    REQUIRE(p.nu == std::vector<int>{-2, -1, 1, 2});
}

TEST_CASE("P exchanges basis vectors for every n") {
    auto g = qt::rng(31);
    for (int n : {1, 2, 3}) {
        auto p = make_deform(n, -1, qt::rand_q(g));
        auto b = build_basic(p);
        int N = p.N();
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                StateVec xy = kron(StateVec::unit(N, i), StateVec::unit(N, j));
                StateVec yx = kron(StateVec::unit(N, j), StateVec::unit(N, i));
                REQUIRE(rel_defect(apply(b.p, xy), yx) == 0.0);
            }
    }
}

TEST_CASE("Q_q and R_q entries match the independent summation script") {
    auto g = qt::rng(32);
    for (int theta : {-1, 1}) {
        auto p = make_deform(2, theta, qt::rand_q(g));
        Cplx u = qt::rand_cplx(g), v = qt::rand_cplx(g);
        auto lib = build_r(p, u, v);
        auto orc = qt::oracle_r(p, u, v);
        REQUIRE(rel_defect(lib, orc) < 1e-14);
        // Q_q diagonal-pair entry at (e_{11} (x) e_{bar1 bar1}) reads off the sum
        auto b = build_basic(p);
        int N = p.N();
        Cplx expect = qpow(p.q, p.nu[0] - p.nu[0]) * Cplx(p.theta_sign[0] * p.theta_sign[0]);
        REQUIRE(std::abs(b.qq.mat(0 * N + p.bar(0), 0 * N + p.bar(0)) - expect) < 1e-15);
    }
}

TEST_CASE("P Q_q P equals Q with q inverted, full size") {
    auto g = qt::rng(33);
    for (int theta : {-1, 1})
        for (int n : {1, 2, 3}) {
            auto p = make_deform(n, theta, qt::rand_q(g));
            auto b = build_basic(p);
            auto binv = build_basic(p.with_q_inverted());
            REQUIRE(rel_defect(b.p * b.qq * b.p, binv.qq) < 1e-13);
        }
}

TEST_CASE("R(u,v) approaches R_q as v/u grows") {
    auto g = qt::rng(34);
    auto p = make_deform(2, -1, qt::rand_q(g));
    Cplx u = qt::rand_cplx(g);
    auto r = build_r(p, u, u * Cplx(1e8));
    auto b = build_basic(p);
    REQUIRE(rel_defect(r, b.rq) < 1e-6);
}

TEST_CASE("Yang-Baxter residual over random draws, all ranks and both families") {
    auto g = qt::rng(35);
    for (int theta : {-1, 1})
        for (int n : {1, 2, 3}) {
            for (int rep = 0; rep < 5; ++rep) {
                auto p = make_deform(n, theta, qt::rand_q(g));
                double d = ybe_defect(p, qt::rand_cplx(g), qt::rand_cplx(g), qt::rand_cplx(g));
                INFO("n=" << n << " theta=" << theta << " rep=" << rep);
                REQUIRE(d < 1e-10);
            }
        }
}

TEST_CASE("reduced constant operators: inverse and conjugation identities") {
    auto g = qt::rng(36);
    for (int theta : {-1, 1})
        for (int n : {1, 2, 3}) {
            auto p = make_deform(n, theta, qt::rand_q(g));
            for (int k = 1; k <= n; ++k)
                for (int l = 1; l <= k; ++l) {
                    auto t = build_reduced(p, k, l);
                    auto ti = build_reduced(p.with_q_inverted(), k, l);
                    if (k == l) {
                        REQUIRE(rel_defect(t.rq * ti.rq, TensorOp::identity(t.rq.row_dims)) < 1e-12);
                        REQUIRE(rel_defect(t.p * t.qq * t.p, ti.qq) < 1e-13);
                    }
                    // rejected case
                    if (l > 1) REQUIRE_THROWS_AS(build_reduced(p, l - 1, l), InvalidConfig);
                }
        }
}

TEST_CASE("reduced P at k = l is the plain swap") {
    auto p = make_deform(3, 1, Cplx(1.4));
    for (int k = 1; k <= 3; ++k) {
        auto t = build_reduced(p, k, k);
        int m = p.n - k + 1;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                StateVec xy = kron(StateVec::unit(m, i), StateVec::unit(m, j));
                StateVec yx = kron(StateVec::unit(m, j), StateVec::unit(m, i));
                REQUIRE(rel_defect(apply(t.p, xy), yx) == 0.0);
            }
    }
}

TEST_CASE("reduced R_q entries for k=2, l=1, n=3 match the scripted summation") {
    auto g = qt::rng(37);
    auto p = make_deform(3, -1, qt::rand_q(g));
    auto t = build_reduced(p, 2, 1);
    auto orc = qt::oracle_reduced_rq(p, 2, 1);
    REQUIRE(rel_defect(t.rq, orc) < 1e-14);
}

TEST_CASE("top-level reduced R acts as the scalar weight on C (x) C") {
    auto g = qt::rng(38);
    for (int theta : {-1, 1}) {
        auto p = make_deform(2, theta, qt::rand_q(g));
        Cplx u = qt::rand_cplx(g), v = qt::rand_cplx(g);
        auto r = build_r_reduced(p, p.n, p.n, u, v);
        Cplx expect = (p.q * v - u / p.q) / (v - u);
        REQUIRE(r.rows() == 1);
        REQUIRE(std::abs(r.mat(0, 0) - expect) < 1e-12);
    }
}

TEST_CASE("bar transpositions invert each other and square to the identity") {
    auto g = qt::rng(39);
    auto p = make_deform(3, -1, qt::rand_q(g));
    for (int l = 1; l <= 3; ++l) {
        int m = p.n - l + 1;
        auto x = qt::rand_op(g, {m, m}, {m, m});
        auto y = transpose_omega_reduced(transpose_omega_bar_reduced(x, 1, p, l), 1, p, l);
        REQUIRE(rel_defect(x, y) < 1e-13);
    }
    int N = p.N();
    auto z = qt::rand_op(g, {N}, {N});
    REQUIRE(rel_defect(transpose_t_plain(transpose_t_plain(z, 0), 0), z) < 1e-14);
    // applying the weighted full transposition twice conjugates by the
    // diagonal q-weight: the sign factors cancel, the q-weights add
    auto w = transpose_omega_full(transpose_omega_full(z, 0, p), 0, p);
    TensorOp d({N}, {N});
    for (int i = 0; i < N; ++i) d.mat(i, i) = qpow(p.q, 2 * p.nu[i]);
    REQUIRE(rel_defect(w, d * z * inverse(d)) < 1e-13);
}

TEST_CASE("six-vertex block structure reassembles from the reduced operators") {
    auto g = qt::rng(40);
    for (int theta : {-1, 1})
        for (int n : {1, 2, 3}) {
            auto p = make_deform(n, theta, qt::rand_q(g));
            Cplx u = qt::rand_cplx(g), v = qt::rand_cplx(g);
            auto blocks = block_decompose(build_r(p, u, v), p);
            REQUIRE(blocks.max_offpattern < 1e-12);
            REQUIRE(blocks.k_mismatch < 1e-12);
            auto r11 = build_r_reduced(p, 1, 1, u, v);
            auto k11 = build_k_reduced(p, 1, 1, u, qpow(p.q, 2 * p.kappa) * v);
            auto u11 = build_u_block(p, 1, u, v);
            auto ub11 = build_ubar_block(p, 1, v, u);
            INFO("n=" << n << " theta=" << theta);
            REQUIRE(rel_defect(blocks.r_block, r11) < 1e-12);
            REQUIRE(rel_defect(blocks.k_block, k11) < 1e-12);
            REQUIRE(rel_defect(blocks.u_block, u11) < 1e-12);
            REQUIRE(rel_defect(blocks.ubar_block, ub11) < 1e-12);
        }
}

TEST_CASE("exchange identities tying Ubar and U to the permutation block") {
    auto g = qt::rng(41);
    for (int theta : {-1, 1})
        for (int n : {1, 2, 3}) {
            auto p = make_deform(n, theta, qt::rand_q(g));
            Cplx qm = p.q - Cplx(1.0) / p.q;
            for (int k = 1; k <= n; ++k) {
                int kp = p.kappa - k + 1;  // level-k shift; equals kappa at k = 1
                auto pr = build_reduced(p, k, k);
                if (kp == 0) {
                    // orthogonal top level: the off-diagonal blocks vanish
                    // identically and the exchange identity degenerates
                    REQUIRE(fro(build_u_block(p, k, Cplx(1.7), Cplx(0.4))) < 1e-14);
                    REQUIRE(fro(build_ubar_block(p, k, Cplx(1.7), Cplx(0.4))) < 1e-14);
                    continue;
                }
                Cplx q2k = qpow(p.q, 2 * kp);
                for (int rep = 0; rep < 3; ++rep) {
                    Cplx u = qt::rand_cplx(g), v = qt::rand_cplx(g);
                    auto kinv_v = inverse(build_k_reduced(p, k, k, u, q2k * v));
                    auto kinv_u = inverse(build_k_reduced(p, k, k, u, q2k * u));
                    auto lhs1 = build_ubar_block(p, k, v, u) * kinv_v;
                    auto rhs1 = (qm / (v / u - Cplx(1.0))) * (pr.p * kinv_u);
                    INFO("first identity, n=" << n << " theta=" << theta << " k=" << k);
                    REQUIRE(rel_defect(lhs1, rhs1) < 1e-10);
                    // residue form: the only pole of R^{(k,k)}(u,w) at w = u sits in
                    // the permutation coefficient, so clearing (w - u) leaves
                    // (q - 1/q) u P K^{-1}(u, q^{2 kappa} u).
                    auto res = (qm * u) * (pr.p * kinv_u);
                    auto rhs1_res = (Cplx(1.0) / (v - u)) * res;
                    REQUIRE(rel_defect(lhs1, rhs1_res) < 1e-10);

                    auto kinv_vu = inverse(build_k_reduced(p, k, k, v, q2k * u));
                    auto lhs2 = kinv_vu * build_u_block(p, k, v, u);
                    auto rhs2 = (-qm / (v / u - Cplx(1.0))) * (kinv_u * pr.p);
                    INFO("second identity, n=" << n << " theta=" << theta << " k=" << k);
                    REQUIRE(rel_defect(lhs2, rhs2) < 1e-10);
                    auto res2 = (-qm * u) * (kinv_u * pr.p);
                    REQUIRE(rel_defect(lhs2, (Cplx(1.0) / (v - u)) * res2) < 1e-10);
                }
            }
        }
}

TEST_CASE("triangular factorization of the reduced R and K matrices") {
    auto g = qt::rng(42);
    for (int theta : {-1, 1})
        for (int n : {1, 2, 3}) {
            auto p = make_deform(n, theta, qt::rand_q(g));
            Cplx u = qt::rand_cplx(g), v = qt::rand_cplx(g);
            for (int k = 1; k <= n; ++k)
                for (int l = 1; l <= k; ++l) {
                    int mk = p.n - k + 1, ml = p.n - l + 1, sh = k - l;
                    auto eops = build_e_ops(p, l);
                    auto eops_qi = build_e_ops(p.with_q_inverted(), l);
                    TensorOp rsum(Dims{mk, ml}, Dims{mk, ml});
                    TensorOp ksum(Dims{mk, ml}, Dims{mk, ml});
                    for (int i = 0; i < mk; ++i)
                        for (int j = 0; j < mk; ++j) {
                            TensorOp eij({mk}, {mk});
                            eij.mat(i, j) = 1.0;
                            auto ev = e_op_at(eops, j + sh, i + sh, v / u);
                            rsum = rsum + kron(eij, ev);
                            auto evk = transpose_omega_bar_reduced(e_op_at(eops_qi, j + sh, i + sh, v / u), 0, p, l);
                            ksum = ksum + kron(eij, evk);
                        }
                    INFO("n=" << n << " theta=" << theta << " k=" << k << " l=" << l);
                    REQUIRE(rel_defect(rsum, build_r_reduced(p, k, l, u, v)) < 1e-12);
                    REQUIRE(rel_defect(ksum, build_k_reduced(p, k, l, u, v)) < 1e-12);
                }
        }
}

TEST_CASE("E+ diagonal entries carry the inverse q-weight") {
    auto p = make_deform(3, 1, Cplx(1.7));
    auto e = build_e_ops(p, 1);
    for (int i = 0; i < 3; ++i) {
        for (int t = 0; t < 3; ++t) {
            REQUIRE(std::abs(e.ep(i, i).mat(t, t) - qpow(p.q, t == i ? -1 : 0)) < 1e-15);
            REQUIRE(std::abs(e.em(i, i).mat(t, t) - qpow(p.q, t == i ? 1 : 0)) < 1e-15);
        }
    }
}

TEST_CASE("pole guards reject singular spectral parameters") {
    auto p = make_deform(2, -1, Cplx(1.3));
    Cplx u(0.7, 0.1);
    REQUIRE_THROWS_AS(build_r(p, u, u), SingularParameter);
    REQUIRE_THROWS_AS(build_r(p, u, u / qpow(p.q, 2 * p.kappa)), SingularParameter);
    REQUIRE_THROWS_AS(build_r(p, Cplx(0.0), u), SingularParameter);
}

TEST_CASE("swapped-leg R equals the q-inverted R with swapped arguments") {
    auto g = qt::rng(43);
    for (int theta : {-1, 1}) {
        auto p = make_deform(2, theta, qt::rand_q(g));
        Cplx u = qt::rand_cplx(g), v = qt::rand_cplx(g);
        for (int k = 1; k <= 2; ++k) {
            auto r21 = permute_legs(build_r_reduced(p, k, k, u, v), {1, 0});
            auto rqi = build_r_reduced(p.with_q_inverted(), k, k, v, u);
            REQUIRE(rel_defect(r21, rqi) < 1e-12);
        }
    }
}
