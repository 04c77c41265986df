#pragma once

#include <optional>
#include <random>
#include <vector>

#include "qba/linalg.hpp"
#include "qba/nested.hpp"

namespace qba {

// ---------------------------------------------------------------------------
// Transfer-matrix eigenvalue built from the vacuum values and the magnon
// dressing factors, one branch per nesting level.
// ---------------------------------------------------------------------------

inline Cplx eigenvalue_lambda1(const ChainSpec& spec, const MagnonConfig& cfg, Cplx v) {
    const auto& p = spec.p;
    Cplx q = p.q, total(0.0);
    for (int k = 1; k <= p.n; ++k) {
        Cplx branch = vacuum_eigenvalue_a(spec, cfg, k, v);
        if (k <= p.n - 1)
            for (Cplx u : cfg.roots[k])
                branch *= guarded_div(q * v - u / q, v - u, "eigenvalue dressing");
        total += branch;
    }
    return total;
}

inline Cplx eigenvalue_tilde1(const ChainSpec& spec, const MagnonConfig& cfg, Cplx v) {
    const auto& p = spec.p;
    Cplx q = p.q, total(0.0);
    for (int k = 1; k <= p.n; ++k) {
        Cplx branch = vacuum_eigenvalue_d(spec, cfg, k, v);
        if (k <= p.n - 1) {
            int kp = p.kappa - k + 1;
            for (Cplx u : cfg.roots[k])
                branch *= guarded_div(v - p.qp(2 * kp) * u, q * v - p.qp(2 * kp - 1) * u, "eigenvalue dressing");
        }
        total += branch;
    }
    return total;
}

inline Cplx eigenvalue_total(const ChainSpec& spec, const MagnonConfig& cfg, Cplx v) {
    return eigenvalue_lambda1(spec, cfg, v) + eigenvalue_tilde1(spec, cfg, v);
}

// ---------------------------------------------------------------------------
// Residue form of the Bethe conditions: clear the simple pole of the branch
// sum at each root analytically and return the cleared value.
// ---------------------------------------------------------------------------

namespace detail {

// One multiplicative factor (alpha v - beta u)/(v - u) attached to a root u;
// only factors whose denominator vanishes at the root itself produce
// residue contributions.
struct DressFactor {
    Cplx alpha, beta, u;
    Cplx pole;  // denominator zero location (= u for all root-pole factors)
    Cplx den_shift{1.0};  // denominator is (v - den_shift * u)
    Cplx value(Cplx v) const { return (alpha * v - beta * u) / (v - den_shift * u); }
    Cplx cleared(Cplx at) const { return alpha * at - beta * u; }  // lim (v-pole)*value
};

struct Branch {
    int weight_index;  // 1..2n
    std::vector<DressFactor> factors;
};

inline void push_root_factor(Branch& b, Cplx alpha, Cplx beta, Cplx u) {
    b.factors.push_back({alpha, beta, u, u, Cplx(1.0)});
}
inline void push_shifted_factor(Branch& b, Cplx alpha, Cplx beta, Cplx u, Cplx shift) {
    b.factors.push_back({alpha, beta * shift, u, shift * u, shift});
}

// Branch decomposition of the two eigenvalue families.
inline std::vector<Branch> lambda_branches(const ChainSpec& spec, const MagnonConfig& cfg, bool tilde) {
    const auto& p = spec.p;
    Cplx q = p.q;
    std::vector<Branch> out;
    for (int k = 1; k <= p.n; ++k) {
        Branch b;
        b.weight_index = tilde ? 2 * p.n - k + 1 : k;
        if (k >= 2) {
            int kp = p.kappa - k + 1;
            for (Cplx u : cfg.roots[k - 1]) {
                if (!tilde)
                    push_root_factor(b, Cplx(1.0) / q, q, u);
                else
                    push_shifted_factor(b, q, p.qp(2 * kp - 1) / p.qp(2 * kp), u, p.qp(2 * kp));
            }
        }
        if (k == p.n - 1)
            for (Cplx u : cfg.roots[0]) {
                if (!tilde)
                    push_root_factor(b, qpow(q, p.theta_prime), qpow(q, -p.theta_prime), u);
                else
                    push_root_factor(b, qpow(q, -p.theta_prime), qpow(q, p.theta_prime), u);
            }
        if (k == p.n)
            for (Cplx u : cfg.roots[0]) {
                if (!tilde)
                    push_root_factor(b, qpow(q, 2 - p.theta_prime), qpow(q, p.theta_prime - 2), u);
                else
                    push_root_factor(b, qpow(q, p.theta_prime - 2), qpow(q, 2 - p.theta_prime), u);
            }
        if (k <= p.n - 1) {
            // creation dressing over the branch's own level; the second form
            // is (v - q^{2k'} u)/(q v - q^{2k'-1} u) rewritten with a monic
            // denominator
            for (Cplx u : cfg.roots[k]) {
                if (!tilde)
                    push_root_factor(b, q, Cplx(1.0) / q, u);
                else {
                    int kp = p.kappa - k + 1;
                    push_shifted_factor(b, Cplx(1.0) / q, q, u, p.qp(2 * kp - 2));
                }
            }
        }
        out.push_back(std::move(b));
    }
    return out;
}

inline Cplx branch_residue_at(const ChainSpec& spec, const Branch& b, Cplx root) {
    // exactly one factor of the branch may carry the pole; clear it
    int hit = -1;
    for (size_t t = 0; t < b.factors.size(); ++t)
        if (std::abs(b.factors[t].pole - root) < 1e-9 * std::max(1.0, std::abs(root))) {
            if (hit >= 0) throw SingularParameter("double pole in residue evaluation");
            hit = static_cast<int>(t);
        }
    if (hit < 0) return Cplx(0.0);
    Cplx val = weight_product(spec, b.weight_index, root);
    for (size_t t = 0; t < b.factors.size(); ++t)
        val *= (static_cast<int>(t) == hit) ? b.factors[t].cleared(root) : b.factors[t].value(root);
    return val;
}

}  // namespace detail

struct BetheDefect {
    int level;  // 0 for the top-level roots, 1..n-1 for the inner levels
    int index;
    Cplx value;
};

// Residue-form defects: the cleared residues of the level-one eigenvalue at
// the inner roots and of the full eigenvalue at the level-0 roots.
inline std::vector<BetheDefect> bethe_residuals_residue(const ChainSpec& spec, const MagnonConfig& cfg) {
    std::vector<BetheDefect> out;
    auto lam = detail::lambda_branches(spec, cfg, false);
    auto til = detail::lambda_branches(spec, cfg, true);
    for (int k = 1; k <= spec.p.n - 1; ++k)
        for (int j = 0; j < cfg.m[k]; ++j) {
            Cplx res(0.0);
            for (const auto& b : lam) res += detail::branch_residue_at(spec, b, cfg.roots[k][j]);
            out.push_back({k, j, res});
        }
    for (int j = 0; j < cfg.m[0]; ++j) {
        Cplx res(0.0);
        for (const auto& b : lam) res += detail::branch_residue_at(spec, b, cfg.roots[0][j]);
        for (const auto& b : til) res += detail::branch_residue_at(spec, b, cfg.roots[0][j]);
        out.push_back({0, j, res});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Explicit Bethe systems. Equations are stored as two factor lists so the
// same structure serves defect evaluation and the Newton solver with exact
// gradients. Each factor is linear in at most two root variables.
// ---------------------------------------------------------------------------

namespace detail {

struct LinTerm {
    Cplx cp{0.0}, cq{0.0}, c0{0.0};  // cp*x_p + cq*x_q + c0
    int p = -1, q = -1;

    Cplx value(const std::vector<Cplx>& x) const {
        Cplx v = c0;
        if (p >= 0) v += cp * x[p];
        if (q >= 0) v += cq * x[q];
        return v;
    }
};

struct Equation {
    int level, index;                // metadata
    std::vector<LinTerm> lhs_num, lhs_den, rhs_num, rhs_den;
};

struct ProductEval {
    Cplx value{1.0};
    std::vector<Cplx> grad;

    explicit ProductEval(int nvars) : grad(nvars, Cplx(0.0)) {}
    void mul(const LinTerm& t, const std::vector<Cplx>& x) {
        Cplx tv = t.value(x);
        for (auto& g : grad) g *= tv;
        if (t.p >= 0) grad[t.p] += value * t.cp;
        if (t.q >= 0) grad[t.q] += value * t.cq;
        value *= tv;
    }
};

// flattened variable layout: level 0 roots first, then level 1, ...
inline int var_index(const std::vector<int>& m, int level, int j) {
    int off = 0;
    for (int l = 0; l < level; ++l) off += m[l];
    return off + j;
}

// Builds the explicit Bethe system. Level labels: 1..n-1 are the inner
// levels, 0 the top level. Coupling products over a lower level are present
// only when that level's descending chain exists (k >= 2); this drops the
// spurious couplings at small rank.
inline std::vector<Equation> explicit_equations(const ChainSpec& spec, const std::vector<int>& m) {
    const auto& p = spec.p;
    int n = p.n;
    Cplx q = p.q;
    std::vector<Equation> eqs;

    auto lambda_ratio = [&](Equation& e, int num_j, int den_j, int var) {
        // prod_i lambda_{num_j} / lambda_{den_j} as linear factors in x_var
        for (int i = 0; i < spec.ell(); ++i) {
            Cplx c = spec.sites[i].c;
            int s = spec.sites[i].s;
            auto weight = [&](int jj) -> std::pair<LinTerm, LinTerm> {
                // numerator and denominator of lambda_jj at site i
                LinTerm nu, de;
                nu.p = de.p = var;
                int N = 2 * n, kap = p.kappa;
                if (p.theta == 1) {
                    if (jj == 1) {
                        nu.cp = -qpow(q, -s), nu.c0 = qpow(q, s) * c;
                        de.cp = -1.0, de.c0 = c;
                    } else if (jj == N) {
                        nu.cp = -qpow(q, -2 * kap + 1), nu.c0 = qpow(q, -1) * c;
                        de.cp = -qpow(q, -2 * kap - s + 1), de.c0 = qpow(q, s - 1) * c;
                    } else {
                        nu.p = de.p = -1;
                        nu.c0 = de.c0 = 1.0;
                    }
                } else {
                    if (jj <= s) {
                        nu.cp = -qpow(q, -1), nu.c0 = q * c;
                        de.cp = -1.0, de.c0 = c;
                    } else if (jj >= N - s + 1) {
                        nu.cp = -qpow(q, -2 * kap + s), nu.c0 = qpow(q, -s) * c;
                        de.cp = -qpow(q, -2 * kap + s - 1), de.c0 = qpow(q, -s + 1) * c;
                    } else {
                        nu.p = de.p = -1;
                        nu.c0 = de.c0 = 1.0;
                    }
                }
                return {nu, de};
            };
            auto [na, da] = weight(num_j);
            auto [nb, db] = weight(den_j);
            e.lhs_num.push_back(na);
            e.lhs_den.push_back(da);
            e.lhs_num.push_back(db);
            e.lhs_den.push_back(nb);
        }
    };

    auto frac = [&](Equation& e, Cplx a, int pvar, Cplx b, int qvar, Cplx c2, int p2, Cplx d2, int q2) {
        // (a x_p - b x_q) / (c2 x_p2 - d2 x_q2) appended to the RHS
        LinTerm nu, de;
        nu.cp = a, nu.p = pvar, nu.cq = -b, nu.q = qvar;
        de.cp = c2, de.p = p2, de.cq = -d2, de.q = q2;
        e.rhs_num.push_back(nu);
        e.rhs_den.push_back(de);
    };

    // inner levels k = 1..n-1
    for (int k = 1; k <= n - 1; ++k) {
        for (int j = 0; j < m[k]; ++j) {
            Equation e;
            e.level = k;
            e.index = j;
            int vj = var_index(m, k, j);
            lambda_ratio(e, k, k + 1, vj);
            // descending coupling, present only when the level has one
            if (k >= 2)
                for (int i = 0; i < m[k - 1]; ++i) {
                    int vi = var_index(m, k - 1, i);
                    frac(e, Cplx(1.0), vj, Cplx(1.0), vi, qpow(q, -1), vj, q, vi);
                }
            // self products
            for (int i = 0; i < m[k]; ++i) {
                if (i == j) continue;
                int vi = var_index(m, k, i);
                frac(e, qpow(q, -1), vj, q, vi, q, vj, qpow(q, -1), vi);
            }
            if (k <= n - 2) {
                // ascending coupling to the next inner level
                for (int i = 0; i < m[k + 1]; ++i) {
                    int vi = var_index(m, k + 1, i);
                    frac(e, q, vj, qpow(q, -1), vi, Cplx(1.0), vj, Cplx(1.0), vi);
                }
            }
            if (k == n - 2) {
                // orthogonal chains couple the pre-top level to the top roots
                if (p.theta == 1)
                    for (int i = 0; i < m[0]; ++i) {
                        int vi = var_index(m, 0, i);
                        frac(e, q, vj, qpow(q, -1), vi, Cplx(1.0), vj, Cplx(1.0), vi);
                    }
            }
            if (k == n - 1) {
                // top-level coupling with family-dependent exponents
                Cplx a = qpow(q, 2 - p.theta_prime), b = qpow(q, p.theta_prime - 2);
                Cplx c2 = qpow(q, p.theta_prime), d2 = qpow(q, -p.theta_prime);
                for (int i = 0; i < m[0]; ++i) {
                    int vi = var_index(m, 0, i);
                    frac(e, a, vj, b, vi, c2, vj, d2, vi);
                }
            }
            eqs.push_back(std::move(e));
        }
    }

    // top level
    for (int j = 0; j < m[0]; ++j) {
        Equation e;
        e.level = 0;
        e.index = j;
        int vj = var_index(m, 0, j);
        if (p.theta == -1) {
            lambda_ratio(e, n, n + 1, vj);
            if (n >= 2)
                for (int i = 0; i < m[n - 1]; ++i) {
                    int vi = var_index(m, n - 1, i);
                    frac(e, Cplx(1.0), vj, Cplx(1.0), vi, qpow(q, -2), vj, qpow(q, 2), vi);
                }
            for (int i = 0; i < m[0]; ++i) {
                if (i == j) continue;
                int vi = var_index(m, 0, i);
                frac(e, qpow(q, -2), vj, qpow(q, 2), vi, qpow(q, 2), vj, qpow(q, -2), vi);
            }
        } else {
            lambda_ratio(e, n - 1, n + 1, vj);
            if (n >= 3)
                for (int i = 0; i < m[n - 2]; ++i) {
                    int vi = var_index(m, n - 2, i);
                    frac(e, Cplx(1.0), vj, Cplx(1.0), vi, qpow(q, -1), vj, q, vi);
                }
            for (int i = 0; i < m[0]; ++i) {
                if (i == j) continue;
                int vi = var_index(m, 0, i);
                frac(e, qpow(q, -1), vj, q, vi, q, vj, qpow(q, -1), vi);
            }
        }
        eqs.push_back(std::move(e));
    }
    return eqs;
}

inline std::vector<Cplx> flatten_roots(const MagnonConfig& cfg) {
    std::vector<Cplx> x;
    for (const auto& lvl : cfg.roots) x.insert(x.end(), lvl.begin(), lvl.end());
    return x;
}

}  // namespace detail

// Explicit-form defects LHS - RHS of each displayed equation.
inline std::vector<BetheDefect> bethe_residuals_explicit(const ChainSpec& spec, const MagnonConfig& cfg) {
    auto eqs = detail::explicit_equations(spec, cfg.m);
    auto x = detail::flatten_roots(cfg);
    std::vector<BetheDefect> out;
    for (const auto& e : eqs) {
        Cplx lhs(1.0), rhs(1.0);
        for (const auto& t : e.lhs_num) lhs *= t.value(x);
        for (const auto& t : e.lhs_den) lhs /= t.value(x);
        for (const auto& t : e.rhs_num) rhs *= t.value(x);
        for (const auto& t : e.rhs_den) rhs /= t.value(x);
        out.push_back({e.level, e.index, lhs - rhs});
    }
    return out;
}

// Dynkin-uniform form after the substitution u -> q^{dt_k} z. Nodes 1..n-1
// carry the inner levels, node n the top level.
inline std::vector<BetheDefect> bethe_residuals_dynkin(const ChainSpec& spec, const MagnonConfig& cfg) {
    const auto& p = spec.p;
    int n = p.n;
    Cplx q = p.q;
    bool symplectic = (p.theta == -1);
    std::vector<int> d(n + 1, 1);
    if (symplectic) d[n] = 2;
    std::vector<int> dt(n + 1, 0);
    for (int k = 1; k <= n; ++k) dt[k] = dt[k - 1] + d[k];
    if (!symplectic) dt[n] = n - 1;  // branch node shares the shift of node n-1
    auto cartan = [&](int a, int b) -> int {
        if (a == b) return 2;
        if (symplectic) {
            if (a == n - 1 && b == n) return -2;
            if (a == n && b == n - 1) return -1;
            return (std::abs(a - b) == 1) ? -1 : 0;
        }
        if ((a == n && b == n - 2) || (a == n - 2 && b == n)) return -1;
        if ((a == n && b == n - 1) || (a == n - 1 && b == n)) return 0;
        if (a == n || b == n) return 0;
        return (std::abs(a - b) == 1) ? -1 : 0;
    };
    auto level_of_node = [&](int node) { return node == n ? 0 : node; };
    auto z = [&](int node, int i) { return cfg.roots[level_of_node(node)][i] / qpow(q, dt[node]); };

    std::vector<BetheDefect> out;
    for (int node = 1; node <= n; ++node) {
        int lev = level_of_node(node);
        for (int j = 0; j < cfg.m[lev]; ++j) {
            Cplx lhs(1.0);
            Cplx at = cfg.roots[lev][j];
            int wnum = node, wden = node + 1;
            if (!symplectic && node == n) wnum = n - 1;  // top weights coincide for n >= 3
            if (node == n) wden = n + 1;
            for (int i = 0; i < spec.ell(); ++i)
                lhs *= weight_lambda(spec, i, wnum, at) / weight_lambda(spec, i, wden, at);
            Cplx rhs(-1.0);
            for (int l = 1; l <= n; ++l) {
                int a = d[node] * cartan(node, l);
                if (a == 0) continue;
                int ll = level_of_node(l);
                for (int i = 0; i < cfg.m[ll]; ++i) {
                    if (l == node && i == j) {
                        rhs *= Cplx(-1.0);  // the self factor evaluates to -1
                        continue;
                    }
                    rhs *= guarded_div(z(node, j) - qpow(q, a) * z(l, i),
                                       qpow(q, a) * z(node, j) - z(l, i), "dynkin form");
                }
            }
            out.push_back({lev, j, lhs - rhs});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Newton solver on the cleared-denominator polynomial form.
// ---------------------------------------------------------------------------

struct SolveOptions {
    unsigned seed = 7;
    int starts = 160;
    int max_iter = 60;
    double tol = 1e-11;
    int max_solutions = 64;
    std::optional<std::vector<Cplx>> fixed_level0;  // hold the top-level roots fixed
};

struct BetheRoots {
    MagnonConfig cfg;
    double max_defect = 0.0;
    bool converged = false;
};

struct SolveResult {
    std::vector<BetheRoots> solutions;
    int starts_tried = 0;
    int converged_count = 0;
};

namespace detail {

inline void eval_system(const std::vector<Equation>& eqs, const std::vector<Cplx>& x,
                        Vector* f, Matrix* jac) {
    int ne = static_cast<int>(eqs.size());
    int nv = static_cast<int>(x.size());
    if (f) f->resize(ne);
    if (jac) jac->resize(ne, nv);
    for (int r = 0; r < ne; ++r) {
        const auto& e = eqs[r];
        ProductEval a(nv), b(nv);
        for (const auto& t : e.lhs_num) a.mul(t, x);
        for (const auto& t : e.rhs_den) a.mul(t, x);
        for (const auto& t : e.rhs_num) b.mul(t, x);
        for (const auto& t : e.lhs_den) b.mul(t, x);
        if (f) (*f)(r) = a.value - b.value;
        if (jac)
            for (int c = 0; c < nv; ++c) (*jac)(r, c) = a.grad[c] - b.grad[c];
    }
}

inline double rational_defect_scale(const std::vector<Equation>& eqs, const std::vector<Cplx>& x) {
    double worst = 0.0;
    for (const auto& e : eqs) {
        Cplx lhs(1.0), rhs(1.0);
        for (const auto& t : e.lhs_num) lhs *= t.value(x);
        for (const auto& t : e.lhs_den) {
            Cplx d = t.value(x);
            if (std::abs(d) < 1e-13) return 1e9;
            lhs /= d;
        }
        for (const auto& t : e.rhs_num) rhs *= t.value(x);
        for (const auto& t : e.rhs_den) {
            Cplx d = t.value(x);
            if (std::abs(d) < 1e-13) return 1e9;
            rhs /= d;
        }
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::min(std::abs(lhs), std::abs(rhs))));
    }
    return worst;
}

inline std::vector<Cplx> canonical_roots(std::vector<Cplx> v) {
    std::sort(v.begin(), v.end(), [](Cplx a, Cplx b) {
        if (std::abs(a.real() - b.real()) > 1e-10 * std::max(1.0, std::abs(a))) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return v;
}

}  // namespace detail

inline SolveResult solve_bethe(const ChainSpec& spec, const std::vector<int>& m, const SolveOptions& opts = {}) {
    const auto& p = spec.p;
    if (static_cast<int>(m.size()) != p.n) throw InvalidConfig("solve_bethe: need one magnon number per level");
    auto eqs_all = detail::explicit_equations(spec, m);

    std::vector<detail::Equation> eqs;
    int nv_all = 0;
    for (int x : m) nv_all += x;
    std::vector<Cplx> fixed;
    int nfixed = 0;
    if (opts.fixed_level0) {
        fixed = *opts.fixed_level0;
        nfixed = static_cast<int>(fixed.size());
        if (nfixed != m[0]) throw InvalidConfig("solve_bethe: fixed level-0 root count mismatch");
        for (const auto& e : eqs_all)
            if (e.level != 0) eqs.push_back(e);
    } else {
        eqs = eqs_all;
    }
    int nv = nv_all;

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Cplx> seed_centers;
    for (const auto& s : spec.sites)
        for (int e : {1, -1, 3, -3}) seed_centers.push_back(s.c * p.qp(e));

    SolveResult result;
    for (int start = 0; start < opts.starts; ++start) {
        ++result.starts_tried;
        std::vector<Cplx> x(nv);
        for (int t = 0; t < nv; ++t) {
            Cplx c = seed_centers[static_cast<size_t>(unif(rng) * seed_centers.size()) % seed_centers.size()];
            double r = 0.4 + 1.2 * unif(rng);
            double ph = 6.2831853071795864769 * unif(rng);
            x[t] = c * (Cplx(1.0) + 0.6 * Cplx(r * std::cos(ph), r * std::sin(ph)));
        }
        if (opts.fixed_level0)
            for (int t = 0; t < nfixed; ++t) x[t] = fixed[t];

        bool ok = false;
        Vector f;
        Matrix jac;
        for (int it = 0; it < opts.max_iter; ++it) {
            detail::eval_system(eqs, x, &f, &jac);
            double fn = f.norm();
            if (fn < 1e-13) {
                ok = true;
                break;
            }
            Matrix j = jac;
            if (opts.fixed_level0)
                for (int t = 0; t < nfixed; ++t) j.col(t).setZero();
            // least-squares step tolerates rectangular and rank-deficient systems
            Vector step = j.completeOrthogonalDecomposition().solve(f);
            if (!step.allFinite()) break;
            double damp = 1.0;
            for (int bt = 0; bt < 24; ++bt) {
                std::vector<Cplx> xn = x;
                for (int t = 0; t < nv; ++t) xn[t] -= damp * step(t);
                if (opts.fixed_level0)
                    for (int t = 0; t < nfixed; ++t) xn[t] = fixed[t];
                Vector fn2;
                detail::eval_system(eqs, xn, &fn2, nullptr);
                if (fn2.norm() < fn || fn < 1e-12) {
                    x = xn;
                    break;
                }
                damp *= 0.5;
                if (bt == 23) it = opts.max_iter;  // stuck
            }
        }
        if (!ok) {
            detail::eval_system(eqs, x, &f, nullptr);
            ok = f.norm() < 1e-12;
        }
        if (!ok) continue;
        double rat = detail::rational_defect_scale(eqs, x);
        if (rat > opts.tol) continue;

        // roots must stay away from zero and from collisions within a level
        bool valid = true;
        MagnonConfig cfg;
        cfg.m = m;
        cfg.roots.resize(m.size());
        int at = 0;
        for (size_t lvl = 0; lvl < m.size(); ++lvl) {
            for (int j = 0; j < m[lvl]; ++j) cfg.roots[lvl].push_back(x[at++]);
            for (int a = 0; a < m[lvl] && valid; ++a) {
                if (std::abs(cfg.roots[lvl][a]) < 1e-8) valid = false;
                for (int b2 = a + 1; b2 < m[lvl]; ++b2)
                    if (std::abs(cfg.roots[lvl][a] - cfg.roots[lvl][b2]) <
                        1e-8 * std::max(1.0, std::abs(cfg.roots[lvl][a])))
                        valid = false;
            }
        }
        if (!valid) continue;
        ++result.converged_count;

        // deduplicate up to within-level permutations
        bool dup = false;
        for (const auto& sol : result.solutions) {
            bool same = true;
            for (size_t lvl = 0; lvl < m.size() && same; ++lvl) {
                auto a = detail::canonical_roots(sol.cfg.roots[lvl]);
                auto b2 = detail::canonical_roots(cfg.roots[lvl]);
                for (size_t t = 0; t < a.size(); ++t)
                    if (std::abs(a[t] - b2[t]) > 1e-8 * std::max(1.0, std::abs(a[t]))) same = false;
            }
            if (same) {
                dup = true;
                break;
            }
        }
        if (dup) continue;
        result.solutions.push_back({cfg, rat, true});
        if (static_cast<int>(result.solutions.size()) >= opts.max_solutions) break;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Bethe vectors: recursive construction through the creation operators and
// the closed trace formula.
// ---------------------------------------------------------------------------

namespace detail {

// Level-one Bethe vector: the nested creation entries applied to the top
// vacuum, with the level-(k+1) group legs contracted against the dual slots.
inline StateVec level1_vector(const ChainSpec& spec, const MagnonConfig& cfg) {
    const auto& p = spec.p;
    int n = p.n;
    StateVec phi = nested_vacuum(spec, cfg, std::max(1, n - 1));
    auto ls_top = level_space(spec, cfg, std::max(1, n - 1));
    // current leg list starts as the level-(n-1) space
    for (int k = n - 1; k >= 1; --k) {
        // legs of the level-k space plus the still-uncontracted group legs
        auto ls_k = level_space(spec, cfg, k);
        int group_dim = n - k;  // dimension of the level-(k+1) group legs
        for (int i = cfg.m[k] - 1; i >= 0; --i) {
            TensorOp ak = build_Ak(spec, cfg, k, cfg.roots[k][i]);
            // remaining uncontracted group legs sit directly after the
            // level-k legs: indices 0..i of the level-(k+1) group
            StateVec acc;
            bool first = true;
            for (int j = 0; j < group_dim; ++j) {
                StateVec picked;
                if (group_dim == 1) {
                    // the top group legs are one-dimensional and not stored
                    picked = phi;
                } else {
                    Vector ej = Vector::Zero(group_dim);
                    ej(j) = 1.0;
                    int leg = static_cast<int>(ls_k.dims.size()) + i;
                    picked = contract_leg(phi, leg, ej);
                }
                TensorOp entry = aux_block(ak, 0, 1 + j);
                std::vector<int> legs(ls_k.dims.size());
                for (size_t t = 0; t < ls_k.dims.size(); ++t) legs[t] = static_cast<int>(t);
                StateVec term = apply_on_legs(entry, legs, picked);
                if (first) {
                    acc = term;
                    first = false;
                } else {
                    acc.v += term.v;
                }
            }
            phi = acc;
        }
    }
    return phi;  // legs: level_space(1)
}

}  // namespace detail

// Recursive Bethe vector in the ambient chain space.
inline StateVec bethe_vector_recursive(const ChainSpec& spec, const MagnonConfig& cfg) {
    const auto& p = spec.p;
    int n = p.n;
    StateVec phi = detail::level1_vector(spec, cfg);
    // embed the reduced chain legs into the ambient ones
    {
        TensorOp inc({p.N()}, {n});
        for (int i = 0; i < n; ++i) inc.mat(i, i) = 1.0;
        TensorOp full = TensorOp::scalar(1.0);
        for (int t = 0; t < spec.total_legs(); ++t) full = kron(full, inc);
        // apply leg-wise inclusion on the chain part
        Dims nd = spec.ambient_dims();
        for (size_t t = spec.reduced_dims().size(); t < phi.dims.size(); ++t) nd.push_back(phi.dims[t]);
        long wdim = 1;
        for (size_t t = spec.reduced_dims().size(); t < phi.dims.size(); ++t) wdim *= phi.dims[t];
        Vector out = Vector::Zero(dim_product(nd));
        long rdim = dim_product(spec.reduced_dims());
        for (long r = 0; r < full.rows(); ++r)
            for (long c = 0; c < rdim; ++c) {
                if (full.mat(r, c) == Cplx(0.0)) continue;
                out.segment(r * wdim, wdim) += full.mat(r, c) * phi.v.segment(c * wdim, wdim);
            }
        phi = StateVec(nd, out);
    }
    // level-0 creation operators eat the paired level-one legs
    int m0 = cfg.m[0];
    for (int i = m0 - 1; i >= 0; --i) {
        TensorOp T = build_T(spec, cfg.roots[0][i]);
        StateVec acc;
        bool first = true;
        int chain = spec.total_legs();
        for (int j0 = 0; j0 < n; ++j0)
            for (int k0 = 0; k0 < n; ++k0) {
                Vector ek = Vector::Zero(n), ej = Vector::Zero(n);
                ek(k0) = 1.0;
                ej(j0) = 1.0;
                // legs: chain, then tl group (i+1 left), then a group (i+1 left)
                StateVec s1 = contract_leg(phi, chain + (i + 1) + i, ej);  // a-leg i
                StateVec s2 = contract_leg(s1, chain + i, ek);             // tl-leg i
                TensorOp entry = aux_block(T, n - 1 - j0, n + k0);
                std::vector<int> legs(chain);
                for (int t = 0; t < chain; ++t) legs[t] = t;
                StateVec term = apply_on_legs(entry, legs, s2);
                term.v *= qpow(p.q, -(j0 + 1));
                if (first) {
                    acc = term;
                    first = false;
                } else {
                    acc.v += term.v;
                }
            }
        phi = acc;
    }
    return phi;
}

// Closed trace-formula Bethe vector in the ambient chain space.
inline StateVec bethe_vector_trace(const ChainSpec& spec, const MagnonConfig& cfg) {
    const auto& p = spec.p;
    int n = p.n, N = p.N();
    int total_m = cfg.total();
    auto amb = ambient_full(spec);

    // leg layout: one full-size leg per magnon (level 0 first), then chain
    Dims all;
    std::vector<std::vector<int>> wleg(p.n);
    for (int k = 0; k < p.n; ++k)
        for (int i = 0; i < cfg.m[k]; ++i) {
            wleg[k].push_back(static_cast<int>(all.size()));
            all.push_back(N);
        }
    std::vector<int> chain_legs;
    for (int t = 0; t < spec.total_legs(); ++t) {
        chain_legs.push_back(static_cast<int>(all.size()));
        all.push_back(N);
    }

    TensorOp acc = TensorOp::identity(all);
    auto mul = [&](const TensorOp& op, const std::vector<int>& legs) { acc = acc * embed(op, legs, all); };

    auto pqi = p.with_q_inverted();
    for (int k = 1; k <= n - 1; ++k)
        for (int i = 0; i < cfg.m[k]; ++i)
            for (int j = 0; j < cfg.m[0]; ++j)
                mul(build_r(pqi, cfg.roots[k][i], p.qp(2 * p.theta) * cfg.roots[0][j]),
                    {wleg[k][i], wleg[0][j]});
    for (int i = 0; i < cfg.m[0]; ++i) {
        TensorOp t = transpose_omega_full(build_T(spec, cfg.roots[0][i]), 0, p);
        std::vector<int> legs{wleg[0][i]};
        legs.insert(legs.end(), chain_legs.begin(), chain_legs.end());
        mul(t, legs);
    }
    for (int k = 1; k <= n - 1; ++k)
        for (int i = 0; i < cfg.m[k]; ++i)
            for (int j = 0; j < cfg.m[0]; ++j)
                mul(build_r(p, cfg.roots[k][i], p.qp(-2 * p.kappa) * cfg.roots[0][j]),
                    {wleg[k][i], wleg[0][j]});
    for (int k = 1; k <= n - 1; ++k)
        for (int i = 0; i < cfg.m[k]; ++i) {
            TensorOp t = build_T(spec, cfg.roots[k][i]);
            std::vector<int> legs{wleg[k][i]};
            legs.insert(legs.end(), chain_legs.begin(), chain_legs.end());
            mul(t, legs);
        }
    for (int k = 2; k <= n - 1; ++k)
        for (int l = 1; l <= k - 1; ++l)
            for (int i = 0; i < cfg.m[k]; ++i)
                for (int j = cfg.m[l] - 1; j >= 0; --j)
                    mul(build_r(p, cfg.roots[k][i], cfg.roots[l][j]), {wleg[k][i], wleg[l][j]});

    // matrix insertions on the traced legs
    TensorOp fmat({N}, {N});
    if (p.theta == 1) {
        fmat.mat(n + 1, n - 1) = qpow(p.q, -1);
        fmat.mat(n, n - 2) = -p.q;
    } else {
        fmat.mat(n, n - 1) = -p.q;
    }
    for (int i = 0; i < cfg.m[0]; ++i) mul(fmat, {wleg[0][i]});
    for (int k = 1; k <= n - 1; ++k) {
        TensorOp ek({N}, {N});
        ek.mat(k, k - 1) = 1.0;  // e_{k+1,k} one-based
        for (int i = 0; i < cfg.m[k]; ++i) mul(ek, {wleg[k][i]});
    }

    std::vector<int> traced;
    for (int t = 0; t < total_m; ++t) traced.push_back(t);
    TensorOp op = total_m ? partial_trace(acc, traced) : acc;
    return apply(op, amb.eta);
}

// ---------------------------------------------------------------------------
// End-to-end verification against the transfer matrix.
// ---------------------------------------------------------------------------

struct EigenReport {
    std::vector<Cplx> samples;
    std::vector<double> residuals;    // ||tau(v) Phi - Lambda(v) Phi|| / ||Phi||
    std::vector<double> oracle_gaps;  // distance of Lambda(v) to the nearest spectrum point
    double phi_norm = 0.0;
    bool zero_vector = false;
};

inline EigenReport verify_eigenvector(const ChainSpec& spec, const MagnonConfig& cfg,
                                      const std::vector<Cplx>& samples, bool use_trace_form = true,
                                      long dim_cap = default_dim_cap) {
    EigenReport rep;
    rep.samples = samples;
    StateVec phi = use_trace_form ? bethe_vector_trace(spec, cfg) : bethe_vector_recursive(spec, cfg);
    rep.phi_norm = phi.norm();
    if (rep.phi_norm < 1e-12) {
        rep.zero_vector = true;
        return rep;
    }
    for (Cplx v : samples) {
        TensorOp tau = transfer_tau(spec, v);
        Cplx lam = eigenvalue_total(spec, cfg, v);
        double res = (tau.mat * phi.v - lam * phi.v).norm() / rep.phi_norm;
        rep.residuals.push_back(res);
        auto eig = eig_general(tau, dim_cap);
        double gap = 1e300, scale = 1.0;
        for (const auto& pr : eig.pairs) {
            gap = std::min(gap, std::abs(pr.value - lam));
            scale = std::max(scale, std::abs(pr.value));
        }
        rep.oracle_gaps.push_back(gap / scale);
    }
    return rep;
}

}  // namespace qba
