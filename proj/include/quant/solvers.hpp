#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "quant/errors.hpp"
#include "quant/types.hpp"

namespace quant {

// ---------------------------------------------------------------------------
// Quadratic minimisation over the probability simplex (Frank-Wolfe).
// ---------------------------------------------------------------------------

struct SimplexWeightSolution {
    Vector w;
    double phi_squared = 0.0;
    long fw_iterations = 0;
    double duality_gap = 0.0;
};

namespace detail {

struct FwCoreResult {
    Vector w;
    double value = 0.0;  // w'Aw + b'w at the final iterate
    double gap = 0.0;    // Frank-Wolfe duality gap, value - gap <= true minimum
    long iterations = 0;
};

// Minimise F(w) = w'Aw + b'w over the simplex. A is accessed by column so
// callers can present sub-blocks or shifted matrices without copying.
// Plain Frank-Wolfe steps are mixed with away steps (both with the exact
// quadratic line search), which keeps F monotone; a periodic full
// correction re-solves the quadratic exactly on the current support, which
// kills the zigzag tail. The reported gap is the plain FW certificate.
template <typename ColFn>
FwCoreResult fw_min_quadratic_simplex(Index n, ColFn&& acol, const Vector& b, long max_iter,
                                      double tol, std::vector<double>* value_trace = nullptr) {
    FwCoreResult res;
    Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
    Vector q(n);  // q = A w
    Vector col(n);
    auto refresh = [&] {
        q.setZero();
        for (Index j = 0; j < n; ++j) {
            if (w[j] == 0.0) continue;
            acol(j, col);
            q += w[j] * col;
        }
    };
    refresh();

    auto value_of = [&] { return w.dot(q) + b.dot(w); };
    if (value_trace) value_trace->push_back(value_of());

    // Exact minimisation over the face spanned by the current support via
    // an equality-KKT solve, dropping negative coordinates until feasible.
    // Accepted only when it strictly improves F, so monotonicity holds.
    auto full_correction = [&] {
        std::vector<Index> supp;
        for (Index j = 0; j < n; ++j)
            if (w[j] > 0.0) supp.push_back(j);
        if (supp.size() < 2 || supp.size() > 400) return;
        Matrix asub(static_cast<Index>(supp.size()), static_cast<Index>(supp.size()));
        for (std::size_t a = 0; a < supp.size(); ++a) {
            acol(supp[a], col);
            for (std::size_t r = 0; r < supp.size(); ++r)
                asub(static_cast<Index>(r), static_cast<Index>(a)) = col[supp[r]];
        }
        const double before = value_of();
        while (supp.size() >= 2) {
            const Index k = static_cast<Index>(supp.size());
            Matrix kkt = Matrix::Zero(k + 1, k + 1);
            Vector rhs = Vector::Zero(k + 1);
            for (Index a = 0; a < k; ++a) {
                for (Index r = 0; r < k; ++r) kkt(a, r) = 2.0 * asub(a, r);
                kkt(a, k) = 1.0;
                kkt(k, a) = 1.0;
                rhs[a] = -b[supp[static_cast<std::size_t>(a)]];
            }
            rhs[k] = 1.0;
            const Vector sol = kkt.fullPivLu().solve(rhs);
            if (!sol.allFinite()) return;
            Index worst = -1;
            double worst_val = -1e-14;
            for (Index a = 0; a < k; ++a)
                if (sol[a] < worst_val) {
                    worst_val = sol[a];
                    worst = a;
                }
            if (worst < 0) {
                Vector cand = Vector::Zero(n);
                for (Index a = 0; a < k; ++a)
                    cand[supp[static_cast<std::size_t>(a)]] = std::max(0.0, sol[a]);
                const double total = cand.sum();
                if (!(total > 0.0)) return;
                cand /= total;
                Vector cand_q = Vector::Zero(n);
                for (Index j = 0; j < n; ++j) {
                    if (cand[j] == 0.0) continue;
                    acol(j, col);
                    cand_q += cand[j] * col;
                }
                const double cand_val = cand.dot(cand_q) + b.dot(cand);
                if (cand_val < before) {
                    w = cand;
                    q = cand_q;
                }
                return;
            }
            // drop the most negative coordinate and re-solve
            supp.erase(supp.begin() + worst);
            Matrix shrunk(k - 1, k - 1);
            for (Index a = 0, aa = 0; a < k; ++a) {
                if (a == worst) continue;
                for (Index r = 0, rr = 0; r < k; ++r) {
                    if (r == worst) continue;
                    shrunk(rr++, aa) = asub(r, a);
                }
                ++aa;
            }
            asub = shrunk;
        }
    };

    long it = 0;
    double gap = 0.0;
    while (it < max_iter) {
        // grad = 2q + b, evaluated coordinatewise below.
        Index fw = 0, away = -1;
        double gmin = std::numeric_limits<double>::infinity();
        double gmax = -std::numeric_limits<double>::infinity();
        double gdotw = 0.0;
        for (Index j = 0; j < n; ++j) {
            const double gj = 2.0 * q[j] + b[j];
            gdotw += gj * w[j];
            if (gj < gmin) {
                gmin = gj;
                fw = j;
            }
            if (w[j] > 0.0 && gj > gmax) {
                gmax = gj;
                away = j;
            }
        }
        gap = gdotw - gmin;
        if (gap <= tol) {
            refresh();  // confirm with a drift-free gradient
            double g2min = std::numeric_limits<double>::infinity();
            double g2dotw = 0.0;
            for (Index j = 0; j < n; ++j) {
                const double gj = 2.0 * q[j] + b[j];
                g2dotw += gj * w[j];
                g2min = std::min(g2min, gj);
            }
            gap = g2dotw - g2min;
            if (gap <= tol) break;
            continue;
        }

        const double gap_away = away >= 0 ? gmax - gdotw : -1.0;
        if (gap >= gap_away) {
            // d = e_fw - w, max step 1.
            acol(fw, col);
            const double gd = gmin - gdotw;
            const double dad = col[fw] - 2.0 * col.dot(w) + w.dot(q);
            double step = 1.0;
            if (dad > 0.0) step = std::min(1.0, -gd / (2.0 * dad));
            if (step <= 0.0) break;  // stationary along the best direction
            w *= (1.0 - step);
            w[fw] += step;
            q = (1.0 - step) * q + step * col;
        } else {
            // d = w - e_away, max step w_a / (1 - w_a).
            acol(away, col);
            const double gd = gdotw - gmax;
            const double dad = w.dot(q) - 2.0 * col.dot(w) + col[away];
            const double wa = w[away];
            if (wa >= 1.0) break;
            const double step_max = wa / (1.0 - wa);
            double step = step_max;
            if (dad > 0.0) step = std::min(step_max, -gd / (2.0 * dad));
            if (step <= 0.0) break;
            w *= (1.0 + step);
            w[away] -= step;
            if (step == step_max) w[away] = 0.0;
            q = (1.0 + step) * q - step * col;
        }
        ++it;
        if ((it & 63) == 0) full_correction();
        if ((it & 1023) == 0) refresh();
        if (value_trace) value_trace->push_back(value_of());
    }

    // Final report from a clean state: renormalise drift, recompute q.
    for (Index j = 0; j < n; ++j)
        if (w[j] < 0.0) w[j] = 0.0;
    w /= w.sum();
    refresh();
    double gmin = std::numeric_limits<double>::infinity();
    double gdotw = 0.0;
    for (Index j = 0; j < n; ++j) {
        const double gj = 2.0 * q[j] + b[j];
        gdotw += gj * w[j];
        gmin = std::min(gmin, gj);
    }
    res.w = w;
    res.value = value_of();
    res.gap = std::max(0.0, gdotw - gmin);
    res.iterations = it;
    return res;
}

}  // namespace detail

// Minimise w'Kw - 2w'h + c2 over the probability simplex. The optimum is
// the squared discrepancy of the best convex reweighting of the candidates.
inline SimplexWeightSolution solve_simplex_qp(const Matrix& K, const Vector& h, double c2,
                                              long max_iter = 100000, double tol = 1e-8,
                                              std::vector<double>* value_trace = nullptr) {
    const Index n = K.rows();
    if (n == 0 || K.cols() != n || h.size() != n)
        throw DataError("solve_simplex_qp: shape mismatch");
    if (!K.allFinite() || !h.allFinite() || !std::isfinite(c2))
        throw DataError("solve_simplex_qp: non-finite input");
    Vector b = -2.0 * h;
    auto acol = [&](Index j, Vector& col) { col = K.col(j); };
    auto core = detail::fw_min_quadratic_simplex(n, acol, b, max_iter, tol, value_trace);
    SimplexWeightSolution out;
    out.w = core.w;
    out.phi_squared = core.value + c2;
    if (out.phi_squared < 0.0 && out.phi_squared > -1e-10) out.phi_squared = 0.0;
    out.fw_iterations = core.iterations;
    out.duality_gap = core.gap;
    return out;
}

// ---------------------------------------------------------------------------
// Cardinality-constrained integer quadratic programme
//   min  1/2 v'Kv + c'v   s.t.  1'v = s,  v in N_0^n  (or {0,1}^n).
// ---------------------------------------------------------------------------

struct IqpProblem {
    Matrix K;
    Vector c;
    Index s = 1;
    bool binary_mode = false;

    Index n() const { return c.size(); }

    void validate() const {
        const Index nn = n();
        if (nn == 0 || K.rows() != nn || K.cols() != nn)
            throw DataError("iqp: K must be n x n matching c");
        if (s < 1) throw DataError("iqp: cardinality s must be >= 1");
        if (binary_mode && s > nn)
            throw DataError("iqp: binary mode needs s <= n, got s=" + std::to_string(s) +
                            " n=" + std::to_string(nn));
        for (Index i = 0; i < nn; ++i)
            for (Index j = i + 1; j < nn; ++j)
                if (std::abs(K(i, j) - K(j, i)) > 1e-12)
                    throw DataError("iqp: K is not symmetric at (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
        if (!K.allFinite() || !c.allFinite()) throw DataError("iqp: non-finite input");
    }
};

enum class SolveProof { exact, heuristic };

struct IqpSolution {
    std::vector<int> v;        // multiplicity per candidate
    std::vector<Index> picks;  // the same selection as a sorted index sequence
    double objective = 0.0;
    long nodes_explored = 0;
    SolveProof proof = SolveProof::exact;
};

// Shared leaf evaluation. The exact solvers and the SDR rounding all score
// selections through this one routine so equal objectives compare equal.
inline double iqp_objective(const Matrix& K, const Vector& c, const std::vector<Index>& picks) {
    double lin = 0.0;
    for (Index p : picks) lin += c[p];
    double quad = 0.0;
    for (Index a : picks)
        for (Index b : picks) quad += K(a, b);
    return 0.5 * quad + lin;
}

inline std::vector<int> picks_to_counts(const std::vector<Index>& picks, Index n) {
    std::vector<int> v(static_cast<std::size_t>(n), 0);
    for (Index p : picks) ++v[static_cast<std::size_t>(p)];
    return v;
}

// Number of feasible selections: multisets C(n+s-1, s) or subsets C(n, s).
inline double enumeration_count(Index n, Index s, bool binary_mode) {
    const double nn = static_cast<double>(binary_mode ? n : n + s - 1);
    double count = 1.0;
    for (Index i = 0; i < s; ++i) {
        count *= (nn - static_cast<double>(i)) / static_cast<double>(s - i);
        if (count > 1e15) return count;
    }
    return count;
}

namespace detail {

// Selections are generated as non-decreasing index sequences (strictly
// increasing in binary mode); ties between equal objectives go to the first
// sequence in that enumeration order, i.e. the lexicographically smallest.
template <typename LeafFn>
void enumerate_selections(Index n, Index s, bool binary_mode, std::vector<Index>& picks,
                          Index start, LeafFn&& leaf) {
    if (static_cast<Index>(picks.size()) == s) {
        leaf(picks);
        return;
    }
    const Index remaining = s - static_cast<Index>(picks.size());
    const Index last = binary_mode ? n - remaining : n - 1;
    for (Index j = start; j <= last; ++j) {
        picks.push_back(j);
        enumerate_selections(n, s, binary_mode, picks, binary_mode ? j + 1 : j, leaf);
        picks.pop_back();
    }
}

}  // namespace detail

// Reference solver: full enumeration. Refuses instances whose enumeration
// count exceeds the guard.
inline IqpSolution solve_exhaustive(const IqpProblem& problem, double guard = 2e6) {
    problem.validate();
    const Index n = problem.n();
    const double count = enumeration_count(n, problem.s, problem.binary_mode);
    if (count > guard)
        throw SizeGuardError("exhaustive solve refused: enumeration count " +
                                 std::to_string(count) + " exceeds guard " + std::to_string(guard),
                             count);
    IqpSolution best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<Index> picks;
    picks.reserve(static_cast<std::size_t>(problem.s));
    detail::enumerate_selections(n, problem.s, problem.binary_mode, picks, 0,
                                 [&](const std::vector<Index>& leaf) {
                                     ++best.nodes_explored;
                                     const double obj = iqp_objective(problem.K, problem.c, leaf);
                                     if (obj < best.objective) {
                                         best.objective = obj;
                                         best.picks = leaf;
                                     }
                                 });
    best.v = picks_to_counts(best.picks, n);
    best.proof = SolveProof::exact;
    return best;
}

struct BnbOptions {
    bool prune = true;         // disable to validate pruning soundness
    bool use_fw_bound = true;  // eigen-shifted continuous relaxation bound
    Index fw_bound_max_depth = 2;
    long fw_bound_iters = 192;
    Index pair_shortlist = 48;  // candidates kept for the refined pair bound
};

// Cache for expensive per-K quantities; reuse across solves that share K.
struct IqpScratch {
    bool kmin_ready = false;
    double kmin = 0.0;  // min(0, min entry of K)
    bool lambda_ready = false;
    double lambda_min = 0.0;  // min(0, smallest eigenvalue of K)
};

namespace detail {

// Depth-first exact search over selections. Phase 1 proves the optimal
// objective value with cheapest-first child ordering; phase 2 re-walks in
// enumeration order and returns the first selection attaining it, which
// realises the lexicographic tie-break. Bounds at a node with partial picks
// P and s_rem completions over indices >= start:
//   s_rem == 1: exact one-pick completion cost from the running hatc
//   s_rem >= 2: suffix-table bound  F*(start) + (s_rem-2) l*(start) + floors
//               where F* is the best two-pick block and l* the best single
//               pick on plain costs, plus a node-aware shortlist pair bound
//               when the O(1) bound fails to prune.
struct BnbSearch {
    const Matrix& K;
    const Vector& c;
    Index n;
    Index s;
    bool binary;
    const BnbOptions& opts;
    IqpScratch& scratch;
    long nodes = 0;

    // hatc_j = c_j + (K v_partial)_j, maintained along the DFS path.
    Vector hatc;
    std::vector<Index> picks;
    std::vector<bool> excluded;
    Vector lsuff;  // min_{j' >= j, allowed} c_j' + K_j'j'/2
    Vector fsuff;  // min over allowed pairs a <= b (a < b binary), both >= j

    static double margin(double reference) { return 1e-9 * std::max(1.0, std::abs(reference)); }

    double kmin() {
        if (!scratch.kmin_ready) {
            scratch.kmin = std::min(0.0, K.minCoeff());
            scratch.kmin_ready = true;
        }
        return scratch.kmin;
    }

    double lambda_min() {
        if (!scratch.lambda_ready) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
            scratch.lambda_min = std::min(0.0, es.eigenvalues().minCoeff());
            scratch.lambda_ready = true;
        }
        return scratch.lambda_min;
    }

    bool allowed(Index j) const { return !excluded[static_cast<std::size_t>(j)]; }
    double lplain(Index j) const { return c[j] + 0.5 * K(j, j); }
    double lnode(Index j) const { return hatc[j] + 0.5 * K(j, j); }

    // Excludes candidates whose cheapest containing selection provably
    // exceeds the reference. Exclusion needs a strict margin, so selections
    // tying the reference always survive.
    void screen(double reference) {
        excluded.assign(static_cast<std::size_t>(n), false);
        double lmin = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < n; ++j) lmin = std::min(lmin, lplain(j));
        const double floors =
            0.5 * static_cast<double>(s) * static_cast<double>(s - 1) * kmin();
        const double rest = static_cast<double>(s - 1) * lmin + floors;
        const double cut = reference + margin(reference);
        for (Index j = 0; j < n; ++j)
            if (lplain(j) + rest > cut) excluded[static_cast<std::size_t>(j)] = true;
    }

    void build_tables() {
        const double inf = std::numeric_limits<double>::infinity();
        lsuff.setConstant(n + 1, inf);
        for (Index j = n - 1; j >= 0; --j)
            lsuff[j] = std::min(lsuff[j + 1], allowed(j) ? lplain(j) : inf);
        fsuff.setConstant(n + 1, inf);
        for (Index j = n - 1; j >= 0; --j) {
            double rowmin = inf;
            if (allowed(j)) {
                for (Index j2 = binary ? j + 1 : j; j2 < n; ++j2) {
                    if (!allowed(j2)) continue;
                    rowmin = std::min(rowmin, lplain(j) + lplain(j2) + K(j, j2));
                }
            }
            fsuff[j] = std::min(fsuff[j + 1], rowmin);
        }
    }

    // O(1) completion bound over indices >= start, plain costs. Couplings
    // with the partial selection and all uncounted pairs are floored at the
    // smallest kernel entry (never above zero).
    double o1_bound(Index start, Index s_rem) {
        const double coupling =
            static_cast<double>(s_rem) * static_cast<double>(s - s_rem) * kmin();
        if (s_rem == 1) return lsuff[start] + coupling;
        const double uncounted =
            (0.5 * static_cast<double>(s_rem) * static_cast<double>(s_rem - 1) - 1.0) * kmin();
        return fsuff[start] + static_cast<double>(s_rem - 2) * lsuff[start] + uncounted + coupling;
    }

    // Node-aware pair bound: exact two-pick completion over a shortlist of
    // the cheapest candidates by hatc, with a sound floor for pairs that
    // escape the shortlist.
    double pair_bound(Index start) {
        const Index t_cap = opts.pair_shortlist;
        std::vector<Index> shortlist;
        shortlist.reserve(static_cast<std::size_t>(t_cap));
        auto heap_cmp = [&](Index a, Index b) { return lnode(a) < lnode(b); };
        double out_min = std::numeric_limits<double>::infinity();
        double lmin = std::numeric_limits<double>::infinity();
        for (Index j = start; j < n; ++j) {
            if (!allowed(j)) continue;
            lmin = std::min(lmin, lnode(j));
            if (static_cast<Index>(shortlist.size()) < t_cap) {
                shortlist.push_back(j);
                std::push_heap(shortlist.begin(), shortlist.end(), heap_cmp);
            } else if (lnode(j) < lnode(shortlist.front())) {
                std::pop_heap(shortlist.begin(), shortlist.end(), heap_cmp);
                out_min = std::min(out_min, lnode(shortlist.back()));
                shortlist.back() = j;
                std::push_heap(shortlist.begin(), shortlist.end(), heap_cmp);
            } else {
                out_min = std::min(out_min, lnode(j));
            }
        }
        if (shortlist.empty()) return std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < shortlist.size(); ++a)
            for (std::size_t b = a; b < shortlist.size(); ++b) {
                if (binary && a == b) continue;
                const Index ja = shortlist[a], jb = shortlist[b];
                best = std::min(best, lnode(ja) + lnode(jb) + K(ja, jb));
            }
        if (std::isfinite(out_min)) best = std::min(best, out_min + lmin + kmin());
        return best;
    }

    // Optional certified lower bound from the eigen-shifted continuous
    // relaxation of the completion, solved approximately by Frank-Wolfe;
    // value minus duality gap is a sound bound wherever it converges.
    double fw_bound(Index start, Index s_rem) {
        const Index sub = n - start;
        if (sub < 2 || binary) return -std::numeric_limits<double>::infinity();
        const double lam = lambda_min();
        const double sr = static_cast<double>(s_rem);
        auto acol = [&](Index j, Vector& col) {
            col = 0.5 * sr * sr * K.col(start + j).segment(start, sub);
            col[j] -= 0.5 * sr * sr * lam;
        };
        Vector b = sr * hatc.segment(start, sub);
        auto fw = fw_min_quadratic_simplex(sub, acol, b, opts.fw_bound_iters, 1e-12);
        return fw.value - fw.gap + 0.5 * lam * sr * sr;
    }

    // True iff the subtree below (start, s_rem) cannot contain a selection
    // at or below the cut. partial is the exact objective of `picks`.
    bool can_prune(double partial, Index start, Index s_rem, Index depth, double cut) {
        if (partial + o1_bound(start, s_rem) > cut) return true;
        if (s_rem >= 2) {
            // pair_bound already couples its two picks to the partial
            // selection through hatc; only the tail picks need floors.
            const double tail = static_cast<double>(s_rem - 2) * lsuff[start];
            const double floors =
                (0.5 * static_cast<double>(s_rem) * static_cast<double>(s_rem - 1) - 1.0) *
                    kmin() +
                static_cast<double>(s_rem - 2) * static_cast<double>(s - s_rem) * kmin();
            if (partial + pair_bound(start) + tail + floors > cut) return true;
        }
        if (opts.use_fw_bound && s_rem >= 2 && depth <= opts.fw_bound_max_depth &&
            partial + fw_bound(start, s_rem) > cut)
            return true;
        return false;
    }
};

}  // namespace detail

// Exact branch-and-bound over candidate multiplicities (or subsets in
// binary mode). Matches solve_exhaustive bit for bit, including ties.
inline IqpSolution solve_branch_bound(const IqpProblem& problem, const BnbOptions& opts = {},
                                      IqpScratch* scratch_in = nullptr) {
    problem.validate();
    const Index n = problem.n();
    const Index s = problem.s;
    IqpScratch local_scratch;
    IqpScratch& scratch = scratch_in ? *scratch_in : local_scratch;
    detail::BnbSearch search{problem.K, problem.c, n, s, problem.binary_mode, opts, scratch};
    search.hatc = problem.c;
    search.picks.reserve(static_cast<std::size_t>(s));

    // Greedy incumbent: repeatedly take the cheapest marginal pick.
    std::vector<Index> greedy;
    {
        Vector hatc = problem.c;
        std::vector<bool> used(static_cast<std::size_t>(n), false);
        for (Index t = 0; t < s; ++t) {
            Index best = -1;
            double best_val = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < n; ++j) {
                if (problem.binary_mode && used[static_cast<std::size_t>(j)]) continue;
                const double val = hatc[j] + 0.5 * problem.K(j, j);
                if (val < best_val) {
                    best_val = val;
                    best = j;
                }
            }
            greedy.push_back(best);
            used[static_cast<std::size_t>(best)] = true;
            hatc += problem.K.col(best);
        }
        // 1-swap local search; a tighter incumbent pays for itself in
        // pruning when the landscape is flat.
        bool improved = true;
        for (int pass = 0; pass < 8 && improved; ++pass) {
            improved = false;
            for (std::size_t pos = 0; pos < greedy.size(); ++pos) {
                const Index old = greedy[pos];
                hatc -= problem.K.col(old);
                if (problem.binary_mode) used[static_cast<std::size_t>(old)] = false;
                Index best = old;
                double best_val = hatc[old] + 0.5 * problem.K(old, old);
                for (Index j = 0; j < n; ++j) {
                    if (problem.binary_mode && used[static_cast<std::size_t>(j)]) continue;
                    const double val = hatc[j] + 0.5 * problem.K(j, j);
                    if (val < best_val - 1e-15) {
                        best_val = val;
                        best = j;
                    }
                }
                if (best != old) improved = true;
                greedy[pos] = best;
                hatc += problem.K.col(best);
                if (problem.binary_mode) used[static_cast<std::size_t>(best)] = true;
            }
        }
        std::sort(greedy.begin(), greedy.end());
    }
    double incumbent = iqp_objective(problem.K, problem.c, greedy);

    if (opts.prune)
        search.screen(incumbent);
    else
        search.excluded.assign(static_cast<std::size_t>(n), false);
    search.build_tables();

    // Phase 1 visits children cheapest-first so strong incumbents arrive
    // early; only the optimal value matters here, not the tie-break.
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return search.lplain(a) < search.lplain(b); });

    // Exact closure of a one-pick-remaining node: scan the cheap running
    // costs, then evaluate the few near-minimal leaves from scratch so the
    // recorded value is always an iqp_objective output.
    auto close_last_pick = [&](Index start, double& best_obj) {
        double vmin = std::numeric_limits<double>::infinity();
        for (Index j = start; j < n; ++j) {
            if (!search.allowed(j)) continue;
            vmin = std::min(vmin, search.lnode(j));
        }
        if (!std::isfinite(vmin)) return;
        const double cut = vmin + detail::BnbSearch::margin(vmin);
        for (Index j = start; j < n; ++j) {
            if (!search.allowed(j) || search.lnode(j) > cut) continue;
            search.picks.push_back(j);
            const double obj = iqp_objective(problem.K, problem.c, search.picks);
            search.picks.pop_back();
            if (obj < best_obj) best_obj = obj;
        }
    };

    std::function<void(Index, Index)> walk1 = [&](Index start, Index depth) {
        ++search.nodes;
        const Index s_rem = s - depth;
        const double partial =
            depth == 0 ? 0.0 : iqp_objective(problem.K, problem.c, search.picks);
        if (s_rem == 0) {
            if (partial < incumbent) incumbent = partial;
            return;
        }
        if (opts.prune && depth > 0 &&
            search.can_prune(partial, start, s_rem, depth,
                             incumbent + detail::BnbSearch::margin(incumbent)))
            return;
        if (s_rem == 1) {
            double best_obj = incumbent;
            close_last_pick(start, best_obj);
            if (best_obj < incumbent) incumbent = best_obj;
            return;
        }
        const Index last = problem.binary_mode ? n - s_rem : n - 1;
        for (Index j : order) {
            if (j < start || j > last || !search.allowed(j)) continue;
            search.picks.push_back(j);
            search.hatc += problem.K.col(j);
            walk1(problem.binary_mode ? j + 1 : j, depth + 1);
            search.hatc -= problem.K.col(j);
            search.picks.pop_back();
        }
    };
    walk1(0, 0);
    const double optimum = incumbent;

    // Phase 2: first leaf in enumeration order attaining the optimum.
    if (opts.prune) search.screen(optimum);
    search.build_tables();
    IqpSolution out;
    out.objective = optimum;
    bool found = false;
    std::function<void(Index, Index)> walk2 = [&](Index start, Index depth) {
        if (found) return;
        ++search.nodes;
        const Index s_rem = s - depth;
        const double partial =
            depth == 0 ? 0.0 : iqp_objective(problem.K, problem.c, search.picks);
        const double cut = optimum + detail::BnbSearch::margin(optimum);
        if (s_rem == 0) {
            if (partial == optimum) {
                out.picks = search.picks;
                found = true;
            }
            return;
        }
        if (opts.prune && depth > 0 && search.can_prune(partial, start, s_rem, depth, cut)) return;
        if (s_rem == 1) {
            for (Index j = start; j < n && !found; ++j) {
                if (!search.allowed(j) || partial + search.lnode(j) > cut) continue;
                search.picks.push_back(j);
                const double obj = iqp_objective(problem.K, problem.c, search.picks);
                if (obj == optimum) {
                    out.picks = search.picks;
                    found = true;
                }
                search.picks.pop_back();
            }
            return;
        }
        const Index last = problem.binary_mode ? n - s_rem : n - 1;
        for (Index j = start; j <= last && !found; ++j) {
            if (!search.allowed(j)) continue;
            search.picks.push_back(j);
            search.hatc += problem.K.col(j);
            walk2(problem.binary_mode ? j + 1 : j, depth + 1);
            search.hatc -= problem.K.col(j);
            search.picks.pop_back();
        }
    };
    walk2(0, 0);
    if (!found) {
        // The greedy incumbent was optimal but its leaf escaped phase 2
        // through the float margin; fall back to it.
        out.picks = greedy;
        out.objective = iqp_objective(problem.K, problem.c, greedy);
    }
    out.v = picks_to_counts(out.picks, n);
    out.nodes_explored = search.nodes;
    out.proof = SolveProof::exact;
    return out;
}

// ---------------------------------------------------------------------------
// Solver selection for the per-iteration subset problem.
// ---------------------------------------------------------------------------

enum class SolverMethod { automatic, exhaustive, branch_bound };

struct SolverOptions {
    SolverMethod method = SolverMethod::automatic;
    bool binary = false;
    double exhaustive_threshold = 1e5;  // automatic switches to B&B above this
    double enumeration_guard = 2e6;     // hard refusal for forced exhaustive
    BnbOptions bnb;
};

inline IqpSolution solve_iqp(const IqpProblem& problem, const SolverOptions& opts,
                             IqpScratch* scratch = nullptr) {
    switch (opts.method) {
        case SolverMethod::exhaustive:
            return solve_exhaustive(problem, opts.enumeration_guard);
        case SolverMethod::branch_bound:
            return solve_branch_bound(problem, opts.bnb, scratch);
        case SolverMethod::automatic:
        default: {
            const double count = enumeration_count(problem.n(), problem.s, problem.binary_mode);
            if (count <= opts.exhaustive_threshold)
                return solve_exhaustive(problem, opts.enumeration_guard);
            return solve_branch_bound(problem, opts.bnb, scratch);
        }
    }
}

}  // namespace quant
