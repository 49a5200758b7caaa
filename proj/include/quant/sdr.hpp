#pragma once

#include <functional>
#include <numeric>
#include <vector>

#include "quant/selectors.hpp"
#include "quant/solvers.hpp"

namespace quant {

// Semidefinite relaxation of the binary one-shot selection problem, with
// randomised-hyperplane rounding under an affine cardinality translation.

struct SdrProblem {
    Matrix A;  // (n+1)x(n+1) lifted cost
    Matrix B;  // (n+1)x(n+1) cardinality constraint, B . M = 2s - n
    Index s = 1;
    Index n = 0;
    // M . A = 4 * (1/2 v'Kv + c'v) + objective_offset on lifted binary points.
    double objective_offset = 0.0;
};

struct SdrFactor {
    Matrix U;  // (n+1) x r, unit-norm rows
    bool converged = false;
    double constraint_violation = 0.0;
    long iterations = 0;
    std::vector<double> objective_trace;  // A . UU' at accepted descent steps
};

struct SdrSolution {
    Matrix U;
    std::vector<int> v;  // binary, exactly s ones
    std::vector<Index> picks;
    double objective = 0.0;  // true subset objective of the best rounded draw
    long draws = 0;
    long best_draw_index = -1;
};

// Lift min 1/2 v'Kv + c'v over binary v with 1'v = s to matrices over
// vtilde = 2v - 1. A is scaled so the lifted objective of a feasible rank-1
// point is exactly 4x the subset objective; the remaining offset is recorded.
inline SdrProblem sdr_assemble(const Matrix& K, const Vector& c, Index s) {
    const Index n = c.size();
    if (n == 0 || K.rows() != n || K.cols() != n) throw DataError("sdr_assemble: shape mismatch");
    if (s < 1 || s > n) throw DataError("sdr_assemble: need 1 <= s <= n");

    SdrProblem p;
    p.s = s;
    p.n = n;
    const Vector k1 = K.rowwise().sum();
    const double sum_k = k1.sum();
    const double sum_c = c.sum();

    p.A = Matrix::Zero(n + 1, n + 1);
    p.A(0, 0) = 0.5 * sum_k + 2.0 * sum_c;
    p.A.block(0, 1, 1, n) = (0.5 * k1 + c).transpose();
    p.A.block(1, 0, n, 1) = 0.5 * k1 + c;
    p.A.block(1, 1, n, n) = 0.5 * K;
    p.objective_offset = 0.0;

    p.B = Matrix::Zero(n + 1, n + 1);
    p.B.block(0, 1, 1, n).setConstant(0.5);
    p.B.block(1, 0, n, 1).setConstant(0.5);
    return p;
}

namespace detail {

inline double frob_inner(const Matrix& X, const Matrix& U) { return (U.transpose() * X * U).trace(); }

inline void normalize_rows(Matrix& U) {
    for (Index i = 0; i < U.rows(); ++i) {
        const double norm = U.row(i).norm();
        if (norm > 0.0)
            U.row(i) /= norm;
        else
            U(i, 0) = 1.0;
    }
}

}  // namespace detail

// Local factorised solve: projected gradient on unit-norm rows with a
// quadratic penalty on the linear constraint. A step is accepted only if it
// decreases the penalised objective without increasing A . UU'; the penalty
// weight doubles when no such step exists and the constraint is still loose.
// Heuristic by construction: the result is a local minimiser, not a
// certified SDP optimum.
inline SdrFactor sdr_solve_lowrank(const SdrProblem& problem, Index rank = 0, long max_iter = 500,
                                   double tol = 1e-6, std::uint64_t seed = 0) {
    const Index dim = problem.n + 1;
    Index r = rank > 0 ? rank : std::min<Index>(dim, 25);
    if (r < 2) throw ConfigError("sdr_solve_lowrank: rank must be >= 2");
    r = std::min(r, dim);
    const double target = static_cast<double>(2 * problem.s - problem.n);

    Rng rng(seed);
    Matrix U(dim, r);
    for (Index i = 0; i < dim; ++i)
        for (Index j = 0; j < r; ++j) U(i, j) = gaussian(rng);
    detail::normalize_rows(U);

    auto a_obj = [&](const Matrix& X) { return detail::frob_inner(problem.A, X); };
    auto violation = [&](const Matrix& X) { return detail::frob_inner(problem.B, X) - target; };

    SdrFactor out;

    // Start exactly on the constraint: B . UU' equals the inner product of
    // the homogenisation row with the sum of the candidate rows, so flip
    // rows until that sum is long enough, then place row 0 analytically.
    {
        Vector rowsum = Vector::Zero(r);
        for (Index i = 1; i < dim; ++i) rowsum += U.row(i).transpose();
        const double sign = target < 0.0 ? -1.0 : 1.0;
        for (Index guard = 0; guard < 4 * dim && rowsum.norm() < std::abs(target); ++guard) {
            Index worst = 1;
            double worst_dot = std::numeric_limits<double>::infinity();
            for (Index i = 1; i < dim; ++i) {
                const double dot = sign * U.row(i).dot(rowsum);
                if (dot < worst_dot) {
                    worst_dot = dot;
                    worst = i;
                }
            }
            rowsum -= 2.0 * U.row(worst).transpose();
            U.row(worst) = -U.row(worst);
        }
        const double norm = rowsum.norm();
        if (norm > 0.0) {
            const Vector dir = rowsum / norm;
            const double a = std::clamp(target / norm, -1.0, 1.0);
            Vector ortho = Vector::Zero(r);
            Index basis = 0;
            for (Index j = 1; j < r; ++j)
                if (std::abs(dir[j]) < std::abs(dir[basis])) basis = j;
            ortho[basis] = 1.0;
            ortho -= ortho.dot(dir) * dir;
            if (ortho.norm() > 0.0) ortho /= ortho.norm();
            U.row(0) = (a * dir + std::sqrt(std::max(0.0, 1.0 - a * a)) * ortho).transpose();
        }
    }

    double rho = 1.0 + problem.A.cwiseAbs().maxCoeff();
    double obj = a_obj(U);
    double viol = violation(U);
    out.objective_trace.push_back(obj);

    long it = 0;
    double penalized = obj + rho * viol * viol;
    while (it < max_iter) {
        ++it;
        Matrix grad = 2.0 * (problem.A * U) + 4.0 * rho * viol * (problem.B * U);
        double eta = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 40 && !accepted; ++bt) {
            Matrix cand = U - eta * grad;
            detail::normalize_rows(cand);
            const double cand_obj = a_obj(cand);
            const double cand_viol = violation(cand);
            const double cand_pen = cand_obj + rho * cand_viol * cand_viol;
            if (cand_pen < penalized && cand_obj <= obj &&
                std::abs(cand_viol) <= std::max(std::abs(viol), tol)) {
                U = cand;
                obj = cand_obj;
                viol = cand_viol;
                penalized = cand_pen;
                out.objective_trace.push_back(obj);
                accepted = true;
            }
            eta *= 0.5;
        }
        if (!accepted) {
            if (std::abs(viol) <= tol) {
                out.converged = true;
                break;
            }
            rho *= 2.0;
            penalized = obj + rho * viol * viol;
            if (rho > 1e16) break;
        }
    }
    if (std::abs(viol) > tol) out.converged = false;

    detail::normalize_rows(U);
    out.U = U;
    out.constraint_violation = violation(U);
    out.iterations = it;
    return out;
}

// Randomised rounding: each draw samples a direction on the r-sphere,
// scores candidates by signed inner product against their factor rows, and
// keeps the s best scores. Taking the top s realises the affine translation
// of the separating hyperplane. The sign of the homogenisation row makes the
// labelling invariant to a global flip of the draw.
inline SdrSolution sdr_round(const Matrix& U, const SdrProblem& problem, long draws,
                             std::uint64_t seed,
                             const std::function<double(const std::vector<Index>&)>& evaluator) {
    if (draws < 1) throw ConfigError("sdr_round: need at least one draw");
    const Index n = problem.n;
    const Index r = U.cols();
    Rng rng(seed);

    SdrSolution out;
    out.U = U;
    out.draws = draws;
    out.objective = std::numeric_limits<double>::infinity();

    std::vector<Index> order(static_cast<std::size_t>(n));
    Vector g(r);
    for (long d = 0; d < draws; ++d) {
        for (Index j = 0; j < r; ++j) g[j] = gaussian(rng);
        const double norm = g.norm();
        if (norm > 0.0) g /= norm;
        const double sign = U.row(0).dot(g) < 0.0 ? -1.0 : 1.0;

        std::iota(order.begin(), order.end(), Index{0});
        Vector scores(n);
        for (Index i = 0; i < n; ++i) scores[i] = sign * U.row(i + 1).dot(g);
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return scores[a] > scores[b]; });

        std::vector<Index> picks(order.begin(), order.begin() + problem.s);
        std::sort(picks.begin(), picks.end());
        const double obj = evaluator(picks);
        if (obj < out.objective) {
            out.objective = obj;
            out.picks = picks;
            out.best_draw_index = d;
        }
    }
    out.v = picks_to_counts(out.picks, n);
    return out;
}

struct SdrOptions {
    Index rank = 0;  // 0 = min(n+1, 25)
    long draws = 50;
    long max_iter = 500;
    double tol = 1e-6;
    std::uint64_t seed = 0;
};

// One-shot binary selection of m points through the relaxation pipeline.
inline SelectionResult select_sdr(const KernelContext& ctx, Index m, const SdrOptions& opts) {
    const Index n = ctx.size();
    if (m < 1) throw ConfigError("sdr selection needs m >= 1");
    if (m > n)
        throw ConfigError("sdr selection is binary; m=" + std::to_string(m) +
                          " exceeds n=" + std::to_string(n));

    SelectionResult res;
    res.algorithm = Algorithm::sdr;
    res.mode = ctx.mode();
    res.m = 1;
    res.s = m;
    res.seed = opts.seed;
    res.solver = "sdr";
    res.binary = true;
    res.kernel = to_string(ctx.base_kernel().family);
    res.lengthscale = ctx.base_kernel().lengthscale;

    detail::IterationTimer timer;
    timer.start();

    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    const Matrix K = ctx.submatrix(all);
    SelectionState state(ctx);
    const Vector c = state.linear_costs(m);

    const SdrProblem problem = sdr_assemble(K, c, m);
    const SdrFactor factor =
        sdr_solve_lowrank(problem, opts.rank, opts.max_iter, opts.tol, opts.seed);
    const SdrSolution rounded = sdr_round(
        factor.U, problem, opts.draws, opts.seed + 1,
        [&](const std::vector<Index>& picks) { return iqp_objective(K, c, picks); });

    state.update(rounded.picks);
    res.timings_ms.push_back(timer.stop_ms());
    res.pi.push_back(rounded.picks);
    res.trace.push_back(state.mmd_squared());
    return res;
}

}  // namespace quant
