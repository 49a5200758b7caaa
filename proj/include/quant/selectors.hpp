#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "quant/discrepancy.hpp"
#include "quant/solvers.hpp"

namespace quant {

enum class Algorithm { myopic, nonmyopic, minibatch, oneshot, sdr };

inline std::string to_string(Algorithm a) {
    switch (a) {
        case Algorithm::myopic: return "myopic";
        case Algorithm::nonmyopic: return "nonmyopic";
        case Algorithm::minibatch: return "minibatch";
        case Algorithm::oneshot: return "oneshot";
        case Algorithm::sdr: return "sdr";
    }
    return "?";
}

enum class BatchStrategy { uniform_without_replacement, sequential_blocks };

inline std::string to_string(BatchStrategy b) {
    return b == BatchStrategy::uniform_without_replacement ? "uniform_without_replacement"
                                                           : "sequential_blocks";
}

struct SelectionConfig {
    Index m = 1;  // iterations
    Index s = 1;  // points selected per iteration
    Index b = 0;  // mini-batch size; 0 = scan the full candidate set
    BatchStrategy batch_strategy = BatchStrategy::uniform_without_replacement;
    std::uint64_t seed = 0;
    SolverOptions solver;

    void validate(Index n) const {
        if (m < 1) throw ConfigError("iteration count m must be >= 1");
        if (s < 1) throw ConfigError("selection size s must be >= 1");
        if (b > 0) {
            if (b < s) throw ConfigError("mini-batch size b=" + std::to_string(b) +
                                         " must be >= s=" + std::to_string(s));
            if (b > n) throw ConfigError("mini-batch size b=" + std::to_string(b) +
                                         " exceeds candidate count n=" + std::to_string(n));
        }
    }
};

struct SelectionResult {
    std::vector<std::vector<Index>> pi;  // m rows of s global candidate indices
    std::vector<double> trace;           // MMD^2 of the running uniform measure
    std::vector<double> timings_ms;      // per-iteration scan+solve wall clock
    Algorithm algorithm = Algorithm::myopic;
    Mode mode = Mode::mmd;
    Index m = 0, s = 0, b = 0;
    BatchStrategy batch_strategy = BatchStrategy::uniform_without_replacement;
    std::uint64_t seed = 0;
    std::string solver = "auto";
    bool binary = false;
    std::string kernel = "se";
    double lengthscale = 1.0;
};

// Mini-batch candidate index sets, one per iteration, ascending within each
// batch so batch-local tie-breaking matches the global index order.
struct BatchSchedule {
    std::vector<std::vector<Index>> batches;

    static BatchSchedule build(Index n, Index m, Index b, BatchStrategy strategy,
                               std::uint64_t seed) {
        BatchSchedule out;
        out.batches.reserve(static_cast<std::size_t>(m));
        Rng rng(seed);
        for (Index i = 0; i < m; ++i) {
            std::vector<Index> batch;
            batch.reserve(static_cast<std::size_t>(b));
            if (strategy == BatchStrategy::uniform_without_replacement) {
                auto picks = sample_without_replacement(rng, static_cast<std::size_t>(n),
                                                        static_cast<std::size_t>(b));
                for (std::size_t p : picks) batch.push_back(static_cast<Index>(p));
            } else {
                const Index start = static_cast<Index>(
                    (static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(b)) %
                    static_cast<std::uint64_t>(n));
                for (Index t = 0; t < b; ++t) batch.push_back((start + t) % n);
                std::sort(batch.begin(), batch.end());
            }
            out.batches.push_back(std::move(batch));
        }
        return out;
    }
};

namespace detail {

class IterationTimer {
  public:
    void start() { t0_ = std::chrono::steady_clock::now(); }
    double stop_ms() const {
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::milli>(t1 - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_;
};

inline SolverMethod effective_method(const SolverOptions& opts, Index n, Index s, bool binary) {
    if (opts.method != SolverMethod::automatic) return opts.method;
    return enumeration_count(n, s, binary) <= opts.exhaustive_threshold
               ? SolverMethod::exhaustive
               : SolverMethod::branch_bound;
}

}  // namespace detail

// One point per iteration, chosen by a direct scan of the running costs.
// The seed parameter is accepted for interface uniformity; the algorithm is
// deterministic.
inline SelectionResult select_myopic(const KernelContext& ctx, Index m, std::uint64_t seed = 0) {
    SelectionConfig cfg;
    cfg.m = m;
    cfg.validate(ctx.size());
    const Index n = ctx.size();

    SelectionResult res;
    res.algorithm = Algorithm::myopic;
    res.mode = ctx.mode();
    res.m = m;
    res.s = 1;
    res.seed = seed;
    res.kernel = to_string(ctx.base_kernel().family);
    res.lengthscale = ctx.base_kernel().lengthscale;

    SelectionState state(ctx);
    detail::IterationTimer timer;
    for (Index i = 0; i < m; ++i) {
        timer.start();
        const Vector c = state.linear_costs(1);
        Index best = 0;
        double best_val = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < n; ++j) {
            const double val = 0.5 * ctx.diagonal(j) + c[j];
            if (val < best_val) {
                best_val = val;
                best = j;
            }
        }
        state.update({best});
        res.timings_ms.push_back(timer.stop_ms());
        res.pi.push_back({best});
        res.trace.push_back(state.mmd_squared());
    }
    return res;
}

// s points per iteration via an exact subset solve over all candidates.
inline SelectionResult select_nonmyopic(const KernelContext& ctx, Index m, Index s,
                                        const SolverOptions& solver_opts = {}) {
    SelectionConfig cfg;
    cfg.m = m;
    cfg.s = s;
    cfg.solver = solver_opts;
    cfg.validate(ctx.size());

    SelectionResult res;
    res.algorithm = Algorithm::nonmyopic;
    res.mode = ctx.mode();
    res.m = m;
    res.s = s;
    res.binary = solver_opts.binary;
    res.kernel = to_string(ctx.base_kernel().family);
    res.lengthscale = ctx.base_kernel().lengthscale;
    res.solver = detail::effective_method(solver_opts, ctx.size(), s, solver_opts.binary) ==
                         SolverMethod::exhaustive
                     ? "exhaustive"
                     : "bnb";

    IqpProblem problem;
    problem.K = ctx.submatrix([&] {
        std::vector<Index> all(static_cast<std::size_t>(ctx.size()));
        for (Index j = 0; j < ctx.size(); ++j) all[static_cast<std::size_t>(j)] = j;
        return all;
    }());
    problem.s = s;
    problem.binary_mode = solver_opts.binary;

    SelectionState state(ctx);
    IqpScratch scratch;
    detail::IterationTimer timer;
    for (Index i = 0; i < m; ++i) {
        timer.start();
        problem.c = state.linear_costs(s);
        const IqpSolution sol = solve_iqp(problem, solver_opts, &scratch);
        state.update(sol.picks);
        res.timings_ms.push_back(timer.stop_ms());
        res.pi.push_back(sol.picks);
        res.trace.push_back(state.mmd_squared());
    }
    return res;
}

// Non-myopic selection restricted to a seeded mini-batch per iteration.
// Running sums stay global, so cross-batch terms against earlier picks are
// exact and the reported indices are global.
inline SelectionResult select_minibatch(const KernelContext& ctx, const SelectionConfig& config) {
    config.validate(ctx.size());
    if (config.b < 1) throw ConfigError("minibatch selection needs a batch size b >= 1");
    const Index n = ctx.size();

    SelectionResult res;
    res.algorithm = Algorithm::minibatch;
    res.mode = ctx.mode();
    res.m = config.m;
    res.s = config.s;
    res.b = config.b;
    res.batch_strategy = config.batch_strategy;
    res.seed = config.seed;
    res.binary = config.solver.binary;
    res.kernel = to_string(ctx.base_kernel().family);
    res.lengthscale = ctx.base_kernel().lengthscale;
    res.solver = detail::effective_method(config.solver, config.b, config.s, config.solver.binary) ==
                         SolverMethod::exhaustive
                     ? "exhaustive"
                     : "bnb";

    const BatchSchedule schedule =
        BatchSchedule::build(n, config.m, config.b, config.batch_strategy, config.seed);

    SelectionState state(ctx);
    detail::IterationTimer timer;
    for (Index i = 0; i < config.m; ++i) {
        timer.start();
        const auto& batch = schedule.batches[static_cast<std::size_t>(i)];
        IqpProblem problem;
        problem.K = ctx.submatrix(batch);
        problem.s = config.s;
        problem.binary_mode = config.solver.binary;
        const Vector c = state.linear_costs(config.s);
        problem.c.resize(static_cast<Index>(batch.size()));
        for (std::size_t a = 0; a < batch.size(); ++a)
            problem.c[static_cast<Index>(a)] = c[batch[a]];

        const IqpSolution sol = solve_iqp(problem, config.solver, nullptr);
        std::vector<Index> global;
        global.reserve(sol.picks.size());
        for (Index local : sol.picks) global.push_back(batch[static_cast<std::size_t>(local)]);
        state.update(global);
        res.timings_ms.push_back(timer.stop_ms());
        res.pi.push_back(global);
        res.trace.push_back(state.mmd_squared());
    }
    return res;
}

// All m points in a single exact solve; the limiting case s = m, m = 1.
inline SelectionResult select_oneshot(const KernelContext& ctx, Index m,
                                      const SolverOptions& solver_opts = {}) {
    SelectionResult res = select_nonmyopic(ctx, 1, m, solver_opts);
    res.algorithm = Algorithm::oneshot;
    res.m = 1;
    res.s = m;
    return res;
}

}  // namespace quant
