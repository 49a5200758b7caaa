#pragma once

#include <optional>
#include <vector>

#include "quant/kernels.hpp"
#include "quant/stein.hpp"
#include "quant/target.hpp"
#include "quant/types.hpp"

namespace quant {

// Weighted multiset of candidate indices. Without weights it is the
// uniform empirical measure on its entries.
struct EmpiricalMeasure {
    std::vector<Index> indices;
    std::optional<Vector> weights;

    void validate(Index n) const {
        if (indices.empty()) throw DataError("empirical measure is empty");
        for (Index i : indices)
            if (i < 0 || i >= n) throw DataError("measure index " + std::to_string(i) + " out of range");
        if (weights) {
            if (weights->size() != static_cast<Index>(indices.size()))
                throw DataError("measure has " + std::to_string(indices.size()) + " indices but " +
                                std::to_string(weights->size()) + " weights");
            double total = 0.0;
            for (Index i = 0; i < weights->size(); ++i) {
                if ((*weights)[i] < 0.0) throw DataError("measure weights must be nonnegative");
                total += (*weights)[i];
            }
            if (std::abs(total - 1.0) > 1e-12) throw DataError("measure weights must sum to 1");
        }
    }
};

struct GramOptions {
    // Full n x n Gram is materialised up to this many candidates; above it
    // kernel columns are computed on demand so memory stays O(n).
    Index materialize_threshold = 4096;
};

// Everything the selection loop needs from (candidates, target, kernel):
// entry and column access to the Gram matrix, cached kernel means, and the
// target double integral. In ksd mode the kernel is the Stein kernel built
// on the base spec and the kernel means are exactly zero.
class KernelContext {
  public:
    KernelContext(const CandidateSet& candidates, const TargetModel& target,
                  const KernelSpec& kernel, GramOptions options = {})
        : candidates_(&candidates), base_(kernel), mode_(target.mode()) {
        candidates.validate();
        kernel.validate();
        target.check_kernel_pairing(kernel);
        const Index n = candidates.size();
        if (mode_ == Mode::ksd) scores_ = target.score_matrix(candidates);
        h_ = Vector::Zero(n);
        if (mode_ == Mode::mmd) {
            parallel_for(0, n, [&](std::ptrdiff_t i) {
                h_[i] = target.kernel_mean(kernel, candidates.points.row(i).transpose());
            });
        }
        c2_ = target.double_integral(kernel);
        diag_ = Vector(n);
        parallel_for(0, n, [&](std::ptrdiff_t i) { diag_[i] = compute(i, i); });
        if (n <= options.materialize_threshold) {
            full_ = mode_ == Mode::ksd ? stein_gram(SteinKernel{base_}, candidates.points, scores_)
                                       : gram(base_, candidates.points);
        }
    }

    Index size() const { return candidates_->size(); }
    Mode mode() const { return mode_; }
    const CandidateSet& candidates() const { return *candidates_; }
    const KernelSpec& base_kernel() const { return base_; }
    double c2() const { return c2_; }
    const Vector& kernel_means() const { return h_; }
    double kernel_mean(Index i) const { return h_[i]; }
    double diagonal(Index i) const { return diag_[i]; }
    bool materialized() const { return full_.size() > 0; }

    double eval(Index i, Index j) const {
        if (full_.size() > 0) return full_(i, j);
        return compute(i, j);
    }

    // Column j of the Gram matrix into out (resized to n).
    void column(Index j, Vector& out) const {
        const Index n = size();
        out.resize(n);
        if (full_.size() > 0) {
            out = full_.col(j);
            return;
        }
        parallel_for(0, n, [&](std::ptrdiff_t i) { out[i] = compute(i, j); });
    }

    // Dense Gram over a subset of candidates, used by the per-iteration
    // subset solver (full-set or mini-batch).
    Matrix submatrix(const std::vector<Index>& subset) const {
        const Index b = static_cast<Index>(subset.size());
        Matrix out(b, b);
        parallel_for(0, b, [&](std::ptrdiff_t a) {
            for (Index c = a; c < b; ++c) out(a, c) = eval(subset[a], subset[c]);
        });
        for (Index a = 0; a < b; ++a)
            for (Index c = 0; c < a; ++c) out(a, c) = out(c, a);
        return out;
    }

  private:
    double compute(Index i, Index j) const {
        const auto& pts = candidates_->points;
        if (mode_ == Mode::ksd)
            return stein_eval(SteinKernel{base_}, pts.row(i).transpose(), scores_.row(i).transpose(),
                              pts.row(j).transpose(), scores_.row(j).transpose());
        return kernel_eval(base_, pts.row(i).transpose(), pts.row(j).transpose());
    }

    const CandidateSet* candidates_;
    KernelSpec base_;
    Mode mode_;
    Matrix scores_;
    Vector h_;
    Vector diag_;
    double c2_ = 0.0;
    Matrix full_;
};

namespace detail {
inline double clamp_mmd2(double v) { return v < 0.0 ? 0.0 : v; }
}

// Squared discrepancy of a weighted empirical measure, before the
// nonnegativity clamp. Exposed for tests that bound the clamp magnitude.
inline double mmd_squared_raw(const EmpiricalMeasure& measure, const KernelContext& ctx) {
    measure.validate(ctx.size());
    const std::size_t m = measure.indices.size();
    const double uniform = 1.0 / static_cast<double>(m);
    auto weight = [&](std::size_t i) { return measure.weights ? (*measure.weights)[static_cast<Index>(i)] : uniform; };

    double quad = 0.0;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            quad += weight(a) * weight(b) * ctx.eval(measure.indices[a], measure.indices[b]);
    double lin = 0.0;
    for (std::size_t a = 0; a < m; ++a) lin += weight(a) * ctx.kernel_mean(measure.indices[a]);
    return quad - 2.0 * lin + ctx.c2();
}

inline double mmd_squared(const EmpiricalMeasure& measure, const KernelContext& ctx) {
    return detail::clamp_mmd2(mmd_squared_raw(measure, ctx));
}

inline double mmd_squared(const EmpiricalMeasure& measure, const CandidateSet& candidates,
                          const TargetModel& target, const KernelSpec& kernel) {
    KernelContext ctx(candidates, target, kernel);
    return mmd_squared(measure, ctx);
}

// Running sums for the greedy algorithms. With t points chosen so far,
//   r_j  = sum over chosen p of k(x_p, x_j)
//   a    = (t * MMD_t)^2 numerator, assembled from pair/mean sums
// so each candidate scan costs O(1) per candidate and an update costs one
// kernel column per distinct chosen point.
class SelectionState {
  public:
    explicit SelectionState(const KernelContext& ctx)
        : ctx_(&ctx), r_(Vector::Zero(ctx.size())) {}

    const KernelContext& context() const { return *ctx_; }
    Index count() const { return t_; }
    const Vector& running_kernel_sums() const { return r_; }
    const std::vector<Index>& chosen() const { return chosen_; }

    // c_j for the next subset solve selecting s more points: the running
    // pair sums minus (t+s) times the cached kernel mean.
    Vector linear_costs(Index s) const {
        const double total = static_cast<double>(t_ + s);
        Vector c(ctx_->size());
        for (Index j = 0; j < c.size(); ++j) c[j] = r_[j] - total * ctx_->kernel_mean(j);
        return c;
    }

    void update(const std::vector<Index>& chosen_now) {
        if (chosen_now.empty()) throw DataError("state update with empty selection");
        const Index n = ctx_->size();
        for (Index idx : chosen_now)
            if (idx < 0 || idx >= n)
                throw DataError("selected index " + std::to_string(idx) + " out of range");

        // Pair sums: cross terms against earlier picks use r before the
        // update, within-batch terms are summed directly.
        double cross = 0.0;
        for (Index idx : chosen_now) cross += r_[idx];
        double within = 0.0;
        for (Index a : chosen_now)
            for (Index b : chosen_now) within += ctx_->eval(a, b);
        sum_pairs_ += 2.0 * cross + within;
        for (Index idx : chosen_now) sum_means_ += ctx_->kernel_mean(idx);

        // r update: one column fetch per distinct index, added once per
        // copy so split and combined updates accumulate identically.
        std::vector<std::pair<Index, int>> counts;
        for (Index idx : chosen_now) {
            bool found = false;
            for (auto& kv : counts)
                if (kv.first == idx) {
                    ++kv.second;
                    found = true;
                }
            if (!found) counts.emplace_back(idx, 1);
        }
        Vector col;
        for (const auto& [idx, mult] : counts) {
            ctx_->column(idx, col);
            for (int copy = 0; copy < mult; ++copy) r_ += col;
        }

        t_ += static_cast<Index>(chosen_now.size());
        chosen_.insert(chosen_.end(), chosen_now.begin(), chosen_now.end());
    }

    // Squared objective numerator a = || f_t ||^2.
    double objective_numerator() const {
        const double t = static_cast<double>(t_);
        return sum_pairs_ - 2.0 * t * sum_means_ + t * t * ctx_->c2();
    }

    double mmd_squared_raw() const {
        if (t_ == 0) return 0.0;
        const double t = static_cast<double>(t_);
        return objective_numerator() / (t * t);
    }

    double mmd_squared() const { return detail::clamp_mmd2(mmd_squared_raw()); }

  private:
    const KernelContext* ctx_;
    Vector r_;
    double sum_pairs_ = 0.0;
    double sum_means_ = 0.0;
    Index t_ = 0;
    std::vector<Index> chosen_;
};

}  // namespace quant
