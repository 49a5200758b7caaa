#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "quant/kernels.hpp"
#include "quant/rng.hpp"
#include "quant/types.hpp"

namespace quant {

enum class Mode { mmd, ksd };

inline std::string to_string(Mode m) { return m == Mode::mmd ? "mmd" : "ksd"; }

// Mixture of Gaussians with diagonal covariances. Supplies the density
// score and, for the squared-exponential kernel, closed-form kernel means.
struct GaussianMixture {
    struct Component {
        double weight = 1.0;
        Vector mean;
        Vector var_diag;
    };
    std::vector<Component> components;

    Index dim() const { return components.empty() ? 0 : components.front().mean.size(); }

    void validate() const {
        if (components.empty()) throw DataError("mixture has no components");
        const Index d = components.front().mean.size();
        if (d == 0) throw DataError("mixture components have dimension 0");
        double total = 0.0;
        for (const auto& c : components) {
            if (!(c.weight > 0.0)) throw DataError("mixture weights must be strictly positive");
            if (c.mean.size() != d || c.var_diag.size() != d)
                throw DataError("mixture component dimensions disagree");
            if ((c.var_diag.array() <= 0.0).any())
                throw DataError("mixture covariance entries must be strictly positive");
            total += c.weight;
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw DataError("mixture weights must sum to 1, got " + std::to_string(total));
    }

    double log_density(const Eigen::Ref<const Vector>& x) const {
        const double log2pi = 1.8378770664093454835606594728112;
        double max_term = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(components.size());
        for (std::size_t c = 0; c < components.size(); ++c) {
            const auto& comp = components[c];
            double lt = std::log(comp.weight);
            for (Index j = 0; j < x.size(); ++j) {
                const double d = x[j] - comp.mean[j];
                lt -= 0.5 * (log2pi + std::log(comp.var_diag[j])) + d * d / (2.0 * comp.var_diag[j]);
            }
            terms[c] = lt;
            max_term = std::max(max_term, lt);
        }
        double acc = 0.0;
        for (double lt : terms) acc += std::exp(lt - max_term);
        return max_term + std::log(acc);
    }

    // u(x) = grad log p(x), computed from component responsibilities.
    Vector score(const Eigen::Ref<const Vector>& x) const {
        const Index d = x.size();
        std::vector<double> logr(components.size());
        double max_term = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < components.size(); ++c) {
            const auto& comp = components[c];
            double lt = std::log(comp.weight);
            for (Index j = 0; j < d; ++j) {
                const double dj = x[j] - comp.mean[j];
                lt -= 0.5 * std::log(comp.var_diag[j]) + dj * dj / (2.0 * comp.var_diag[j]);
            }
            logr[c] = lt;
            max_term = std::max(max_term, lt);
        }
        double norm = 0.0;
        for (double& lt : logr) {
            lt = std::exp(lt - max_term);
            norm += lt;
        }
        Vector u = Vector::Zero(d);
        for (std::size_t c = 0; c < components.size(); ++c) {
            const auto& comp = components[c];
            const double r = logr[c] / norm;
            for (Index j = 0; j < d; ++j) u[j] += r * (comp.mean[j] - x[j]) / comp.var_diag[j];
        }
        return u;
    }

    Vector sample(Rng& rng) const {
        const double pick = uniform01(rng);
        double acc = 0.0;
        std::size_t chosen = components.size() - 1;
        for (std::size_t c = 0; c < components.size(); ++c) {
            acc += components[c].weight;
            if (pick < acc) {
                chosen = c;
                break;
            }
        }
        const auto& comp = components[chosen];
        Vector x(comp.mean.size());
        for (Index j = 0; j < x.size(); ++j)
            x[j] = comp.mean[j] + std::sqrt(comp.var_diag[j]) * gaussian(rng);
        return x;
    }
};

// Score-only target: precomputed u(x_i) per candidate point, as produced
// alongside MCMC output. Lookup is by candidate index.
struct ScoreTarget {
    Matrix scores;  // n x d

    Index dim() const { return scores.cols(); }

    Vector score_at(Index i) const {
        if (i < 0 || i >= scores.rows())
            throw DataError("score lookup for point " + std::to_string(i) +
                            " outside the candidate set of size " + std::to_string(scores.rows()));
        return scores.row(i).transpose();
    }
};

class TargetModel {
  public:
    static TargetModel mixture(GaussianMixture m, Mode mode) {
        m.validate();
        TargetModel t;
        t.model_ = std::move(m);
        t.mode_ = mode;
        return t;
    }

    static TargetModel score_only(Matrix scores) {
        if (scores.rows() == 0 || scores.cols() == 0)
            throw DataError("score-only target needs a nonempty score matrix");
        if (!scores.allFinite()) throw DataError("score-only target has non-finite entries");
        TargetModel t;
        t.model_ = ScoreTarget{std::move(scores)};
        t.mode_ = Mode::ksd;
        return t;
    }

    Mode mode() const { return mode_; }
    bool is_mixture() const { return std::holds_alternative<GaussianMixture>(model_); }
    const GaussianMixture& as_mixture() const { return std::get<GaussianMixture>(model_); }
    const ScoreTarget& as_scores() const { return std::get<ScoreTarget>(model_); }

    Index dim() const {
        return is_mixture() ? as_mixture().dim() : as_scores().dim();
    }

    void check_kernel_pairing(const KernelSpec& kernel) const {
        if (mode_ == Mode::mmd) {
            if (!is_mixture())
                throw ConfigError("mmd mode needs an analytic mixture target, got score-only data");
            if (kernel.family != KernelFamily::squared_exponential)
                throw ConfigError("exact kernel means are only available for the "
                                  "squared-exponential kernel with a Gaussian mixture target; got " +
                                  to_string(kernel.family) + " kernel");
        } else if (!is_mixture() && !std::holds_alternative<ScoreTarget>(model_)) {
            throw ConfigError("ksd mode needs a score source");
        }
    }

    // h(x) = int k(x,y) dmu(y). Zero by construction in ksd mode.
    double kernel_mean(const KernelSpec& kernel, const Eigen::Ref<const Vector>& x) const {
        if (mode_ == Mode::ksd) return 0.0;
        check_kernel_pairing(kernel);
        const auto& mix = as_mixture();
        const double l2 = kernel.lengthscale * kernel.lengthscale;
        double total = 0.0;
        for (const auto& comp : mix.components) {
            double log_amp = 0.0;
            double expo = 0.0;
            for (Index j = 0; j < x.size(); ++j) {
                const double s = l2 + comp.var_diag[j];
                const double d = x[j] - comp.mean[j];
                log_amp += 0.5 * std::log(l2 / s);
                expo += d * d / (2.0 * s);
            }
            total += comp.weight * std::exp(log_amp - expo);
        }
        return total;
    }

    // C^2 = double integral of k against mu x mu; zero in ksd mode.
    double double_integral(const KernelSpec& kernel) const {
        if (mode_ == Mode::ksd) return 0.0;
        check_kernel_pairing(kernel);
        const auto& mix = as_mixture();
        const double l2 = kernel.lengthscale * kernel.lengthscale;
        double total = 0.0;
        for (const auto& a : mix.components) {
            for (const auto& b : mix.components) {
                double log_amp = 0.0;
                double expo = 0.0;
                for (Index j = 0; j < a.mean.size(); ++j) {
                    const double s = l2 + a.var_diag[j] + b.var_diag[j];
                    const double d = a.mean[j] - b.mean[j];
                    log_amp += 0.5 * std::log(l2 / s);
                    expo += d * d / (2.0 * s);
                }
                total += a.weight * b.weight * std::exp(log_amp - expo);
            }
        }
        return total;
    }

    // Score matrix aligned with the candidate set; ksd selection needs one
    // row per candidate.
    Matrix score_matrix(const CandidateSet& candidates) const {
        if (is_mixture()) {
            const auto& mix = as_mixture();
            if (mix.dim() != candidates.dim())
                throw DataError("target dimension " + std::to_string(mix.dim()) +
                                " does not match candidate dimension " +
                                std::to_string(candidates.dim()));
            Matrix u(candidates.size(), candidates.dim());
            parallel_for(0, candidates.size(), [&](std::ptrdiff_t i) {
                u.row(i) = mix.score(candidates.points.row(i).transpose()).transpose();
            });
            return u;
        }
        const auto& st = as_scores();
        if (st.scores.rows() != candidates.size() || st.scores.cols() != candidates.dim())
            throw DataError("stored scores shape " + std::to_string(st.scores.rows()) + "x" +
                            std::to_string(st.scores.cols()) + " does not match candidates " +
                            std::to_string(candidates.size()) + "x" +
                            std::to_string(candidates.dim()));
        return st.scores;
    }

  private:
    std::variant<GaussianMixture, ScoreTarget> model_;
    Mode mode_ = Mode::mmd;
};

}  // namespace quant
