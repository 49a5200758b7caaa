#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "quant/errors.hpp"
#include "quant/parallel.hpp"
#include "quant/rng.hpp"
#include "quant/types.hpp"

namespace quant {

enum class KernelFamily { squared_exponential, inverse_multiquadric };

inline std::string to_string(KernelFamily f) {
    return f == KernelFamily::squared_exponential ? "se" : "imq";
}

// Base kernel: a radial profile phi applied to the squared distance,
// k(x,y) = phi(||x-y||^2).
struct KernelSpec {
    KernelFamily family = KernelFamily::squared_exponential;
    double lengthscale = 1.0;

    void validate() const {
        if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
            throw ConfigError("kernel lengthscale must be positive and finite, got " +
                              std::to_string(lengthscale));
    }
};

namespace detail {

// phi and its first two derivatives in t = squared distance.
struct RadialProfile {
    double phi;
    double dphi;
    double d2phi;
};

inline RadialProfile radial_profile(const KernelSpec& k, double t) {
    const double l2 = k.lengthscale * k.lengthscale;
    if (k.family == KernelFamily::squared_exponential) {
        const double v = std::exp(-t / (2.0 * l2));
        return {v, -v / (2.0 * l2), v / (4.0 * l2 * l2)};
    }
    const double w = 1.0 + t / l2;
    const double w12 = std::sqrt(w);
    const double phi = 1.0 / w12;
    return {phi, -0.5 / (l2 * w * w12), 0.75 / (l2 * l2 * w * w * w12)};
}

inline double radial_value(const KernelSpec& k, double t) {
    const double l2 = k.lengthscale * k.lengthscale;
    if (k.family == KernelFamily::squared_exponential) return std::exp(-t / (2.0 * l2));
    return 1.0 / std::sqrt(1.0 + t / l2);
}

inline void check_same_dim(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
    if (x.size() != y.size())
        throw ConfigError("kernel arguments have mismatched dimensions " +
                          std::to_string(x.size()) + " vs " + std::to_string(y.size()));
}

// (x_i - y_i)^2 summed in index order; bitwise symmetric in x, y.
inline double squared_distance(const Eigen::Ref<const Vector>& x,
                               const Eigen::Ref<const Vector>& y) {
    double t = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        t += d * d;
    }
    return t;
}

}  // namespace detail

inline double kernel_eval(const KernelSpec& k, const Eigen::Ref<const Vector>& x,
                          const Eigen::Ref<const Vector>& y) {
    detail::check_same_dim(x, y);
    return detail::radial_value(k, detail::squared_distance(x, y));
}

inline Matrix gram(const KernelSpec& k, const Matrix& points) {
    const Index n = points.rows();
    if (n == 0) throw DataError("gram: empty point set");
    Matrix out(n, n);
    parallel_for(0, n, [&](std::ptrdiff_t i) {
        for (Index j = i; j < n; ++j)
            out(i, j) = kernel_eval(k, points.row(i).transpose(), points.row(j).transpose());
    });
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < i; ++j) out(i, j) = out(j, i);
    return out;
}

// Length-scale estimator: sqrt(half the median squared pairwise distance)
// over a seeded uniform subsample without replacement. Even pair counts
// interpolate the two middle order statistics.
inline double median_heuristic(const Matrix& points, std::size_t subsample, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(points.rows());
    if (n < 2) throw DataError("median_heuristic: need at least 2 points");
    if (subsample < 2) throw ConfigError("median_heuristic: subsample must be >= 2");

    std::vector<std::size_t> idx;
    if (subsample >= n) {
        idx.resize(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    } else {
        Rng rng(seed);
        idx = sample_without_replacement(rng, n, subsample);
    }

    const std::size_t m = idx.size();
    std::vector<double> d2;
    d2.reserve(m * (m - 1) / 2);
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            d2.push_back(detail::squared_distance(points.row(static_cast<Index>(idx[a])).transpose(),
                                                  points.row(static_cast<Index>(idx[b])).transpose()));

    const std::size_t count = d2.size();
    const std::size_t hi = count / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(hi), d2.end());
    double med = d2[hi];
    if (count % 2 == 0) {
        const double lo = *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(hi));
        med = 0.5 * (lo + med);
    }
    if (!(med > 0.0))
        throw DataError("median_heuristic: median pairwise distance is zero (degenerate data)");
    return std::sqrt(0.5 * med);
}

}  // namespace quant
