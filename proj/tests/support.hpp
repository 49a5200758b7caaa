#pragma once

#include "quant/discrepancy.hpp"
#include "quant/kernels.hpp"
#include "quant/stein.hpp"
#include "quant/target.hpp"

// Shared fixtures and independent oracles for the test suites. Everything
// here is deliberately brute-force and kept apart from the library's own
// computation paths.
namespace support {

using namespace quant;

GaussianMixture standard_gaussian(Index d);

// Seeded random mixture: up to max_components, means in [-3,3]^d,
// variances in [0.05, 1.05].
GaussianMixture random_mixture(Rng& rng, Index d, int max_components);

Matrix sample_points(const GaussianMixture& mix, Index n, Rng& rng);

Matrix random_points(Rng& rng, Index n, Index d, double scale = 2.0);

// Gram matrix recomputed entry by entry with a plain double loop.
Matrix gram_by_loop(const KernelSpec& kernel, const Matrix& points);

// Central-difference gradient of the mixture log density.
Vector fd_log_density_grad(const GaussianMixture& mix, const Vector& x, double h = 1e-5);

// Stein kernel assembled from base-kernel evaluations only, all four terms
// by central differences at step h.
double fd_stein(const KernelSpec& base, const Vector& x, const Vector& ux, const Vector& y,
                const Vector& uy, double h = 1e-4);

// MMD^2 of a uniform measure on the given indices via the plain double sum.
double mmd2_uniform_by_loop(const std::vector<Index>& picks, const KernelContext& ctx);

}  // namespace support
