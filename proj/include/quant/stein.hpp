#pragma once

#include "quant/kernels.hpp"
#include "quant/types.hpp"

namespace quant {

// Compound Stein kernel built from a differentiable base kernel and the
// target's score function. Score rows are supplied by the caller so the
// kernel itself stays a pure function of (x, u(x), y, u(y)).
struct SteinKernel {
    KernelSpec base;
};

// k_mu(x,y) = div_x div_y k + grad_x k . u(y) + grad_y k . u(x) + k u(x).u(y).
// For radial k = phi(t), t = ||x-y||^2:
//   div_x div_y k        = -4 t phi''(t) - 2 d phi'(t)
//   grad_x k . u(y) + grad_y k . u(x) = 2 phi'(t) (x-y).(u(y)-u(x))
// Each term is evaluated bitwise symmetrically in (x,ux) <-> (y,uy).
inline double stein_eval(const SteinKernel& kernel, const Eigen::Ref<const Vector>& x,
                         const Eigen::Ref<const Vector>& ux, const Eigen::Ref<const Vector>& y,
                         const Eigen::Ref<const Vector>& uy) {
    detail::check_same_dim(x, y);
    detail::check_same_dim(x, ux);
    detail::check_same_dim(y, uy);
    const Index d = x.size();
    const double t = detail::squared_distance(x, y);
    const auto p = detail::radial_profile(kernel.base, t);

    double cross = 0.0;   // (x-y).(u(y)-u(x))
    double scores = 0.0;  // u(x).u(y)
    for (Index i = 0; i < d; ++i) {
        cross += (x[i] - y[i]) * (uy[i] - ux[i]);
        scores += ux[i] * uy[i];
    }
    const double trace_term = -4.0 * t * p.d2phi - 2.0 * static_cast<double>(d) * p.dphi;
    return trace_term + 2.0 * p.dphi * cross + p.phi * scores;
}

inline Matrix stein_gram(const SteinKernel& kernel, const Matrix& points, const Matrix& scores) {
    const Index n = points.rows();
    if (n == 0) throw DataError("stein_gram: empty point set");
    if (scores.rows() != n || scores.cols() != points.cols())
        throw DataError("stein_gram: score matrix shape does not match points");
    Matrix out(n, n);
    parallel_for(0, n, [&](std::ptrdiff_t i) {
        for (Index j = i; j < n; ++j)
            out(i, j) = stein_eval(kernel, points.row(i).transpose(), scores.row(i).transpose(),
                                   points.row(j).transpose(), scores.row(j).transpose());
    });
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < i; ++j) out(i, j) = out(j, i);
    return out;
}

}  // namespace quant
