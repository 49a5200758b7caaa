#include "support.hpp"

namespace support {

GaussianMixture standard_gaussian(Index d) {
    GaussianMixture mix;
    GaussianMixture::Component comp;
    comp.weight = 1.0;
    comp.mean = Vector::Zero(d);
    comp.var_diag = Vector::Ones(d);
    mix.components.push_back(comp);
    return mix;
}

GaussianMixture random_mixture(Rng& rng, Index d, int max_components) {
    const int k = 1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(max_components)));
    GaussianMixture mix;
    std::vector<double> raw(static_cast<std::size_t>(k));
    double total = 0.0;
    for (auto& w : raw) {
        w = 0.2 + uniform01(rng);
        total += w;
    }
    for (int c = 0; c < k; ++c) {
        GaussianMixture::Component comp;
        comp.weight = raw[static_cast<std::size_t>(c)] / total;
        comp.mean = Vector(d);
        comp.var_diag = Vector(d);
        for (Index j = 0; j < d; ++j) {
            comp.mean[j] = -3.0 + 6.0 * uniform01(rng);
            comp.var_diag[j] = 0.05 + uniform01(rng);
        }
        mix.components.push_back(std::move(comp));
    }
    // Renormalise exactly enough for the 1e-12 invariant.
    double sum = 0.0;
    for (const auto& comp : mix.components) sum += comp.weight;
    for (auto& comp : mix.components) comp.weight /= sum;
    return mix;
}

Matrix sample_points(const GaussianMixture& mix, Index n, Rng& rng) {
    Matrix out(n, mix.dim());
    for (Index i = 0; i < n; ++i) out.row(i) = mix.sample(rng).transpose();
    return out;
}

Matrix random_points(Rng& rng, Index n, Index d, double scale) {
    Matrix out(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) out(i, j) = scale * (2.0 * uniform01(rng) - 1.0);
    return out;
}

Matrix gram_by_loop(const KernelSpec& kernel, const Matrix& points) {
    const Index n = points.rows();
    Matrix out(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            out(i, j) = kernel_eval(kernel, points.row(i).transpose(), points.row(j).transpose());
    return out;
}

Vector fd_log_density_grad(const GaussianMixture& mix, const Vector& x, double h) {
    Vector g(x.size());
    for (Index j = 0; j < x.size(); ++j) {
        Vector hi = x, lo = x;
        hi[j] += h;
        lo[j] -= h;
        g[j] = (mix.log_density(hi) - mix.log_density(lo)) / (2.0 * h);
    }
    return g;
}

double fd_stein(const KernelSpec& base, const Vector& x, const Vector& ux, const Vector& y,
                const Vector& uy, double h) {
    const Index d = x.size();
    auto k = [&](const Vector& a, const Vector& b) { return kernel_eval(base, a, b); };

    double div_term = 0.0;
    for (Index i = 0; i < d; ++i) {
        Vector xp = x, xm = x, yp = y, ym = y;
        xp[i] += h;
        xm[i] -= h;
        yp[i] += h;
        ym[i] -= h;
        div_term += (k(xp, yp) - k(xp, ym) - k(xm, yp) + k(xm, ym)) / (4.0 * h * h);
    }
    double grad_x_dot_uy = 0.0;
    double grad_y_dot_ux = 0.0;
    for (Index i = 0; i < d; ++i) {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        grad_x_dot_uy += (k(xp, y) - k(xm, y)) / (2.0 * h) * uy[i];
        Vector yp = y, ym = y;
        yp[i] += h;
        ym[i] -= h;
        grad_y_dot_ux += (k(x, yp) - k(x, ym)) / (2.0 * h) * ux[i];
    }
    return div_term + grad_x_dot_uy + grad_y_dot_ux + k(x, y) * ux.dot(uy);
}

double mmd2_uniform_by_loop(const std::vector<Index>& picks, const KernelContext& ctx) {
    const double m = static_cast<double>(picks.size());
    double quad = 0.0;
    for (Index a : picks)
        for (Index b : picks) quad += ctx.eval(a, b);
    double lin = 0.0;
    for (Index a : picks) lin += ctx.kernel_mean(a);
    return quad / (m * m) - 2.0 * lin / m + ctx.c2();
}

}  // namespace support
