#include "gcfed/gc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>

namespace gcfed {

std::string to_string(AxisMode mode) {
    switch (mode) {
        case AxisMode::OutChannel: return "out_channel";
        case AxisMode::OutIn: return "out_in";
        case AxisMode::OutKernel: return "out_kernel";
        case AxisMode::OutInKh: return "out_in_kh";
        case AxisMode::InKernel: return "in_kernel";
    }
    return "?";
}

AxisMode parse_axis_mode(const std::string& name) {
    for (AxisMode m : {AxisMode::OutChannel, AxisMode::OutIn, AxisMode::OutKernel, AxisMode::OutInKh,
                       AxisMode::InKernel}) {
        if (to_string(m) == name) return m;
    }
    throw ConfigError("unknown gc.axis_mode '" + name +
                      "' (expected out_channel, out_in, out_kernel, out_in_kh or in_kernel)");
}

std::vector<std::size_t> reduced_axes(std::size_t rank, AxisMode mode) {
    if (rank < 2) throw NotCentralizable("GC needs a tensor of rank >= 2, got rank " + std::to_string(rank));
    if (rank != 4) {
        if (mode == AxisMode::InKernel) return {0};
        std::vector<std::size_t> axes;
        for (std::size_t a = 1; a < rank; ++a) axes.push_back(a);
        return axes;
    }
    switch (mode) {
        case AxisMode::OutChannel: return {1, 2, 3};
        case AxisMode::OutIn: return {2, 3};
        case AxisMode::OutKernel: return {1};
        case AxisMode::OutInKh: return {2};
        case AxisMode::InKernel: return {0};
    }
    return {1, 2, 3};
}

std::size_t reduction_length(const Shape& shape, AxisMode mode) {
    std::size_t m = 1;
    for (std::size_t a : reduced_axes(shape.size(), mode)) m *= shape[a];
    return m;
}

bool is_centralizable(const Tensor& g, const ProjectionSpec& spec) {
    return g.rank() >= 2 && reduction_length(g.shape(), spec.axis_mode) >= 2;
}

namespace {

// Maps each flat element index to (row = reduced multi-index, col = kept multi-index).
struct MatrixView {
    std::size_t m = 1;  // reduced length
    std::size_t n = 1;  // kept length
    Shape mean_shape;
    std::vector<std::size_t> row;
    std::vector<std::size_t> col;
};

MatrixView matrix_view(const Shape& shape, AxisMode mode) {
    const auto axes = reduced_axes(shape.size(), mode);
    std::vector<bool> reduced(shape.size(), false);
    for (std::size_t a : axes) reduced[a] = true;

    MatrixView v;
    v.mean_shape = shape;
    for (std::size_t a = 0; a < shape.size(); ++a) {
        if (reduced[a]) {
            v.m *= shape[a];
            v.mean_shape[a] = 1;
        } else {
            v.n *= shape[a];
        }
    }
    const std::size_t total = shape_numel(shape);
    v.row.resize(total);
    v.col.resize(total);
    std::vector<std::size_t> idx(shape.size(), 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = 0, c = 0;
        for (std::size_t a = 0; a < shape.size(); ++a) {
            if (reduced[a]) {
                r = r * shape[a] + idx[a];
            } else {
                c = c * shape[a] + idx[a];
            }
        }
        v.row[flat] = r;
        v.col[flat] = c;
        for (std::size_t a = shape.size(); a-- > 0;) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
    return v;
}

void warn_degenerate_once(const Shape& shape) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
        std::cerr << "warning: skipping gradient centralization for tensor " << shape_to_string(shape)
                  << " (reduction length 1)\n";
    }
}

}  // namespace

Tensor mu_vector(const Tensor& g, const ProjectionSpec& spec) {
    const MatrixView v = matrix_view(g.shape(), spec.axis_mode);
    Tensor mu(v.mean_shape);
    for (std::size_t i = 0; i < g.size(); ++i) mu[v.col[i]] += g[i];
    for (double& x : mu.data()) x /= static_cast<double>(v.m);
    return mu;
}

Tensor centralize_mean_sub(const Tensor& g, const ProjectionSpec& spec) {
    const MatrixView v = matrix_view(g.shape(), spec.axis_mode);
    std::vector<double> mu(v.n, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) mu[v.col[i]] += g[i];
    for (double& x : mu) x /= static_cast<double>(v.m);
    Tensor out = g;
    for (std::size_t i = 0; i < g.size(); ++i) out[i] -= mu[v.col[i]];
    return out;
}

Tensor centralize_project(const Tensor& g, const ProjectionSpec& spec) {
    const MatrixView v = matrix_view(g.shape(), spec.axis_mode);
    const std::size_t m = v.m, n = v.n;
    // G as an m×n matrix and P = I - e e^T as an explicit m×m matrix.
    std::vector<double> gm(m * n, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) gm[v.row[i] * n + v.col[i]] = g[i];
    const double e = 1.0 / std::sqrt(static_cast<double>(m));
    std::vector<double> p(m * m);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < m; ++c) p[r * m + c] = (r == c ? 1.0 : 0.0) - e * e;
    }
    std::vector<double> pg(m * n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t k = 0; k < m; ++k) {
            const double prk = p[r * m + k];
            const double* src = gm.data() + k * n;
            double* dst = pg.data() + r * n;
            for (std::size_t c = 0; c < n; ++c) dst[c] += prk * src[c];
        }
    }
    Tensor out(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = pg[v.row[i] * n + v.col[i]];
    return out;
}

Tensor centralize(const Tensor& g, const ProjectionSpec& spec) {
    Tensor out = g;
    centralize_in_place(out, spec);
    return out;
}

void centralize_in_place(Tensor& g, const ProjectionSpec& spec) {
    if (g.rank() < 2) return;
    if (reduction_length(g.shape(), spec.axis_mode) < 2) {
        warn_degenerate_once(g.shape());
        return;
    }
    // Fast path for the default reduction: rows of the trailing block share one mean.
    const auto axes = reduced_axes(g.rank(), spec.axis_mode);
    if (axes.front() == 1 && axes.size() == g.rank() - 1) {
        const std::size_t rows = g.dim(0);
        const std::size_t m = g.size() / rows;
        double* d = g.data().data();
        for (std::size_t r = 0; r < rows; ++r) {
            double* row = d + r * m;
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += row[i];
            const double mu = s / static_cast<double>(m);
            for (std::size_t i = 0; i < m; ++i) row[i] -= mu;
        }
        return;
    }
    g = centralize_mean_sub(g, spec);
}

std::vector<double> e_transpose(const Tensor& g, const ProjectionSpec& spec) {
    const MatrixView v = matrix_view(g.shape(), spec.axis_mode);
    std::vector<double> out(v.n, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) out[v.col[i]] += g[i];
    const double e = 1.0 / std::sqrt(static_cast<double>(v.m));
    for (double& x : out) x *= e;
    return out;
}

std::vector<std::size_t> select_local_layers(std::size_t layer_count, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ConfigError("gc.lambda must lie in [0, 1], got " + std::to_string(lambda));
    }
    // Small slack so that e.g. 0.75 * 4 is not floored to 2 by representation error.
    const auto count = std::min(layer_count, static_cast<std::size_t>(
                                                 std::floor(lambda * static_cast<double>(layer_count) + 1e-9)));
    std::vector<std::size_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = i;
    return out;
}

}  // namespace gcfed
