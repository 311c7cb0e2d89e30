#include "gcfed/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numeric>

namespace gcfed {

double top1_accuracy(const ModelParams& model, const Dataset& test) {
    if (test.size() == 0) throw ConfigError("top1_accuracy: empty test set");
    constexpr std::size_t kChunk = 1024;
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < test.size(); start += kChunk) {
        const std::size_t end = std::min(test.size(), start + kChunk);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor logits = forward(model, test.batch(idx));
        const std::size_t k = logits.dim(1);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const double* row = logits.data().data() + r * k;
            // max_element returns the first maximum: lowest index wins ties.
            const auto pred = static_cast<int>(std::max_element(row, row + k) - row);
            if (pred == test.labels[idx[r]]) ++correct;
        }
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

double update_discrepancy(const ParamGroups& truth, const ParamGroups& partial) {
    double diff = 0.0;
    if (truth.size() != partial.size()) throw ConfigError("update_discrepancy: layout mismatch");
    for (std::size_t g = 0; g < truth.size(); ++g) {
        require_same_shape(truth[g], partial[g], "update_discrepancy");
        for (std::size_t i = 0; i < truth[g].size(); ++i) {
            const double d = partial[g][i] - truth[g][i];
            diff += d * d;
        }
    }
    return std::sqrt(diff) / (std::sqrt(squared_norm(truth)) + 1e-12);
}

double cosine_discrepancy(const ParamGroups& truth, const ParamGroups& partial) {
    const double nt = std::sqrt(squared_norm(truth));
    const double np = std::sqrt(squared_norm(partial));
    if (nt == 0.0 || np == 0.0) return 1.0;
    return 1.0 - dot(truth, partial) / (nt * np);
}

namespace {

std::vector<double> centered_columns(const Tensor& a) {
    const std::size_t n = a.dim(0), f = a.size() / n;
    std::vector<double> out(a.storage());
    for (std::size_t c = 0; c < f; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += out[r * f + c];
        mean /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) out[r * f + c] -= mean;
    }
    return out;
}

// ||A^T B||_F^2 for row-major A [n x fa], B [n x fb].
double cross_frobenius_sq(const std::vector<double>& a, std::size_t fa, const std::vector<double>& b,
                          std::size_t fb, std::size_t n) {
    std::vector<double> m(fa * fb, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const double* ar = a.data() + r * fa;
        const double* br = b.data() + r * fb;
        for (std::size_t i = 0; i < fa; ++i) {
            const double av = ar[i];
            if (av == 0.0) continue;
            double* mi = m.data() + i * fb;
            for (std::size_t j = 0; j < fb; ++j) mi[j] += av * br[j];
        }
    }
    double s = 0.0;
    for (double v : m) s += v * v;
    return s;
}

void warn_zero_variance_once() {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) std::cerr << "warning: linear_cka on zero-variance activations, returning 0\n";
}

}  // namespace

double linear_cka(const Tensor& x, const Tensor& y) {
    if (x.rank() < 1 || y.rank() < 1 || x.dim(0) != y.dim(0)) {
        throw ConfigError("linear_cka: inputs must share the sample dimension");
    }
    const std::size_t n = x.dim(0);
    if (n < 2) throw ConfigError("linear_cka: need at least two samples");
    const std::size_t fx = x.size() / n, fy = y.size() / n;
    const auto xc = centered_columns(x);
    const auto yc = centered_columns(y);
    const double xy = cross_frobenius_sq(xc, fx, yc, fy, n);
    const double xx = std::sqrt(cross_frobenius_sq(xc, fx, xc, fx, n));
    const double yy = std::sqrt(cross_frobenius_sq(yc, fy, yc, fy, n));
    if (xx == 0.0 || yy == 0.0) {
        warn_zero_variance_once();
        return 0.0;
    }
    return std::clamp(xy / (xx * yy), 0.0, 1.0);
}

FirstOrderStats first_order_stats(std::span<const double> series) {
    if (series.size() < 2) throw ConfigError("first_order_stats: need at least two values");
    std::vector<double> d(series.size() - 1);
    for (std::size_t t = 0; t + 1 < series.size(); ++t) d[t] = series[t + 1] - series[t];
    FirstOrderStats s;
    s.mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / static_cast<double>(d.size()));
    s.min = *std::min_element(d.begin(), d.end());
    return s;
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
    if (window == 0) throw ConfigError("moving_average: window must be >= 1");
    std::vector<double> out(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::size_t lo = t + 1 >= window ? t + 1 - window : 0;
        double s = 0.0;
        for (std::size_t i = lo; i <= t; ++i) s += series[i];
        out[t] = s / static_cast<double>(t - lo + 1);
    }
    return out;
}

}  // namespace gcfed
