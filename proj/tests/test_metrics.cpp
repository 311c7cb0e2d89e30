#include <gtest/gtest.h>

#include <cmath>

#include "gcfed/metrics.hpp"
#include "test_util.hpp"

using namespace gcfed;
using gcfed::testing::random_tensor;

namespace {

Dataset balanced_set(std::size_t classes, std::size_t per_class, std::size_t dim, std::mt19937_64& rng) {
    Dataset d;
    d.sample_shape = {dim};
    d.num_classes = classes;
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t i = 0; i < classes * per_class; ++i) {
        d.labels.push_back(static_cast<int>(i % classes));
        for (std::size_t j = 0; j < dim; ++j) d.features.push_back(n(rng));
    }
    return d;
}

ModelParams linear(std::size_t in, std::size_t out, std::uint64_t seed) {
    ArchSpec s;
    s.kind = ArchKind::Linear;
    s.widths = {in, out};
    return build_model(s, seed);
}

// Modified Gram-Schmidt QR, returning Q.
Tensor orthogonal(std::size_t n, std::mt19937_64& rng) {
    Tensor a = random_tensor({n, n}, rng);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double d = 0.0;
            for (std::size_t i = 0; i < n; ++i) d += a[i * n + j] * a[i * n + k];
            for (std::size_t i = 0; i < n; ++i) a[i * n + j] -= d * a[i * n + k];
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += a[i * n + j] * a[i * n + j];
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) a[i * n + j] /= norm;
    }
    return a;
}

Tensor matmul(const Tensor& x, const Tensor& q) {
    const std::size_t r = x.dim(0), c = x.dim(1), k = q.dim(1);
    Tensor out({r, k});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < c; ++t) s += x[i * c + t] * q[t * k + j];
            out[i * k + j] = s;
        }
    return out;
}

}  // namespace

TEST(Accuracy, ConstantPredictor) {
    std::mt19937_64 rng(1);
    const auto d = balanced_set(4, 25, 3, rng);
    auto m = linear(3, 4, 0);
    m.layers[0].weight *= 0.0;
    m.layers[0].bias[2] = 1.0;
    EXPECT_DOUBLE_EQ(top1_accuracy(m, d), 25.0);
}

TEST(Accuracy, TiesGoToLowestClass) {
    std::mt19937_64 rng(1);
    const auto d = balanced_set(4, 5, 3, rng);
    auto m = linear(3, 4, 0);
    m.layers[0].weight *= 0.0;  // all logits equal
    EXPECT_DOUBLE_EQ(top1_accuracy(m, d), 25.0);  // only class 0 counted correct
}

TEST(Accuracy, PerfectLabels) {
    std::mt19937_64 rng(2);
    auto d = balanced_set(3, 10, 3, rng);
    // Labels set to the argmax of the raw features, identity model.
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto s = d.sample(i);
        d.labels[i] = static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
    }
    auto m = linear(3, 3, 0);
    m.layers[0].weight = Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    EXPECT_DOUBLE_EQ(top1_accuracy(m, d), 100.0);
}

TEST(Accuracy, MatchesRecount) {
    std::mt19937_64 rng(3);
    const auto d = balanced_set(5, 300, 6, rng);  // > one evaluation chunk
    const auto m = linear(6, 5, 9);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto x = d.sample(i);
        int best = 0;
        double best_v = -INFINITY;
        for (int c = 0; c < 5; ++c) {
            double z = m.layers[0].bias[c];
            for (std::size_t j = 0; j < 6; ++j) z += m.layers[0].weight[c * 6 + j] * x[j];
            if (z > best_v) {
                best_v = z;
                best = c;
            }
        }
        correct += best == d.labels[i];
    }
    EXPECT_DOUBLE_EQ(top1_accuracy(m, d), 100.0 * static_cast<double>(correct) / static_cast<double>(d.size()));
}

TEST(Accuracy, EmptyTestSetIsConfigError) {
    Dataset d;
    d.sample_shape = {3};
    d.num_classes = 2;
    EXPECT_THROW(top1_accuracy(linear(3, 2, 0), d), ConfigError);
}

TEST(Discrepancy, Examples) {
    std::mt19937_64 rng(4);
    const ParamGroups t{random_tensor({3, 4}, rng), random_tensor({3}, rng)};
    EXPECT_EQ(update_discrepancy(t, t), 0.0);
    ParamGroups twice = t;
    for (auto& g : twice) g *= 2.0;
    const double norm = std::sqrt(squared_norm(t));
    EXPECT_NEAR(update_discrepancy(t, twice), norm / (norm + 1e-12), 1e-15);
    EXPECT_NEAR(cosine_discrepancy(t, twice), 0.0, 1e-15);
    ParamGroups neg = t;
    for (auto& g : neg) g *= -1.0;
    EXPECT_NEAR(cosine_discrepancy(t, neg), 2.0, 1e-15);
    ParamGroups other = t;
    other[0][0] += 1e-3;
    EXPECT_GT(update_discrepancy(t, other), 0.0);
}

TEST(Cka, SelfSimilarityIsOne) {
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({50, 8}, rng);
    EXPECT_NEAR(linear_cka(x, x), 1.0, 1e-9);
}

TEST(Cka, OrthogonalAndScaleInvariance) {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 5; ++rep) {
        const Tensor x = random_tensor({60, 7}, rng);
        const Tensor y = random_tensor({60, 7}, rng) + x * 0.5;
        const double base = linear_cka(x, y);
        const Tensor q = orthogonal(7, rng);
        EXPECT_NEAR(linear_cka(x, matmul(y, q)), base, 1e-9);
        EXPECT_NEAR(linear_cka(x, y * 3.7), base, 1e-9);
        EXPECT_NEAR(linear_cka(x * 0.01, y), base, 1e-9);
    }
}

TEST(Cka, InvertibleMapGivesOne) {
    std::mt19937_64 rng(7);
    const Tensor x = random_tensor({40, 5}, rng);
    const Tensor q = orthogonal(5, rng);
    EXPECT_NEAR(linear_cka(x, matmul(x, q) * 2.0), 1.0, 1e-9);
}

TEST(Cka, IndependentGaussianIsLow) {
    std::mt19937_64 rng(8);
    const Tensor x = random_tensor({1000, 10}, rng);
    const Tensor y = random_tensor({1000, 10}, rng);
    const double v = linear_cka(x, y);
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 0.2);
}

TEST(Cka, ZeroVarianceIsZero) {
    std::mt19937_64 rng(9);
    const Tensor x = random_tensor({10, 3}, rng);
    EXPECT_EQ(linear_cka(x, Tensor({10, 4}, 2.5)), 0.0);
}

TEST(Cka, AlwaysInUnitInterval) {
    std::mt19937_64 rng(10);
    for (int rep = 0; rep < 50; ++rep) {
        const Tensor x = random_tensor({12, 3}, rng);
        const Tensor y = random_tensor({12, 6}, rng);
        const double v = linear_cka(x, y);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Cka, RowCountMismatch) { EXPECT_THROW(linear_cka(Tensor({4, 2}), Tensor({5, 2})), ConfigError); }

TEST(FirstOrder, Examples) {
    const std::vector<double> flat(5, 42.0);
    const auto a = first_order_stats(flat);
    EXPECT_EQ(a.mean, 0.0);
    EXPECT_EQ(a.std, 0.0);
    EXPECT_EQ(a.min, 0.0);
    const std::vector<double> zig{0, 10, 0};
    const auto b = first_order_stats(zig);
    EXPECT_DOUBLE_EQ(b.mean, 0.0);
    EXPECT_DOUBLE_EQ(b.std, 10.0);
    EXPECT_DOUBLE_EQ(b.min, -10.0);
    const std::vector<double> one{1.0};
    EXPECT_THROW(first_order_stats(one), ConfigError);
}

TEST(MovingAverage, Examples) {
    const std::vector<double> s{1, 2, 3, 4};
    EXPECT_EQ(moving_average(s, 3), (std::vector<double>{1, 1.5, 2, 3}));
    EXPECT_EQ(moving_average(s, 1), s);
    const std::vector<double> c(6, 3.25);
    EXPECT_EQ(moving_average(c, 4), c);
    EXPECT_THROW(moving_average(s, 0), ConfigError);
}

TEST(MovingAverage, StaysInWindowEnvelope) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<double> s(200);
    for (double& v : s) v = u(rng);
    const std::size_t w = 10;
    const auto m = moving_average(s, w);
    for (std::size_t t = 0; t < s.size(); ++t) {
        const std::size_t lo = t + 1 >= w ? t + 1 - w : 0;
        const auto [mn, mx] = std::minmax_element(s.begin() + lo, s.begin() + t + 1);
        EXPECT_GE(m[t], *mn - 1e-12);
        EXPECT_LE(m[t], *mx + 1e-12);
    }
}
