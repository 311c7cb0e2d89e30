#include <gtest/gtest.h>

#include <cmath>

#include "gcfed/gc.hpp"
#include "test_util.hpp"

using namespace gcfed;
using gcfed::testing::random_tensor;

namespace {

// Mean over the reduced axes by explicit loop nest, broadcast back to the full shape.
Tensor loop_mean_conv(const Tensor& g, AxisMode mode) {
    const std::size_t A = g.dim(0), B = g.dim(1), C = g.dim(2), D = g.dim(3);
    auto at = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t d) { return ((a * B + b) * C + c) * D + d; };
    Tensor out(g.shape());
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c)
                for (std::size_t d = 0; d < D; ++d) {
                    double s = 0.0;
                    std::size_t n = 0;
                    for (std::size_t a2 = 0; a2 < A; ++a2)
                        for (std::size_t b2 = 0; b2 < B; ++b2)
                            for (std::size_t c2 = 0; c2 < C; ++c2)
                                for (std::size_t d2 = 0; d2 < D; ++d2) {
                                    bool same = true;
                                    switch (mode) {
                                        case AxisMode::OutChannel: same = a2 == a; break;
                                        case AxisMode::OutIn: same = a2 == a && b2 == b; break;
                                        case AxisMode::OutKernel: same = a2 == a && c2 == c && d2 == d; break;
                                        case AxisMode::OutInKh: same = a2 == a && b2 == b && d2 == d; break;
                                        case AxisMode::InKernel: same = b2 == b && c2 == c && d2 == d; break;
                                    }
                                    if (same) {
                                        s += g[at(a2, b2, c2, d2)];
                                        ++n;
                                    }
                                }
                    out[at(a, b, c, d)] = s / static_cast<double>(n);
                }
    return out;
}

Tensor broadcast(const Tensor& mu, const Shape& shape) {
    // mu keeps the rank with reduced axes set to 1.
    Tensor out(shape);
    std::vector<std::size_t> idx(shape.size());
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t rem = flat;
        for (std::size_t ax = shape.size(); ax-- > 0;) {
            idx[ax] = rem % shape[ax];
            rem /= shape[ax];
        }
        std::size_t m = 0;
        for (std::size_t ax = 0; ax < shape.size(); ++ax) m = m * mu.dim(ax) + (mu.dim(ax) == 1 ? 0 : idx[ax]);
        out[flat] = mu[m];
    }
    return out;
}

const AxisMode kModes[] = {AxisMode::OutChannel, AxisMode::OutIn, AxisMode::OutKernel, AxisMode::OutInKh,
                           AxisMode::InKernel};

}  // namespace

TEST(MuVector, FcExample) {
    const Tensor g({2, 2}, {1, 3, 3, 5});
    const Tensor mu = mu_vector(g);
    EXPECT_EQ(mu.shape(), (Shape{2, 1}));
    EXPECT_EQ(mu.storage(), (std::vector<double>{2, 4}));
}

TEST(MuVector, ConstantTensor) {
    const Tensor g({3, 2, 3, 3}, 1.75);
    for (AxisMode m : kModes) {
        const Tensor mu = mu_vector(g, {m});
        for (double v : mu.data()) EXPECT_DOUBLE_EQ(v, 1.75);
    }
}

TEST(MuVector, ConvShapesPerMode) {
    const Tensor g({4, 3, 5, 2});
    EXPECT_EQ(mu_vector(g, {AxisMode::OutChannel}).shape(), (Shape{4, 1, 1, 1}));
    EXPECT_EQ(mu_vector(g, {AxisMode::OutIn}).shape(), (Shape{4, 3, 1, 1}));
    EXPECT_EQ(mu_vector(g, {AxisMode::OutKernel}).shape(), (Shape{4, 1, 5, 2}));
    EXPECT_EQ(mu_vector(g, {AxisMode::OutInKh}).shape(), (Shape{4, 3, 1, 2}));
    EXPECT_EQ(mu_vector(g, {AxisMode::InKernel}).shape(), (Shape{1, 3, 5, 2}));
}

TEST(MuVector, ConvMatchesLoopNest) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 5; ++rep) {
        const Tensor g = random_tensor({4, 3, 3, 2}, rng);
        for (AxisMode m : kModes) {
            const Tensor ref = loop_mean_conv(g, m);
            EXPECT_LE(max_abs_diff(broadcast(mu_vector(g, {m}), g.shape()), ref), 1e-14) << to_string(m);
        }
    }
}

TEST(MuVector, OneDimensionalIsNotCentralizable) {
    const Tensor b({5}, 1.0);
    EXPECT_THROW(mu_vector(b), NotCentralizable);
    EXPECT_THROW(centralize_mean_sub(b), NotCentralizable);
    EXPECT_THROW(centralize_project(b), NotCentralizable);
    EXPECT_FALSE(is_centralizable(b));
    EXPECT_EQ(centralize(b), b);
}

TEST(MuVector, FcModesFallBack) {
    EXPECT_EQ(reduced_axes(2, AxisMode::OutChannel), (std::vector<std::size_t>{1}));
    EXPECT_EQ(reduced_axes(2, AxisMode::OutIn), (std::vector<std::size_t>{1}));
    EXPECT_EQ(reduced_axes(2, AxisMode::InKernel), (std::vector<std::size_t>{0}));
}

TEST(Centralize, FcExample) {
    const Tensor g({2, 2}, {1, 3, 3, 5});
    EXPECT_EQ(centralize_mean_sub(g).storage(), (std::vector<double>{-1, 1, -1, 1}));
}

TEST(Centralize, EqualRowsVanish) {
    // Every row is constant along the reduced axis, so G is in span(e).
    const Tensor g({3, 4}, {2, 2, 2, 2, -1, -1, -1, -1, 7, 7, 7, 7});
    EXPECT_LE(max_abs(centralize_project(g)), 1e-15);
    EXPECT_EQ(max_abs(centralize_mean_sub(g)), 0.0);
}

TEST(Centralize, ProjectionAlgebra) {
    std::mt19937_64 rng(7);
    for (const Shape& shape : {Shape{64, 128}, Shape{32, 16, 3, 3}}) {
        for (int rep = 0; rep < 100; ++rep) {
            const Tensor g = random_tensor(shape, rng);
            const Tensor ms = centralize_mean_sub(g);
            const Tensor pr = centralize_project(g);
            EXPECT_LE(max_abs_diff(ms, pr), 1e-12);
            EXPECT_LE(max_abs_diff(centralize_mean_sub(ms), ms), 1e-13);
            EXPECT_LE(max_abs(mu_vector(ms)), 1e-13);
            EXPECT_LE(squared_norm(ms), squared_norm(g));
        }
    }
}

TEST(Centralize, ProjectorIdempotent) {
    std::mt19937_64 rng(8);
    const Tensor g = random_tensor({5, 6}, rng);
    const Tensor once = centralize_project(g);
    EXPECT_LE(max_abs_diff(centralize_project(once), once), 1e-13);
}

TEST(Centralize, AllModesZeroReducedMean) {
    std::mt19937_64 rng(9);
    for (AxisMode m : kModes) {
        const Tensor g = random_tensor({6, 4, 3, 3}, rng);
        const Tensor c = centralize_mean_sub(g, {m});
        EXPECT_LE(max_abs(mu_vector(c, {m})), 1e-13) << to_string(m);
        EXPECT_LE(max_abs_diff(c, centralize_project(g, {m})), 1e-12) << to_string(m);
        for (double v : e_transpose(c, {m})) EXPECT_LE(std::abs(v), 1e-13);
    }
}

TEST(Centralize, Linearity) {
    std::mt19937_64 rng(10);
    const Tensor g = random_tensor({8, 5, 3, 3}, rng);
    const Tensor h = random_tensor({8, 5, 3, 3}, rng);
    const double a = 0.37, b = -2.5;
    const Tensor lhs = centralize(g * a + h * b);
    const Tensor rhs = centralize(g) * a + centralize(h) * b;
    EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12);
}

TEST(Centralize, NormEqualityIffOnHyperplane) {
    std::mt19937_64 rng(11);
    const Tensor g = centralize(random_tensor({4, 7}, rng));
    EXPECT_NEAR(squared_norm(centralize(g)), squared_norm(g), 1e-12);
    Tensor shifted = g;
    shifted[0] += 1.0;
    EXPECT_LT(squared_norm(centralize(shifted)), squared_norm(shifted) - 0.1);
}

TEST(Centralize, ReductionLengthOneSkipped) {
    const Tensor g({3, 1}, {1.0, 2.0, 3.0});
    EXPECT_EQ(reduction_length(g.shape(), AxisMode::OutChannel), 1u);
    EXPECT_FALSE(is_centralizable(g));
    EXPECT_EQ(centralize(g), g);
    Tensor in_place = g;
    centralize_in_place(in_place);
    EXPECT_EQ(in_place, g);
}

TEST(Centralize, InPlaceMatchesValue) {
    std::mt19937_64 rng(12);
    for (AxisMode m : kModes) {
        Tensor g = random_tensor({3, 4, 5, 5}, rng);
        const Tensor expected = centralize(g, {m});
        centralize_in_place(g, {m});
        EXPECT_EQ(g, expected) << to_string(m);
    }
}

TEST(ETranspose, MatchesExplicitSum) {
    const Tensor g({2, 3}, {1, 2, 3, 4, 5, 6});
    const auto e = e_transpose(g);
    ASSERT_EQ(e.size(), 2u);
    EXPECT_NEAR(e[0], 6.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(e[1], 15.0 / std::sqrt(3.0), 1e-15);
}

TEST(AxisModeNames, RoundTrip) {
    for (AxisMode m : kModes) EXPECT_EQ(parse_axis_mode(to_string(m)), m);
    EXPECT_THROW(parse_axis_mode("rows"), ConfigError);
}

TEST(SelectLocalLayers, Examples) {
    EXPECT_EQ(select_local_layers(4, 1.0), (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_TRUE(select_local_layers(4, 0.0).empty());
    EXPECT_EQ(select_local_layers(4, 0.75), (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(select_local_layers(2, 0.5), (std::vector<std::size_t>{0}));
    EXPECT_EQ(select_local_layers(3, 0.7), (std::vector<std::size_t>{0, 1}));
    // 0.1 * 30 is 3.0000000000000004 and 0.7 * 10 is 7.000000000000001; both must floor to the integer.
    EXPECT_EQ(select_local_layers(10, 0.7).size(), 7u);
    EXPECT_EQ(select_local_layers(30, 0.1).size(), 3u);
    EXPECT_EQ(select_local_layers(10, 0.29).size(), 2u);
}

TEST(SelectLocalLayers, RejectsOutOfRange) {
    EXPECT_THROW(select_local_layers(4, -0.1), ConfigError);
    EXPECT_THROW(select_local_layers(4, 1.5), ConfigError);
    EXPECT_THROW(select_local_layers(4, NAN), ConfigError);
}
