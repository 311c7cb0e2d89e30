#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "gcfed/partition.hpp"
#include "gcfed/tensor.hpp"

using namespace gcfed;

namespace {

std::vector<int> balanced_labels(std::size_t classes, std::size_t per_class) {
    std::vector<int> labels;
    for (std::size_t i = 0; i < classes * per_class; ++i) labels.push_back(static_cast<int>(i % classes));
    return labels;
}

std::size_t classes_present(const std::vector<std::size_t>& hist) {
    return static_cast<std::size_t>(std::count_if(hist.begin(), hist.end(), [](std::size_t c) { return c > 0; }));
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Independent Dirichlet-multinomial sampler: per class, q ~ Dir(alpha) from
// normalized Gamma draws, then a multinomial count vector via sequential binomials.
std::vector<std::vector<std::size_t>> reference_histograms(std::size_t classes, std::size_t per_class,
                                                           std::size_t clients, double alpha, std::uint64_t seed) {
    std::mt19937_64 rng(seed * 7919 + 13);
    std::vector<std::vector<std::size_t>> hist(clients, std::vector<std::size_t>(classes, 0));
    for (std::size_t c = 0; c < classes; ++c) {
        std::gamma_distribution<double> gamma(alpha, 1.0);
        std::vector<double> q(clients);
        double total = 0.0;
        for (double& v : q) total += (v = gamma(rng));
        if (total <= 0.0) {
            q.assign(clients, 0.0);
            q[std::uniform_int_distribution<std::size_t>(0, clients - 1)(rng)] = 1.0;
            total = 1.0;
        }
        std::size_t remaining = per_class;
        double mass = 1.0;
        for (std::size_t k = 0; k < clients && remaining > 0; ++k) {
            const double p = k + 1 == clients ? 1.0 : std::clamp(q[k] / total / mass, 0.0, 1.0);
            const std::size_t n = std::binomial_distribution<std::size_t>(remaining, p)(rng);
            hist[k][c] = n;
            remaining -= n;
            mass -= q[k] / total;
        }
    }
    return hist;
}

}  // namespace

TEST(Lda, ConservationAndValidity) {
    const auto labels = balanced_labels(10, 100);
    for (double alpha : {0.05, 0.5, 1000.0}) {
        const auto plan = lda_partition(labels, 10, 50, alpha, 3);
        EXPECT_NO_THROW(plan.validate(labels));
        EXPECT_EQ(plan.total_samples(), labels.size());
        for (std::size_t k = 0; k < plan.num_clients(); ++k) {
            EXPECT_GE(plan.assignments[k].size(), 1u);
            EXPECT_TRUE(std::is_sorted(plan.assignments[k].begin(), plan.assignments[k].end()));
            const std::size_t hist_sum =
                std::accumulate(plan.class_histograms[k].begin(), plan.class_histograms[k].end(), std::size_t{0});
            EXPECT_EQ(hist_sum, plan.assignments[k].size());
        }
    }
}

TEST(Lda, Deterministic) {
    const auto labels = balanced_labels(10, 50);
    const auto a = lda_partition(labels, 10, 20, 0.1, 42);
    const auto b = lda_partition(labels, 10, 20, 0.1, 42);
    const auto c = lda_partition(labels, 10, 20, 0.1, 43);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_NE(a.assignments, c.assignments);
}

TEST(Lda, SingleClientGetsEverything) {
    const auto labels = balanced_labels(4, 7);
    const auto plan = lda_partition(labels, 4, 1, 0.05, 0);
    ASSERT_EQ(plan.num_clients(), 1u);
    EXPECT_EQ(plan.assignments[0].size(), labels.size());
    EXPECT_EQ(plan.class_histograms[0], (std::vector<std::size_t>{7, 7, 7, 7}));
}

TEST(Lda, EmptyClientsRepaired) {
    // 40 samples over 30 clients at tiny alpha leaves many clients empty before repair.
    const auto labels = balanced_labels(2, 20);
    const auto plan = lda_partition(labels, 2, 30, 0.01, 5);
    EXPECT_GT(plan.repairs, 0u);
    EXPECT_NO_THROW(plan.validate(labels));
    for (const auto& a : plan.assignments) EXPECT_GE(a.size(), 1u);
}

TEST(Lda, RejectsBadInput) {
    const auto labels = balanced_labels(3, 5);
    EXPECT_THROW(lda_partition(labels, 3, 0, 1.0, 0), ConfigError);
    EXPECT_THROW(lda_partition(labels, 3, 4, 0.0, 0), ConfigError);
    EXPECT_THROW(lda_partition(labels, 4, 4, 1.0, 0), ConfigError);  // class 3 has no samples
    EXPECT_THROW(lda_partition(labels, 3, 16, 1.0, 0), ConfigError);  // more clients than samples
}

TEST(Lda, LargeAlphaIsNearUniform) {
    // Each client's class shares within 5 pp of uniform in at least 99% of seeds.
    const auto labels = balanced_labels(10, 1000);
    int good = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        const auto plan = lda_partition(labels, 10, 10, 1000.0, static_cast<std::uint64_t>(s));
        bool ok = true;
        for (const auto& h : plan.class_histograms) {
            const double n = static_cast<double>(std::accumulate(h.begin(), h.end(), std::size_t{0}));
            for (std::size_t c : h) ok = ok && std::abs(static_cast<double>(c) / n - 0.1) <= 0.05;
        }
        good += ok ? 1 : 0;
    }
    EXPECT_GE(good, 99);
}

TEST(Lda, SmallAlphaMatchesReferenceSampler) {
    const std::size_t classes = 10, per_class = 500, clients = 100;
    const auto labels = balanced_labels(classes, per_class);
    std::vector<double> ours, ref;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto plan = lda_partition(labels, classes, clients, 0.05, s);
        std::vector<double> present;
        for (const auto& h : plan.class_histograms) present.push_back(static_cast<double>(classes_present(h)));
        ours.push_back(median(present));
        std::vector<double> ref_present;
        for (const auto& h : reference_histograms(classes, per_class, clients, 0.05, s)) {
            ref_present.push_back(static_cast<double>(classes_present(h)));
        }
        ref.push_back(median(ref_present));
    }
    for (double m : ours) EXPECT_LE(m, 2.0);
    for (double m : ref) EXPECT_LE(m, 2.0);
    const double mean_ours = std::accumulate(ours.begin(), ours.end(), 0.0) / 10.0;
    const double mean_ref = std::accumulate(ref.begin(), ref.end(), 0.0) / 10.0;
    EXPECT_NEAR(mean_ours, mean_ref, 0.5);
}

TEST(Lda, SingleClassClientsAppearAtSmallAlpha) {
    const auto labels = balanced_labels(10, 200);
    int with_single = 0, ref_with_single = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        with_single += partition_stats(lda_partition(labels, 10, 200, 0.05, s)).single_class_clients > 0;
        std::size_t ref_single = 0;
        for (const auto& h : reference_histograms(10, 200, 200, 0.05, s)) ref_single += classes_present(h) == 1;
        ref_with_single += ref_single > 0;
    }
    EXPECT_EQ(with_single, 10);
    EXPECT_EQ(ref_with_single, 10);
}

TEST(Lda, EntropyMonotoneInAlpha) {
    const auto labels = balanced_labels(10, 100);
    double prev = -1.0;
    for (double alpha : {0.05, 0.1, 1.0, 1000.0}) {
        double sum = 0.0;
        for (std::uint64_t s = 0; s < 20; ++s) sum += partition_stats(lda_partition(labels, 10, 20, alpha, s)).mean_entropy;
        const double mean = sum / 20.0;
        EXPECT_GE(mean, prev) << "alpha " << alpha;
        prev = mean;
    }
}

TEST(PartitionStats, UniformPlanHasMaxEntropy) {
    PartitionPlan plan;
    plan.num_classes = 4;
    plan.assignments = {{0, 1, 2, 3}, {4, 5, 6, 7}};
    plan.class_histograms = {{1, 1, 1, 1}, {1, 1, 1, 1}};
    const auto st = partition_stats(plan);
    for (double h : st.class_entropy) EXPECT_NEAR(h, std::log(4.0), 1e-15);
    EXPECT_EQ(st.single_class_clients, 0u);
    EXPECT_EQ(st.sizes, (std::vector<std::size_t>{4, 4}));
}

TEST(PartitionStats, SingleClient) {
    const auto labels = balanced_labels(3, 5);
    const auto st = partition_stats(lda_partition(labels, 3, 1, 1.0, 0));
    ASSERT_EQ(st.sizes.size(), 1u);
    EXPECT_EQ(st.sizes[0], 15u);
    EXPECT_EQ(st.min_size, 15u);
}

TEST(PartitionJson, RoundTrip) {
    const auto labels = balanced_labels(5, 20);
    const auto plan = lda_partition(labels, 5, 7, 0.3, 9);
    const auto back = partition_from_json(nlohmann::json::parse(to_json(plan).dump()));
    EXPECT_EQ(back.assignments, plan.assignments);
    EXPECT_EQ(back.class_histograms, plan.class_histograms);
    EXPECT_EQ(back.alpha, plan.alpha);
    EXPECT_EQ(back.seed, plan.seed);
    EXPECT_NO_THROW(back.validate(labels));
}

TEST(PartitionPlan, ValidateCatchesOverlap) {
    const std::vector<int> labels{0, 1, 0, 1};
    PartitionPlan plan;
    plan.num_classes = 2;
    plan.assignments = {{0, 1}, {1, 2, 3}};
    plan.class_histograms = {{1, 1}, {1, 2}};
    EXPECT_THROW(plan.validate(labels), DataError);
}
