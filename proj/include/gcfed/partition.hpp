#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gcfed {

struct PartitionPlan {
    std::vector<std::vector<std::size_t>> assignments;       // per client, ascending sample indices
    std::vector<std::vector<std::size_t>> class_histograms;  // per client, count per class
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::size_t num_classes = 0;
    std::size_t repairs = 0;  // empty clients refilled from the largest one

    std::size_t num_clients() const noexcept { return assignments.size(); }
    std::size_t total_samples() const noexcept;

    /// Throws DataError unless assignments are disjoint, cover [0, dataset_size),
    /// every client is non-empty and histograms agree with the labels.
    void validate(std::span<const int> labels) const;
};

/// Per-class Dirichlet(alpha * 1_N) proportions; each class-c sample is routed to
/// a client drawn from Categorical(q_c). Empty clients then receive one sample
/// from the currently largest client.
PartitionPlan lda_partition(std::span<const int> labels, std::size_t num_classes, std::size_t num_clients,
                            double alpha, std::uint64_t seed);

struct PartitionStats {
    std::vector<std::size_t> sizes;
    std::vector<double> class_entropy;  // natural log
    std::size_t single_class_clients = 0;
    double mean_entropy = 0.0;
    std::size_t min_size = 0;
    std::size_t max_size = 0;
};

PartitionStats partition_stats(const PartitionPlan& plan);

nlohmann::json to_json(const PartitionPlan& plan);
PartitionPlan partition_from_json(const nlohmann::json& j);

}  // namespace gcfed
