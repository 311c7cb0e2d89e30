#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcfed/config.hpp"
#include "gcfed/nn.hpp"
#include "gcfed/partition.hpp"
#include "gcfed/strategy.hpp"

namespace gcfed {

struct UpdateDelta {
    ParamGroups groups;  // w_local - w_global, same layout as ModelParams::groups()
    std::size_t client_id = 0;
    std::size_t num_samples = 0;
};

/// Non-finite loss or gradient during local training. No clipping is attempted.
class TrainingFailure : public std::runtime_error {
public:
    TrainingFailure(std::size_t client, std::size_t step, const std::string& what)
        : std::runtime_error(what), client_id(client), step(step) {}
    std::size_t client_id;
    std::size_t step;
};

struct RoundRecord {
    std::size_t round = 0;  // 1-based
    std::vector<std::size_t> selected;
    double accuracy = 0.0;
    double update_norm = 0.0;
    std::optional<double> discrepancy;
    std::optional<double> discrepancy_cosine;
    std::vector<double> cka;  // per layer, averaged over the selected clients
    bool failed = false;
    std::string failure;
    double wall_ms = 0.0;
};

struct LocalTrainSettings {
    std::size_t local_epochs = 5;
    std::size_t batch_size = 50;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    ProjectionSpec gc;
    std::uint64_t seed = 0;

    static LocalTrainSettings from(const ExperimentConfig& cfg);
};

/// K distinct client ids drawn uniformly from [0, N), returned in ascending order.
std::vector<std::size_t> sample_clients(std::size_t num_clients, std::size_t k, std::uint64_t seed,
                                        std::size_t round);

/// E epochs of mini-batch momentum SGD starting from `global` with fresh velocity.
/// Layers selected by the strategy get their gradient centralized before every step.
/// Throws TrainingFailure on a non-finite loss, gradient or update.
UpdateDelta local_train(const ModelParams& global, const ClientDataset& data, std::size_t client_id,
                        std::size_t round, const LocalTrainSettings& settings, const Strategy& strategy);

/// Weighted mean of the deltas, summed in ascending client-id order.
UpdateDelta aggregate(std::span<const UpdateDelta> deltas, Aggregation weighting = Aggregation::Uniform);

/// Server-side GC on the layers the strategy assigns to global centralization.
UpdateDelta apply_global_gc(UpdateDelta delta, const Strategy& strategy, const ProjectionSpec& spec = {});

/// Centralizes every centralizable group (used for client-side commutation checks).
UpdateDelta centralize_delta(UpdateDelta delta, const ProjectionSpec& spec = {});

struct FederatedData {
    Dataset train;
    Dataset test;
    PartitionPlan plan;
    std::vector<ClientDataset> clients;
};

/// Generates or loads the dataset named in the config and partitions it.
FederatedData prepare_data(const ExperimentConfig& cfg);
FederatedData federate(Dataset train, Dataset test, PartitionPlan plan);

struct ExperimentResult {
    std::vector<RoundRecord> records;
    ModelParams initial_model;
    ModelParams final_model;
    bool aborted = false;
    double resolved_lambda = 0.0;
};

using RoundCallback = std::function<void(const RoundRecord&)>;

/// R rounds of sample -> local_train -> aggregate -> global GC -> apply -> evaluate.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const FederatedData& data,
                                const RoundCallback& on_round = {});

}  // namespace gcfed
