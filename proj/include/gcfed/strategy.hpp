#pragma once

#include <optional>
#include <string>
#include <vector>

namespace gcfed {

enum class StrategyKind { FedAvg, LocalGC, GlobalGC, GCFed, FedProx };

std::string to_string(StrategyKind kind);
StrategyKind parse_strategy(const std::string& name);

struct Strategy {
    StrategyKind kind = StrategyKind::FedAvg;
    /// GC-Fed layer borderline. Unset means "every layer except the classifier".
    std::optional<double> lambda;
    /// FedProx proximal coefficient.
    double mu_prox = 0.0;

    /// Per weight-bearing layer: does local training centralize its gradient?
    std::vector<bool> local_gc_layers(std::size_t layer_count) const;
    /// Per weight-bearing layer: does the server centralize its aggregated update?
    std::vector<bool> global_gc_layers(std::size_t layer_count) const;
    /// lambda resolved against a concrete layer count.
    double resolved_lambda(std::size_t layer_count) const;

    void validate() const;
};

enum class Aggregation { Uniform, ByNk };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

}  // namespace gcfed
