#include "gcfed/strategy.hpp"

#include "gcfed/gc.hpp"
#include "gcfed/tensor.hpp"

namespace gcfed {

std::string to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::FedAvg: return "fedavg";
        case StrategyKind::LocalGC: return "localgc";
        case StrategyKind::GlobalGC: return "globalgc";
        case StrategyKind::GCFed: return "gcfed";
        case StrategyKind::FedProx: return "fedprox";
    }
    return "?";
}

StrategyKind parse_strategy(const std::string& name) {
    for (StrategyKind k : {StrategyKind::FedAvg, StrategyKind::LocalGC, StrategyKind::GlobalGC, StrategyKind::GCFed,
                           StrategyKind::FedProx}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown strategy '" + name + "' (expected fedavg, localgc, globalgc, gcfed or fedprox)");
}

void Strategy::validate() const {
    if (lambda && !(*lambda >= 0.0 && *lambda <= 1.0)) {
        throw ConfigError("gc.lambda must lie in [0, 1], got " + std::to_string(*lambda));
    }
    if (!(mu_prox >= 0.0)) throw ConfigError("fedprox.mu must be >= 0");
}

double Strategy::resolved_lambda(std::size_t layer_count) const {
    if (lambda) return *lambda;
    if (layer_count == 0) return 0.0;
    return static_cast<double>(layer_count - 1) / static_cast<double>(layer_count);
}

std::vector<bool> Strategy::local_gc_layers(std::size_t layer_count) const {
    std::vector<bool> out(layer_count, false);
    switch (kind) {
        case StrategyKind::LocalGC:
            out.assign(layer_count, true);
            break;
        case StrategyKind::GCFed:
            for (std::size_t l : select_local_layers(layer_count, resolved_lambda(layer_count))) out[l] = true;
            break;
        default:
            break;
    }
    return out;
}

std::vector<bool> Strategy::global_gc_layers(std::size_t layer_count) const {
    std::vector<bool> out(layer_count, false);
    switch (kind) {
        case StrategyKind::GlobalGC:
            out.assign(layer_count, true);
            break;
        case StrategyKind::GCFed: {
            // Layers already centralized locally are left alone at the server.
            const auto local = local_gc_layers(layer_count);
            for (std::size_t l = 0; l < layer_count; ++l) out[l] = !local[l];
            break;
        }
        default:
            break;
    }
    return out;
}

std::string to_string(Aggregation a) { return a == Aggregation::Uniform ? "uniform" : "by_n_k"; }

Aggregation parse_aggregation(const std::string& name) {
    if (name == "uniform") return Aggregation::Uniform;
    if (name == "by_n_k") return Aggregation::ByNk;
    throw ConfigError("unknown aggregation '" + name + "' (expected uniform or by_n_k)");
}

}  // namespace gcfed
