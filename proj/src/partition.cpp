#include "gcfed/partition.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "gcfed/seed.hpp"
#include "gcfed/tensor.hpp"

namespace gcfed {

std::size_t PartitionPlan::total_samples() const noexcept {
    std::size_t n = 0;
    for (const auto& a : assignments) n += a.size();
    return n;
}

void PartitionPlan::validate(std::span<const int> labels) const {
    std::vector<bool> seen(labels.size(), false);
    if (class_histograms.size() != assignments.size()) throw DataError("partition: histogram count mismatch");
    for (std::size_t k = 0; k < assignments.size(); ++k) {
        if (assignments[k].empty()) throw DataError("partition: client " + std::to_string(k) + " is empty");
        std::vector<std::size_t> hist(num_classes, 0);
        for (std::size_t idx : assignments[k]) {
            if (idx >= labels.size()) throw DataError("partition: sample index out of range");
            if (seen[idx]) throw DataError("partition: sample " + std::to_string(idx) + " assigned twice");
            seen[idx] = true;
            hist.at(static_cast<std::size_t>(labels[idx]))++;
        }
        if (hist != class_histograms[k]) {
            throw DataError("partition: histogram of client " + std::to_string(k) + " disagrees with labels");
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw DataError("partition: assignments do not cover the dataset");
    }
}

PartitionPlan lda_partition(std::span<const int> labels, std::size_t num_classes, std::size_t num_clients,
                            double alpha, std::uint64_t seed) {
    if (num_clients == 0) throw ConfigError("partition: need at least one client");
    if (!(alpha > 0.0)) throw ConfigError("partition: alpha must be positive");
    if (labels.size() < num_clients) {
        throw ConfigError("partition: fewer samples than clients, cannot give every client a sample");
    }

    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
            throw DataError("partition: label " + std::to_string(labels[i]) + " at sample " + std::to_string(i) +
                            " out of range");
        }
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (by_class[c].empty()) throw ConfigError("partition: class " + std::to_string(c) + " has no samples");
    }

    PartitionPlan plan;
    plan.alpha = alpha;
    plan.seed = seed;
    plan.num_classes = num_classes;
    plan.assignments.assign(num_clients, {});

    for (std::size_t c = 0; c < num_classes; ++c) {
        Rng rng = make_rng(seed, "partition", {c});
        std::gamma_distribution<double> gamma(alpha, 1.0);
        std::vector<double> q(num_clients);
        double sum = 0.0;
        for (double& v : q) {
            v = gamma(rng);
            sum += v;
        }
        if (!(sum > 0.0)) {
            // Every draw underflowed (tiny alpha); fall back to a single random owner.
            std::uniform_int_distribution<std::size_t> pick(0, num_clients - 1);
            std::fill(q.begin(), q.end(), 0.0);
            q[pick(rng)] = 1.0;
        }
        std::discrete_distribution<std::size_t> route(q.begin(), q.end());
        for (std::size_t idx : by_class[c]) plan.assignments[route(rng)].push_back(idx);
    }

    for (std::size_t k = 0; k < num_clients; ++k) {
        if (!plan.assignments[k].empty()) continue;
        auto largest = std::max_element(plan.assignments.begin(), plan.assignments.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
        plan.assignments[k].push_back(largest->back());
        largest->pop_back();
        ++plan.repairs;
    }
    if (plan.repairs > 0) {
        std::clog << "partition: repaired " << plan.repairs << " empty client(s) by moving one sample each\n";
    }

    plan.class_histograms.assign(num_clients, std::vector<std::size_t>(num_classes, 0));
    for (std::size_t k = 0; k < num_clients; ++k) {
        std::sort(plan.assignments[k].begin(), plan.assignments[k].end());
        for (std::size_t idx : plan.assignments[k]) plan.class_histograms[k][static_cast<std::size_t>(labels[idx])]++;
    }
    return plan;
}

PartitionStats partition_stats(const PartitionPlan& plan) {
    PartitionStats s;
    for (std::size_t k = 0; k < plan.num_clients(); ++k) {
        const auto& hist = plan.class_histograms[k];
        const std::size_t n = std::accumulate(hist.begin(), hist.end(), std::size_t{0});
        s.sizes.push_back(n);
        double h = 0.0;
        std::size_t nonzero = 0;
        for (std::size_t c : hist) {
            if (c == 0) continue;
            ++nonzero;
            const double p = static_cast<double>(c) / static_cast<double>(n);
            h -= p * std::log(p);
        }
        s.class_entropy.push_back(h);
        if (nonzero == 1) ++s.single_class_clients;
    }
    if (!s.sizes.empty()) {
        s.mean_entropy = std::accumulate(s.class_entropy.begin(), s.class_entropy.end(), 0.0) /
                         static_cast<double>(s.class_entropy.size());
        s.min_size = *std::min_element(s.sizes.begin(), s.sizes.end());
        s.max_size = *std::max_element(s.sizes.begin(), s.sizes.end());
    }
    return s;
}

nlohmann::json to_json(const PartitionPlan& plan) {
    return nlohmann::json{{"alpha", plan.alpha},
                          {"seed", plan.seed},
                          {"num_classes", plan.num_classes},
                          {"repairs", plan.repairs},
                          {"assignments", plan.assignments},
                          {"class_histograms", plan.class_histograms}};
}

PartitionPlan partition_from_json(const nlohmann::json& j) {
    PartitionPlan plan;
    try {
        plan.alpha = j.at("alpha").get<double>();
        plan.seed = j.at("seed").get<std::uint64_t>();
        plan.num_classes = j.at("num_classes").get<std::size_t>();
        plan.repairs = j.value("repairs", std::size_t{0});
        plan.assignments = j.at("assignments").get<std::vector<std::vector<std::size_t>>>();
        plan.class_histograms = j.at("class_histograms").get<std::vector<std::vector<std::size_t>>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("partition JSON: ") + e.what());
    }
    return plan;
}

}  // namespace gcfed
