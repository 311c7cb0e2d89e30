#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gcfed/data.hpp"
#include "gcfed/gc.hpp"
#include "gcfed/nn.hpp"
#include "gcfed/strategy.hpp"

namespace gcfed {

enum class DatasetKind { Synthetic, Idx };
enum class FailPolicy { Continue, Abort };

struct IdxSpec {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::size_t limit = 10000;
    std::size_t num_classes = 62;
};

/// Architecture choice as written in the config; input and output sizes come from the dataset.
struct ArchConfig {
    ArchKind kind = ArchKind::Mlp;
    std::vector<std::size_t> hidden{64};
    std::vector<std::size_t> conv_channels{32, 64};
    std::size_t kernel = 5;
    std::vector<std::size_t> fc_hidden{512};
};

struct ExperimentConfig {
    std::size_t clients = 50;       // N
    std::size_t participants = 5;   // K
    std::size_t local_epochs = 5;   // E
    std::size_t rounds = 200;       // R
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-5;
    std::size_t batch_size = 50;
    double alpha = 0.05;
    Strategy strategy;
    ProjectionSpec gc;
    Aggregation aggregation = Aggregation::Uniform;
    DatasetKind dataset = DatasetKind::Synthetic;
    SyntheticTaskSpec synthetic;
    IdxSpec idx;
    ArchConfig arch;
    std::uint64_t seed = 0;
    std::size_t discrepancy_every = 0;
    std::size_t cka_every = 0;
    std::size_t cka_probe = 512;
    FailPolicy fail_policy = FailPolicy::Continue;
    std::size_t workers = 1;
    std::string partition_file;  // optional pre-computed plan (JSON)

    /// Throws ConfigError with the offending key.
    void validate() const;

    /// Full, ordered key/value listing (every key, defaults included).
    std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

/// Applies `key = value` to the config; throws ConfigError on unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat key = value file (`#` comments), or JSON (nested objects flatten to dotted keys)
/// when the path ends in .json. Unset keys keep their defaults; the result is validated.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, bool json);

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& cfg);

/// Architecture for a dataset with the given per-sample shape and class count.
ArchSpec resolve_arch(const ArchConfig& arch, const Shape& sample_shape, std::size_t num_classes);

/// Shortest round-trippable decimal representation of a double.
std::string format_double(double v);

}  // namespace gcfed
