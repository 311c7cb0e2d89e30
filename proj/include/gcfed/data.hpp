#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "gcfed/nn.hpp"

namespace gcfed {

/// Gaussian mixture with equidistant class centers: center_c = separation * e_c
/// (one-hot in the first num_classes coordinates) plus isotropic noise.
struct SyntheticTaskSpec {
    std::size_t num_classes = 10;
    std::size_t input_dim = 32;
    double separation = 1.0;
    double noise = 0.5;
    std::size_t samples_per_class = 500;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainTest {
    Dataset train;
    Dataset test;
};

/// Within each class, sample j goes to the test set when j % 5 == 4 (80/20 split).
TrainTest generate_synthetic(const SyntheticTaskSpec& spec);

/// Parses an IDX image file (magic 0x00000803) and label file (magic 0x00000801).
/// Pixels are scaled to [0, 1]; features have sample shape [1, rows, cols].
/// `limit` > 0 keeps only the first `limit` samples. Labels must be < num_classes.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t num_classes, std::size_t limit = 0);

}  // namespace gcfed
