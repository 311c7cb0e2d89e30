#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace gcfed {

using Rng = std::mt19937_64;

// Stream seeds are a pure function of (master seed, purpose tag, indices) so
// every sub-stream can be replayed independently of execution order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::initializer_list<std::uint64_t> indices = {});

inline Rng make_rng(std::uint64_t master, std::string_view tag,
                    std::initializer_list<std::uint64_t> indices = {}) {
    return Rng(derive_seed(master, tag, indices));
}

}  // namespace gcfed
