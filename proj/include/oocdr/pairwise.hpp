#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "oocdr/types.hpp"

namespace oocdr {

/// Full n x n tables (distances, affinities) are kept in single precision.
using PairwiseStore = Eigen::MatrixXf;

inline constexpr std::size_t kDefaultPairwiseCapBytes = std::size_t{2} << 30;

inline std::size_t pairwise_bytes(Index n) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * sizeof(float);
}

inline void check_pairwise_capacity(Index n, std::size_t cap_bytes, const char* method) {
    if (pairwise_bytes(n) > cap_bytes) {
        throw CapacityError(std::string(method) + ": reference size " + std::to_string(n) +
                            " needs " + std::to_string(pairwise_bytes(n) >> 20) +
                            " MiB of pairwise storage, cap is " + std::to_string(cap_bytes >> 20) +
                            " MiB; use a smaller reference set");
    }
}

}  // namespace oocdr
