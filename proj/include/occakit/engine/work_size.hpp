#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace occakit::engine {

// Work-items per group (inner) and groups per launch (outer). Axis 2 of the
// outer grid is always 1.
struct WorkSize {
  int dims = 1;
  std::array<int, 3> inner{1, 1, 1};
  std::array<int, 3> outer{1, 1, 1};

  std::array<int, 3> global() const {
    return {inner[0] * outer[0], inner[1] * outer[1], inner[2] * outer[2]};
  }
  int items_per_group() const { return inner[0] * inner[1] * inner[2]; }
  std::size_t group_count() const {
    return static_cast<std::size_t>(outer[0]) * static_cast<std::size_t>(outer[1]) *
           static_cast<std::size_t>(outer[2]);
  }

  // global[i] must be a positive multiple of local[i] for i < dims; the
  // remaining axes default to 1. Throws ConfigError.
  static WorkSize from_thread_array(std::span<const std::size_t> global,
                                    std::span<const std::size_t> local, int dims);

  friend bool operator==(const WorkSize&, const WorkSize&) = default;
};

}  // namespace occakit::engine
