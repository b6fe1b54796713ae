#include "occakit/engine/work_size.hpp"

#include <limits>
#include <string>

#include "occakit/engine/errors.hpp"

namespace occakit::engine {

WorkSize WorkSize::from_thread_array(std::span<const std::size_t> global,
                                     std::span<const std::size_t> local, int dims) {
  if (dims < 1 || dims > 3) throw ConfigError("dims must be 1, 2 or 3");
  if (global.size() < static_cast<std::size_t>(dims) ||
      local.size() < static_cast<std::size_t>(dims)) {
    throw ConfigError("global and local need an extent for each of the " +
                      std::to_string(dims) + " dims");
  }
  constexpr auto kMax = static_cast<std::size_t>(std::numeric_limits<int>::max());
  WorkSize ws;
  ws.dims = dims;
  for (int axis = 0; axis < dims; ++axis) {
    const std::size_t g = global[static_cast<std::size_t>(axis)];
    const std::size_t l = local[static_cast<std::size_t>(axis)];
    const std::string where = " on axis " + std::to_string(axis);
    if (l == 0 || g == 0) throw ConfigError("extents must be positive" + where);
    if (g % l != 0) {
      throw ConfigError("global size " + std::to_string(g) + " is not a multiple of local size " +
                        std::to_string(l) + where);
    }
    if (g > kMax) throw ConfigError("global size too large" + where);
    ws.inner[static_cast<std::size_t>(axis)] = static_cast<int>(l);
    ws.outer[static_cast<std::size_t>(axis)] = static_cast<int>(g / l);
  }
  if (ws.outer[2] != 1) {
    throw ConfigError("outer axis 2 is degenerate: global[2] must equal local[2]");
  }
  return ws;
}

}  // namespace occakit::engine
