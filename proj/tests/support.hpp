#pragma once

#include "ianum/net_model.hpp"

#include <cstdint>

namespace ianum::testing {

// One drop with default link parameters and the 35 m exclusion zone.
inline ChannelSet make_channels(TopologyKind kind, double d, const ClusterDims& dims,
                                std::uint64_t seed) {
  const auto topology = build_topology(kind, d);
  LinkParams params;
  const auto drop = drop_users(topology, dims, seed, params.min_distance_m);
  return realize_channels(topology, drop, dims, params, seed + 1);
}

}  // namespace ianum::testing
