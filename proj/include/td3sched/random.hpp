#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace td3sched {

using Rng = std::mt19937_64;

// Named substreams of one run seed. Each consumer draws from its own stream
// so that e.g. changing the batch size does not perturb environment noise.
enum class Stream : std::uint64_t {
  init = 1,
  exploration = 2,
  sampling = 3,
  environment = 4,
  target_noise = 5,
  workload = 6,
};

inline Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return Rng(seq);
}

}  // namespace td3sched
