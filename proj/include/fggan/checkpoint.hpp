#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fggan/tensor.hpp"

namespace fggan {

constexpr std::uint32_t kCheckpointVersion = 1;

// On-disk model/trainer state. Layout: magic "FGGN", u32 version, u64 tensor
// count, then per tensor: u32 name length, UTF-8 name, u32 rank, u64 dims,
// little-endian f64 data. A length-prefixed JSON blob with counters, RNG
// states and the config echo follows the tensors.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::vector<std::pair<std::string, Tensor>> tensors;
  nlohmann::json meta;

  const Tensor* find(const std::string& name) const;
  const Tensor& require(const std::string& name) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fggan
