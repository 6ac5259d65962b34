#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgat/model.hpp"
#include "pgat/optim.hpp"
#include "pgat/priors.hpp"

namespace pgat {

/// Everything needed to continue a run from an epoch boundary.
struct TrainingState {
  std::size_t next_epoch = 0;
  SgdConfig sgd;
  std::vector<Tensor> velocity;
  PriorState priors;
};

struct Checkpoint {
  Model model;
  std::optional<TrainingState> state;
};

inline constexpr char kCheckpointMagic[8] = {'P', 'G', 'A', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout (all integers and reals little-endian):
///   magic "PGATCKPT" | u32 version | u32 flags (bit 0: training state present)
///   | u32 len + descriptor text | u32 count + per tensor (u32 rank, u64 dims, f64 values)
///   | [training state] | u32 CRC-32 of every preceding byte
/// Training state: u64 next_epoch | f64 lr, momentum, weight_decay, gamma
///   | u32 count + u64 milestones | velocity tensors | u8 prior kind (0 none, 1 batch,
///   2 epoch, 3 momentum) | prior payload. Perturbation stores are written as
///   u32 rank + u64 sample dims + u64 slots + f32 values; momentum as f64 mu + f64 values.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pgat
