#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgat/attacks.hpp"
#include "pgat/rng.hpp"
#include "pgat/tensor.hpp"

namespace pgat {

/// Labelled samples with pixel values in [0,1]. Sample ids are row indices.
struct Dataset {
  Tensor images;  // [N, C, H, W] or [N, D]
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  Shape sample_shape() const;

  /// Throws FormatError unless pixels are in [0,1], labels in [0,K) and counts agree.
  void validate() const;

  /// First n samples (all if n >= size()).
  Dataset head(std::size_t n) const;

  Tensor gather_images(std::span<const std::size_t> ids) const;
  Labels gather_labels(std::span<const std::size_t> ids) const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 3073;

/// MNIST-style big-endian IDX pair. Gzip-compressed files are read transparently.
/// Images become [N,1,H,W] scaled by 1/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::optional<std::size_t> limit = std::nullopt);

/// CIFAR-10 binary batches: 1 label byte + 3072 channel-major pixel bytes per record.
Dataset load_cifar_binary(const std::vector<std::string>& paths, std::optional<std::size_t> limit = std::nullopt);

/// k Gaussian clusters in [0,1]^d. Sample i has class i % k, so class counts differ by at most one.
Dataset synth_blobs(std::size_t n, std::size_t d, std::size_t k, Real spread, std::uint64_t seed);

/// Visit order for one epoch, a pure function of (n, seed, epoch).
std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch);

/// Consecutive slices of an epoch permutation; the final batch may be short.
class BatchIterator {
 public:
  BatchIterator(std::size_t n, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch);

  /// Next batch of sample ids, or an empty span when the epoch is exhausted.
  std::span<const std::size_t> next();
  std::size_t batches() const { return (order_.size() + batch_size_ - 1) / batch_size_; }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::size_t pos_ = 0;
};

/// Random horizontal flip and random crop after zero-padding by `pad` for
/// image batches [B,C,H,W].
Tensor augment_flip_crop(const Tensor& images, std::size_t pad, Rng& rng);

}  // namespace pgat
