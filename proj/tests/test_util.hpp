#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include "pgat/attacks.hpp"
#include "pgat/rng.hpp"
#include "pgat/tensor.hpp"

namespace pgat::testing {

/// iid U(lo, hi) entries.
Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0);

Labels random_labels(std::size_t n, std::size_t k, Rng& rng);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p);
void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes);
std::string read_text(const std::filesystem::path& p);

/// Big-endian IDX image file: magic, n, h, w, then n*h*w pixel bytes.
std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t h, std::uint32_t w,
                                     const std::vector<std::uint8_t>& pixels, std::uint32_t magic = 0x00000803);
std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels, std::uint32_t magic = 0x00000801);
/// CIFAR-10 binary record: label byte then 3072 channel-major pixels.
std::vector<std::uint8_t> cifar_record(std::uint8_t label, const std::vector<std::uint8_t>& pixels);
void write_gz(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes);

/// L(x) = sum_n sum_i w_i * x[n,i]; the input gradient is w in every row.
class LinearObjective final : public AttackObjective {
 public:
  explicit LinearObjective(std::vector<Real> w) : w_(std::move(w)) {}
  Real loss(const Tensor& x, const Labels& y) const override;
  Tensor input_gradient(const Tensor& x, const Labels& y) const override;

 private:
  std::vector<Real> w_;
};

/// Replays a fixed sequence of input gradients, one per call, and records the
/// points it was queried at.
class ScriptedObjective final : public AttackObjective {
 public:
  explicit ScriptedObjective(std::deque<Tensor> grads) : grads_(std::move(grads)) {}
  Real loss(const Tensor&, const Labels&) const override { return 0; }
  Tensor input_gradient(const Tensor& x, const Labels& y) const override;
  const std::vector<Tensor>& queried() const { return queried_; }

 private:
  mutable std::deque<Tensor> grads_;
  mutable std::vector<Tensor> queried_;
};

}  // namespace pgat::testing

/// Oracle tolerances assume 64-bit reals.
#define PGAT_REQUIRE_DOUBLE() \
  if (sizeof(::pgat::Real) != 8) GTEST_SKIP() << "needs a 64-bit Real build"
