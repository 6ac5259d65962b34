#include "pgat/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <memory>

#include "pgat/errors.hpp"

namespace pgat {

Shape Dataset::sample_shape() const {
  Shape s = images.shape();
  if (!s.empty()) s.erase(s.begin());
  return s;
}

void Dataset::validate() const {
  if (images.rank() < 2) throw FormatError("dataset images must be [N,...], got " + shape_string(images.shape()));
  if (images.dim(0) != labels.size()) {
    throw FormatError("dataset has " + std::to_string(images.dim(0)) + " images but " + std::to_string(labels.size()) +
                      " labels");
  }
  if (num_classes < 2) throw FormatError("dataset needs at least 2 classes");
  for (Real v : images.data()) {
    if (!(v >= Real(0) && v <= Real(1))) throw FormatError("dataset pixel value outside [0,1]");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw FormatError("dataset label " + std::to_string(l) + " outside [0," + std::to_string(num_classes) + ")");
    }
  }
}

Dataset Dataset::head(std::size_t n) const {
  if (n >= size()) return *this;
  return Dataset{images.slice_rows(0, n), std::vector<int>(labels.begin(), labels.begin() + static_cast<long>(n)),
                 num_classes};
}

Tensor Dataset::gather_images(std::span<const std::size_t> ids) const {
  const std::size_t row = images.sample_size();
  Shape s = images.shape();
  s[0] = ids.size();
  Tensor out(std::move(s));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= size()) throw IndexError("sample id " + std::to_string(ids[r]) + " out of range");
    std::copy_n(images.data().begin() + static_cast<long>(ids[r] * row), row,
                out.data().begin() + static_cast<long>(r * row));
  }
  return out;
}

Labels Dataset::gather_labels(std::span<const std::size_t> ids) const {
  Labels y{{}, num_classes};
  y.classes.reserve(ids.size());
  for (std::size_t id : ids) {
    if (id >= size()) throw IndexError("sample id " + std::to_string(id) + " out of range");
    y.classes.push_back(labels[id]);
  }
  return y;
}

namespace {

/// Whole file contents; gzip streams are inflated, plain files pass through.
std::vector<unsigned char> read_file(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path);
  std::unique_ptr<gzFile_s, int (*)(gzFile)> guard(f, gzclose);
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  for (;;) {
    const int n = gzread(f, buf, sizeof buf);
    if (n < 0) throw FormatError("corrupt compressed stream in " + path);
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  return out;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path, std::optional<std::size_t> limit) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16) throw LengthError(images_path + ": IDX header truncated");
  if (lab.size() < 8) throw LengthError(labels_path + ": IDX header truncated");
  const std::uint32_t img_magic = read_be32(img, 0), lab_magic = read_be32(lab, 0);
  if (img_magic != kIdxImageMagic) {
    throw FormatError(images_path + ": bad IDX image magic " + hex32(img_magic) + ", expected " + hex32(kIdxImageMagic));
  }
  if (lab_magic != kIdxLabelMagic) {
    throw FormatError(labels_path + ": bad IDX label magic " + hex32(lab_magic) + ", expected " + hex32(kIdxLabelMagic));
  }
  std::size_t n = read_be32(img, 4);
  const std::size_t h = read_be32(img, 8), w = read_be32(img, 12);
  const std::size_t n_labels = read_be32(lab, 4);
  if (n != n_labels) {
    throw FormatError("IDX count mismatch: " + std::to_string(n) + " images vs " + std::to_string(n_labels) + " labels");
  }
  if (h == 0 || w == 0 || n == 0) throw FormatError(images_path + ": IDX header has a zero dimension");
  if (img.size() - 16 < n * h * w) {
    throw LengthError(images_path + ": header claims " + std::to_string(n) + " images of " + std::to_string(h) + "x" +
                      std::to_string(w) + " but payload has " + std::to_string(img.size() - 16) + " bytes");
  }
  if (lab.size() - 8 < n) {
    throw LengthError(labels_path + ": header claims " + std::to_string(n) + " labels but payload has " +
                      std::to_string(lab.size() - 8) + " bytes");
  }
  if (limit) n = std::min(n, *limit);

  Dataset ds;
  ds.images = Tensor({n, 1, h, w});
  for (std::size_t i = 0; i < n * h * w; ++i) ds.images[i] = static_cast<Real>(img[16 + i]) / Real(255);
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lab[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max<std::size_t>(10, static_cast<std::size_t>(max_label) + 1);
  ds.validate();
  return ds;
}

Dataset load_cifar_binary(const std::vector<std::string>& paths, std::optional<std::size_t> limit) {
  constexpr std::size_t kPixels = kCifarRecordBytes - 1;
  std::vector<Real> pixels;
  std::vector<int> labels;
  const std::size_t cap = limit.value_or(SIZE_MAX);
  for (const auto& path : paths) {
    if (labels.size() >= cap) break;
    const auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
      throw FormatError(path + ": size " + std::to_string(bytes.size()) + " is not a multiple of " +
                        std::to_string(kCifarRecordBytes));
    }
    for (std::size_t off = 0; off < bytes.size() && labels.size() < cap; off += kCifarRecordBytes) {
      if (bytes[off] > 9) throw FormatError(path + ": label byte " + std::to_string(bytes[off]) + " out of range");
      labels.push_back(bytes[off]);
      for (std::size_t j = 0; j < kPixels; ++j) pixels.push_back(static_cast<Real>(bytes[off + 1 + j]) / Real(255));
    }
  }
  if (labels.empty()) throw FormatError("no CIFAR records loaded");
  Dataset ds{Tensor({labels.size(), 3, 32, 32}, std::move(pixels)), std::move(labels), 10};
  ds.validate();
  return ds;
}

Dataset synth_blobs(std::size_t n, std::size_t d, std::size_t k, Real spread, std::uint64_t seed) {
  if (k < 2) throw ConfigError("synth_blobs: need k >= 2 classes");
  if (n == 0 || d == 0) throw ConfigError("synth_blobs: n and d must be positive");
  if (!(spread >= 0)) throw ConfigError("synth_blobs: spread must be >= 0");
  Rng rng = Rng::derive(seed, {stream::kData});
  std::vector<Real> centers(k * d);
  for (Real& c : centers) c = static_cast<Real>(rng.uniform(0.2, 0.8));
  Dataset ds{Tensor({n, d}), std::vector<int>(n), k};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    ds.labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < d; ++j) {
      const double v = centers[c * d + j] + spread * rng.normal();
      ds.images[i * d + j] = static_cast<Real>(std::clamp(v, 0.0, 1.0));
    }
  }
  return ds;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng::derive(seed, {stream::kShuffle, epoch});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

BatchIterator::BatchIterator(std::size_t n, std::size_t batch_size, std::uint64_t seed, std::uint64_t epoch)
    : order_(epoch_permutation(n, seed, epoch)), batch_size_(batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
}

std::span<const std::size_t> BatchIterator::next() {
  if (pos_ >= order_.size()) return {};
  const std::size_t len = std::min(batch_size_, order_.size() - pos_);
  std::span<const std::size_t> out(order_.data() + pos_, len);
  pos_ += len;
  return out;
}

Tensor augment_flip_crop(const Tensor& images, std::size_t pad, Rng& rng) {
  if (images.rank() != 4) throw DimensionError("augment needs [B,C,H,W], got " + shape_string(images.shape()));
  const std::size_t B = images.dim(0), C = images.dim(1), H = images.dim(2), W = images.dim(3);
  Tensor out = Tensor::zeros_like(images);
  for (std::size_t n = 0; n < B; ++n) {
    const bool flip = rng.below(2) == 1;
    const long dy = static_cast<long>(rng.below(2 * pad + 1)) - static_cast<long>(pad);
    const long dx = static_cast<long>(rng.below(2 * pad + 1)) - static_cast<long>(pad);
    for (std::size_t c = 0; c < C; ++c) {
      const Real* src = images.data().data() + (n * C + c) * H * W;
      Real* dst = out.data().data() + (n * C + c) * H * W;
      for (std::size_t y = 0; y < H; ++y) {
        const long sy = static_cast<long>(y) + dy;
        if (sy < 0 || sy >= static_cast<long>(H)) continue;
        for (std::size_t x = 0; x < W; ++x) {
          const long sx0 = static_cast<long>(x) + dx;
          if (sx0 < 0 || sx0 >= static_cast<long>(W)) continue;
          const long sx = flip ? static_cast<long>(W) - 1 - sx0 : sx0;
          dst[y * W + x] = src[sy * static_cast<long>(W) + sx];
        }
      }
    }
  }
  return out;
}

}  // namespace pgat
