#include "pgat/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pgat/errors.hpp"

namespace pgat {

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }

  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) u64(d);
    for (Real v : t.data()) f64(static_cast<double>(v));
  }

  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint32_t u32() {
    auto p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    auto p = take(n);
    return std::string(p.begin(), p.end());
  }

  Shape shape(std::size_t rank) {
    if (rank > 8) throw FormatError("checkpoint: implausible tensor rank " + std::to_string(rank));
    Shape s(rank);
    for (auto& d : s) {
      d = u64();
      if (d == 0 || d > (std::uint64_t{1} << 40)) throw FormatError("checkpoint: implausible tensor extent");
    }
    return s;
  }

  Tensor tensor() {
    Shape s = shape(u32());
    const std::size_t n = shape_numel(s);
    if (n * 8 > remaining()) throw LengthError("checkpoint: tensor payload truncated");
    std::vector<Real> v(n);
    for (auto& x : v) x = static_cast<Real>(f64());
    return Tensor(std::move(s), std::move(v));
  }

  std::size_t remaining() const { return b_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) throw LengthError("checkpoint truncated");
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(std::span<const std::uint8_t> b) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, b.data(), static_cast<uInt>(b.size())));
}

void write_store(ByteWriter& w, const PerturbationStore& s) {
  w.u32(static_cast<std::uint32_t>(s.sample_shape().size()));
  for (std::size_t d : s.sample_shape()) w.u64(d);
  w.u64(s.slots());
  for (float v : s.raw()) w.f32(v);
}

PerturbationStore read_store(ByteReader& r) {
  Shape sample = r.shape(r.u32());
  const std::uint64_t slots = r.u64();
  const std::size_t n = slots * shape_numel(sample);
  if (n * 4 > r.remaining()) throw LengthError("checkpoint: perturbation buffer truncated");
  std::vector<float> data(n);
  for (auto& v : data) v = r.f32();
  return PerturbationStore(std::move(sample), std::move(data));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(ckpt.state ? 1u : 0u);
  w.str(ckpt.model.descriptor().to_string());
  w.u32(static_cast<std::uint32_t>(ckpt.model.params().size()));
  for (const auto& p : ckpt.model.params()) w.tensor(p);

  if (ckpt.state) {
    const TrainingState& s = *ckpt.state;
    w.u64(s.next_epoch);
    w.f64(s.sgd.lr);
    w.f64(s.sgd.momentum);
    w.f64(s.sgd.weight_decay);
    w.f64(s.sgd.gamma);
    w.u32(static_cast<std::uint32_t>(s.sgd.milestones.size()));
    for (std::size_t m : s.sgd.milestones) w.u64(m);
    w.u32(static_cast<std::uint32_t>(s.velocity.size()));
    for (const auto& v : s.velocity) w.tensor(v);
    w.u8(static_cast<std::uint8_t>(s.priors.index()));
    if (const auto* bp = std::get_if<BatchPrior>(&s.priors)) {
      write_store(w, bp->store());
    } else if (const auto* ep = std::get_if<EpochPrior>(&s.priors)) {
      write_store(w, ep->store());
    } else if (const auto* mp = std::get_if<MomentumEpochPrior>(&s.priors)) {
      w.f64(mp->mu());
      write_store(w, mp->eta());
      for (double g : mp->momentum()) w.f64(g);
    }
  }
  w.u32(crc_of(w.bytes()));
  return std::move(w.bytes());
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + 12) throw LengthError("checkpoint truncated");
  if (std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  const std::uint32_t stored_crc = tail.u32();
  if (crc_of(body) != stored_crc) throw FormatError("checkpoint checksum mismatch (file corrupt)");

  ByteReader rd(body.subspan(sizeof kCheckpointMagic));
  const std::uint32_t version = rd.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t flags = rd.u32();
  ModelDescriptor desc;
  try {
    desc = ModelDescriptor::parse(rd.str());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint descriptor invalid: ") + e.what());
  }
  const std::uint32_t count = rd.u32();
  std::vector<Tensor> params;
  for (std::uint32_t i = 0; i < count; ++i) params.push_back(rd.tensor());
  Checkpoint ckpt{Model(std::move(desc), std::move(params)), std::nullopt};

  if (flags & 1u) {
    TrainingState s;
    s.next_epoch = rd.u64();
    s.sgd.lr = static_cast<Real>(rd.f64());
    s.sgd.momentum = static_cast<Real>(rd.f64());
    s.sgd.weight_decay = static_cast<Real>(rd.f64());
    s.sgd.gamma = static_cast<Real>(rd.f64());
    const std::uint32_t nm = rd.u32();
    for (std::uint32_t i = 0; i < nm; ++i) s.sgd.milestones.push_back(rd.u64());
    const std::uint32_t nv = rd.u32();
    for (std::uint32_t i = 0; i < nv; ++i) s.velocity.push_back(rd.tensor());
    switch (rd.u8()) {
      case 0: break;
      case 1: s.priors = BatchPrior(read_store(rd)); break;
      case 2: s.priors = EpochPrior(read_store(rd)); break;
      case 3: {
        const Real mu = static_cast<Real>(rd.f64());
        PerturbationStore eta = read_store(rd);
        std::vector<double> g(eta.slots() * eta.slot_size());
        if (g.size() * 8 > rd.remaining()) throw LengthError("checkpoint: momentum buffer truncated");
        for (auto& v : g) v = rd.f64();
        s.priors = MomentumEpochPrior(std::move(eta), std::move(g), mu);
        break;
      }
      default: throw FormatError("checkpoint: unknown prior kind");
    }
    ckpt.state = std::move(s);
  }
  if (rd.remaining() != 0) throw FormatError("checkpoint has trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace pgat
