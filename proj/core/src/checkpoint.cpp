#include "follmer/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace follmer::cli {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'F', 'M'};

class Writer {
public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void optional(const std::optional<double>& v) {
    u8(v ? 1 : 0);
    f64(v ? *v : 0.0);
  }
  void intervals(const std::vector<Interval>& v) {
    u64(v.size());
    for (const auto& i : v) {
      f64(i.lo);
      f64(i.hi);
    }
  }
  std::string& bytes() { return out_; }

private:
  std::string out_;
};

class Reader {
public:
  Reader(const std::string& bytes, std::size_t begin, std::size_t end, std::string name)
      : b_(bytes), pos_(begin), end_(end), name_(std::move(name)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(b_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::optional<double> optional() {
    const bool present = u8() != 0;
    const double v = f64();
    return present ? std::optional<double>(v) : std::nullopt;
  }
  std::size_t count(std::size_t limit) {
    const std::uint64_t n = u64();
    if (n > limit) {
      throw Error(name_ + ": corrupt checkpoint (implausible count " + std::to_string(n) + ")");
    }
    return static_cast<std::size_t>(n);
  }
  std::vector<Interval> intervals() {
    std::vector<Interval> v(count(1u << 20));
    for (auto& i : v) {
      i.lo = f64();
      i.hi = f64();
    }
    return v;
  }
  bool done() const { return pos_ == end_; }

private:
  void need(std::size_t n) const {
    if (end_ - pos_ < n) {
      throw Error(name_ + ": truncated checkpoint");
    }
  }

  const std::string& b_;
  std::size_t pos_;
  std::size_t end_;
  std::string name_;
};

} // namespace

std::uint32_t crc32(const std::string& bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
    c = ::crc32(c, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(c);
}

std::string encode_checkpoint(const Checkpoint& ck) {
  Writer p;
  p.u8(static_cast<std::uint8_t>(ck.kind));
  p.u64(ck.spec.dx);
  p.u64(ck.spec.dy);
  p.intervals(ck.spec.x_bounds);
  p.intervals(ck.spec.y_bounds);
  p.u8(ck.scaling.x_applied ? 1 : 0);
  p.u8(ck.scaling.y_applied ? 1 : 0);
  p.intervals(ck.scaling.x_range);
  p.intervals(ck.scaling.y_range);

  const auto& c = ck.net.config();
  p.u64(c.x_dim);
  p.u64(c.cond_dim);
  p.u8(c.time_input ? 1 : 0);
  p.u64(c.fourier_features);
  p.u64(c.hidden.size());
  for (auto w : c.hidden) p.u64(w);
  p.u64(c.out_dim);
  p.optional(c.output_cap);
  p.optional(c.weight_cap);
  p.optional(c.lipschitz_x);
  p.optional(c.lipschitz_y);
  p.optional(c.lipschitz_t);

  p.f64(ck.stop_time);
  p.u64(ck.seed);
  const auto params = ck.net.flatten();
  p.u64(params.size());
  for (double v : params) p.f64(v);

  const std::string& payload = p.bytes();
  Writer file;
  for (char ch : kMagic) file.u8(static_cast<std::uint8_t>(ch));
  file.u32(Checkpoint::kVersion);
  file.u64(payload.size());
  file.bytes() += payload;
  file.u32(crc32(payload));
  return file.bytes();
}

Checkpoint decode_checkpoint(const std::string& bytes, const std::string& name) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(name + ": not a checkpoint file (bad magic)");
  }
  Reader head(bytes, 4, bytes.size(), name);
  const std::uint32_t version = head.u32();
  if (version != Checkpoint::kVersion) {
    throw Error(name + ": checkpoint version " + std::to_string(version) + " is not supported (this reader expects " +
                std::to_string(Checkpoint::kVersion) + ")");
  }
  const std::uint64_t size = head.u64();
  constexpr std::size_t header = 16;
  if (bytes.size() < header + 4 || size > bytes.size() - header - 4) {
    throw Error(name + ": truncated checkpoint");
  }
  if (bytes.size() != header + size + 4) {
    throw Error(name + ": trailing bytes after checkpoint");
  }
  const std::string payload = bytes.substr(header, static_cast<std::size_t>(size));
  Reader tail(bytes, header + static_cast<std::size_t>(size), bytes.size(), name);
  if (tail.u32() != crc32(payload)) {
    throw Error(name + ": checksum mismatch (checkpoint is corrupt)");
  }

  Reader p(payload, 0, payload.size(), name);
  Checkpoint ck;
  const auto kind = p.u8();
  if (kind > 1) {
    throw Error(name + ": unknown model kind " + std::to_string(kind));
  }
  ck.kind = static_cast<ModelKind>(kind);
  ck.spec.dx = p.count(1u << 20);
  ck.spec.dy = p.count(1u << 20);
  ck.spec.x_bounds = p.intervals();
  ck.spec.y_bounds = p.intervals();
  ck.scaling.x_applied = p.u8() != 0;
  ck.scaling.y_applied = p.u8() != 0;
  ck.scaling.x_range = p.intervals();
  ck.scaling.y_range = p.intervals();

  nn::MlpConfig c;
  c.x_dim = p.count(1u << 20);
  c.cond_dim = p.count(1u << 20);
  c.time_input = p.u8() != 0;
  c.fourier_features = p.count(64);
  c.hidden.resize(p.count(1024));
  for (auto& w : c.hidden) w = p.count(1u << 20);
  c.out_dim = p.count(1u << 20);
  c.output_cap = p.optional();
  c.weight_cap = p.optional();
  c.lipschitz_x = p.optional();
  c.lipschitz_y = p.optional();
  c.lipschitz_t = p.optional();
  ck.stop_time = p.f64();
  ck.seed = p.u64();

  ck.spec.validate();
  nn::Mlp net(c);
  std::vector<double> params(p.count(std::size_t{1} << 32));
  for (auto& v : params) v = p.f64();
  if (!p.done()) {
    throw Error(name + ": corrupt checkpoint (unexpected payload length)");
  }
  net.unflatten(params);
  ck.net = std::move(net);
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write checkpoint: " + path);
  }
  const std::string bytes = encode_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error("failed writing checkpoint: " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open checkpoint: " + path);
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, path);
}

} // namespace follmer::cli
