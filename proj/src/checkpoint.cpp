#include "wavebound/trainer.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace wavebound {

namespace {

constexpr std::array<char, 8> kMagic{'W', 'B', 'C', 'K', 'P', 'T', '\0', '\0'};

class Writer
{
public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(char const *p, std::size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  std::vector<char> const &bytes() const { return bytes_; }

private:
  void put(std::uint64_t v, int n)
  {
    for (int i = 0; i < n; ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }
  std::vector<char> bytes_;
};

class Reader
{
public:
  Reader(std::vector<char> const &bytes, std::size_t end, std::string path)
    : bytes_{bytes}
    , end_{end}
    , path_{std::move(path)}
  {
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::size_t position() const { return pos_; }

private:
  std::uint64_t get(int n)
  {
    if (pos_ + static_cast<std::size_t>(n) > end_) {
      throw DataError("checkpoint '" + path_ + "' failed integrity check: truncated");
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::vector<char> const &bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string path_;
};

std::uint64_t fnv1a(char const *p, std::size_t n)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace

void checkpoint_save(std::filesystem::path const &path, Params const &source, EmaMirror<double> const &mirror)
{
  validate(source);
  if (!same_shape(source, mirror.target)) {
    throw ConfigError("checkpoint: source and target shapes differ");
  }
  Writer w;
  w.raw(kMagic.data(), kMagic.size());
  w.u32(kCheckpointVersion);
  w.u32(2);
  w.f64(mirror.decay);
  std::array<Params const *, 2> const nets{&source, &mirror.target};
  for (auto const *net : nets) {
    w.u32(static_cast<std::uint32_t>(net->layers.size()));
    for (auto const &l : net->layers) {
      w.u64(static_cast<std::uint64_t>(l.weight.rows()));
      w.u64(static_cast<std::uint64_t>(l.weight.cols()));
    }
  }
  for (auto const *net : nets) {
    for (auto const &l : net->layers) {
      for (Index i = 0; i < l.weight.size(); ++i) {
        w.f64(l.weight.data()[i]);
      }
      for (Index i = 0; i < l.bias.size(); ++i) {
        w.f64(l.bias(i));
      }
    }
  }
  auto bytes = w.bytes();
  std::uint64_t const sum = fnv1a(bytes.data(), bytes.size());
  Writer tail;
  tail.u64(sum);
  bytes.insert(bytes.end(), tail.bytes().begin(), tail.bytes().end());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write checkpoint '" + path.string() + "'");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("failed while writing checkpoint '" + path.string() + "'");
  }
}

Checkpoint checkpoint_load(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint '" + path.string() + "'");
  }
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string const name = path.string();
  auto fail = [&](std::string const &why) { return DataError("checkpoint '" + name + "' failed integrity check: " + why); };

  if (bytes.size() < kMagic.size() + 8 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw fail("bad magic");
  }
  std::size_t const body = bytes.size() - 8;
  std::uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) {
    stored |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[body + static_cast<std::size_t>(i)])) << (8 * i);
  }
  if (fnv1a(bytes.data(), body) != stored) {
    throw fail("checksum mismatch (truncated or corrupted)");
  }

  Reader rd(bytes, body, name);
  rd.u64(); // magic
  auto const version = rd.u32();
  if (version != kCheckpointVersion) {
    throw fail("unsupported version " + std::to_string(version));
  }
  auto const networks = rd.u32();
  if (networks != 2) {
    throw fail("expected 2 networks, found " + std::to_string(networks));
  }
  Checkpoint ck;
  ck.mirror.decay = rd.f64();
  std::array<Params *, 2> const nets{&ck.source, &ck.mirror.target};
  for (auto *net : nets) {
    auto const layers = rd.u32();
    if (layers == 0 || layers > 64) {
      throw fail("implausible layer count " + std::to_string(layers));
    }
    for (std::uint32_t i = 0; i < layers; ++i) {
      auto const rows = rd.u64();
      auto const cols = rd.u64();
      if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24)) {
        throw fail("implausible layer shape");
      }
      net->layers.push_back({MatrixXd(static_cast<Index>(rows), static_cast<Index>(cols)),
                             VectorXd(static_cast<Index>(rows))});
    }
  }
  for (auto *net : nets) {
    for (auto &l : net->layers) {
      for (Index i = 0; i < l.weight.size(); ++i) {
        l.weight.data()[i] = rd.f64();
      }
      for (Index i = 0; i < l.bias.size(); ++i) {
        l.bias(i) = rd.f64();
      }
    }
  }
  if (rd.position() != body) {
    throw fail("trailing bytes after payload");
  }
  validate(ck.source);
  if (!same_shape(ck.source, ck.mirror.target)) {
    throw fail("source and target shapes differ");
  }
  return ck;
}

} // namespace wavebound
