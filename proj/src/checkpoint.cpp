#include "rankae/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "rankae/config.hpp"

namespace rankae {

namespace {

constexpr char kMagic[4] = {'R', 'K', 'A', 'E'};
constexpr std::uint32_t kVersion = 1;

bool is_little_endian() {
  const std::uint16_t probe = 1;
  unsigned char byte;
  std::memcpy(&byte, &probe, 1);
  return byte == 1;
}

template <class T>
void swap_bytes(T& value) {
  auto* p = reinterpret_cast<unsigned char*>(&value);
  std::reverse(p, p + sizeof(T));
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <class T>
  void write_le(T value) {
    if (!is_little_endian()) swap_bytes(value);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    check();
  }

  void write_bytes(const void* data, std::size_t n) {
    out_.write(reinterpret_cast<const char*>(data), std::streamsize(n));
    check();
  }

  void write_floats_le(const float* data, std::size_t n) {
    if (is_little_endian()) {
      write_bytes(data, n * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n; ++i) write_le(data[i]);
    }
  }

 private:
  void check() {
    if (!out_) throw std::runtime_error("checkpoint write failed");
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const { return offset_; }

  template <class T>
  T read_le(const char* what) {
    T value;
    read_bytes(&value, sizeof(T), what);
    if (!is_little_endian()) swap_bytes(value);
    return value;
  }

  void read_bytes(void* data, std::size_t n, const char* what) {
    in_.read(reinterpret_cast<char*>(data), std::streamsize(n));
    if (std::size_t(in_.gcount()) != n)
      throw std::runtime_error("truncated checkpoint: failed reading " +
                               std::string(what) + " at offset " +
                               std::to_string(offset_));
    offset_ += n;
  }

  void read_floats_le(float* data, std::size_t n, const char* what) {
    read_bytes(data, n * sizeof(float), what);
    if (!is_little_endian())
      for (std::size_t i = 0; i < n; ++i) swap_bytes(data[i]);
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams<float>& params) {
  // Write to a temp file first so a failed save never leaves a partial
  // checkpoint under the target name.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + tmp);
    Writer w(out);
    w.write_bytes(kMagic, sizeof(kMagic));
    w.write_le<std::uint32_t>(kVersion);
    const std::string config = model_config_to_text(params.cfg);
    w.write_le<std::uint64_t>(config.size());
    w.write_bytes(config.data(), config.size());
    params.for_each_array([&](const char* name, const std::vector<float>& data) {
      const std::uint32_t name_len = std::uint32_t(std::strlen(name));
      w.write_le<std::uint32_t>(name_len);
      w.write_bytes(name, name_len);
      w.write_le<std::uint64_t>(data.size());
      w.write_floats_le(data.data(), data.size());
    });
    if (!out.flush()) throw std::runtime_error("checkpoint write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ModelParams<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  Reader r(in);

  char magic[4];
  r.read_bytes(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(path + " is not a Rank-AE checkpoint (bad magic)");
  const auto version = r.read_le<std::uint32_t>("version");
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + " (expected " +
                             std::to_string(kVersion) + ")");

  const auto config_len = r.read_le<std::uint64_t>("config length");
  if (config_len > (1u << 20))
    throw std::runtime_error("implausible config length at offset 8");
  std::string config(config_len, '\0');
  r.read_bytes(config.data(), config_len, "config");

  ModelParams<float> params;
  params.cfg = model_config_from_text(config);
  params.cfg.validate();
  // Allocate at the configured shapes, then overwrite from the file.
  Rng rng(0);
  params.init(rng);

  params.for_each_array([&](const char* name, std::vector<float>& data) {
    const auto name_len = r.read_le<std::uint32_t>("array name length");
    std::string stored(name_len, '\0');
    r.read_bytes(stored.data(), name_len, "array name");
    if (stored != name)
      throw std::runtime_error("checkpoint array order mismatch: expected '" +
                               std::string(name) + "', found '" + stored +
                               "' at offset " + std::to_string(r.offset()));
    const auto count = r.read_le<std::uint64_t>("element count");
    if (count != data.size())
      throw std::runtime_error("checkpoint array '" + stored + "' has " +
                               std::to_string(count) + " elements, expected " +
                               std::to_string(data.size()));
    r.read_floats_le(data.data(), data.size(), name);
  });

  if (!r.at_eof())
    throw std::runtime_error("trailing bytes after checkpoint data at offset " +
                             std::to_string(r.offset()));
  return params;
}

}  // namespace rankae
