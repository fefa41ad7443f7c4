#include "getnext/core/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <map>

#include "getnext/core/error.hpp"

namespace getnext::core {
namespace {

constexpr char kMagic[8] = {'G', 'N', 'X', 'T', 'C', 'K', 'P', 'T'};

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw InputError("checkpoint: truncated data");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<NamedBlob> snapshot(const ParameterStore& store) {
  std::vector<NamedBlob> blobs;
  for (const Tensor& p : store.all()) blobs.push_back({p.name(), p.value()});
  return blobs;
}

std::string encode_checkpoint(const std::vector<NamedBlob>& blobs) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(blobs.size()));
  for (const auto& b : blobs) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out += b.name;
    put_le<std::uint64_t>(out, b.value.rows());
    put_le<std::uint64_t>(out, b.value.cols());
    for (double v : b.value.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<NamedBlob> decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.get_bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw InputError("checkpoint: bad magic");
  }
  const auto version = r.get_le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw InputError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = r.get_le<std::uint32_t>();
  std::vector<NamedBlob> blobs;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedBlob b;
    b.name = r.get_bytes(r.get_le<std::uint32_t>());
    const auto rows = r.get_le<std::uint64_t>();
    const auto cols = r.get_le<std::uint64_t>();
    std::vector<double> values(rows * cols);
    for (double& v : values) v = std::bit_cast<double>(r.get_le<std::uint64_t>());
    b.value = Matrix(rows, cols, std::move(values));
    blobs.push_back(std::move(b));
  }
  if (!r.done()) throw InputError("checkpoint: trailing bytes");
  return blobs;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedBlob>& blobs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  const std::string bytes = encode_checkpoint(blobs);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::vector<NamedBlob> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void restore(ParameterStore& store, const std::vector<NamedBlob>& blobs) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& b : blobs) by_name[b.name] = &b.value;
  if (by_name.size() != store.count()) {
    throw InputError("checkpoint: holds " + std::to_string(by_name.size()) +
                     " blobs, model expects " + std::to_string(store.count()));
  }
  for (const Tensor& p : store.all()) {
    const auto it = by_name.find(p.name());
    if (it == by_name.end()) throw InputError("checkpoint: missing parameter " + p.name());
    if (!it->second->same_shape(p.value())) {
      throw InputError("checkpoint: " + p.name() + " is " + it->second->shape_string() +
                       ", model expects " + p.value().shape_string());
    }
    Tensor t = p;
    t.mutable_value() = *it->second;
  }
}

}  // namespace getnext::core
