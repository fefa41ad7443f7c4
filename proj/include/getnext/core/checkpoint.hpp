#pragma once

// Checkpoint container.
//
//   magic   8 bytes  "GNXTCKPT"
//   version u32 LE   (currently 1)
//   count   u32 LE
//   count x { name_len u32 LE, name bytes, rows u64 LE, cols u64 LE,
//             rows*cols IEEE-754 binary64 LE }

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "getnext/core/matrix.hpp"
#include "getnext/core/params.hpp"

namespace getnext::core {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedBlob {
  std::string name;
  Matrix value;
};

std::vector<NamedBlob> snapshot(const ParameterStore& store);

std::string encode_checkpoint(const std::vector<NamedBlob>& blobs);
std::vector<NamedBlob> decode_checkpoint(const std::string& bytes);

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedBlob>& blobs);
std::vector<NamedBlob> read_checkpoint(const std::filesystem::path& path);

// Copies blob values into same-named parameters. Every parameter must be
// present with a matching shape; extra blobs are an error too.
void restore(ParameterStore& store, const std::vector<NamedBlob>& blobs);

}  // namespace getnext::core
