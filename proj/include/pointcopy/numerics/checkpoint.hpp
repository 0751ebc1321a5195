#pragma once

// Binary tensor checkpoint:
//
//   "PGV1"  u32 version
//   repeated until EOF:
//     u32 name length, name bytes (UTF-8),
//     u64 rows, u64 cols, rows*cols f64
//
// All integers and floats little-endian. Reading reproduces every bit.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pointcopy/numerics/tensor.hpp"

namespace pointcopy {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor2 value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& records);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace pointcopy
