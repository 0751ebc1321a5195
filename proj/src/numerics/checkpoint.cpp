#include "pointcopy/numerics/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "pointcopy/error.hpp"

namespace pointcopy {
namespace {

constexpr std::array<char, 4> kMagic{'P', 'G', 'V', '1'};

template <typename U>
void put_le(std::ostream& os, U v) {
  std::array<unsigned char, sizeof(U)> b{};
  for (std::size_t i = 0; i < sizeof(U); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b.data()), b.size());
}

template <typename U>
bool get_le(std::istream& is, U& v) {
  std::array<unsigned char, sizeof(U)> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), b.size())) return false;
  v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
  return true;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& records) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(os, kCheckpointVersion);
  for (const auto& [name, t] : records) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint64_t>(os, t.rows());
    put_le<std::uint64_t>(os, t.cols());
    for (double v : t.flat()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw IoError("write failed: " + path.string());
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ParseError("not a PGV1 checkpoint: " + path.string());
  }
  std::uint32_t version = 0;
  if (!get_le(is, version) || version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  std::vector<NamedTensor> out;
  for (;;) {
    std::uint32_t len = 0;
    if (!get_le(is, len)) {
      if (is.eof() && is.gcount() == 0) break;
      throw ParseError("truncated checkpoint record header");
    }
    std::string name(len, '\0');
    std::uint64_t rows = 0, cols = 0;
    if (!is.read(name.data(), len) || !get_le(is, rows) || !get_le(is, cols)) {
      throw ParseError("truncated checkpoint record '" + name + "'");
    }
    if (cols != 0 && rows > (std::uint64_t{1} << 40) / cols) {
      throw ParseError("implausible tensor shape in record '" + name + "'");
    }
    std::vector<double> data(rows * cols);
    for (double& v : data) {
      std::uint64_t bits = 0;
      if (!get_le(is, bits)) throw ParseError("truncated payload in record '" + name + "'");
      v = std::bit_cast<double>(bits);
    }
    out.push_back({std::move(name), Tensor2(rows, cols, std::move(data))});
  }
  return out;
}

}  // namespace pointcopy
