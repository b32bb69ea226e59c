#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "softclt/error.hpp"
#include "softclt/tensor.hpp"

namespace softclt::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
  requires std::is_trivially_copyable_v<T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T read_pod(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw DataError(std::string("truncated file while reading ") + what);
  return v;
}

void write_doubles(std::ostream& out, std::span<const double> values);
void read_doubles(std::istream& in, std::span<double> values, const char* what);

void write_string(std::ostream& out, const std::string& s);
std::string read_string(std::istream& in, const char* what, std::size_t max_len = 1u << 26);

void expect_magic(std::istream& in, std::string_view magic);

}  // namespace softclt::io

namespace softclt {

// Versioned container of JSON metadata plus named float64 tensors. Used for
// model and training checkpoints; values round-trip bit for bit.
//
//   "SCLTCKPT" u32 version, metadata (u64 length + UTF-8 JSON), u64 count,
//   then per blob: name, u64 rank, rank x u64 dims, float64 data.
struct BlobFile {
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> blobs;

  const Tensor& get(const std::string& name) const;
};

inline constexpr std::uint32_t kBlobFileVersion = 1;

void save_blob_file(const BlobFile& file, const std::filesystem::path& path);
BlobFile load_blob_file(const std::filesystem::path& path);

}  // namespace softclt
