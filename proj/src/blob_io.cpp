#include "softclt/blob_io.hpp"

#include <fstream>
#include <vector>

namespace softclt::io {

void write_doubles(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_doubles(std::istream& in, std::span<double> values, const char* what) {
  const auto bytes = static_cast<std::streamsize>(values.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(values.data()), bytes);
  if (in.gcount() != bytes) throw DataError(std::string("truncated file while reading ") + what);
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const char* what, std::size_t max_len) {
  const auto len = read_pod<std::uint64_t>(in, what);
  if (len > max_len) throw DataError(std::string("corrupt length field in ") + what);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (in.gcount() != static_cast<std::streamsize>(len))
    throw DataError(std::string("truncated file while reading ") + what);
  return s;
}

void expect_magic(std::istream& in, std::string_view magic) {
  std::vector<char> buf(magic.size());
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()) ||
      std::string_view(buf.data(), buf.size()) != magic)
    throw DataError("bad magic bytes, expected " + std::string(magic));
}

}  // namespace softclt::io


namespace softclt {

namespace {
constexpr std::string_view kBlobMagic = "SCLTCKPT";
}

const Tensor& BlobFile::get(const std::string& name) const {
  for (const auto& [n, t] : blobs)
    if (n == name) return t;
  throw DataError("checkpoint has no blob named '" + name + "'");
}

void save_blob_file(const BlobFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kBlobMagic.data(), kBlobMagic.size());
  io::write_pod(out, kBlobFileVersion);
  io::write_string(out, file.meta.dump());
  io::write_pod<std::uint64_t>(out, file.blobs.size());
  for (const auto& [name, t] : file.blobs) {
    io::write_string(out, name);
    io::write_pod<std::uint64_t>(out, t.rank());
    for (auto d : t.shape()) io::write_pod<std::uint64_t>(out, d);
    io::write_doubles(out, t.data());
  }
  if (!out) throw DataError("write error on " + path.string());
}

BlobFile load_blob_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  io::expect_magic(in, kBlobMagic);
  const auto version = io::read_pod<std::uint32_t>(in, "checkpoint version");
  if (version != kBlobFileVersion)
    throw DataError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kBlobFileVersion) + ")");
  BlobFile file;
  try {
    file.meta = nlohmann::json::parse(io::read_string(in, "checkpoint metadata"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
  const auto count = io::read_pod<std::uint64_t>(in, "blob count");
  if (count > (1u << 20)) throw DataError("corrupt blob count in checkpoint");
  for (std::uint64_t k = 0; k < count; ++k) {
    auto name = io::read_string(in, "blob name", 4096);
    const auto rank = io::read_pod<std::uint64_t>(in, "blob rank");
    if (rank > 8) throw DataError("corrupt blob rank in checkpoint");
    Shape shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
      d = io::read_pod<std::uint64_t>(in, "blob dims");
      if (d > (1u << 28) || (total *= d) > (1u << 28)) throw DataError("corrupt blob dims in checkpoint");
    }
    Tensor t(shape);
    io::read_doubles(in, t.data(), "blob data");
    file.blobs.emplace_back(std::move(name), std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in checkpoint");
  return file;
}

}  // namespace softclt
