#include "cyldet/tensor_io.hpp"

#include <cstring>
#include <fstream>

#include "cyldet/errors.hpp"

namespace cyldet {
namespace {

// On-disk integers and floats are little-endian; this code assumes a
// little-endian host.
template <class T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw FormatError(FormatError::Kind::Truncated, std::string("truncated ") + what);
  return v;
}

void write_tensor_payload(std::ostream& os, const Tensor& t) {
  os.write("CYLT", 4);
  write_raw<uint32_t>(os, static_cast<uint32_t>(t.rank()));
  for (int64_t e : t.shape) write_raw<uint64_t>(os, static_cast<uint64_t>(e));
  os.write(reinterpret_cast<const char*>(t.data.data()),
           static_cast<std::streamsize>(t.data.size() * sizeof(float)));
}

Tensor read_tensor_payload(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is) throw FormatError(FormatError::Kind::Truncated, "truncated tensor header");
  if (std::memcmp(magic, "CYLT", 4) != 0)
    throw FormatError(FormatError::Kind::BadMagic, "bad tensor magic");
  auto rank = read_raw<uint32_t>(is, "tensor rank");
  if (rank > 8) throw FormatError(FormatError::Kind::BadValue, "implausible tensor rank");
  std::vector<int64_t> shape(rank);
  for (auto& e : shape) e = static_cast<int64_t>(read_raw<uint64_t>(is, "tensor shape"));
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!is) throw FormatError(FormatError::Kind::Truncated, "truncated tensor data");
  return t;
}

}  // namespace

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  write_tensor_payload(os, t);
  if (!os) throw DataError("write failed: " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  return read_tensor_payload(is);
}

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path.string());
  os.write("CYLW", 4);
  write_raw<uint32_t>(os, 1u);
  write_raw<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_raw<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor_payload(os, *t);
  }
  if (!os) throw DataError("write failed: " + path.string());
}

std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path.string());
  char magic[4] = {};
  is.read(magic, 4);
  if (!is) throw FormatError(FormatError::Kind::Truncated, "truncated checkpoint header");
  if (std::memcmp(magic, "CYLW", 4) != 0)
    throw FormatError(FormatError::Kind::BadMagic, "bad checkpoint magic");
  auto version = read_raw<uint32_t>(is, "checkpoint version");
  if (version != 1)
    throw FormatError(FormatError::Kind::BadVersion,
                      "unsupported checkpoint version " + std::to_string(version));
  auto count = read_raw<uint32_t>(is, "checkpoint tensor count");
  std::map<std::string, Tensor> out;
  for (uint32_t i = 0; i < count; ++i) {
    auto len = read_raw<uint32_t>(is, "tensor name length");
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (!is) throw FormatError(FormatError::Kind::Truncated, "truncated tensor name");
    out.emplace(std::move(name), read_tensor_payload(is));
  }
  return out;
}

}  // namespace cyldet
