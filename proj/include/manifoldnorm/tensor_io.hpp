#pragma once

// Binary grid and dataset files.
//
// Grid ("MNRM"):
//   magic "MNRM" | u16 version = 1 | u8 manifold kind | u16 n | u32 d1 d2 d3 N C
//   | cells as little-endian float64, cells in (i1,i2,i3,i_n,i_c) row-major
//     order, each cell's ambient matrix row-major | u32 CRC32 of all prior bytes
// Dataset ("MNRD"):
//   magic "MNRD" | u16 version = 1 | u32 classes | u32 count | u32 labels[count]
//   | u8 split[count] | u32 grid length | grid block | u32 CRC32 of all prior bytes

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include <zlib.h>

#include "manifoldnorm/dataset.hpp"
#include "manifoldnorm/error.hpp"
#include "manifoldnorm/grid.hpp"

namespace manifoldnorm {

inline constexpr std::uint16_t kTensorVersion = 1;

namespace io_detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw FormatError(what_ + ": truncated");
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    return v;
  }

  std::string_view take(std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError(what_ + ": truncated");
    const auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

inline void append_crc(std::string& out) { put<std::uint32_t>(out, crc32_of(out)); }

/// Splits off and verifies the trailing checksum; returns the body.
inline std::string_view verified_body(std::string_view bytes, const std::string& what) {
  if (bytes.size() < 4) throw FormatError(what + ": truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  Reader tail(bytes.substr(bytes.size() - 4), what);
  if (tail.get<std::uint32_t>() != crc32_of(body)) throw FormatError(what + ": checksum mismatch");
  return body;
}

inline void expect_magic(Reader& r, std::string_view magic, const std::string& what) {
  if (r.take(4) != magic) throw FormatError(what + ": bad magic, expected " + std::string(magic));
  const auto version = r.get<std::uint16_t>();
  if (version != kTensorVersion) {
    throw FormatError(what + ": unsupported version " + std::to_string(version));
  }
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw FormatError(std::string(what) + " exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace io_detail

inline std::string encode_grid(const FeatureGrid& grid) {
  using io_detail::put;
  std::string out;
  out.append("MNRM");
  put<std::uint16_t>(out, kTensorVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(grid.manifold().kind()));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(grid.manifold().n()));
  for (std::size_t d : grid.dims().as_array()) put<std::uint32_t>(out, io_detail::checked_u32(d, "grid dimension"));
  const Eigen::Index rows = grid.manifold().ambient_rows();
  const Eigen::Index cols = grid.manifold().ambient_cols();
  out.reserve(out.size() + grid.size() * static_cast<std::size_t>(rows * cols) * 8 + 4);
  for (const auto& cell : grid.cells())
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) put<double>(out, cell.data(i, j));
  io_detail::append_crc(out);
  return out;
}

/// Cells are checked against the manifold unless `validate` is false.
inline FeatureGrid decode_grid(std::string_view bytes, bool validate = true) {
  const std::string what = "grid";
  io_detail::Reader r(io_detail::verified_body(bytes, what), what);
  io_detail::expect_magic(r, "MNRM", what);
  const auto kind = r.get<std::uint8_t>();
  if (kind > static_cast<std::uint8_t>(ManifoldKind::SpecialOrthogonal)) {
    throw FormatError(what + ": unknown manifold kind " + std::to_string(kind));
  }
  const auto n = r.get<std::uint16_t>();
  const ManifoldId m(static_cast<ManifoldKind>(kind), n);
  GridDims dims;
  std::size_t* fields[5] = {&dims.d1, &dims.d2, &dims.d3, &dims.n, &dims.c};
  for (auto* f : fields) *f = r.get<std::uint32_t>();
  const auto per_cell = static_cast<std::size_t>(m.ambient_size());
  // reject dimension products that cannot match the payload before allocating
  long double expected = 8.0L * static_cast<long double>(per_cell);
  for (auto* f : fields) expected *= static_cast<long double>(*f);
  if (expected != static_cast<long double>(r.remaining())) {
    throw FormatError(what + ": payload size does not match dims " + dims.str());
  }
  std::vector<ManifoldPoint> cells;
  cells.reserve(dims.total());
  const Eigen::Index rows = m.ambient_rows();
  const Eigen::Index cols = m.ambient_cols();
  for (std::size_t k = 0; k < dims.total(); ++k) {
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = r.get<double>();
    ManifoldPoint p{m, std::move(a)};
    if (validate) check_point(p);
    cells.push_back(std::move(p));
  }
  return {m, dims, std::move(cells)};
}

inline std::string encode_dataset(const Dataset& d) {
  using io_detail::put;
  check_dataset(d);
  std::string out;
  out.append("MNRD");
  put<std::uint16_t>(out, kTensorVersion);
  put<std::uint32_t>(out, d.num_classes);
  put<std::uint32_t>(out, io_detail::checked_u32(d.size(), "sample count"));
  for (auto l : d.labels) put<std::uint32_t>(out, l);
  for (auto s : d.is_test) put<std::uint8_t>(out, s);
  const std::string grid = encode_grid(d.samples);
  put<std::uint32_t>(out, io_detail::checked_u32(grid.size(), "grid block"));
  out += grid;
  io_detail::append_crc(out);
  return out;
}

inline Dataset decode_dataset(std::string_view bytes) {
  const std::string what = "dataset";
  io_detail::Reader r(io_detail::verified_body(bytes, what), what);
  io_detail::expect_magic(r, "MNRD", what);
  Dataset d;
  d.num_classes = r.get<std::uint32_t>();
  const auto count = r.get<std::uint32_t>();
  if (static_cast<std::size_t>(count) * 5 > r.remaining()) throw FormatError(what + ": truncated");
  d.labels.resize(count);
  d.is_test.resize(count);
  for (auto& l : d.labels) l = r.get<std::uint32_t>();
  for (auto& s : d.is_test) s = r.get<std::uint8_t>();
  const auto grid_len = r.get<std::uint32_t>();
  if (grid_len != r.remaining()) throw FormatError(what + ": grid block length mismatch");
  d.samples = decode_grid(r.take(grid_len));
  check_dataset(d);
  return d;
}

inline void write_grid(const std::string& path, const FeatureGrid& grid) {
  io_detail::write_file(path, encode_grid(grid));
}
inline FeatureGrid read_grid(const std::string& path) { return decode_grid(io_detail::read_file(path)); }

inline void write_dataset(const std::string& path, const Dataset& d) {
  io_detail::write_file(path, encode_dataset(d));
}
inline Dataset read_dataset(const std::string& path) { return decode_dataset(io_detail::read_file(path)); }

}  // namespace manifoldnorm
