#pragma once

// The "PACT" container: a small self-describing binary file.
//
//   offset 0   4 bytes   magic "PACT"
//   offset 4   1 byte    format version (1)
//   offset 5   8 bytes   metadata length L, unsigned little-endian
//   offset 13  L bytes   UTF-8 JSON metadata
//   offset 13+L          raw little-endian IEEE-754 float64 samples
//                        (complex values interleaved re, im)
//
// See docs/container.md for the metadata schema.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>

#include "pact/core.hpp"

namespace pact {

using Payload = std::variant<ObjectField, Spectrum, PressureSeries>;

inline constexpr char kContainerMagic[4] = {'P', 'A', 'C', 'T'};
inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kContainerPreamble = 4 + 1 + 8;

namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

inline void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void put_f64_le(std::string& out, double x) {
  put_u64_le(out, std::bit_cast<std::uint64_t>(x));
}

inline double get_f64_le(const unsigned char* p) { return std::bit_cast<double>(get_u64_le(p)); }

inline Json grid_json(const GridSpec& g) {
  return Json{{"dim", g.dim()}, {"shape", g.shape}, {"spacing", g.spacing}, {"origin", g.origin}};
}

inline GridSpec grid_from_json(const Json& j) {
  GridSpec g;
  g.shape = j.at("shape").get<std::vector<std::size_t>>();
  g.spacing = j.at("spacing").get<std::vector<double>>();
  g.origin = j.at("origin").get<std::vector<double>>();
  return g;
}

inline Json geometry_json(const SensorGeometry& g) {
  Json pos = Json::array();
  for (const auto& p : g.positions) {
    if (g.dim == 2)
      pos.push_back({p[0], p[1]});
    else
      pos.push_back({p[0], p[1], p[2]});
  }
  return Json{{"dim", g.dim}, {"radius", g.radius}, {"positions", pos}, {"weights", g.weights}};
}

inline SensorGeometry geometry_from_json(const Json& j) {
  SensorGeometry g;
  g.dim = j.at("dim").get<std::size_t>();
  g.radius = j.at("radius").get<double>();
  for (const auto& p : j.at("positions")) {
    auto v = p.get<std::vector<double>>();
    if (v.size() != g.dim) throw ValidationError("sensor position has wrong dimension");
    g.positions.push_back({v[0], v[1], g.dim == 3 ? v[2] : 0.0});
  }
  g.weights = j.at("weights").get<std::vector<double>>();
  return g;
}

}  // namespace detail

/// Metadata document and flattened float64 payload for one container.
struct ContainerParts {
  Json metadata;
  std::vector<double> data;
};

inline ContainerParts to_parts(const ObjectField& f) {
  f.validate();
  Json m = detail::grid_json(f.grid);
  m["kind"] = "object";
  m["dtype"] = "float64";
  m["units"] = {{"space", "mm"}, {"value", "arbitrary absorbed energy density"}};
  m["attributes"] = f.attributes;
  return {std::move(m), f.values};
}

inline ContainerParts to_parts(const Spectrum& s) {
  s.validate();
  Json m = detail::grid_json(s.grid);
  m["kind"] = "spectrum";
  m["dtype"] = "complex128";
  const auto dc = s.dc_index();
  m["dc_index"] = std::vector<std::size_t>(dc.begin(), dc.begin() + static_cast<long>(s.grid.dim()));
  m["units"] = {{"space", "rad/mm"}, {"value", "arbitrary * mm^d"}};
  m["attributes"] = s.attributes;
  std::vector<double> data;
  data.reserve(2 * s.values.size());
  for (const auto& v : s.values) {
    data.push_back(v.real());
    data.push_back(v.imag());
  }
  return {std::move(m), std::move(data)};
}

inline ContainerParts to_parts(const PressureSeries& p) {
  p.validate();
  Json m;
  m["kind"] = "pressure";
  m["dtype"] = "float64";
  m["dim"] = p.geometry.dim;
  m["shape"] = {p.geometry.count(), p.nt};
  m["dt"] = p.dt;
  m["nt"] = p.nt;
  m["geometry"] = detail::geometry_json(p.geometry);
  m["units"] = {{"space", "mm"}, {"time", "us"}, {"value", "arbitrary pressure"}};
  m["attributes"] = p.attributes;
  return {std::move(m), p.samples};
}

/// Serialize a payload into the container byte layout.
inline std::string encode_container(const Payload& payload) {
  const ContainerParts parts = std::visit([](const auto& x) { return to_parts(x); }, payload);
  const std::string meta = parts.metadata.dump();
  std::string out;
  out.reserve(kContainerPreamble + meta.size() + 8 * parts.data.size());
  out.append(kContainerMagic, 4);
  out.push_back(static_cast<char>(kContainerVersion));
  detail::put_u64_le(out, meta.size());
  out += meta;
  for (double x : parts.data) detail::put_f64_le(out, x);
  return out;
}

/// Validate `payload` and write it to `path`. Nothing is written if validation fails.
inline void write_container(const std::filesystem::path& path, const Payload& payload) {
  const std::string bytes = encode_container(payload);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path.string(), "cannot open for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  os.flush();
  if (!os) throw IoError(path.string(), "write failed");
}

/// Parse container bytes. `path` is only used in error messages.
inline Payload decode_container(const std::string& bytes, const std::string& path = "<memory>") {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0) {
    if (bytes.size() < 4 && std::string(kContainerMagic, bytes.size()) == bytes)
      throw FormatError(FormatErrorKind::Truncated, path, "preamble");
    throw FormatError(FormatErrorKind::BadMagic, path);
  }
  if (bytes.size() < kContainerPreamble) throw FormatError(FormatErrorKind::Truncated, path, "preamble");
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  if (raw[4] != kContainerVersion)
    throw FormatError(FormatErrorKind::BadVersion, path, "version " + std::to_string(raw[4]));
  const std::uint64_t meta_len = detail::get_u64_le(raw + 5);
  if (meta_len > bytes.size() - kContainerPreamble)
    throw FormatError(FormatErrorKind::Truncated, path, "metadata");

  Json m;
  try {
    m = Json::parse(bytes.begin() + kContainerPreamble,
                    bytes.begin() + static_cast<long>(kContainerPreamble + meta_len));
  } catch (const Json::exception& e) {
    throw FormatError(FormatErrorKind::BadMetadata, path, e.what());
  }

  const std::size_t data_offset = kContainerPreamble + meta_len;
  const std::size_t data_bytes = bytes.size() - data_offset;
  auto read_doubles = [&](std::size_t count) {
    if (data_bytes < 8 * count)
      throw FormatError(FormatErrorKind::Truncated, path,
                        "expected " + std::to_string(8 * count) + " data bytes, found " + std::to_string(data_bytes));
    if (data_bytes != 8 * count)
      throw FormatError(FormatErrorKind::SizeMismatch, path,
                        "expected " + std::to_string(8 * count) + " data bytes, found " + std::to_string(data_bytes));
    std::vector<double> v(count);
    for (std::size_t i = 0; i < count; ++i) v[i] = detail::get_f64_le(raw + data_offset + 8 * i);
    return v;
  };

  try {
    const std::string kind = m.at("kind").get<std::string>();
    const Json attributes = m.value("attributes", Json::object());
    if (kind == "object") {
      ObjectField f;
      f.grid = detail::grid_from_json(m);
      f.grid.validate();
      f.values = read_doubles(f.grid.size());
      f.attributes = attributes;
      f.validate();
      return f;
    }
    if (kind == "spectrum") {
      Spectrum s;
      s.grid = detail::grid_from_json(m);
      s.grid.validate();
      const auto flat = read_doubles(2 * s.grid.size());
      s.values.resize(s.grid.size());
      for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = {flat[2 * i], flat[2 * i + 1]};
      s.attributes = attributes;
      s.validate();
      return s;
    }
    if (kind == "pressure") {
      PressureSeries p;
      p.geometry = detail::geometry_from_json(m.at("geometry"));
      p.dt = m.at("dt").get<double>();
      p.nt = m.at("nt").get<std::size_t>();
      p.geometry.validate();
      p.samples = read_doubles(p.geometry.count() * p.nt);
      p.attributes = attributes;
      p.validate();
      return p;
    }
    throw FormatError(FormatErrorKind::BadMetadata, path, "unknown kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw FormatError(FormatErrorKind::BadMetadata, path, e.what());
  }
}

inline Payload read_container(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) throw FileNotFoundError(path.string());
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path.string(), "cannot open for reading");
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (is.bad()) throw IoError(path.string(), "read failed");
  return decode_container(bytes, path.string());
}

/// Read a container and require a specific payload kind.
template <typename T>
T read_as(const std::filesystem::path& path) {
  Payload p = read_container(path);
  if (auto* x = std::get_if<T>(&p)) return std::move(*x);
  throw ValidationError("container " + path.string() + " holds a different payload kind");
}

}  // namespace pact
