#pragma once

// Domain types shared by every stage of the pipeline.
//
// Units are fixed throughout: lengths in mm, times in us, temporal
// frequencies in rad/us and spatial frequencies in rad/mm. All sample
// arrays are float64 and row-major with the last axis fastest.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace pact {

using Complex = std::complex<double>;
using Point = std::array<double, 3>;
using Json = nlohmann::json;

inline constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Errors

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A payload or parameter violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation was asked to work in a dimension it does not support.
class UnsupportedDimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Reading or writing a file failed at the OS level.
class IoError : public Error {
 public:
  IoError(std::string path, const std::string& what)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class FileNotFoundError : public IoError {
 public:
  explicit FileNotFoundError(std::string path)
      : IoError(std::move(path), "file not found") {}
};

enum class FormatErrorKind { BadMagic, BadVersion, Truncated, SizeMismatch, BadMetadata };

inline const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::BadMagic: return "bad magic";
    case FormatErrorKind::BadVersion: return "unsupported version";
    case FormatErrorKind::Truncated: return "truncated file";
    case FormatErrorKind::SizeMismatch: return "metadata/payload size mismatch";
    case FormatErrorKind::BadMetadata: return "malformed metadata";
  }
  return "format error";
}

/// A container file is structurally invalid.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& path, const std::string& detail = {})
      : Error(std::string(to_string(kind)) + (detail.empty() ? "" : " (" + detail + ")") + ": " + path),
        kind_(kind) {}
  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Point& a) { return std::sqrt(dot(a, a)); }
inline Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Grids

/// Uniform Cartesian sampling of a 2D or 3D box.
///
/// Sample `i` along axis `a` sits at `origin[a] + i * spacing[a]`. The same
/// type describes k-space grids, where spacing is in rad/mm and the origin is
/// the most negative frequency.
struct GridSpec {
  std::vector<std::size_t> shape;
  std::vector<double> spacing;
  std::vector<double> origin;

  std::size_t dim() const noexcept { return shape.size(); }

  std::size_t size() const noexcept {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
  }

  double coordinate(std::size_t axis, std::size_t index) const {
    return origin[axis] + static_cast<double>(index) * spacing[axis];
  }

  /// Strides for row-major indexing, last axis fastest.
  std::array<std::size_t, 3> strides() const {
    std::array<std::size_t, 3> s{0, 0, 0};
    std::size_t acc = 1;
    for (std::size_t a = dim(); a-- > 0;) {
      s[a] = acc;
      acc *= shape[a];
    }
    return s;
  }

  /// Multi-index of a flat row-major offset (unused axes are zero).
  std::array<std::size_t, 3> unravel(std::size_t flat) const {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (std::size_t a = dim(); a-- > 0;) {
      idx[a] = flat % shape[a];
      flat /= shape[a];
    }
    return idx;
  }

  Point position(std::size_t flat) const {
    const auto idx = unravel(flat);
    Point p{0, 0, 0};
    for (std::size_t a = 0; a < dim(); ++a) p[a] = coordinate(a, idx[a]);
    return p;
  }

  void validate() const {
    detail::require(dim() == 2 || dim() == 3, "grid dimension must be 2 or 3");
    detail::require(spacing.size() == dim() && origin.size() == dim(),
                    "grid shape, spacing and origin must have equal length");
    for (std::size_t a = 0; a < dim(); ++a) {
      detail::require(shape[a] >= 1, "grid sample counts must be >= 1");
      detail::require(std::isfinite(spacing[a]) && spacing[a] > 0, "grid spacing must be > 0");
      detail::require(std::isfinite(origin[a]), "grid origin must be finite");
    }
  }

  /// `n` samples per axis with spacing `dx`; index n/2 sits at the origin of space.
  static GridSpec centered(std::size_t dim, std::size_t n, double dx) {
    GridSpec g;
    g.shape.assign(dim, n);
    g.spacing.assign(dim, dx);
    g.origin.assign(dim, -static_cast<double>(n / 2) * dx);
    g.validate();
    return g;
  }

  bool operator==(const GridSpec&) const = default;
};

/// Grids match when shapes agree and spacing/origin agree to `tol` relative.
inline bool same_grid(const GridSpec& a, const GridSpec& b, double tol = 1e-9) {
  if (a.shape != b.shape) return false;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double scale = std::max(a.spacing[i], b.spacing[i]);
    if (std::abs(a.spacing[i] - b.spacing[i]) > tol * scale) return false;
    if (std::abs(a.origin[i] - b.origin[i]) > tol * scale) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Payloads

/// Absorbed optical energy density A(r) sampled on a grid.
struct ObjectField {
  GridSpec grid;
  std::vector<double> values;
  Json attributes = Json::object();

  void validate() const {
    grid.validate();
    detail::require(values.size() == grid.size(), "object value count must equal grid size");
    detail::require(detail::all_finite(values), "object values must be finite");
  }

  static ObjectField zeros(GridSpec grid) {
    ObjectField f;
    f.values.assign(grid.size(), 0.0);
    f.grid = std::move(grid);
    return f;
  }
};

/// Complex spatial spectrum on a centered k-grid (DC at index shape/2).
struct Spectrum {
  GridSpec grid;
  std::vector<Complex> values;
  Json attributes = Json::object();

  void validate() const {
    grid.validate();
    detail::require(values.size() == grid.size(), "spectrum value count must equal grid size");
    for (const auto& v : values)
      detail::require(std::isfinite(v.real()) && std::isfinite(v.imag()), "spectrum values must be finite");
  }

  /// Index of the zero-frequency sample along each axis.
  std::array<std::size_t, 3> dc_index() const {
    std::array<std::size_t, 3> idx{0, 0, 0};
    for (std::size_t a = 0; a < grid.dim(); ++a) idx[a] = grid.shape[a] / 2;
    return idx;
  }
};

/// Point-like transducers on a circle (2D) or sphere (3D) centred at the origin.
struct SensorGeometry {
  std::size_t dim = 2;
  double radius = 0;
  std::vector<Point> positions;
  std::vector<double> weights;  // mm in 2D, mm^2 in 3D

  std::size_t count() const noexcept { return positions.size(); }

  /// Measure of the full surface: 2 pi R or 4 pi R^2.
  double surface_measure() const {
    return dim == 2 ? 2 * kPi * radius : 4 * kPi * radius * radius;
  }

  /// Mean distance between neighbouring sensors.
  double mean_spacing() const {
    const double n = static_cast<double>(count());
    return dim == 2 ? 2 * kPi * radius / n : std::sqrt(4 * kPi / n) * radius;
  }

  /// Highest spatial frequency resolved by the sensor sampling, pi / spacing.
  double sampling_limit() const { return kPi / mean_spacing(); }

  void validate() const {
    detail::require(dim == 2 || dim == 3, "geometry dimension must be 2 or 3");
    detail::require(std::isfinite(radius) && radius > 0, "sensor radius must be > 0");
    detail::require(!positions.empty(), "geometry needs at least one sensor");
    detail::require(weights.size() == positions.size(), "one quadrature weight per sensor");
    double sum = 0;
    for (std::size_t s = 0; s < count(); ++s) {
      const auto& p = positions[s];
      detail::require(std::isfinite(p[0]) && std::isfinite(p[1]) && std::isfinite(p[2]),
                      "sensor positions must be finite");
      detail::require(dim == 3 || p[2] == 0.0, "2D sensors must have zero z coordinate");
      detail::require(std::abs(detail::norm(p) - radius) <= 1e-9 * radius,
                      "sensor " + std::to_string(s) + " is not on the measurement surface");
      detail::require(weights[s] > 0, "quadrature weights must be > 0");
      sum += weights[s];
    }
    detail::require(std::abs(sum - surface_measure()) <= 1e-9 * surface_measure(),
                    "quadrature weights must sum to the surface measure");
  }

  /// `n` sensors at equal angular steps starting on the +x axis.
  static SensorGeometry circle(std::size_t n, double radius) {
    detail::require(n >= 1, "need at least one sensor");
    SensorGeometry g;
    g.dim = 2;
    g.radius = radius;
    g.positions.resize(n);
    g.weights.assign(n, 2 * kPi * radius / static_cast<double>(n));
    for (std::size_t s = 0; s < n; ++s) {
      const double phi = 2 * kPi * static_cast<double>(s) / static_cast<double>(n);
      g.positions[s] = {radius * std::cos(phi), radius * std::sin(phi), 0.0};
    }
    g.validate();
    return g;
  }

  /// `n` sensors on a Fibonacci lattice with equal area weights.
  static SensorGeometry fibonacci(std::size_t n, double radius) {
    detail::require(n >= 1, "need at least one sensor");
    SensorGeometry g;
    g.dim = 3;
    g.radius = radius;
    g.positions.resize(n);
    g.weights.assign(n, 4 * kPi * radius * radius / static_cast<double>(n));
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    for (std::size_t s = 0; s < n; ++s) {
      const double z = 1.0 - 2.0 * (static_cast<double>(s) + 0.5) / static_cast<double>(n);
      const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double theta = golden_angle * static_cast<double>(s);
      Point u{rxy * std::cos(theta), rxy * std::sin(theta), z};
      const double len = detail::norm(u);
      g.positions[s] = {radius * u[0] / len, radius * u[1] / len, radius * u[2] / len};
    }
    g.validate();
    return g;
  }
};

/// Pressure traces p(r_s, t_j), one row of `nt` samples per sensor, t_0 = 0.
struct PressureSeries {
  SensorGeometry geometry;
  double dt = 0;
  std::size_t nt = 0;
  std::vector<double> samples;
  Json attributes = Json::object();

  std::span<const double> row(std::size_t s) const { return {samples.data() + s * nt, nt}; }
  std::span<double> row(std::size_t s) { return {samples.data() + s * nt, nt}; }

  void validate() const {
    geometry.validate();
    detail::require(std::isfinite(dt) && dt > 0, "time step must be > 0");
    detail::require(nt >= 1, "need at least one time sample");
    detail::require(samples.size() == geometry.count() * nt, "sample rows must equal sensor count");
    detail::require(detail::all_finite(samples), "pressure samples must be finite");
  }

  static PressureSeries zeros(SensorGeometry geometry, double dt, std::size_t nt) {
    PressureSeries p;
    p.samples.assign(geometry.count() * nt, 0.0);
    p.geometry = std::move(geometry);
    p.dt = dt;
    p.nt = nt;
    return p;
  }
};

/// Medium constants: speed of sound (mm/us) and the Grueneisen-like ratio beta / C_p.
struct AcousticConstants {
  double c = 1.5;
  double beta_over_cp = 1000.0;
  std::optional<double> beta;
  std::optional<double> cp;

  /// beta c^2 / C_p, the factor mapping A(r) to initial pressure.
  double pressure_scale() const { return beta_over_cp * c * c; }

  void validate() const {
    detail::require(std::isfinite(c) && c > 0, "speed of sound must be > 0");
    detail::require(std::isfinite(beta_over_cp) && beta_over_cp > 0, "beta/Cp must be > 0");
    if (beta && cp) {
      detail::require(*cp > 0, "Cp must be > 0");
      detail::require(std::abs(*beta / *cp - beta_over_cp) <= 1e-12 * beta_over_cp,
                      "beta/Cp does not match the individual values");
    }
  }

  static AcousticConstants from_parts(double c, double beta, double cp) {
    detail::require(cp > 0, "Cp must be > 0");
    AcousticConstants k{c, beta / cp, beta, cp};
    k.validate();
    return k;
  }
};

enum class Interpolation { Nearest, Linear };

inline const char* to_string(Interpolation mode) {
  return mode == Interpolation::Nearest ? "nearest" : "linear";
}

inline Interpolation parse_interpolation(const std::string& name) {
  if (name == "nearest") return Interpolation::Nearest;
  if (name == "linear") return Interpolation::Linear;
  throw ValidationError("unknown interpolation mode '" + name + "'");
}

/// Settings of the Fourier reconstruction.
struct ReconParams {
  GridSpec grid;                 // output image grid
  std::size_t oversampling = 2;  // k-grid shape = oversampling * grid shape
  std::size_t pad_factor = 8;    // temporal zero padding of t p(t)
  Interpolation interpolation = Interpolation::Nearest;
  // Band-limit policy is fixed: frequencies beyond the temporal Nyquist rate are zeroed.

  void validate() const {
    grid.validate();
    detail::require(oversampling >= 1, "k-grid oversampling must be >= 1");
    detail::require(pad_factor >= 1, "zero-pad factor must be >= 1");
  }
};

}  // namespace pact
