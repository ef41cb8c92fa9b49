#pragma once

// Image comparison, profiles and export.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "pact/core.hpp"

namespace pact {

/// Axis-aligned region in physical coordinates, bounds inclusive.
struct Box {
  Point lo{0, 0, 0};
  Point hi{0, 0, 0};

  bool contains(const Point& p, std::size_t dim) const {
    for (std::size_t a = 0; a < dim; ++a)
      if (p[a] < lo[a] || p[a] > hi[a]) return false;
    return true;
  }
};

/// sqrt(mean((a - b)^2)) / max|b| over `roi` (whole grid by default).
inline double nrmse(const ObjectField& a, const ObjectField& b, const std::optional<Box>& roi = std::nullopt) {
  a.validate();
  b.validate();
  detail::require(same_grid(a.grid, b.grid), "nrmse needs identical grids");
  double sum = 0, peak = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (roi && !roi->contains(a.grid.position(i), a.grid.dim())) continue;
    const double e = a.values[i] - b.values[i];
    sum += e * e;
    peak = std::max(peak, std::abs(b.values[i]));
    ++count;
  }
  detail::require(count > 0, "region of interest contains no samples");
  detail::require(peak > 0, "reference image is zero on the region of interest");
  return std::sqrt(sum / static_cast<double>(count)) / peak;
}

struct Profile {
  std::vector<double> coordinates;  // mm
  std::vector<double> values;
};

/// Line along `axis` through the centre index shape/2 of every other axis.
inline Profile central_profile(const ObjectField& img, std::size_t axis) {
  img.validate();
  detail::require(axis < img.grid.dim(), "profile axis out of range");
  const auto& g = img.grid;
  const auto st = g.strides();
  std::size_t base = 0;
  for (std::size_t a = 0; a < g.dim(); ++a)
    if (a != axis) base += (g.shape[a] / 2) * st[a];
  Profile p;
  for (std::size_t i = 0; i < g.shape[axis]; ++i) {
    p.coordinates.push_back(g.coordinate(axis, i));
    p.values.push_back(img.values[base + i * st[axis]]);
  }
  return p;
}

inline void write_profile_csv(const std::filesystem::path& path, const Profile& p) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.precision(17);
  out << "coordinate,value\n";
  for (std::size_t i = 0; i < p.values.size(); ++i) out << p.coordinates[i] << ',' << p.values[i] << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

/// Multilinear interpolation of `field` at the points of `grid`; zero outside.
inline ObjectField sample_onto(const ObjectField& field, const GridSpec& grid) {
  field.validate();
  grid.validate();
  detail::require(field.grid.dim() == grid.dim(), "dimension mismatch");
  const auto& g = field.grid;
  const std::size_t d = g.dim();
  const auto st = g.strides();
  ObjectField out = ObjectField::zeros(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point r = grid.position(i);
    std::array<std::size_t, 3> lo{};
    std::array<double, 3> f{};
    bool inside = true;
    for (std::size_t a = 0; a < d && inside; ++a) {
      const double x = (r[a] - g.origin[a]) / g.spacing[a];
      const double n1 = static_cast<double>(g.shape[a] - 1);
      if (x < -1e-9 || x > n1 + 1e-9) {
        inside = false;
        break;
      }
      const double xc = std::clamp(x, 0.0, n1);
      lo[a] = std::min(static_cast<std::size_t>(xc), g.shape[a] > 1 ? g.shape[a] - 2 : 0);
      f[a] = g.shape[a] > 1 ? xc - static_cast<double>(lo[a]) : 0.0;
    }
    if (!inside) continue;
    double v = 0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
      double w = 1;
      std::size_t j = 0;
      for (std::size_t a = 0; a < d; ++a) {
        const bool up = (corner >> a) & 1u;
        w *= up ? f[a] : 1 - f[a];
        j += (lo[a] + (up && g.shape[a] > 1 ? 1 : 0)) * st[a];
      }
      if (w != 0) v += w * field.values[j];
    }
    out.values[i] = v;
  }
  return out;
}

/// Position of the largest sample.
inline Point argmax_position(const ObjectField& img) {
  img.validate();
  const auto it = std::max_element(img.values.begin(), img.values.end());
  return img.grid.position(static_cast<std::size_t>(it - img.values.begin()));
}

/// Value-weighted centroid of the samples at or above half the maximum.
/// Stable against the flat tops and ringing that move the argmax around.
inline Point half_max_centroid(const ObjectField& img) {
  img.validate();
  const double peak = *std::max_element(img.values.begin(), img.values.end());
  Point c{0, 0, 0};
  double mass = 0;
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    const double v = img.values[i];
    if (v < 0.5 * peak) continue;
    const Point r = img.grid.position(i);
    for (std::size_t a = 0; a < 3; ++a) c[a] += v * r[a];
    mass += v;
  }
  for (auto& x : c) x /= mass;
  return c;
}

/// 16-bit binary PGM of a 2D image; [lo, hi] maps to [0, 65535], clipped.
/// Columns follow axis 0, rows follow axis 1 with the largest coordinate on top.
inline void write_pgm(const std::filesystem::path& path, const ObjectField& img, double lo, double hi) {
  img.validate();
  detail::require(img.grid.dim() == 2, "PGM export needs a 2D image");
  detail::require(hi > lo, "greyscale window must have hi > lo");
  const std::size_t w = img.grid.shape[0], h = img.grid.shape[1];
  std::string bytes = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
  const std::size_t header = bytes.size();
  bytes.resize(header + 2 * w * h);
  for (std::size_t row = 0; row < h; ++row) {
    const std::size_t y = h - 1 - row;
    for (std::size_t x = 0; x < w; ++x) {
      const double v = (img.values[x * h + y] - lo) / (hi - lo);
      const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
      const std::size_t at = header + 2 * (row * w + x);
      bytes[at] = static_cast<char>(q >> 8);
      bytes[at + 1] = static_cast<char>(q & 0xff);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace pact
