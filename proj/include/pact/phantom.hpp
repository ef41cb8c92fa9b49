#pragma once

// Numerical phantoms: blurred uniform disks (balls in 3D) and analytic
// Gaussians with closed-form spectra.

#include <cmath>
#include <vector>

#include "pact/core.hpp"
#include "pact/fft.hpp"

namespace pact {

struct Disk {
  Point center{0, 0, 0};  // mm
  double radius = 1.0;    // mm
  double amplitude = 1.0;
};

struct DiskPhantomSpec {
  std::vector<Disk> disks;
  double fwhm = 0.3;  // Gaussian blur, mm; 0 disables blurring
  GridSpec grid;
  // Sub-samples per axis used for the inclusion test; 1 samples pixel centres only.
  std::size_t supersample = 1;

  void validate() const {
    grid.validate();
    detail::require(std::isfinite(fwhm) && fwhm >= 0, "blur FWHM must be >= 0");
    detail::require(supersample >= 1, "supersample must be >= 1");
    for (const auto& d : disks) {
      detail::require(std::isfinite(d.radius) && d.radius > 0, "disk radius must be > 0");
      detail::require(std::isfinite(d.amplitude), "disk amplitude must be finite");
      for (std::size_t a = 0; a < grid.dim(); ++a) {
        const double lo = grid.origin[a];
        const double hi = grid.coordinate(a, grid.shape[a] - 1);
        detail::require(d.center[a] - d.radius >= lo && d.center[a] + d.radius <= hi,
                        "disk extends outside the render grid");
      }
      for (std::size_t a = grid.dim(); a < 3; ++a)
        detail::require(d.center[a] == 0.0, "disk centre has a coordinate beyond the grid dimension");
    }
  }
};

struct GaussianPhantomSpec {
  Point center{0, 0, 0};  // mm
  double sigma = 0.5;     // mm
  double amplitude = 1.0;
  std::size_t dim = 2;

  void validate() const {
    detail::require(dim == 2 || dim == 3, "Gaussian dimension must be 2 or 3");
    detail::require(std::isfinite(sigma) && sigma > 0, "Gaussian sigma must be > 0");
    detail::require(std::isfinite(amplitude), "Gaussian amplitude must be finite");
  }

  /// Closed-form integral A0 (2 pi sigma^2)^(d/2).
  double integral() const {
    return amplitude * std::pow(2 * kPi * sigma * sigma, 0.5 * static_cast<double>(dim));
  }
};

inline double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

/// Multiply a real field by exp(-sigma^2 |k|^2 / 2) in k-space.
/// The field is zero padded by 5 sigma per side so the circular convolution does not wrap.
inline void gaussian_blur(ObjectField& field, double sigma) {
  if (sigma <= 0) return;
  const GridSpec& g = field.grid;
  const std::size_t d = g.dim();
  std::vector<std::size_t> padded(d);
  std::vector<std::size_t> offset(d);
  for (std::size_t a = 0; a < d; ++a) {
    const auto margin = static_cast<std::size_t>(std::ceil(5.0 * sigma / g.spacing[a]));
    offset[a] = margin;
    padded[a] = g.shape[a] + 2 * margin;
  }
  GridSpec pg{padded, g.spacing, g.origin};
  std::vector<Complex> buf(pg.size(), Complex{0, 0});
  const auto ps = pg.strides();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unravel(i);
    std::size_t j = 0;
    for (std::size_t a = 0; a < d; ++a) j += (idx[a] + offset[a]) * ps[a];
    buf[j] = field.values[i];
  }
  fft::forward_inplace(buf, pg.shape);
  const double norm = 1.0 / static_cast<double>(pg.size());
  for (std::size_t j = 0; j < buf.size(); ++j) {
    const auto idx = pg.unravel(j);
    double k2 = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const double k = 2 * kPi * static_cast<double>(fft::signed_bin(idx[a], padded[a])) /
                       (static_cast<double>(padded[a]) * g.spacing[a]);
      k2 += k * k;
    }
    buf[j] *= std::exp(-0.5 * sigma * sigma * k2) * norm;
  }
  fft::backward_inplace(buf, pg.shape);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = g.unravel(i);
    std::size_t j = 0;
    for (std::size_t a = 0; a < d; ++a) j += (idx[a] + offset[a]) * ps[a];
    field.values[i] = buf[j].real();
  }
}

/// Sum of uniform disks sampled on the grid, then blurred by a Gaussian of the given FWHM.
inline ObjectField make_disk_phantom(const DiskPhantomSpec& spec) {
  spec.validate();
  ObjectField out = ObjectField::zeros(spec.grid);
  const GridSpec& g = spec.grid;
  const std::size_t d = g.dim();
  const std::size_t ss = spec.supersample;
  const std::size_t sub_count = d == 2 ? ss * ss : ss * ss * ss;
  std::vector<Point> offsets;
  offsets.reserve(sub_count);
  for (std::size_t n = 0; n < sub_count; ++n) {
    Point o{0, 0, 0};
    std::size_t rem = n;
    for (std::size_t a = 0; a < d; ++a) {
      o[a] = ((static_cast<double>(rem % ss) + 0.5) / static_cast<double>(ss) - 0.5) * g.spacing[a];
      rem /= ss;
    }
    offsets.push_back(o);
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point r = g.position(i);
    double v = 0;
    for (const auto& disk : spec.disks) {
      std::size_t inside = 0;
      for (const auto& o : offsets) {
        double r2 = 0;
        for (std::size_t a = 0; a < d; ++a) {
          const double dr = r[a] + o[a] - disk.center[a];
          r2 += dr * dr;
        }
        if (r2 <= disk.radius * disk.radius) ++inside;
      }
      v += disk.amplitude * static_cast<double>(inside) / static_cast<double>(sub_count);
    }
    out.values[i] = v;
  }
  gaussian_blur(out, fwhm_to_sigma(spec.fwhm));
  out.attributes["phantom"] = "disks";
  out.attributes["fwhm_mm"] = spec.fwhm;
  return out;
}

/// A0 exp(-|r - r0|^2 / (2 sigma^2)). The grid must cover r0 +- 4 sigma on every axis.
inline ObjectField make_gaussian_phantom(const GaussianPhantomSpec& spec, const GridSpec& grid) {
  spec.validate();
  grid.validate();
  detail::require(grid.dim() == spec.dim, "Gaussian and grid dimensions differ");
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const double lo = grid.origin[a];
    const double hi = grid.coordinate(a, grid.shape[a] - 1);
    const double tol = 1e-9 * grid.spacing[a];
    detail::require(spec.center[a] - 4 * spec.sigma >= lo - tol && spec.center[a] + 4 * spec.sigma <= hi + tol,
                    "grid clips the Gaussian support (needs r0 +- 4 sigma)");
  }
  ObjectField out = ObjectField::zeros(grid);
  const double inv = 1.0 / (2 * spec.sigma * spec.sigma);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point r = grid.position(i);
    double r2 = 0;
    for (std::size_t a = 0; a < grid.dim(); ++a) r2 += (r[a] - spec.center[a]) * (r[a] - spec.center[a]);
    out.values[i] = spec.amplitude * std::exp(-r2 * inv);
  }
  out.attributes["phantom"] = "gaussian";
  out.attributes["sigma_mm"] = spec.sigma;
  return out;
}

/// Exact continuous transform int A(r) exp(-i k.r) dr of the Gaussian phantom.
inline Complex gaussian_spectrum(const GaussianPhantomSpec& spec, const Point& k) {
  double k2 = 0;
  double phase = 0;
  for (std::size_t a = 0; a < spec.dim; ++a) {
    k2 += k[a] * k[a];
    phase += k[a] * spec.center[a];
  }
  const double mag = spec.integral() * std::exp(-0.5 * spec.sigma * spec.sigma * k2);
  return std::polar(mag, -phase);
}

/// Exact transform of a uniform ball (3D) or disk (2D) of radius a and amplitude A0.
inline Complex disk_spectrum(const Disk& disk, std::size_t dim, const Point& k) {
  double k2 = 0;
  double phase = 0;
  for (std::size_t a = 0; a < dim; ++a) {
    k2 += k[a] * k[a];
    phase += k[a] * disk.center[a];
  }
  const double km = std::sqrt(k2);
  const double a = disk.radius;
  const double x = km * a;
  double mag;
  if (dim == 2) {
    mag = x < 1e-8 ? kPi * a * a : 2 * kPi * a * a * ::j1(x) / x;
  } else {
    mag = x < 1e-4 ? 4.0 / 3.0 * kPi * a * a * a * (1 - x * x / 10)
                   : 4 * kPi * (std::sin(x) - x * std::cos(x)) / (km * km * km);
  }
  return std::polar(disk.amplitude * mag, -phase);
}

/// Default 2D phantom: five blurred disks of varied size inside a 10 mm field,
/// rendered at 0.025 mm pitch. Three disks sit on the central row (y = 0).
inline DiskPhantomSpec default_disk_phantom() {
  DiskPhantomSpec spec;
  spec.disks = {
      {{0.0, 0.0, 0.0}, 1.5, 1.0},
      {{-3.2, 0.0, 0.0}, 0.9, 0.7},
      {{3.1, 0.4, 0.0}, 0.6, 0.9},
      {{0.5, 3.2, 0.0}, 1.0, 0.5},
      {{-1.2, -3.3, 0.0}, 0.7, 0.8},
  };
  spec.fwhm = 0.3;
  spec.grid = GridSpec{{400, 400}, {0.025, 0.025}, {-5.0, -5.0}};
  return spec;
}

// JSON schema for phantom specification files (see docs/phantom.md).

inline Json to_json(const DiskPhantomSpec& s) {
  Json disks = Json::array();
  for (const auto& d : s.disks) {
    std::vector<double> c(d.center.begin(), d.center.begin() + static_cast<long>(s.grid.dim()));
    disks.push_back({{"center", c}, {"radius", d.radius}, {"amplitude", d.amplitude}});
  }
  return Json{{"type", "disks"},
              {"disks", disks},
              {"fwhm", s.fwhm},
              {"supersample", s.supersample},
              {"grid", {{"shape", s.grid.shape}, {"spacing", s.grid.spacing}, {"origin", s.grid.origin}}}};
}

struct PhantomFile {
  enum class Kind { Disks, Gaussian } kind = Kind::Disks;
  DiskPhantomSpec disks;
  GaussianPhantomSpec gaussian;
  GridSpec grid;
};

inline PhantomFile phantom_from_json(const Json& j) {
  try {
    PhantomFile f;
    const Json& jg = j.at("grid");
    f.grid = GridSpec{jg.at("shape").get<std::vector<std::size_t>>(), jg.at("spacing").get<std::vector<double>>(),
                      jg.at("origin").get<std::vector<double>>()};
    f.grid.validate();
    auto point = [&](const Json& v) {
      const auto c = v.get<std::vector<double>>();
      detail::require(c.size() == f.grid.dim(), "centre dimension does not match the grid");
      return Point{c[0], c[1], c.size() == 3 ? c[2] : 0.0};
    };
    const std::string type = j.value("type", "disks");
    if (type == "disks") {
      f.kind = PhantomFile::Kind::Disks;
      f.disks.grid = f.grid;
      f.disks.fwhm = j.value("fwhm", 0.3);
      f.disks.supersample = j.value("supersample", std::size_t{1});
      for (const auto& d : j.at("disks"))
        f.disks.disks.push_back({point(d.at("center")), d.at("radius").get<double>(), d.value("amplitude", 1.0)});
      f.disks.validate();
    } else if (type == "gaussian") {
      f.kind = PhantomFile::Kind::Gaussian;
      f.gaussian.center = point(j.at("center"));
      f.gaussian.sigma = j.at("sigma").get<double>();
      f.gaussian.amplitude = j.value("amplitude", 1.0);
      f.gaussian.dim = f.grid.dim();
      f.gaussian.validate();
    } else {
      throw ValidationError("unknown phantom type '" + type + "'");
    }
    return f;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed phantom spec: ") + e.what());
  }
}

inline ObjectField make_phantom(const PhantomFile& f) {
  return f.kind == PhantomFile::Kind::Disks ? make_disk_phantom(f.disks) : make_gaussian_phantom(f.gaussian, f.grid);
}

}  // namespace pact
