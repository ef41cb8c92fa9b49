#pragma once

// Shared fixtures and independent oracles for the test programs.

#include <chrono>
#include <cmath>
#include <complex>
#include <vector>

#include "pact/pact.hpp"

namespace pact::testing {

// Simulation-study configuration: 256 sensors on a 12.8 mm circle, 30 MHz, 2048 samples.
inline SensorGeometry study_ring() { return SensorGeometry::circle(256, 12.8); }
inline TimeAxis study_time() { return TimeAxis{1.0 / 30.0, 2048}; }

inline ReconParams study_recon() {
  ReconParams p;
  p.grid = GridSpec::centered(2, 256, 0.1);
  p.oversampling = 2;
  p.pad_factor = 8;
  p.interpolation = Interpolation::Nearest;
  return p;
}

/// Square grid of n^d points with step dx centred on `centre`.
inline GridSpec grid_around(const Point& centre, std::size_t dim, std::size_t n, double dx) {
  GridSpec g;
  g.shape.assign(dim, n);
  g.spacing.assign(dim, dx);
  for (std::size_t a = 0; a < dim; ++a) g.origin.push_back(centre[a] - 0.5 * static_cast<double>(n - 1) * dx);
  g.validate();
  return g;
}

/// Highest |k| at which the accumulated spectrum is expected to be reliable.
inline double reliable_band(const PressureSeries& data, const ReconParams& p, const AcousticConstants& c) {
  const double temporal = kPi / data.dt / c.c;
  const double grid = kPi / *std::max_element(p.grid.spacing.begin(), p.grid.spacing.end());
  return 0.8 * std::min({temporal, grid, data.geometry.sampling_limit()});
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Wavepacket exp(-|r - c|^2 / (2 s^2)) exp(i k0.r) and its transform.
struct Wavepacket {
  Point centre;
  double width;
  Point k0;
  std::size_t dim;

  Complex at(const Point& r) const {
    double q = 0, ph = 0;
    for (std::size_t a = 0; a < dim; ++a) {
      q += (r[a] - centre[a]) * (r[a] - centre[a]);
      ph += k0[a] * r[a];
    }
    return std::polar(std::exp(-q / (2 * width * width)), ph);
  }

  Complex spectrum(const Point& k) const {
    double q = 0, ph = 0;
    for (std::size_t a = 0; a < dim; ++a) {
      const double dk = k[a] - k0[a];
      q += dk * dk;
      ph += dk * centre[a];
    }
    const double norm = std::pow(2 * kPi * width * width, 0.5 * static_cast<double>(dim));
    return std::polar(norm * std::exp(-0.5 * width * width * q), -ph);
  }
};

/// (2 pi)^-d sum_k dk^d S(k) conj(gamma^(k)): the inner product <A, gamma> seen through a spectrum.
inline Complex spectral_inner_product(const Spectrum& s, const Wavepacket& w) {
  const auto& g = s.grid;
  double cell = 1;
  for (std::size_t a = 0; a < g.dim(); ++a) cell *= g.spacing[a] / (2 * kPi);
  Complex acc{};
  for (std::size_t i = 0; i < g.size(); ++i) acc += s.values[i] * std::conj(w.spectrum(g.position(i)));
  return cell * acc;
}

/// Direct spatial quadrature of int A(r) conj(gamma(r)) dr for a field sampled on a grid.
inline Complex spatial_inner_product(const ObjectField& f, const Wavepacket& w) {
  double cell = 1;
  for (double h : f.grid.spacing) cell *= h;
  Complex acc{};
  for (std::size_t i = 0; i < f.values.size(); ++i) acc += f.values[i] * std::conj(w.at(f.grid.position(i)));
  return cell * acc;
}

}  // namespace pact::testing

