#pragma once

// Time-domain delay-and-sum backprojection, used as the speed and sanity
// reference. It is not an exact inversion: each sensor contributes
//
//   b_s(t) = 2 p(r_s, t) - 2 t dp/dt
//
// looked up (linearly) at the time of flight |r - r_s| / c, weighted by the
// sensor's quadrature weight. For a uniform ball b_s is a rectangle of height
// p0, so the sum is normalized by the surface measure and beta c^2 / C_p to
// land near A(r) at the aperture centre.

#include <cmath>
#include <vector>

#include "pact/core.hpp"
#include "pact/parallel.hpp"

namespace pact {

/// Derivative-weighted traces b_s(t_j); central differences, one-sided at the ends.
inline std::vector<double> backprojection_traces(const PressureSeries& data) {
  data.validate();
  const std::size_t nt = data.nt;
  std::vector<double> b(data.samples.size(), 0.0);
  for (std::size_t s = 0; s < data.geometry.count(); ++s) {
    const auto p = data.row(s);
    double* out = b.data() + s * nt;
    for (std::size_t j = 0; j < nt; ++j) {
      double dp = 0;
      if (nt >= 2) {
        if (j == 0)
          dp = (p[1] - p[0]) / data.dt;
        else if (j + 1 == nt)
          dp = (p[j] - p[j - 1]) / data.dt;
        else
          dp = (p[j + 1] - p[j - 1]) / (2 * data.dt);
      }
      const double t = static_cast<double>(j) * data.dt;
      out[j] = 2 * p[j] - 2 * t * dp;
    }
  }
  return b;
}

inline ObjectField delay_and_sum(const PressureSeries& data, const GridSpec& grid, const AcousticConstants& consts) {
  data.validate();
  grid.validate();
  consts.validate();
  const auto& geom = data.geometry;
  detail::require(grid.dim() == geom.dim, "image and geometry dimensions differ");
  // Every grid corner must lie inside the aperture.
  const std::size_t d = grid.dim();
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    Point p{0, 0, 0};
    for (std::size_t a = 0; a < d; ++a)
      p[a] = grid.coordinate(a, (corner >> a) & 1u ? grid.shape[a] - 1 : 0);
    detail::require(detail::norm(p) < geom.radius, "image grid must lie inside the measurement surface");
  }

  const auto b = backprojection_traces(data);
  const std::size_t nt = data.nt;
  const std::size_t ns = geom.count();
  const double inv_step = 1.0 / (consts.c * data.dt);  // samples per mm of path
  const double norm = 1.0 / (geom.surface_measure() * consts.pressure_scale());

  ObjectField img = ObjectField::zeros(grid);
  parallel_for(grid.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Point r = grid.position(i);
      double acc = 0;
      for (std::size_t s = 0; s < ns; ++s) {
        const auto& rs = geom.positions[s];
        const double dx = r[0] - rs[0], dy = r[1] - rs[1], dz = r[2] - rs[2];
        const double x = std::sqrt(dx * dx + dy * dy + dz * dz) * inv_step;
        const auto j = static_cast<std::size_t>(x);
        if (j + 1 >= nt) continue;  // beyond the recorded window
        const double f = x - static_cast<double>(j);
        const double* q = b.data() + s * nt;
        acc += geom.weights[s] * ((1 - f) * q[j] + f * q[j + 1]);
      }
      img.values[i] = norm * acc;
    }
  });
  img.attributes["reconstruction"] = "delay_and_sum";
  return img;
}

}  // namespace pact
