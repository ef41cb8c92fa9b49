#pragma once

// Forward models: pressure traces from an object.
//
// spectral_forward evaluates the homogeneous-medium imaging model
//
//   p(r_s, t) = (beta c^2 / C_p) (2 pi)^-d  int_{|k| <= K} A^(k) cos(c |k| t) exp(i k.r_s) dk
//
// with A^(k) = dx^d sum_n A_n exp(-i k.r_n), the transform of the sampled
// object. The angular part of the k-integral is done in closed form, which
// turns the model into a sum of radial kernels
//
//   p(r_s, t) = sum_n A_n dx^d h(|r_s - r_n|, t),
//   h(rho, t) = (beta c^2 / C_p) int_0^K f_d(kappa, rho) cos(c kappa t) dkappa,
//   f_2 = kappa J0(kappa rho) / (2 pi),   f_3 = kappa sin(kappa rho) / (2 pi^2 rho).
//
// h is tabulated on a fine radial grid (one FFT per radius) and each
// sensor's trace is a dot product of the table with the object's radial
// mass distribution around that sensor, spread with cubic Lagrange weights.

#include <math.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "pact/core.hpp"
#include "pact/fft.hpp"
#include "pact/parallel.hpp"

namespace pact {

struct TimeAxis {
  double dt = 1.0 / 30.0;  // us
  std::size_t nt = 2048;

  double time(std::size_t j) const { return static_cast<double>(j) * dt; }

  void validate() const {
    detail::require(std::isfinite(dt) && dt > 0, "time step must be > 0");
    detail::require(nt >= 2, "need at least two time samples");
  }
};

struct ForwardOptions {
  double k_max = 0;        // band limit K in rad/mm; 0 selects the temporal Nyquist pi / (c dt)
  double radial_step = 0;  // radial table step in mm; 0 selects min(grid spacing) / 16; /4 aliases off-axis lattice offsets
};

namespace detail {

/// Radial integrand f_d(kappa, rho) without the beta c^2 / C_p factor.
inline double radial_integrand(std::size_t dim, double kappa, double rho) {
  if (dim == 2) return kappa * ::j0(kappa * rho) / (2 * kPi);
  return kappa * std::sin(kappa * rho) / (2 * kPi * kPi * rho);
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Cubic Lagrange weights for nodes -1, 0, 1, 2 at fractional offset f in [0, 1).
inline std::array<double, 4> cubic_weights(double f) {
  return {-f * (f - 1) * (f - 2) / 6, (f + 1) * (f - 1) * (f - 2) / 2, -(f + 1) * f * (f - 2) / 2,
          (f + 1) * f * (f - 1) / 6};
}

/// Nonzero samples of an object as (position, A_n dx^d) pairs.
struct PointMasses {
  std::vector<Point> positions;
  std::vector<double> masses;
  double max_radius = 0;
};

inline PointMasses point_masses(const ObjectField& object) {
  PointMasses pm;
  double cell = 1;
  for (double s : object.grid.spacing) cell *= s;
  for (std::size_t i = 0; i < object.values.size(); ++i) {
    if (object.values[i] == 0.0) continue;
    const Point r = object.grid.position(i);
    pm.positions.push_back(r);
    pm.masses.push_back(object.values[i] * cell);
    pm.max_radius = std::max(pm.max_radius, norm(r));
  }
  return pm;
}

/// Radial mass of `pm` around `centre` on the grid rho_b = rho0 + b * step.
inline void spread_radial(const PointMasses& pm, const Point& centre, double rho0, double step,
                          std::span<double> bins) {
  std::fill(bins.begin(), bins.end(), 0.0);
  for (std::size_t n = 0; n < pm.positions.size(); ++n) {
    const double rho = norm(sub(centre, pm.positions[n]));
    const double u = (rho - rho0) / step;
    const auto i = static_cast<std::size_t>(std::floor(u));
    const auto w = cubic_weights(u - static_cast<double>(i));
    for (std::size_t q = 0; q < 4; ++q) bins[i - 1 + q] += pm.masses[n] * w[q];
  }
}

/// Riemann zeta at even s >= 2.
inline double zeta_even(int s) {
  if (s == 2) return kPi * kPi / 6;
  double z = 0;
  const int terms = 2000;
  for (int k = terms; k >= 1; --k) z += std::pow(static_cast<double>(k), -s);
  return z + std::pow(terms + 0.5, 1 - s) / (s - 1);
}

/// End correction at kappa = 0 for the 2D trapezoid sum in kappa.
///
/// F(kappa) = kappa J0(kappa rho) cos(c kappa t) / (2 pi) is odd, so the trapezoid
/// rule on [0, K] misses sum_n B_2n / (2n)! h^2n F^(2n-1)(0). Summed over an
/// object this is proportional to its total mass: a constant offset in every
/// trace. All odd derivatives are known in closed form; the series converges
/// for h (rho + c|t|) < 2 pi, which the quadrature spacing guarantees.
/// (In 3D F is even and the rule needs no correction.)
class KinkCorrection {
 public:
  KinkCorrection(double h, double c, std::span<const double> times) : q_(h / (2 * kPi)), nt_(times.size()) {
    // term_n = w_n sum_{m + l = n} a_m(rho) b_l(t),
    // w_n = 2 zeta(2n + 2) (2n + 1)! q^2 / (2 pi), a_m = (q rho / 2)^2m / (m!)^2, b_l = (q c t)^2l / (2l)!.
    std::vector<double> w(kTerms);
    double fact = 1;  // (2n + 1)!
    for (std::size_t n = 0; n < kTerms; ++n) {
      if (n > 0) fact *= static_cast<double>((2 * n) * (2 * n + 1));
      w[n] = 2 * zeta_even(static_cast<int>(2 * n + 2)) * fact * q_ * q_ / (2 * kPi);
    }
    c_.assign(kTerms * nt_, 0.0);
    std::vector<double> b(kTerms);
    for (std::size_t j = 0; j < nt_; ++j) {
      const double x = q_ * c * times[j];
      b[0] = 1;
      for (std::size_t l = 1; l < kTerms; ++l)
        b[l] = b[l - 1] * x * x / static_cast<double>((2 * l - 1) * (2 * l));
      for (std::size_t m = 0; m < kTerms; ++m) {
        double acc = 0;
        for (std::size_t l = 0; m + l < kTerms; ++l) acc += w[m + l] * b[l];
        c_[m * nt_ + j] = acc;
      }
    }
  }

  /// Adds scale * correction(rho, t_j) to out[j].
  void add(double rho, double scale, std::span<double> out) const {
    const double y = q_ * rho / 2;
    double a = 1;
    for (std::size_t m = 0; m < kTerms; ++m) {
      if (m > 0) a *= y * y / static_cast<double>(m * m);
      if (a < 1e-20) break;
      const double* cm = c_.data() + m * nt_;
      for (std::size_t j = 0; j < nt_; ++j) out[j] += scale * a * cm[j];
    }
  }

 private:
  static constexpr std::size_t kTerms = 48;
  double q_;
  std::size_t nt_;
  std::vector<double> c_;  // C_m(t_j) = sum_l w_{m+l} b_l(t_j)
};

}  // namespace detail

/// Tabulated radial kernel h(rho_b, t_j) for rho_b = rho0 + b * step and t_j = j * dt.
class RadialKernelTable {
 public:
  RadialKernelTable(std::size_t dim, const AcousticConstants& consts, double k_max, const TimeAxis& time,
                    double rho0, double step, std::size_t bins)
      : rho0_(rho0), step_(step), bins_(bins), nt_(time.nt) {
    // Quadrature in kappa aligned with the time grid: c dkappa dt = 2 pi / L makes
    // cos(c kappa_m t_j) = cos(2 pi m j / L), so every radius costs one real FFT.
    // L >= 2 (rho_max / (c dt) + nt) keeps the periodic images of the trapezoid sum
    // away from the sampled time window.
    const double rho_max = rho0 + step * static_cast<double>(bins);
    const double c = consts.c;
    std::size_t len = detail::next_pow2(
        static_cast<std::size_t>(std::ceil(2.0 * (rho_max / (c * time.dt) + static_cast<double>(time.nt)))));
    double dkappa = 2 * kPi / (c * time.dt * static_cast<double>(len));
    while (k_max / dkappa < 64) {
      len *= 2;
      dkappa /= 2;
    }
    const auto modes = static_cast<std::size_t>(std::floor(k_max / dkappa + 1e-9));
    k_eff_ = static_cast<double>(modes) * dkappa;
    fft_length_ = len;

    values_.assign(bins_ * nt_, 0.0);
    const double scale = consts.pressure_scale();
    std::vector<double> times(nt_);
    for (std::size_t j = 0; j < nt_; ++j) times[j] = time.time(j);
    std::optional<detail::KinkCorrection> kink;
    if (dim == 2) kink.emplace(dkappa, c, times);
    fft::RealForward plan(len);
    parallel_for(bins_, [&](std::size_t begin, std::size_t end) {
      std::vector<double> g(len);
      std::vector<Complex> spec(len / 2 + 1);
      for (std::size_t b = begin; b < end; ++b) {
        const double rho = rho_of(b);
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t m = 1; m <= modes; ++m) {
          const double w = (m == modes ? 0.5 : 1.0) * dkappa;
          g[m % len] += w * detail::radial_integrand(dim, static_cast<double>(m) * dkappa, rho);
        }
        plan.execute(g, spec);
        double* row = values_.data() + b * nt_;
        for (std::size_t j = 0; j < nt_; ++j) {
          // Re X_j for j > len/2 equals Re X_{len-j}.
          const std::size_t jj = j <= len / 2 ? j : len - j;
          row[j] = scale * spec[jj].real();
        }
        if (kink) kink->add(rho, scale, {row, nt_});
      }
    });
  }

  double rho_of(std::size_t b) const { return rho0_ + step_ * static_cast<double>(b); }
  double rho0() const { return rho0_; }
  double step() const { return step_; }
  std::size_t bins() const { return bins_; }
  /// Band limit actually integrated (K rounded down to the quadrature grid).
  double effective_k_max() const { return k_eff_; }
  std::size_t fft_length() const { return fft_length_; }
  std::span<const double> row(std::size_t b) const { return {values_.data() + b * nt_, nt_}; }

 private:
  double rho0_;
  double step_;
  std::size_t bins_;
  std::size_t nt_;
  double k_eff_ = 0;
  std::size_t fft_length_ = 0;
  std::vector<double> values_;
};

namespace detail {

struct ForwardSetup {
  PointMasses masses;
  double k_max;
  double step;
  double rho0;
  std::size_t bins;
};

inline ForwardSetup prepare_forward(const ObjectField& object, const SensorGeometry& geom,
                                    const AcousticConstants& consts, double dt, const ForwardOptions& opts) {
  object.validate();
  geom.validate();
  consts.validate();
  require(object.grid.dim() == geom.dim, "object and geometry dimensions differ");
  ForwardSetup s;
  const double max_dx = *std::max_element(object.grid.spacing.begin(), object.grid.spacing.end());
  const double min_dx = *std::min_element(object.grid.spacing.begin(), object.grid.spacing.end());
  s.k_max = opts.k_max > 0 ? opts.k_max : kPi / (consts.c * dt);
  require(s.k_max <= (kPi / max_dx) * (1 + 1e-9),
          "object grid too coarse for the requested band (need pi/dx >= k_max)");
  s.step = opts.radial_step > 0 ? opts.radial_step : min_dx / 16;
  s.masses = point_masses(object);
  require(s.masses.max_radius + 0.5 * max_dx < geom.radius,
          "object support must lie strictly inside the measurement surface");
  const double rho_min = geom.radius - s.masses.max_radius;
  const double rho_max = geom.radius + s.masses.max_radius;
  // bins sit on multiples of step so the spreading does not depend on the support (exact linearity)
  s.rho0 = (std::floor(rho_min / s.step) - 2) * s.step;
  s.bins = static_cast<std::size_t>(std::ceil((rho_max - s.rho0) / s.step)) + 3;
  return s;
}

}  // namespace detail

/// Pressure traces of `object` at every sensor of `geom` on the given time axis.
inline PressureSeries spectral_forward(const ObjectField& object, const SensorGeometry& geom, const TimeAxis& time,
                                       const AcousticConstants& consts, const ForwardOptions& opts = {}) {
  time.validate();
  const auto setup = detail::prepare_forward(object, geom, consts, time.dt, opts);
  PressureSeries out = PressureSeries::zeros(geom, time.dt, time.nt);
  if (setup.masses.positions.empty()) return out;

  const RadialKernelTable table(geom.dim, consts, setup.k_max, time, setup.rho0, setup.step, setup.bins);
  parallel_for(geom.count(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> radial(setup.bins);
    for (std::size_t s = begin; s < end; ++s) {
      detail::spread_radial(setup.masses, geom.positions[s], setup.rho0, setup.step, radial);
      auto trace = out.row(s);
      for (std::size_t b = 0; b < setup.bins; ++b) {
        const double m = radial[b];
        if (m == 0.0) continue;
        const auto h = table.row(b);
        for (std::size_t j = 0; j < time.nt; ++j) trace[j] += m * h[j];
      }
    }
  });
  out.attributes["model"] = "spectral";
  out.attributes["k_max"] = table.effective_k_max();
  out.attributes["c"] = consts.c;
  out.attributes["beta_over_cp"] = consts.beta_over_cp;
  return out;
}

/// The same model evaluated directly at one point for arbitrary (also negative) times.
/// Slower than spectral_forward; meant for spot checks.
inline std::vector<double> spectral_forward_at(const ObjectField& object, const Point& where,
                                               std::span<const double> times, const AcousticConstants& consts,
                                               double k_max, const ForwardOptions& opts = {}) {
  object.validate();
  consts.validate();
  detail::require(k_max > 0, "band limit must be > 0");
  const auto pm = detail::point_masses(object);
  std::vector<double> out(times.size(), 0.0);
  if (pm.positions.empty()) return out;
  const double min_dx = *std::min_element(object.grid.spacing.begin(), object.grid.spacing.end());
  const double step = opts.radial_step > 0 ? opts.radial_step : min_dx / 16;
  const double r = detail::norm(where);
  detail::require(pm.max_radius < r, "evaluation point must lie outside the object support");
  const double rho0 = (std::floor((r - pm.max_radius) / step) - 2) * step;
  const double rho_max = r + pm.max_radius;
  const auto bins = static_cast<std::size_t>(std::ceil((rho_max - rho0) / step)) + 3;
  std::vector<double> radial(bins);
  detail::spread_radial(pm, where, rho0, step, radial);

  double t_abs = 0;
  for (double t : times) t_abs = std::max(t_abs, std::abs(t));
  // Trapezoid in kappa is exact up to aliasing at distance 2 pi / dkappa.
  const double reach = rho_max + rho0 + 2 * consts.c * t_abs;
  const auto modes = static_cast<std::size_t>(std::ceil(k_max * reach / kPi)) + 64;
  const double dkappa = k_max / static_cast<double>(modes);
  const double scale = consts.pressure_scale();
  std::optional<detail::KinkCorrection> kink;
  if (object.grid.dim() == 2) kink.emplace(dkappa, consts.c, times);
  std::vector<double> fix(times.size());
  for (std::size_t b = 0; b < bins; ++b) {
    if (radial[b] == 0.0) continue;
    const double rho = rho0 + step * static_cast<double>(b);
    if (kink) {
      std::fill(fix.begin(), fix.end(), 0.0);
      kink->add(rho, scale * radial[b], fix);
      for (std::size_t j = 0; j < times.size(); ++j) out[j] += fix[j];
    }
    for (std::size_t m = 1; m <= modes; ++m) {
      const double kappa = static_cast<double>(m) * dkappa;
      const double f = (m == modes ? 0.5 : 1.0) * dkappa * detail::radial_integrand(object.grid.dim(), kappa, rho);
      for (std::size_t j = 0; j < times.size(); ++j)
        out[j] += scale * radial[b] * f * std::cos(consts.c * kappa * times[j]);
    }
  }
  return out;
}

/// Pressure of a uniformly pressurized ball (initial pressure p0, radius a) at distance d
/// from its centre after travel distance ct.
inline double uniform_sphere_pressure(double d, double ct, double a, double p0) {
  return std::abs(d - ct) <= a ? p0 * (d - ct) / (2 * d) : 0.0;
}

/// Closed-form N-wave traces of a uniform sphere with absorbed energy `amplitude`.
///
/// With p0 = (beta c^2 / C_p) amplitude and d = |r_s - centre|,
/// p(d, t) = p0 (d - c t) / (2 d) when |d - c t| <= a, else 0.
inline PressureSeries analytic_sphere_forward(const Point& centre, double radius, double amplitude,
                                              const SensorGeometry& geom, const TimeAxis& time,
                                              const AcousticConstants& consts) {
  if (geom.dim != 3) throw UnsupportedDimensionError("analytic sphere model is 3D only");
  geom.validate();
  time.validate();
  consts.validate();
  detail::require(std::isfinite(radius) && radius > 0, "sphere radius must be > 0");
  detail::require(detail::norm(centre) + radius < geom.radius, "sphere must lie strictly inside the sensor surface");
  PressureSeries out = PressureSeries::zeros(geom, time.dt, time.nt);
  const double p0 = consts.pressure_scale() * amplitude;
  for (std::size_t s = 0; s < geom.count(); ++s) {
    const double d = detail::norm(detail::sub(geom.positions[s], centre));
    auto trace = out.row(s);
    for (std::size_t j = 0; j < time.nt; ++j) trace[j] = uniform_sphere_pressure(d, consts.c * time.time(j), radius, p0);
  }
  out.attributes["model"] = "analytic_sphere";
  out.attributes["c"] = consts.c;
  out.attributes["beta_over_cp"] = consts.beta_over_cp;
  return out;
}

/// Adds i.i.d. Gaussian noise with standard deviation level * max|p| over the whole data set.
inline PressureSeries add_noise(const PressureSeries& data, double level, std::uint64_t seed) {
  data.validate();
  detail::require(std::isfinite(level) && level >= 0, "noise level must be >= 0");
  PressureSeries out = data;
  double peak = 0;
  for (double v : data.samples) peak = std::max(peak, std::abs(v));
  const double sigma = level * peak;
  out.attributes["noise_level"] = level;
  out.attributes["noise_seed"] = seed;
  out.attributes["noise_reference"] = "global_peak";
  out.attributes["noise_sigma"] = sigma;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& v : out.samples) v += noise(rng);
  return out;
}

}  // namespace pact
