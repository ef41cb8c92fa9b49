#pragma once

// Fourier-domain reconstruction for circular / spherical apertures.
//
//   A^(k) = (2 C_p / (R_S beta)) sum_s w_s exp(-i k.r_s) Re{ F_t[t p(r_s, t)](omega = c|k|) }
//   A(r)  = (2 pi)^-d  sum_k dk^d A^(k) exp(i k.r)
//
// The plane-wave weight carries a minus sign in the exponent. With the
// transform pair A^(k) = int A(r) exp(-i k.r) dr used throughout, the inner
// product of two real objects pairs A^(k) with the conjugate of the test
// function's spectrum, and the plus sign reconstructs A(-r).
//
// The accumulated spectrum is exact only on objects supported inside the
// measurement surface: it also contains image terms centred on the shell of
// radius 2 R_S. The k-grid oversampling must be >= 2 so that these terms stay
// outside the cropped field of view after the inverse FFT.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pact/core.hpp"
#include "pact/fft.hpp"
#include "pact/parallel.hpp"

namespace pact {

/// One-sided temporal spectra of t p(r_s, t), one row per sensor.
struct SensorSpectrum {
  double dt = 0;          // us, sampling step of the original traces
  double domega = 0;      // rad/us, bin spacing 2 pi / (pad nt dt)
  std::size_t bins = 0;   // retained bins, omega_m = m domega for m < bins
  std::size_t sensors = 0;
  std::vector<Complex> values;  // sensors x bins

  const Complex& at(std::size_t s, std::size_t m) const { return values[s * bins + m]; }
  /// Highest representable temporal frequency, pi / dt.
  double nyquist() const { return kPi / dt; }
};

/// Forms t_j p(r_s, t_j), zero-pads to pad * nt samples and returns dt * DFT
/// (exp(-i omega t) kernel), keeping the nonnegative-frequency bins.
inline SensorSpectrum modified_data_spectrum(const PressureSeries& data, std::size_t pad_factor) {
  data.validate();
  detail::require(pad_factor >= 1, "zero-pad factor must be >= 1");
  const std::size_t len = pad_factor * data.nt;
  SensorSpectrum out;
  out.dt = data.dt;
  out.domega = 2 * kPi / (static_cast<double>(len) * data.dt);
  out.bins = len / 2 + 1;
  out.sensors = data.geometry.count();
  out.values.assign(out.sensors * out.bins, Complex{});
  const fft::RealForward plan(len);
  parallel_for(out.sensors, [&](std::size_t begin, std::size_t end) {
    std::vector<double> g(len);
    for (std::size_t s = begin; s < end; ++s) {
      std::fill(g.begin(), g.end(), 0.0);
      const auto p = data.row(s);
      for (std::size_t j = 0; j < data.nt; ++j) g[j] = static_cast<double>(j) * data.dt * p[j];
      std::span<Complex> row(out.values.data() + s * out.bins, out.bins);
      plan.execute(g, row);
      for (auto& v : row) v *= data.dt;
    }
  });
  return out;
}

/// Where omega = c |k| falls on the bin axis.
struct SampleLocation {
  std::uint32_t bin = 0;
  double frac = 0;  // linear weight of bin + 1
  bool truncated = false;
};

inline SampleLocation locate_sample(double k_mag, double c, const SensorSpectrum& spec, Interpolation mode) {
  const double omega = c * k_mag;
  SampleLocation loc;
  const double x = omega / spec.domega;
  const double last = static_cast<double>(spec.bins - 1);
  // Bin bins-1 sits exactly at the Nyquist rate when pad * nt is even.
  if (omega > spec.nyquist() * (1 + 1e-12) || x > last + 0.5) {
    loc.truncated = true;
    return loc;
  }
  if (mode == Interpolation::Nearest) {
    loc.bin = static_cast<std::uint32_t>(std::min(std::llround(x), static_cast<long long>(spec.bins - 1)));
  } else {
    const double fl = std::floor(x);
    if (fl >= last) {
      loc.bin = static_cast<std::uint32_t>(spec.bins - 1);
    } else {
      loc.bin = static_cast<std::uint32_t>(fl);
      loc.frac = x - fl;
    }
  }
  return loc;
}

/// Re of sensor `s`'s spectrum at omega = c k_mag. Frequencies beyond the Nyquist
/// rate return 0 and set *truncated.
inline double sample_at_ck(const SensorSpectrum& spec, std::size_t s, double k_mag, double c, Interpolation mode,
                           bool* truncated = nullptr) {
  detail::require(k_mag >= 0, "|k| must be >= 0");
  detail::require(s < spec.sensors, "sensor index out of range");
  const auto loc = locate_sample(k_mag, c, spec, mode);
  if (truncated) *truncated = loc.truncated;
  if (loc.truncated) return 0.0;
  const double a = spec.at(s, loc.bin).real();
  if (loc.frac == 0.0) return a;
  const double b = spec.at(s, loc.bin + 1).real();
  return (1 - loc.frac) * a + loc.frac * b;
}

/// Centred k-grid for an image grid: shape oversampling * n, step 2 pi / (oversampling n dx),
/// DC at index shape / 2.
inline GridSpec make_kgrid(const GridSpec& image, std::size_t oversampling) {
  image.validate();
  detail::require(oversampling >= 1, "k-grid oversampling must be >= 1");
  GridSpec k;
  for (std::size_t a = 0; a < image.dim(); ++a) {
    const std::size_t n = oversampling * image.shape[a];
    const double dk = 2 * kPi / (static_cast<double>(n) * image.spacing[a]);
    k.shape.push_back(n);
    k.spacing.push_back(dk);
    k.origin.push_back(-static_cast<double>(n / 2) * dk);
  }
  return k;
}

struct AccumulateStats {
  double truncated_fraction = 0;
  double sample_seconds = 0;
  double accumulate_seconds = 0;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void require_centered(const GridSpec& k) {
  for (std::size_t a = 0; a < k.dim(); ++a) {
    const double expect = -static_cast<double>(k.shape[a] / 2) * k.spacing[a];
    require(std::abs(k.origin[a] - expect) <= 1e-9 * k.spacing[a], "k-grid must be centred (DC at shape/2)");
  }
}

}  // namespace detail

/// Plane-wave weighted sum over sensors for every k-grid point.
///
/// Each output value sums sensors in ascending index order, so the result is
/// independent of the number of threads.
inline Spectrum accumulate_spectrum(const SensorSpectrum& spec, const SensorGeometry& geom, const GridSpec& kgrid,
                                    const AcousticConstants& consts, Interpolation mode,
                                    AccumulateStats* stats = nullptr) {
  geom.validate();
  consts.validate();
  kgrid.validate();
  detail::require(kgrid.dim() == geom.dim, "k-grid and geometry dimensions differ");
  detail::require(spec.sensors == geom.count(), "spectrum and geometry sensor counts differ");
  detail::require_centered(kgrid);
  const std::size_t d = kgrid.dim();
  const std::size_t ns = geom.count();
  const std::size_t nk = kgrid.size();
  const std::size_t inner = kgrid.shape[d - 1];
  const std::size_t rows = nk / inner;

  // Sampling stage: one bin lookup per k-point, shared by all sensors.
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::uint32_t> bin(nk);
  std::vector<double> frac(mode == Interpolation::Linear ? nk : 0);
  std::size_t max_bin = 0;
  std::size_t truncated = 0;
  const std::uint32_t zero_bin = static_cast<std::uint32_t>(spec.bins);  // points at appended zeros
  for (std::size_t i = 0; i < nk; ++i) {
    const auto idx = kgrid.unravel(i);
    double k2 = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const double k = kgrid.coordinate(a, idx[a]);
      k2 += k * k;
    }
    const auto loc = locate_sample(std::sqrt(k2), consts.c, spec, mode);
    if (loc.truncated) {
      ++truncated;
      bin[i] = zero_bin;
    } else {
      bin[i] = loc.bin;
      max_bin = std::max<std::size_t>(max_bin, loc.bin);
    }
    if (!frac.empty()) frac[i] = loc.frac;
  }
  // Compact the bins that are used: rows of w_s Re F_s(omega_m), then two zeros.
  const std::size_t used = std::min(max_bin + 2, spec.bins);
  const std::size_t stride = used + 2;
  std::vector<double> table(ns * stride, 0.0);
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t m = 0; m < used; ++m) table[s * stride + m] = geom.weights[s] * spec.at(s, m).real();
  for (auto& b : bin)
    if (b == zero_bin) b = static_cast<std::uint32_t>(used);

  // exp(-i k_a r_{s,a}) per axis, laid out [axis][s][index].
  std::vector<std::vector<double>> phase_re(d), phase_im(d);
  for (std::size_t a = 0; a < d; ++a) {
    const std::size_t n = kgrid.shape[a];
    phase_re[a].resize(ns * n);
    phase_im[a].resize(ns * n);
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t i = 0; i < n; ++i) {
        const double arg = kgrid.coordinate(a, i) * geom.positions[s][a];
        phase_re[a][s * n + i] = std::cos(arg);
        phase_im[a][s * n + i] = -std::sin(arg);
      }
  }
  if (stats) {
    stats->sample_seconds = detail::seconds_since(t0);
    stats->truncated_fraction = static_cast<double>(truncated) / static_cast<double>(nk);
  }

  // Accumulation stage, one row of the last axis at a time.
  t0 = std::chrono::steady_clock::now();
  Spectrum out;
  out.grid = kgrid;
  out.values.assign(nk, Complex{});
  const double prefactor = 2.0 / (geom.radius * consts.beta_over_cp);
  parallel_for(rows, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc_re(inner), acc_im(inner);
    for (std::size_t row = begin; row < end; ++row) {
      std::fill(acc_re.begin(), acc_re.end(), 0.0);
      std::fill(acc_im.begin(), acc_im.end(), 0.0);
      const auto lead = kgrid.unravel(row * inner);
      const std::uint32_t* row_bin = bin.data() + row * inner;
      const double* row_frac = frac.empty() ? nullptr : frac.data() + row * inner;
      for (std::size_t s = 0; s < ns; ++s) {
        double lr = 1, li = 0;
        for (std::size_t a = 0; a + 1 < d; ++a) {
          const std::size_t n = kgrid.shape[a];
          const double pr = phase_re[a][s * n + lead[a]];
          const double pi = phase_im[a][s * n + lead[a]];
          const double nr = lr * pr - li * pi;
          li = lr * pi + li * pr;
          lr = nr;
        }
        const double* er = phase_re[d - 1].data() + s * inner;
        const double* ei = phase_im[d - 1].data() + s * inner;
        const double* v = table.data() + s * stride;
        if (row_frac) {
          for (std::size_t i = 0; i < inner; ++i) {
            const double f = row_frac[i];
            const double val = (1 - f) * v[row_bin[i]] + f * v[row_bin[i] + 1];
            acc_re[i] += val * (lr * er[i] - li * ei[i]);
            acc_im[i] += val * (lr * ei[i] + li * er[i]);
          }
        } else {
          for (std::size_t i = 0; i < inner; ++i) {
            const double val = v[row_bin[i]];
            acc_re[i] += val * (lr * er[i] - li * ei[i]);
            acc_im[i] += val * (lr * ei[i] + li * er[i]);
          }
        }
      }
      Complex* dst = out.values.data() + row * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] = prefactor * Complex{acc_re[i], acc_im[i]};
    }
  });
  if (stats) stats->accumulate_seconds = detail::seconds_since(t0);
  out.attributes["truncated_fraction"] = static_cast<double>(truncated) / static_cast<double>(nk);
  return out;
}

struct InversionResult {
  ObjectField image;
  double hermitian_asymmetry = 0;  // max |A(k) - conj A(-k)| / max |A|, before symmetrization
  double imaginary_residue = 0;    // max |Im| / max |Re| of the image before the real part is taken
};

/// Inverse transform of a centred spectrum onto `image_grid`.
///
/// Conjugate pairs are averaged first; the inverse DFT is scaled by (dk / 2 pi)^d
/// and the centred image_grid region of the periodic result is returned.
inline InversionResult invert_spectrum(const Spectrum& spec, const GridSpec& image_grid) {
  spec.validate();
  image_grid.validate();
  const GridSpec& kg = spec.grid;
  const std::size_t d = kg.dim();
  detail::require(image_grid.dim() == d, "spectrum and image dimensions differ");
  detail::require_centered(kg);
  std::vector<std::size_t> offset(d);
  std::vector<double> full_origin(d);
  for (std::size_t a = 0; a < d; ++a) {
    const std::size_t nk = kg.shape[a];
    const std::size_t n = image_grid.shape[a];
    detail::require(nk >= n && nk % n == 0, "k-grid shape must be an integer multiple of the image shape");
    const double product = kg.spacing[a] * static_cast<double>(nk) * image_grid.spacing[a];
    detail::require(std::abs(product - 2 * kPi) <= 1e-9 * 2 * kPi, "k-grid spacing does not match the image spacing");
    offset[a] = (nk - n) / 2;
    full_origin[a] = image_grid.origin[a] - static_cast<double>(offset[a]) * image_grid.spacing[a];
  }

  const std::size_t total = kg.size();
  auto partner = [&](std::size_t flat) {
    const auto idx = kg.unravel(flat);
    const auto st = kg.strides();
    std::size_t j = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const std::size_t n = kg.shape[a];
      const std::size_t mirrored = (2 * (n / 2) + n - idx[a]) % n;
      j += mirrored * st[a];
    }
    return j;
  };
  // Indices on an even-length axis at i = 0 have no true partner (-k is off the grid).
  auto truly_paired = [&](std::size_t flat) {
    const auto idx = kg.unravel(flat);
    for (std::size_t a = 0; a < d; ++a)
      if (kg.shape[a] % 2 == 0 && idx[a] == 0) return false;
    return true;
  };

  InversionResult result;
  double peak = 0;
  for (const auto& v : spec.values) peak = std::max(peak, std::abs(v));
  double asym = 0;
  for (std::size_t i = 0; i < total; ++i)
    if (truly_paired(i)) asym = std::max(asym, std::abs(spec.values[i] - std::conj(spec.values[partner(i)])));
  result.hermitian_asymmetry = peak > 0 ? asym / peak : 0.0;

  // Origin phase exp(i k.o) with k = q dk, then move to unshifted FFT order.
  std::vector<Complex> phased(total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto idx = kg.unravel(i);
    double arg = 0;
    for (std::size_t a = 0; a < d; ++a) arg += kg.coordinate(a, idx[a]) * full_origin[a];
    phased[i] = spec.values[i] * std::polar(1.0, arg);
  }
  std::vector<Complex> buf(total);
  const auto st = kg.strides();
  double scale = 1;
  for (std::size_t a = 0; a < d; ++a) scale *= kg.spacing[a] / (2 * kPi);
  for (std::size_t i = 0; i < total; ++i) {
    const Complex sym = 0.5 * (phased[i] + std::conj(phased[partner(i)]));
    const auto idx = kg.unravel(i);
    std::size_t j = 0;
    for (std::size_t a = 0; a < d; ++a) {
      const std::size_t n = kg.shape[a];
      j += ((idx[a] + n - n / 2) % n) * st[a];
    }
    buf[j] = scale * sym;
  }
  fft::backward_inplace(buf, kg.shape);

  double max_re = 0, max_im = 0;
  for (const auto& v : buf) {
    max_re = std::max(max_re, std::abs(v.real()));
    max_im = std::max(max_im, std::abs(v.imag()));
  }
  result.imaginary_residue = max_re > 0 ? max_im / max_re : 0.0;

  result.image = ObjectField::zeros(image_grid);
  for (std::size_t i = 0; i < image_grid.size(); ++i) {
    const auto idx = image_grid.unravel(i);
    std::size_t j = 0;
    for (std::size_t a = 0; a < d; ++a) j += (idx[a] + offset[a]) * st[a];
    result.image.values[i] = buf[j].real();
  }
  return result;
}

struct ReconReport {
  double truncated_fraction = 0;
  double hermitian_asymmetry = 0;
  double imaginary_residue = 0;
  double band_limit = 0;  // rad/mm, Nyquist omega / c
  std::vector<std::size_t> kgrid_shape;
  double temporal_fft_seconds = 0;
  double sample_seconds = 0;
  double accumulate_seconds = 0;
  double invert_seconds = 0;
  double total_seconds = 0;

  /// Wall-clock times are left out unless asked for, so reports of identical runs compare equal.
  Json to_json(bool include_timings = false) const {
    Json j{{"truncated_fraction", truncated_fraction},
           {"hermitian_asymmetry", hermitian_asymmetry},
           {"imaginary_residue", imaginary_residue},
           {"band_limit_rad_per_mm", band_limit},
           {"kgrid_shape", kgrid_shape}};
    if (include_timings)
      j["seconds"] = {{"temporal_fft", temporal_fft_seconds},
                      {"sample", sample_seconds},
                      {"accumulate", accumulate_seconds},
                      {"invert", invert_seconds},
                      {"total", total_seconds}};
    return j;
  }
};

struct ReconResult {
  ObjectField image;
  ReconReport report;
  Spectrum spectrum;  // accumulated spectrum before symmetrization
};

/// Temporal FFT, sampling at omega = c|k|, plane-wave accumulation, inverse FFT.
inline ReconResult reconstruct(const PressureSeries& data, const ReconParams& params, const AcousticConstants& consts) {
  data.validate();
  params.validate();
  consts.validate();
  detail::require(params.grid.dim() == data.geometry.dim, "image and geometry dimensions differ");
  const auto start = std::chrono::steady_clock::now();
  ReconResult r;

  auto t0 = std::chrono::steady_clock::now();
  const SensorSpectrum spec = modified_data_spectrum(data, params.pad_factor);
  r.report.temporal_fft_seconds = detail::seconds_since(t0);

  const GridSpec kgrid = make_kgrid(params.grid, params.oversampling);
  AccumulateStats stats;
  r.spectrum = accumulate_spectrum(spec, data.geometry, kgrid, consts, params.interpolation, &stats);
  r.report.sample_seconds = stats.sample_seconds;
  r.report.accumulate_seconds = stats.accumulate_seconds;
  r.report.truncated_fraction = stats.truncated_fraction;

  t0 = std::chrono::steady_clock::now();
  auto inv = invert_spectrum(r.spectrum, params.grid);
  r.report.invert_seconds = detail::seconds_since(t0);
  r.report.hermitian_asymmetry = inv.hermitian_asymmetry;
  r.report.imaginary_residue = inv.imaginary_residue;
  r.report.band_limit = spec.nyquist() / consts.c;
  r.report.kgrid_shape = kgrid.shape;
  r.image = std::move(inv.image);
  r.image.attributes["reconstruction"] = "fourier";
  r.image.attributes["interpolation"] = to_string(params.interpolation);
  r.image.attributes["pad_factor"] = params.pad_factor;
  r.image.attributes["oversampling"] = params.oversampling;
  r.report.total_seconds = detail::seconds_since(start);
  return r;
}

}  // namespace pact
