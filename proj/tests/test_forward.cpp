#include <catch_amalgamated.hpp>

#include <cstring>

#include "support.hpp"

using namespace pact;
using namespace pact::testing;
using Catch::Approx;

namespace {

const AcousticConstants kConsts{};

double rel_max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m / max_abs(b);
}

/// Continuum model by brute force: (beta c^2/C_p) (2 pi)^-2 sum_k dk^2 Re{A^(k) e^{i k.r}} cos(c|k|t)
/// on a Cartesian k-grid; dk = 2 pi / 80 mm keeps periodic images far from the sensor.
double cartesian_quadrature(const GaussianPhantomSpec& g, const Point& r, double t) {
  const double dk = 2 * kPi / 80.0, kmax = 16.0;
  const auto n = static_cast<int>(std::ceil(kmax / dk));
  double acc = 0;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      const Point k{i * dk, j * dk, 0};
      const double km = detail::norm(k);
      const Complex a = gaussian_spectrum(g, k) * std::polar(1.0, detail::dot(k, r));
      acc += a.real() * std::cos(kConsts.c * km * t);
    }
  return kConsts.pressure_scale() * acc * dk * dk / (4 * kPi * kPi);
}

/// Full-band N-wave, extended evenly to t < 0 and ideally low-passed to |omega| <= c K.
std::vector<double> lowpassed_nwave(double d, double a, double p0, double dt, std::size_t nt, double k_band) {
  const std::size_t over = 32, n = std::size_t{1} << 20;
  const double h = dt / static_cast<double>(over);
  std::vector<Complex> buf(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double t = static_cast<double>(fft::signed_bin(m, n)) * h;
    buf[m] = uniform_sphere_pressure(d, kConsts.c * std::abs(t), a, p0);
  }
  const std::array<std::size_t, 1> shape{n};
  fft::forward_inplace(buf, shape);
  const double wcut = kConsts.c * k_band;
  for (std::size_t m = 0; m < n; ++m) {
    const double w = 2 * kPi * static_cast<double>(fft::signed_bin(m, n)) / (static_cast<double>(n) * h);
    buf[m] *= std::abs(w) <= wcut ? 1.0 / static_cast<double>(n) : 0.0;
  }
  fft::backward_inplace(buf, shape);
  std::vector<double> out(nt);
  for (std::size_t j = 0; j < nt; ++j) out[j] = buf[j * over].real();
  return out;
}

}  // namespace

TEST_CASE("zero object gives zero pressure", "[forward]") {
  const auto p = spectral_forward(ObjectField::zeros(GridSpec::centered(2, 32, 0.05)), SensorGeometry::circle(16, 4.0),
                                  TimeAxis{1.0 / 30, 300}, kConsts);
  CHECK(max_abs(p.samples) == 0.0);
}

TEST_CASE("point source at the centre gives identical traces", "[forward]") {
  auto f = ObjectField::zeros(GridSpec::centered(2, 33, 0.05));
  f.values[16 * 33 + 16] = 1.0;
  REQUIRE(f.grid.position(16 * 33 + 16) == Point{0, 0, 0});
  const auto p = spectral_forward(f, SensorGeometry::circle(24, 4.0), TimeAxis{1.0 / 30, 400}, kConsts);
  const double peak = max_abs(p.samples);
  REQUIRE(peak > 0);
  for (std::size_t s = 1; s < 24; ++s)
    for (std::size_t j = 0; j < p.nt; ++j) CHECK(std::abs(p.row(s)[j] - p.row(0)[j]) <= 1e-12 * peak);
}

TEST_CASE("spectral forward matches brute-force k-space quadrature", "[forward][oracle]") {
  const GaussianPhantomSpec g{{2.0, 0.0, 0}, 0.5, 1.0, 2};
  const auto object = make_gaussian_phantom(g, grid_around(g.center, 2, 121, 0.05));
  const auto ring = SensorGeometry::circle(7, 12.8);  // sensor 1 sits off-axis
  const auto p = spectral_forward(object, ring, TimeAxis{1.0 / 30, 450}, kConsts);
  for (std::size_t s : {0u, 1u}) {
    const auto row = p.row(s);
    double peak = 0;
    for (double v : row) peak = std::max(peak, std::abs(v));
    const double d = detail::norm(detail::sub(ring.positions[s], g.center));
    const auto j_arrival = static_cast<std::size_t>(d / kConsts.c * 30);
    for (std::size_t j : {j_arrival - 20, j_arrival - 5, j_arrival, j_arrival + 5, j_arrival + 20, j_arrival + 60}) {
      const double want = cartesian_quadrature(g, ring.positions[s], j / 30.0);
      CHECK(std::abs(row[j] - want) <= 1e-6 * peak);
    }
  }
}

TEST_CASE("spectral forward is linear", "[forward]") {
  const auto grid = GridSpec::centered(2, 40, 0.05);
  const auto x = make_gaussian_phantom({{0.1, 0.2, 0}, 0.15, 1.0, 2}, grid);
  auto y = ObjectField::zeros(grid);
  for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] = std::sin(0.37 * static_cast<double>(i));
  auto xy = x;
  for (std::size_t i = 0; i < xy.values.size(); ++i) xy.values[i] = 2.5 * x.values[i] - 0.75 * y.values[i];
  const auto ring = SensorGeometry::circle(12, 3.0);
  const TimeAxis t{1.0 / 30, 256};
  const auto px = spectral_forward(x, ring, t, kConsts), py = spectral_forward(y, ring, t, kConsts),
             pxy = spectral_forward(xy, ring, t, kConsts);
  std::vector<double> lin(px.samples.size());
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 2.5 * px.samples[i] - 0.75 * py.samples[i];
  CHECK(rel_max_diff(pxy.samples, lin) <= 1e-12);
}

TEST_CASE("cosine propagator: even in time, zero at t = 0 outside the support", "[forward]") {
  const GaussianPhantomSpec g{{1.0, -0.5, 0}, 0.3, 1.0, 2};
  const auto object = make_gaussian_phantom(g, grid_around(g.center, 2, 61, 0.05));
  const Point sensor{6.0, 0.0, 0.0};
  const double k_max = kPi / (kConsts.c / 30.0);
  const std::vector<double> ts{0.0, 0.5, 2.9, 3.3, 4.1, 6.0};
  std::vector<double> neg(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) neg[i] = -ts[i];
  const auto pp = spectral_forward_at(object, sensor, ts, kConsts, k_max);
  const auto pn = spectral_forward_at(object, sensor, neg, kConsts, k_max);
  const double scale = max_abs(pp);
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(std::abs(pp[i] - pn[i]) <= 1e-12 * scale);
  CHECK(std::abs(pp[0]) <= 1e-6 * kConsts.pressure_scale() * g.amplitude);

  // The per-point evaluator and the tabulated sensor model agree.
  SensorGeometry one;
  one.dim = 2;
  one.radius = 6.0;
  one.positions = {sensor};
  one.weights = {2 * kPi * 6.0};
  const auto table = spectral_forward(object, one, TimeAxis{1.0 / 30, 200}, kConsts);
  for (std::size_t i = 1; i < ts.size(); ++i) {
    const auto j = static_cast<std::size_t>(std::lround(ts[i] * 30));
    CHECK(std::abs(table.row(0)[j] - pp[i]) <= 1e-6 * scale);
  }
  CHECK(std::abs(table.row(0)[0]) <= 1e-6 * kConsts.pressure_scale());
}

TEST_CASE("forward preconditions", "[forward]") {
  const auto grid = GridSpec::centered(2, 40, 0.05);
  auto f = ObjectField::zeros(grid);
  f.values.back() = 1.0;  // corner at (0.95, 0.95)
  CHECK_THROWS_AS(spectral_forward(f, SensorGeometry::circle(8, 1.2), TimeAxis{0.05, 64}, kConsts), ValidationError);
  CHECK_NOTHROW(spectral_forward(f, SensorGeometry::circle(8, 1.5), TimeAxis{0.05, 64}, kConsts));
  // Band beyond the grid's own limit.
  CHECK_THROWS_AS(spectral_forward(f, SensorGeometry::circle(8, 3.0), TimeAxis{0.01, 64}, kConsts), ValidationError);
  CHECK_THROWS_AS(spectral_forward(f, SensorGeometry::fibonacci(8, 3.0), TimeAxis{0.05, 64}, kConsts), ValidationError);
  CHECK_THROWS_AS((TimeAxis{0.05, 1}.validate()), ValidationError);
}

TEST_CASE("analytic sphere N-wave", "[forward][sphere]") {
  const double R = 12.8, a = 1.5, p0 = 7.0;
  CHECK(uniform_sphere_pressure(R, R, a, p0) == 0.0);
  CHECK(uniform_sphere_pressure(R, R - a, a, p0) == Approx(p0 * a / (2 * R)).epsilon(1e-15));
  CHECK(uniform_sphere_pressure(R, R + a, a, p0) == Approx(-p0 * a / (2 * R)).epsilon(1e-15));
  CHECK(uniform_sphere_pressure(R, R - a - 1e-9, a, p0) == 0.0);

  const auto geom = SensorGeometry::fibonacci(20, R);
  const TimeAxis t{1.0 / 30, 600};
  // Radius chosen so no edge lands exactly on a sample.
  const auto p = analytic_sphere_forward({0, 0, 0}, a + 0.01, 2.0, geom, t, kConsts);
  const double p0_expected = kConsts.pressure_scale() * 2.0;
  for (std::size_t s = 1; s < geom.count(); ++s)
    for (std::size_t j = 0; j < t.nt; ++j) CHECK(std::abs(p.row(s)[j] - p.row(0)[j]) <= 1e-9 * p0_expected);
  // First sample inside the front edge carries nearly the full a/(2R) jump.
  double front = 0;
  for (double v : p.row(0)) front = std::max(front, v);
  CHECK(front == Approx(p0_expected * (a + 0.01) / (2 * R)).epsilon(0.01));

  CHECK_THROWS_AS(analytic_sphere_forward({0, 0, 0}, a, 1.0, SensorGeometry::circle(8, R), t, kConsts),
                  UnsupportedDimensionError);
  CHECK_THROWS_AS(analytic_sphere_forward({11.5, 0, 0}, a, 1.0, geom, t, kConsts), ValidationError);
}

TEST_CASE("spectral forward agrees with the analytic N-wave in 3D", "[forward][sphere][oracle][slow]") {
  // Ball rendered with partial-volume sampling on 64^3; both models band-limited at half the grid Nyquist.
  const double dx = 0.1, a = 1.5;
  const Point centre{0.3, -0.2, 0.1};
  DiskPhantomSpec spec;
  spec.grid = GridSpec::centered(3, 64, dx);
  spec.fwhm = 0;
  spec.supersample = 4;
  spec.disks = {{centre, a, 1.0}};
  const auto ball = make_disk_phantom(spec);
  const auto geom = SensorGeometry::fibonacci(24, 5.0);
  const TimeAxis t{1.0 / 30, 256};
  ForwardOptions opts;
  opts.k_max = 0.5 * kPi / dx;
  const auto p = spectral_forward(ball, geom, t, kConsts, opts);

  double num = 0, den = 0;
  for (std::size_t s = 0; s < geom.count(); ++s) {
    const double d = detail::norm(detail::sub(geom.positions[s], centre));
    const auto want = lowpassed_nwave(d, a, kConsts.pressure_scale(), t.dt, t.nt, opts.k_max);
    for (std::size_t j = 0; j < t.nt; ++j) {
      if (std::abs(d - kConsts.c * t.time(j)) > a) continue;
      num += (p.row(s)[j] - want[j]) * (p.row(s)[j] - want[j]);
      den += want[j] * want[j];
    }
  }
  const double rel = std::sqrt(num / den);
  INFO("relative L2 error over the N-wave support: " << rel);
  CHECK(rel <= 0.02);
}

TEST_CASE("noise injection", "[forward][noise]") {
  auto data = PressureSeries::zeros(SensorGeometry::circle(4, 2.0), 0.01, 50000);
  for (std::size_t i = 0; i < data.samples.size(); ++i) data.samples[i] = std::sin(0.001 * static_cast<double>(i));
  data.samples[123] = -4.0;  // global peak
  const auto same = add_noise(data, 0.0, 1);
  CHECK(same.samples == data.samples);
  const auto a = add_noise(data, 0.05, 99), b = add_noise(data, 0.05, 99), c = add_noise(data, 0.05, 100);
  CHECK(std::memcmp(a.samples.data(), b.samples.data(), a.samples.size() * sizeof(double)) == 0);
  CHECK(a.samples != c.samples);
  double ss = 0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) ss += (a.samples[i] - data.samples[i]) * (a.samples[i] - data.samples[i]);
  const double sd = std::sqrt(ss / static_cast<double>(a.samples.size()));
  CHECK(std::abs(sd - 0.05 * 4.0) <= 0.02 * 0.05 * 4.0);
  CHECK(a.attributes.at("noise_reference") == "global_peak");
  CHECK_THROWS_AS(add_noise(data, -0.1, 1), ValidationError);
}
