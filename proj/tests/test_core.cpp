#include <catch_amalgamated.hpp>

#include <cstring>
#include <fstream>
#include <random>

#include "support.hpp"

using namespace pact;
using Catch::Approx;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "pact_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

FormatErrorKind decode_kind(const std::string& bytes) {
  try {
    (void)decode_container(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  FAIL("decode accepted a corrupt buffer");
  return FormatErrorKind::BadMetadata;
}

}  // namespace

TEST_CASE("grid validation and indexing", "[core]") {
  const auto g = GridSpec::centered(2, 4, 0.5);
  CHECK(g.origin == std::vector<double>{-1.0, -1.0});
  CHECK(g.coordinate(0, 2) == 0.0);
  CHECK(g.size() == 16);
  const auto idx = g.unravel(7);
  CHECK(idx[0] == 1);
  CHECK(idx[1] == 3);

  GridSpec bad = g;
  bad.spacing[1] = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = g;
  bad.shape[0] = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = g;
  bad.origin.pop_back();
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad.shape = {2, 2, 2, 2};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("sensor quadrature weights sum to the surface measure", "[core][geometry]") {
  for (std::size_t n : {1u, 3u, 64u, 256u, 1000u}) {
    const auto c = SensorGeometry::circle(n, 12.8);
    double sum = 0;
    for (double w : c.weights) sum += w;
    CHECK(std::abs(sum - 2 * kPi * 12.8) <= 1e-12 * 2 * kPi * 12.8);
    for (const auto& p : c.positions) CHECK(std::abs(detail::norm(p) - 12.8) <= 1e-9 * 12.8);

    const auto f = SensorGeometry::fibonacci(n, 12.8);
    sum = 0;
    for (double w : f.weights) sum += w;
    CHECK(std::abs(sum - 4 * kPi * 12.8 * 12.8) <= 1e-12 * 4 * kPi * 12.8 * 12.8);
  }
  // Fibonacci lattice is roughly uniform: centroid near the origin.
  const auto f = SensorGeometry::fibonacci(512, 1.0);
  Point c{0, 0, 0};
  for (const auto& p : f.positions)
    for (int a = 0; a < 3; ++a) c[a] += p[a] / 512.0;
  CHECK(detail::norm(c) < 0.01);
}

TEST_CASE("geometry validation rejects malformed apertures", "[core][geometry]") {
  auto g = SensorGeometry::circle(8, 5.0);
  g.positions[3][0] *= 1.001;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = SensorGeometry::circle(8, 5.0);
  g.weights[0] = -g.weights[0];
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = SensorGeometry::circle(8, 5.0);
  g.weights[1] *= 1.01;
  CHECK_THROWS_AS(g.validate(), ValidationError);
  g = SensorGeometry::circle(8, 5.0);
  g.positions[2][2] = 1e-3;
  CHECK_THROWS_AS(g.validate(), ValidationError);
}

TEST_CASE("acoustic constants", "[core]") {
  const auto k = AcousticConstants::from_parts(1.5, 2000, 2);
  CHECK(k.beta_over_cp == 1000);
  CHECK(k.pressure_scale() == Approx(2250));
  AcousticConstants bad{1.5, 1000, 3.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS((AcousticConstants{0.0, 1000, {}, {}}.validate()), ValidationError);
  CHECK_THROWS_AS((AcousticConstants{1.5, -1, {}, {}}.validate()), ValidationError);
}

TEST_CASE("container roundtrip is bit exact for every payload kind", "[core][container]") {
  std::mt19937_64 rng(GENERATE(1u, 2u, 3u, 4u, 5u));
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<std::size_t> size(1, 6);

  GridSpec g;
  const std::size_t d = 2 + rng() % 2;
  for (std::size_t a = 0; a < d; ++a) {
    g.shape.push_back(size(rng));
    g.spacing.push_back(0.01 + std::abs(nd(rng)));
    g.origin.push_back(nd(rng));
  }
  auto f = ObjectField::zeros(g);
  for (auto& v : f.values) v = nd(rng) * 1e3;
  f.attributes["note"] = "x";
  write_container(temp_file("f.pact"), f);
  const auto f2 = read_as<ObjectField>(temp_file("f.pact"));
  CHECK(f2.grid == f.grid);
  CHECK(same_bits(f2.values, f.values));
  CHECK(f2.attributes == f.attributes);

  Spectrum s;
  s.grid = g;
  for (std::size_t i = 0; i < g.size(); ++i) s.values.emplace_back(nd(rng), nd(rng));
  write_container(temp_file("s.pact"), s);
  const auto s2 = read_as<Spectrum>(temp_file("s.pact"));
  CHECK(s2.grid == s.grid);
  CHECK(s2.values == s.values);

  const std::size_t ns = size(rng);
  auto p = PressureSeries::zeros(d == 2 ? SensorGeometry::circle(ns, 4.0) : SensorGeometry::fibonacci(ns, 4.0),
                                 0.01 + std::abs(nd(rng)), size(rng) + 1);
  for (auto& v : p.samples) v = nd(rng);
  write_container(temp_file("p.pact"), p);
  const auto p2 = read_as<PressureSeries>(temp_file("p.pact"));
  CHECK(p2.geometry.dim == p.geometry.dim);
  CHECK(p2.geometry.radius == p.geometry.radius);
  CHECK(p2.geometry.positions == p.geometry.positions);
  CHECK(p2.geometry.weights == p.geometry.weights);
  CHECK(p2.dt == p.dt);
  CHECK(p2.nt == p.nt);
  CHECK(same_bits(p2.samples, p.samples));
}

TEST_CASE("container layout", "[core][container]") {
  Spectrum s;
  s.grid = GridSpec::centered(2, 2, 1.0);
  s.values.assign(4, Complex{});
  s.values[2] = {1.5, -2.25};
  const std::string bytes = encode_container(s);
  REQUIRE(bytes.substr(0, 4) == "PACT");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[5 + i])) << (8 * i);
  const Json meta = Json::parse(bytes.substr(13, len));
  CHECK(meta.at("kind") == "spectrum");
  CHECK(meta.at("dtype") == "complex128");
  const std::size_t data = 13 + len;
  REQUIRE(bytes.size() == data + 8 * 8);
  double re = 0, im = 0;
  std::memcpy(&re, bytes.data() + data + 16 * 2, 8);
  std::memcpy(&im, bytes.data() + data + 16 * 2 + 8, 8);
  CHECK(re == 1.5);
  CHECK(im == -2.25);

  // Full-size pressure file: header plus 256 x 2048 doubles.
  const auto p = PressureSeries::zeros(SensorGeometry::circle(256, 12.8), 1.0 / 30, 2048);
  const std::string pb = encode_container(p);
  std::uint64_t plen = 0;
  for (int i = 0; i < 8; ++i) plen |= static_cast<std::uint64_t>(static_cast<unsigned char>(pb[5 + i])) << (8 * i);
  CHECK(pb.size() == 13 + plen + 256u * 2048u * 8u);
}

TEST_CASE("container rejects corrupt files with distinct errors", "[core][container]") {
  auto f = ObjectField::zeros(GridSpec::centered(2, 4, 0.1));
  f.values[5] = 1;
  const std::string good = encode_container(f);

  std::string bad = good;
  bad.replace(0, 4, "XXXX");
  CHECK(decode_kind(bad) == FormatErrorKind::BadMagic);
  CHECK(decode_kind(good.substr(0, good.size() - 1)) == FormatErrorKind::Truncated);
  CHECK(decode_kind(good.substr(0, 9)) == FormatErrorKind::Truncated);
  CHECK(decode_kind(good + std::string(8, '\0')) == FormatErrorKind::SizeMismatch);
  bad = good;
  bad[4] = 2;
  CHECK(decode_kind(bad) == FormatErrorKind::BadVersion);
  bad = good;
  bad[13] = '!';
  CHECK(decode_kind(bad) == FormatErrorKind::BadMetadata);

  spit(temp_file("trunc.pact"), good.substr(0, good.size() - 1));
  try {
    (void)read_container(temp_file("trunc.pact"));
    FAIL("no error");
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatErrorKind::Truncated);
    CHECK(std::string(e.what()).find("trunc.pact") != std::string::npos);
  }
  CHECK_THROWS_AS(read_container(temp_file("does_not_exist.pact")), FileNotFoundError);
  CHECK_THROWS_AS(read_as<Spectrum>(temp_file("trunc.pact")), FormatError);
}

TEST_CASE("invalid payloads are rejected before anything is written", "[core][container]") {
  const auto path = temp_file("never.pact");
  std::filesystem::remove(path);
  auto f = ObjectField::zeros(GridSpec::centered(2, 4, 0.1));
  f.values[0] = std::nan("");
  CHECK_THROWS_AS(write_container(path, f), ValidationError);
  CHECK_FALSE(std::filesystem::exists(path));
  CHECK_THROWS_AS(write_container("/nonexistent-dir/x.pact", ObjectField::zeros(GridSpec::centered(2, 2, 1.0))),
                  IoError);
}
