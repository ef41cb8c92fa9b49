// pact: command-line front end for phantom generation, simulation,
// reconstruction, the delay-and-sum baseline, metrics, export and benchmarks.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pact/pact.hpp"

namespace {

using namespace pact;

enum ExitCode : int { kOk = 0, kGeneric = 1, kUsage = 2, kNotFound = 3, kValidation = 4, kFormat = 5, kIo = 6 };

constexpr const char* kExitCodes =
    "Exit codes:\n"
    "  0  success\n"
    "  1  unexpected error\n"
    "  2  usage error (unknown flag, bad value)\n"
    "  3  input file not found\n"
    "  4  invariant violation (invalid grid, geometry, object outside aperture, ...)\n"
    "  5  malformed container file\n"
    "  6  I/O failure\n";

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    if (!std::filesystem::exists(path)) throw FileNotFoundError(path);
    throw IoError(path, "cannot open");
  }
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  out << text;
  if (!out) throw IoError(path, "write failed");
}

/// Geometry file: {"type": "circle"|"fibonacci", "sensors": N, "radius": R} or explicit
/// {"dim", "radius", "positions", "weights"}.
SensorGeometry geometry_from_file(const std::string& path) {
  const Json j = read_json_file(path);
  try {
    if (j.contains("positions")) {
      auto g = detail::geometry_from_json(j);
      g.validate();
      return g;
    }
    const std::string type = j.at("type").get<std::string>();
    const auto n = j.at("sensors").get<std::size_t>();
    const double r = j.at("radius").get<double>();
    if (type == "circle") return SensorGeometry::circle(n, r);
    if (type == "fibonacci") return SensorGeometry::fibonacci(n, r);
    throw ValidationError("unknown geometry type '" + type + "'");
  } catch (const Json::exception& e) {
    throw ValidationError(path + ": malformed geometry: " + e.what());
  }
}

struct Medium {
  double c = 1.5;
  double beta_over_cp = 1000;
  void add(CLI::App* app) {
    app->add_option("--c", c, "speed of sound, mm/us")->capture_default_str();
    app->add_option("--beta-over-cp", beta_over_cp, "beta / C_p, arbitrary units")->capture_default_str();
  }
  AcousticConstants get() const {
    AcousticConstants k{c, beta_over_cp, std::nullopt, std::nullopt};
    k.validate();
    return k;
  }
};

struct ImageGrid {
  std::size_t n = 256;
  double dx = 0.1;
  std::size_t dim = 0;  // 0: follow the data
  void add(CLI::App* app) {
    app->add_option("--grid", n, "samples per axis of the centred image grid")->capture_default_str();
    app->add_option("--dx", dx, "image spacing, mm")->capture_default_str();
  }
  GridSpec get(std::size_t d) const { return GridSpec::centered(d, n, dx); }
};

int run(int argc, char** argv) {
  CLI::App app{"Fourier-domain photoacoustic reconstruction toolkit.\n\nUnits: mm, us, MHz, rad/mm.", "pact"};
  app.footer(kExitCodes);
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 0;
  std::uint64_t seed = 20260417;
  app.add_option("--threads", threads, "worker thread cap (0 = all cores); results do not depend on it");
  app.add_option("--seed", seed, "seed for every random draw")->capture_default_str();

  // phantom ------------------------------------------------------------------
  auto* ph = app.add_subcommand("phantom", "render a phantom spec (JSON) to an object container");
  std::string ph_spec, ph_out, ph_dump;
  ph->add_option("--spec", ph_spec, "phantom JSON; default: the built-in five-disk phantom");
  ph->add_option("-o,--output", ph_out, "output object container");
  ph->add_option("--write-default", ph_dump, "write the built-in phantom spec as JSON and exit");

  // simulate -----------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "spectral forward model: object -> pressure traces");
  std::string sim_in, sim_out, sim_geom;
  std::size_t sim_sensors = 256, sim_nt = 2048;
  double sim_radius = 12.8, sim_fs = 30.0, sim_kmax = 0;
  std::vector<double> sim_sphere;
  Medium sim_med;
  sim->add_option("-i,--input", sim_in, "object container");
  sim->add_option("-o,--output", sim_out, "output pressure container")->required();
  sim->add_option("--geometry", sim_geom, "geometry JSON (overrides --sensors/--radius)");
  sim->add_option("--sensors", sim_sensors, "sensor count (circle in 2D, Fibonacci sphere in 3D)")->capture_default_str();
  sim->add_option("--radius", sim_radius, "aperture radius R_S, mm")->capture_default_str();
  sim->add_option("--fs", sim_fs, "sampling rate, MHz")->capture_default_str();
  sim->add_option("--nt", sim_nt, "samples per trace")->capture_default_str();
  sim->add_option("--kmax", sim_kmax, "spatial band of the model, rad/mm (0 = temporal Nyquist / c)");
  sim->add_option("--sphere", sim_sphere, "analytic 3D ball instead of an object: cx,cy,cz,radius,amplitude")
      ->delimiter(',')
      ->expected(5);
  sim_med.add(sim);

  // noise --------------------------------------------------------------------
  auto* noi = app.add_subcommand("noise", "add white Gaussian noise scaled to the global peak |p|");
  std::string noi_in, noi_out;
  double noi_level = 0.05;
  std::optional<std::uint64_t> noi_seed;
  noi->add_option("-i,--input", noi_in, "pressure container")->required();
  noi->add_option("-o,--output", noi_out, "output pressure container")->required();
  noi->add_option("--level", noi_level, "noise sigma as a fraction of max |p|")->capture_default_str();
  noi->add_option("--seed", noi_seed, "seed (defaults to the global --seed)");

  // reconstruct --------------------------------------------------------------
  auto* rec = app.add_subcommand("reconstruct", "Fourier-domain reconstruction: pressure -> image");
  std::string rec_in, rec_out, rec_report, rec_interp = "nearest", rec_spec;
  std::size_t rec_os = 2, rec_pad = 8;
  bool rec_timings = false;
  ImageGrid rec_grid;
  Medium rec_med;
  rec->add_option("-i,--input", rec_in, "pressure container")->required();
  rec->add_option("-o,--output", rec_out, "output image container")->required();
  rec_grid.add(rec);
  rec->add_option("--oversample", rec_os, "k-grid oversampling (>= 2 keeps edge artefacts out of the image)")
      ->capture_default_str();
  rec->add_option("--pad", rec_pad, "temporal zero-padding factor")->capture_default_str();
  rec->add_option("--interp", rec_interp, "nearest | linear")->check(CLI::IsMember({"nearest", "linear"}))
      ->capture_default_str();
  rec->add_option("--report", rec_report, "write the reconstruction report (JSON)");
  rec->add_flag("--timings", rec_timings, "include wall-clock stage times in the report");
  rec->add_option("--spectrum", rec_spec, "also write the accumulated k-space spectrum container");
  rec_med.add(rec);

  // baseline -----------------------------------------------------------------
  auto* bas = app.add_subcommand("baseline", "delay-and-sum backprojection: pressure -> image");
  std::string bas_in, bas_out;
  ImageGrid bas_grid;
  bas_grid.dx = 0.07;
  Medium bas_med;
  bas->add_option("-i,--input", bas_in, "pressure container")->required();
  bas->add_option("-o,--output", bas_out, "output image container")->required();
  bas_grid.add(bas);
  bas_med.add(bas);

  // metrics ------------------------------------------------------------------
  auto* met = app.add_subcommand("metrics", "compare an image with a reference; extract profiles");
  std::string met_in, met_ref, met_profile;
  bool met_nrmse = false;
  std::vector<double> met_roi;
  std::size_t met_axis = 0;
  met->add_option("-i,--input", met_in, "image container")->required();
  met->add_option("--reference", met_ref, "reference object (resampled onto the image grid if needed)");
  met->add_flag("--nrmse", met_nrmse, "print NRMSE against --reference");
  met->add_option("--roi", met_roi, "region lo..hi per axis: x0,y0[,z0],x1,y1[,z1]")->delimiter(',');
  met->add_option("--profile", met_profile, "write the central profile as CSV");
  met->add_option("--axis", met_axis, "profile axis")->capture_default_str();

  // export-pgm ---------------------------------------------------------------
  auto* pgm = app.add_subcommand("export-pgm", "write a 2D image as a 16-bit PGM");
  std::string pgm_in, pgm_out;
  std::vector<double> pgm_window{-0.2, 1.2};
  pgm->add_option("-i,--input", pgm_in, "image container")->required();
  pgm->add_option("-o,--output", pgm_out, "output .pgm")->required();
  pgm->add_option("--window", pgm_window, "greyscale window lo,hi")->delimiter(',')->expected(2)
      ->capture_default_str();

  // bench --------------------------------------------------------------------
  auto* ben = app.add_subcommand("bench", "time reconstruction stages against delay-and-sum over N (CSV)");
  std::vector<std::size_t> ben_sizes{64, 128, 256};
  std::size_t ben_sensors = 256, ben_repeats = 3;
  std::string ben_out;
  bool ben_no_baseline = false;
  ben->add_option("--sizes", ben_sizes, "image sizes N")->delimiter(',')->capture_default_str();
  ben->add_option("--sensors", ben_sensors, "sensor count")->capture_default_str();
  ben->add_option("--repeats", ben_repeats, "repetitions; the minimum is reported")->capture_default_str();
  ben->add_option("-o,--output", ben_out, "CSV path (default: stdout)");
  ben->add_flag("--no-baseline", ben_no_baseline, "skip delay-and-sum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  set_thread_count(threads);

  if (*ph) {
    if (!ph_dump.empty()) {
      write_text(ph_dump, to_json(default_disk_phantom()).dump(2) + "\n");
      return kOk;
    }
    if (ph_out.empty()) throw CLI::RequiredError("--output");
    const auto obj = ph_spec.empty() ? make_disk_phantom(default_disk_phantom())
                                     : make_phantom(phantom_from_json(read_json_file(ph_spec)));
    write_container(ph_out, obj);
  } else if (*sim) {
    const auto consts = sim_med.get();
    const TimeAxis time{1.0 / sim_fs, sim_nt};
    time.validate();
    PressureSeries data;
    if (!sim_sphere.empty()) {
      const auto geom = sim_geom.empty() ? SensorGeometry::fibonacci(sim_sensors, sim_radius) : geometry_from_file(sim_geom);
      data = analytic_sphere_forward({sim_sphere[0], sim_sphere[1], sim_sphere[2]}, sim_sphere[3], sim_sphere[4], geom,
                                     time, consts);
    } else {
      if (sim_in.empty()) throw CLI::RequiredError("--input or --sphere");
      const auto obj = read_as<ObjectField>(sim_in);
      const auto geom = !sim_geom.empty()        ? geometry_from_file(sim_geom)
                        : obj.grid.dim() == 2 ? SensorGeometry::circle(sim_sensors, sim_radius)
                                              : SensorGeometry::fibonacci(sim_sensors, sim_radius);
      ForwardOptions opts;
      opts.k_max = sim_kmax;
      data = spectral_forward(obj, geom, time, consts, opts);
    }
    write_container(sim_out, data);
  } else if (*noi) {
    const auto data = read_as<PressureSeries>(noi_in);
    write_container(noi_out, add_noise(data, noi_level, noi_seed.value_or(seed)));
  } else if (*rec) {
    const auto data = read_as<PressureSeries>(rec_in);
    ReconParams p;
    p.grid = rec_grid.get(data.geometry.dim);
    p.oversampling = rec_os;
    p.pad_factor = rec_pad;
    p.interpolation = parse_interpolation(rec_interp);
    const auto r = reconstruct(data, p, rec_med.get());
    write_container(rec_out, r.image);
    if (!rec_spec.empty()) write_container(rec_spec, r.spectrum);
    if (!rec_report.empty()) write_text(rec_report, r.report.to_json(rec_timings).dump(2) + "\n");
  } else if (*bas) {
    const auto data = read_as<PressureSeries>(bas_in);
    write_container(bas_out, delay_and_sum(data, bas_grid.get(data.geometry.dim), bas_med.get()));
  } else if (*met) {
    const auto img = read_as<ObjectField>(met_in);
    Json out = Json::object();
    if (met_nrmse) {
      if (met_ref.empty()) throw CLI::RequiredError("--reference");
      auto ref = read_as<ObjectField>(met_ref);
      if (!same_grid(ref.grid, img.grid)) ref = sample_onto(ref, img.grid);
      std::optional<Box> roi;
      const std::size_t d = img.grid.dim();
      if (!met_roi.empty()) {
        if (met_roi.size() != 2 * d) throw ValidationError("--roi needs 2 x dim values");
        Box b;
        for (std::size_t a = 0; a < d; ++a) {
          b.lo[a] = met_roi[a];
          b.hi[a] = met_roi[d + a];
        }
        roi = b;
      }
      out["nrmse"] = nrmse(img, ref, roi);
    }
    if (!met_profile.empty()) write_profile_csv(met_profile, central_profile(img, met_axis));
    out["min"] = *std::min_element(img.values.begin(), img.values.end());
    out["max"] = *std::max_element(img.values.begin(), img.values.end());
    std::cout << out.dump() << '\n';
  } else if (*pgm) {
    write_pgm(pgm_out, read_as<ObjectField>(pgm_in), pgm_window[0], pgm_window[1]);
  } else if (*ben) {
    // Gaussian object near the centre; the field of view stays inside the aperture for delay-and-sum.
    const AcousticConstants consts{};
    const auto geom = SensorGeometry::circle(ben_sensors, 12.8);
    const auto obj = make_gaussian_phantom({{0.0, 0.0, 0.0}, 0.5, 1.0, 2}, GridSpec::centered(2, 121, 0.05));
    const auto data = spectral_forward(obj, geom, TimeAxis{1.0 / 30.0, 2048}, consts);
    std::ostringstream csv;
    csv << "stage,N,sensors,seconds\n";
    auto row = [&](const char* stage, std::size_t n, double s) {
      csv << stage << ',' << n << ',' << ben_sensors << ',' << s << '\n';
    };
    for (const std::size_t n : ben_sizes) {
      ReconParams p;
      p.grid = GridSpec::centered(2, n, 17.92 / static_cast<double>(n));
      ReconReport best;
      best.temporal_fft_seconds = best.sample_seconds = best.accumulate_seconds = best.invert_seconds =
          best.total_seconds = 1e300;
      for (std::size_t r = 0; r < ben_repeats; ++r) {
        const auto rep = reconstruct(data, p, consts).report;
        best.temporal_fft_seconds = std::min(best.temporal_fft_seconds, rep.temporal_fft_seconds);
        best.sample_seconds = std::min(best.sample_seconds, rep.sample_seconds);
        best.accumulate_seconds = std::min(best.accumulate_seconds, rep.accumulate_seconds);
        best.invert_seconds = std::min(best.invert_seconds, rep.invert_seconds);
        best.total_seconds = std::min(best.total_seconds, rep.total_seconds);
      }
      row("temporal_fft", n, best.temporal_fft_seconds);
      row("sample", n, best.sample_seconds);
      row("accumulate", n, best.accumulate_seconds);
      row("invert", n, best.invert_seconds);
      row("fourier_total", n, best.total_seconds);
      if (!ben_no_baseline) {
        double das = 1e300;
        for (std::size_t r = 0; r < ben_repeats; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          (void)delay_and_sum(data, p.grid, consts);
          das = std::min(das, detail::seconds_since(t0));
        }
        row("delay_and_sum", n, das);
      }
    }
    if (ben_out.empty())
      std::cout << csv.str();
    else
      write_text(ben_out, csv.str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::RequiredError& e) {
    std::fprintf(stderr, "pact: error: missing %s\n", e.what());
    return kUsage;
  } catch (const pact::FileNotFoundError& e) {
    std::fprintf(stderr, "pact: error: %s\n", e.what());
    return kNotFound;
  } catch (const pact::FormatError& e) {
    std::fprintf(stderr, "pact: error: %s\n", e.what());
    return kFormat;
  } catch (const pact::IoError& e) {
    std::fprintf(stderr, "pact: error: %s\n", e.what());
    return kIo;
  } catch (const pact::ValidationError& e) {
    std::fprintf(stderr, "pact: error: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pact: error: %s\n", e.what());
    return kGeneric;
  }
}
