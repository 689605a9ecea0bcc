// twinmap: simulate, fit and plot split-detection noise maps of twin beams.
//
// Exit codes: 0 success, 2 input or schema error, 3 physics-domain error,
// 4 fit did not converge (the report is still written).

#include <twinmap/mapfile.hpp>
#include <twinmap/plot.hpp>
#include <twinmap/reconstruct.hpp>
#include <twinmap/report.hpp>
#include <twinmap/scene.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

enum Exit { kOk = 0, kInput = 2, kDomain = 3, kNoConvergence = 4 };

void write_text(const std::string &path, const std::string &text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw twinmap::InputError("cannot write '" + path + "'");
  out << text;
}

int report_input_error(const twinmap::InputError &e, const std::string &file) {
  std::cerr << "error: ";
  if (!file.empty())
    std::cerr << file << ':';
  if (e.line() > 0) {
    std::cerr << e.line() << ':';
    if (e.column() > 0)
      std::cerr << e.column() << ':';
  }
  std::cerr << (file.empty() && e.line() == 0 ? "" : " ") << e.what() << '\n';
  return kInput;
}

} // namespace

int main(int argc, char **argv) {
  using namespace twinmap;

  CLI::App app{"twinmap: coherence-area maps of twin beams from split-detection noise"};
  app.require_subcommand(1);

  // Shared options. Absence of --seed means the scene's seed, which itself
  // defaults to 0; no command ever seeds from the clock.
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;

  auto *sim = app.add_subcommand("simulate", "run a scene and write its noise map (CSV)");
  std::string scene_path, sim_out;
  sim->add_option("scene", scene_path, "scene file (YAML)")->required();
  sim->add_option("-o,--out", sim_out, "output map file ('-' for stdout)")->required();
  sim->add_option("--seed", seed, "Monte-Carlo seed (overrides the scene)");
  sim->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto *fit = app.add_subcommand("fit", "recover coherence areas from one or more map files");
  std::vector<std::string> map_paths;
  std::string fit_out;
  std::size_t k_min = 1, k_max = 4, starts_per_pair = 5, max_iter = 2000;
  double pump_x = 0, pump_y = 0, conj_scale = 0.5, center_lo = -1.2, center_hi = 1.2;
  double gain_hi = 3.0, cross = 0.0;
  std::optional<double> fixed_sigma;
  bool asymmetric = false;
  fit->add_option("maps", map_paths, "map files sharing one sweep axis")->required();
  fit->add_option("-o,--out", fit_out, "JSON report ('-' for stdout)")->required();
  fit->add_option("--k-min", k_min, "smallest number of pairs")->check(CLI::PositiveNumber);
  fit->add_option("--k-max", k_max, "largest number of pairs")->check(CLI::PositiveNumber);
  fit->add_option("--pump-x", pump_x, "pump center x (mm)");
  fit->add_option("--pump-y", pump_y, "pump center y (mm)");
  fit->add_option("--conj-scale", conj_scale, "conjugate / probe image scale")->check(CLI::PositiveNumber);
  fit->add_option("--center-min", center_lo, "lower bound of pair centers (mm)");
  fit->add_option("--center-max", center_hi, "upper bound of pair centers (mm)");
  fit->add_option("--gain-max", gain_hi, "upper bound of pair gains");
  fit->add_option("--cross", cross, "pair coordinate across the sweep axis (mm)");
  fit->add_option("--fixed-sigma", fixed_sigma, "hold every pair sigma at this value (mm)")
      ->check(CLI::PositiveNumber);
  fit->add_flag("--asymmetric", asymmetric, "also fit a conjugate shift per pair");
  fit->add_option("--starts-per-pair", starts_per_pair, "multistart count per pair")->check(CLI::PositiveNumber);
  fit->add_option("--max-iterations", max_iter, "simplex iteration cap")->check(CLI::PositiveNumber);
  fit->add_option("--seed", seed, "multistart seed");
  fit->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto *plot = app.add_subcommand("plot", "render a map file as SVG");
  std::string plot_in, plot_out, title;
  double db_range = 0;
  plot->add_option("map", plot_in, "map file")->required();
  plot->add_option("-o,--out", plot_out, "output SVG ('-' for stdout)")->required();
  plot->add_option("--title", title, "plot title");
  plot->add_option("--range", db_range, "color scale half-range in dB (default: data maximum)");

  auto *modes = app.add_subcommand("modecount", "order-of-magnitude count of supported spatial modes");
  double waist = 0, wavelength = 0, angle = 0;
  modes->add_option("--waist", waist, "pump waist (mm)")->required();
  modes->add_option("--wavelength", wavelength, "wavelength (nm)")->required();
  modes->add_option("--angle", angle, "acceptance half-angle (mrad)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  std::string current_file;
  try {
    if (*sim) {
      current_file = scene_path;
      Scene scene = load_scene(scene_path);
      current_file.clear();
      if (seed)
        scene.plan.settings.engine.seed = *seed;
      scene.plan.settings.engine.threads = threads;
      NoiseMapFile file;
      file.map = simulate_scene(scene);
      write_text(sim_out, write_map(file));
      return kOk;
    }

    if (*fit) {
      if (k_min > k_max)
        throw InputError("--k-min must not exceed --k-max");
      std::vector<NoiseMap> maps;
      for (const auto &p : map_paths) {
        current_file = p;
        maps.push_back(load_map(p).map);
      }
      current_file.clear();

      FitModel model;
      model.pump_center = {pump_x, pump_y};
      model.conj_scale = conj_scale;
      model.center = {center_lo, center_hi};
      model.gain.hi = gain_hi;
      model.cross_coordinate = cross;
      model.symmetric = !asymmetric;
      if (fixed_sigma) {
        model.fit_sigma = false;
        model.fixed_sigma = *fixed_sigma;
      }
      OptimizerOptions opt;
      opt.starts_per_pair = starts_per_pair;
      opt.max_iterations = max_iter;
      opt.seed = seed.value_or(0);
      opt.threads = threads;

      std::vector<std::size_t> ks;
      for (std::size_t k = k_min; k <= k_max; ++k)
        ks.push_back(k);

      FitReportInput report;
      report.map_paths = map_paths;
      report.model = model;
      report.options = opt;
      report.axis = maps.front().settings.config.sweep_axis;
      report.selection = select_model(maps, model, ks, opt);
      write_text(fit_out, fit_report_json(report));

      const auto &sel = report.selection;
      const auto best = static_cast<std::size_t>(
          std::find(sel.k_values.begin(), sel.k_values.end(), sel.best_k) - sel.k_values.begin());
      std::cerr << "best K = " << sel.best_k << ", residual " << sel.fits[best].residual << " dB\n";
      for (const auto &f : sel.fits)
        if (!f.converged && f.pairs.size() != sel.best_k)
          std::cerr << "note: fit with K = " << f.pairs.size() << " stopped at the iteration cap\n";
      if (!sel.fits[best].converged) {
        std::cerr << "error: the selected fit (K = " << sel.best_k << ") did not converge\n";
        return kNoConvergence;
      }
      return kOk;
    }

    if (*plot) {
      current_file = plot_in;
      const NoiseMapFile file = load_map(plot_in);
      current_file.clear();
      PlotOptions po;
      po.title = title;
      po.db_range = db_range;
      write_text(plot_out, render_svg(file.map, po));
      return kOk;
    }

    if (*modes) {
      std::printf("%.6g\n", estimate_mode_count(waist, wavelength, angle));
      return kOk;
    }
  } catch (const InputError &e) {
    return report_input_error(e, current_file);
  } catch (const DomainError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDomain;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  return kInput;
}
