// Command-line front end: run, validate, render, observables, compare.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "qwalk/csv_io.hpp"
#include "qwalk/error.hpp"
#include "qwalk/experiment.hpp"
#include "qwalk/heatmap.hpp"
#include "qwalk/numeric_format.hpp"
#include "qwalk/observables.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

std::vector<qwalk::GridRecord> load_grids(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qwalk::InvalidArgument("cannot open " + path.string());
  return qwalk::read_grid_csv(in, path.string());
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& backend, bool no_svg, unsigned threads) {
  const qwalk::ExperimentConfig config = qwalk::load_config(config_path);
  qwalk::RunOptions options;
  if (!out_dir.empty()) options.out_dir = out_dir;
  if (!backend.empty()) options.backend = qwalk::parse_backend(backend);
  if (no_svg) options.svg = false;
  options.threads = threads;
  const qwalk::RunResult result = qwalk::run_experiment(config, options);
  std::cout << "wrote " << result.files.size() << " files to "
            << result.out_dir.string() << "\n";
  for (const auto& [name, value] : result.scalars) {
    std::cout << name << " = " << qwalk::format_double(value) << "\n";
  }
  return 0;
}

int cmd_validate(const std::string& config_path) {
  const qwalk::ExperimentConfig config = qwalk::load_config(config_path);
  std::cout << config_path << ": ok (" << config.lattice.rows << "x"
            << config.lattice.cols << " lattice, " << config.z_values.size()
            << " z samples, " << qwalk::to_string(config.backend)
            << " backend)\n";
  return 0;
}

int cmd_render(const std::string& grid_path, const std::string& out_dir,
               double dh_um, double dv_um, const qwalk::HeatmapStyle& style) {
  const fs::path in(grid_path);
  const auto records = load_grids(in);
  const fs::path dir = out_dir.empty() ? in.parent_path() : fs::path(out_dir);
  if (!dir.empty()) fs::create_directories(dir);
  for (std::size_t k = 0; k < records.size(); ++k) {
    qwalk::LatticeSpec spec;
    spec.rows = records[k].grid.rows();
    spec.cols = records[k].grid.cols();
    spec.dh_um = dh_um;
    spec.dv_um = dv_um;
    const qwalk::Lattice lattice(spec);
    std::string name = in.stem().string();
    if (records.size() > 1) name += "_" + std::to_string(k);
    const fs::path out = dir / (name + ".svg");
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    os << qwalk::render_heatmap(records[k].grid, lattice, style);
    if (!os) throw qwalk::Error("failed writing " + out.string());
    std::cout << out.string() << "\n";
  }
  return 0;
}

int cmd_observables(const std::string& trace_dir, const std::string& out_dir) {
  const fs::path dir(trace_dir);
  const fs::path out = out_dir.empty() ? dir / "analysis" : fs::path(out_dir);
  const qwalk::RunResult result = qwalk::analyze_trace_dir(dir, out);
  std::cout << "wrote " << result.files.size() << " files to "
            << out.string() << "\n";
  for (const auto& [name, value] : result.scalars) {
    std::cout << name << " = " << qwalk::format_double(value) << "\n";
  }
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path) {
  const auto a = load_grids(a_path);
  const auto b = load_grids(b_path);
  if (a.size() != b.size()) {
    throw qwalk::InvalidArgument("files hold different numbers of grids (" +
                                 std::to_string(a.size()) + " vs " +
                                 std::to_string(b.size()) + ")");
  }
  if (a.size() == 1) {
    std::cout << qwalk::format_double(qwalk::similarity(a[0].grid, b[0].grid))
              << "\n";
    return 0;
  }
  std::cout << "z,similarity\n";
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::cout << qwalk::format_double(a[k].z) << ','
              << qwalk::format_double(qwalk::similarity(a[k].grid, b[k].grid))
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time quantum walks on 2D waveguide lattices"};
  app.set_version_flag("--version", std::string(qwalk::kVersion));
  app.require_subcommand(1);

  std::string out_dir;
  std::string backend;
  bool no_svg = false;
  unsigned threads = 1;

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out-dir", out_dir,
                  std::string("Output directory (default: config output.dir, "
                              "else $") +
                      qwalk::kOutputRootEnv + "/<name>)");
  run->add_option("--backend", backend, "Evolution backend")
      ->check(CLI::IsMember({"spectral", "krylov"}));
  run->add_flag("--no-svg", no_svg, "Skip heatmap rendering");
  run->add_option("--threads", threads, "Worker threads")
      ->check(CLI::Range(1u, 1024u));

  auto* validate = app.add_subcommand("validate", "Check a config and exit");
  validate->add_option("config", config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);

  std::string grid_path;
  double dh_um = 13.5;
  double dv_um = 15.0;
  qwalk::HeatmapStyle style;
  auto* render = app.add_subcommand("render", "Render a grid CSV as SVG");
  render->add_option("grid", grid_path, "Grid CSV (z,row,col,probability)")
      ->required()
      ->check(CLI::ExistingFile);
  render->add_option("--out-dir", out_dir, "Directory for the SVG files");
  render->add_option("--dh-um", dh_um, "Horizontal spacing in um");
  render->add_option("--dv-um", dv_um, "Vertical spacing in um");
  render->add_option("--spot-sigma", style.spot_sigma_px, "Spot blur in px");
  render->add_option("--canvas", style.canvas_px, "Canvas size in px");
  render->add_option("--colormap", style.colormap, "viridis, inferno or gray");

  std::string trace_dir;
  auto* observables =
      app.add_subcommand("observables", "Recompute observables of a run");
  observables->add_option("trace_dir", trace_dir, "Run output directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  observables->add_option("--out-dir", out_dir,
                          "Output directory (default: <trace_dir>/analysis)");

  std::string grid_a;
  std::string grid_b;
  auto* compare = app.add_subcommand("compare", "Print the similarity of two grids");
  compare->add_option("grid_a", grid_a)->required()->check(CLI::ExistingFile);
  compare->add_option("grid_b", grid_b)->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, out_dir, backend, no_svg, threads);
    if (*validate) return cmd_validate(config_path);
    if (*render) return cmd_render(grid_path, out_dir, dh_um, dv_um, style);
    if (*observables) return cmd_observables(trace_dir, out_dir);
    if (*compare) return cmd_compare(grid_a, grid_b);
  } catch (const qwalk::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.stage() == "evolution" || e.stage() == "classical") {
      return kExitNumerical;
    }
    return e.stage() == "output" ? kExitIo : kExitInvalid;
  } catch (const qwalk::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const qwalk::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
