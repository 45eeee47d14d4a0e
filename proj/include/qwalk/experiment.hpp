#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qwalk/error.hpp"
#include "qwalk/evolution.hpp"
#include "qwalk/heatmap.hpp"
#include "qwalk/lattice.hpp"
#include "qwalk/observables.hpp"

namespace qwalk {

inline constexpr std::string_view kVersion = "1.0.0";
/// Environment variable naming the root under which runs without an
/// explicit output directory are written.
inline constexpr const char* kOutputRootEnv = "QWALK_OUTPUT_ROOT";

enum class Observable {
  grids,
  variance,
  p0,
  polya,
  slope,
  decay,
  projections,
  similarity
};

std::string_view to_string(Observable o) noexcept;

struct ZRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;

  /// start + k * step for every k with the result <= stop.
  std::vector<double> expand() const;
};

struct FitWindow {
  double z_min = 0.0;
  double z_max = 0.0;
};

/// Everything needed to reproduce one run.
struct ExperimentConfig {
  std::string name = "experiment";
  LatticeSpec lattice;
  double beta = 0.0;
  std::optional<Site> injection;  // empty means the central waveguide
  std::vector<double> z_values;
  std::optional<ZRange> z_range;  // set when z was given as a range
  Backend backend = Backend::spectral;
  KrylovOptions krylov;
  std::vector<Observable> observables = {Observable::grids,
                                         Observable::variance, Observable::p0};
  bool classical = false;
  double polya_period = kDefaultPolyaPeriod;
  std::size_t polya_terms = kDefaultPolyaTerms;
  std::optional<FitWindow> slope_window;
  std::optional<FitWindow> decay_window;
  std::optional<std::string> reference_grid;
  std::optional<std::string> out_dir;
  bool svg = true;
  HeatmapStyle heatmap;

  bool wants(Observable o) const;
  Site injection_site(const Lattice& lattice) const;
};

/// Parses and validates a JSON experiment description. Errors are reported
/// as "<source>:<line>: message".
ExperimentConfig parse_config(std::string_view text,
                              const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Full, normalized JSON text of a config (parse_config round-trips it).
std::string config_to_json(const ExperimentConfig& config);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<Backend> backend;
  std::optional<bool> svg;
  unsigned threads = 1;
};

struct RunResult {
  std::filesystem::path out_dir;
  std::vector<std::string> files;
  std::map<std::string, double> scalars;
};

/// Runs lattice -> Hamiltonian -> evolution -> observables and writes all
/// outputs plus manifest.json into the output directory. On failure the
/// manifest records status "failed" and the failing stage before the
/// exception propagates as a StageError.
RunResult run_experiment(const ExperimentConfig& config,
                         const RunOptions& options = {});

/// Output directory a run would use, given CLI overrides and environment.
std::filesystem::path resolve_out_dir(const ExperimentConfig& config,
                                      const RunOptions& options);

/// An error annotated with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Recomputes observables from a run directory (manifest.json plus
/// grid_*.csv) and writes them to `out_dir`.
RunResult analyze_trace_dir(const std::filesystem::path& trace_dir,
                            const std::filesystem::path& out_dir);

/// Fraction of probability within `margin` sites of any edge.
double edge_mass(const ProbabilityGrid& grid, std::size_t margin = 2);

/// Largest prefix of the trace whose grids keep edge_mass below
/// `threshold`; returns the window (first z > 0, last such z), or nothing if
/// fewer than two positive samples qualify.
std::optional<FitWindow> pre_boundary_window(const EvolutionTrace& trace,
                                             std::size_t margin = 2,
                                             double threshold = 0.01);

}  // namespace qwalk
