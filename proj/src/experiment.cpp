#include "qwalk/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <set>
#include <sstream>

#include "qwalk/classical.hpp"
#include "qwalk/csv_io.hpp"
#include "qwalk/error.hpp"
#include "qwalk/hamiltonian.hpp"
#include "qwalk/numeric_format.hpp"

namespace qwalk {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array kObservableNames = {
    std::pair{Observable::grids, "grids"},
    std::pair{Observable::variance, "variance"},
    std::pair{Observable::p0, "p0"},
    std::pair{Observable::polya, "polya"},
    std::pair{Observable::slope, "slope"},
    std::pair{Observable::decay, "decay"},
    std::pair{Observable::projections, "projections"},
    std::pair{Observable::similarity, "similarity"},
};

// 1-based line of the byte at `offset`.
std::size_t line_of(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + offset, '\n'));
}

// Walks a JSON object while tracking the key path, so semantic errors can
// be anchored to the line where the offending key appears.
class ConfigReader {
 public:
  ConfigReader(std::string_view text, std::string source)
      : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path,
                         const std::string& what) const {
    std::string dotted;
    for (const std::string& p : path) dotted += (dotted.empty() ? "" : ".") + p;
    throw InvalidArgument(source_ + ":" + std::to_string(locate(path)) + ": " +
                          (dotted.empty() ? "" : dotted + ": ") + what);
  }

  // Line of the last key in `path`, searched in nesting order.
  std::size_t locate(const std::vector<std::string>& path) const {
    std::size_t pos = 0;
    std::size_t found = std::string_view::npos;
    for (const std::string& key : path) {
      const std::size_t at = text_.find("\"" + key + "\"", pos);
      if (at == std::string_view::npos) break;
      found = at;
      pos = at + key.size() + 2;
    }
    return found == std::string_view::npos ? 1 : line_of(text_, found);
  }

  void reject_unknown(const json& obj, const std::vector<std::string>& path,
                      std::initializer_list<std::string_view> known) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
      if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
        auto where = path;
        where.push_back(item.key());
        fail(where, "unknown key");
      }
    }
  }

  double number(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "expected a finite number");
    return d;
  }

  double positive(const json& v, const std::vector<std::string>& path) const {
    const double d = number(v, path);
    if (!(d > 0.0)) fail(path, "must be > 0");
    return d;
  }

  std::size_t count(const json& v, const std::vector<std::string>& path,
                    std::size_t min) const {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      fail(path, "expected an integer");
    }
    const auto n = v.get<long long>();
    if (n < static_cast<long long>(min)) {
      fail(path, "must be >= " + std::to_string(min));
    }
    return static_cast<std::size_t>(n);
  }

  std::string string(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }

  FitWindow window(const json& v, const std::vector<std::string>& path) const {
    reject_unknown(v, path, {"z_min", "z_max"});
    if (!v.contains("z_min") || !v.contains("z_max")) {
      fail(path, "needs z_min and z_max");
    }
    FitWindow w{positive(v["z_min"], with(path, "z_min")),
                positive(v["z_max"], with(path, "z_max"))};
    if (!(w.z_max > w.z_min)) fail(path, "z_max must exceed z_min");
    return w;
  }

  static std::vector<std::string> with(std::vector<std::string> path,
                                       std::string key) {
    path.push_back(std::move(key));
    return path;
  }

 private:
  std::string_view text_;
  std::string source_;
};

json coupling_json(const CouplingModel& m) {
  return {{"amp_h", m.amp_h},
          {"kappa_h", m.kappa_h},
          {"amp_v", m.amp_v},
          {"kappa_v", m.kappa_v}};
}

std::string zero_padded(std::size_t k, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(
      4, std::to_string(count == 0 ? 0 : count - 1).size());
  std::string s = std::to_string(k);
  return std::string(width - std::min(width, s.size()), '0') + s;
}

class OutputWriter {
 public:
  explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) {}

  template <typename Fn>
  void write(const std::string& name, Fn&& fill) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.imbue(std::locale::classic());
    fill(out);
    out.flush();
    if (!out) throw Error("failed writing " + path.string());
    files_.push_back(name);
  }

  const std::vector<std::string>& files() const noexcept { return files_; }
  const fs::path& dir() const noexcept { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProbabilityGrid read_single_grid(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  auto records = read_grid_csv(in, path.string());
  if (records.size() != 1) {
    throw InvalidArgument(path.string() + ": expected exactly one grid, found " +
                          std::to_string(records.size()));
  }
  return std::move(records.front().grid);
}

template <typename Fn>
auto timed_stage(const std::string& stage, json& timings, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    timings[stage] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto result = fn();
      finish();
      return result;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

// Writes observables shared by `run` and `observables`: series CSVs and
// fitted scalars. Returns the scalars.
std::map<std::string, double> write_observables(
    const ExperimentConfig& config, const EvolutionTrace& trace, Site origin,
    OutputWriter& writer, const std::string& prefix) {
  std::map<std::string, double> scalars;
  const bool need_variance = config.wants(Observable::variance) ||
                             config.wants(Observable::slope);
  const bool need_p0 = config.wants(Observable::p0) ||
                       config.wants(Observable::polya) ||
                       config.wants(Observable::decay);
  const std::optional<FitWindow> auto_window = pre_boundary_window(trace);

  if (need_variance) {
    const ObservableSeries var = variance_series(trace, origin);
    if (config.wants(Observable::variance)) {
      writer.write(prefix + "variance.csv",
                   [&](std::ostream& o) { write_series_csv(o, var); });
    }
    if (config.wants(Observable::slope)) {
      const std::optional<FitWindow> w =
          config.slope_window ? config.slope_window : auto_window;
      if (!w) {
        throw InvalidArgument(
            "slope: no pre-boundary window with two positive z samples; set "
            "slope_window explicitly");
      }
      scalars[prefix + "slope"] = loglog_slope(var, w->z_min, w->z_max);
      scalars[prefix + "slope_z_min"] = w->z_min;
      scalars[prefix + "slope_z_max"] = w->z_max;
    }
  }
  if (need_p0) {
    const ObservableSeries p0 = return_probability(trace, origin);
    if (config.wants(Observable::p0)) {
      writer.write(prefix + "p0.csv",
                   [&](std::ostream& o) { write_series_csv(o, p0); });
    }
    if (config.wants(Observable::decay)) {
      const std::optional<FitWindow> w =
          config.decay_window ? config.decay_window : auto_window;
      if (!w) {
        throw InvalidArgument(
            "decay: no pre-boundary window with two positive z samples; set "
            "decay_window explicitly");
      }
      scalars[prefix + "decay_exponent"] =
          decay_exponent(p0, w->z_min, w->z_max);
      scalars[prefix + "decay_z_min"] = w->z_min;
      scalars[prefix + "decay_z_max"] = w->z_max;
    }
    if (config.wants(Observable::polya)) {
      const ObservableSeries running =
          polya_series(p0, config.polya_period, config.polya_terms);
      writer.write(prefix + "polya.csv",
                   [&](std::ostream& o) { write_series_csv(o, running); });
      scalars[prefix + "polya"] = running.values.back();
    }
  }
  if (config.wants(Observable::projections)) {
    for (std::size_t k = 0; k < trace.grids.size(); ++k) {
      writer.write(prefix + "projections_" +
                       zero_padded(k, trace.grids.size()) + ".csv",
                   [&](std::ostream& o) {
                     write_projections_csv(o, trace.z_values[k],
                                           projections(trace.grids[k]));
                   });
    }
  }
  return scalars;
}

json scalars_json(const std::map<std::string, double>& scalars) {
  json out = json::object();
  for (const auto& [k, v] : scalars) out[k] = v;
  return out;
}

}  // namespace

std::string_view to_string(Observable o) noexcept {
  for (const auto& [value, name] : kObservableNames) {
    if (value == o) return name;
  }
  return "?";
}

std::vector<double> ZRange::expand() const {
  if (!(step > 0.0) || start < 0.0 || stop < start) {
    throw InvalidArgument("z range needs 0 <= start <= stop and step > 0");
  }
  std::vector<double> out;
  const double slack = 1e-9 * step;
  for (std::size_t k = 0;; ++k) {
    const double z = start + static_cast<double>(k) * step;
    if (z > stop + slack) break;
    out.push_back(z);
    if (out.size() > 10'000'000) throw InvalidArgument("z range too long");
  }
  return out;
}

bool ExperimentConfig::wants(Observable o) const {
  return std::find(observables.begin(), observables.end(), o) !=
         observables.end();
}

Site ExperimentConfig::injection_site(const Lattice& lattice) const {
  const Site s = injection.value_or(lattice.center());
  if (!lattice.contains(s)) {
    throw InvalidArgument("injection site lies outside the lattice");
  }
  return s;
}

ExperimentConfig parse_config(std::string_view text,
                              const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(source + ":" +
                          std::to_string(line_of(text, e.byte > 0 ? e.byte - 1
                                                                  : 0)) +
                          ": malformed JSON: " + e.what());
  }
  const ConfigReader rd(text, source);
  using P = std::vector<std::string>;

  // A run manifest embeds its config; accept it directly.
  if (root.is_object() && root.contains("manifest_version") &&
      root.contains("config")) {
    return parse_config(root["config"].dump(), source);
  }

  rd.reject_unknown(root, {},
                    {"name", "lattice", "beta", "injection", "z", "backend",
                     "krylov", "observables", "classical", "polya",
                     "slope_window", "decay_window", "reference_grid",
                     "output"});
  ExperimentConfig cfg;
  if (root.contains("name")) cfg.name = rd.string(root["name"], {"name"});

  if (root.contains("lattice")) {
    const json& lat = root["lattice"];
    rd.reject_unknown(lat, {"lattice"},
                      {"rows", "cols", "dv_um", "dh_um", "cutoff_um",
                       "coupling"});
    if (lat.contains("rows")) cfg.lattice.rows = rd.count(lat["rows"], {"lattice", "rows"}, 1);
    if (lat.contains("cols")) cfg.lattice.cols = rd.count(lat["cols"], {"lattice", "cols"}, 1);
    if (lat.contains("dv_um")) cfg.lattice.dv_um = rd.positive(lat["dv_um"], {"lattice", "dv_um"});
    if (lat.contains("dh_um")) cfg.lattice.dh_um = rd.positive(lat["dh_um"], {"lattice", "dh_um"});
    if (lat.contains("cutoff_um")) cfg.lattice.cutoff_um = rd.positive(lat["cutoff_um"], {"lattice", "cutoff_um"});
    if (lat.contains("coupling")) {
      const json& c = lat["coupling"];
      const P base{"lattice", "coupling"};
      rd.reject_unknown(c, base,
                        {"amp_h", "kappa_h", "amp_v", "kappa_v", "nearest",
                         "kappa"});
      const bool fit = c.contains("amp_h") || c.contains("kappa_h") ||
                       c.contains("amp_v") || c.contains("kappa_v");
      if (fit && (c.contains("nearest") || c.contains("kappa"))) {
        rd.fail(base, "give either amp_*/kappa_* or nearest/kappa, not both");
      }
      if (fit) {
        for (const char* key : {"amp_h", "kappa_h", "amp_v", "kappa_v"}) {
          if (!c.contains(key)) rd.fail(base, std::string("missing ") + key);
        }
        cfg.lattice.coupling = {rd.positive(c["amp_h"], ConfigReader::with(base, "amp_h")),
                                rd.positive(c["kappa_h"], ConfigReader::with(base, "kappa_h")),
                                rd.positive(c["amp_v"], ConfigReader::with(base, "amp_v")),
                                rd.positive(c["kappa_v"], ConfigReader::with(base, "kappa_v"))};
      } else {
        const double nearest =
            c.contains("nearest")
                ? rd.positive(c["nearest"], ConfigReader::with(base, "nearest"))
                : kDefaultNearestCoupling;
        const double kappa =
            c.contains("kappa")
                ? rd.positive(c["kappa"], ConfigReader::with(base, "kappa"))
                : kDefaultDecayRate;
        cfg.lattice.coupling = CouplingModel::equal_nearest(
            nearest, kappa, cfg.lattice.dh_um, cfg.lattice.dv_um);
      }
    } else {
      // Keep nearest-pair couplings equal for non-default spacings too.
      cfg.lattice.coupling = CouplingModel::equal_nearest(
          kDefaultNearestCoupling, kDefaultDecayRate, cfg.lattice.dh_um,
          cfg.lattice.dv_um);
    }
  }

  if (root.contains("beta")) cfg.beta = rd.number(root["beta"], {"beta"});

  if (root.contains("injection")) {
    const json& inj = root["injection"];
    if (inj.is_string()) {
      if (inj.get<std::string>() != "center") {
        rd.fail({"injection"}, "expected \"center\" or {\"row\", \"col\"}");
      }
    } else {
      rd.reject_unknown(inj, {"injection"}, {"row", "col"});
      if (!inj.contains("row") || !inj.contains("col")) {
        rd.fail({"injection"}, "needs row and col");
      }
      cfg.injection = Site{rd.count(inj["row"], {"injection", "row"}, 0),
                           rd.count(inj["col"], {"injection", "col"}, 0)};
      if (cfg.injection->row >= cfg.lattice.rows ||
          cfg.injection->col >= cfg.lattice.cols) {
        rd.fail({"injection"}, "site lies outside the lattice");
      }
    }
  }

  if (!root.contains("z")) rd.fail({}, "missing required key \"z\"");
  {
    const json& z = root["z"];
    if (z.is_array()) {
      for (std::size_t k = 0; k < z.size(); ++k) {
        cfg.z_values.push_back(rd.number(z[k], {"z"}));
      }
    } else {
      rd.reject_unknown(z, {"z"}, {"start", "stop", "step"});
      for (const char* key : {"start", "stop", "step"}) {
        if (!z.contains(key)) rd.fail({"z"}, std::string("missing ") + key);
      }
      ZRange range{rd.number(z["start"], {"z", "start"}),
                   rd.number(z["stop"], {"z", "stop"}),
                   rd.number(z["step"], {"z", "step"})};
      try {
        cfg.z_values = range.expand();
      } catch (const InvalidArgument& e) {
        rd.fail({"z"}, e.what());
      }
      cfg.z_range = range;
    }
    if (cfg.z_values.empty()) rd.fail({"z"}, "needs at least one value");
    try {
      validate_z_values(cfg.z_values);
    } catch (const InvalidArgument& e) {
      rd.fail({"z"}, e.what());
    }
  }

  if (root.contains("backend")) {
    try {
      cfg.backend = parse_backend(rd.string(root["backend"], {"backend"}));
    } catch (const InvalidArgument& e) {
      rd.fail({"backend"}, e.what());
    }
  }
  if (root.contains("krylov")) {
    const json& k = root["krylov"];
    rd.reject_unknown(k, {"krylov"}, {"max_subspace", "tol", "max_steps"});
    if (k.contains("max_subspace")) {
      cfg.krylov.max_subspace = static_cast<int>(
          rd.count(k["max_subspace"], {"krylov", "max_subspace"}, 2));
    }
    if (k.contains("tol")) cfg.krylov.tol = rd.positive(k["tol"], {"krylov", "tol"});
    if (k.contains("max_steps")) {
      cfg.krylov.max_steps = rd.count(k["max_steps"], {"krylov", "max_steps"}, 1);
    }
  }

  if (root.contains("observables")) {
    const json& obs = root["observables"];
    if (!obs.is_array()) rd.fail({"observables"}, "expected an array");
    cfg.observables.clear();
    for (const json& o : obs) {
      const std::string name = rd.string(o, {"observables"});
      const auto it = std::find_if(
          kObservableNames.begin(), kObservableNames.end(),
          [&](const auto& entry) { return name == entry.second; });
      if (it == kObservableNames.end()) {
        rd.fail({"observables"}, "unknown observable '" + name + "'");
      }
      if (!cfg.wants(it->first)) cfg.observables.push_back(it->first);
    }
  }
  if (root.contains("classical")) {
    cfg.classical = rd.boolean(root["classical"], {"classical"});
  }
  if (root.contains("polya")) {
    const json& p = root["polya"];
    rd.reject_unknown(p, {"polya"}, {"sample_period", "max_terms"});
    if (p.contains("sample_period")) {
      cfg.polya_period = rd.positive(p["sample_period"], {"polya", "sample_period"});
    }
    if (p.contains("max_terms")) {
      cfg.polya_terms = rd.count(p["max_terms"], {"polya", "max_terms"}, 1);
    }
  }
  if (root.contains("slope_window")) {
    cfg.slope_window = rd.window(root["slope_window"], {"slope_window"});
  }
  if (root.contains("decay_window")) {
    cfg.decay_window = rd.window(root["decay_window"], {"decay_window"});
  }
  if (root.contains("reference_grid")) {
    cfg.reference_grid = rd.string(root["reference_grid"], {"reference_grid"});
  }
  if (root.contains("output")) {
    const json& out = root["output"];
    rd.reject_unknown(out, {"output"}, {"dir", "svg", "heatmap"});
    if (out.contains("dir")) cfg.out_dir = rd.string(out["dir"], {"output", "dir"});
    if (out.contains("svg")) cfg.svg = rd.boolean(out["svg"], {"output", "svg"});
    if (out.contains("heatmap")) {
      const json& h = out["heatmap"];
      const P base{"output", "heatmap"};
      rd.reject_unknown(h, base, {"spot_sigma_px", "canvas_px", "colormap"});
      if (h.contains("spot_sigma_px")) {
        cfg.heatmap.spot_sigma_px =
            rd.positive(h["spot_sigma_px"], ConfigReader::with(base, "spot_sigma_px"));
      }
      if (h.contains("canvas_px")) {
        cfg.heatmap.canvas_px = static_cast<int>(
            rd.count(h["canvas_px"], ConfigReader::with(base, "canvas_px"), 64));
      }
      if (h.contains("colormap")) {
        cfg.heatmap.colormap =
            rd.string(h["colormap"], ConfigReader::with(base, "colormap"));
      }
      try {
        cfg.heatmap.validate();
      } catch (const InvalidArgument& e) {
        rd.fail(base, e.what());
      }
    }
  }

  // Cross-field consistency.
  if (cfg.wants(Observable::similarity) && !cfg.classical &&
      !cfg.reference_grid) {
    rd.fail({"observables"},
            "similarity needs \"classical\": true or a reference_grid");
  }
  if (cfg.wants(Observable::polya)) {
    const double needed =
        static_cast<double>(cfg.polya_terms) * cfg.polya_period;
    if (cfg.z_values.back() < needed * (1.0 - 1e-12)) {
      rd.fail({"polya"}, "z samples end at " +
                             format_double(cfg.z_values.back()) +
                             " mm but the Polya sum needs z up to " +
                             format_double(needed) + " mm");
    }
  }
  if ((cfg.wants(Observable::slope) || cfg.wants(Observable::decay)) &&
      cfg.z_values.size() < 5) {
    rd.fail({"observables"}, "slope and decay fits need at least 5 z samples");
  }
  try {
    cfg.lattice.validate();
  } catch (const InvalidArgument& e) {
    rd.fail({"lattice"}, e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(read_text(path), path.string());
}

std::string config_to_json(const ExperimentConfig& c) {
  json out;
  out["name"] = c.name;
  out["lattice"] = {{"rows", c.lattice.rows},
                    {"cols", c.lattice.cols},
                    {"dv_um", c.lattice.dv_um},
                    {"dh_um", c.lattice.dh_um},
                    {"cutoff_um", c.lattice.cutoff_um},
                    {"coupling", coupling_json(c.lattice.coupling)}};
  out["beta"] = c.beta;
  if (c.injection) {
    out["injection"] = {{"row", c.injection->row}, {"col", c.injection->col}};
  } else {
    out["injection"] = "center";
  }
  if (c.z_range) {
    out["z"] = {{"start", c.z_range->start},
                {"stop", c.z_range->stop},
                {"step", c.z_range->step}};
  } else {
    out["z"] = c.z_values;
  }
  out["backend"] = std::string(to_string(c.backend));
  out["krylov"] = {{"max_subspace", c.krylov.max_subspace},
                   {"tol", c.krylov.tol},
                   {"max_steps", c.krylov.max_steps}};
  json obs = json::array();
  for (Observable o : c.observables) obs.push_back(std::string(to_string(o)));
  out["observables"] = obs;
  out["classical"] = c.classical;
  out["polya"] = {{"sample_period", c.polya_period},
                  {"max_terms", c.polya_terms}};
  if (c.slope_window) {
    out["slope_window"] = {{"z_min", c.slope_window->z_min},
                           {"z_max", c.slope_window->z_max}};
  }
  if (c.decay_window) {
    out["decay_window"] = {{"z_min", c.decay_window->z_min},
                           {"z_max", c.decay_window->z_max}};
  }
  if (c.reference_grid) out["reference_grid"] = *c.reference_grid;
  json output = {{"svg", c.svg},
                 {"heatmap",
                  {{"spot_sigma_px", c.heatmap.spot_sigma_px},
                   {"canvas_px", c.heatmap.canvas_px},
                   {"colormap", c.heatmap.colormap}}}};
  if (c.out_dir) output["dir"] = *c.out_dir;
  out["output"] = output;
  return out.dump(2) + "\n";
}

fs::path resolve_out_dir(const ExperimentConfig& config,
                         const RunOptions& options) {
  if (options.out_dir) return *options.out_dir;
  if (config.out_dir) return fs::path(*config.out_dir);
  const char* root = std::getenv(kOutputRootEnv);
  const fs::path base = (root && *root) ? fs::path(root) : fs::path("qwalk-runs");
  return base / config.name;
}

double edge_mass(const ProbabilityGrid& grid, std::size_t margin) {
  double mass = 0.0;
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      // A singleton axis has no edge along it.
      const bool near_row = grid.rows() > 1 &&
                            (r < margin || r + margin >= grid.rows());
      const bool near_col = grid.cols() > 1 &&
                            (c < margin || c + margin >= grid.cols());
      if (near_row || near_col) mass += grid[r * grid.cols() + c];
    }
  }
  return mass;
}

std::optional<FitWindow> pre_boundary_window(const EvolutionTrace& trace,
                                             std::size_t margin,
                                             double threshold) {
  std::optional<double> first;
  std::optional<double> last;
  std::size_t count = 0;
  for (std::size_t k = 0; k < trace.grids.size(); ++k) {
    if (edge_mass(trace.grids[k], margin) >= threshold) break;
    const double z = trace.z_values[k];
    if (z <= 0.0) continue;
    if (!first) first = z;
    last = z;
    ++count;
  }
  if (count < 2) return std::nullopt;
  return FitWindow{*first, *last};
}

RunResult run_experiment(const ExperimentConfig& config,
                         const RunOptions& options) {
  const fs::path out_dir = resolve_out_dir(config, options);
  const Backend backend = options.backend.value_or(config.backend);
  const bool svg = options.svg.value_or(config.svg);

  ExperimentConfig effective = config;
  effective.backend = backend;
  effective.svg = svg;

  fs::create_directories(out_dir);
  OutputWriter writer(out_dir);
  json manifest;
  manifest["manifest_version"] = 1;
  manifest["tool"] = "qwalk";
  manifest["version"] = std::string(kVersion);
  manifest["config"] = json::parse(config_to_json(effective));
  manifest["threads"] = options.threads;
  manifest["status"] = "running";
  json timings = json::object();
  const fs::path manifest_path = out_dir / "manifest.json";
  write_text(manifest_path, manifest.dump(2) + "\n");

  RunResult result;
  result.out_dir = out_dir;
  try {
    const Lattice lattice = timed_stage("lattice", timings, [&] {
      return build_lattice(config.lattice);
    });
    const Site origin = config.injection_site(lattice);
    const Hamiltonian h = timed_stage("hamiltonian", timings, [&] {
      return build_hamiltonian(lattice, config.beta);
    });
    const EvolutionTrace trace = timed_stage("evolution", timings, [&] {
      TraceOptions topts{backend, config.krylov, options.threads};
      return evolve_trace(h, StateVector::basis(h.size(), lattice.index(origin)),
                          config.z_values, lattice.shape(), topts);
    });
    std::optional<EvolutionTrace> classical;
    if (config.classical) {
      classical = timed_stage("classical", timings, [&] {
        std::vector<double> p0(lattice.size(), 0.0);
        p0[lattice.index(origin)] = 1.0;
        return classical_trace(build_rate_matrix(lattice), p0, config.z_values,
                               lattice.shape(), options.threads);
      });
    }

    timed_stage("observables", timings, [&] {
      result.scalars = write_observables(config, trace, origin, writer, "");
      if (classical) {
        auto cs = write_observables(config, *classical, origin, writer,
                                    "classical_");
        result.scalars.insert(cs.begin(), cs.end());
      }
      if (config.wants(Observable::similarity)) {
        std::optional<ProbabilityGrid> reference;
        if (config.reference_grid) {
          reference = read_single_grid(*config.reference_grid);
        }
        ObservableSeries sim{trace.z_values, {}};
        for (std::size_t k = 0; k < trace.grids.size(); ++k) {
          const ProbabilityGrid& other =
              reference ? *reference : classical->grids[k];
          sim.values.push_back(similarity(trace.grids[k], other));
        }
        writer.write("similarity.csv",
                     [&](std::ostream& o) { write_series_csv(o, sim); });
      }
    });

    timed_stage("output", timings, [&] {
      const std::size_t n = trace.grids.size();
      if (config.wants(Observable::grids)) {
        for (std::size_t k = 0; k < n; ++k) {
          writer.write("grid_" + zero_padded(k, n) + ".csv",
                       [&](std::ostream& o) {
                         write_grid_csv(o, trace.z_values[k], trace.grids[k]);
                       });
          if (classical) {
            writer.write("classical_grid_" + zero_padded(k, n) + ".csv",
                         [&](std::ostream& o) {
                           write_grid_csv(o, trace.z_values[k],
                                          classical->grids[k]);
                         });
          }
        }
      }
      if (svg) {
        for (std::size_t k = 0; k < n; ++k) {
          writer.write("heatmap_" + zero_padded(k, n) + ".svg",
                       [&](std::ostream& o) {
                         o << render_heatmap(trace.grids[k], lattice,
                                             config.heatmap);
                       });
        }
      }
      json summary;
      summary["sites"] = lattice.size();
      summary["injection"] = {{"row", origin.row}, {"col", origin.col}};
      summary["z_count"] = n;
      summary["scalars"] = scalars_json(result.scalars);
      writer.write("summary.json",
                   [&](std::ostream& o) { o << summary.dump(2) << "\n"; });
    });
  } catch (const StageError& e) {
    manifest["status"] = "failed";
    manifest["failed_stage"] = e.stage();
    manifest["error"] = e.what();
    manifest["files"] = writer.files();
    manifest["timings_s"] = timings;
    write_text(manifest_path, manifest.dump(2) + "\n");
    throw;
  }
  manifest["status"] = "complete";
  manifest["files"] = writer.files();
  manifest["timings_s"] = timings;
  write_text(manifest_path, manifest.dump(2) + "\n");
  result.files = writer.files();
  return result;
}

RunResult analyze_trace_dir(const fs::path& trace_dir, const fs::path& out_dir) {
  const fs::path manifest_path = trace_dir / "manifest.json";
  ExperimentConfig config;
  bool have_config = false;
  if (fs::exists(manifest_path)) {
    config = load_config(manifest_path);
    have_config = true;
  }

  std::vector<fs::path> grid_files;
  for (const auto& entry : fs::directory_iterator(trace_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("grid_", 0) == 0 && entry.path().extension() == ".csv") {
      grid_files.push_back(entry.path());
    }
  }
  std::sort(grid_files.begin(), grid_files.end());
  if (grid_files.empty()) {
    throw InvalidArgument(trace_dir.string() + ": no grid_*.csv files found");
  }

  EvolutionTrace trace;
  for (const fs::path& p : grid_files) {
    std::ifstream in(p, std::ios::binary);
    for (GridRecord& rec : read_grid_csv(in, p.string())) {
      trace.z_values.push_back(rec.z);
      trace.grids.push_back(std::move(rec.grid));
    }
  }
  trace.validate();

  const GridShape shape = trace.grids.front().shape();
  Site origin{shape.rows / 2, shape.cols / 2};
  if (have_config) {
    if (config.lattice.rows != shape.rows || config.lattice.cols != shape.cols) {
      throw InvalidArgument("grid files do not match the manifest lattice");
    }
    origin = config.injection.value_or(origin);
  }

  // Recompute every observable the trace alone supports.
  ExperimentConfig analysis = config;
  analysis.observables = {Observable::variance, Observable::p0,
                          Observable::projections};
  if (trace.z_values.size() >= 5 && pre_boundary_window(trace)) {
    analysis.observables.push_back(Observable::slope);
  }
  if (trace.z_values.back() >=
      static_cast<double>(analysis.polya_terms) * analysis.polya_period *
          (1.0 - 1e-12)) {
    analysis.observables.push_back(Observable::polya);
  }

  fs::create_directories(out_dir);
  OutputWriter writer(out_dir);
  RunResult result;
  result.out_dir = out_dir;
  result.scalars = write_observables(analysis, trace, origin, writer, "");
  if (analysis.wants(Observable::p0) && analysis.decay_window) {
    // Explicit decay window from the original run.
    const ObservableSeries p0 = return_probability(trace, origin);
    result.scalars["decay_exponent"] = decay_exponent(
        p0, analysis.decay_window->z_min, analysis.decay_window->z_max);
  }
  json summary;
  summary["source"] = trace_dir.string();
  summary["injection"] = {{"row", origin.row}, {"col", origin.col}};
  summary["z_count"] = trace.z_values.size();
  summary["scalars"] = scalars_json(result.scalars);
  writer.write("summary.json",
               [&](std::ostream& o) { o << summary.dump(2) << "\n"; });
  result.files = writer.files();
  return result;
}

}  // namespace qwalk
