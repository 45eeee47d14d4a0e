#include "qwalk/observables.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qwalk/error.hpp"

namespace qwalk {

namespace {

void check_window(double z_min, double z_max) {
  if (!(z_min > 0.0) || !(z_max > z_min) || !std::isfinite(z_max)) {
    throw InvalidArgument("fit window needs 0 < z_min < z_max");
  }
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  if (sxx == 0.0) throw InvalidArgument("fit window has no spread in z");
  return sxy / sxx;
}

}  // namespace

void ObservableSeries::validate() const {
  if (z_values.size() != values.size()) {
    throw InvalidArgument("series has mismatched z and value counts");
  }
  validate_z_values(z_values);
}

double variance(const ProbabilityGrid& grid, Site origin) {
  if (origin.row >= grid.rows() || origin.col >= grid.cols()) {
    throw InvalidArgument("variance origin lies outside the grid");
  }
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    const double dy = static_cast<double>(r) - static_cast<double>(origin.row);
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const double dx =
          static_cast<double>(c) - static_cast<double>(origin.col);
      const double p = grid[r * grid.cols() + c];
      weighted += (dx * dx + dy * dy) * p;
      total += p;
    }
  }
  if (total <= 0.0) throw InvalidArgument("variance of an all-zero grid");
  return weighted / total;
}

double similarity(const ProbabilityGrid& a, const ProbabilityGrid& b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument("similarity needs grids of the same shape");
  }
  double overlap = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) overlap += std::sqrt(a[k] * b[k]);
  const double ta = a.total();
  const double tb = b.total();
  if (ta <= 0.0 || tb <= 0.0) {
    throw InvalidArgument("similarity of an all-zero grid");
  }
  return std::min(1.0, overlap * overlap / (ta * tb));
}

Projections projections(const ProbabilityGrid& grid) {
  Projections out{std::vector<double>(grid.cols(), 0.0),
                  std::vector<double>(grid.rows(), 0.0)};
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const double p = grid[r * grid.cols() + c];
      out.x_profile[c] += p;
      out.y_profile[r] += p;
    }
  }
  return out;
}

ObservableSeries variance_series(const EvolutionTrace& trace, Site origin) {
  trace.validate();
  ObservableSeries out{trace.z_values, {}};
  out.values.reserve(trace.grids.size());
  for (const ProbabilityGrid& g : trace.grids) {
    out.values.push_back(variance(g, origin));
  }
  return out;
}

ObservableSeries return_probability(const EvolutionTrace& trace, Site origin) {
  trace.validate();
  ObservableSeries out{trace.z_values, {}};
  out.values.reserve(trace.grids.size());
  for (const ProbabilityGrid& g : trace.grids) out.values.push_back(g.at(origin));
  return out;
}

double loglog_slope(const ObservableSeries& series, double z_min,
                    double z_max) {
  series.validate();
  check_window(z_min, z_max);
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k = 0; k < series.z_values.size(); ++k) {
    const double z = series.z_values[k];
    if (z < z_min || z > z_max) continue;
    const double v = series.values[k];
    if (!(v > 0.0)) {
      throw InvalidArgument("log-log fit needs positive values; got " +
                            std::to_string(v) + " at z = " + std::to_string(z));
    }
    xs.push_back(std::log(z));
    ys.push_back(std::log(v));
  }
  if (xs.size() < 5) {
    throw InvalidArgument("log-log fit needs at least 5 samples in the window, "
                          "found " + std::to_string(xs.size()));
  }
  return fit_slope(xs, ys);
}

std::vector<std::size_t> local_maxima(const ObservableSeries& series,
                                      double z_min, double z_max) {
  std::vector<std::size_t> out;
  const auto& v = series.values;
  for (std::size_t k = 1; k + 1 < v.size(); ++k) {
    const double z = series.z_values[k];
    if (z < z_min || z > z_max) continue;
    if (!(v[k] > v[k - 1])) continue;
    std::size_t next = k + 1;
    while (next < v.size() && v[next] == v[k]) ++next;
    if (next < v.size() && v[next] < v[k]) out.push_back(k);
  }
  return out;
}

double decay_exponent(const ObservableSeries& series, double z_min,
                      double z_max) {
  series.validate();
  check_window(z_min, z_max);

  std::vector<std::size_t> window;
  for (std::size_t k = 0; k < series.z_values.size(); ++k) {
    const double z = series.z_values[k];
    if (z >= z_min && z <= z_max) window.push_back(k);
  }
  bool monotone = window.size() >= 2;
  for (std::size_t k = 1; monotone && k < window.size(); ++k) {
    monotone = series.values[window[k]] < series.values[window[k - 1]];
  }
  if (monotone) return -loglog_slope(series, z_min, z_max);

  const std::vector<std::size_t> peaks = local_maxima(series, z_min, z_max);
  if (peaks.size() < 4) {
    throw InvalidArgument(
        "envelope fit needs at least 4 local maxima in [" +
        std::to_string(z_min) + ", " + std::to_string(z_max) + "], found " +
        std::to_string(peaks.size()) +
        "; widen the window or sample z more finely");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t k : peaks) {
    const double v = series.values[k];
    if (!(v > 0.0)) throw InvalidArgument("envelope maxima must be positive");
    xs.push_back(std::log(series.z_values[k]));
    ys.push_back(std::log(v));
  }
  return -fit_slope(xs, ys);
}

double interpolate(const ObservableSeries& series, double z) {
  const auto& zs = series.z_values;
  if (zs.empty() || z < zs.front() || z > zs.back()) {
    throw InvalidArgument("z = " + std::to_string(z) +
                          " lies outside the sampled range");
  }
  const auto hi = std::lower_bound(zs.begin(), zs.end(), z);
  const auto k = static_cast<std::size_t>(hi - zs.begin());
  if (zs[k] == z) return series.values[k];
  const double z0 = zs[k - 1];
  const double z1 = zs[k];
  const double w = (z - z0) / (z1 - z0);
  return (1.0 - w) * series.values[k - 1] + w * series.values[k];
}

ObservableSeries polya_series(const ObservableSeries& p0, double sample_period,
                              std::size_t max_terms) {
  p0.validate();
  if (!(sample_period > 0.0) || !std::isfinite(sample_period)) {
    throw InvalidArgument("Polya sample period must be positive");
  }
  if (max_terms == 0) throw InvalidArgument("Polya estimate needs >= 1 term");
  for (double v : p0.values) {
    if (!(v >= 0.0 && v <= 1.0 + 1e-12)) {
      throw InvalidArgument("return probabilities must lie in [0, 1]");
    }
  }
  const double z_last = static_cast<double>(max_terms) * sample_period;
  if (p0.z_values.empty() || p0.z_values.back() < z_last * (1.0 - 1e-12)) {
    throw InvalidArgument(
        "return-probability series ends before z = " + std::to_string(z_last) +
        " needed for " + std::to_string(max_terms) + " Polya terms");
  }

  ObservableSeries out;
  out.z_values.reserve(max_terms);
  out.values.reserve(max_terms);
  double survival = 1.0;
  for (std::size_t m = 1; m <= max_terms; ++m) {
    const double z = std::min(static_cast<double>(m) * sample_period,
                              p0.z_values.back());
    const double p = std::clamp(interpolate(p0, z), 0.0, 1.0);
    survival *= 1.0 - p;
    out.z_values.push_back(static_cast<double>(m) * sample_period);
    out.values.push_back(1.0 - survival);
  }
  return out;
}

PolyaEstimate polya_number(const ObservableSeries& p0, double sample_period,
                           std::size_t max_terms) {
  const ObservableSeries running = polya_series(p0, sample_period, max_terms);
  return {running.values.back(), max_terms, sample_period};
}

}  // namespace qwalk
