#pragma once

#include <cstddef>
#include <vector>

#include "qwalk/evolution.hpp"
#include "qwalk/lattice.hpp"

namespace qwalk {

/// One observable sampled along the propagation axis.
struct ObservableSeries {
  std::vector<double> z_values;
  std::vector<double> values;

  void validate() const;
};

/// Second moment of the distance from `origin`, in squared spacing units.
/// One column step and one row step each count as a unit distance.
double variance(const ProbabilityGrid& grid, Site origin);

/// Overlap (sum sqrt(a b))^2 / (sum a * sum b); 1 for identical shapes.
double similarity(const ProbabilityGrid& a, const ProbabilityGrid& b);

struct Projections {
  std::vector<double> x_profile;  // per column, summed over rows
  std::vector<double> y_profile;  // per row, summed over columns
};

Projections projections(const ProbabilityGrid& grid);

ObservableSeries variance_series(const EvolutionTrace& trace, Site origin);
ObservableSeries return_probability(const EvolutionTrace& trace, Site origin);

/// Least-squares slope of log(value) against log(z) over [z_min, z_max].
/// Needs at least five positive samples in the window.
double loglog_slope(const ObservableSeries& series, double z_min,
                    double z_max);

/// Exponent d of the z^-d envelope of a return-probability series, fitted
/// through the local maxima inside [z_min, z_max]. A monotone series counts
/// as its own envelope.
double decay_exponent(const ObservableSeries& series, double z_min,
                      double z_max);

/// Samples strictly greater than both neighbours (plateaus count once at
/// their first sample). Indices into the series.
std::vector<std::size_t> local_maxima(const ObservableSeries& series,
                                      double z_min, double z_max);

struct PolyaEstimate {
  double value = 0.0;
  std::size_t terms_used = 0;
  double sample_period = 0.0;
};

inline constexpr double kDefaultPolyaPeriod = 0.5;
inline constexpr std::size_t kDefaultPolyaTerms = 100;

/// 1 - prod_{m=1..max_terms} (1 - P0(m * sample_period)), with P0 linearly
/// interpolated between samples of `p0`.
PolyaEstimate polya_number(const ObservableSeries& p0, double sample_period,
                           std::size_t max_terms);

/// Running estimate after each term: entry m-1 is the value using m terms,
/// with z_values holding m * sample_period.
ObservableSeries polya_series(const ObservableSeries& p0, double sample_period,
                              std::size_t max_terms);

/// Linear interpolation of the series at z (z must lie within its range).
double interpolate(const ObservableSeries& series, double z);

}  // namespace qwalk
