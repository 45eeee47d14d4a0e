#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "qwalk/evolution.hpp"
#include "qwalk/lattice.hpp"

namespace qwalk {

using Rgb = std::array<unsigned char, 3>;

/// Piecewise-linear colour map over [0, 1]. Known names: "viridis",
/// "inferno", "gray".
class Colormap {
 public:
  static Colormap named(std::string_view name);

  Rgb operator()(double t) const;
  const std::string& name() const noexcept { return name_; }

 private:
  Colormap(std::string name, std::vector<Rgb> stops)
      : name_(std::move(name)), stops_(std::move(stops)) {}

  std::string name_;
  std::vector<Rgb> stops_;
};

struct HeatmapStyle {
  double spot_sigma_px = 4.0;
  int canvas_px = 640;
  std::string colormap = "viridis";

  void validate() const;
};

/// SVG 1.1 heatmap: one blurred spot per site with non-zero probability,
/// coloured linearly from 0 to the grid maximum, plus a colour bar.
std::string render_heatmap(const ProbabilityGrid& grid, const Lattice& lattice,
                           const HeatmapStyle& style = {});

std::string to_hex(Rgb rgb);

}  // namespace qwalk
