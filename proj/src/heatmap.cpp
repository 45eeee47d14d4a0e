#include "qwalk/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qwalk/error.hpp"
#include "qwalk/numeric_format.hpp"

namespace qwalk {

namespace {

// Sampled at equal steps from the matplotlib maps.
const std::vector<Rgb> kViridis = {
    {68, 1, 84},    {72, 40, 120},  {62, 74, 137},  {49, 104, 142},
    {38, 130, 142}, {31, 158, 137}, {53, 183, 121}, {109, 205, 89},
    {180, 222, 44}, {253, 231, 37}};
const std::vector<Rgb> kInferno = {
    {0, 0, 4},      {27, 12, 65},   {74, 12, 107},  {120, 28, 109},
    {165, 44, 96},  {207, 68, 70},  {237, 105, 37}, {251, 155, 6},
    {247, 209, 61}, {252, 255, 164}};
const std::vector<Rgb> kGray = {{0, 0, 0}, {255, 255, 255}};

// Fixed-point text for SVG coordinates; keeps output short and stable.
std::string px(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

}  // namespace

Colormap Colormap::named(std::string_view name) {
  if (name == "viridis") return Colormap("viridis", kViridis);
  if (name == "inferno") return Colormap("inferno", kInferno);
  if (name == "gray") return Colormap("gray", kGray);
  throw InvalidArgument("unknown colormap '" + std::string(name) +
                        "' (expected viridis, inferno or gray)");
}

Rgb Colormap::operator()(double t) const {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  const double pos = t * static_cast<double>(stops_.size() - 1);
  const auto lo = std::min(static_cast<std::size_t>(pos), stops_.size() - 2);
  const double w = pos - static_cast<double>(lo);
  Rgb out{};
  for (std::size_t k = 0; k < 3; ++k) {
    const double v = (1.0 - w) * stops_[lo][k] + w * stops_[lo + 1][k];
    out[k] = static_cast<unsigned char>(std::lround(v));
  }
  return out;
}

std::string to_hex(Rgb rgb) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out = "#";
  for (unsigned char c : rgb) {
    out += kDigits[c >> 4];
    out += kDigits[c & 0xF];
  }
  return out;
}

void HeatmapStyle::validate() const {
  if (!(spot_sigma_px > 0.0) || !std::isfinite(spot_sigma_px)) {
    throw InvalidArgument("heatmap spot sigma must be positive");
  }
  if (canvas_px < 64) throw InvalidArgument("heatmap canvas must be >= 64 px");
  Colormap::named(colormap);
}

std::string render_heatmap(const ProbabilityGrid& grid, const Lattice& lattice,
                           const HeatmapStyle& style) {
  style.validate();
  if (grid.shape() != lattice.shape()) {
    throw InvalidArgument("grid shape does not match the lattice");
  }
  const Colormap cmap = Colormap::named(style.colormap);
  const double pmax =
      *std::max_element(grid.values().begin(), grid.values().end());

  const double canvas = style.canvas_px;
  const double bar_w = 0.05 * canvas;
  const double margin = 3.0 * style.spot_sigma_px + 0.02 * canvas;
  const double plot = canvas - 2.0 * margin;
  const Position extent = lattice.extent();
  const double span = std::max({extent.x_um, extent.y_um, 1e-12});
  const double scale = plot / span;
  // Centre the lattice inside the square plot area.
  const double off_x = margin + 0.5 * (plot - extent.x_um * scale);
  const double off_y = margin + 0.5 * (plot - extent.y_um * scale);
  const double width = canvas + 3.0 * bar_w + margin;

  std::ostringstream svg;
  svg.imbue(std::locale::classic());
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << px(width) << "\" height=\"" << px(canvas) << "\" viewBox=\"0 0 "
      << px(width) << ' ' << px(canvas) << "\">\n"
      << "<defs>\n"
      << "<filter id=\"spot\" x=\"-100%\" y=\"-100%\" width=\"300%\" "
         "height=\"300%\"><feGaussianBlur stdDeviation=\""
      << px(style.spot_sigma_px) << "\"/></filter>\n"
      << "<linearGradient id=\"scale\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
  constexpr int kStops = 11;
  for (int k = 0; k < kStops; ++k) {
    const double t = static_cast<double>(k) / (kStops - 1);
    svg << "<stop offset=\"" << px(t) << "\" stop-color=\"" << to_hex(cmap(t))
        << "\"/>\n";
  }
  svg << "</linearGradient>\n</defs>\n"
      << "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" << px(canvas)
      << "\" height=\"" << px(canvas) << "\" fill=\"" << to_hex(cmap(0.0))
      << "\"/>\n<g filter=\"url(#spot)\">\n";

  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double p = grid[k];
    if (p <= 0.0) continue;
    const double t = pmax > 0.0 ? p / pmax : 0.0;
    const Position pos = lattice.position(k);
    const Site s = lattice.site(k);
    svg << "<circle class=\"spot\" data-row=\"" << s.row << "\" data-col=\""
        << s.col << "\" data-p=\"" << format_double(p) << "\" cx=\""
        << px(off_x + pos.x_um * scale) << "\" cy=\""
        << px(off_y + pos.y_um * scale) << "\" r=\""
        << px(1.5 * style.spot_sigma_px) << "\" fill=\"" << to_hex(cmap(t))
        << "\"/>\n";
  }
  svg << "</g>\n";

  const double bar_x = canvas + bar_w;
  svg << "<rect class=\"colorbar\" x=\"" << px(bar_x) << "\" y=\""
      << px(margin) << "\" width=\"" << px(bar_w) << "\" height=\""
      << px(plot) << "\" fill=\"url(#scale)\" stroke=\"#000000\"/>\n"
      << "<text x=\"" << px(bar_x) << "\" y=\"" << px(margin - 4.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << format_double(pmax) << "</text>\n"
      << "<text x=\"" << px(bar_x) << "\" y=\"" << px(margin + plot + 12.0)
      << "\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n"
      << "</svg>\n";
  return svg.str();
}

}  // namespace qwalk
