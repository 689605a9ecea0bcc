#pragma once
// Standalone SVG rendering of noise maps: a heatmap for rasters, a polyline
// for sweeps. The diverging color scale is symmetric about 0 dB (blue below
// shot noise, red above).

#include <twinmap/scan.hpp>

#include <string>

namespace twinmap {

struct PlotOptions {
  std::string title;
  /// Half-range of the color scale in dB; 0 picks max |nrf_db| of the map.
  double db_range = 0;
};

std::string render_svg(const NoiseMap &map, const PlotOptions &options = {});

/// RGB color for a value in dB under a symmetric scale of half-range `range`.
std::string diverging_color(double db, double range);

} // namespace twinmap
