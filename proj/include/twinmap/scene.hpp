#pragma once
// Scene files: a YAML document declaring a layout, channel routing, scan plan
// and engine. See scenes/example.scene for the annotated schema.

#include <twinmap/geometry.hpp>
#include <twinmap/scan.hpp>

#include <optional>
#include <string>
#include <vector>

namespace twinmap {

struct Scene {
  BeamLayout layout;
  MapKind kind = MapKind::raster;
  /// Raster: both lists used. Sweep: probe list only, conjugate edges mirrored.
  ScanPlan plan;
};

/// Parses scene text. Unknown keys, wrong types and out-of-range values raise
/// InputError carrying the 1-based line and column of the offending node.
Scene parse_scene(const std::string &text);

Scene load_scene(const std::string &path);

/// Runs the scene's raster or sweep.
NoiseMap simulate_scene(const Scene &scene);

} // namespace twinmap
