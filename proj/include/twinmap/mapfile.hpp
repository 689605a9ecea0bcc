#pragma once
// Noise-map CSV files.
//
//   # twinmap noise map
//   # schema: 1
//   # engine: analytic
//   # seed: 0
//   # layout_hash: 0123456789abcdef
//   # kind: raster
//   # grid: 40x15
//   # ... channel and detection settings ...
//   probe_mm,conj_mm,variance,snl,nrf,nrf_db,stderr_nrf
//   -0.5,-0.25,0.93,1.2,0.775,-1.107,0
//
// Rows are row-major in the probe coordinate. Numbers are written with 17
// significant digits so a write -> read -> write cycle is byte-identical.
// Comment lines with unrecognised keys are kept and written back verbatim.
// Files without comments (measured data) are accepted; the stderr_nrf column
// is optional and defaults to 0, and the raster/sweep shape is inferred.

#include <twinmap/scan.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace twinmap {

inline constexpr int kMapSchemaVersion = 1;

struct NoiseMapFile {
  NoiseMap map;
  std::vector<std::string> extra_comments; ///< full lines including '#'
};

void write_map(std::ostream &out, const NoiseMapFile &file);
std::string write_map(const NoiseMapFile &file);
void save_map(const std::string &path, const NoiseMapFile &file);

/// Throws InputError (with line numbers) on malformed content.
NoiseMapFile read_map(std::istream &in);
NoiseMapFile parse_map(const std::string &text);
NoiseMapFile load_map(const std::string &path);

/// "%.17g" rendering used throughout the file.
std::string format_number(double v);

} // namespace twinmap
