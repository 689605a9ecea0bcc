#pragma once
// Emulated split detection: D-mirror channel routing, rasters, sweeps and the
// axial image-plane search.
//
// The probe D-mirror edge sends the probe side below the edge to mode A and
// the side above it to mode B; the conjugate D-mirror does the same for modes
// C (below) and D (above). Each mode is added (+1), subtracted (-1) or blocked.

#include <twinmap/geometry.hpp>
#include <twinmap/noise.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace twinmap {

enum class ModeState { plus, minus, blocked };

struct ChannelConfig {
  ModeState a = ModeState::plus;
  ModeState b = ModeState::minus;
  ModeState c = ModeState::plus;
  ModeState d = ModeState::minus;
  Axis sweep_axis = Axis::x;

  /// A and C on one channel, B and D on the other: A + C - B - D.
  static ChannelConfig split(Axis axis = Axis::x);
  /// A - D with B and C blocked.
  static ChannelConfig ad_only(Axis axis = Axis::x);
  /// B - C with A and D blocked.
  static ChannelConfig bc_only(Axis axis = Axis::x);
  /// Probe minus conjugate with both cuts present: A + B - C - D.
  static ChannelConfig all_diff(Axis axis = Axis::x);

  /// Preset name (SPLIT, AD_ONLY, BC_ONLY, ALL_DIFF) or an explicit list such
  /// as "A=+1,B=-1,C=+1,D=blocked". Throws InputError.
  static ChannelConfig parse(const std::string &text, Axis axis = Axis::x);
  /// Canonical explicit form, e.g. "A=+1,B=-1,C=+1,D=-1".
  std::string to_string() const;

  /// Throws DomainError when no mode carries a sign.
  void validate() const;

  friend bool operator==(const ChannelConfig &, const ChannelConfig &) = default;
};

int sign_of(ModeState s);

enum class EngineKind { analytic, monte_carlo, paper };

const char *to_string(EngineKind kind);
EngineKind parse_engine(const std::string &text);

struct EngineSpec {
  EngineKind kind = EngineKind::analytic;
  std::size_t samples = 100'000; ///< Monte-Carlo samples per cell
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Everything except the edge positions that determines one measurement.
struct ScanSettings {
  ChannelConfig config;
  double efficiency = 1.0; ///< common detection efficiency multiplying every region
  double background = 0.0;
  double cmrr_imbalance = 0.0;
  double edge_scatter = 0.0;
  DefocusParams probe_defocus;
  DefocusParams conj_defocus;
  EngineSpec engine;
};

struct ScanPlan {
  std::vector<double> probe_positions; ///< probe-plane edge coordinates, mm
  std::vector<double> conj_positions;  ///< conjugate-plane edge coordinates, mm
  ScanSettings settings;

  /// Nonempty, strictly monotone position lists.
  void validate() const;
};

enum class MapKind { raster, sweep };

/// Raster: values[i * conj_coords.size() + j] at (probe_coords[i], conj_coords[j]).
/// Sweep: values[i] at (probe_coords[i], conj_coords[i]).
struct NoiseMap {
  MapKind kind = MapKind::raster;
  std::vector<double> probe_coords;
  std::vector<double> conj_coords;
  std::vector<NoiseResult> values;
  ScanSettings settings;
  std::uint64_t layout_hash = 0;

  std::size_t cells() const { return values.size(); }
  const NoiseResult &at(std::size_t i, std::size_t j) const {
    return values[i * conj_coords.size() + j];
  }
  double probe_at(std::size_t cell) const;
  double conj_at(std::size_t cell) const;

  void validate() const;
};

/// Detection assignment for one pair of D-mirror edges.
DetectionAssignment build_assignment(const BeamLayout &layout, double probe_edge, double conj_edge,
                                     const ScanSettings &settings);

/// One measurement with the configured engine. `cell` decorrelates the
/// Monte-Carlo seed between cells.
NoiseResult measure(const BeamLayout &layout, double probe_edge, double conj_edge,
                    const ScanSettings &settings, std::size_t cell = 0);

/// 40 probe steps x 15 conjugate steps across +-2.5 beam sigma of each arm.
ScanPlan default_plan(const BeamLayout &layout, const ScanSettings &settings,
                      std::size_t probe_steps = 40, std::size_t conj_steps = 15);

/// Evenly spaced points from `from` to `to` inclusive.
std::vector<double> linspace(double from, double to, std::size_t n);

NoiseMap run_raster(const BeamLayout &layout, const ScanPlan &plan);

struct ProfilePoint {
  double coord = 0;
  double nrf_db = 0;
  double argmin_other = 0; ///< edge on the other arm attaining the minimum
};

/// Best (lowest) nrf_db at each step of one arm's D-mirror.
std::vector<ProfilePoint> optimal_profile(const NoiseMap &map, Arm axis);

/// Probe edge (and mirrored conjugate edge) that leaves both beams wholly on
/// modes A and D: 8 sigma above the highest area.
double unsplit_probe_edge(const BeamLayout &layout, Axis axis);

struct AxialPoint {
  double z = 0;
  NoiseResult noise;
};

struct AxialSweep {
  std::vector<AxialPoint> curve;
  double argmin_z = 0;
};

/// Defocuses one arm along the propagation axis with both D-mirrors fixed.
/// Edges default to the pump center (probe) and its mirror (conjugate).
AxialSweep axial_sweep(const BeamLayout &layout, const std::vector<double> &z_values, Arm arm,
                       const ScanSettings &settings, std::optional<double> probe_edge = {},
                       std::optional<double> conj_edge = {});

/// Probe edge swept through `positions`, conjugate edge at the mirror image of
/// each. Axis comes from settings.config.sweep_axis.
NoiseMap sweep_1d(const BeamLayout &layout, const std::vector<double> &positions,
                  const ScanSettings &settings);

} // namespace twinmap
