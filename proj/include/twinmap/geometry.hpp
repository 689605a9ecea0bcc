#pragma once
// Transverse footprints of coherence areas and knife-edge regions.
//
// Units: mm transverse, cm along the propagation axis, nm for wavelength.
// Probe coordinates live in the probe image plane. The conjugate image is the
// point reflection of the probe image through the pump center, scaled about
// the pump center by conj_scale (conjugate spot size / probe spot size).

#include <twinmap/common.hpp>
#include <twinmap/noise.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace twinmap {

struct Point2 {
  double x = 0;
  double y = 0;

  double along(Axis axis) const { return axis == Axis::x ? x : y; }
  friend bool operator==(const Point2 &, const Point2 &) = default;
};

/// FWHM of a Gaussian intensity profile with standard deviation 1.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

struct CoherenceArea {
  Point2 center;         ///< probe image plane, mm
  double sigma_x = 0.2;  ///< intensity std-dev, mm
  double sigma_y = 0.2;
  TwoModeSqueezedPair pair;
  /// Displacement of the conjugate footprint from its symmetric image
  /// (conjugate-plane mm). Zero for a perfectly symmetric twin.
  Point2 conj_shift;

  double sigma(Axis axis) const { return axis == Axis::x ? sigma_x : sigma_y; }
  const std::string &id() const { return pair.id; }
};

struct BeamLayout {
  Point2 pump_center;
  std::vector<CoherenceArea> areas;
  double conj_scale = 0.5;
  double probe_image_z = 94.0; ///< cm from the cell center
  double conj_image_z = 32.0;
  double wavelength_nm = 795.0;

  /// Throws DomainError on sigma <= 0, conj_scale <= 0, empty or duplicate ids.
  void validate() const;

  std::vector<TwoModeSqueezedPair> pairs() const;

  /// FNV-1a over a canonical text rendering of every field.
  std::uint64_t fingerprint() const;
};

enum class Side { below, above };

/// Detector-side region selected by knife edges. `below` keeps coordinates
/// smaller than the edge.
struct Region {
  enum class Kind { full, half_plane, strip };

  Kind kind = Kind::full;
  Axis axis = Axis::x;
  double edge = 0;
  Side keep = Side::below;
  double lo = 0, hi = 0;

  static Region full() { return {}; }
  static Region half_plane(double edge, Axis axis, Side keep);
  static Region strip(double lo, double hi, Axis axis);
};

struct DefocusParams {
  double z_offset = 0; ///< cm from the image plane
  /// Overrides the per-area Rayleigh range derived from sigma and wavelength.
  std::optional<double> rayleigh_range;
};

/// 2 * pump - probe.
Point2 conjugate_center(Point2 probe_center, Point2 pump_center);

/// Conjugate-plane center of an area: pump + conj_scale * (reflection - pump)
/// plus the area's conjugate shift.
Point2 conjugate_footprint_center(const CoherenceArea &area, const BeamLayout &layout);

/// Conjugate-plane edge that mirrors a probe-plane edge coordinate.
double mirror_edge(double probe_edge, Axis axis, const BeamLayout &layout);

/// sigma0 * sqrt(1 + (z / z_R)^2).
double effective_sigma(double sigma0, double z_offset, double rayleigh_range);

/// z_R = pi (2 sigma)^2 / lambda, returned in cm for sigma in mm and lambda in nm.
double rayleigh_range_cm(double sigma_mm, double wavelength_nm);

/// Standard normal cumulative distribution.
double normal_cdf(double u);

/// Fraction of the area's footprint in `arm` that falls inside `region`.
double transmission(const CoherenceArea &area, const Region &region, const DefocusParams &defocus,
                    Arm arm, const BeamLayout &layout);

/// Both half planes sharing one probe-plane edge; the pair sums to 1.
std::pair<double, double> complementary_check(const CoherenceArea &area, double edge, Axis axis,
                                              const BeamLayout &layout);

/// Power-weighted standard deviation of the whole probe (or conjugate) beam
/// along an axis: sum w (sigma^2 + (c - mean)^2), weights by arm flux.
double beam_sigma(const BeamLayout &layout, Arm arm, Axis axis);

/// Power-weighted centroid of one arm along an axis.
double beam_centroid(const BeamLayout &layout, Arm arm, Axis axis);

} // namespace twinmap
