#pragma once
// Reference scenes matching the measured beam parameters: 1.6 mm / 0.8 mm FWHM
// probe and conjugate spots, 795 nm, 3-4 coherence areas across the probe
// FWHM, image planes 94 cm and 32 cm from the cell.
//
// Orientation: mode A keeps the probe side below its D-mirror edge, so the
// probe side that is cut away from A/D (sent to B/C) lies at +x. The weakly
// correlated area sits on that side.

#include <twinmap/geometry.hpp>

namespace twinmap::fixtures {

inline constexpr double kProbeFwhm = 1.6; ///< mm
inline constexpr double kConjFwhm = 0.8;  ///< mm
inline constexpr double kAreasPerFwhm = 3.5;

/// Coherence-area intensity sigma: probe FWHM / 3.5 / 2.3548 (about 0.194 mm).
double area_sigma();

/// Gain whose standalone, fully detected pair gives `nrf_db` at `efficiency`.
double gain_for_nrf_db(double nrf_db, double efficiency = 1.0);

inline constexpr double kWeakDb = -0.8;   ///< standalone weak area
inline constexpr double kStrongDb = -2.0; ///< standalone strong area
inline constexpr double kCenterDb = -1.4; ///< standalone middle area of the three-area scene

/// Strong area at -0.3 mm, weak area at +0.3 mm, equal seed flux.
BeamLayout two_area_layout();

/// Weak (+0.55 mm), middle (+0.05 mm) and strong (-0.45 mm) areas; the two
/// squeezed areas meet 0.2 mm from the pump center.
BeamLayout three_area_layout();
inline constexpr double kSqueezedBoundary = -0.2;

/// Three equal-gain areas on a horizontal line for the vertical sweep.
BeamLayout vertical_layout();
inline constexpr double kVerticalGain = 1.5;
inline constexpr double kVerticalEfficiency = 0.85;

/// Single centered area.
BeamLayout single_area_layout(double gain, double sigma = area_sigma());

} // namespace twinmap::fixtures
