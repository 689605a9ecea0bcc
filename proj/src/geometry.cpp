#include <twinmap/geometry.hpp>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <string>

namespace twinmap {

namespace {

std::uint64_t fnv1a(const std::string &text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void append(std::string &out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g;", v);
  out += buf;
}

double arm_flux(const CoherenceArea &a, Arm arm) {
  return arm == Arm::probe ? a.pair.probe_flux() : a.pair.conj_flux();
}

} // namespace

void BeamLayout::validate() const {
  if (!(conj_scale > 0.0))
    throw DomainError("conj_scale must be positive");
  if (areas.empty())
    throw DomainError("layout has no coherence areas");
  std::set<std::string> ids;
  for (const auto &a : areas) {
    if (!(a.sigma_x > 0.0) || !(a.sigma_y > 0.0))
      throw DomainError("coherence area '" + a.id() + "' must have positive sigma");
    if (!ids.insert(a.id()).second)
      throw DomainError("duplicate coherence area id '" + a.id() + "'");
    // Re-run the pair invariants.
    TwoModeSqueezedPair check(a.pair.gain, a.pair.seed_flux, a.pair.id);
  }
  if (!(wavelength_nm > 0.0))
    throw DomainError("wavelength must be positive");
}

std::vector<TwoModeSqueezedPair> BeamLayout::pairs() const {
  std::vector<TwoModeSqueezedPair> out;
  out.reserve(areas.size());
  for (const auto &a : areas)
    out.push_back(a.pair);
  return out;
}

std::uint64_t BeamLayout::fingerprint() const {
  std::string s = "layout-v1;";
  append(s, pump_center.x);
  append(s, pump_center.y);
  append(s, conj_scale);
  append(s, probe_image_z);
  append(s, conj_image_z);
  append(s, wavelength_nm);
  for (const auto &a : areas) {
    s += a.id() + ";";
    append(s, a.center.x);
    append(s, a.center.y);
    append(s, a.sigma_x);
    append(s, a.sigma_y);
    append(s, a.pair.gain);
    append(s, a.pair.seed_flux);
    append(s, a.conj_shift.x);
    append(s, a.conj_shift.y);
  }
  return fnv1a(s);
}

Region Region::half_plane(double edge, Axis axis, Side keep) {
  Region r;
  r.kind = Kind::half_plane;
  r.edge = edge;
  r.axis = axis;
  r.keep = keep;
  return r;
}

Region Region::strip(double lo, double hi, Axis axis) {
  if (!(lo < hi))
    throw DomainError("strip region requires lo < hi");
  Region r;
  r.kind = Kind::strip;
  r.lo = lo;
  r.hi = hi;
  r.axis = axis;
  return r;
}

Point2 conjugate_center(Point2 probe, Point2 pump) {
  return {2.0 * pump.x - probe.x, 2.0 * pump.y - probe.y};
}

Point2 conjugate_footprint_center(const CoherenceArea &area, const BeamLayout &layout) {
  const Point2 image = conjugate_center(area.center, layout.pump_center);
  const Point2 &c = layout.pump_center;
  return {c.x + layout.conj_scale * (image.x - c.x) + area.conj_shift.x,
          c.y + layout.conj_scale * (image.y - c.y) + area.conj_shift.y};
}

double mirror_edge(double probe_edge, Axis axis, const BeamLayout &layout) {
  const double c = layout.pump_center.along(axis);
  return c - layout.conj_scale * (probe_edge - c);
}

double effective_sigma(double sigma0, double z_offset, double rayleigh_range) {
  if (!(sigma0 > 0.0) || !(rayleigh_range > 0.0))
    throw DomainError("effective_sigma requires positive sigma and Rayleigh range");
  const double r = z_offset / rayleigh_range;
  return sigma0 * std::sqrt(1.0 + r * r);
}

double rayleigh_range_cm(double sigma_mm, double wavelength_nm) {
  const double w_m = 2.0 * sigma_mm * 1e-3;
  return std::numbers::pi * w_m * w_m / (wavelength_nm * 1e-9) * 100.0;
}

double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

double transmission(const CoherenceArea &area, const Region &region, const DefocusParams &defocus,
                    Arm arm, const BeamLayout &layout) {
  if (region.kind == Region::Kind::full)
    return 1.0;

  const Axis axis = region.axis;
  double sigma = area.sigma(axis);
  double center = area.center.along(axis);
  if (arm == Arm::conjugate) {
    sigma *= layout.conj_scale;
    center = conjugate_footprint_center(area, layout).along(axis);
  }
  if (defocus.z_offset != 0.0) {
    const double zr = defocus.rayleigh_range.value_or(rayleigh_range_cm(sigma, layout.wavelength_nm));
    sigma = effective_sigma(sigma, defocus.z_offset, zr);
  }

  if (region.kind == Region::Kind::half_plane) {
    const double u = (region.edge - center) / sigma;
    return region.keep == Side::below ? normal_cdf(u) : normal_cdf(-u);
  }
  const double lo = (region.lo - center) / sigma;
  const double hi = (region.hi - center) / sigma;
  // Difference taken on the side with the smaller tail for accuracy.
  if (lo > 0)
    return normal_cdf(-lo) - normal_cdf(-hi);
  return normal_cdf(hi) - normal_cdf(lo);
}

std::pair<double, double> complementary_check(const CoherenceArea &area, double edge, Axis axis,
                                              const BeamLayout &layout) {
  const DefocusParams none;
  return {transmission(area, Region::half_plane(edge, axis, Side::below), none, Arm::probe, layout),
          transmission(area, Region::half_plane(edge, axis, Side::above), none, Arm::probe, layout)};
}

double beam_centroid(const BeamLayout &layout, Arm arm, Axis axis) {
  double w = 0, m = 0;
  for (const auto &a : layout.areas) {
    const double f = arm_flux(a, arm) > 0 ? arm_flux(a, arm) : a.pair.seed_flux;
    const double c = arm == Arm::probe ? a.center.along(axis)
                                       : conjugate_footprint_center(a, layout).along(axis);
    w += f;
    m += f * c;
  }
  return m / w;
}

double beam_sigma(const BeamLayout &layout, Arm arm, Axis axis) {
  const double mean = beam_centroid(layout, arm, axis);
  double w = 0, v = 0;
  for (const auto &a : layout.areas) {
    const double f = arm_flux(a, arm) > 0 ? arm_flux(a, arm) : a.pair.seed_flux;
    double s = a.sigma(axis);
    double c = a.center.along(axis);
    if (arm == Arm::conjugate) {
      s *= layout.conj_scale;
      c = conjugate_footprint_center(a, layout).along(axis);
    }
    w += f;
    v += f * (s * s + (c - mean) * (c - mean));
  }
  return std::sqrt(v / w);
}

} // namespace twinmap
