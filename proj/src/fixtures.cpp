#include <twinmap/fixtures.hpp>

#include <cmath>

namespace twinmap::fixtures {

namespace {

CoherenceArea make_area(const char *id, double x, double y, double gain, double flux = 1.0) {
  CoherenceArea a;
  a.center = {x, y};
  a.sigma_x = a.sigma_y = area_sigma();
  a.pair = TwoModeSqueezedPair(gain, flux, id);
  return a;
}

BeamLayout base_layout() {
  BeamLayout l;
  l.pump_center = {0.0, 0.0};
  l.conj_scale = kConjFwhm / kProbeFwhm;
  l.probe_image_z = 94.0;
  l.conj_image_z = 32.0;
  l.wavelength_nm = 795.0;
  return l;
}

} // namespace

double area_sigma() { return kProbeFwhm / kAreasPerFwhm / kFwhmPerSigma; }

double gain_for_nrf_db(double nrf_db, double efficiency) {
  const double nrf = std::pow(10.0, nrf_db / 10.0);
  // nrf = 1 - eta + eta / (2G - 1)
  const double inv = (nrf - 1.0 + efficiency) / efficiency;
  if (!(inv > 0.0 && inv <= 1.0))
    throw DomainError("requested squeezing is not reachable at this efficiency");
  return 0.5 * (1.0 / inv + 1.0);
}

BeamLayout two_area_layout() {
  BeamLayout l = base_layout();
  l.areas.push_back(make_area("strong", -0.3, 0.0, gain_for_nrf_db(kStrongDb)));
  l.areas.push_back(make_area("weak", 0.3, 0.0, gain_for_nrf_db(kWeakDb)));
  return l;
}

BeamLayout three_area_layout() {
  BeamLayout l = base_layout();
  l.areas.push_back(make_area("strong", -0.45, 0.0, gain_for_nrf_db(kStrongDb)));
  l.areas.push_back(make_area("middle", 0.05, 0.0, gain_for_nrf_db(kCenterDb)));
  l.areas.push_back(make_area("weak", 0.55, 0.0, gain_for_nrf_db(kWeakDb)));
  return l;
}

BeamLayout vertical_layout() {
  BeamLayout l = base_layout();
  l.areas.push_back(make_area("left", -0.45, 0.0, kVerticalGain));
  l.areas.push_back(make_area("center", 0.05, 0.0, kVerticalGain));
  l.areas.push_back(make_area("right", 0.55, 0.0, kVerticalGain));
  return l;
}

BeamLayout single_area_layout(double gain, double sigma) {
  BeamLayout l = base_layout();
  CoherenceArea a = make_area("single", 0.0, 0.0, gain);
  a.sigma_x = a.sigma_y = sigma;
  l.areas.push_back(a);
  return l;
}

} // namespace twinmap::fixtures
