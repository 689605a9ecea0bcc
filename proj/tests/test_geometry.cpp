#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <twinmap/fixtures.hpp>
#include <twinmap/geometry.hpp>

#include <cmath>
#include <numbers>

using namespace twinmap;

namespace {

// Composite Simpson rule for the standard normal density on [a, b].
double simpson_normal(double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i)
    s += (i % 2 ? 4.0 : 2.0) * pdf(a + i * h);
  return s * h / 3.0;
}

// Midpoint sum of a 2D Gaussian footprint over x < edge.
double grid_fraction_below(double cx, double cy, double sx, double sy, double edge) {
  const int n = 800;
  const double span = 8.0;
  double in = 0, total = 0;
  for (int i = 0; i < n; ++i) {
    const double x = cx + sx * span * ((i + 0.5) / n * 2.0 - 1.0);
    for (int j = 0; j < n; j += 8) {
      const double y = cy + sy * span * ((j + 0.5) / n * 2.0 - 1.0);
      const double w = std::exp(-0.5 * ((x - cx) * (x - cx) / (sx * sx) + (y - cy) * (y - cy) / (sy * sy)));
      total += w;
      if (x < edge)
        in += w;
    }
  }
  return in / total;
}

BeamLayout one_area(Point2 center, double sigma, Point2 pump = {0, 0}) {
  BeamLayout l;
  l.pump_center = pump;
  CoherenceArea a;
  a.center = center;
  a.sigma_x = a.sigma_y = sigma;
  a.pair = TwoModeSqueezedPair(1.5, 1.0, "a");
  l.areas.push_back(a);
  return l;
}

} // namespace

TEST_CASE("normal CDF matches quadrature") {
  CHECK(std::abs(normal_cdf(1.0) - (0.5 + simpson_normal(0.0, 1.0))) < 1e-10);
  CHECK(std::abs(normal_cdf(1.0) - 0.841344746068543) < 1e-10);
  CHECK(std::abs(normal_cdf(-2.5) - (0.5 - simpson_normal(0.0, 2.5))) < 1e-10);
  CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("half-plane transmission equals a direct 2D sum") {
  const BeamLayout l = one_area({0.1, -0.2}, 0.2);
  for (double edge : {-0.3, 0.0, 0.1, 0.35}) {
    const double t = transmission(l.areas[0], Region::half_plane(edge, Axis::x, Side::below), {}, Arm::probe, l);
    CHECK(t == doctest::Approx(grid_fraction_below(0.1, -0.2, 0.2, 0.2, edge)).epsilon(1e-3));
  }
}

TEST_CASE("complementary half planes sum to one") {
  const BeamLayout l = one_area({0.3, 0.1}, 0.15);
  for (double edge = -1.0; edge <= 1.0; edge += 0.1) {
    const auto [below, above] = complementary_check(l.areas[0], edge, Axis::x, l);
    CHECK(below + above == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(below >= 0.0);
    CHECK(above >= 0.0);
  }
}

TEST_CASE("strip transmission is the difference of half planes") {
  const BeamLayout l = one_area({0.0, 0.0}, 0.2);
  const auto &a = l.areas[0];
  const double lo = transmission(a, Region::half_plane(-0.1, Axis::y, Side::below), {}, Arm::probe, l);
  const double hi = transmission(a, Region::half_plane(0.25, Axis::y, Side::below), {}, Arm::probe, l);
  CHECK(transmission(a, Region::strip(-0.1, 0.25, Axis::y), {}, Arm::probe, l) == doctest::Approx(hi - lo));
  CHECK(transmission(a, Region::full(), {}, Arm::probe, l) == 1.0);
}

TEST_CASE("conjugate center is an involution through the pump") {
  const Point2 pump{0.2, -0.1};
  const Point2 p{0.7, 0.4};
  const Point2 c = conjugate_center(p, pump);
  CHECK(c.x == doctest::Approx(-0.3));
  CHECK(c.y == doctest::Approx(-0.6));
  const Point2 back = conjugate_center(c, pump);
  CHECK(back.x == doctest::Approx(p.x));
  CHECK(back.y == doctest::Approx(p.y));
}

TEST_CASE("conjugate footprint is the scaled reflection") {
  BeamLayout l = one_area({0.4, 0.2}, 0.2, {0.1, 0.0});
  l.conj_scale = 0.5;
  const Point2 c = conjugate_footprint_center(l.areas[0], l);
  CHECK(c.x == doctest::Approx(0.1 - 0.5 * 0.3));
  CHECK(c.y == doctest::Approx(-0.1));
  // The mirrored edge cuts the conjugate footprint at the same fraction.
  for (double edge : {-0.2, 0.3, 0.5}) {
    const double tp = transmission(l.areas[0], Region::half_plane(edge, Axis::x, Side::below), {}, Arm::probe, l);
    const double tc = transmission(l.areas[0], Region::half_plane(mirror_edge(edge, Axis::x, l), Axis::x, Side::above),
                                   {}, Arm::conjugate, l);
    CHECK(tp == doctest::Approx(tc).epsilon(1e-12));
  }
}

TEST_CASE("translation invariance") {
  const double d = 0.37;
  const BeamLayout l1 = one_area({0.1, 0.0}, 0.2, {0.0, 0.0});
  const BeamLayout l2 = one_area({0.1 + d, 0.0}, 0.2, {d, 0.0});
  for (double edge : {-0.3, 0.05, 0.4})
    for (Arm arm : {Arm::probe, Arm::conjugate}) {
      const double shift1 = arm == Arm::probe ? edge : mirror_edge(edge, Axis::x, l1);
      const double shift2 = arm == Arm::probe ? edge + d : mirror_edge(edge + d, Axis::x, l2);
      const double t1 = transmission(l1.areas[0], Region::half_plane(shift1, Axis::x, Side::below), {}, arm, l1);
      const double t2 = transmission(l2.areas[0], Region::half_plane(shift2, Axis::x, Side::below), {}, arm, l2);
      CHECK(t1 == doctest::Approx(t2).epsilon(1e-12));
    }
}

TEST_CASE("Rayleigh range and defocus broadening") {
  // w = 2 sigma = 0.388 mm at 795 nm.
  const double zr = rayleigh_range_cm(0.194, 795.0);
  CHECK(zr == doctest::Approx(std::numbers::pi * 0.388e-3 * 0.388e-3 / 795e-9 * 100.0));
  CHECK(effective_sigma(0.2, 0.0, 10.0) == 0.2);
  CHECK(effective_sigma(0.2, 10.0, 10.0) == doctest::Approx(0.2 * std::sqrt(2.0)));
  CHECK_THROWS_AS(effective_sigma(0.2, 1.0, 0.0), DomainError);

  const BeamLayout l = one_area({0.0, 0.0}, 0.2);
  DefocusParams far;
  far.z_offset = 100.0;
  far.rayleigh_range = 10.0;
  const double sharp = transmission(l.areas[0], Region::half_plane(0.2, Axis::x, Side::below), {}, Arm::probe, l);
  const double blurred = transmission(l.areas[0], Region::half_plane(0.2, Axis::x, Side::below), far, Arm::probe, l);
  CHECK(blurred < sharp);
  CHECK(blurred > 0.5);
}

TEST_CASE("transmission is monotone in the edge") {
  const BeamLayout l = fixtures::three_area_layout();
  double prev = -1;
  for (double edge = -1.5; edge <= 1.5; edge += 0.05) {
    const double t = transmission(l.areas[1], Region::half_plane(edge, Axis::x, Side::below), {}, Arm::probe, l);
    CHECK(t >= prev);
    prev = t;
  }
}

TEST_CASE("layout validation and fingerprint") {
  BeamLayout l = fixtures::two_area_layout();
  CHECK_NOTHROW(l.validate());
  const auto h = l.fingerprint();
  CHECK(h == fixtures::two_area_layout().fingerprint());
  l.areas[0].center.x += 1e-9;
  CHECK(l.fingerprint() != h);

  BeamLayout dup = fixtures::two_area_layout();
  dup.areas[1].pair.id = dup.areas[0].pair.id;
  CHECK_THROWS_AS(dup.validate(), DomainError);
  BeamLayout bad = fixtures::two_area_layout();
  bad.areas[0].sigma_x = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  BeamLayout empty;
  CHECK_THROWS_AS(empty.validate(), DomainError);
}

TEST_CASE("fixture scales") {
  CHECK(fixtures::area_sigma() * kFwhmPerSigma * fixtures::kAreasPerFwhm == doctest::Approx(1.6));
  CHECK(nrf_lossy_closed_form(fixtures::gain_for_nrf_db(-2.0), 1.0) == doctest::Approx(std::pow(10.0, -0.2)));
  CHECK(nrf_lossy_closed_form(fixtures::gain_for_nrf_db(-0.8, 0.85), 0.85) ==
        doctest::Approx(std::pow(10.0, -0.08)));
  const BeamLayout l = fixtures::single_area_layout(2.0);
  CHECK(beam_sigma(l, Arm::conjugate, Axis::x) == doctest::Approx(0.5 * beam_sigma(l, Arm::probe, Axis::x)));
}
