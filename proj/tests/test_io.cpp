#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <twinmap/fixtures.hpp>
#include <twinmap/mapfile.hpp>
#include <twinmap/plot.hpp>
#include <twinmap/report.hpp>
#include <twinmap/scene.hpp>

#include <json.hpp>

#include <cmath>
#include <regex>

using namespace twinmap;

namespace {

const char *kScene = R"(layout:
  pump_center: [0, 0]
  areas:
    - {id: a, center: [-0.2, 0], sigma: 0.2, gain: 1.5}
    - {id: b, center: [0.3, 0], sigma: [0.2, 0.25], gain: 1.2, weight: 0.5}
config: SPLIT
scan:
  kind: raster
  probe: {from: -0.5, to: 0.5, steps: 5}
  conjugate: {from: -0.25, to: 0.25, steps: 3}
)";

int error_line(const std::string &text) {
  try {
    parse_scene(text);
  } catch (const InputError &e) {
    return e.line();
  }
  return -1;
}

NoiseMapFile small_map() {
  NoiseMapFile f;
  f.map = simulate_scene(parse_scene(kScene));
  return f;
}

} // namespace

TEST_CASE("scene parsing") {
  const Scene s = parse_scene(kScene);
  REQUIRE(s.layout.areas.size() == 2);
  CHECK(s.layout.areas[1].sigma_y == 0.25);
  CHECK(s.layout.areas[1].pair.seed_flux == 0.5);
  CHECK(s.plan.probe_positions.size() == 5);
  CHECK(s.plan.conj_positions.size() == 3);
  CHECK(s.plan.settings.config == ChannelConfig::split());
  CHECK(simulate_scene(s).cells() == 15);
}

TEST_CASE("scene defaults to the 40 x 15 plan") {
  const Scene s = parse_scene("layout:\n  areas:\n    - {center: [0, 0], gain: 2}\n");
  CHECK(s.plan.probe_positions.size() == 40);
  CHECK(s.plan.conj_positions.size() == 15);
  CHECK(s.layout.areas[0].id() == "area1");
}

TEST_CASE("unknown keys are rejected with their location") {
  const std::string text = std::string(kScene) + "bogus: 1\n";
  CHECK(error_line(text) == 11);
  try {
    parse_scene("layout:\n  areas:\n    - {center: [0, 0], gain: 2, colour: red}\n");
    FAIL("expected InputError");
  } catch (const InputError &e) {
    CHECK(e.line() == 3);
    CHECK(e.column() > 0);
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
  }
}

TEST_CASE("scene type and range errors") {
  CHECK(error_line("layout:\n  areas:\n    - {center: [0, 0], gain: lots}\n") == 3);
  CHECK(error_line("layout:\n  areas: []\n") == 2);
  CHECK(error_line("layout:\n  areas:\n    - {center: [0], gain: 2}\n") == 3);
  CHECK(error_line("layout: [1, 2]\n") == 1);
  CHECK(error_line("layout:\n  areas:\n    - {center: [0, 0], gain: 2}\nconfig: A=+1\n") == 4);
  CHECK(error_line("layout:\n  areas:\n    - {center: [0, 0], gain: 2}\nengine: magic\n") == 4);
  CHECK(error_line("layout:\n  areas:\n  - {center: [0, 0], gain: 2}\n  - {center: [0, 0] gain: 2}\n") > 0);
  CHECK(error_line("") == 0);
}

TEST_CASE("physics errors in scenes are domain errors") {
  CHECK_THROWS_AS(parse_scene("layout:\n  areas:\n    - {center: [0, 0], gain: 0.5}\n"), DomainError);
  const Scene blocked =
      parse_scene("layout:\n  areas:\n    - {center: [0, 0], gain: 2}\nconfig: A=0,B=0,C=0,D=0\n");
  CHECK_THROWS_AS(simulate_scene(blocked), DomainError);
}

TEST_CASE("sweep scenes mirror the conjugate edge") {
  const Scene s = parse_scene("layout:\n  areas:\n    - {center: [0, 0], gain: 2}\naxis: y\n"
                              "scan:\n  kind: sweep\n  probe: {from: -0.2, to: 0.2, steps: 5}\n");
  CHECK(s.kind == MapKind::sweep);
  const NoiseMap m = simulate_scene(s);
  CHECK(m.kind == MapKind::sweep);
  CHECK(m.conj_coords[0] == doctest::Approx(0.1));
  CHECK(m.settings.config.sweep_axis == Axis::y);
}

TEST_CASE("map files round-trip byte for byte") {
  NoiseMapFile f = small_map();
  f.extra_comments = {"# operator: bench 2", "#free text"};
  const std::string first = write_map(f);
  const NoiseMapFile back = parse_map(first);
  CHECK(write_map(back) == first);
  CHECK(back.extra_comments == f.extra_comments);
  CHECK(back.map.kind == MapKind::raster);
  CHECK(back.map.layout_hash == f.map.layout_hash);
  for (std::size_t k = 0; k < f.map.cells(); ++k)
    CHECK(back.map.values[k].nrf_db == f.map.values[k].nrf_db);
}

TEST_CASE("sweep map round trip") {
  NoiseMapFile f;
  f.map = simulate_scene(parse_scene("layout:\n  areas:\n    - {center: [0, 0], gain: 2}\n"
                                     "scan:\n  kind: sweep\n  probe: {from: -0.2, to: 0.2, steps: 4}\n"
                                     "edge_scatter: 0.3\nefficiency: 0.9\n"));
  const std::string text = write_map(f);
  const NoiseMapFile back = parse_map(text);
  CHECK(back.map.kind == MapKind::sweep);
  CHECK(back.map.settings.edge_scatter == 0.3);
  CHECK(back.map.settings.efficiency == 0.9);
  CHECK(write_map(back) == text);
}

TEST_CASE("measured format: no comments and no stderr column") {
  const std::string text = "probe_mm,conj_mm,variance,snl,nrf,nrf_db\n"
                           "0,0,1,2,0.5,-3.0103\n"
                           "0,1,1,2,0.5,-3.0103\n"
                           "1,0,1,2,0.5,-3.0103\n"
                           "1,1,1,2,0.5,-3.0103\n";
  const NoiseMapFile f = parse_map(text);
  CHECK(f.map.kind == MapKind::raster);
  CHECK(f.map.probe_coords.size() == 2);
  CHECK(f.map.conj_coords.size() == 2);
  CHECK(f.map.values[3].stderr_nrf == 0.0);
  CHECK(f.map.settings.config == ChannelConfig::split());

  const NoiseMapFile sweep = parse_map("probe_mm,conj_mm,variance,snl,nrf,nrf_db\n0,0,1,1,1,0\n1,-0.5,1,1,1,0\n");
  CHECK(sweep.map.kind == MapKind::sweep);
}

TEST_CASE("malformed map files name the problem") {
  try {
    parse_map("probe_mm,conj_mm,variance,snl,nfr,nrf_db\n0,0,1,1,1,0\n");
    FAIL("expected InputError");
  } catch (const InputError &e) {
    CHECK(std::string(e.what()).find("'nfr'") != std::string::npos);
    CHECK(e.line() == 1);
    CHECK(e.column() == 5);
  }
  CHECK_THROWS_AS(parse_map(""), InputError);
  CHECK_THROWS_AS(parse_map("# schema: 1\n"), InputError);
  CHECK_THROWS_AS(parse_map("probe_mm,conj_mm,variance,snl,nrf,nrf_db\n"), InputError);
  CHECK_THROWS_AS(parse_map("probe_mm,conj_mm,variance,snl,nrf\n0,0,1,1,1\n"), InputError);
  CHECK_THROWS_AS(parse_map("probe_mm,conj_mm,variance,snl,nrf,nrf_db\n0,0,1,1,x,0\n"), InputError);
  CHECK_THROWS_AS(parse_map("probe_mm,conj_mm,variance,snl,nrf,nrf_db\n0,0,1,1,1\n"), InputError);
  CHECK_THROWS_AS(parse_map("# schema: 7\nprobe_mm,conj_mm,variance,snl,nrf,nrf_db\n0,0,1,1,1,0\n"), InputError);
  CHECK_THROWS_AS(parse_map("# grid: 3x3\nprobe_mm,conj_mm,variance,snl,nrf,nrf_db\n0,0,1,1,1,0\n"), InputError);
}

TEST_CASE("SVG heatmap") {
  const NoiseMapFile f = small_map();
  const std::string svg = render_svg(f.map, {"test <map>", 0});
  CHECK(svg.rfind("<?xml", 0) == 0);
  const std::regex cell("class=\"cell\"");
  CHECK(std::distance(std::sregex_iterator(svg.begin(), svg.end(), cell), std::sregex_iterator()) == 15);
  CHECK(svg.find("(mm)") != std::string::npos);
  CHECK(svg.find("test &lt;map&gt;") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("SVG sweep polyline") {
  NoiseMapFile f;
  f.map = simulate_scene(parse_scene("layout:\n  areas:\n    - {center: [0, 0], gain: 2}\n"
                                     "scan:\n  kind: sweep\n  probe: {from: -0.2, to: 0.2, steps: 7}\n"));
  const std::string svg = render_svg(f.map);
  CHECK(svg.find("<polyline class=\"sweep\"") != std::string::npos);
  CHECK(svg.find("class=\"cell\"") == std::string::npos);
}

TEST_CASE("color scale is symmetric about 0 dB") {
  CHECK(diverging_color(0.0, 2.0) == "#ffffff");
  CHECK(diverging_color(-2.0, 2.0) != diverging_color(2.0, 2.0));
  CHECK(diverging_color(-5.0, 2.0) == diverging_color(-2.0, 2.0));
  CHECK(diverging_color(1.0, 2.0) != "#ffffff");
}

TEST_CASE("fit report JSON") {
  FitReportInput in;
  in.map_paths = {"a.csv"};
  FitResult fit;
  fit.pairs = {{{0.1, 0.0}, 0.2, 1.3, 1.0, 0.0}};
  fit.residual = 0.01;
  fit.converged = true;
  in.selection.best_k = 1;
  in.selection.k_values = {1};
  in.selection.scores = {-10.0};
  in.selection.fits = {fit};
  const auto doc = nlohmann::json::parse(fit_report_json(in));
  CHECK(doc["best_k"] == 1);
  CHECK(doc["converged"] == true);
  CHECK(doc["fits"][0]["pairs"][0]["gain"] == 1.3);
  CHECK(doc["fits"][0]["residual_rms_db"] == 0.01);
}
