#include <twinmap/report.hpp>

#include <json.hpp>

namespace twinmap {

namespace {

nlohmann::json fit_json(const FitResult &fit, Axis axis) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto &p : fit.pairs)
    pairs.push_back({{"center_mm", {p.center.x, p.center.y}},
                     {"center_along_axis_mm", p.center.along(axis)},
                     {"sigma_mm", p.sigma},
                     {"gain", p.gain},
                     {"weight", p.weight},
                     {"conj_shift_mm", p.conj_shift}});
  return {{"pairs", pairs},
          {"k", fit.pairs.size()},
          {"residual_rms_db", fit.residual},
          {"rss", fit.rss},
          {"cells", fit.cells},
          {"parameters", fit.parameters},
          {"score_bic", fit.score},
          {"iterations", fit.iterations},
          {"starts", fit.starts},
          {"converged", fit.converged}};
}

} // namespace

std::string fit_report_json(const FitReportInput &in) {
  const auto &m = in.model;
  nlohmann::json fits = nlohmann::json::array();
  bool selected_converged = false;
  for (const auto &f : in.selection.fits) {
    fits.push_back(fit_json(f, in.axis));
    if (f.pairs.size() == in.selection.best_k)
      selected_converged = f.converged;
  }
  nlohmann::json doc = {
      {"maps", in.map_paths},
      {"axis", to_string(in.axis)},
      {"model",
       {{"pump_center_mm", {m.pump_center.x, m.pump_center.y}},
        {"conj_scale", m.conj_scale},
        {"symmetric", m.symmetric},
        {"fit_sigma", m.fit_sigma},
        {"fixed_sigma_mm", m.fixed_sigma},
        {"center_bounds_mm", {m.center.lo, m.center.hi}},
        {"sigma_bounds_mm", {m.sigma.lo, m.sigma.hi}},
        {"gain_bounds", {m.gain.lo, m.gain.hi}}}},
      {"optimizer",
       {{"starts_per_pair", in.options.starts_per_pair},
        {"max_iterations", in.options.max_iterations},
        {"tolerance", in.options.tolerance},
        {"seed", in.options.seed},
        {"rms_floor_db", in.options.rms_floor_db}}},
      {"best_k", in.selection.best_k},
      {"k_values", in.selection.k_values},
      {"scores", in.selection.scores},
      {"converged", selected_converged},
      {"fits", fits}};
  return doc.dump(2) + "\n";
}

} // namespace twinmap
