#include <twinmap/simplex.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace twinmap {

SimplexResult nelder_mead(const Objective &f, std::vector<double> x0, const SimplexOptions &opt) {
  const std::size_t n = x0.size();
  if (n == 0)
    throw std::invalid_argument("nelder_mead needs at least one parameter");

  const double dn = static_cast<double>(n);
  const double alpha = 1.0;
  const double beta = n > 1 ? 1.0 + 2.0 / dn : 2.0;
  const double gamma = n > 1 ? 0.75 - 0.5 / dn : 0.5;
  const double delta = n > 1 ? 1.0 - 1.0 / dn : 0.5;

  SimplexResult res;
  auto eval = [&](const std::vector<double> &x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? HUGE_VAL : v;
  };

  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i)
    pts[i + 1][i] += opt.initial_step;
  for (std::size_t i = 0; i <= n; ++i)
    vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), xr(n), xe(n), xc(n);

  auto combine = [&](std::vector<double> &out, double t, const std::vector<double> &worst) {
    for (std::size_t k = 0; k < n; ++k)
      out[k] = centroid[k] + t * (centroid[k] - worst[k]);
  };

  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double diameter = 0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        diameter = std::max(diameter, std::abs(pts[i][k] - pts[best][k]));
    if (diameter < opt.tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.max_iterations)
      break;
    ++res.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k)
          centroid[k] += pts[i][k] / dn;

    combine(xr, alpha, pts[worst]);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      combine(xe, alpha * beta, pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      combine(xc, outside ? alpha * gamma : -gamma, pts[worst]);
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[worst])) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best)
            continue;
          for (std::size_t k = 0; k < n; ++k)
            pts[i][k] = pts[best][k] + delta * (pts[i][k] - pts[best][k]);
          vals[i] = eval(pts[i]);
        }
      }
    }
    res.best_trace.push_back(*std::min_element(vals.begin(), vals.end()));
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

} // namespace twinmap
