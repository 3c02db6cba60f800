#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

// Small derivative-free optimizers shared by the rate minimizations and the
// ML estimator. Header-only.
namespace qkd {

struct ScalarMinResult {
  double x = 0;
  double value = 0;
};

// Golden-section minimization on [lo, hi]. A pre-scan over `prescan` evenly
// spaced points picks the bracket, guarding against multimodality; the
// objective is then assumed unimodal inside the chosen bracket.
inline ScalarMinResult golden_section_min(const std::function<double(double)>& f,
                                          double lo, double hi, double xtol,
                                          int prescan = 0) {
  if (hi < lo) std::swap(lo, hi);
  double a = lo, b = hi;
  double best_x = 0.5 * (lo + hi);
  double best_f = f(best_x);

  if (prescan >= 2) {
    int best_i = -1;
    for (int i = 0; i < prescan; ++i) {
      double x = lo + (hi - lo) * i / (prescan - 1);
      double v = f(x);
      if (v < best_f) {
        best_f = v;
        best_x = x;
        best_i = i;
      }
    }
    if (best_i >= 0) {
      double step = (hi - lo) / (prescan - 1);
      a = std::max(lo, best_x - step);
      b = std::min(hi, best_x + step);
    }
  }

  constexpr double kInvPhi = 0.6180339887498949;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > xtol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    }
  }
  double xm = 0.5 * (a + b);
  double fm = f(xm);
  if (f1 < fm) {
    fm = f1;
    xm = x1;
  }
  if (f2 < fm) {
    fm = f2;
    xm = x2;
  }
  if (best_f < fm) {
    fm = best_f;
    xm = best_x;
  }
  return {xm, fm};
}

inline ScalarMinResult golden_section_max(const std::function<double(double)>& f,
                                          double lo, double hi, double xtol,
                                          int prescan = 0) {
  auto neg = [&](double x) { return -f(x); };
  ScalarMinResult r = golden_section_min(neg, lo, hi, xtol, prescan);
  return {r.x, -r.value};
}

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0;
  bool converged = false;
  int iterations = 0;
};

// Standard Nelder-Mead simplex local search. Convergence when the simplex
// diameter and the value spread both fall below the tolerances.
inline NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& start, double initial_step, double xtol,
    int max_iterations) {
  const size_t n = start.size();
  std::vector<std::vector<double>> xs(n + 1, start);
  std::vector<double> fs(n + 1);
  for (size_t i = 0; i < n; ++i) xs[i + 1][i] += initial_step;
  for (size_t i = 0; i <= n; ++i) fs[i] = f(xs[i]);

  auto order = [&]() {
    std::vector<size_t> idx(n + 1);
    for (size_t i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return fs[a] < fs[b]; });
    std::vector<std::vector<double>> nxs(n + 1);
    std::vector<double> nfs(n + 1);
    for (size_t i = 0; i <= n; ++i) {
      nxs[i] = xs[idx[i]];
      nfs[i] = fs[idx[i]];
    }
    xs.swap(nxs);
    fs.swap(nfs);
  };

  NelderMeadResult result;
  int it = 0;
  for (; it < max_iterations; ++it) {
    order();

    double diam = 0;
    for (size_t i = 0; i < n; ++i)
      diam = std::max(diam, std::abs(xs[n][i] - xs[0][i]));
    if (diam < xtol && std::abs(fs[n] - fs[0]) < xtol) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) centroid[j] += xs[i][j];
    }
    for (size_t j = 0; j < n; ++j) centroid[j] /= static_cast<double>(n);

    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (size_t j = 0; j < n; ++j)
        p[j] = centroid[j] + coef * (xs[n][j] - centroid[j]);
      return p;
    };

    std::vector<double> xr = blend(-1.0);
    double fr = f(xr);
    if (fr < fs[0]) {
      std::vector<double> xe = blend(-2.0);
      double fe = f(xe);
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
    } else {
      std::vector<double> xc = blend(fr < fs[n] ? -0.5 : 0.5);
      double fc = f(xc);
      if (fc < std::min(fr, fs[n])) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        for (size_t i = 1; i <= n; ++i) {
          for (size_t j = 0; j < n; ++j)
            xs[i][j] = xs[0][j] + 0.5 * (xs[i][j] - xs[0][j]);
          fs[i] = f(xs[i]);
        }
      }
    }
  }
  order();
  result.x = xs[0];
  result.value = fs[0];
  result.iterations = it;
  return result;
}

}  // namespace qkd
