/// Smooth analytic random inputs for the integral-map property suites. The
/// coefficients are drawn once so the same path can be sampled on grids of
/// different resolution.
#pragma once

#include <cmath>
#include <vector>

#include "qhw/psi.hpp"
#include "qhw/rng.hpp"

struct SmoothCoef {
  double a0 = 0.0, a1 = 0.0, w = 1.0, ph = 0.0;
  std::vector<double> b0, b1, ww, phv;
};

inline SmoothCoef draw_coef(int K, qhw::RngStream& rng) {
  SmoothCoef c;
  c.a0 = rng.normal();
  c.a1 = rng.normal();
  c.w = 1.0 + 2.0 * rng.u01();
  c.ph = 6.28 * rng.u01();
  c.b0.resize(K);
  c.b1.resize(K);
  c.ww.resize(K);
  c.phv.resize(K);
  for (int k = 0; k < K; ++k) {
    c.b0[k] = rng.normal();
    c.b1[k] = rng.normal();
    c.ww[k] = 1.0 + 2.0 * rng.u01();
    c.phv[k] = 6.28 * rng.u01();
  }
  return c;
}

/// Samples the analytic input on a grid; v is projected into {e'v = 0}.
inline qhw::InputPath eval_input(const SmoothCoef& c, int K,
                                 const qhw::Grid& grid) {
  const int m = grid.steps();
  qhw::InputPath in;
  in.u = qhw::Vec(m + 1);
  in.v = qhw::Mat(m + 1, K);
  for (int i = 0; i <= m; ++i) {
    const double t = i * grid.dt;
    in.u[i] = c.a0 + c.a1 * std::sin(c.w * t + c.ph);
    for (int k = 0; k < K; ++k)
      in.v(i, k) = c.b0[k] + c.b1[k] * std::sin(c.ww[k] * t + c.phv[k]);
    in.v.row(i).array() -= in.v.row(i).mean();
  }
  return in;
}
