#include "qhw/lyapunov.hpp"

#include <cmath>
#include <stdexcept>

#include "qhw/rng.hpp"

namespace qhw {

bool on_manifold(double x, const Vec& z, double tol) {
  const double xminus = std::max(-x, 0.0);
  return std::abs(z.sum() + xminus) <= tol * (1.0 + std::abs(x) + z.cwiseAbs().sum());
}

static void require_on_manifold(double x, const Vec& z) {
  if (!on_manifold(x, z))
    throw std::domain_error("state off the manifold e'z + x^- = 0");
}

double g_value(const LyapunovFn& fn, double x, const Vec& z) {
  require_on_manifold(x, z);
  const Vec zb = z + fn.beta * fn.gamma;
  const double quad = fn.kappa * zb.dot(fn.Q * zb);
  if (fn.beta >= 0.0) {
    const double s = x + fn.beta;
    return s * s + quad;
  }
  const double s = fn.alpha * x + fn.mu * fn.beta;
  return s * s + quad;
}

double sqrt_g(const LyapunovFn& fn, double x, const Vec& z) {
  return std::sqrt(std::max(g_value(fn, x, z), 0.0));
}

double fluid_drift_g(const LyapunovFn& fn, const Mat& R, const Vec& p,
                     double x, const Vec& z) {
  require_on_manifold(x, z);
  const int K = static_cast<int>(z.size());
  const Vec e = Vec::Ones(K);
  const double etRz = (R.transpose() * e).dot(z);

  double xdot;
  Vec zdot(K);
  if (x >= 0.0) {
    xdot = -fn.mu * fn.beta - fn.alpha * x - etRz;
    const Vec rz = R * z;
    zdot = -(rz - p * (e.dot(rz)));  // −(I−pe')Rz
  } else {
    xdot = -fn.mu * fn.beta - etRz;
    zdot = -fn.mu * fn.beta * p - R * z;
  }

  const Vec zb = z + fn.beta * fn.gamma;
  const double dgdx = (fn.beta >= 0.0)
                          ? 2.0 * (x + fn.beta)
                          : 2.0 * fn.alpha * (fn.alpha * x + fn.mu * fn.beta);
  return dgdx * xdot + 2.0 * fn.kappa * zb.dot(fn.Q * zdot);
}

Vec project_to_manifold(double x, const Vec& w) {
  const int K = static_cast<int>(w.size());
  const double xminus = std::max(-x, 0.0);
  return w - Vec::Constant(K, (w.sum() + xminus) / K);
}

double lipschitz_estimate(const LyapunovFn& fn, int pairs, std::uint64_t seed) {
  if (pairs < 2) throw std::invalid_argument("lipschitz_estimate: need >= 2 pairs");
  RngStream rng(seed, 31);
  const int K = static_cast<int>(fn.gamma.size());
  double best = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const double scale = std::exp(rng.normal() * 1.5);
    double xa = rng.normal() * scale, xb = rng.normal() * scale;
    Vec wa(K), wb(K);
    for (int k = 0; k < K; ++k) {
      wa[k] = rng.normal() * scale;
      wb[k] = rng.normal() * scale;
    }
    const Vec za = project_to_manifold(xa, wa);
    const Vec zb = project_to_manifold(xb, wb);
    const double num = std::abs(sqrt_g(fn, xa, za) - sqrt_g(fn, xb, zb));
    const double den =
        std::sqrt((xa - xb) * (xa - xb) + (za - zb).squaredNorm());
    if (den > 1e-12) best = std::max(best, num / den);
  }
  return best;
}

}  // namespace qhw
