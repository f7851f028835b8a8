#include "qhw/cqlf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "qhw/rng.hpp"

namespace qhw {

namespace {

// One cyclic Jacobi sweep threshold; K ≤ ~10 so convergence is a few sweeps.
constexpr int kMaxSweeps = 60;

void jacobi_rotate(Mat& a, Mat& v, int p, int q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0)
                       ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                       : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;
  const int n = static_cast<int>(a.rows());
  for (int i = 0; i < n; ++i) {
    const double aip = a(i, p), aiq = a(i, q);
    a(i, p) = c * aip - s * aiq;
    a(i, q) = s * aip + c * aiq;
  }
  for (int i = 0; i < n; ++i) {
    const double api = a(p, i), aqi = a(q, i);
    a(p, i) = c * api - s * aqi;
    a(q, i) = s * api + c * aqi;
  }
  for (int i = 0; i < n; ++i) {
    const double vip = v(i, p), viq = v(i, q);
    v(i, p) = c * vip - s * viq;
    v(i, q) = s * vip + c * viq;
  }
}

// Tangent-space projection onto {Δ symmetric : Δγ = r_target − Sγ}: the
// minimal-Frobenius symmetric correction is sym(yγ') with
// (|γ|²I + γγ')y = 2r, inverted in closed form by Sherman–Morrison.
Mat slice_correction(const Vec& gamma, const Vec& r) {
  const double g2 = gamma.squaredNorm();
  const Vec y = (2.0 / g2) * (r - gamma * (gamma.dot(r) / (2.0 * g2)));
  return 0.5 * (y * gamma.transpose() + gamma * y.transpose());
}

Mat project_to_slice(const Mat& q, const Vec& gamma) {
  const int K = static_cast<int>(q.rows());
  const Vec r = Vec::Ones(K) - q * gamma;
  return q + slice_correction(gamma, r);
}

Mat project_tangent(const Mat& grad, const Vec& gamma) {
  const Vec r = -(grad * gamma);
  return grad + slice_correction(gamma, r);
}

struct Penalty {
  double value;
  Mat grad;  // subgradient w.r.t. Q, already symmetric
};

// Hinge penalty for (Q PD by δ, QR+R'Q PD by δ, M3 PSD up to 1e−9 slack).
// Subgradients use the minimal eigenvector's outer products.
Penalty penalty(const Mat& q, const Mat& R, const Mat& S, double delta) {
  const int K = static_cast<int>(q.rows());
  Penalty out{0.0, Mat::Zero(K, K)};

  {
    const SymEig e = sym_eig(q);
    const double viol = delta - e.values[0];
    if (viol > 0.0) {
      const Vec v = e.vectors.col(0);
      out.value += viol;
      out.grad -= v * v.transpose();
    }
  }
  {
    const SymEig e = sym_eig(q * R + R.transpose() * q);
    const double viol = delta - e.values[0];
    if (viol > 0.0) {
      const Vec v = e.vectors.col(0);
      out.value += viol;
      const Vec rv = R * v;
      out.grad -= rv * v.transpose() + v * rv.transpose();
    }
  }
  {
    const SymEig e = sym_eig(q * S + S.transpose() * q);
    const double viol = -e.values[0] - 1e-9;
    if (viol > 0.0) {
      const Vec v = e.vectors.col(0);
      out.value += viol;
      const Vec sv = S * v;
      out.grad -= sv * v.transpose() + v * sv.transpose();
    }
  }
  return out;
}

}  // namespace

SymEig sym_eig(const Mat& m) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw std::invalid_argument("sym_eig: not square");
  const double scale = std::max(1.0, max_abs(m));
  if (max_abs(m - m.transpose()) > 1e-10 * scale)
    throw std::invalid_argument("sym_eig: matrix not symmetric");

  Mat a = sym_part(m);
  Mat v = Mat::Identity(n, n);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * scale * scale) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q)
        if (std::abs(a(p, q)) > 1e-18 * scale) jacobi_rotate(a, v, p, q);
  }

  SymEig out;
  out.values = a.diagonal();
  out.vectors = v;
  // Sort ascending, carrying eigenvectors along.
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](int i, int j) { return out.values[i] < out.values[j]; });
  Vec vals(n);
  Mat vecs(n, n);
  for (int i = 0; i < n; ++i) {
    vals[i] = out.values[idx[i]];
    vecs.col(i) = out.vectors.col(idx[i]);
  }
  out.values = vals;
  out.vectors = vecs;
  return out;
}

double lambda_min_sym(const Mat& m) { return sym_eig(m).values[0]; }

std::pair<double, double> rayleigh_sweep(const Mat& m, int count, std::uint64_t seed) {
  RngStream rng(seed, 7701);
  const int n = static_cast<int>(m.rows());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < count; ++i) {
    Vec v(n);
    for (int j = 0; j < n; ++j) v[j] = rng.normal();
    v.normalize();
    const double r = v.dot(m * v);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo, hi};
}

std::optional<Cqlf> solve_q(const Mat& R, const Vec& p, const Vec& gamma,
                            double tol, std::uint64_t seed) {
  const int K = static_cast<int>(R.rows());
  const Vec e = Vec::Ones(K);
  const Mat S = (Mat::Identity(K, K) - p * e.transpose()) * R;
  const double delta = 1e-6 * R.norm();
  const int restarts = 20;
  const int iters = 4000;

  const Mat q_init = project_to_slice(
      lyapunov_solve(R, Mat::Identity(K, K)), gamma);

  auto certified = [&](const Mat& q) {
    if ((q * gamma - e).cwiseAbs().maxCoeff() > tol) return false;
    if (lambda_min_sym(q) <= 0.0) return false;
    if (lambda_min_sym(q * R + R.transpose() * q) <= 0.0) return false;
    if (lambda_min_sym(q * S + S.transpose() * q) < -tol) return false;
    return true;
  };

  for (int restart = 0; restart < restarts; ++restart) {
    Mat q = q_init;
    if (restart > 0) {
      RngStream rng(seed, 100 + restart);
      Mat noise(K, K);
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) noise(i, j) = rng.normal();
      q = project_to_slice(q_init + 0.3 * restart * sym_part(noise) *
                                        (q_init.norm() / std::sqrt(1.0 * K)),
                           gamma);
    }
    for (int it = 0; it < iters; ++it) {
      const Penalty pen = penalty(q, R, S, delta);
      if (pen.value <= 0.0) break;
      Mat dir = project_tangent(pen.grad, gamma);
      const double norm2 = dir.squaredNorm();
      if (norm2 <= 1e-300) break;  // flat within the slice; restart
      // Polyak step toward the (known-feasible) zero level.
      q = project_to_slice(q - (pen.value / norm2) * dir, gamma);
      q = sym_part(q);
    }
    if (certified(q)) {
      // Require a usable band (strict restricted positivity); re-solve if not.
      const auto band = check_z_band(q, R, p);
      if (K > 1 && !(band.first > 1e-8 * std::max(1.0, q.norm() * R.norm())))
        continue;
      Cqlf out;
      out.Q = q;
      out.b = gamma.dot(q * gamma);  // = 1 on the slice {Qγ = e}
      return out;
    }
  }
  return std::nullopt;
}

std::pair<double, double> check_z_band(const Mat& Q, const Mat& R, const Vec& p) {
  const int K = static_cast<int>(Q.rows());
  const double inf = std::numeric_limits<double>::infinity();
  if (K == 1) return {inf, inf};  // {h : e'h = 0, |h| = 1} is empty
  const Vec e = Vec::Ones(K);
  const Mat S = (Mat::Identity(K, K) - p * e.transpose()) * R;
  const Mat m3 = Q * S + S.transpose() * Q;
  // Orthonormal basis of e⊥ via Householder: columns 2..K of the reflector
  // sending e/|e| to the first coordinate axis.
  Mat basis(K, K - 1);
  {
    Vec w = e.normalized();
    w[0] += 1.0;
    w.normalize();
    const Mat H = Mat::Identity(K, K) - 2.0 * w * w.transpose();
    basis = H.rightCols(K - 1);
  }
  const SymEig eig = sym_eig(basis.transpose() * m3 * basis);
  return {eig.values[0], eig.values[eig.values.size() - 1]};
}

double select_kappa(const Mat& Q, const Mat& R, const Vec& p, double alpha,
                    double mu) {
  const int K = static_cast<int>(R.rows());
  const Vec e = Vec::Ones(K);
  const Mat qr = Q * R + R.transpose() * Q;
  const Mat ee_r = e * (e.transpose() * R);
  const Mat cond_i_base = ee_r + ee_r.transpose();
  const double etr_norm = (R.transpose() * e).norm();
  const double cond_ii_shift = -2.0 * alpha * std::max(alpha, mu) * etr_norm;
  const double c_b = check_z_band(Q, R, p).first;
  const double band_need =
      etr_norm * etr_norm * std::max(1.0 / std::min(alpha, mu), alpha);

  for (double kappa = 1.0; kappa <= std::ldexp(1.0, 60); kappa *= 2.0) {
    if (lambda_min_sym(cond_i_base + kappa * qr) <= 0.0) continue;
    if (cond_ii_shift + kappa * lambda_min_sym(qr) <= 0.0) continue;
    if (!(std::isinf(c_b) || kappa * c_b / 2.0 >= band_need)) continue;
    return kappa;
  }
  throw std::runtime_error("select_kappa: budget exhausted");
}

CqlfCertificates certify(const Mat& Q, double kappa, const Mat& R, const Vec& p,
                         double alpha, double mu) {
  const int K = static_cast<int>(R.rows());
  const Vec e = Vec::Ones(K);
  const Mat S = (Mat::Identity(K, K) - p * e.transpose()) * R;
  const Mat qr = Q * R + R.transpose() * Q;
  const Mat ee_r = e * (e.transpose() * R);
  const double etr_norm = (R.transpose() * e).norm();

  CqlfCertificates c;
  c.lmin_q = lambda_min_sym(Q);
  c.lmin_qr = lambda_min_sym(qr);
  c.lmin_m3 = lambda_min_sym(Q * S + S.transpose() * Q);
  c.lmin_cond_i = lambda_min_sym(ee_r + ee_r.transpose() + kappa * qr);
  c.lmin_cond_ii = -2.0 * alpha * std::max(alpha, mu) * etr_norm +
                   kappa * c.lmin_qr;
  const double c_b = check_z_band(Q, R, p).first;
  const double band_need =
      etr_norm * etr_norm * std::max(1.0 / std::min(alpha, mu), alpha);
  c.band_margin = std::isinf(c_b)
                      ? std::numeric_limits<double>::infinity()
                      : kappa * c_b / 2.0 - band_need;
  return c;
}

}  // namespace qhw
