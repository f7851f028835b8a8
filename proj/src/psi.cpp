#include "qhw/psi.hpp"

#include <cmath>
#include <stdexcept>

namespace qhw {

int Grid::steps() const {
  if (!(dt > 0.0) || !(t_end > 0.0))
    throw std::invalid_argument("grid: dt and t_end must be positive");
  const double ratio = t_end / dt;
  const long long m = std::llround(ratio);
  if (m <= 0 || m > 100000000LL || std::abs(ratio - static_cast<double>(m)) > 1e-6)
    throw std::invalid_argument("grid: t_end/dt must be a whole number <= 1e8");
  return static_cast<int>(m);
}

namespace {

void check_input(const InputPath& in, int K, int m) {
  if (in.u.size() != m + 1 || in.v.rows() != m + 1 || in.v.cols() != K)
    throw std::invalid_argument("psi: input path does not match the grid");
  for (int i = 0; i <= m; ++i) {
    const double rowsum = in.v.row(i).sum();
    if (std::abs(rowsum) > 1e-9 * (1.0 + in.v.row(i).cwiseAbs().sum()))
      throw std::invalid_argument("psi: input v leaves the subspace e'v = 0");
  }
}

}  // namespace

PsiStepper::PsiStepper(double alpha, const Mat& R, const Vec& p, double dt)
    : alpha_(alpha), R_(R), p_(p), dt_(dt) {
  const int K = static_cast<int>(R.rows());
  const Vec e = Vec::Ones(K);
  etR_ = R.transpose() * e;
  proj_R_ = (Mat::Identity(K, K) - p * e.transpose()) * R;
  acc_z_ = Vec::Zero(K);
  prev_z_ = Vec::Zero(K);
}

void PsiStepper::reset() {
  first_ = true;
  acc_xplus_ = 0.0;
  acc_z_.setZero();
  prev_x_ = 0.0;
  prev_z_.setZero();
}

void PsiStepper::step(double u, const Vec& v, double& x_out, Vec& z_out) {
  if (first_) {
    // t = 0: integrals vanish; z(0) picks up only the boundary term.
    x_out = u;
    z_out = v - p_ * std::max(-x_out, 0.0);
    prev_x_ = x_out;
    prev_z_ = z_out;
    first_ = false;
    return;
  }
  // Trapezoid over [0, t_{i−1}] plus left-endpoint rectangle on the last step.
  const double ix = acc_xplus_ + dt_ * std::max(prev_x_, 0.0);
  const Vec iz = acc_z_ + dt_ * prev_z_;
  x_out = u - alpha_ * ix - etR_.dot(iz);
  z_out = v - p_ * std::max(-x_out, 0.0) - proj_R_ * iz;
  // Fold the completed step into the trapezoid accumulators.
  acc_xplus_ +=
      0.5 * dt_ * (std::max(prev_x_, 0.0) + std::max(x_out, 0.0));
  acc_z_ += 0.5 * dt_ * (prev_z_ + z_out);
  prev_x_ = x_out;
  prev_z_ = z_out;
}

StatePath psi(const InputPath& in, double alpha, const Mat& R, const Vec& p,
              const Grid& grid) {
  const int m = grid.steps();
  const int K = static_cast<int>(R.rows());
  check_input(in, K, m);
  StatePath out;
  out.x.resize(m + 1);
  out.z.resize(m + 1, K);
  PsiStepper stepper(alpha, R, p, grid.dt);
  Vec z(K);
  for (int i = 0; i <= m; ++i) {
    double x;
    stepper.step(in.u[i], in.v.row(i).transpose(), x, z);
    out.x[i] = x;
    out.z.row(i) = z.transpose();
  }
  return out;
}

double residual(const StatePath& out, const InputPath& in, double alpha,
                const Mat& R, const Vec& p, const Grid& grid) {
  const int m = grid.steps();
  const int K = static_cast<int>(R.rows());
  check_input(in, K, m);
  if (out.x.size() != m + 1 || out.z.rows() != m + 1)
    throw std::invalid_argument("residual: output path does not match the grid");
  const Vec e = Vec::Ones(K);
  const Vec etR = R.transpose() * e;
  const Mat proj_R = (Mat::Identity(K, K) - p * e.transpose()) * R;

  double worst = 0.0;
  double ix = 0.0;
  Vec iz = Vec::Zero(K);
  for (int i = 0; i <= m; ++i) {
    if (i > 0) {
      ix += 0.5 * grid.dt *
            (std::max(out.x[i - 1], 0.0) + std::max(out.x[i], 0.0));
      iz += 0.5 * grid.dt * (out.z.row(i - 1) + out.z.row(i)).transpose();
    }
    const double defect_x =
        std::abs(out.x[i] - in.u[i] + alpha * ix + etR.dot(iz));
    const Vec defect_z = out.z.row(i).transpose() -
                         in.v.row(i).transpose() +
                         p * std::max(-out.x[i], 0.0) + proj_R * iz;
    worst = std::max(worst, defect_x);
    worst = std::max(worst, defect_z.cwiseAbs().maxCoeff());
  }
  return worst;
}

double check_homogeneity(const InputPath& in, double scale_b, double alpha,
                         const Mat& R, const Vec& p, const Grid& grid) {
  if (!(scale_b > 0.0))
    throw std::invalid_argument("check_homogeneity: scale must be positive");
  const StatePath base = psi(in, alpha, R, p, grid);
  InputPath scaled;
  scaled.u = scale_b * in.u;
  scaled.v = scale_b * in.v;
  const StatePath image = psi(scaled, alpha, R, p, grid);
  double worst = 0.0;
  for (int i = 0; i < base.x.size(); ++i) {
    worst = std::max(worst, std::abs(image.x[i] - scale_b * base.x[i]));
    worst = std::max(
        worst,
        (image.z.row(i) - scale_b * base.z.row(i)).cwiseAbs().maxCoeff());
  }
  return worst;
}

double path_magnitude(const StatePath& path) {
  double m = path.x.cwiseAbs().maxCoeff();
  if (path.z.size()) m = std::max(m, max_abs(path.z));
  return m;
}

double path_magnitude(const InputPath& path) {
  double m = path.u.cwiseAbs().maxCoeff();
  if (path.v.size()) m = std::max(m, max_abs(path.v));
  return m;
}

double check_lipschitz(const InputPath& in1, const InputPath& in2, double alpha,
                       const Mat& R, const Vec& p, const Grid& grid) {
  const StatePath o1 = psi(in1, alpha, R, p, grid);
  const StatePath o2 = psi(in2, alpha, R, p, grid);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < o1.x.size(); ++i) {
    num = std::max(num, std::abs(o1.x[i] - o2.x[i]));
    num = std::max(num, (o1.z.row(i) - o2.z.row(i)).cwiseAbs().maxCoeff());
    den = std::max(den, std::abs(in1.u[i] - in2.u[i]));
    den = std::max(den, (in1.v.row(i) - in2.v.row(i)).cwiseAbs().maxCoeff());
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

StatePath psi_fixed_point(const InputPath& in, double alpha, const Mat& R,
                          const Vec& p, const Grid& grid, int max_sweeps,
                          double tol) {
  const int m = grid.steps();
  const int K = static_cast<int>(R.rows());
  check_input(in, K, m);
  const Vec e = Vec::Ones(K);
  const Vec etR = R.transpose() * e;
  const Mat proj_R = (Mat::Identity(K, K) - p * e.transpose()) * R;

  StatePath cur;
  cur.x = in.u;
  cur.z = in.v;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    StatePath next;
    next.x.resize(m + 1);
    next.z.resize(m + 1, K);
    double change = 0.0;
    double ix = 0.0;
    Vec iz = Vec::Zero(K);
    for (int i = 0; i <= m; ++i) {
      if (i > 0) {
        // Trapezoid with the *current* iterate's endpoint values.
        ix += 0.5 * grid.dt *
              (std::max(cur.x[i - 1], 0.0) + std::max(cur.x[i], 0.0));
        iz += 0.5 * grid.dt * (cur.z.row(i - 1) + cur.z.row(i)).transpose();
      }
      next.x[i] = in.u[i] - alpha * ix - etR.dot(iz);
      next.z.row(i) = (in.v.row(i).transpose() -
                       p * std::max(-next.x[i], 0.0) - proj_R * iz)
                          .transpose();
      change = std::max(change, std::abs(next.x[i] - cur.x[i]));
      change = std::max(
          change, (next.z.row(i) - cur.z.row(i)).cwiseAbs().maxCoeff());
    }
    cur = next;
    if (change < tol) break;
  }
  return cur;
}

}  // namespace qhw
