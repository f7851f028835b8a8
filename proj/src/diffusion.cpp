#include "qhw/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "qhw/cqlf.hpp"

namespace qhw {

Mat DiffusionCoeffs::assembled() const {
  const Eigen::Index K = cov_v.rows();
  Mat A(K + 1, K + 1);
  A(0, 0) = var_u;
  A.block(0, 1, 1, K) = cross.transpose();
  A.block(1, 0, K, 1) = cross;
  A.block(1, 1, K, K) = cov_v;
  return A;
}

DiffusionCoeffs derive_covariance(const PhaseTypeParams& params, double cu2,
                                  double alpha) {
  if (cu2 < 0.0)
    throw std::invalid_argument("derive_covariance: cu2 must be >= 0");
  const ValidationResult vr = validate(params);
  if (!vr.ok) throw std::invalid_argument("derive_covariance: " + vr.message);
  const DerivedServiceData d = derive(params);
  const int K = params.K;
  const Mat& P = params.P;
  const Vec e = Vec::Ones(K);

  // Completion + routing noise rate seen by the martingale part: Bernoulli
  // routing marks around each phase-k completion (rate ν_k γ_k) plus the
  // compensated completion counts mapped through (I − P').
  Mat sigma_m = Mat::Zero(K, K);
  for (int k = 0; k < K; ++k) {
    const Vec pk = P.row(k).transpose();
    sigma_m += params.nu[k] * d.gamma[k] *
               (Mat(pk.asDiagonal()) - pk * pk.transpose());
  }
  const Mat imp = Mat::Identity(K, K) - P;
  sigma_m += imp.transpose() *
             params.nu.cwiseProduct(d.gamma).asDiagonal() * imp;

  // The abandonment component has a vanishing fluid time argument at
  // criticality, so alpha does not enter the limit covariance.
  (void)alpha;

  const Mat ipe = Mat::Identity(K, K) - params.p * e.transpose();  // I − pe'
  DiffusionCoeffs c;
  c.var_u = cu2 * d.mu + e.dot(sigma_m * e);
  c.cov_v = d.mu * (Mat(params.p.asDiagonal()) -
                    params.p * params.p.transpose()) +
            ipe * sigma_m * ipe.transpose();
  c.cross = ipe * sigma_m * e;

  const Mat A = c.assembled();
  const double lmin = lambda_min_sym(A);
  if (lmin < -1e-10 * std::max(1.0, max_abs(A)))
    throw std::runtime_error(
        "derive_covariance: assembled covariance not PSD (lambda_min " +
        std::to_string(lmin) + ")");
  return c;
}

Mat empirical_increment_covariance(const SystemConfig& config, double t_end,
                                   double window, double burn_in, double dt,
                                   std::uint64_t seed) {
  if (window <= 0.0 || burn_in < 0.0)
    throw std::invalid_argument("empirical_increment_covariance: bad window");
  const Components comp = extract_components(config, t_end, dt, seed);
  const int K = static_cast<int>(comp.v.cols());
  const int wsteps = static_cast<int>(llround(window / dt));
  if (wsteps < 1 ||
      std::abs(wsteps * dt - window) > 1e-9 * std::max(1.0, window))
    throw std::invalid_argument(
        "empirical_increment_covariance: window must be a multiple of dt");
  const int i0 = static_cast<int>(llround(burn_in / dt));
  const int S = comp.grid.steps();
  const int m = (S - i0) / wsteps;
  if (m < 2)
    throw std::invalid_argument(
        "empirical_increment_covariance: fewer than 2 windows");

  Mat inc(m, K + 1);
  for (int j = 0; j < m; ++j) {
    const int a = i0 + j * wsteps;
    const int b = a + wsteps;
    inc(j, 0) = comp.u[b] - comp.u[a];
    inc.block(j, 1, 1, K) = comp.v.row(b) - comp.v.row(a);
  }
  const Eigen::RowVectorXd mean = inc.colwise().mean();
  const Mat centered = inc.rowwise() - mean;
  return (centered.transpose() * centered) / (double(m - 1) * window);
}

DiffusionCoeffs reconcile_cross(const DiffusionCoeffs& derived,
                                const Mat& empirical, bool& warned) {
  DiffusionCoeffs out = derived;
  warned = false;
  const Eigen::Index K = derived.cov_v.rows();
  if (empirical.rows() != K + 1 || empirical.cols() != K + 1)
    throw std::invalid_argument("reconcile_cross: dimension mismatch");
  const Vec cross_e = empirical.block(1, 0, K, 1);
  const double scale = std::max(cross_e.cwiseAbs().maxCoeff(),
                                derived.cross.cwiseAbs().maxCoeff());
  if (scale > 1e-8 &&
      (derived.cross - cross_e).cwiseAbs().maxCoeff() > 0.15 * scale) {
    out.cross = cross_e;
    warned = true;
    std::cerr << "warning: derived and empirical u-v cross-covariances "
                 "disagree beyond 15%; using the empirical estimate\n";
  }
  return out;
}

namespace {

/// Cholesky factor of the assembled covariance; exactly zero input gives an
/// exactly zero factor so the zero-noise case reduces to the fluid path.
Mat noise_factor(const DiffusionCoeffs& coeffs) {
  Mat A = coeffs.assembled();
  if (max_abs(A) == 0.0) return Mat::Zero(A.rows(), A.cols());
  A.diagonal().array() += 1e-12;
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("simulate_pou: covariance Cholesky failed");
  return llt.matrixL();
}

}  // namespace

StatePath simulate_pou(double x0, const Vec& z0, const DiffusionCoeffs& coeffs,
                       double beta, double mu, double alpha, const Mat& R,
                       const Vec& p, const Grid& grid, std::uint64_t seed) {
  if (!on_manifold(x0, z0))
    throw std::invalid_argument("simulate_pou: start off the manifold");
  const int K = static_cast<int>(z0.size());
  const int S = grid.steps();
  const Mat L = noise_factor(coeffs);
  RngStream rng(seed, 17);

  const Vec e = Vec::Ones(K);
  const Vec v0 = z0 - p * (e.dot(z0));  // (I−pe')z0
  InputPath in;
  in.u.resize(S + 1);
  in.v.resize(S + 1, K);
  in.u[0] = x0;
  in.v.row(0) = v0.transpose();

  const double sdt = std::sqrt(grid.dt);
  double noise_u = 0.0;
  Vec noise_v = Vec::Zero(K);
  Vec gauss(K + 1), dw(K + 1);
  for (int i = 1; i <= S; ++i) {
    for (int j = 0; j <= K; ++j) gauss[j] = rng.normal();
    dw = L * gauss * sdt;
    noise_u += dw[0];
    noise_v += dw.tail(K);
    // keep the accumulated v-noise exactly on {e'v = 0} (Cholesky jitter
    // leaks mass onto the e-direction otherwise)
    noise_v.array() -= noise_v.sum() / K;
    in.u[i] = x0 - mu * beta * (grid.dt * i) + noise_u;
    in.v.row(i) = (v0 + noise_v).transpose();
  }
  return psi(in, alpha, R, p, grid);
}

DensityTable pou_1d_density_oracle(double beta, double alpha, double mu,
                                   double var_u, int grid_points) {
  if (var_u <= 0.0 || alpha <= 0.0 || mu <= 0.0)
    throw std::invalid_argument("pou_1d_density_oracle: rates must be positive");
  if (grid_points < 3)
    throw std::invalid_argument("pou_1d_density_oracle: grid too small");
  const double sd_plus = std::sqrt(var_u / (2.0 * alpha));
  const double sd_minus = std::sqrt(var_u / (2.0 * mu));
  const double sd = std::max(sd_plus, sd_minus);
  const double c_plus = -mu * beta / alpha;  // mode of the x>0 branch
  const double c_minus = -beta;              // mode of the x<0 branch
  const double lo = std::min({c_minus, c_plus, 0.0}) - 8.0 * sd;
  const double hi = std::max({c_minus, c_plus, 0.0}) + 8.0 * sd;

  DensityTable t;
  t.xs.resize(grid_points);
  t.pdf.resize(grid_points);
  t.cdf.resize(grid_points);
  const double h = (hi - lo) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    const double x = lo + i * h;
    t.xs[i] = x;
    const double expint = x >= 0.0 ? -mu * beta * x - 0.5 * alpha * x * x
                                   : -mu * beta * x - 0.5 * mu * x * x;
    t.pdf[i] = std::exp(2.0 * expint / var_u);
  }
  double total = 0.0;
  t.cdf[0] = 0.0;
  for (int i = 1; i < grid_points; ++i) {
    total += 0.5 * (t.pdf[i - 1] + t.pdf[i]) * h;
    t.cdf[i] = total;
  }
  t.pdf /= total;
  t.cdf /= total;
  return t;
}

EmpiricalDist estimate_stationary_pou(const DiffusionCoeffs& coeffs,
                                      double beta, double mu, double alpha,
                                      const Mat& R, const Vec& p, double dt,
                                      const StationaryOptions& opt,
                                      std::uint64_t seed) {
  const int K = static_cast<int>(p.size());
  // ν_k = R_kk because routing matrices have zero diagonal.
  const double min_nu = R.diagonal().minCoeff();
  const double relax = 1.0 / std::min({alpha, mu, min_nu});
  const double burn = opt.burn_in > 0.0 ? opt.burn_in : 100.0 * relax;
  double spacing = opt.spacing > 0.0 ? opt.spacing : 10.0 * relax;
  const std::size_t m = opt.n_samples;
  if (m < 4)
    throw std::invalid_argument("estimate_stationary_pou: need >= 4 samples");

  // Start at the drift minimizer projected to the manifold.
  Vec gamma_hat = R.partialPivLu().solve(p);
  gamma_hat /= gamma_hat.sum();
  const double x0 = -beta;
  const Vec z0 = project_to_manifold(x0, -beta * gamma_hat);
  const Vec e = Vec::Ones(K);
  const Vec v0 = z0 - p * (e.dot(z0));

  const Mat L = noise_factor(coeffs);
  RngStream rng(seed, 17);
  PsiStepper stepper(alpha, R, p, dt);

  const double sdt = std::sqrt(dt);
  double noise_u = 0.0;
  Vec noise_v = Vec::Zero(K);
  Vec gauss(K + 1), dw(K + 1);
  long long step_index = 0;
  double x_cur = 0.0;
  Vec z_cur(K);
  stepper.step(x0, v0, x_cur, z_cur);  // t = 0

  auto advance = [&]() {
    ++step_index;
    for (int j = 0; j <= K; ++j) gauss[j] = rng.normal();
    dw = L * gauss * sdt;
    noise_u += dw[0];
    noise_v += dw.tail(K);
    noise_v.array() -= noise_v.sum() / K;
    const double u = x0 - mu * beta * (dt * step_index) + noise_u;
    stepper.step(u, v0 + noise_v, x_cur, z_cur);
  };

  long long burn_steps = llround(burn / dt);
  long long gap = std::max<long long>(1, llround(spacing / dt));
  for (long long i = 0; i < burn_steps; ++i) advance();

  std::vector<double> xs;
  std::vector<Vec> zs;
  xs.reserve(m);
  zs.reserve(m);
  auto draw = [&]() {
    for (long long i = 0; i < gap; ++i) advance();
    xs.push_back(x_cur);
    zs.push_back(z_cur);
  };
  for (std::size_t i = 0; i < m; ++i) draw();

  int rounds = 0;
  double l1 = lag1_autocorr(xs);
  while (l1 > 0.5 && rounds < opt.max_extensions) {
    std::size_t kept = 0;
    for (std::size_t i = 1; i < xs.size(); i += 2, ++kept) {
      xs[kept] = xs[i];
      zs[kept] = zs[i];
    }
    xs.resize(kept);
    zs.resize(kept);
    spacing *= 2.0;
    gap *= 2;
    while (xs.size() < m) draw();
    l1 = lag1_autocorr(xs);
    ++rounds;
  }
  const bool warn = l1 > 0.5;
  if (warn)
    std::cerr << "warning: diffusion lag-1 autocorrelation " << l1
              << " still above 0.5 after " << rounds << " extension rounds\n";

  EmpiricalDist d;
  d.x = std::move(xs);
  d.z = std::move(zs);
  d.w.assign(m, 1.0 / static_cast<double>(m));
  d.n = 0;
  d.seed = seed;
  d.burn_in = burn;
  d.spacing = spacing;
  d.lag1 = l1;
  d.extensions = rounds;
  d.extension_warning = warn;
  std::vector<double> plus(m), minus(m);
  for (std::size_t i = 0; i < m; ++i) {
    plus[i] = std::max(d.x[i], 0.0);
    minus[i] = std::max(-d.x[i], 0.0);
  }
  const int batches = static_cast<int>(std::min<std::size_t>(32, m / 2));
  if (batches >= 2) {
    d.se_xplus = batch_means_se(plus, batches);
    d.se_xminus = batch_means_se(minus, batches);
  }
  return d;
}

}  // namespace qhw
