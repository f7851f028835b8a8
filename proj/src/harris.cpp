#include "qhw/harris.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace qhw {

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Adaptive Simpson quadrature (standard halving with Richardson acceptance).
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 50);
}

}  // namespace

InterarrivalDist InterarrivalDist::exponential(double rate) {
  InterarrivalDist d;
  d.family_ = Family::exponential;
  d.a_ = rate;
  return d;
}

InterarrivalDist InterarrivalDist::erlang(int m, double rate) {
  InterarrivalDist d;
  d.family_ = Family::erlang;
  d.m_ = m;
  d.a_ = rate;
  return d;
}

InterarrivalDist InterarrivalDist::hyperexp(double q, double r1, double r2) {
  InterarrivalDist d;
  d.family_ = Family::hyperexp;
  d.a_ = q;
  d.b_ = r1;
  d.c_ = r2;
  return d;
}

InterarrivalDist InterarrivalDist::lognormal_mean1(double sigma) {
  InterarrivalDist d;
  d.family_ = Family::lognormal;
  d.a_ = sigma;
  d.b_ = -0.5 * sigma * sigma;  // log-mean pinning E[ξ] = 1
  return d;
}

InterarrivalDist InterarrivalDist::deterministic(double value) {
  InterarrivalDist d;
  d.family_ = Family::deterministic;
  d.a_ = value;
  return d;
}

std::string InterarrivalDist::name() const {
  std::ostringstream os;
  switch (family_) {
    case Family::exponential: os << "exponential(rate=" << a_ << ")"; break;
    case Family::erlang: os << "erlang(m=" << m_ << ",rate=" << a_ << ")"; break;
    case Family::hyperexp:
      os << "hyperexp(q=" << a_ << ",r1=" << b_ << ",r2=" << c_ << ")";
      break;
    case Family::lognormal: os << "lognormal(sigma=" << a_ << ")"; break;
    case Family::deterministic: os << "deterministic(" << a_ << ")"; break;
  }
  return os.str();
}

double InterarrivalDist::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  switch (family_) {
    case Family::exponential:
      return -std::expm1(-a_ * x);
    case Family::erlang: {
      double term = 1.0, sum = 1.0;
      for (int i = 1; i < m_; ++i) {
        term *= a_ * x / i;
        sum += term;
      }
      return 1.0 - std::exp(-a_ * x) * sum;
    }
    case Family::hyperexp:
      return 1.0 - a_ * std::exp(-b_ * x) - (1.0 - a_) * std::exp(-c_ * x);
    case Family::lognormal:
      return norm_cdf((std::log(x) - b_) / a_);
    case Family::deterministic:
      return x >= a_ ? 1.0 : 0.0;
  }
  return 0.0;
}

double InterarrivalDist::pdf(double x) const {
  if (x <= 0.0) {
    // Right-derivative convention at 0: only the exponential and hyperexp
    // families have positive density there.
    if (family_ == Family::exponential) return a_;
    if (family_ == Family::hyperexp) return a_ * b_ + (1.0 - a_) * c_;
    if (family_ == Family::erlang && m_ == 1) return a_;
    return 0.0;
  }
  switch (family_) {
    case Family::exponential:
      return a_ * std::exp(-a_ * x);
    case Family::erlang:
      return a_ * std::pow(a_ * x, m_ - 1) * std::exp(-a_ * x) / factorial(m_ - 1);
    case Family::hyperexp:
      return a_ * b_ * std::exp(-b_ * x) + (1.0 - a_) * c_ * std::exp(-c_ * x);
    case Family::lognormal: {
      const double t = (std::log(x) - b_) / a_;
      constexpr double sqrt_2pi = 2.5066282746310002;
      return std::exp(-0.5 * t * t) / (x * a_ * sqrt_2pi);
    }
    case Family::deterministic:
      return 0.0;
  }
  return 0.0;
}

double InterarrivalDist::hazard(double x) const {
  const double surv = 1.0 - cdf(x);
  if (surv < 1e-300) throw std::domain_error("hazard: survival underflow");
  return pdf(x) / surv;
}

double InterarrivalDist::survival_integral(double x) const {
  if (x < 0.0) x = 0.0;
  switch (family_) {
    case Family::exponential:
      return std::exp(-a_ * x) / a_;
    case Family::erlang: {
      // ∫ₓ^∞(1−F) = (1/r) e^{−rx} Σ_{i=0}^{m−1} (m−i)(rx)^i / i!
      double term = 1.0, sum = static_cast<double>(m_);
      for (int i = 1; i < m_; ++i) {
        term *= a_ * x / i;
        sum += (m_ - i) * term;
      }
      return std::exp(-a_ * x) * sum / a_;
    }
    case Family::hyperexp:
      return (a_ / b_) * std::exp(-b_ * x) +
             ((1.0 - a_) / c_) * std::exp(-c_ * x);
    case Family::lognormal: {
      if (x == 0.0) return 1.0;
      const double lx = std::log(x);
      return norm_cdf((b_ + a_ * a_ - lx) / a_) - x * norm_cdf((b_ - lx) / a_);
    }
    case Family::deterministic:
      return std::max(a_ - x, 0.0);
  }
  return 0.0;
}

double InterarrivalDist::mean_residual_life(double x) const {
  const double surv = 1.0 - cdf(x);
  if (surv < 1e-300)
    throw std::domain_error("mean_residual_life: survival underflow");
  const double hi = support_cap(1e-16);
  const double integral = integrate(
      [this](double s) { return 1.0 - cdf(s); }, x, std::max(hi, x), 1e-11);
  return integral / surv;
}

double InterarrivalDist::mean() const {
  switch (family_) {
    case Family::exponential: return 1.0 / a_;
    case Family::erlang: return m_ / a_;
    case Family::hyperexp: return a_ / b_ + (1.0 - a_) / c_;
    case Family::lognormal: return std::exp(b_ + 0.5 * a_ * a_);
    case Family::deterministic: return a_;
  }
  return 0.0;
}

double InterarrivalDist::cu2() const {
  switch (family_) {
    case Family::exponential: return 1.0;
    case Family::erlang: return 1.0 / m_;
    case Family::hyperexp: {
      const double m1 = mean();
      const double m2 = 2.0 * (a_ / (b_ * b_) + (1.0 - a_) / (c_ * c_));
      return m2 / (m1 * m1) - 1.0;
    }
    case Family::lognormal: return std::expm1(a_ * a_);
    case Family::deterministic: return 0.0;
  }
  return 0.0;
}

bool InterarrivalDist::unbounded_support() const {
  return family_ != Family::deterministic;
}

double InterarrivalDist::support_cap(double eps) const {
  if (family_ == Family::deterministic) return a_;
  double hi = 1.0;
  while (1.0 - cdf(hi) >= eps && hi < 1e300) hi *= 2.0;
  double lo = 0.5 * hi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (1.0 - cdf(mid) < eps)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double InterarrivalDist::sample(RngStream& rng) const {
  switch (family_) {
    case Family::exponential:
      return rng.expo(a_);
    case Family::erlang: {
      double s = 0.0;
      for (int i = 0; i < m_; ++i) s += rng.expo(a_);
      return s;
    }
    case Family::hyperexp:
      return (rng.u01() < a_) ? rng.expo(b_) : rng.expo(c_);
    case Family::lognormal:
      return std::exp(b_ + a_ * norm_quantile(rng.u01()));
    case Family::deterministic:
      return a_;
  }
  return 0.0;
}

std::pair<double, double> hazard_mrl(const InterarrivalDist& dist, double x) {
  return {dist.hazard(x), dist.mean_residual_life(x)};
}

double f_lyap(const InterarrivalDist& dist, double a, double q, const Vec& z) {
  if (a < 0.0 || q < 0.0 || (z.array() < 0.0).any())
    throw std::domain_error("f_lyap: state outside the domain");
  return 2.0 * dist.cdf(a) * (1.0 + dist.mean_residual_life(a)) + q + z.sum();
}

double harris_bracket(const InterarrivalDist& dist, double a) {
  return 1.0 - 2.0 * dist.cdf(a) + dist.survival_integral(a);
}

double generator_upper_bound(const InterarrivalDist& dist, double alpha,
                             const Vec& nu, double a, double q, const Vec& z) {
  const double h = dist.hazard(a);
  double rate_sum = 0.0;
  if (q > 0.0) {
    rate_sum = alpha * q + nu.sum();
  } else {
    for (int k = 0; k < nu.size(); ++k)
      if (z[k] > 0.0) rate_sum += nu[k];
  }
  return 2.0 * (1.0 + h) * harris_bracket(dist, a) + h - rate_sum;
}

PetiteSetConstants petite_set_constants(const InterarrivalDist& dist,
                                        double alpha, const Vec& nu, int n) {
  (void)nu;  // the constants depend on the age law and alpha only
  if (!dist.unbounded_support())
    throw std::runtime_error(
        "petite_set_constants: bounded interarrival support (distribution "
        "must be unbounded)");
  // Local boundedness of the hazard over the workable range.
  const double cap = dist.support_cap(1e-12);
  for (int i = 0; i <= 10000; ++i) {
    const double a = cap * i / 10000.0;
    if (!std::isfinite(dist.hazard(a)))
      throw std::runtime_error("petite_set_constants: hazard blows up at a=" +
                               std::to_string(a));
  }

  // bracket(a) = 1 − 2F + ∫ₐ^∞(1−F) is strictly decreasing to −1; locate the
  // −1/2 crossing by expansion + bisection.
  PetiteSetConstants out;
  if (harris_bracket(dist, 0.0) <= -0.5) {
    out.C1 = 0.0;
  } else {
    double hi = 1.0;
    while (harris_bracket(dist, hi) > -0.5) {
      hi *= 2.0;
      if (hi > 64.0 * cap)
        throw std::runtime_error(
            "petite_set_constants: bracket never reaches -1/2 (assumption "
            "violated numerically)");
    }
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (harris_bracket(dist, mid) > -0.5)
        lo = mid;
      else
        hi = mid;
      if (hi - lo < 1e-13 * (1.0 + hi)) break;
    }
    out.C1 = hi;
  }
  // Tail sanity: bracket stays below −1/2 on [C1, 10·C1].
  for (int i = 1; i <= 1000; ++i) {
    const double a = out.C1 + (9.0 * out.C1 + 1e-9) * i / 1000.0;
    if (harris_bracket(dist, a) > -0.5 + 1e-9)
      throw std::runtime_error("petite_set_constants: bracket not below -1/2 "
                               "past C1");
  }

  // H = sup over [0, C1] of the age part 2(1+h)·bracket + h: coarse grid, then
  // golden-section refinement around the best cell.
  auto age_part = [&](double a) {
    return 2.0 * (1.0 + dist.hazard(a)) * harris_bracket(dist, a) +
           dist.hazard(a);
  };
  double best = -std::numeric_limits<double>::infinity();
  double best_a = 0.0;
  const int coarse = 2000;
  for (int i = 0; i <= coarse; ++i) {
    const double a = out.C1 * i / coarse;
    const double v = age_part(a);
    if (v > best) {
      best = v;
      best_a = a;
    }
  }
  {
    const double step = out.C1 / coarse;
    double lo = std::max(0.0, best_a - step);
    double hi = std::min(out.C1, best_a + step);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = age_part(c), fd = age_part(d);
    for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
      if (fc > fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = age_part(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = age_part(d);
      }
    }
    best = std::max(best, std::max(fc, fd));
  }
  out.H = best;
  out.C2 = (out.H + 1.0) / alpha;

  std::ostringstream os;
  os << "[0," << out.C1 << "] x [0," << out.C2 << "] x {sum z <= " << n << "}";
  out.set_description = os.str();
  return out;
}

PetiteGridCheck petite_grid_check(const InterarrivalDist& dist, double alpha,
                                  const Vec& nu, const PetiteSetConstants& c,
                                  int na, int nq) {
  PetiteGridCheck out;
  out.worst_bound = -std::numeric_limits<double>::infinity();
  const double a_max = std::min(10.0 * c.C1 + 1.0, dist.support_cap(1e-12));
  const double q_max = 5.0 * c.C2 + 1.0;
  const Vec z_empty = Vec::Zero(nu.size());
  for (int i = 0; i <= na; ++i) {
    const double a = a_max * i / na;
    for (int j = 0; j <= nq; ++j) {
      const double q = q_max * j / nq;
      if (a <= c.C1 && q <= c.C2) continue;  // inside B
      // q = 0 rows use z = 0 (empty system), the weakest rate sum.
      const double bound = generator_upper_bound(dist, alpha, nu, a, q, z_empty);
      out.worst_bound = std::max(out.worst_bound, bound);
      ++out.points;
    }
  }
  out.ok = out.worst_bound <= -1.0 + 1e-9;
  return out;
}

}  // namespace qhw
