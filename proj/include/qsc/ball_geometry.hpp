#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "qsc/sampler.hpp"
#include "qsc/state.hpp"

namespace qsc {

/// Monte Carlo estimate of the Haar measure of an epsilon-ball.
struct VolumeEstimate {
  double point_estimate = 0.0;
  double std_error = 0.0;
  std::size_t num_samples = 0;
  double epsilon = 0.0;
  std::size_t dim = 0;
};

/// The pure states within trace distance < epsilon of `center`.
struct BallSpec {
  BallSpec(DensityMatrix c, double eps) : center(std::move(c)), epsilon(eps) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw std::domain_error("BallSpec: epsilon must lie in (0, 1]");
  }
  DensityMatrix center;
  double epsilon;
};

namespace detail {

inline void require_epsilon(double eps, double hi, const char* what) {
  if (!(eps > 0.0 && eps <= hi)) {
    throw std::domain_error(std::string(what) + ": epsilon must lie in (0, " + std::to_string(hi) + "]");
  }
}

}  // namespace detail

/// Haar measure of an epsilon-ball around a pure state: eps^(2(d-1)).
inline double ball_volume_exact(double epsilon, std::size_t dim) {
  detail::require_epsilon(epsilon, 1.0, "ball_volume_exact");
  if (dim == 0) throw std::invalid_argument("ball_volume_exact: dimension must be >= 1");
  return std::pow(epsilon, 2.0 * static_cast<double>(dim - 1));
}

/// Fraction of Haar samples psi with T(psi, center) < epsilon, with the
/// Bernoulli standard error sqrt(p(1-p)/n).
inline VolumeEstimate ball_volume_mc(const BallSpec& spec, std::size_t num_samples, SeededSampler& sampler,
                                     unsigned workers = 1) {
  if (num_samples == 0) throw std::invalid_argument("ball_volume_mc: num_samples must be >= 1");
  const std::size_t d = spec.center.dim();
  const SpectralDensity center(spec.center);
  const SeededSampler base(sampler.next_u64());
  const double eps = spec.epsilon;

  const auto hits = parallel_chunks<std::size_t>(
      num_samples, base, workers, 0,
      [&](SeededSampler& s, std::size_t begin, std::size_t end) {
        std::size_t count = 0;
        for (std::size_t i = begin; i < end; ++i) {
          if (center.distance_to(haar_sample(d, s)) < eps) ++count;
        }
        return count;
      },
      [](std::size_t a, std::size_t b) { return a + b; });

  VolumeEstimate out;
  out.num_samples = num_samples;
  out.epsilon = eps;
  out.dim = d;
  out.point_estimate = static_cast<double>(hits) / static_cast<double>(num_samples);
  const double p = out.point_estimate;
  out.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(num_samples));
  return out;
}

/// Lower bound on T(psi, rho) obtained by pinching onto span{|0>, psi}, where
/// |0> is a top eigenvector of rho with eigenvalue p0:
///   f = 1/2 sqrt((1+p0-q)^2 - 4(p0-q)|<0|psi>|^2) + 1/2 (1-p0-q),
/// q = <0_perp|rho|0_perp>.
inline double f_lower_bound(const SpectralDensity& rho, const PureState& psi) {
  require_same_dim(rho.dim(), psi.dim(), "f_lower_bound");
  const double p0 = rho.top_eigenvalue();
  const CVector zero = rho.eigenvectors().col(0);
  const cplx c = zero.dot(psi.amplitudes());
  const double ov = std::norm(c);
  if (ov > 1.0 - 1e-12) return 1.0 - p0;
  const CVector perp = (psi.amplitudes() - c * zero).normalized();
  const double q = perp.dot(rho.state().matrix() * perp).real();
  const double a = 1.0 + p0 - q;
  const double disc = std::max(0.0, a * a - 4.0 * (p0 - q) * ov);
  return 0.5 * std::sqrt(disc) + 0.5 * (1.0 - p0 - q);
}

inline double f_lower_bound(const DensityMatrix& rho, const PureState& psi) {
  return f_lower_bound(SpectralDensity(rho), psi);
}

/// Upper bound g_{d,eps}(p0) on the Haar measure of an eps-ball around any
/// state with top eigenvalue p0:
///   (d-2) int_0^1 (1-x)^(d-3) delta((1-p0) x)^(2(d-1)) dx,
///   delta(q)^2 = (eps+q)(p0+eps-1)/(p0-q).
/// Zero when p0 <= 1 - eps. Adaptive Gauss-Kronrod, absolute error <= 1e-10.
inline double g_integral(std::size_t dim, double epsilon, double p0) {
  if (dim < 4) throw std::domain_error("g_integral: requires d >= 4");
  detail::require_epsilon(epsilon, 0.5, "g_integral");
  if (!(p0 > 0.0 && p0 <= 1.0)) throw std::domain_error("g_integral: p0 must lie in (0, 1]");
  if (p0 <= 1.0 - epsilon) return 0.0;

  const double d = static_cast<double>(dim);
  const double slack = p0 + epsilon - 1.0;
  const double spread = 1.0 - p0;
  auto integrand = [=](double x) {
    const double q = spread * x;
    const double delta_sq = (epsilon + q) * slack / (p0 - q);
    return std::pow(1.0 - x, d - 3.0) * std::pow(delta_sq, d - 1.0);
  };
  double err = 0.0;
  // Depth 20 caps the subdivision at 2^20 panels.
  const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 20,
                                                                                    1e-13, &err);
  if (err > 1e-10) throw std::runtime_error("g_integral: quadrature did not reach 1e-10");
  return (d - 2.0) * val;
}

namespace detail {

/// 1 - log1p(u)/u, with a series near u = 0 where the direct form cancels.
inline double one_minus_log1p_ratio(double u) {
  if (std::abs(u) < 1e-3) {
    // u/2 - u^2/3 + u^3/4 - ...
    double term = u;
    double sum = 0.0;
    for (int k = 2; k < 12; ++k) {
      sum += ((k % 2 == 0) ? 1.0 : -1.0) * term / k;
      term *= u;
    }
    return sum;
  }
  return 1.0 - std::log1p(u) / u;
}

}  // namespace detail

struct G4Coefficients {
  double a = 0.0;
  double b = 0.0;
};

/// a = (2p0-1)/(eps+p0), b = p0/(eps+p0).
inline G4Coefficients g4_coefficients(double epsilon, double p0) {
  return {(2.0 * p0 - 1.0) / (epsilon + p0), p0 / (epsilon + p0)};
}

/// Closed form of g_{4,eps}(p0) for p0 strictly inside (1 - eps, 1):
///   2 (p0+eps-1)^3 { (1-6b-ab^2)/(2ab^2) + 3(a+1)/(a(b-a)) (1 - a/(b-a) log(b/a)) }.
inline double g4_closed_form(double epsilon, double p0) {
  detail::require_epsilon(epsilon, 0.5, "g4_closed_form");
  if (!(p0 > 1.0 - epsilon && p0 < 1.0)) {
    throw std::domain_error("g4_closed_form: p0 must lie strictly inside (1 - eps, 1); use g_integral at endpoints");
  }
  const auto [a, b] = g4_coefficients(epsilon, p0);
  const double gap = (1.0 - p0) / (epsilon + p0);  // b - a without cancellation
  const double u = gap / a;                          // b/a - 1
  const double first = (1.0 - 6.0 * b - a * b * b) / (2.0 * a * b * b);
  // a/(b-a) log(b/a) = log1p(u)/u.
  const double second = 3.0 * (a + 1.0) / (a * gap) * detail::one_minus_log1p_ratio(u);
  const double slack = p0 + epsilon - 1.0;
  return 2.0 * slack * slack * slack * (first + second);
}

/// Volume upper bound for an eps-ball with arbitrary (possibly mixed) center:
/// (2 eps)^(2(d-1)) for d < 4, eps^(2(d-1)) for d >= 4.
inline double external_ball_bound(double epsilon, std::size_t dim) {
  detail::require_epsilon(epsilon, 0.5, "external_ball_bound");
  if (dim == 0) throw std::invalid_argument("external_ball_bound: dimension must be >= 1");
  const double e = static_cast<double>(dim - 1) * 2.0;
  return dim < 4 ? std::pow(2.0 * epsilon, e) : std::pow(epsilon, e);
}

}  // namespace qsc
