#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsc/ball_geometry.hpp"
#include "qsc/sampler.hpp"
#include "qsc/state.hpp"

namespace qsc {

/// Parameters of the two-phase randomized construction: J_R random centers of
/// radius epsilon_r, then a packing of radius-epsilon_p balls.
struct CoveringSchedule {
  std::size_t j_r = 0;
  double epsilon_r = 0.0;
  double epsilon_p = 0.0;
  double x = 1.0;
};

/// x = max(1, D ln D) with D = 2(d-1).
inline double default_schedule_x(std::size_t dim) {
  const double big_d = 2.0 * (static_cast<double>(dim) - 1.0);
  return std::max(1.0, big_d * std::log(big_d));
}

/// epsilon_r = x/(1+x) eps, epsilon_p = epsilon_r / x,
/// J_R = ceil(D / epsilon_r^D * ln(epsilon_r / epsilon_p)).
inline CoveringSchedule covering_schedule(std::size_t dim, double epsilon, std::optional<double> x = std::nullopt) {
  if (dim < 2) throw std::domain_error("covering_schedule: requires d >= 2");
  detail::require_epsilon(epsilon, 1.0, "covering_schedule");
  const double xv = x.value_or(default_schedule_x(dim));
  if (!(xv >= 1.0) || !std::isfinite(xv)) throw std::domain_error("covering_schedule: x must be >= 1");

  CoveringSchedule s;
  s.x = xv;
  s.epsilon_r = xv / (1.0 + xv) * epsilon;
  // Exact in floating point since epsilon_r >= epsilon / 2, so the radius
  // epsilon_r + epsilon_p reproduces epsilon bit for bit.
  s.epsilon_p = epsilon - s.epsilon_r;
  const double big_d = 2.0 * (static_cast<double>(dim) - 1.0);
  // ln(epsilon_r / epsilon_p) = ln x.
  const double count = big_d / std::pow(s.epsilon_r, big_d) * std::log(xv);
  if (!(count < 1e9)) throw std::domain_error("covering_schedule: J_R is too large to construct");
  s.j_r = static_cast<std::size_t>(std::ceil(std::max(0.0, count)));
  return s;
}

/// Provenance of a code book. Explicit books (e.g. the octahedron) record
/// their size as j_r with j_p = 0 and epsilon_p = 0.
struct ConstructionMeta {
  std::string method = "explicit";
  std::size_t j_r = 0;
  std::size_t j_p = 0;
  double epsilon_r = 0.0;
  double epsilon_p = 0.0;
  double x = 1.0;
  std::uint64_t seed = 0;
  std::size_t fail_streak_limit = 0;
};

/// Labeled code book of pure states; label i is elements()[i].
class Covering {
 public:
  Covering(std::size_t dim, double radius, std::vector<PureState> elements, ConstructionMeta meta)
      : dim_(dim), radius_(radius), elements_(std::move(elements)), meta_(std::move(meta)) {
    if (dim_ == 0) throw std::invalid_argument("Covering: dimension must be >= 1");
    if (!(radius_ > 0.0 && radius_ <= 1.0 + 1e-12)) throw std::domain_error("Covering: radius must lie in (0, 1]");
    for (const auto& e : elements_) require_same_dim(e.dim(), dim_, "Covering");
    if (meta_.j_r + meta_.j_p != elements_.size()) {
      throw std::invalid_argument("Covering: element count does not match J_R + J_P");
    }
    if (std::abs(meta_.epsilon_r + meta_.epsilon_p - radius_) > 1e-12) {
      throw std::invalid_argument("Covering: radius does not equal epsilon_R + epsilon_P");
    }
  }

  /// Code book with no construction history.
  static Covering explicit_book(std::size_t dim, double radius, std::vector<PureState> elements) {
    ConstructionMeta meta;
    meta.j_r = elements.size();
    meta.epsilon_r = radius;
    return Covering(dim, radius, std::move(elements), meta);
  }

  std::size_t dim() const noexcept { return dim_; }
  double radius() const noexcept { return radius_; }
  std::size_t size() const noexcept { return elements_.size(); }
  bool empty() const noexcept { return elements_.empty(); }
  const std::vector<PureState>& elements() const noexcept { return elements_; }
  const PureState& element(std::size_t label) const { return elements_.at(label); }
  const ConstructionMeta& meta() const noexcept { return meta_; }

  /// Stacked amplitudes, one element per column.
  CMatrix matrix() const {
    CMatrix m(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(elements_.size()));
    for (std::size_t i = 0; i < elements_.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = elements_[i].amplitudes();
    return m;
  }

 private:
  std::size_t dim_;
  double radius_;
  std::vector<PureState> elements_;
  ConstructionMeta meta_;
};

/// Consecutive rejections before the packing phase stops: max(1000, 10 J_R).
inline std::size_t default_fail_streak(const CoveringSchedule& s) { return std::max<std::size_t>(1000, 10 * s.j_r); }

/// Two-phase randomized internal covering of radius epsilon_r + epsilon_p.
/// Phase 1 draws J_R Haar states. Phase 2 draws candidates and keeps one iff
/// it is >= epsilon_r + epsilon_p from every phase-1 state and >= 2 epsilon_p
/// from every accepted phase-2 state; it stops after `fail_streak_limit`
/// consecutive rejections.
inline Covering build_internal_covering(std::size_t dim, double epsilon, SeededSampler& sampler,
                                        std::optional<double> x = std::nullopt,
                                        std::optional<std::size_t> fail_streak_limit = std::nullopt) {
  const CoveringSchedule s = covering_schedule(dim, epsilon, x);
  const std::size_t streak = fail_streak_limit.value_or(default_fail_streak(s));
  if (streak < 1) throw std::invalid_argument("build_internal_covering: fail_streak_limit must be >= 1");

  std::vector<PureState> elements;
  elements.reserve(s.j_r);
  for (std::size_t j = 0; j < s.j_r; ++j) elements.push_back(haar_sample(dim, sampler));

  // Rejection tests in fidelity form: T >= r  <=>  |<a|b>|^2 <= 1 - r^2.
  const double radius = s.epsilon_r + s.epsilon_p;
  const double max_ov_random = 1.0 - radius * radius;
  const double max_ov_packed = 1.0 - 4.0 * s.epsilon_p * s.epsilon_p;
  std::size_t fails = 0;
  std::size_t packed = 0;
  while (fails < streak) {
    PureState cand = haar_sample(dim, sampler);
    bool ok = true;
    for (std::size_t i = 0; i < elements.size() && ok; ++i) {
      const double ov = std::norm(overlap(elements[i], cand));
      ok = ov <= (i < s.j_r ? max_ov_random : max_ov_packed);
    }
    if (ok) {
      elements.push_back(std::move(cand));
      ++packed;
      fails = 0;
    } else {
      ++fails;
    }
  }

  ConstructionMeta meta;
  meta.method = "randomized";
  meta.j_r = s.j_r;
  meta.j_p = packed;
  meta.epsilon_r = s.epsilon_r;
  meta.epsilon_p = s.epsilon_p;
  meta.x = s.x;
  meta.seed = sampler.seed();
  meta.fail_streak_limit = streak;
  return Covering(dim, radius, std::move(elements), meta);
}

/// Empirical check of the covering condition over Haar samples.
struct CoverageReport {
  double covered_fraction = 0.0;
  double worst_gap = 0.0;  // max over samples of the distance to the nearest element
  std::size_t num_samples = 0;
  double std_error = 0.0;
};

/// Fraction of Haar samples phi with min_x T(phi, element_x) < epsilon.
/// An empty book reports covered_fraction 0 and worst_gap 1.
inline CoverageReport coverage_verify(const Covering& c, double epsilon, std::size_t num_samples,
                                      SeededSampler& sampler, unsigned workers = 1) {
  if (num_samples == 0) throw std::invalid_argument("coverage_verify: num_samples must be >= 1");
  CoverageReport rep;
  rep.num_samples = num_samples;
  if (c.empty()) {
    rep.worst_gap = 1.0;
    return rep;
  }
  const CMatrix book = c.matrix();
  const std::size_t d = c.dim();
  const SeededSampler base(sampler.next_u64());

  struct Acc {
    std::size_t hits = 0;
    double worst = 0.0;
  };
  const Acc acc = parallel_chunks<Acc>(
      num_samples, base, workers, Acc{},
      [&](SeededSampler& s, std::size_t begin, std::size_t end) {
        Acc a;
        for (std::size_t i = begin; i < end; ++i) {
          const PureState phi = haar_sample(d, s);
          const double best = (book.adjoint() * phi.amplitudes()).cwiseAbs2().maxCoeff();
          const double gap = std::sqrt(std::clamp(1.0 - best, 0.0, 1.0));
          if (gap < epsilon) ++a.hits;
          a.worst = std::max(a.worst, gap);
        }
        return a;
      },
      [](Acc a, const Acc& b) {
        a.hits += b.hits;
        a.worst = std::max(a.worst, b.worst);
        return a;
      });

  rep.covered_fraction = static_cast<double>(acc.hits) / static_cast<double>(num_samples);
  rep.worst_gap = acc.worst;
  const double p = rep.covered_fraction;
  rep.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(num_samples));
  return rep;
}

struct CoveringBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// (1/eps)^(2(d-1)) <= I_in <= 5 d ln d (1/eps)^(2(d-1)), valid for d >= 2.
inline CoveringBounds internal_covering_bounds(std::size_t dim, double epsilon) {
  if (dim < 2) throw std::domain_error("internal_covering_bounds: requires d >= 2");
  detail::require_epsilon(epsilon, 1.0, "internal_covering_bounds");
  const double d = static_cast<double>(dim);
  const double base = std::pow(1.0 / epsilon, 2.0 * (d - 1.0));
  return {base, 5.0 * d * std::log(d) * base};
}

/// I_ex >= (1/(2 eps))^(2(d-1)) for d < 4, (1/eps)^(2(d-1)) for d >= 4.
inline double external_covering_lower_bound(std::size_t dim, double epsilon) {
  return 1.0 / external_ball_bound(epsilon, dim);
}

}  // namespace qsc
