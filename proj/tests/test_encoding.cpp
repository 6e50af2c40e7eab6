#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "qsc/encoding.hpp"

using namespace qsc;

namespace {

using Eigen::Vector3d;

/// Brute-force Euclidean distance from `t` to the convex hull of `pts` in R^3:
/// the nearest point of a polytope lies on a face spanned by at most three
/// vertices, so scan all triangles (and their edges and vertices).
double segment_distance(const Vector3d& t, const Vector3d& a, const Vector3d& b) {
  const Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0 ? std::clamp((t - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + s * ab - t).norm();
}

double triangle_distance(const Vector3d& t, const Vector3d& a, const Vector3d& b, const Vector3d& c) {
  double best = std::min({segment_distance(t, a, b), segment_distance(t, b, c), segment_distance(t, a, c)});
  const Vector3d n = (b - a).cross(c - a);
  if (n.squaredNorm() < 1e-24) return best;
  const Vector3d proj = t - n * (t - a).dot(n) / n.squaredNorm();
  // Barycentric test.
  const double area = n.norm();
  const double u = (c - b).cross(proj - b).dot(n) / (area * area);
  const double v = (a - c).cross(proj - c).dot(n) / (area * area);
  const double w = 1.0 - u - v;
  if (u >= 0 && v >= 0 && w >= 0) best = std::min(best, (proj - t).norm());
  return best;
}

double hull_distance_oracle(const Vector3d& t, const std::vector<Vector3d>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, (p - t).norm());
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      best = std::min(best, segment_distance(t, pts[i], pts[j]));
      for (std::size_t k = j + 1; k < pts.size(); ++k) best = std::min(best, triangle_distance(t, pts[i], pts[j], pts[k]));
    }
  return best;
}

std::vector<Vector3d> bloch_points(const Covering& book) {
  std::vector<Vector3d> out;
  for (const auto& e : book.elements()) out.push_back(to_bloch(e).coords());
  return out;
}

Covering random_book(std::size_t dim, std::size_t size, SeededSampler& s) {
  std::vector<PureState> els;
  for (std::size_t i = 0; i < size; ++i) els.push_back(haar_sample(dim, s));
  return Covering::explicit_book(dim, 1.0, std::move(els));
}

}  // namespace

TEST(LabelDistribution, Validation) {
  EXPECT_THROW(LabelDistribution::from_probs({0.5, 0.6}), std::domain_error);
  EXPECT_THROW(LabelDistribution::from_probs({1.5, -0.5}), std::domain_error);
  EXPECT_NO_THROW(LabelDistribution::from_probs({0.25, 0.75}));
  EXPECT_THROW(LabelDistribution::point_mass(2, 2), std::out_of_range);
}

TEST(DeterministicEncode, MemberHasZeroDistance) {
  const auto book = octahedron_book();
  for (std::size_t x = 0; x < book.size(); ++x) {
    const auto r = deterministic_encode(book.element(x), book);
    EXPECT_EQ(r.label, x);
    EXPECT_NEAR(r.distance, 0.0, 1e-7);
  }
}

TEST(DeterministicEncode, TiesGoToSmallestLabel) {
  // Equator state |+> is equidistant from |0> and |1>.
  const auto book = Covering::explicit_book(2, 1.0, {PureState::basis(2, 0), PureState::basis(2, 1)});
  CVector v(2);
  v << 1.0, 1.0;
  EXPECT_EQ(deterministic_encode(PureState::normalized(v), book).label, 0u);
}

TEST(DeterministicEncode, Errors) {
  ConstructionMeta m;
  m.epsilon_r = 0.5;
  const Covering empty(2, 0.5, {}, m);
  EXPECT_THROW(deterministic_encode(PureState::basis(2, 0), empty), std::invalid_argument);
  EXPECT_THROW(probabilistic_encode(PureState::basis(2, 0), empty), std::invalid_argument);
  EXPECT_THROW(deterministic_encode(PureState::basis(3, 0), octahedron_book()), std::invalid_argument);
}

TEST(DeterministicEncode, BuiltCoveringCoversSamples) {
  SeededSampler s(31);
  const auto book = build_internal_covering(2, 0.5, s);
  SeededSampler t(32);
  int ok = 0;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) ok += deterministic_encode(haar_sample(2, t), book).distance < 0.5;
  EXPECT_GE(ok, static_cast<int>(0.999 * n));
}

TEST(Octahedron, Fixtures) {
  const auto book = octahedron_book();
  ASSERT_EQ(book.size(), 6u);
  EXPECT_NEAR(book.radius(), std::sqrt(octahedron_epsilon()), 1e-15);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = i + 1; j < 6; ++j) {
      const double t = trace_distance(book.element(i), book.element(j));
      const bool antipodal = i / 2 == j / 2;
      EXPECT_NEAR(t, antipodal ? 1.0 : 1.0 / std::sqrt(2.0), 1e-12) << i << "," << j;
    }
  }
  EXPECT_NEAR(octahedron_epsilon(), 0.2113248654, 1e-10);
}

TEST(Octahedron, FarthestState) {
  const auto book = octahedron_book();
  const auto phi = octahedron_farthest_state();
  const auto prob = probabilistic_encode(phi, book);
  const auto det = deterministic_encode(phi, book);
  EXPECT_NEAR(prob.achieved_distance, octahedron_epsilon(), 1e-9);
  EXPECT_NEAR(det.distance, 0.4597008434, 1e-9);
  EXPECT_NEAR(det.distance * det.distance, prob.achieved_distance, 1e-9);
  for (std::size_t x : {0u, 2u, 4u}) EXPECT_NEAR(prob.distribution[x], 1.0 / 3.0, 1e-9);
  for (std::size_t x : {1u, 3u, 5u}) EXPECT_NEAR(prob.distribution[x], 0.0, 1e-9);
  const auto mix = to_bloch(decode(prob.distribution, book)).coords();
  EXPECT_TRUE(mix.isApprox(Vector3d(1, 1, 1) / 6.0, 1e-9));
}

TEST(Octahedron, DeterministicWorstCaseOverGrid) {
  const auto book = octahedron_book();
  const int n = 20'000;  // Fibonacci sphere
  double worst = 0.0;
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1.0 - z * z);
    const Vector3d dir(r * std::cos(golden * i), r * std::sin(golden * i), z);
    worst = std::max(worst, deterministic_encode(pure_from_bloch_direction(dir), book).distance);
  }
  EXPECT_LE(worst, std::sqrt(octahedron_epsilon()) + 1e-12);
  EXPECT_NEAR(worst, std::sqrt(octahedron_epsilon()), 1e-3);
}

TEST(ProbabilisticEncode, MemberIsPointMass) {
  const auto book = octahedron_book();
  const auto r = probabilistic_encode(book.element(3), book);
  EXPECT_NEAR(r.achieved_distance, 0.0, 1e-7);
  EXPECT_NEAR(r.distribution[3], 1.0, 1e-7);

  SeededSampler s(5);
  const auto b3 = random_book(3, 6, s);
  EXPECT_NEAR(probabilistic_encode(b3.element(2), b3).achieved_distance, 0.0, 1e-7);
}

TEST(ProbabilisticEncode, ExactQubitMatchesOracle) {
  SeededSampler s(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto book = random_book(2, 3 + trial % 8, s);
    const auto phi = haar_sample(2, s);
    const double oracle = hull_distance_oracle(to_bloch(phi).coords(), bloch_points(book));
    const auto r = probabilistic_encode(phi, book);
    EXPECT_NEAR(r.achieved_distance, oracle, 1e-9);
    EXPECT_TRUE(r.converged);
  }
}

TEST(ProbabilisticEncode, DualityGapIsSound) {
  SeededSampler s(42);
  for (auto step : {StepRule::armijo, StepRule::inverse_sqrt}) {
    for (int trial = 0; trial < 150; ++trial) {
      const auto book = random_book(2, 3 + trial % 10, s);
      const auto phi = haar_sample(2, s);
      const double oracle = hull_distance_oracle(to_bloch(phi).coords(), bloch_points(book));
      EncodeOptions opt;
      opt.method = EncodeMethod::subgradient;
      opt.step = step;
      const auto r = probabilistic_encode(phi, book, opt);
      EXPECT_GE(r.duality_gap, -1e-9);
      EXPECT_GE(r.achieved_distance, oracle - 1e-7);
      EXPECT_LE(r.achieved_distance - r.duality_gap, oracle + 1e-7);
      if (step == StepRule::armijo) EXPECT_NEAR(r.achieved_distance, oracle, 1e-6);
    }
  }
}

TEST(ProbabilisticEncode, GeneralSolverConvergesInHigherDimension) {
  for (std::size_t d : {3u, 4u}) {
    SeededSampler s(50 + d);
    for (int trial = 0; trial < 40; ++trial) {
      const auto book = random_book(d, 4 * d + trial % 7, s);
      const auto phi = haar_sample(d, s);
      const auto r = probabilistic_encode(phi, book);
      EXPECT_TRUE(r.converged) << "gap " << r.duality_gap;
      EXPECT_LE(r.duality_gap, 1e-6);
      EXPECT_NEAR(trace_distance(phi, decode(r.distribution, book)), r.achieved_distance, 1e-12);
    }
  }
}

TEST(ProbabilisticEncode, EncoderDominance) {
  for (std::size_t d : {2u, 3u}) {
    SeededSampler s(60 + d);
    for (int trial = 0; trial < 100; ++trial) {
      const auto book = random_book(d, 3 + trial % 9, s);
      const auto phi = haar_sample(d, s);
      EXPECT_LE(probabilistic_encode(phi, book).achieved_distance, deterministic_encode(phi, book).distance + 1e-9);
    }
  }
}

TEST(ProbabilisticEncode, IterationCapReportsUnconverged) {
  SeededSampler s(70);
  const auto book = random_book(4, 20, s);
  EncodeOptions opt;
  opt.max_iter = 2;
  opt.tol = 1e-12;
  const auto r = probabilistic_encode(haar_sample(4, s), book, opt);
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.duality_gap, opt.tol);
  EXPECT_LE(r.iterations, 2u);
}

TEST(Decode, Fixtures) {
  const auto pair = Covering::explicit_book(2, 1.0, {PureState::basis(2, 0), PureState::basis(2, 1)});
  const auto mixed = decode(LabelDistribution::from_probs({0.5, 0.5}), pair);
  EXPECT_LE((mixed.matrix() - DensityMatrix::maximally_mixed(2).matrix()).norm(), 1e-15);
  const auto point = decode(LabelDistribution::point_mass(2, 1), pair);
  EXPECT_LE((point.matrix() - PureState::basis(2, 1).projector()).norm(), 1e-15);
  EXPECT_THROW(decode(LabelDistribution::point_mass(3, 2), pair), std::out_of_range);
}

TEST(Decode, Linear) {
  SeededSampler s(80);
  const auto book = random_book(3, 5, s);
  for (int trial = 0; trial < 200; ++trial) {
    auto draw = [&] {
      std::vector<double> w(5);
      double sum = 0.0;
      for (auto& x : w) sum += (x = s.uniform());
      for (auto& x : w) x /= sum;
      return w;
    };
    const auto p = draw(), q = draw();
    const double alpha = s.uniform();
    std::vector<double> mix(5);
    for (int i = 0; i < 5; ++i) mix[i] = alpha * p[i] + (1 - alpha) * q[i];
    const CMatrix lhs = decode(LabelDistribution::from_probs(mix), book).matrix();
    const CMatrix rhs = alpha * decode(LabelDistribution::from_probs(p), book).matrix() +
                        (1 - alpha) * decode(LabelDistribution::from_probs(q), book).matrix();
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Minimax, Octahedron) {
  SeededSampler s(90);
  const auto m = verify_minimax(octahedron_book(), 2000, s);
  EXPECT_NEAR(m.lhs, octahedron_epsilon(), 1e-3);
  EXPECT_NEAR(m.rhs, octahedron_epsilon(), 1e-3);
  EXPECT_LE(m.defect(), 1e-3);
}

TEST(Minimax, SingleState) {
  SeededSampler s(91);
  const auto book = Covering::explicit_book(2, 1.0, {PureState::basis(2, 0)});
  const auto m = verify_minimax(book, 500, s);
  EXPECT_NEAR(m.lhs, 1.0, 1e-3);
  EXPECT_NEAR(m.rhs, 1.0, 1e-3);
}

TEST(Minimax, BasisPair) {
  SeededSampler s(92);
  const auto book = Covering::explicit_book(2, 1.0, {PureState::basis(2, 0), PureState::basis(2, 1)});
  const auto m = verify_minimax(book, 2000, s);
  EXPECT_NEAR(m.lhs, 0.5, 1e-3);
  EXPECT_NEAR(m.rhs, 0.5, 1e-3);
}

TEST(Minimax, FidelityCriterionAgreesWithDistanceCriterion) {
  // min_phi max_x F > 1 - eps  <=>  max_phi min_sigma T < eps, as booleans on one sample set.
  const std::vector<std::pair<Covering, std::vector<double>>> cases = {
      {octahedron_book(), {0.1, 0.15, 0.2, 0.22, 0.3, 0.5}},
      {Covering::explicit_book(2, 1.0, {PureState::basis(2, 0), PureState::basis(2, 1)}), {0.3, 0.45, 0.55, 0.8}},
  };
  for (const auto& [book, epsilons] : cases) {
    SeededSampler s(93);
    double min_fid = 1.0, max_dist = 0.0;
    for (int i = 0; i < 5000; ++i) {
      const auto phi = haar_sample(2, s);
      min_fid = std::min(min_fid, max_fidelity(phi, book));
      max_dist = std::max(max_dist, probabilistic_encode(phi, book).achieved_distance);
    }
    for (double eps : epsilons) EXPECT_EQ(min_fid > 1.0 - eps, max_dist < eps) << "eps=" << eps;
  }
}

TEST(Halving, SqrtCoveringSuffices) {
  SeededSampler s(94);
  const double eps = 0.25;
  const auto book = build_internal_covering(2, std::sqrt(eps), s, std::nullopt, 10'000);
  double max_prob = 0.0;
  for (int i = 0; i < 10'000; ++i) {
    max_prob = std::max(max_prob, probabilistic_encode(haar_sample(2, s), book).achieved_distance);
  }
  EXPECT_LT(max_prob, eps);
}

TEST(BitLength, Deterministic) {
  const auto a = bit_length_bounds_deterministic(4, 0.25);
  EXPECT_NEAR(a.lower_bits, 12.0, 1e-12);
  EXPECT_NEAR(a.rate, 6.0, 1e-12);
  const auto b = bit_length_bounds_deterministic(2, 0.5);
  EXPECT_NEAR(b.lower_bits, 0.0, 1e-12);
  EXPECT_NEAR(b.upper_bits, 2.0 + std::log2(10.0 * std::log(2.0)), 1e-12);
  EXPECT_NEAR(b.upper_bits, 4.793, 1e-3);
  EXPECT_LE(b.lower_bits, b.upper_bits);
  EXPECT_THROW(bit_length_bounds_deterministic(2, 0.6), std::domain_error);
  EXPECT_THROW(bit_length_bounds_deterministic(1, 0.3), std::domain_error);
  // Bits per dimension approach 2 log2(1/eps).
  const auto big = bit_length_bounds_deterministic(100'000, 0.25);
  EXPECT_NEAR(big.upper_bits / 100'000.0, 4.0, 1e-3);
}

TEST(BitLength, Probabilistic) {
  const auto a = bit_length_bounds_probabilistic(4, 0.25);
  EXPECT_NEAR(a.lower_bits, 4.0, 1e-12);
  EXPECT_NEAR(bit_length_bounds_probabilistic(2, 1.0).lower_bits, -1.0, 1e-12);
  EXPECT_THROW(bit_length_bounds_probabilistic(2, 1.5), std::domain_error);
  const double ratio = bit_length_bounds_probabilistic(64, 0.25).upper_bits /
                       bit_length_bounds_deterministic(64, 0.25).lower_bits;
  EXPECT_GE(ratio, 0.45);
  EXPECT_LE(ratio, 0.55);
}
