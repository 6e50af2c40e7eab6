#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsc/covering.hpp"
#include "qsc/sampler.hpp"
#include "qsc/state.hpp"

namespace qsc {

/// Probability vector over the labels 0..n-1 of a code book.
class LabelDistribution {
 public:
  static LabelDistribution from_probs(std::vector<double> probs, double tol = 1e-10) {
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw std::domain_error("LabelDistribution: negative probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) throw std::domain_error("LabelDistribution: probabilities do not sum to 1");
    return LabelDistribution(std::move(probs));
  }

  static LabelDistribution point_mass(std::size_t size, std::size_t label) {
    if (label >= size) throw std::out_of_range("LabelDistribution: label outside the book");
    std::vector<double> p(size, 0.0);
    p[label] = 1.0;
    return LabelDistribution(std::move(p));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t label) const { return label < probs_.size() ? probs_[label] : 0.0; }
  const std::vector<double>& probs() const noexcept { return probs_; }

 private:
  explicit LabelDistribution(std::vector<double> p) : probs_(std::move(p)) {}
  std::vector<double> probs_;
};

/// Nearest code-book element; ties go to the smallest label.
struct DeterministicEncoding {
  std::size_t label = 0;
  double distance = 0.0;
};

struct EncodingResult {
  LabelDistribution distribution;
  double achieved_distance = 0.0;
  /// achieved_distance minus a certified lower bound on the optimum.
  double duality_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

enum class EncodeMethod { automatic, qubit_exact, subgradient };
enum class StepRule { armijo, inverse_sqrt };

struct EncodeOptions {
  double tol = 1e-6;
  std::size_t max_iter = 5000;
  EncodeMethod method = EncodeMethod::automatic;
  StepRule step = StepRule::armijo;
};

inline DeterministicEncoding deterministic_encode(const PureState& phi, const Covering& book) {
  if (book.empty()) throw std::invalid_argument("deterministic_encode: empty code book");
  require_same_dim(phi.dim(), book.dim(), "deterministic_encode");
  DeterministicEncoding best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t x = 0; x < book.size(); ++x) {
    const double t = trace_distance(phi, book.element(x));
    if (t < best.distance) best = {x, t};
  }
  return best;
}

/// Gamma(p) = sum_x p(x) |e_x><e_x|.
inline DensityMatrix decode(const LabelDistribution& dist, const Covering& book) {
  const auto n = static_cast<Eigen::Index>(book.dim());
  CMatrix m = CMatrix::Zero(n, n);
  for (std::size_t x = 0; x < dist.size(); ++x) {
    const double p = dist[x];
    if (p == 0.0) continue;
    if (x >= book.size()) throw std::out_of_range("decode: label " + std::to_string(x) + " outside the book");
    const CVector& e = book.element(x).amplitudes();
    m.noalias() += p * (e * e.adjoint());
  }
  return DensityMatrix::from_matrix(std::move(m));
}

/// max_x F(e_x, phi) = max_x |<e_x|phi>|^2.
inline double max_fidelity(const PureState& phi, const Covering& book) {
  if (book.empty()) return 0.0;
  require_same_dim(phi.dim(), book.dim(), "max_fidelity");
  return std::clamp((book.matrix().adjoint() * phi.amplitudes()).cwiseAbs2().maxCoeff(), 0.0, 1.0);
}

/// For the rank-one measurement M = |v><v|, every mixture rho of the book obeys
/// T(phi, rho) >= tr M(phi - rho) >= <v|phi|v> - max_x <v|e_x|v>.
inline double measurement_lower_bound(const PureState& phi, const CMatrix& book, const CVector& v) {
  const double signal = std::norm(v.dot(phi.amplitudes()));
  const double leak = (book.adjoint() * v).cwiseAbs2().maxCoeff();
  return signal - leak;
}

namespace detail {

struct MixtureEval {
  double distance = 0.0;
  double lower_bound = 0.0;
  Eigen::VectorXd weights;  // |<v|e_x>|^2 for the top eigenvector v of phi - rho
};

inline MixtureEval evaluate_mixture(const PureState& phi, const CMatrix& book, const Eigen::VectorXd& p) {
  CMatrix resid = phi.projector();
  resid.noalias() -= book * p.cast<cplx>().asDiagonal() * book.adjoint();
  resid = 0.5 * (resid + resid.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(resid);
  const Eigen::Index n = es.eigenvalues().size();
  MixtureEval out;
  out.distance = std::clamp(0.5 * es.eigenvalues().cwiseAbs().sum(), 0.0, 1.0);
  const CVector v = es.eigenvectors().col(n - 1);
  out.weights = (book.adjoint() * v).cwiseAbs2();
  out.lower_bound = std::norm(v.dot(phi.amplitudes())) - out.weights.maxCoeff();
  return out;
}

/// Euclidean projection onto the probability simplex (sort-based).
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& y) {
  std::vector<double> u(y.data(), y.data() + y.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double t = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) theta = t;
  }
  return (y.array() - theta).cwiseMax(0.0).matrix();
}

struct MinNormPoint {
  std::vector<std::size_t> support;
  std::vector<double> weights;
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  std::size_t iterations = 0;
};

/// Wolfe's active-set algorithm for the point of minimum norm in the convex
/// hull of `pts`.
inline MinNormPoint min_norm_point(const std::vector<Eigen::Vector3d>& pts) {
  constexpr double kZ1 = 1e-14;
  constexpr double kZ2 = 1e-12;
  MinNormPoint s;
  std::size_t first = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].squaredNorm() < pts[first].squaredNorm()) first = i;
  }
  s.support = {first};
  s.weights = {1.0};
  s.point = pts[first];

  auto recompute = [&]() {
    s.point.setZero();
    for (std::size_t k = 0; k < s.support.size(); ++k) s.point += s.weights[k] * pts[s.support[k]];
  };

  // Minimum-norm point of the affine hull of the support: the KKT system
  // [0 1^T; 1 G] [mu; alpha] = [1; 0] with Gram matrix G.
  auto affine_min = [&]() {
    const auto m = static_cast<Eigen::Index>(s.support.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
      kkt(0, i + 1) = kkt(i + 1, 0) = 1.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        kkt(i + 1, j + 1) = pts[s.support[static_cast<std::size_t>(i)]].dot(pts[s.support[static_cast<std::size_t>(j)]]);
      }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
    rhs(0) = 1.0;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    return std::vector<double>(sol.data() + 1, sol.data() + sol.size());
  };

  for (std::size_t major = 0; major < 100 * pts.size() + 100; ++major) {
    ++s.iterations;
    std::size_t j = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = s.point.dot(pts[i]);
      if (v < best) {
        best = v;
        j = i;
      }
    }
    double scale = pts[j].squaredNorm();
    for (std::size_t k : s.support) scale = std::max(scale, pts[k].squaredNorm());
    if (best > s.point.squaredNorm() - kZ1 * scale) break;
    if (std::find(s.support.begin(), s.support.end(), j) != s.support.end()) break;
    s.support.push_back(j);
    s.weights.push_back(0.0);

    for (std::size_t minor = 0; minor < 16; ++minor) {
      const std::vector<double> alpha = affine_min();
      if (std::all_of(alpha.begin(), alpha.end(), [](double a) { return a > kZ2; })) {
        s.weights = alpha;
        break;
      }
      double theta = 1.0;
      for (std::size_t k = 0; k < alpha.size(); ++k) {
        if (alpha[k] <= kZ2) theta = std::min(theta, s.weights[k] / (s.weights[k] - alpha[k]));
      }
      for (std::size_t k = 0; k < alpha.size(); ++k) s.weights[k] = theta * alpha[k] + (1.0 - theta) * s.weights[k];
      std::vector<std::size_t> keep_idx;
      std::vector<double> keep_w;
      for (std::size_t k = 0; k < s.support.size(); ++k) {
        if (s.weights[k] > kZ2) {
          keep_idx.push_back(s.support[k]);
          keep_w.push_back(s.weights[k]);
        }
      }
      const double total = std::accumulate(keep_w.begin(), keep_w.end(), 0.0);
      for (double& w : keep_w) w /= total;
      s.support = std::move(keep_idx);
      s.weights = std::move(keep_w);
    }
    recompute();
  }
  return s;
}

inline EncodingResult finish(const PureState& phi, const CMatrix& book, Eigen::VectorXd p, double best_lb,
                             std::size_t iterations, double tol) {
  p = p.cwiseMax(0.0);
  p /= p.sum();
  const MixtureEval ev = evaluate_mixture(phi, book, p);
  const double lb = std::max({best_lb, ev.lower_bound, 0.0});
  const double gap = std::max(0.0, ev.distance - lb);
  return EncodingResult{LabelDistribution::from_probs(std::vector<double>(p.data(), p.data() + p.size())),
                        ev.distance, gap, iterations, gap <= tol};
}

inline EncodingResult encode_qubit_exact(const PureState& phi, const Covering& book, const CMatrix& mat, double tol) {
  const Eigen::Vector3d target = to_bloch(phi).coords();
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(book.size());
  for (const auto& e : book.elements()) pts.push_back(to_bloch(e).coords() - target);
  const MinNormPoint mn = min_norm_point(pts);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(book.size()));
  for (std::size_t k = 0; k < mn.support.size(); ++k) p(static_cast<Eigen::Index>(mn.support[k])) += mn.weights[k];
  return finish(phi, mat, std::move(p), 0.0, mn.iterations, tol);
}

/// Projected (sub)gradient descent on p -> T(phi, sum_x p_x e_x) over the
/// simplex. T equals the top eigenvalue of phi - rho, which is smooth wherever
/// that eigenvalue is simple; the Armijo rule exploits this, and falls back to a
/// 1/sqrt(k) subgradient step when backtracking finds no decrease. Each iterate
/// yields a measurement certificate, and the best one bounds the optimum below.
inline EncodingResult encode_subgradient(const PureState& phi, const Covering& book, const CMatrix& mat,
                                         const EncodeOptions& opt) {
  const auto n = static_cast<Eigen::Index>(book.size());
  const DeterministicEncoding start = deterministic_encode(phi, book);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  p(static_cast<Eigen::Index>(start.label)) = 1.0;

  Eigen::VectorXd best_p = p;
  double best_f = std::numeric_limits<double>::infinity();
  double best_lb = 0.0;
  double scale = 0.0;
  double trial = 0.0;
  std::size_t k = 0;
  for (k = 1; k <= opt.max_iter; ++k) {
    const MixtureEval ev = evaluate_mixture(phi, mat, p);
    if (ev.distance < best_f) {
      best_f = ev.distance;
      best_p = p;
    }
    best_lb = std::max(best_lb, ev.lower_bound);
    if (best_f - best_lb <= opt.tol) break;

    // d/dp_x lambda_max(phi - rho) = -|<v|e_x>|^2; only the simplex-tangent part moves p.
    Eigen::VectorXd g = -ev.weights;
    g.array() -= g.mean();
    const double gn = g.norm();
    if (gn == 0.0) break;
    if (k == 1) {
      scale = (best_f - best_lb) / gn;
      trial = scale / gn;
    }

    if (opt.step == StepRule::armijo) {
      bool moved = false;
      trial *= 4.0;
      for (int bt = 0; bt < 60 && !moved; ++bt, trial *= 0.5) {
        Eigen::VectorXd q = project_simplex(p - trial * g);
        if (evaluate_mixture(phi, mat, q).distance <= ev.distance + 1e-4 * g.dot(q - p)) {
          p = std::move(q);
          moved = true;
        }
      }
      if (moved) continue;
      trial = scale / gn;
    }
    p = project_simplex(p - (scale / std::sqrt(static_cast<double>(k))) * (g / gn));
  }
  return finish(phi, mat, std::move(best_p), best_lb, std::min(k, opt.max_iter), opt.tol);
}

}  // namespace detail

/// Distribution p minimizing T(phi, sum_x p(x) e_x), i.e. the closest point of
/// the code book's convex hull. Qubits use an exact Bloch-ball projection;
/// other dimensions use projected subgradient descent. If the certified gap
/// stays above tol the best iterate is returned with converged = false.
inline EncodingResult probabilistic_encode(const PureState& phi, const Covering& book, const EncodeOptions& opt = {}) {
  if (book.empty()) throw std::invalid_argument("probabilistic_encode: empty code book");
  require_same_dim(phi.dim(), book.dim(), "probabilistic_encode");
  if (!(opt.tol > 0.0)) throw std::invalid_argument("probabilistic_encode: tol must be > 0");
  const CMatrix mat = book.matrix();
  EncodeMethod method = opt.method;
  if (method == EncodeMethod::automatic) method = book.dim() == 2 ? EncodeMethod::qubit_exact : EncodeMethod::subgradient;
  if (method == EncodeMethod::qubit_exact) {
    if (book.dim() != 2) throw std::invalid_argument("probabilistic_encode: exact projection needs d = 2");
    return detail::encode_qubit_exact(phi, book, mat, opt.tol);
  }
  return detail::encode_subgradient(phi, book, mat, opt);
}

struct MinimaxOptions {
  std::size_t restarts = 100;
  std::size_t max_evals = 400;   // per restart
  double initial_step = 0.2;
  double min_step = 1e-7;
  std::size_t patience = 8;      // failed proposals before the step halves
  EncodeOptions encode{};
};

struct MinimaxResult {
  double lhs = 0.0;  // max_phi min_sigma T(phi, Gamma(sigma))
  double rhs = 0.0;  // 1 - min_phi max_x F(e_x, phi)
  double defect() const { return std::abs(lhs - rhs); }
};

namespace detail {

/// Random-perturbation hill climb of `score` (maximized) on the unit sphere.
template <class Score>
double hill_climb(PureState start, double start_score, Score score, SeededSampler& sampler, const MinimaxOptions& opt) {
  PureState cur = std::move(start);
  double cur_score = start_score;
  double step = opt.initial_step;
  std::size_t fails = 0;
  for (std::size_t e = 0; e < opt.max_evals && step >= opt.min_step; ++e) {
    CVector v = cur.amplitudes();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double re = sampler.normal();
      const double im = sampler.normal();
      v(i) += step * cplx(re, im);
    }
    PureState cand = PureState::normalized(std::move(v));
    const double s = score(cand);
    if (s > cur_score) {
      cur = std::move(cand);
      cur_score = s;
      fails = 0;
    } else if (++fails >= opt.patience) {
      step *= 0.5;
      fails = 0;
    }
  }
  return cur_score;
}

}  // namespace detail

/// Sampled check of max_phi min_sigma T(phi - Gamma(sigma)) = 1 - min_phi max_x F(e_x, phi)
/// for the classical-quantum decoder of `book`. Both sides are evaluated on the
/// same Haar samples, then the best `restarts` samples of each side are
/// refined by hill climbing.
inline MinimaxResult verify_minimax(const Covering& book, std::size_t num_phi_samples, SeededSampler& sampler,
                                    const MinimaxOptions& opt = {}) {
  if (book.empty()) throw std::invalid_argument("verify_minimax: empty code book");
  if (num_phi_samples == 0) throw std::invalid_argument("verify_minimax: need at least one sample");
  std::vector<PureState> phis;
  std::vector<double> dist;
  std::vector<double> fid;
  phis.reserve(num_phi_samples);
  for (std::size_t i = 0; i < num_phi_samples; ++i) {
    phis.push_back(haar_sample(book.dim(), sampler));
    dist.push_back(probabilistic_encode(phis.back(), book, opt.encode).achieved_distance);
    fid.push_back(max_fidelity(phis.back(), book));
  }
  auto lhs_score = [&](const PureState& s) { return probabilistic_encode(s, book, opt.encode).achieved_distance; };
  auto rhs_score = [&](const PureState& s) { return -max_fidelity(s, book); };

  std::vector<std::size_t> order(num_phi_samples);
  const std::size_t r = std::min(opt.restarts, num_phi_samples);
  MinimaxResult out;

  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r), order.end(),
                    [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
  double lhs = dist[order[0]];
  for (std::size_t i = 0; i < r; ++i) {
    lhs = std::max(lhs, detail::hill_climb(phis[order[i]], dist[order[i]], lhs_score, sampler, opt));
  }

  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r), order.end(),
                    [&](std::size_t a, std::size_t b) { return fid[a] < fid[b]; });
  double min_fid = fid[order[0]];
  for (std::size_t i = 0; i < r; ++i) {
    min_fid = std::min(min_fid, -detail::hill_climb(phis[order[i]], -fid[order[i]], rhs_score, sampler, opt));
  }

  out.lhs = lhs;
  out.rhs = 1.0 - min_fid;
  return out;
}

/// (sqrt 3 - 1) / (2 sqrt 3): distance from the octahedron to the farthest pure qubit state.
inline double octahedron_epsilon() { return (std::sqrt(3.0) - 1.0) / (2.0 * std::sqrt(3.0)); }

/// Pauli eigenstates, labels 0..5 = +x, -x, +y, -y, +z, -z; radius sqrt(octahedron_epsilon()).
inline Covering octahedron_book() {
  const Eigen::Vector3d dirs[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  std::vector<PureState> els;
  for (const auto& d : dirs) els.push_back(pure_from_bloch_direction(d));
  return Covering::explicit_book(2, std::sqrt(octahedron_epsilon()), std::move(els));
}

/// Pure state at the center of the (+x, +y, +z) face, farthest from the octahedron.
inline PureState octahedron_farthest_state() { return pure_from_bloch_direction(Eigen::Vector3d(1, 1, 1)); }

/// r(d, eps) = (d-1) log2(1/eps).
inline double rate(std::size_t dim, double epsilon) {
  return (static_cast<double>(dim) - 1.0) * std::log2(1.0 / epsilon);
}

struct BitLengthBounds {
  double lower_bits = 0.0;
  double upper_bits = 0.0;
  double rate = 0.0;  // r(d, eps)
};

/// Bounds on log2 |X| for the most compact deterministic encoding:
/// 2 r(d, 2eps) (2 r(d, eps) once d >= 4) <= log2|X| <= 2 r(d, eps) + log2(5 d ln d).
inline BitLengthBounds bit_length_bounds_deterministic(std::size_t dim, double epsilon) {
  if (dim < 2) throw std::domain_error("bit_length_bounds_deterministic: requires d >= 2");
  detail::require_epsilon(epsilon, 0.5, "bit_length_bounds_deterministic");
  const double d = static_cast<double>(dim);
  BitLengthBounds b;
  b.rate = rate(dim, epsilon);
  b.lower_bits = dim >= 4 ? 2.0 * b.rate : 2.0 * rate(dim, 2.0 * epsilon);
  b.upper_bits = 2.0 * b.rate + std::log2(5.0 * d * std::log(d));
  return b;
}

/// Bounds on log2 |X| for the most compact probabilistic encoding:
/// r(d, eps) - log2 d <= log2|X| <= r(d, eps) + log2(5 d ln d).
inline BitLengthBounds bit_length_bounds_probabilistic(std::size_t dim, double epsilon) {
  if (dim < 2) throw std::domain_error("bit_length_bounds_probabilistic: requires d >= 2");
  detail::require_epsilon(epsilon, 1.0, "bit_length_bounds_probabilistic");
  const double d = static_cast<double>(dim);
  BitLengthBounds b;
  b.rate = rate(dim, epsilon);
  b.lower_bits = b.rate - std::log2(d);
  b.upper_bits = b.rate + std::log2(5.0 * d * std::log(d));
  return b;
}

}  // namespace qsc
