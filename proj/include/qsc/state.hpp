#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "qsc/sampler.hpp"

namespace qsc {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Validation tolerances for state types. Every field can be overridden per call.
struct Tolerances {
  double norm = 1e-12;       // | ||psi|| - 1 |
  double hermitian = 1e-12;  // max |A - A^dagger|
  double psd = 1e-10;        // smallest admissible eigenvalue is -psd
  double trace = 1e-10;      // | tr A - 1 |
  double bloch = 1e-12;      // ||r|| <= 1/2 + bloch
};

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

/// Unit vector in C^d, identified with the projector |psi><psi|. Global phase
/// carries no meaning; compare states with trace_distance, never entrywise.
class PureState {
 public:
  static PureState from_amplitudes(CVector amplitudes, const Tolerances& tol = {}) {
    if (amplitudes.size() == 0) throw std::invalid_argument("PureState: dimension must be >= 1");
    const double n = amplitudes.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > tol.norm) {
      throw std::domain_error("PureState: amplitudes are not unit norm (norm = " + std::to_string(n) + ")");
    }
    return PureState(std::move(amplitudes));
  }

  /// Rescales a nonzero vector to unit norm.
  static PureState normalized(CVector v) {
    if (v.size() == 0) throw std::invalid_argument("PureState: dimension must be >= 1");
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("PureState: cannot normalize a zero vector");
    v /= n;
    return PureState(std::move(v));
  }

  static PureState basis(std::size_t dim, std::size_t index) {
    if (dim == 0) throw std::invalid_argument("PureState: dimension must be >= 1");
    if (index >= dim) throw std::out_of_range("PureState: basis index out of range");
    CVector v = CVector::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return PureState(std::move(v));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(amps_.size()); }
  const CVector& amplitudes() const noexcept { return amps_; }

  CMatrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  explicit PureState(CVector v) : amps_(std::move(v)) {}
  CVector amps_;
};

/// <a|b>
inline cplx overlap(const PureState& a, const PureState& b) {
  require_same_dim(a.dim(), b.dim(), "overlap");
  return a.amplitudes().dot(b.amplitudes());
}

/// Positive semidefinite, unit-trace Hermitian matrix.
class DensityMatrix {
 public:
  static DensityMatrix from_matrix(CMatrix m, const Tolerances& tol = {}) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
      throw std::invalid_argument("DensityMatrix: matrix must be square with dimension >= 1");
    }
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol.hermitian) {
      throw std::domain_error("DensityMatrix: matrix is not Hermitian");
    }
    // Exact symmetrization so downstream eigensolvers see a Hermitian input.
    m = 0.5 * (m + m.adjoint()).eval();
    if (std::abs(m.trace().real() - 1.0) > tol.trace) {
      throw std::domain_error("DensityMatrix: trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol.psd) {
      throw std::domain_error("DensityMatrix: matrix is not positive semidefinite");
    }
    return DensityMatrix(std::move(m));
  }

  static DensityMatrix from_pure(const PureState& psi) { return DensityMatrix(psi.projector()); }

  static DensityMatrix diagonal(const Eigen::VectorXd& probs, const Tolerances& tol = {}) {
    return from_matrix(probs.cast<cplx>().asDiagonal(), tol);
  }

  static DensityMatrix maximally_mixed(std::size_t dim) {
    if (dim == 0) throw std::invalid_argument("DensityMatrix: dimension must be >= 1");
    const auto n = static_cast<Eigen::Index>(dim);
    return DensityMatrix(CMatrix::Identity(n, n) / static_cast<double>(dim));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const noexcept { return m_; }

 private:
  explicit DensityMatrix(CMatrix m) : m_(std::move(m)) {}
  CMatrix m_;
};

namespace detail {

/// Fixed total order on matrices, used to make trace_distance exactly symmetric.
inline bool entrywise_less(const CMatrix& a, const CMatrix& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const cplx x = a.data()[i], y = b.data()[i];
    if (x.real() != y.real()) return x.real() < y.real();
    if (x.imag() != y.imag()) return x.imag() < y.imag();
  }
  return false;
}

}  // namespace detail

/// Half the sum of absolute eigenvalues of a - b. The difference is always
/// formed in the same order so T(a, b) and T(b, a) agree bit for bit.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  require_same_dim(a.dim(), b.dim(), "trace_distance");
  const bool swap = detail::entrywise_less(b.matrix(), a.matrix());
  const CMatrix diff = swap ? (b.matrix() - a.matrix()).eval() : (a.matrix() - b.matrix()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(diff, Eigen::EigenvaluesOnly);
  return std::clamp(0.5 * es.eigenvalues().cwiseAbs().sum(), 0.0, 1.0);
}

/// sqrt(1 - |<a|b>|^2), the exact trace distance between two pure states,
/// evaluated as the norm of the part of b orthogonal to a (no cancellation
/// when the states nearly coincide).
inline double trace_distance(const PureState& a, const PureState& b) {
  require_same_dim(a.dim(), b.dim(), "trace_distance");
  const double t = (b.amplitudes() - overlap(a, b) * a.amplitudes()).norm();
  return std::clamp(t, 0.0, 1.0);
}

inline double trace_distance(const PureState& a, const DensityMatrix& b) {
  return trace_distance(DensityMatrix::from_pure(a), b);
}

inline double trace_distance(const DensityMatrix& a, const PureState& b) { return trace_distance(b, a); }

namespace detail {

inline Eigen::SelfAdjointEigenSolver<CMatrix> checked_eigen(const CMatrix& m, const Tolerances& tol,
                                                            const char* what) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  if (es.eigenvalues().minCoeff() < -tol.psd) {
    throw std::domain_error(std::string(what) + ": input is not positive semidefinite");
  }
  return es;
}

/// Square root of a PSD matrix. Eigenvalues below 1e-13 are rounding noise of
/// rank-deficient inputs and are treated as exact zeros; otherwise their square
/// roots (~1e-8) would leak into the fidelity.
inline CMatrix psd_sqrt(const Eigen::SelfAdjointEigenSolver<CMatrix>& es) {
  const Eigen::VectorXd roots = es.eigenvalues().unaryExpr([](double l) { return l > 1e-13 ? std::sqrt(l) : 0.0; });
  return es.eigenvectors() * roots.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Uhlmann fidelity (||sqrt(a) sqrt(b)||_1)^2, the nuclear norm taken from the
/// singular values of the product.
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b, const Tolerances& tol = {}) {
  require_same_dim(a.dim(), b.dim(), "fidelity");
  const CMatrix root_a = detail::psd_sqrt(detail::checked_eigen(a.matrix(), tol, "fidelity"));
  const CMatrix root_b = detail::psd_sqrt(detail::checked_eigen(b.matrix(), tol, "fidelity"));
  const CMatrix prod = root_a * root_b;
  const double s = Eigen::JacobiSVD<CMatrix>(prod).singularValues().sum();
  return std::clamp(s * s, 0.0, 1.0);
}

inline double fidelity(const PureState& a, const PureState& b) {
  return std::clamp(std::norm(overlap(a, b)), 0.0, 1.0);
}

/// <phi|rho|phi>
inline double fidelity(const PureState& phi, const DensityMatrix& rho) {
  require_same_dim(phi.dim(), rho.dim(), "fidelity");
  const double f = phi.amplitudes().dot(rho.matrix() * phi.amplitudes()).real();
  return std::clamp(f, 0.0, 1.0);
}

inline double fidelity(const DensityMatrix& rho, const PureState& phi) { return fidelity(phi, rho); }

/// Pure state drawn from the unitarily invariant measure: 2d independent
/// standard normals read as d complex amplitudes, then normalized.
inline PureState haar_sample(std::size_t dim, SeededSampler& sampler) {
  if (dim == 0) throw std::invalid_argument("haar_sample: dimension must be >= 1");
  CVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double re = sampler.normal();
    const double im = sampler.normal();
    v(i) = cplx(re, im);
  }
  return PureState::normalized(std::move(v));
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phase fix
/// on R's diagonal.
inline CMatrix haar_unitary(std::size_t dim, SeededSampler& sampler) {
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = sampler.normal();
      const double im = sampler.normal();
      g(i, j) = cplx(re, im);
    }
  }
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(n, n);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mag = std::abs(r(i, i));
    if (mag > 0) q.col(i) *= r(i, i) / mag;
  }
  return q;
}

/// Random mixed state of full rank: normalized G G^dagger for Ginibre G.
inline DensityMatrix random_density(std::size_t dim, SeededSampler& sampler) {
  const auto n = static_cast<Eigen::Index>(dim);
  CMatrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = sampler.normal();
      const double im = sampler.normal();
      g(i, j) = cplx(re, im);
    }
  }
  CMatrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityMatrix::from_matrix(std::move(m));
}

/// Eigendecomposition of a density matrix, cached so that trace distances from
/// many pure states can be evaluated without a full eigensolve each.
class SpectralDensity {
 public:
  explicit SpectralDensity(const DensityMatrix& rho) : rho_(rho) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix());
    // Descending order: index 0 carries the largest eigenvalue.
    const Eigen::Index n = es.eigenvalues().size();
    probs_.resize(n);
    basis_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      probs_(i) = std::max(0.0, es.eigenvalues()(n - 1 - i));
      basis_.col(i) = es.eigenvectors().col(n - 1 - i);
    }
  }

  const DensityMatrix& state() const noexcept { return rho_; }
  std::size_t dim() const noexcept { return rho_.dim(); }
  /// Eigenvalues in decreasing order (clamped at 0).
  const Eigen::VectorXd& eigenvalues() const noexcept { return probs_; }
  /// Column i is the eigenvector of eigenvalues()(i).
  const CMatrix& eigenvectors() const noexcept { return basis_; }
  double top_eigenvalue() const noexcept { return probs_(0); }

  /// T(psi, rho). psi - rho has at most one positive eigenvalue lambda, and
  /// T = lambda solves sum_i w_i / (lambda + p_i) = 1 with w_i = |<i|psi>|^2.
  double distance_to(const PureState& psi) const {
    require_same_dim(psi.dim(), dim(), "trace_distance");
    const Eigen::VectorXd w = (basis_.adjoint() * psi.amplitudes()).cwiseAbs2();
    return distance_from_weights(w);
  }

  double distance_from_weights(const Eigen::VectorXd& w) const {
    constexpr double kPure = 1e-12;
    if (probs_(0) > 1.0 - kPure) return std::sqrt(std::clamp(1.0 - w(0), 0.0, 1.0));
    // g(l) = sum w_i/(l+p_i) - 1 is decreasing on (0, inf) with g(0+) >= 0 and
    // g(1) <= 0. Newton steps, falling back to bisection outside the bracket.
    auto g = [&](double l, double& dg) {
      double val = -1.0;
      dg = 0.0;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double den = l + probs_(i);
        val += w(i) / den;
        dg -= w(i) / (den * den);
      }
      return val;
    };
    double lo = 0.0;
    double hi = 1.0;
    double l = 0.5;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      double dg = 0.0;
      const double val = g(l, dg);
      if (val == 0.0) break;
      (val > 0.0 ? lo : hi) = l;
      double next = dg < 0.0 ? l - val / dg : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - l) <= 1e-16) {
        l = next;
        break;
      }
      l = next;
    }
    return std::clamp(l, 0.0, 1.0);
  }

 private:
  DensityMatrix rho_;
  Eigen::VectorXd probs_;
  CMatrix basis_;
};

/// Qubit state as a point of the radius-1/2 Bloch ball, where trace distance
/// equals Euclidean distance.
class BlochVector {
 public:
  static BlochVector from_coords(const Eigen::Vector3d& r, const Tolerances& tol = {}) {
    if (!(r.norm() <= 0.5 + tol.bloch)) throw std::domain_error("BlochVector: norm exceeds 1/2");
    return BlochVector(r);
  }

  const Eigen::Vector3d& coords() const noexcept { return r_; }

 private:
  explicit BlochVector(const Eigen::Vector3d& r) : r_(r) {}
  Eigen::Vector3d r_;
};

/// r = (tr(rho X), tr(rho Y), tr(rho Z)) / 2.
inline BlochVector to_bloch(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw std::invalid_argument("to_bloch: unsupported dimension, need d = 2");
  const CMatrix& m = rho.matrix();
  return BlochVector::from_coords(
      Eigen::Vector3d(m(0, 1).real(), -m(0, 1).imag(), 0.5 * (m(0, 0).real() - m(1, 1).real())));
}

inline BlochVector to_bloch(const PureState& psi) {
  if (psi.dim() != 2) throw std::invalid_argument("to_bloch: unsupported dimension, need d = 2");
  return to_bloch(DensityMatrix::from_pure(psi));
}

inline DensityMatrix from_bloch(const BlochVector& b) {
  const Eigen::Vector3d& r = b.coords();
  CMatrix m(2, 2);
  m << cplx(0.5 + r.z(), 0.0), cplx(r.x(), -r.y()), cplx(r.x(), r.y()), cplx(0.5 - r.z(), 0.0);
  return DensityMatrix::from_matrix(std::move(m));
}

/// Pure qubit state whose Bloch vector points along `direction` (any nonzero length).
inline PureState pure_from_bloch_direction(const Eigen::Vector3d& direction) {
  const Eigen::Vector3d n = direction.normalized();
  const double theta = std::acos(std::clamp(n.z(), -1.0, 1.0));
  const double phi = std::atan2(n.y(), n.x());
  CVector v(2);
  v << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
  return PureState::normalized(std::move(v));
}

}  // namespace qsc
