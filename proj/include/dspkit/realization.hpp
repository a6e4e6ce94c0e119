#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dspkit/error.hpp"
#include "dspkit/genericity.hpp"
#include "dspkit/jnf.hpp"
#include "dspkit/scalar.hpp"

namespace dspkit {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct Tolerances {
  double residual = 1e-8;       // Frobenius norm of the constraint
  double rank_relative = 1e-6;  // singular values below this fraction of the largest count as zero
  double eigenvalue = 1e-6;
  double condition_cap = 1e4;
};

struct Budget {
  int restarts = 50;
  int iterations = 200;
  std::uint64_t seed = 0;
  int jobs = 1;
  Tolerances tol;
  int max_size = 8;
  int max_p = 5;
};

/// Floating eigenvalues and the Jordan matrix of one class.
struct NumericClass {
  Jnf jnf;
  std::vector<Complex> eigenvalues;
  CMatrix jordan;
};

inline CMatrix jordan_matrix(const Jnf& jnf, std::span<const Complex> eigenvalues) {
  const int n = jnf.size();
  CMatrix g = CMatrix::Zero(n, n);
  int at = 0;
  for (std::size_t l = 0; l < jnf.slot_count(); ++l)
    for (int b : jnf.slot(l).parts()) {
      for (int i = 0; i < b; ++i) {
        g(at + i, at + i) = eigenvalues[l];
        if (i + 1 < b) g(at + i, at + i + 1) = 1.0;
      }
      at += b;
    }
  return g;
}

inline NumericClass numeric_class(const Jnf& jnf, std::vector<Complex> eigenvalues) {
  if (eigenvalues.size() != jnf.slot_count()) throw Error(ErrorCode::invalid_input, "one eigenvalue per slot");
  NumericClass c{jnf, std::move(eigenvalues), {}};
  c.jordan = jordan_matrix(c.jnf, c.eigenvalues);
  return c;
}

template <EigenScalar S>
NumericClass numeric_class(const ClassSpec<S>& spec) {
  std::vector<Complex> ev;
  for (const auto& v : spec.eigenvalues()) ev.push_back(v.to_complex());
  return numeric_class(spec.jnf(), std::move(ev));
}

// -- numerical linear algebra helpers -------------------------------------------

namespace detail {

inline int numerical_rank(const Eigen::VectorXd& sv, double rel) {
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel * sv(0)) ++r;
  return r;
}

/// Orthonormal basis of ker M, with `scale` the reference for the zero threshold.
inline CMatrix kernel(const CMatrix& m, double rel, double scale) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel * scale) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

inline double largest_singular_value(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

inline double condition_number(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& sv = svd.singularValues();
  const double lo = sv(sv.size() - 1);
  return lo == 0.0 ? std::numeric_limits<double>::infinity() : sv(0) / lo;
}

/// Nested kernels K_1 ⊂ K_2 ⊂ ... of N = A - lambda I, each found as
/// ker(P N) with P the projector onto the complement of the previous one, so
/// no power of N is ever formed. Returns orthonormal bases of K_1..K_depth.
inline std::vector<CMatrix> nested_kernels(const CMatrix& a, Complex lambda, int depth, double rel) {
  const Eigen::Index n = a.rows();
  const CMatrix nmat = a - lambda * CMatrix::Identity(n, n);
  const double scale = std::max({largest_singular_value(nmat), largest_singular_value(a), std::numeric_limits<double>::min()});
  std::vector<CMatrix> out;
  CMatrix prev(n, 0);
  for (int j = 1; j <= depth; ++j) {
    const CMatrix proj = CMatrix::Identity(n, n) - prev * prev.adjoint();
    CMatrix k = kernel(proj * nmat, rel, scale);
    out.push_back(k);
    prev = std::move(k);
  }
  return out;
}

inline Eigen::VectorXcd vec(const CMatrix& m) { return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size()); }

}  // namespace detail

/// rank((A - lambda I)^j) for j = 1..depth.
inline std::vector<int> numeric_power_ranks(const CMatrix& a, Complex lambda, int depth, double rel = 1e-6) {
  std::vector<int> out;
  for (const auto& k : detail::nested_kernels(a, lambda, depth, rel))
    out.push_back(static_cast<int>(a.rows() - k.cols()));
  return out;
}

/// Dimension of the algebra generated by I and the given matrices.
inline int burnside_dim(std::span<const CMatrix> matrices, double rel = 1e-6) {
  if (matrices.empty()) throw Error(ErrorCode::invalid_input, "no matrices");
  const Eigen::Index n = matrices.front().rows();
  const Eigen::Index full = n * n;
  std::vector<CMatrix> gens;
  for (const auto& m : matrices) {
    const double nm = m.norm();
    if (nm > 0) gens.push_back(m / nm);
  }
  std::vector<Eigen::VectorXcd> basis;
  std::vector<CMatrix> queue;
  auto try_add = [&](const CMatrix& m) {
    const double nm = m.norm();
    if (nm < 1e-300) return;
    Eigen::VectorXcd v = detail::vec(m) / nm;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.dot(v) * b;
    const double res = v.norm();
    if (res <= rel) return;
    basis.push_back(v / res);
    queue.push_back(Eigen::Map<const CMatrix>(basis.back().data(), n, n));
  };
  try_add(CMatrix::Identity(n, n));
  while (!queue.empty() && static_cast<Eigen::Index>(basis.size()) < full) {
    const CMatrix b = queue.back();
    queue.pop_back();
    for (const auto& g : gens) {
      try_add(g * b);
      if (static_cast<Eigen::Index>(basis.size()) == full) break;
    }
  }
  return static_cast<int>(basis.size());
}

/// Nullity of the stacked system [X, A_j] = 0.
inline int centralizer_nullity(std::span<const CMatrix> matrices, double rel = 1e-6) {
  if (matrices.empty()) throw Error(ErrorCode::invalid_input, "no matrices");
  const Eigen::Index n = matrices.front().rows();
  const Eigen::Index nn = n * n;
  CMatrix k(static_cast<Eigen::Index>(matrices.size()) * nn, nn);
  const CMatrix id = CMatrix::Identity(n, n);
  for (std::size_t j = 0; j < matrices.size(); ++j) {
    const CMatrix& a = matrices[j];
    // vec(XA - AX) = (A^T ⊗ I - I ⊗ A) vec X, column-major vec
    CMatrix block = CMatrix::Zero(nn, nn);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) {
        block.block(c * n, r * n, n, n) += a(r, c) * id;
        block.block(r * n, r * n, n, n).col(c) -= a.col(c);
      }
    k.middleRows(static_cast<Eigen::Index>(j) * nn, nn) = block;
  }
  Eigen::JacobiSVD<CMatrix> svd(k);
  return static_cast<int>(nn - detail::numerical_rank(svd.singularValues(), rel));
}

/// Spectrum (matched by a minimum-cost assignment, compared through cluster means)
/// and ranks of the powers of A - lambda I against the closed-form partition ranks.
inline bool class_membership(const CMatrix& a, const NumericClass& cls, const Tolerances& tol = {}) {
  const int n = cls.jnf.size();
  if (a.rows() != n || a.cols() != n) return false;
  if (n > 20) throw Error(ErrorCode::resource_exceeded, "class membership is limited to small sizes");

  Eigen::ComplexEigenSolver<CMatrix> es(a, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<std::size_t> target;  // slot of every spec eigenvalue copy
  for (std::size_t l = 0; l < cls.jnf.slot_count(); ++l)
    for (int c = 0; c < cls.jnf.slot(l).size(); ++c) target.push_back(l);

  // best[mask]: cheapest assignment of the first popcount(mask) targets to the computed eigenvalues in mask
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> best(states, std::numeric_limits<double>::infinity());
  std::vector<int> pick(states, -1);
  best[0] = 0;
  for (std::size_t mask = 0; mask < states; ++mask) {
    if (!std::isfinite(best[mask])) continue;
    const std::size_t t = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (t == target.size()) continue;
    const Complex want = cls.eigenvalues[target[t]];
    for (int i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) continue;
      const std::size_t next = mask | (std::size_t{1} << i);
      const double cost = best[mask] + std::abs(ev(i) - want);
      if (cost < best[next]) {
        best[next] = cost;
        pick[next] = i;
      }
    }
  }
  std::vector<Complex> sums(cls.jnf.slot_count(), 0.0);
  for (std::size_t mask = states - 1, t = target.size(); mask; --t) {
    const int i = pick[mask];
    sums[target[t - 1]] += ev(i);
    mask &= ~(std::size_t{1} << i);
  }
  for (std::size_t l = 0; l < cls.jnf.slot_count(); ++l) {
    const Complex mean = sums[l] / static_cast<double>(cls.jnf.slot(l).size());
    if (std::abs(mean - cls.eigenvalues[l]) > tol.eigenvalue * std::max(1.0, std::abs(cls.eigenvalues[l])))
      return false;
  }

  for (std::size_t l = 0; l < cls.jnf.slot_count(); ++l) {
    const Partition& part = cls.jnf.slot(l);
    const int depth = part.largest() + 1;
    const auto ranks = numeric_power_ranks(a, cls.eigenvalues[l], depth, tol.rank_relative);
    for (int j = 1; j <= depth; ++j)
      if (ranks[static_cast<std::size_t>(j - 1)] != part.power_rank(j) + (n - part.size())) return false;
  }
  return true;
}

/// Conjugator Q with A = Q G Q^{-1}, G the Jordan matrix of `cls`, recovered from
/// Jordan chains; nothing if A is numerically not in the class.
inline std::optional<CMatrix> jordan_basis(const CMatrix& a, const NumericClass& cls, const Tolerances& tol = {}) {
  const Eigen::Index n = a.rows();
  if (n != cls.jnf.size()) return std::nullopt;
  CMatrix q(n, n);
  Eigen::Index col = 0;
  for (std::size_t l = 0; l < cls.jnf.slot_count(); ++l) {
    const Partition& part = cls.jnf.slot(l);
    const Complex lambda = cls.eigenvalues[l];
    const CMatrix nmat = a - lambda * CMatrix::Identity(n, n);
    const auto kernels = detail::nested_kernels(a, lambda, part.largest(), tol.rank_relative);
    std::vector<std::pair<CVector, int>> tops;  // chain top and its length
    for (int s = part.largest(); s >= 1; --s) {
      const int need = static_cast<int>(std::count(part.parts().begin(), part.parts().end(), s));
      if (need == 0) continue;
      // span of K_{s-1} and images of longer chains landing at level s
      std::vector<CVector> span;
      if (s > 1)
        for (Eigen::Index c = 0; c < kernels[static_cast<std::size_t>(s - 2)].cols(); ++c)
          span.push_back(kernels[static_cast<std::size_t>(s - 2)].col(c));
      for (const auto& [v, len] : tops) {
        CVector w = v;
        for (int i = 0; i < len - s; ++i) w = nmat * w;
        span.push_back(w);
      }
      CMatrix w(n, static_cast<Eigen::Index>(span.size()));
      for (std::size_t c = 0; c < span.size(); ++c) w.col(static_cast<Eigen::Index>(c)) = span[c];
      CMatrix proj = CMatrix::Identity(n, n);
      if (w.cols() > 0) {
        Eigen::HouseholderQR<CMatrix> qr(w);
        const CMatrix qw = qr.householderQ() * CMatrix::Identity(n, w.cols());
        proj -= qw * qw.adjoint();
      }
      const CMatrix& ks = kernels[static_cast<std::size_t>(s - 1)];
      if (ks.cols() < need) return std::nullopt;
      Eigen::JacobiSVD<CMatrix> svd(proj * ks, Eigen::ComputeThinU);
      if (svd.singularValues().size() < need || svd.singularValues()(need - 1) < tol.rank_relative)
        return std::nullopt;
      for (int c = 0; c < need; ++c) tops.emplace_back(svd.matrixU().col(c), s);
    }
    std::stable_sort(tops.begin(), tops.end(), [](const auto& x, const auto& y) { return x.second > y.second; });
    for (const auto& [v, len] : tops) {
      if (col + len > n) return std::nullopt;
      std::vector<CVector> chain{v};
      for (int i = 1; i < len; ++i) chain.push_back(nmat * chain.back());
      for (int i = len - 1; i >= 0; --i) q.col(col++) = chain[static_cast<std::size_t>(i)];
    }
  }
  if (col != n) return std::nullopt;
  const CMatrix rebuilt = q * cls.jordan * q.inverse();
  if ((rebuilt - a).norm() > 1e-8 * std::max(1.0, a.norm())) return std::nullopt;
  return q;
}

/// Frobenius norm of sum A_j, resp. of M_1 ... M_{p+1} - I.
inline double constraint_residual(std::span<const CMatrix> matrices, Mode mode) {
  const Eigen::Index n = matrices.front().rows();
  if (mode == Mode::additive) {
    CMatrix s = CMatrix::Zero(n, n);
    for (const auto& m : matrices) s += m;
    return s.norm();
  }
  CMatrix prod = CMatrix::Identity(n, n);
  for (const auto& m : matrices) prod = prod * m;
  return (prod - CMatrix::Identity(n, n)).norm();
}

struct RealizationResult {
  std::vector<CMatrix> conjugators;
  std::vector<CMatrix> matrices;
  double residual = 0;
  int burnside_dim = 0;
  int centralizer_nullity = 0;
  bool class_membership_ok = false;
  bool certified = false;
  int restart = 0;
  int iterations = 0;
  double max_condition = 0;

  int n() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }
  bool irreducible() const { return burnside_dim == n() * n(); }
  bool trivial_centralizer() const { return centralizer_nullity == 1; }
  /// Schur: an irreducible tuple has scalar centralizer.
  bool certificates_consistent() const { return !irreducible() || trivial_centralizer(); }
};

namespace detail {

enum class RestartOutcome { certified, stalled, ill_conditioned };

struct RestartRun {
  RestartOutcome outcome = RestartOutcome::stalled;
  RealizationResult result;
};

inline CMatrix constraint_matrix(std::span<const CMatrix> m, Mode mode) {
  const Eigen::Index n = m.front().rows();
  if (mode == Mode::additive) {
    CMatrix s = CMatrix::Zero(n, n);
    for (const auto& a : m) s += a;
    return s;
  }
  CMatrix prod = CMatrix::Identity(n, n);
  for (const auto& a : m) prod = prod * a;
  return prod - CMatrix::Identity(n, n);
}

/// Jacobian of the constraint w.r.t. infinitesimal conjugations A_j -> A_j + [X_j, A_j].
inline CMatrix constraint_jacobian(std::span<const CMatrix> m, Mode mode) {
  const Eigen::Index n = m.front().rows();
  const Eigen::Index nn = n * n;
  const auto count = static_cast<Eigen::Index>(m.size());
  CMatrix jac = CMatrix::Zero(nn, count * nn);
  std::vector<CMatrix> prefix(m.size() + 1), suffix(m.size() + 1);
  prefix[0] = CMatrix::Identity(n, n);
  suffix[m.size()] = CMatrix::Identity(n, n);
  if (mode == Mode::multiplicative) {
    for (std::size_t j = 0; j < m.size(); ++j) prefix[j + 1] = prefix[j] * m[j];
    for (std::size_t j = m.size(); j-- > 0;) suffix[j] = m[j] * suffix[j + 1];
  }
  for (std::size_t j = 0; j < m.size(); ++j) {
    // d = L (E_ab M - M E_ab) R = L[:,a] (M R)[b,:] - (L M)[:,a] R[b,:]
    if (mode == Mode::additive) {
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
          CMatrix d = CMatrix::Zero(n, n);
          d.row(a) += m[j].row(b);
          d.col(b) -= m[j].col(a);
          jac.col(static_cast<Eigen::Index>(j) * nn + b * n + a) = vec(d);
        }
      continue;
    }
    const CMatrix& left = prefix[j];
    const CMatrix& right = suffix[j + 1];
    const CMatrix mr = m[j] * right;
    const CMatrix lm = left * m[j];
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) {
        const CMatrix d = left.col(a) * mr.row(b) - lm.col(a) * right.row(b);
        jac.col(static_cast<Eigen::Index>(j) * nn + b * n + a) = vec(d);
      }
  }
  return jac;
}

inline CMatrix random_conjugator(std::mt19937_64& rng, Eigen::Index n, double cap, bool& ok) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    CMatrix q(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) q(i, k) = std::polar(std::sqrt(u(rng)), 2 * std::numbers::pi * u(rng));
    if (condition_number(q) <= cap) {
      ok = true;
      return q;
    }
  }
  ok = false;
  return CMatrix::Identity(n, n);
}

/// Coefficients c_1..c_n of det(xI - S) = x^n + c_1 x^{n-1} + ... + c_n.
inline CVector charpoly(const CMatrix& s) {
  const Eigen::Index n = s.rows();
  CVector c(n);
  CMatrix m = CMatrix::Zero(n, n);
  for (Eigen::Index k = 1; k <= n; ++k) {
    m = s * m;
    m.diagonal().array() += k == 1 ? Complex(1.0) : c(k - 2);
    c(k - 1) = -(s * m).trace() / static_cast<double>(k);
  }
  return c;
}

/// True when every slot is (b, ..., b, r) with r < b: the closure of the class is
/// then cut out by its characteristic polynomial and prod_l (A - lambda_l)^{b_l}.
inline bool spectrally_determined(const Jnf& jnf) {
  for (const auto& p : jnf.slots()) {
    const auto& parts = p.parts();
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
      if (parts[i] != parts.front()) return false;
  }
  return true;
}

struct SpectralTarget {
  CVector coeffs;
  std::vector<std::pair<Complex, int>> factors;
  double scale = 1;
};

inline SpectralTarget spectral_target(const NumericClass& cls) {
  SpectralTarget t;
  t.coeffs = charpoly(cls.jordan);
  bool needs_factors = false;
  for (std::size_t l = 0; l < cls.jnf.slot_count(); ++l) {
    t.scale = std::max(t.scale, std::abs(cls.eigenvalues[l]));
    t.factors.emplace_back(cls.eigenvalues[l], cls.jnf.slot(l).largest());
    needs_factors = needs_factors || cls.jnf.slot(l).parts().size() > 1;
  }
  if (!needs_factors) t.factors.clear();
  return t;
}

inline CVector spectral_residual(const CMatrix& s, const SpectralTarget& t) {
  const Eigen::Index n = s.rows();
  CVector c = charpoly(s) - t.coeffs;
  double power = 1;
  for (Eigen::Index k = 0; k < n; ++k) c(k) /= (power *= t.scale);
  if (t.factors.empty()) return c;
  CMatrix p = CMatrix::Identity(n, n);
  for (const auto& [lambda, b] : t.factors)
    for (int i = 0; i < b; ++i) p = p * (s - lambda * CMatrix::Identity(n, n)) / t.scale;
  CVector out(n + n * n);
  out << c, vec(p);
  return out;
}

/// The matrix forced on class e by the others: minus their sum, or the inverse
/// of their cyclic product starting after e.
inline CMatrix eliminated(const std::vector<CMatrix>& a, std::size_t e, Mode mode) {
  const Eigen::Index n = a.front().rows();
  if (mode == Mode::additive) {
    CMatrix s = CMatrix::Zero(n, n);
    for (std::size_t j = 0; j < a.size(); ++j)
      if (j != e) s -= a[j];
    return s;
  }
  CMatrix prod = CMatrix::Identity(n, n);
  for (std::size_t k = 1; k < a.size(); ++k) prod = prod * a[(e + k) % a.size()];
  return prod.inverse();
}

struct Search {
  std::span<const NumericClass> classes;
  std::vector<CMatrix> q, a;
  double cap = 0;
};

/// Levenberg-Marquardt over infinitesimal conjugations Q_j -> (I + X_j) Q_j of the
/// free classes. Returns the number of iterations; `res` is the final residual norm.
template <class Residual, class Jacobian>
int levenberg_marquardt(Search& s, const std::vector<std::size_t>& free, Residual&& residual, Jacobian&& jacobian,
                        int max_iterations, double target, double& res) {
  const Eigen::Index n = s.q.front().rows();
  CVector r = residual(s.a);
  res = r.norm();
  double mu = -1;
  int it = 0;
  for (; it < max_iterations && res >= target; ++it) {
    const CMatrix jac = jacobian(s.a, r);
    const CMatrix jjh = jac * jac.adjoint();
    if (mu < 0) mu = 1e-3 * std::max(jjh.diagonal().real().maxCoeff(), 1e-12);
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      const CMatrix lhs = jjh + mu * CMatrix::Identity(jjh.rows(), jjh.cols());
      CVector x = -(jac.adjoint() * lhs.ldlt().solve(r));
      const double xn = x.norm();
      if (xn > 0.5) x *= 0.5 / xn;
      std::vector<CMatrix> q2 = s.q, a2 = s.a;
      bool ok = true;
      for (std::size_t i = 0; i < free.size() && ok; ++i) {
        const std::size_t j = free[i];
        const CMatrix xj = Eigen::Map<const CMatrix>(x.data() + static_cast<Eigen::Index>(i) * n * n, n, n);
        q2[j] = (CMatrix::Identity(n, n) + xj) * s.q[j];
        q2[j] /= q2[j].norm();
        if (condition_number(q2[j]) > s.cap)
          ok = false;
        else
          a2[j] = q2[j] * s.classes[j].jordan * q2[j].inverse();
      }
      if (!ok) {
        mu *= 4;
        continue;
      }
      CVector r2 = residual(a2);
      if (r2.norm() < res) {
        s.q = std::move(q2);
        s.a = std::move(a2);
        r = std::move(r2);
        res = r.norm();
        mu = std::max(mu / 3, 1e-14);
        accepted = true;
      } else {
        mu *= 4;
      }
    }
    if (!accepted) break;
  }
  return it;
}

/// First phase: class e is eliminated and only its spectrum is fitted, with a
/// finite-difference Jacobian. On success class e gets its Jordan basis.
inline int fit_eliminated(Search& s, std::size_t e, Mode mode, const Budget& budget) {
  const Eigen::Index n = s.q.front().rows();
  const Eigen::Index nn = n * n;
  const SpectralTarget target = spectral_target(s.classes[e]);
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < s.q.size(); ++j)
    if (j != e) free.push_back(j);
  auto residual = [&](const std::vector<CMatrix>& a) { return spectral_residual(eliminated(a, e, mode), target); };
  auto jacobian = [&](const std::vector<CMatrix>& a, const CVector& r) {
    constexpr double h = 1e-7;
    CMatrix jac(r.size(), static_cast<Eigen::Index>(free.size()) * nn);
    std::vector<CMatrix> moved = a;
    for (std::size_t i = 0; i < free.size(); ++i) {
      const std::size_t j = free[i];
      for (Eigen::Index k = 0; k < nn; ++k) {
        // A -> (I + hE) A (I + hE)^{-1} to first order
        CMatrix d = CMatrix::Zero(n, n);
        d.row(k % n) += a[j].row(k / n);
        d.col(k / n) -= a[j].col(k % n);
        moved[j] = a[j] + h * d;
        jac.col(static_cast<Eigen::Index>(i) * nn + k) = (residual(moved) - r) / h;
      }
      moved[j] = a[j];
    }
    return jac;
  };
  double res = 0;
  const int it = levenberg_marquardt(s, free, residual, jacobian, budget.iterations, budget.tol.residual * 1e-3, res);
  if (res < budget.tol.residual) {
    const CMatrix forced = eliminated(s.a, e, mode);
    if (auto basis = jordan_basis(forced, s.classes[e], budget.tol)) {
      CMatrix qe = *basis / basis->norm();
      if (condition_number(qe) <= s.cap) {
        s.q[e] = qe;
        s.a[e] = qe * s.classes[e].jordan * qe.inverse();
      }
    }
  }
  return it;
}

/// The class fitted through its spectrum: the largest orbit among those whose
/// closure is spectrally determined.
inline std::optional<std::size_t> elimination_choice(std::span<const NumericClass> classes) {
  std::optional<std::size_t> best;
  for (std::size_t j = 0; j < classes.size(); ++j) {
    if (!spectrally_determined(classes[j].jnf)) continue;
    if (!best || d_of(classes[j].jnf) > d_of(classes[*best].jnf)) best = j;
  }
  return best;
}

inline RestartRun run_restart(std::span<const NumericClass> classes, Mode mode, const Budget& budget, int restart,
                              const std::vector<CMatrix>* warm) {
  const auto n = static_cast<Eigen::Index>(classes.front().jnf.size());
  const std::size_t count = classes.size();
  const Tolerances& tol = budget.tol;
  RestartRun run;

  std::seed_seq seq{static_cast<std::uint32_t>(budget.seed), static_cast<std::uint32_t>(budget.seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);

  Search s{classes, std::vector<CMatrix>(count), std::vector<CMatrix>(count), tol.condition_cap};
  for (std::size_t j = 0; j < count; ++j) {
    if (warm) {
      auto basis = jordan_basis((*warm)[j], classes[j], tol);
      if (!basis) throw Error(ErrorCode::invalid_input, "warm-start matrix is not in its prescribed class");
      s.q[j] = *basis;
    } else {
      bool ok = false;
      s.q[j] = random_conjugator(rng, n, tol.condition_cap, ok);
      if (!ok) {
        run.outcome = RestartOutcome::ill_conditioned;
        return run;
      }
    }
    s.a[j] = s.q[j] * classes[j].jordan * s.q[j].inverse();
  }

  int it = 0;
  if (!warm)
    if (const auto e = elimination_choice(classes)) it += fit_eliminated(s, *e, mode, budget);

  std::vector<std::size_t> all(count);
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto residual = [&](const std::vector<CMatrix>& a) -> CVector { return vec(constraint_matrix(a, mode)); };
  auto jacobian = [&](const std::vector<CMatrix>& a, const CVector&) { return constraint_jacobian(a, mode); };
  double res = 0;
  it += levenberg_marquardt(s, all, residual, jacobian, budget.iterations, tol.residual * 1e-3, res);

  RealizationResult& out = run.result;
  out.conjugators = s.q;
  out.matrices = s.a;
  out.residual = res;
  out.restart = restart;
  out.iterations = it;
  for (const auto& qj : s.q) out.max_condition = std::max(out.max_condition, condition_number(qj));
  if (res >= tol.residual) {
    run.outcome = RestartOutcome::stalled;
    return run;
  }
  out.class_membership_ok = true;
  for (std::size_t j = 0; j < count; ++j)
    out.class_membership_ok = out.class_membership_ok && class_membership(s.a[j], classes[j], tol);
  out.burnside_dim = burnside_dim(s.a, tol.rank_relative);
  out.centralizer_nullity = centralizer_nullity(s.a, tol.rank_relative);
  out.certified = out.class_membership_ok;
  run.outcome = out.certified ? RestartOutcome::certified : RestartOutcome::stalled;
  return run;
}

}  // namespace detail

/// Searches for A_j in the classes with sum zero (resp. M_j with product I).
/// Restarts are seeded by (seed, restart index); the lowest certified restart wins.
/// An empty result is not a proof of nonexistence.
inline std::optional<RealizationResult> realize(std::span<const NumericClass> classes, Mode mode,
                                                const Budget& budget = {},
                                                const std::vector<CMatrix>* warm_start = nullptr) {
  if (classes.size() < 2) throw Error(ErrorCode::invalid_input, "at least two classes are required");
  const int n = classes.front().jnf.size();
  for (const auto& c : classes)
    if (c.jnf.size() != n) throw Error(ErrorCode::invalid_input, "all classes must have the same size");
  if (n > budget.max_size || static_cast<int>(classes.size()) - 1 > budget.max_p)
    throw Error(ErrorCode::resource_exceeded, "realization search is limited to small tuples");
  if (warm_start && warm_start->size() != classes.size())
    throw Error(ErrorCode::invalid_input, "warm start needs one matrix per class");

  const int restarts = std::max(budget.restarts, warm_start ? 1 : 0);
  const int jobs = std::max(1, budget.jobs);
  int ill = 0;
  for (int first = 0; first < restarts; first += jobs) {
    const int last = std::min(restarts, first + jobs);
    std::vector<detail::RestartRun> runs;
    if (jobs == 1) {
      runs.push_back(detail::run_restart(classes, mode, budget, first, first == 0 ? warm_start : nullptr));
    } else {
      std::vector<std::future<detail::RestartRun>> futures;
      for (int r = first; r < last; ++r)
        futures.push_back(std::async(std::launch::async, [&, r] {
          return detail::run_restart(classes, mode, budget, r, r == 0 ? warm_start : nullptr);
        }));
      for (auto& f : futures) runs.push_back(f.get());
    }
    for (auto& run : runs) {
      if (run.outcome == detail::RestartOutcome::certified) return std::move(run.result);
      if (run.outcome == detail::RestartOutcome::ill_conditioned) ++ill;
    }
  }
  if (restarts > 0 && ill == restarts)
    throw Error(ErrorCode::ill_conditioned, "every restart ran into ill-conditioned conjugators");
  return std::nullopt;
}

template <EigenScalar S>
std::optional<RealizationResult> realize(std::span<const ClassSpec<S>> specs, const Budget& budget = {},
                                         const std::vector<CMatrix>* warm_start = nullptr) {
  std::vector<NumericClass> classes;
  for (const auto& s : specs) classes.push_back(numeric_class(s));
  return realize(std::span<const NumericClass>(classes), scalar_traits<S>::mode, budget, warm_start);
}

}  // namespace dspkit
