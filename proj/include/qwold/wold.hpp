// Numerical Wold decomposition and the defect-space machinery on truncated
// matrices. All assertions restrict to the safe window; the strong-operator
// limit of V^n V*^n is replaced by iteration to stationarity plus eigenvalue
// rounding at 1/2, which is exact at finite n for graded shifts.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <optional>
#include <random>

#include "qwold/opalg.hpp"

namespace qwold {

/// Deterministic orthonormal basis of the (numerical) column space: modified
/// Gram-Schmidt with max-norm pivoting and canonical column phases.
inline Eigen::MatrixXcd orthonormal_range(Eigen::MatrixXcd m, double rank_tol) {
  const int cols = int(m.cols());
  std::vector<bool> used(cols, false);
  std::vector<Eigen::VectorXcd> basis;
  while (true) {
    int pick = -1;
    double best = rank_tol;
    for (int j = 0; j < cols; ++j) {
      if (used[j]) continue;
      double n = m.col(j).norm();
      if (n > best) {
        best = n;
        pick = j;
      }
    }
    if (pick < 0) break;
    used[pick] = true;
    Eigen::VectorXcd v = m.col(pick) / m.col(pick).norm();
    int anchor = 0;
    v.cwiseAbs().maxCoeff(&anchor);
    cplx a = v(anchor);
    v *= std::conj(a) / std::abs(a);
    basis.push_back(v);
    for (int j = 0; j < cols; ++j)
      if (!used[j]) m.col(j) -= v * v.dot(m.col(j));
  }
  Eigen::MatrixXcd out(m.rows(), int(basis.size()));
  for (int k = 0; k < int(basis.size()); ++k) out.col(k) = basis[k];
  return out;
}

/// Gram check over safe columns; names the first violating column on failure.
inline void require_window_isometry(const TruncatedMatrix& v, double tol = 1e-10) {
  auto safe = v.safe_indices();
  for (std::size_t a = 0; a < safe.size(); ++a) {
    for (std::size_t b = a; b < safe.size(); ++b) {
      cplx g = v.mat.col(safe[a]).dot(v.mat.col(safe[b]));
      cplx want = a == b ? cplx(1, 0) : cplx(0, 0);
      if (std::abs(g - want) > tol)
        fail(ErrorCode::precondition, "window isometry fails at column " +
                                          v.basis->key(safe[b]).str() + " (gram deviation " +
                                          std::to_string(std::abs(g - want)) + ")");
    }
  }
}

struct DefectData {
  TruncatedMatrix projection;  // I - V V*, band-tracked
  Eigen::MatrixXcd basis;      // orthonormal columns, safe window only

  int rank() const { return int(basis.cols()); }
};

/// D_{V*} = I - V V* (the projection onto the cokernel, V being isometric on
/// the window) and an orthonormal basis of its safe-window range.
inline DefectData defect(const TruncatedMatrix& v, double rank_tol = 1e-8, double iso_tol = 1e-10) {
  require_window_isometry(v, iso_tol);
  TruncatedMatrix proj = TruncatedMatrix::identity(v.basis) - v * v.adjoint();

  Eigen::MatrixXcd restricted = Eigen::MatrixXcd::Zero(proj.size(), proj.size());
  auto safe = proj.safe_indices();
  for (int r : safe)
    for (int c : safe) restricted(r, c) = proj.mat(r, c);

  DefectData d;
  d.projection = proj;
  d.basis = orthonormal_range(restricted, rank_tol);
  return d;
}

struct KuProjection {
  Eigen::MatrixXcd projection;  // eigen-rounded limit, safe window
  Eigen::MatrixXcd basis;       // orthonormal K_u basis
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Stationary limit of P_n = V^n V*^n on the safe window, rounded at
/// eigenvalue 1/2. Exact after <= safe-cap steps for graded shifts; reported
/// inconclusive (converged = false) past n_max otherwise.
inline KuProjection ku_projection(const TruncatedMatrix& v, int n_max = 0, double tol = 1e-12,
                                  double rank_tol = 1e-8) {
  require_window_isometry(v);
  if (n_max <= 0) n_max = v.basis->cap() + 1;
  auto safe = v.safe_indices();

  auto on_safe = [&](const Eigen::MatrixXcd& m) {
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(m.rows(), m.cols());
    for (int a : safe)
      for (int b : safe) r(a, b) = m(a, b);
    return r;
  };

  KuProjection out;
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(v.size(), v.size());
  Eigen::MatrixXcd prev_safe = on_safe(p);
  for (int n = 1; n <= n_max; ++n) {
    p = v.mat * p * v.mat.adjoint();
    Eigen::MatrixXcd cur = on_safe(p);
    out.iterations = n;
    out.residual = (cur - prev_safe).cwiseAbs().maxCoeff();
    prev_safe = cur;
    if (out.residual < tol) {
      out.converged = true;
      break;
    }
  }

  Eigen::MatrixXcd sym = (prev_safe + prev_safe.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym);
  Eigen::MatrixXcd proj = Eigen::MatrixXcd::Zero(v.size(), v.size());
  Eigen::MatrixXcd vecs(v.size(), 0);
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) > 0.5) {
      proj += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
      vecs.conservativeResize(Eigen::NoChange, vecs.cols() + 1);
      vecs.col(vecs.cols() - 1) = es.eigenvectors().col(k);
    }
  }
  out.projection = proj;
  out.basis = orthonormal_range(vecs, rank_tol);
  return out;
}

struct LambdaSplit {
  DefectData dv, d1, d2;
  Eigen::MatrixXcd lambda;  // (f1+f2) x fV, isometric
  double assembly_residual = 0.0;
  double isometry_residual = 0.0;
  double key1_residual = 0.0;
  double key2_residual = 0.0;
  double aux6_residual = 0.0;
  double span_residual_left = 0.0;   // {D1 V2* h (+) D2 h} spans D1 (+) D2
  double span_residual_right = 0.0;  // {D1 h (+) D2 V1* h} spans D1 (+) D2
};

struct LambdaOptions {
  double tol = 1e-10;
  double rank_tol = 1e-8;
  int random_vectors = 200;
  std::uint64_t seed = 20260809;
};

namespace detail {

inline Eigen::VectorXcd random_safe_vector(const TruncatedMatrix& any, const std::vector<int>& safe,
                                           std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd h = Eigen::VectorXcd::Zero(any.size());
  for (int i : safe) h(i) = cplx(g(rng), g(rng));
  h /= h.norm();
  return h;
}

/// Best isometry L (rows x rank(X)) with L X ~= Y, by orthogonal Procrustes.
inline Eigen::MatrixXcd procrustes(const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y) {
  if (x.rows() == 0 || y.rows() == 0) return Eigen::MatrixXcd::Zero(y.rows(), x.rows());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(y * x.adjoint(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

inline double max_abs_on(const Eigen::MatrixXcd& m, const std::vector<int>& rows,
                         const std::vector<int>& cols) {
  double r = 0.0;
  for (int i : rows)
    for (int j : cols) r = std::max(r, std::abs(m(i, j)));
  return r;
}

}  // namespace detail

/// The Lemma-1 machinery: assembles the unitary Lambda : D_{V*} -> D1 (+) D2
/// from the column maps h -> (D1 h, D2 V1* h) and re-verifies the two defect
/// identities, the norm identity and both span equalities on the safe window.
inline LambdaSplit lambda_split(const TruncatedMatrix& v1, const TruncatedMatrix& v2,
                                const Phase& q, const LambdaOptions& opt = {}) {
  v1.require_same_basis(v2);
  TruncatedMatrix v = v1 * v2;
  {
    TruncatedMatrix rhs = (v2 * v1).scaled(q.value());
    auto qc = equal_on_window(v, rhs, opt.tol);
    if (!qc.pass)
      fail(ErrorCode::precondition,
           "pair is not q-commutative on the window (deviation " + std::to_string(qc.deviation) + ")");
  }

  LambdaSplit out;
  out.dv = defect(v, opt.rank_tol, opt.tol);
  out.d1 = defect(v1, opt.rank_tol, opt.tol);
  out.d2 = defect(v2, opt.rank_tol, opt.tol);

  const int fv = out.dv.rank(), f1 = out.d1.rank(), f2 = out.d2.rank();
  if (fv > f1 + f2)
    fail(ErrorCode::rank_mismatch, "defect ranks cannot split: dim D_V* = " + std::to_string(fv) +
                                       " exceeds " + std::to_string(f1) + " + " + std::to_string(f2));

  // sample the two column maps over every safe basis vector
  auto safe = v.safe_indices();
  const int n = int(safe.size());
  Eigen::MatrixXcd xs(fv, n), ys(f1 + f2, n), ys_left(f1 + f2, n);
  for (int c = 0; c < n; ++c) {
    Eigen::VectorXcd h = Eigen::VectorXcd::Unit(v.size(), safe[c]);
    Eigen::VectorXcd dvh = out.dv.projection.mat * h;
    xs.col(c) = out.dv.basis.adjoint() * dvh;
    ys.col(c).head(f1) = out.d1.basis.adjoint() * (out.d1.projection.mat * h);
    ys.col(c).tail(f2) = out.d2.basis.adjoint() * (out.d2.projection.mat * (v1.mat.adjoint() * h));
    ys_left.col(c).head(f1) = out.d1.basis.adjoint() * (out.d1.projection.mat * (v2.mat.adjoint() * h));
    ys_left.col(c).tail(f2) = out.d2.basis.adjoint() * (out.d2.projection.mat * h);
  }

  out.lambda = detail::procrustes(xs, ys);
  out.assembly_residual =
      n == 0 || f1 + f2 == 0 ? 0.0 : (out.lambda * xs - ys).cwiseAbs().maxCoeff();
  out.isometry_residual =
      fv == 0 ? 0.0
              : (out.lambda.adjoint() * out.lambda - Eigen::MatrixXcd::Identity(fv, fv)).cwiseAbs().maxCoeff();

  // key1 / key2: D_{V*}^2 = D1^2 + V1 D2^2 V1* = V2 D1^2 V2* + D2^2
  TruncatedMatrix lhs = out.dv.projection;
  TruncatedMatrix k1 = out.d1.projection + v1 * out.d2.projection * v1.adjoint();
  TruncatedMatrix k2 = v2 * out.d1.projection * v2.adjoint() + out.d2.projection;
  auto deep = v.basis->safe_indices(2 * v.band + v1.band + v2.band);
  out.key1_residual = detail::max_abs_on(lhs.mat - k1.mat, deep, deep);
  out.key2_residual = detail::max_abs_on(lhs.mat - k2.mat, deep, deep);

  // aux6 over random safe vectors
  std::mt19937_64 rng(opt.seed);
  auto deep_cols = v.basis->safe_indices(2 * v.band);
  for (int t = 0; t < opt.random_vectors; ++t) {
    Eigen::VectorXcd h = detail::random_safe_vector(v, deep_cols, rng);
    double nv = (out.dv.projection.mat * h).squaredNorm();
    double a = (out.d1.projection.mat * (v2.mat.adjoint() * h)).squaredNorm() +
               (out.d2.projection.mat * h).squaredNorm();
    double b = (out.d1.projection.mat * h).squaredNorm() +
               (out.d2.projection.mat * (v1.mat.adjoint() * h)).squaredNorm();
    out.aux6_residual = std::max({out.aux6_residual, std::abs(nv - a), std::abs(nv - b)});
  }

  // spaceequality: both stacks span D1 (+) D2, tested against defect basis
  // vectors living well inside the window
  auto span_residual = [&](const Eigen::MatrixXcd& stack) {
    Eigen::MatrixXcd qbasis = orthonormal_range(stack, opt.rank_tol);
    double r = 0.0;
    const int margin_cap = v.basis->cap() - 3 * std::max({v.band, v1.band, v2.band, 1});
    for (int k = 0; k < f1 + f2; ++k) {
      const Eigen::MatrixXcd& src = k < f1 ? out.d1.basis : out.d2.basis;
      int col = k < f1 ? k : k - f1;
      int top = 0;
      src.col(col).cwiseAbs().maxCoeff(&top);
      if (v.basis->key(top).degree() >= margin_cap) continue;
      Eigen::VectorXcd e = Eigen::VectorXcd::Unit(f1 + f2, k);
      r = std::max(r, (e - qbasis * (qbasis.adjoint() * e)).norm());
    }
    return r;
  };
  out.span_residual_left = span_residual(ys_left);
  out.span_residual_right = span_residual(ys);

  return out;
}

struct WoldParts {
  Eigen::MatrixXcd ku_proj;
  Eigen::MatrixXcd ku_basis;
  Eigen::MatrixXcd shift_multiplicity_basis;  // basis of D_{V*}
  Eigen::MatrixXcd unitary_part;              // V restricted to K_u
  Eigen::MatrixXcd wave_map;                  // rows: degree-major (x) defect, then K_u
  WindowBasisPtr model_basis;                 // row labels of wave_map
  int iterations = 0;
  double residual = 0.0;
  bool converged = true;
  double isometry_residual = 0.0;
  double intertwining_residual = 0.0;
};

/// Wold decomposition: wave map h -> D_{V*}(I - z V*)^{-1} h (+) lim V^n V*^n h,
/// realized columnwise by the terminating Neumann series on the window.
inline WoldParts wold_decompose(const TruncatedMatrix& v, int n_max = 0, double tol = 1e-12,
                                double rank_tol = 1e-8) {
  WoldParts out;
  DefectData d = defect(v, rank_tol);
  KuProjection ku = ku_projection(v, n_max, tol, rank_tol);
  out.ku_proj = ku.projection;
  out.ku_basis = ku.basis;
  out.shift_multiplicity_basis = d.basis;
  out.iterations = ku.iterations;
  out.residual = ku.residual;
  out.converged = ku.converged;

  const int f = d.rank();
  const int m = int(ku.basis.cols());
  const int cap = v.basis->cap();
  out.unitary_part = ku.basis.adjoint() * v.mat * ku.basis;

  SpaceSignature model_sig = f > 0 ? SpaceSignature(1, f, m) : SpaceSignature(0, 0, m);
  out.model_basis = WindowBasis::make(model_sig, f > 0 ? cap : 1);

  const int rows = out.model_basis->size();
  out.wave_map = Eigen::MatrixXcd::Zero(rows, v.size());
  Eigen::MatrixXcd power = Eigen::MatrixXcd::Identity(v.size(), v.size());
  for (int n = 0; n < (f > 0 ? cap : 0); ++n) {
    Eigen::MatrixXcd block = d.basis.adjoint() * d.projection.mat * power;  // f x window
    for (int ff = 0; ff < f; ++ff) {
      auto row = out.model_basis->index(BasisKey::hardy(GradedIndex({n}), ff));
      out.wave_map.row(*row) = block.row(ff);
    }
    power = v.mat.adjoint() * power;
  }
  for (int k = 0; k < m; ++k) {
    auto row = out.model_basis->index(BasisKey::ku_slot(k));
    out.wave_map.row(*row) = ku.basis.col(k).adjoint();
  }

  // model operator M_z (x) I (+) W and the intertwining / isometry residuals
  Eigen::MatrixXcd model = Eigen::MatrixXcd::Zero(rows, rows);
  for (int n = 0; n + 1 < cap && f > 0; ++n)
    for (int ff = 0; ff < f; ++ff) {
      auto from = out.model_basis->index(BasisKey::hardy(GradedIndex({n}), ff));
      auto to = out.model_basis->index(BasisKey::hardy(GradedIndex({n + 1}), ff));
      model(*to, *from) = 1.0;
    }
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      auto ra = out.model_basis->index(BasisKey::ku_slot(a));
      auto rb = out.model_basis->index(BasisKey::ku_slot(b));
      model(*ra, *rb) = out.unitary_part(a, b);
    }

  auto safe = v.safe_indices(v.band);  // one extra band for the composed maps
  Eigen::MatrixXcd inter = out.wave_map * v.mat - model * out.wave_map;
  Eigen::MatrixXcd gram = out.wave_map.adjoint() * out.wave_map;
  for (int j : safe) {
    out.intertwining_residual = std::max(out.intertwining_residual, inter.col(j).cwiseAbs().maxCoeff());
    for (int i : safe) {
      cplx want = i == j ? cplx(1, 0) : cplx(0, 0);
      out.isometry_residual = std::max(out.isometry_residual, std::abs(gram(i, j) - want));
    }
  }
  return out;
}

}  // namespace qwold
