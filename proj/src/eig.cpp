#include "rhobench/eig.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>

#include "rhobench/errors.hpp"

namespace rhobench {

DenseEig dense_lowest_eigenpairs(const Eigen::MatrixXcd& h, int n_bands) {
  const int n = static_cast<int>(h.rows());
  if (h.cols() != n) throw Error("shape", "hamiltonian must be square");
  if (n_bands < 1 || n_bands > n)
    throw Error("domain", "n_bands must be in [1, dim]");
  Eigen::MatrixXcd a = h;  // zheevd overwrites with eigenvectors
  Eigen::VectorXd w(n);
  const int info = LAPACKE_zheevd(
      LAPACK_COL_MAJOR, 'V', 'L', n,
      reinterpret_cast<lapack_complex_double*>(a.data()), n, w.data());
  if (info != 0)
    throw Error("numerical",
                "dense eigensolver failed (zheevd info=" +
                    std::to_string(info) + ", dim=" + std::to_string(n) + ")");
  DenseEig out;
  out.vectors = a.leftCols(n_bands);
  out.values = w.head(n_bands);
  return out;
}

namespace {

// Teter-Payne-Allan kinetic preconditioner factor; x = kin/kin_ref.
double tpa_factor(double x) {
  const double p = 27.0 + x * (18.0 + x * (12.0 + x * 8.0));
  return p / (p + 16.0 * x * x * x * x);
}

// Orthonormalizes the columns of m in place (thin QR); returns the rank
// actually kept. Columns whose norm collapses under projection are dropped.
int orthonormalize(Eigen::MatrixXcd& m, double drop_tol = 1e-10) {
  if (m.cols() == 0) return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(m);
  qr.setThreshold(drop_tol);
  const int rank = static_cast<int>(qr.rank());
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(
                                               m.rows(), rank);
  m = q;
  return rank;
}

}  // namespace

IterativeEig lobpcg_lowest(const ApplyFn& apply_h,
                           const Eigen::VectorXd& kinetic_diag, int n_bands,
                           const Eigen::MatrixXcd* warm_start,
                           const IterativeOptions& options) {
  const std::int64_t n = kinetic_diag.size();
  const int m = std::min<std::int64_t>(
      n, n_bands + std::max(options.block_extra, 2));
  if (n_bands < 1 || n_bands > n)
    throw Error("domain", "n_bands must be in [1, dim]");

  // Start block: warm Ritz block when provided, otherwise unit vectors on
  // the m lowest-kinetic plane waves (basis order breaks ties).
  Eigen::MatrixXcd x;
  if (warm_start && warm_start->rows() == n && warm_start->cols() >= m) {
    x = warm_start->leftCols(m);
  } else {
    std::vector<std::int64_t> order(n);
    for (std::int64_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::int64_t a, std::int64_t b) {
                       return kinetic_diag[a] < kinetic_diag[b];
                     });
    x = Eigen::MatrixXcd::Zero(n, m);
    for (int k = 0; k < m; ++k) x(order[k], k) = 1.0;
  }
  orthonormalize(x);

  Eigen::MatrixXcd hx(n, x.cols());
  apply_h(x, hx);

  Eigen::MatrixXcd p(n, 0), hp(n, 0);
  Eigen::VectorXd theta;
  double max_resid = 0.0;
  int iter = 0;

  for (iter = 1; iter <= options.max_iter; ++iter) {
    // Ritz step inside span(x).
    Eigen::MatrixXcd xhx = x.adjoint() * hx;
    xhx = 0.5 * (xhx + xhx.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(xhx);
    theta = es.eigenvalues();
    x = (x * es.eigenvectors()).eval();
    hx = (hx * es.eigenvectors()).eval();

    Eigen::MatrixXcd r = hx - x * theta.asDiagonal();
    max_resid = 0.0;
    for (int k = 0; k < n_bands; ++k)
      max_resid = std::max(max_resid, r.col(k).norm());
    if (max_resid < options.tol) break;

    // Preconditioned residuals.
    Eigen::MatrixXcd w = r;
    for (int k = 0; k < w.cols(); ++k) {
      double kin_ref = 0.0;
      for (std::int64_t i = 0; i < n; ++i)
        kin_ref += kinetic_diag[i] * std::norm(x(i, k));
      kin_ref = std::max(kin_ref, 1e-12);
      for (std::int64_t i = 0; i < n; ++i)
        w(i, k) *= tpa_factor(kinetic_diag[i] / kin_ref);
    }

    // Orthogonalize w against [x p] and itself.
    w -= x * (x.adjoint() * w).eval();
    if (p.cols() > 0) w -= p * (p.adjoint() * w).eval();
    if (orthonormalize(w) == 0)
      throw Error("numerical",
                  "iterative eigensolver stalled (empty search block) after " +
                      std::to_string(iter) + " iterations");
    Eigen::MatrixXcd hw(n, w.cols());
    apply_h(w, hw);

    // Rayleigh-Ritz over S = [x p w].
    const int bx = static_cast<int>(x.cols());
    const int bp = static_cast<int>(p.cols());
    const int bw = static_cast<int>(w.cols());
    Eigen::MatrixXcd s(n, bx + bp + bw), hs(n, bx + bp + bw);
    s.leftCols(bx) = x;
    hs.leftCols(bx) = hx;
    if (bp > 0) {
      s.middleCols(bx, bp) = p;
      hs.middleCols(bx, bp) = hp;
    }
    s.rightCols(bw) = w;
    hs.rightCols(bw) = hw;
    Eigen::MatrixXcd shs = s.adjoint() * hs;
    shs = 0.5 * (shs + shs.adjoint().eval());
    // The blocks are orthonormal but drift; solve the generalized problem
    // via explicit orthonormalization of the overlap.
    Eigen::MatrixXcd sts = s.adjoint() * s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> overlap(sts);
    const double keep_tol = 1e-10;
    int kept = 0;
    for (int i = 0; i < overlap.eigenvalues().size(); ++i)
      if (overlap.eigenvalues()[i] > keep_tol) ++kept;
    Eigen::MatrixXcd basis =
        overlap.eigenvectors().rightCols(kept) *
        overlap.eigenvalues().tail(kept).cwiseSqrt().cwiseInverse().asDiagonal();
    Eigen::MatrixXcd reduced = basis.adjoint() * shs * basis;
    reduced = 0.5 * (reduced + reduced.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ritz(reduced);
    const int take = std::min<int>(m, kept);
    Eigen::MatrixXcd y = basis * ritz.eigenvectors().leftCols(take);

    Eigen::MatrixXcd x_new = s * y;
    Eigen::MatrixXcd hx_new = hs * y;

    // New conjugate directions: the p/w part of the update, kept H-tracked
    // through the same linear map.
    Eigen::MatrixXcd y_tail = y.bottomRows(bp + bw);
    Eigen::MatrixXcd p_cand = s.rightCols(bp + bw) * y_tail;
    Eigen::MatrixXcd hp_cand = hs.rightCols(bp + bw) * y_tail;
    // Orthonormalize p_cand with a transform applied to hp_cand as well.
    Eigen::HouseholderQR<Eigen::MatrixXcd> pqr(p_cand);
    Eigen::MatrixXcd rfac = pqr.matrixQR()
                                .topRows(p_cand.cols())
                                .triangularView<Eigen::Upper>()
                                .toDenseMatrix();
    double min_diag = 1e300, max_diag = 0.0;
    for (int i = 0; i < rfac.rows(); ++i) {
      min_diag = std::min(min_diag, std::abs(rfac(i, i)));
      max_diag = std::max(max_diag, std::abs(rfac(i, i)));
    }
    if (min_diag > 1e-8 * std::max(max_diag, 1e-300)) {
      p = pqr.householderQ() *
          Eigen::MatrixXcd::Identity(n, p_cand.cols());
      hp = rfac.triangularView<Eigen::Upper>()
               .transpose()
               .solve(hp_cand.transpose())
               .transpose();
      // hp = hp_cand * R^{-1}; computed via R^{-T} on the transposed system.
    } else {
      p.resize(n, 0);
      hp.resize(n, 0);
    }

    x = x_new;
    hx = hx_new;
    orthonormalize(x);
    apply_h(x, hx);  // refresh exactly once per iteration to curb drift
  }

  if (max_resid >= options.tol)
    throw Error("numerical",
                "iterative eigensolver did not reach tolerance " +
                    std::to_string(options.tol) + " in " +
                    std::to_string(options.max_iter) +
                    " iterations (residual " + std::to_string(max_resid) +
                    ")");

  IterativeEig out;
  out.vectors = x.leftCols(n_bands);
  out.values = theta.head(n_bands);
  out.block = x;
  out.max_residual = max_resid;
  out.iterations = iter;
  return out;
}

}  // namespace rhobench
