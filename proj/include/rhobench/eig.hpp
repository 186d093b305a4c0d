#pragma once

#include <Eigen/Dense>
#include <functional>

namespace rhobench {

// Lowest eigenpairs of a dense Hermitian matrix (LAPACK zheevd). Eigenvalues
// ascending, eigenvectors orthonormal columns.
struct DenseEig {
  Eigen::MatrixXcd vectors;
  Eigen::VectorXd values;
};
DenseEig dense_lowest_eigenpairs(const Eigen::MatrixXcd& h, int n_bands);

// Matrix-free blocked LOBPCG for large plane-wave problems (single-atom
// reference cells). Deterministic: fixed lowest-kinetic start, fixed
// iteration schedule, no randomness.
using ApplyFn =
    std::function<void(const Eigen::MatrixXcd& x, Eigen::MatrixXcd& hx)>;

struct IterativeOptions {
  double tol = 1e-9;   // max residual 2-norm over the first n_bands columns
  int max_iter = 400;
  int block_extra = 3;  // guard vectors beyond n_bands
};

struct IterativeEig {
  Eigen::MatrixXcd vectors;  // n x n_bands
  Eigen::VectorXd values;    // ascending
  Eigen::MatrixXcd block;    // full Ritz block (n x m) for warm restarts
  double max_residual = 0.0;
  int iterations = 0;
};

IterativeEig lobpcg_lowest(const ApplyFn& apply_h,
                           const Eigen::VectorXd& kinetic_diag, int n_bands,
                           const Eigen::MatrixXcd* warm_start,
                           const IterativeOptions& options);

}  // namespace rhobench
