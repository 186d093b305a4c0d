#pragma once

// Independent reference implementations used only by tests. Each oracle
// deliberately takes a different route than the library (matrix inverse vs
// cross products, naive DFT vs FFT, Ewald split vs reciprocal truncation,
// QR vs normal equations) so agreement is evidence, not tautology.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "rhobench/core.hpp"

namespace oracle {

inline Eigen::Matrix3d inverse_transpose(const Eigen::Matrix3d& cell) {
  return cell.inverse().transpose();
}

// Number of integer triples with 0.5*|2*pi*B^T m|^2 <= cutoff, enumerated
// over a generous fixed range.
inline int count_gvectors_brute(const Eigen::Matrix3d& cell, double cutoff,
                                int range) {
  const Eigen::Matrix3d bt = cell.inverse();  // B^T = cell^{-1}
  int count = 0;
  for (int h = -range; h <= range; ++h)
    for (int k = -range; k <= range; ++k)
      for (int l = -range; l <= range; ++l) {
        const Eigen::Vector3d g =
            2.0 * M_PI * (bt * Eigen::Vector3d(h, k, l));
        if (0.5 * g.squaredNorm() <= cutoff * (1.0 + 1e-12)) ++count;
      }
  return count;
}

// O(J^2) forward DFT with the (1/J) sum exp(-iG.r) convention. Miller wrap
// per axis: idx <= n/2 ? idx : idx-n (written out independently here).
inline std::vector<std::complex<double>> dft_forward_naive(
    const rhobench::Grid& grid, const std::vector<double>& values) {
  const int n1 = grid.dims[0], n2 = grid.dims[1], n3 = grid.dims[2];
  const std::int64_t j_total = grid.size();
  std::vector<std::complex<double>> out(j_total);
  std::int64_t slot = 0;
  for (int s3 = 0; s3 < n3; ++s3)
    for (int s2 = 0; s2 < n2; ++s2)
      for (int s1 = 0; s1 < n1; ++s1, ++slot) {
        const int m1 = s1 <= n1 / 2 ? s1 : s1 - n1;
        const int m2 = s2 <= n2 / 2 ? s2 : s2 - n2;
        const int m3 = s3 <= n3 / 2 ? s3 : s3 - n3;
        std::complex<double> acc(0.0, 0.0);
        std::int64_t r = 0;
        for (int i3 = 0; i3 < n3; ++i3)
          for (int i2 = 0; i2 < n2; ++i2)
            for (int i1 = 0; i1 < n1; ++i1, ++r) {
              const double phase =
                  -2.0 * M_PI *
                  (static_cast<double>(m1) * i1 / n1 +
                   static_cast<double>(m2) * i2 / n2 +
                   static_cast<double>(m3) * i3 / n3);
              acc += values[r] *
                     std::complex<double>(std::cos(phase), std::sin(phase));
            }
        out[slot] = acc / static_cast<double>(j_total);
      }
  // The traversal above fills slots in layout order (first axis fastest),
  // matching Grid::index.
  return out;
}

// All |b - a + L n| <= radius over a fixed image block, no reduction.
inline std::vector<double> image_distances_brute(const Eigen::Matrix3d& cell,
                                                 const Eigen::Vector3d& a,
                                                 const Eigen::Vector3d& b,
                                                 double radius,
                                                 int depth = 2) {
  std::vector<double> out;
  for (int c1 = -depth; c1 <= depth; ++c1)
    for (int c2 = -depth; c2 <= depth; ++c2)
      for (int c3 = -depth; c3 <= depth; ++c3) {
        const Eigen::Vector3d v =
            b - a + cell.transpose() * Eigen::Vector3d(c1, c2, c3);
        const double r = v.norm();
        if (r <= radius * (1.0 + 1e-12)) out.push_back(r);
      }
  std::sort(out.begin(), out.end());
  return out;
}

// Hartree self-energy 0.5 * sum_{G!=0} 4*pi*|rho(G)|^2 * Omega / |G|^2 via
// the naive DFT and the matrix-inverse reciprocal lattice.
inline double hartree_energy_naive(const rhobench::Grid& grid,
                                   const std::vector<double>& values) {
  const auto coeffs = dft_forward_naive(grid, values);
  const Eigen::Matrix3d bt = grid.cell.inverse();
  const double omega = grid.cell.determinant();
  const int n1 = grid.dims[0], n2 = grid.dims[1], n3 = grid.dims[2];
  double energy = 0.0;
  std::int64_t slot = 0;
  for (int s3 = 0; s3 < n3; ++s3)
    for (int s2 = 0; s2 < n2; ++s2)
      for (int s1 = 0; s1 < n1; ++s1, ++slot) {
        if (s1 == 0 && s2 == 0 && s3 == 0) continue;
        const int m1 = s1 <= n1 / 2 ? s1 : s1 - n1;
        const int m2 = s2 <= n2 / 2 ? s2 : s2 - n2;
        const int m3 = s3 <= n3 / 2 ? s3 : s3 - n3;
        const Eigen::Vector3d g =
            2.0 * M_PI * (bt * Eigen::Vector3d(m1, m2, m3));
        energy += 0.5 * 4.0 * M_PI * std::norm(coeffs[slot]) * omega /
                  g.squaredNorm();
      }
  return energy;
}

// Zero-mean periodic potential of a normalized Gaussian charge (z, sigma)
// at R, evaluated at r, via a two-width Ewald split: the sigma-eta erf
// difference converges absolutely in real space, the eta Gaussian converges
// in reciprocal space, and the constant restores the removed G=0 mean.
inline double gaussian_vloc_periodic(const Eigen::Matrix3d& cell,
                                     const Eigen::Vector3d& atom_pos,
                                     double z, double sigma,
                                     const Eigen::Vector3d& r) {
  const double omega = cell.determinant();
  const double eta = 0.5 * sigma;
  const Eigen::Vector3d delta = r - atom_pos;
  const double sqrt2 = std::sqrt(2.0);

  // Real-space lattice sum of -z*(erf(d/(sqrt2*sigma)) - erf(d/(sqrt2*eta)))/d.
  const double rad = 9.0 * sigma + delta.norm();
  const Eigen::Matrix3d recip = cell.inverse().transpose();
  int depth[3];
  for (int i = 0; i < 3; ++i)
    depth[i] = static_cast<int>(std::ceil(rad * recip.row(i).norm())) + 1;
  double real_sum = 0.0;
  for (int c1 = -depth[0]; c1 <= depth[0]; ++c1)
    for (int c2 = -depth[1]; c2 <= depth[1]; ++c2)
      for (int c3 = -depth[2]; c3 <= depth[2]; ++c3) {
        const Eigen::Vector3d v =
            delta + cell.transpose() * Eigen::Vector3d(c1, c2, c3);
        const double d = v.norm();
        if (d > rad) continue;
        if (d < 1e-12) {
          // erf(x)/x -> 2/sqrt(pi) * 1/(sqrt2*s) as x->0
          real_sum += -z * std::sqrt(2.0 / M_PI) * (1.0 / sigma - 1.0 / eta);
        } else {
          real_sum += -z *
                      (std::erf(d / (sqrt2 * sigma)) -
                       std::erf(d / (sqrt2 * eta))) /
                      d;
        }
      }
  // Remove the mean of the real-space sum (its G=0 component).
  real_sum -= 2.0 * M_PI * z * (sigma * sigma - eta * eta) / omega;

  // Reciprocal sum with the narrow width eta.
  const double gcut = 9.0 / eta;
  int mmax[3];
  for (int i = 0; i < 3; ++i)
    mmax[i] = static_cast<int>(std::ceil(gcut * cell.row(i).norm() /
                                         (2.0 * M_PI))) +
              1;
  const Eigen::Matrix3d bt = cell.inverse();
  double recip_sum = 0.0;
  for (int h = -mmax[0]; h <= mmax[0]; ++h)
    for (int k = -mmax[1]; k <= mmax[1]; ++k)
      for (int l = -mmax[2]; l <= mmax[2]; ++l) {
        if (h == 0 && k == 0 && l == 0) continue;
        const Eigen::Vector3d g =
            2.0 * M_PI * (bt * Eigen::Vector3d(h, k, l));
        const double g2 = g.squaredNorm();
        recip_sum += -(4.0 * M_PI * z / omega) *
                     std::exp(-g2 * eta * eta / 2.0) / g2 *
                     std::cos(g.dot(delta));
      }

  return real_sum + recip_sum;
}

// Sorted kinetic levels 0.5*|G|^2 of an empty cubic lattice.
inline std::vector<double> empty_lattice_levels(double a, int count) {
  std::vector<double> kin;
  const double unit = 2.0 * M_PI / a;
  for (int h = -8; h <= 8; ++h)
    for (int k = -8; k <= 8; ++k)
      for (int l = -8; l <= 8; ++l)
        kin.push_back(0.5 * unit * unit * (h * h + k * k + l * l));
  std::sort(kin.begin(), kin.end());
  kin.resize(count);
  return kin;
}

// Ridge solution via QR on the penalty-augmented system. When
// penalize_last is false the final coefficient (bias) carries no penalty.
inline Eigen::VectorXd ridge_qr(const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& y, double lambda,
                                bool penalize_last) {
  const int dim = static_cast<int>(x.cols());
  const int penalized = penalize_last ? dim : dim - 1;
  Eigen::MatrixXd aug(x.rows() + penalized, dim);
  aug.setZero();
  aug.topRows(x.rows()) = x;
  for (int i = 0; i < penalized; ++i)
    aug(x.rows() + i, i) = std::sqrt(lambda);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(aug.rows());
  rhs.head(x.rows()) = y;
  return aug.colPivHouseholderQr().solve(rhs);
}

struct Summary {
  int n = 0;
  int n_plus = 0;
  double pct_positive = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double min = 0.0;
};

// Independent single-pass stats; median is the lower-middle order statistic.
inline Summary summarize(std::vector<double> v) {
  Summary s;
  s.n = static_cast<int>(v.size());
  if (v.empty()) return s;
  double total = 0.0;
  s.max = v[0];
  s.min = v[0];
  for (double x : v) {
    total += x;
    if (x > 0.0) ++s.n_plus;
    s.max = std::max(s.max, x);
    s.min = std::min(s.min, x);
  }
  s.mean = total / s.n;
  s.pct_positive = 100.0 * s.n_plus / s.n;
  std::sort(v.begin(), v.end());
  s.median = v[(s.n - 1) / 2];
  return s;
}

}  // namespace oracle
