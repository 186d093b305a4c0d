#pragma once
// Bit-exact density file codecs and the axis-sum visualization projection.
//
// RHO1 (reciprocal): little-endian `RHO1`, u32 dims x3, f64 cell x9
// (row-major, rows are lattice vectors), f64 ecutrho, u64 count, then
// records (i32 h, i32 k, i32 l, f64 re, f64 im) sorted by (kinetic, h, k, l).
// Coefficients follow the fft_forward convention: rho(G) = (1/J) sum_r
// rho(r) e^{-iG.r}. Records cover the full cutoff sphere (both G and -G).
//
// RHR1 (real space): little-endian `RHR1`, u32 dims x3, f64 cell x9, then
// J f64 values in the canonical first-axis-fastest layout.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhobench/core.hpp"

namespace rhobench {

struct ReciprocalRecord {
  int h = 0, k = 0, l = 0;
  double re = 0.0, im = 0.0;
};

// Exact coefficient list carried by fields that came from an RHO1 read, so
// rewriting the same field reproduces the file byte-for-byte (an FFT round
// trip alone is not bitwise stable).
struct ReciprocalPayload {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Matrix3d cell = Eigen::Matrix3d::Zero();
  double ecutrho = 0.0;
  std::vector<ReciprocalRecord> records;
};

void write_reciprocal(const DensityField& field, const Eigen::Matrix3d& cell,
                      double ecutrho, const std::string& path);

// Grid must match the file header (dims exactly, cell to 1e-12). The result
// is band-limited to the header cutoff and carries the exact records as its
// payload.
DensityField read_reciprocal(const std::string& path, const Grid& grid);

void write_realspace(const DensityField& field, const std::string& path);
DensityField read_realspace(const std::string& path);

// Field regridded to an n x n x n cube (n = max dim, trilinear, periodic)
// and summed along the third axis. data[i1*n + i2]; linear in the field.
struct Projection {
  int n = 0;
  std::vector<double> data;
};

Projection project_density(const DensityField& field);

// CSV matrix (one row per first-axis index) and an 8-bit grayscale PGM,
// min-max normalized.
void save_projection_csv(const Projection& proj, const std::string& path);
void save_projection_pgm(const Projection& proj, const std::string& path);

}  // namespace rhobench
