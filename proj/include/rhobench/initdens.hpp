#pragma once
// Density initialization: atomic radial tables built from single-atom solver
// runs, the atomic-superposition (ACS) baseline field, and ingestion of
// externally predicted densities.

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rhobench/core.hpp"
#include "rhobench/solver.hpp"

namespace rhobench {

// Monotone cubic (Fritsch-Carlson) interpolant of a tabulated radial
// profile; zero beyond the last knot. Knots ascend from r = 0 and values
// are nonnegative, so the interpolant never overshoots below zero.
class RadialProfile {
 public:
  RadialProfile() = default;
  RadialProfile(std::vector<double> r, std::vector<double> rho);

  double operator()(double r) const;
  const std::vector<double>& radii() const { return r_; }
  const std::vector<double>& values() const { return rho_; }
  double outer_radius() const { return r_.empty() ? 0.0 : r_.back(); }
  // 4*pi * integral of rho r^2 dr, trapezoidal on the knots — the quadrature
  // convention every normalization statement about tables refers to.
  double charge() const;

 private:
  std::vector<double> r_, rho_, slope_;
};

struct TableParams {
  double cell_side = 20.0;  // cubic cell edge for the single-atom run (bohr)
  int n_points = 2000;
  double outer_radius = 10.0;
  double taper_start = 7.0;  // cosine taper to zero over [start, end]
  double taper_end = 9.5;
};

class AtomicDensityTable {
 public:
  AtomicDensityTable() = default;
  explicit AtomicDensityTable(std::map<int, RadialProfile> profiles);

  bool has(int species) const;
  const RadialProfile& profile(int species) const;  // table-miss when absent
  const std::map<int, RadialProfile>& profiles() const { return profiles_; }

 private:
  std::map<int, RadialProfile> profiles_;
};

// Spherical average of a periodic field about `center`, one value per
// radius, via the reciprocal-space shell sum (exact for the grid's DFT
// representation of the field).
std::vector<double> spherical_average(const DensityField& field,
                                      const Eigen::Vector3d& center,
                                      const std::vector<double>& radii);

// Single-atom SCF in a cubic cell, spherically averaged about the atom,
// tapered to zero at the table edge, rescaled so charge() equals z_val
// exactly. Identical species parameters give bit-identical tables.
RadialProfile build_atomic_table(const Species& species,
                                 const SolverParams& params,
                                 const TableParams& table = {});

// rho0(r) = sum over atoms and periodic images of rho_Z(|r - R|),
// renormalized to the electron count. Atom order and the normalization sum
// are canonicalized so relabeling atoms reproduces the field bit-for-bit.
DensityField acs_density(const Structure& s, const AtomicDensityTable& table,
                         const Grid& grid);

// Clamp values below the 1e-10 floor, renormalize to the electron count.
// The clamp/rescale fixed-point loop makes a second application the
// identity (bitwise).
DensityField ingest_predicted_density(const DensityField& raw,
                                      const Structure& s,
                                      const SolverParams& params);

// Per-species CSV files (header `r_bohr,rho`) plus an index.json mapping
// species id to file name.
void save_atomic_tables(const std::string& dir,
                        const AtomicDensityTable& table);
AtomicDensityTable load_atomic_tables(const std::string& dir);

}  // namespace rhobench
