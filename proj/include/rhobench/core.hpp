#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "rhobench/errors.hpp"

namespace rhobench {

// All quantities are in Hartree atomic units (bohr, hartree) throughout.

struct Species {
  int id = 0;
  double z_val = 0.0;  // valence charge (electrons)
  double sigma = 0.0;  // Gaussian pseudocharge width (bohr)
};

class SpeciesTable {
 public:
  SpeciesTable() = default;
  explicit SpeciesTable(std::vector<Species> entries);

  bool has(int id) const;
  const Species& get(int id) const;
  const std::vector<Species>& entries() const { return entries_; }

 private:
  std::vector<Species> entries_;  // sorted by id, ids unique
};

struct Atom {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();  // bohr, reduced into the cell
  int species = 0;
};

// Periodic crystal: cell rows are the lattice vectors. Immutable after
// construction; construction reduces atom positions into the cell, computes
// the species combo and enforces the even-electron-count rule required by
// the spin-restricted solver.
class Structure {
 public:
  Structure(const Eigen::Matrix3d& cell, std::vector<Atom> atoms,
            SpeciesTable table, std::string id = "");

  const Eigen::Matrix3d& cell() const { return cell_; }
  const Eigen::Matrix3d& recip() const { return recip_; }  // B, rows b_i
  double volume() const { return volume_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const SpeciesTable& species_table() const { return table_; }
  const std::vector<int>& combo() const { return combo_; }  // sorted unique ids
  double electron_count() const { return electron_count_; }
  const std::string& id() const { return id_; }

  static Structure from_json(const nlohmann::json& j, std::string id = "");
  void to_json(nlohmann::json& j) const;
  static Structure load(const std::string& path);
  void save(const std::string& path) const;

 private:
  Eigen::Matrix3d cell_;
  Eigen::Matrix3d recip_;
  double volume_ = 0.0;
  std::vector<Atom> atoms_;
  SpeciesTable table_;
  std::vector<int> combo_;
  double electron_count_ = 0.0;
  std::string id_;
};

// Reciprocal lattice matrix B with B^T * cell = identity, so that
// G(h,k,l) = 2*pi*B^T*(h,k,l) gives 2*pi-periodic lattice phases.
// Rows of B are the dual basis vectors b_i with a_j . b_i = delta_ij.
Eigen::Matrix3d reciprocal_lattice(const Eigen::Matrix3d& cell);

struct GVector {
  std::array<int, 3> miller{0, 0, 0};
  Eigen::Vector3d g = Eigen::Vector3d::Zero();  // bohr^-1
  double kin = 0.0;                             // 0.5*|g|^2 (hartree)
};

// Exactly {(h,k,l) : 0.5*|G|^2 <= cutoff}, sorted by (kin, h, k, l), G=0
// first. The cutoff test carries a 1e-12 relative tolerance so closed-shell
// boundaries survive floating-point noise. A negative cutoff yields the
// empty set.
std::vector<GVector> gvectors_within(const Eigen::Matrix3d& cell,
                                     double cutoff);

// Smallest 2,3,5-smooth integer >= n (FFT-friendly grid sizes).
int fft_friendly(int n);

// Real-space FFT mesh. Values are laid out with the FIRST axis fastest:
// index(i1,i2,i3) = i1 + n1*(i2 + n2*i3). This layout is part of the codec
// contract and never changes.
struct Grid {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Matrix3d cell = Eigen::Matrix3d::Identity();

  // Smallest FFT-friendly dims that hold every Miller index of the ecutrho
  // sphere without aliasing (n_i >= 2*maxm_i + 1).
  static Grid for_cutoff(const Eigen::Matrix3d& cell, double ecutrho);

  std::int64_t size() const {
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  }
  std::int64_t index(int i1, int i2, int i3) const {
    return i1 + static_cast<std::int64_t>(dims[0]) *
                    (i2 + static_cast<std::int64_t>(dims[1]) * i3);
  }
  std::array<int, 3> unravel(std::int64_t idx) const {
    const int i1 = static_cast<int>(idx % dims[0]);
    const std::int64_t rest = idx / dims[0];
    return {i1, static_cast<int>(rest % dims[1]),
            static_cast<int>(rest / dims[1])};
  }
  Eigen::Vector3d point(std::int64_t idx) const {
    const auto ijk = unravel(idx);
    const Eigen::Vector3d f(static_cast<double>(ijk[0]) / dims[0],
                            static_cast<double>(ijk[1]) / dims[1],
                            static_cast<double>(ijk[2]) / dims[2]);
    return cell.transpose() * f;
  }
};

bool same_grid(const Grid& a, const Grid& b);

// Binary-exact snapshot of a density's reciprocal-space serialization; set
// by the codec reader so a subsequent write of the unmodified field can
// re-emit identical bytes. Defined in densio.hpp.
struct ReciprocalPayload;

// Real scalar field on a Grid (electrons/bohr^3). band_limited marks fields
// whose spectrum is known by construction to lie inside the ecutrho sphere
// of their grid (orbital densities, codec reads, uniform fields); it is
// bookkeeping for the SCF finalization, not a measured property.
struct DensityField {
  Grid grid;
  std::vector<double> values;
  bool band_limited = false;
  std::shared_ptr<const ReciprocalPayload> payload;

  double integral() const;  // (volume/J) * sum(values)

  static DensityField uniform(const Grid& grid, double value);
  static DensityField zeros(const Grid& grid);
};

// All periodic-image distances |b - a + L*n| <= radius (sorted ascending),
// not just the minimum; descriptor sums need the full set. Any radius is
// valid: the image search depth is derived from the radius.
std::vector<double> image_distances(const Eigen::Matrix3d& cell,
                                    const Eigen::Vector3d& a,
                                    const Eigen::Vector3d& b, double radius);

std::vector<double> min_image_distance(const Structure& structure,
                                       const Eigen::Vector3d& a,
                                       const Eigen::Vector3d& b,
                                       double radius);

}  // namespace rhobench
