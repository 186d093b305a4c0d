#pragma once
// Γ-point plane-wave Kohn-Sham solver: effective potential assembly, dense
// and matrix-free eigensolves, the SCF loop, and convergence traces.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "rhobench/core.hpp"

namespace rhobench {

enum class Mixing { linear, anderson };
enum class EigMethod { automatic, dense, iterative };

struct SolverParams {
  double ecutwfc = 8.0;   // wavefunction cutoff (hartree)
  double ecutrho = 32.0;  // density cutoff (hartree); must be >= 4*ecutwfc
  double conv_thr = 1e-9;
  int max_iter = 200;
  double mix_alpha = 0.3;  // in (0, 1]
  Mixing mixing = Mixing::linear;
  int anderson_depth = 4;
  bool xc_enabled = true;  // Slater exchange; off gives the bare kinetic+loc+H problem
  int n_bands = 0;         // 0: electron_count/2 + 2
  EigMethod eig_method = EigMethod::automatic;
  int dense_threshold = 1200;  // automatic: dense at or below this basis size

  void validate() const;  // throws Error("domain") on violated invariants
  int bands_for(const Structure& s) const;
  nlohmann::json to_json() const;
  static SolverParams from_json(const nlohmann::json& j);
};

struct KsOrbitals {
  std::vector<GVector> basis;   // wavefunction G-vectors, canonical order
  Eigen::MatrixXcd coeffs;      // n_pw x n_bands, orthonormal columns
  Eigen::VectorXd eigenvalues;  // hartree, ascending
  Eigen::VectorXd occupations;  // each 0 or 2; sums to electron count
};

struct ScfTrace {
  std::vector<double> accuracies;  // E_H[rho_out - rho_in] per iteration, hartree
  std::vector<double> energies;    // total-energy estimate per iteration, hartree
  bool converged = false;
  std::optional<int> iterations_to_converge;  // present iff converged
  double final_energy = 0.0;
};

struct ScfResult {
  ScfTrace trace;
  DensityField density;  // density the final recorded energy was evaluated at
  KsOrbitals orbitals;
};

// v_eff = v_loc + v_H + v_x assembled in reciprocal space on the density
// grid, truncated to the closed ecutrho sphere and Hermitian-symmetrized.
// With the grid rule (dims hold the closed sphere without wrap) this makes
// the FFT-based apply agree with the dense matrix to machine precision.
struct EffectivePotential {
  Grid grid;
  std::vector<std::complex<double>> v_recip;  // full-box layout
  std::vector<double> v_real;                 // v_eff on grid points
  double hartree_energy = 0.0;                // E_H[rho]
  double exc = 0.0;                           // E_xc[rho]; 0 when xc disabled
  double vxc_rho = 0.0;                       // integral v_xc*rho; 0 when xc disabled
};

EffectivePotential effective_potential(const Structure& s,
                                       const DensityField& rho,
                                       const SolverParams& params);

// E_H[rho] = (1/2) sum_{G != 0} 4*pi*|rho(G)|^2*volume/|G|^2 over the box.
double hartree_energy(const DensityField& rho);

std::vector<GVector> wfc_basis(const Structure& s, const SolverParams& params);

Eigen::MatrixXcd build_hamiltonian(const Structure& s, const DensityField& rho,
                                   const SolverParams& params);
Eigen::MatrixXcd build_hamiltonian(const EffectivePotential& pot,
                                   const std::vector<GVector>& basis);

// hx = H x column-wise via FFTs; matches the dense build exactly.
void apply_hamiltonian(const EffectivePotential& pot,
                       const std::vector<GVector>& basis,
                       const Eigen::MatrixXcd& x, Eigen::MatrixXcd& hx);

// Dense path: lowest n_bands eigenpairs of a Hermitian matrix. Occupations
// are left zero; callers fill them via aufbau_occupations.
KsOrbitals solve_linear_eigenproblem(const Eigen::MatrixXcd& h,
                                     const std::vector<GVector>& basis,
                                     int n_bands);

DensityField density_from_orbitals(const Structure& s, const Grid& grid,
                                   const KsOrbitals& orbitals);

// Hartree self-energy of rho_out - rho_in; zero iff the residual is pure
// zero-mode. Grids must match.
double scf_accuracy(const DensityField& rho_in, const DensityField& rho_out);

Eigen::VectorXd aufbau_occupations(const Eigen::VectorXd& eigenvalues,
                                   double electron_count);

// Lowest unoccupied minus highest occupied eigenvalue.
double band_gap(const KsOrbitals& orbitals);

// Superposition of normalized species Gaussians, band-limited to the
// ecutrho sphere; integrates exactly to the electron count.
DensityField gaussian_initial_density(const Structure& s,
                                      const SolverParams& params);

// SCF loop: build -> solve -> density -> accuracy -> mix. `initial` must sit
// on the structure's ecutrho grid and integrate to the electron count; null
// selects the Gaussian superposition guess. Converges only onto a
// band-limited density so that a restart reproduces the run.
ScfResult run_scf(const Structure& s, const SolverParams& params,
                  const DensityField* initial = nullptr);

// Direct functional T_s + integral(v_loc*rho) + E_H[rho] + E_xc[rho] on the
// orbital density; equals the traced energy at self-consistency and bounds
// it from above elsewhere.
double total_energy_direct(const Structure& s, const KsOrbitals& orbitals,
                           const SolverParams& params);

void write_trace_csv(const std::string& path, const ScfTrace& trace);
ScfTrace read_trace_csv(const std::string& path, double conv_thr);

}  // namespace rhobench
