#include "rhobench/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rhobench/eig.hpp"
#include "rhobench/errors.hpp"
#include "rhobench/fft.hpp"

namespace rhobench {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kCutTol = 1e-12;  // same relative slack as gvectors_within

// Slater exchange: eps_x = cx * rho^{4/3}, v_x = (4/3) * cx * rho^{1/3}
// = -(3/pi)^{1/3} rho^{1/3}. Evaluated on the clamped density max(rho, 0)
// so sub-floor ripples in impure fields stay well-defined.
const double kCx = -0.75 * std::cbrt(3.0 / kPi);

struct BoxModes {
  std::vector<double> g2;
  std::vector<Eigen::Vector3d> g;
  std::vector<std::uint8_t> inside;  // closed ecutrho sphere membership
};

BoxModes box_modes(const Grid& grid, double ecutrho) {
  const Eigen::Matrix3d recip = reciprocal_lattice(grid.cell);
  const Eigen::Matrix3d gmat = 2.0 * kPi * recip.transpose();
  const std::int64_t j = grid.size();
  BoxModes out;
  out.g2.resize(j);
  out.g.resize(j);
  out.inside.resize(j);
  const double limit = ecutrho * (1.0 + kCutTol);
  for (std::int64_t idx = 0; idx < j; ++idx) {
    const auto m = box_miller(grid, idx);
    out.g[idx] = gmat * Eigen::Vector3d(m[0], m[1], m[2]);
    out.g2[idx] = out.g[idx].squaredNorm();
    out.inside[idx] = 0.5 * out.g2[idx] <= limit ? 1 : 0;
  }
  return out;
}

double cell_volume(const Grid& grid) { return std::abs(grid.cell.determinant()); }

void check_density_finite(const DensityField& rho) {
  for (double v : rho.values)
    if (!std::isfinite(v))
      throw Error("numerical-blowup", "density contains non-finite values");
}

void check_density_values(const DensityField& rho, double electron_count) {
  check_density_finite(rho);
  double min_val = 0.0;
  for (double v : rho.values) min_val = std::min(min_val, v);
  if (min_val < -1e-8)
    throw Error("invalid-density", "density has values below -1e-8 (min " +
                                       std::to_string(min_val) + ")");
  const double integral = rho.integral();
  const double tol = 1e-8 * std::max(electron_count, 1.0);
  if (std::abs(integral - electron_count) > tol)
    throw Error("invalid-density",
                "density integrates to " + std::to_string(integral) +
                    ", expected " + std::to_string(electron_count));
}

double hartree_of_spectrum(const Grid& grid,
                           const std::vector<std::complex<double>>& rho_hat,
                           const BoxModes& modes) {
  const double volume = cell_volume(grid);
  double e = 0.0;
  for (std::int64_t idx = 1; idx < grid.size(); ++idx)
    e += 2.0 * kPi * std::norm(rho_hat[idx]) * volume / modes.g2[idx];
  return e;
}

std::vector<std::int64_t> basis_slots(const Grid& grid,
                                      const std::vector<GVector>& basis) {
  std::vector<std::int64_t> slots(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i)
    slots[i] = box_index_of_miller(grid, basis[i].miller);
  return slots;
}

}  // namespace

void SolverParams::validate() const {
  if (!(ecutwfc > 0.0)) throw Error("domain", "ecutwfc must be positive");
  if (ecutrho < 4.0 * ecutwfc * (1.0 - kCutTol))
    throw Error("domain", "ecutrho must be at least 4*ecutwfc");
  if (!(conv_thr > 0.0)) throw Error("domain", "conv_thr must be positive");
  if (max_iter < 1) throw Error("domain", "max_iter must be at least 1");
  if (!(mix_alpha > 0.0) || mix_alpha > 1.0)
    throw Error("domain", "mix_alpha must lie in (0, 1]");
  if (anderson_depth < 1)
    throw Error("domain", "anderson_depth must be at least 1");
  if (n_bands < 0) throw Error("domain", "n_bands must be nonnegative");
  if (dense_threshold < 1)
    throw Error("domain", "dense_threshold must be at least 1");
}

int SolverParams::bands_for(const Structure& s) const {
  if (n_bands > 0) return n_bands;
  return static_cast<int>(std::llround(s.electron_count() / 2.0)) + 2;
}

nlohmann::json SolverParams::to_json() const {
  return nlohmann::json{
      {"ecutwfc", ecutwfc},
      {"ecutrho", ecutrho},
      {"conv_thr", conv_thr},
      {"max_iter", max_iter},
      {"mix_alpha", mix_alpha},
      {"mixing", mixing == Mixing::linear ? "linear" : "anderson"},
      {"anderson_depth", anderson_depth},
      {"xc_enabled", xc_enabled},
      {"n_bands", n_bands},
      {"eig_method", eig_method == EigMethod::automatic ? "automatic"
                     : eig_method == EigMethod::dense   ? "dense"
                                                        : "iterative"},
      {"dense_threshold", dense_threshold}};
}

SolverParams SolverParams::from_json(const nlohmann::json& j) {
  SolverParams p;
  try {
    p.ecutwfc = j.value("ecutwfc", p.ecutwfc);
    p.ecutrho = j.value("ecutrho", p.ecutrho);
    p.conv_thr = j.value("conv_thr", p.conv_thr);
    p.max_iter = j.value("max_iter", p.max_iter);
    p.mix_alpha = j.value("mix_alpha", p.mix_alpha);
    p.anderson_depth = j.value("anderson_depth", p.anderson_depth);
    p.xc_enabled = j.value("xc_enabled", p.xc_enabled);
    p.n_bands = j.value("n_bands", p.n_bands);
    p.dense_threshold = j.value("dense_threshold", p.dense_threshold);
    const std::string mixing = j.value("mixing", std::string("linear"));
    if (mixing == "linear") {
      p.mixing = Mixing::linear;
    } else if (mixing == "anderson") {
      p.mixing = Mixing::anderson;
    } else {
      throw Error("parse", "unknown mixing scheme '" + mixing + "'");
    }
    const std::string eig = j.value("eig_method", std::string("automatic"));
    if (eig == "automatic") {
      p.eig_method = EigMethod::automatic;
    } else if (eig == "dense") {
      p.eig_method = EigMethod::dense;
    } else if (eig == "iterative") {
      p.eig_method = EigMethod::iterative;
    } else {
      throw Error("parse", "unknown eig_method '" + eig + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("bad solver params: ") + e.what());
  }
  p.validate();
  return p;
}

double hartree_energy(const DensityField& rho) {
  const auto rho_hat = fft_forward(rho.grid, rho.values);
  // Only g2 is needed; the sphere flag is unused here.
  const auto modes = box_modes(rho.grid, 0.0);
  return hartree_of_spectrum(rho.grid, rho_hat, modes);
}

std::vector<GVector> wfc_basis(const Structure& s, const SolverParams& params) {
  return gvectors_within(s.cell(), params.ecutwfc);
}

namespace {

// Potential construction without the input checks. run_scf reuses this on
// internally mixed densities: Anderson extrapolation can push a few grid
// points slightly negative in passing, which is harmless here (the exchange
// term clamps the sign) and must not abort an otherwise healthy run.
EffectivePotential potential_of(const Structure& s, const DensityField& rho,
                                const SolverParams& params) {
  check_density_finite(rho);
  const Grid& grid = rho.grid;
  const std::int64_t j = grid.size();
  const double volume = s.volume();
  const auto modes = box_modes(grid, params.ecutrho);
  const auto rho_hat = fft_forward(grid, rho.values);

  EffectivePotential pot;
  pot.grid = grid;
  pot.v_recip.assign(j, {0.0, 0.0});
  pot.hartree_energy = hartree_of_spectrum(grid, rho_hat, modes);

  // Local pseudopotential + Hartree on sphere slots, zero at G = 0.
  for (std::int64_t idx = 1; idx < j; ++idx) {
    if (!modes.inside[idx]) continue;
    const double g2 = modes.g2[idx];
    std::complex<double> v = 4.0 * kPi * rho_hat[idx] / g2;
    for (const Atom& atom : s.atoms()) {
      const Species& sp = s.species_table().get(atom.species);
      const double amp = -(4.0 * kPi * sp.z_val / volume) *
                         std::exp(-0.5 * g2 * sp.sigma * sp.sigma) / g2;
      const double phase = -modes.g[idx].dot(atom.pos);
      v += amp * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    pot.v_recip[idx] = v;
  }

  if (params.xc_enabled) {
    const double dv = volume / static_cast<double>(j);
    std::vector<double> vx(j);
    for (std::int64_t i = 0; i < j; ++i) {
      const double r = std::max(rho.values[i], 0.0);
      const double r13 = std::cbrt(r);
      vx[i] = (4.0 / 3.0) * kCx * r13;
      pot.exc += kCx * r * r13 * dv;
      pot.vxc_rho += vx[i] * rho.values[i] * dv;
    }
    const auto vx_hat = fft_forward(grid, vx);
    for (std::int64_t idx = 0; idx < j; ++idx)
      if (modes.inside[idx]) pot.v_recip[idx] += vx_hat[idx];
  }

  // Hermitian symmetrization over sphere slots: the rounding asymmetry of
  // rho_hat/vx_hat would otherwise leak into the dense build.
  for (std::int64_t idx = 0; idx < j; ++idx) {
    if (!modes.inside[idx]) continue;
    const auto m = box_miller(grid, idx);
    const std::int64_t partner =
        box_index_of_miller(grid, {-m[0], -m[1], -m[2]});
    if (partner == idx) {
      pot.v_recip[idx] = pot.v_recip[idx].real();
    } else if (partner > idx) {
      const std::complex<double> h =
          0.5 * (pot.v_recip[idx] + std::conj(pot.v_recip[partner]));
      pot.v_recip[idx] = h;
      pot.v_recip[partner] = std::conj(h);
    }
  }

  pot.v_real = fft_backward_real(grid, pot.v_recip);
  return pot;
}

}  // namespace

EffectivePotential effective_potential(const Structure& s,
                                       const DensityField& rho,
                                       const SolverParams& params) {
  params.validate();
  const Grid expected = Grid::for_cutoff(s.cell(), params.ecutrho);
  if (!same_grid(rho.grid, expected))
    throw Error("shape", "density grid does not match structure and ecutrho");
  check_density_values(rho, s.electron_count());
  return potential_of(s, rho, params);
}

Eigen::MatrixXcd build_hamiltonian(const EffectivePotential& pot,
                                   const std::vector<GVector>& basis) {
  const int n = static_cast<int>(basis.size());
  Eigen::MatrixXcd h(n, n);
  for (int col = 0; col < n; ++col) {
    for (int row = 0; row < n; ++row) {
      const std::array<int, 3> diff{basis[row].miller[0] - basis[col].miller[0],
                                    basis[row].miller[1] - basis[col].miller[1],
                                    basis[row].miller[2] - basis[col].miller[2]};
      h(row, col) = pot.v_recip[box_index_of_miller(pot.grid, diff)];
    }
    h(col, col) += basis[col].kin;
  }
  return h;
}

Eigen::MatrixXcd build_hamiltonian(const Structure& s, const DensityField& rho,
                                   const SolverParams& params) {
  const EffectivePotential pot = effective_potential(s, rho, params);
  return build_hamiltonian(pot, wfc_basis(s, params));
}

void apply_hamiltonian(const EffectivePotential& pot,
                       const std::vector<GVector>& basis,
                       const Eigen::MatrixXcd& x, Eigen::MatrixXcd& hx) {
  const std::int64_t n = static_cast<std::int64_t>(basis.size());
  if (x.rows() != n)
    throw Error("shape", "coefficient rows do not match the basis");
  const std::int64_t j = pot.grid.size();
  const auto slots = basis_slots(pot.grid, basis);
  hx.resize(n, x.cols());
  std::vector<std::complex<double>> box(j);
  for (int c = 0; c < x.cols(); ++c) {
    std::fill(box.begin(), box.end(), std::complex<double>(0.0, 0.0));
    for (std::int64_t i = 0; i < n; ++i) box[slots[i]] = x(i, c);
    auto psi = fft_backward(pot.grid, box);
    for (std::int64_t k = 0; k < j; ++k) psi[k] *= pot.v_real[k];
    const auto vpsi = fft_forward_complex(pot.grid, psi);
    for (std::int64_t i = 0; i < n; ++i)
      hx(i, c) = basis[i].kin * x(i, c) + vpsi[slots[i]];
  }
}

KsOrbitals solve_linear_eigenproblem(const Eigen::MatrixXcd& h,
                                     const std::vector<GVector>& basis,
                                     int n_bands) {
  const int n = static_cast<int>(h.rows());
  if (static_cast<int>(basis.size()) != n)
    throw Error("shape", "basis size does not match the matrix dimension");
  double asym = 0.0, scale = 0.0;
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r <= c; ++r) {
      asym = std::max(asym, std::abs(h(r, c) - std::conj(h(c, r))));
      scale = std::max(scale, std::abs(h(r, c)));
    }
  }
  if (asym > 1e-10 * std::max(scale, 1.0))
    throw Error("domain", "hamiltonian is not Hermitian");
  const DenseEig de = dense_lowest_eigenpairs(h, n_bands);
  KsOrbitals out;
  out.basis = basis;
  out.coeffs = de.vectors;
  out.eigenvalues = de.values;
  out.occupations = Eigen::VectorXd::Zero(n_bands);
  return out;
}

DensityField density_from_orbitals(const Structure& s, const Grid& grid,
                                   const KsOrbitals& orbitals) {
  const std::int64_t j = grid.size();
  const std::int64_t n = static_cast<std::int64_t>(orbitals.basis.size());
  if (orbitals.coeffs.rows() != n)
    throw Error("shape", "coefficient rows do not match the basis");
  if (orbitals.coeffs.cols() != orbitals.occupations.size())
    throw Error("shape", "occupation count does not match the bands");
  const auto slots = basis_slots(grid, orbitals.basis);
  DensityField rho = DensityField::zeros(grid);
  rho.grid = grid;
  std::vector<std::complex<double>> box(j);
  double n_expected = 0.0;
  for (int k = 0; k < orbitals.coeffs.cols(); ++k) {
    const double occ = orbitals.occupations[k];
    if (occ == 0.0) continue;
    n_expected += occ;
    std::fill(box.begin(), box.end(), std::complex<double>(0.0, 0.0));
    for (std::int64_t i = 0; i < n; ++i) box[slots[i]] = orbitals.coeffs(i, k);
    const auto psi = fft_backward(grid, box);
    for (std::int64_t p = 0; p < j; ++p)
      rho.values[p] += occ * std::norm(psi[p]);
  }
  const double inv_volume = 1.0 / s.volume();
  for (double& v : rho.values) v *= inv_volume;
  rho.band_limited = true;  // orbital products stay inside the rho sphere
  const double integral = rho.integral();
  if (std::abs(integral - n_expected) > 1e-10 * std::max(n_expected, 1.0))
    throw Error("numerical", "orbital density integrates to " +
                                 std::to_string(integral) + ", expected " +
                                 std::to_string(n_expected));
  return rho;
}

double scf_accuracy(const DensityField& rho_in, const DensityField& rho_out) {
  if (!same_grid(rho_in.grid, rho_out.grid))
    throw Error("shape", "scf accuracy needs densities on the same grid");
  DensityField diff = DensityField::zeros(rho_in.grid);
  for (std::size_t i = 0; i < diff.values.size(); ++i)
    diff.values[i] = rho_out.values[i] - rho_in.values[i];
  return hartree_energy(diff);
}

Eigen::VectorXd aufbau_occupations(const Eigen::VectorXd& eigenvalues,
                                   double electron_count) {
  const int n_occ = static_cast<int>(std::llround(electron_count / 2.0));
  if (std::abs(electron_count - 2.0 * n_occ) > 1e-9)
    throw Error("domain", "electron count must be even for 0/2 occupations");
  if (eigenvalues.size() < n_occ)
    throw Error("insufficient-bands",
                "need at least " + std::to_string(n_occ) + " bands, have " +
                    std::to_string(eigenvalues.size()));
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(eigenvalues.size());
  for (int k = 0; k < n_occ; ++k) occ[k] = 2.0;
  return occ;
}

double band_gap(const KsOrbitals& orbitals) {
  int homo = -1, lumo = -1;
  for (int k = 0; k < orbitals.occupations.size(); ++k) {
    const double occ = orbitals.occupations[k];
    if (occ == 2.0) {
      if (lumo != -1)
        throw Error("domain", "occupations are not aufbau-ordered");
      homo = k;
    } else if (occ == 0.0) {
      if (lumo == -1) lumo = k;
    } else {
      throw Error("domain", "occupations must be 0 or 2");
    }
  }
  if (homo == -1) throw Error("domain", "no occupied bands");
  if (lumo == -1)
    throw Error("insufficient-bands", "no unoccupied band was computed");
  return orbitals.eigenvalues[lumo] - orbitals.eigenvalues[homo];
}

DensityField gaussian_initial_density(const Structure& s,
                                      const SolverParams& params) {
  const Grid grid = Grid::for_cutoff(s.cell(), params.ecutrho);
  DensityField rho = DensityField::zeros(grid);
  if (s.atoms().empty()) return rho;
  const std::int64_t j = grid.size();
  // Real-space image sum keeps every value strictly positive; the field is
  // not band-limited, which the SCF loop resolves with a settle step.
  for (const Atom& atom : s.atoms()) {
    const Species& sp = s.species_table().get(atom.species);
    const double norm =
        sp.z_val / std::pow(2.0 * kPi * sp.sigma * sp.sigma, 1.5);
    const double radius = 12.0 * sp.sigma;
    for (std::int64_t idx = 0; idx < j; ++idx) {
      const Eigen::Vector3d r = grid.point(idx);
      for (double d : image_distances(s.cell(), atom.pos, r, radius))
        rho.values[idx] += norm * std::exp(-0.5 * d * d / (sp.sigma * sp.sigma));
    }
  }
  rho.band_limited = false;
  const double integral = rho.integral();
  if (!(integral > 0.0))
    throw Error("numerical", "initial density has nonpositive charge");
  const double scale = s.electron_count() / integral;
  for (double& v : rho.values) v *= scale;
  return rho;
}

namespace {

// Anderson (type-II / Pulay) history over real-space fields.
struct MixHistory {
  std::vector<std::vector<double>> x;  // inputs rho_in
  std::vector<std::vector<double>> f;  // residuals rho_out - rho_in
  bool pure = true;

  void reset() {
    x.clear();
    f.clear();
    pure = true;
  }
};

DensityField mix_densities(const DensityField& rho_in,
                           const DensityField& rho_out,
                           const SolverParams& params, MixHistory& hist) {
  const std::size_t j = rho_in.values.size();
  DensityField next = DensityField::zeros(rho_in.grid);
  if (params.mixing == Mixing::linear) {
    for (std::size_t i = 0; i < j; ++i)
      next.values[i] = (1.0 - params.mix_alpha) * rho_in.values[i] +
                       params.mix_alpha * rho_out.values[i];
    next.band_limited = rho_in.band_limited && rho_out.band_limited;
    return next;
  }

  hist.pure = hist.pure && rho_in.band_limited && rho_out.band_limited;
  std::vector<double> f(j);
  for (std::size_t i = 0; i < j; ++i)
    f[i] = rho_out.values[i] - rho_in.values[i];
  hist.x.push_back(rho_in.values);
  hist.f.push_back(std::move(f));
  const std::size_t cap = static_cast<std::size_t>(params.anderson_depth) + 1;
  while (hist.x.size() > cap) {
    hist.x.erase(hist.x.begin());
    hist.f.erase(hist.f.begin());
  }

  const int m = static_cast<int>(hist.x.size());
  const auto& xm = hist.x.back();
  const auto& fm = hist.f.back();
  Eigen::VectorXd gamma;
  if (m >= 2) {
    Eigen::MatrixXd df(j, m - 1), dx(j, m - 1);
    for (int k = 1; k < m; ++k) {
      for (std::size_t i = 0; i < j; ++i) {
        df(i, k - 1) = hist.f[k][i] - hist.f[k - 1][i];
        dx(i, k - 1) = hist.x[k][i] - hist.x[k - 1][i];
      }
    }
    const Eigen::Map<const Eigen::VectorXd> fv(fm.data(), j);
    gamma = df.colPivHouseholderQr().solve(fv);
    for (std::size_t i = 0; i < j; ++i) {
      double xi = xm[i], fi = fm[i];
      for (int k = 0; k < m - 1; ++k) {
        xi -= dx(i, k) * gamma[k];
        fi -= df(i, k) * gamma[k];
      }
      next.values[i] = xi + params.mix_alpha * fi;
    }
  } else {
    for (std::size_t i = 0; i < j; ++i)
      next.values[i] = xm[i] + params.mix_alpha * fm[i];
  }
  next.band_limited = hist.pure;
  return next;
}

}  // namespace

ScfResult run_scf(const Structure& s, const SolverParams& params,
                  const DensityField* initial) {
  params.validate();
  const Grid grid = Grid::for_cutoff(s.cell(), params.ecutrho);
  const auto basis = wfc_basis(s, params);
  const int n_pw = static_cast<int>(basis.size());
  const int n_bands = params.bands_for(s);
  if (n_bands > n_pw)
    throw Error("insufficient-bands",
                "basis has " + std::to_string(n_pw) + " plane waves, need " +
                    std::to_string(n_bands) + " bands");

  DensityField rho;
  if (initial) {
    if (!same_grid(initial->grid, grid))
      throw Error("shape", "initial density grid does not match the structure");
    check_density_values(*initial, s.electron_count());
    rho = *initial;
  } else {
    rho = gaussian_initial_density(s, params);
  }

  const bool use_dense = params.eig_method == EigMethod::dense ||
                         (params.eig_method == EigMethod::automatic &&
                          n_pw <= params.dense_threshold);
  Eigen::VectorXd kinetic(n_pw);
  for (int i = 0; i < n_pw; ++i) kinetic[i] = basis[i].kin;

  ScfResult out;
  ScfTrace& trace = out.trace;
  KsOrbitals orbitals;
  Eigen::MatrixXcd warm;
  bool have_warm = false;
  MixHistory hist;

  for (int iter = 1; iter <= params.max_iter; ++iter) {
    const EffectivePotential pot = potential_of(s, rho, params);

    if (use_dense) {
      orbitals = solve_linear_eigenproblem(build_hamiltonian(pot, basis),
                                           basis, n_bands);
    } else {
      const auto apply = [&](const Eigen::MatrixXcd& x, Eigen::MatrixXcd& hx) {
        apply_hamiltonian(pot, basis, x, hx);
      };
      const IterativeEig res = lobpcg_lowest(
          apply, kinetic, n_bands, have_warm ? &warm : nullptr, {});
      orbitals.basis = basis;
      orbitals.coeffs = res.vectors;
      orbitals.eigenvalues = res.values;
      orbitals.occupations = Eigen::VectorXd::Zero(n_bands);
      warm = res.block;
      have_warm = true;
    }
    orbitals.occupations =
        aufbau_occupations(orbitals.eigenvalues, s.electron_count());

    const DensityField rho_out = density_from_orbitals(s, grid, orbitals);
    const double acc = scf_accuracy(rho, rho_out);
    const double e_band = orbitals.occupations.dot(orbitals.eigenvalues);
    const double energy =
        e_band - pot.hartree_energy + (pot.exc - pot.vxc_rho);
    trace.accuracies.push_back(acc);
    trace.energies.push_back(energy);

    if (acc < params.conv_thr) {
      // Converge only onto a band-limited density so that restarting from
      // the result reproduces this run. An impure input that already meets
      // the threshold settles onto its own band-limited output first.
      if (rho.band_limited) {
        trace.converged = true;
        out.density = rho;
        break;
      }
      if (iter == params.max_iter) {
        trace.converged = true;
        out.density = rho_out;
        break;
      }
      rho = rho_out;
      hist.reset();
      continue;
    }
    if (iter == params.max_iter) {
      out.density = rho;
      break;
    }
    rho = mix_densities(rho, rho_out, params, hist);
  }

  out.orbitals = std::move(orbitals);
  trace.final_energy = trace.energies.back();
  if (trace.converged)
    trace.iterations_to_converge = static_cast<int>(trace.accuracies.size());
  return out;
}

double total_energy_direct(const Structure& s, const KsOrbitals& orbitals,
                           const SolverParams& params) {
  params.validate();
  const Grid grid = Grid::for_cutoff(s.cell(), params.ecutrho);
  const DensityField rho = density_from_orbitals(s, grid, orbitals);
  double t_s = 0.0;
  for (int k = 0; k < orbitals.coeffs.cols(); ++k) {
    if (orbitals.occupations[k] == 0.0) continue;
    double band = 0.0;
    for (int i = 0; i < orbitals.coeffs.rows(); ++i)
      band += orbitals.basis[i].kin * std::norm(orbitals.coeffs(i, k));
    t_s += orbitals.occupations[k] * band;
  }

  const auto modes = box_modes(grid, params.ecutrho);
  const auto rho_hat = fft_forward(grid, rho.values);
  const double volume = s.volume();
  double e_loc = 0.0;
  for (std::int64_t idx = 1; idx < grid.size(); ++idx) {
    if (!modes.inside[idx]) continue;
    const double g2 = modes.g2[idx];
    std::complex<double> vloc(0.0, 0.0);
    for (const Atom& atom : s.atoms()) {
      const Species& sp = s.species_table().get(atom.species);
      const double amp = -(4.0 * kPi * sp.z_val / volume) *
                         std::exp(-0.5 * g2 * sp.sigma * sp.sigma) / g2;
      const double phase = -modes.g[idx].dot(atom.pos);
      vloc += amp * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    e_loc += volume * (vloc * std::conj(rho_hat[idx])).real();
  }

  const double e_h = hartree_of_spectrum(grid, rho_hat, modes);
  double e_xc = 0.0;
  if (params.xc_enabled) {
    const double dv = volume / static_cast<double>(grid.size());
    for (double v : rho.values) {
      const double r = std::max(v, 0.0);
      e_xc += kCx * r * std::cbrt(r) * dv;
    }
  }
  return t_s + e_loc + e_h + e_xc;
}

void write_trace_csv(const std::string& path, const ScfTrace& trace) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("io", "cannot write trace file " + path);
  std::fprintf(f, "iter,accuracy_ha,energy_ha\n");
  for (std::size_t i = 0; i < trace.accuracies.size(); ++i)
    std::fprintf(f, "%zu,%.17g,%.17g\n", i + 1, trace.accuracies[i],
                 trace.energies[i]);
  std::fclose(f);
}

ScfTrace read_trace_csv(const std::string& path, double conv_thr) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot read trace file " + path);
  std::string line;
  if (!std::getline(in, line) || line != "iter,accuracy_ha,energy_ha")
    throw Error("parse", "bad trace header in " + path);
  ScfTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    unsigned long iter = 0;
    double acc = 0.0, energy = 0.0;
    if (std::sscanf(line.c_str(), "%lu,%lf,%lf", &iter, &acc, &energy) != 3 ||
        iter != trace.accuracies.size() + 1)
      throw Error("parse", "bad trace row in " + path + ": " + line);
    trace.accuracies.push_back(acc);
    trace.energies.push_back(energy);
  }
  if (trace.accuracies.empty())
    throw Error("parse", "trace has no rows: " + path);
  trace.converged = trace.accuracies.back() < conv_thr;
  if (trace.converged)
    trace.iterations_to_converge = static_cast<int>(trace.accuracies.size());
  trace.final_energy = trace.energies.back();
  return trace;
}

}  // namespace rhobench
