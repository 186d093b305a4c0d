#include "rhobench/initdens.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhobench/errors.hpp"
#include "rhobench/fft.hpp"

namespace rhobench {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kIngestFloor = 1e-10;

double sinc_j0(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

// Sum in ascending order after sorting, so the result depends only on the
// multiset of terms, not on the order they were produced in.
double canonical_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

// Neumaier-compensated sum: the ingest fixed point needs the integral to
// roundoff accuracy or its 1e-14 exit test never fires on large grids.
double compensated_sum(const std::vector<double>& v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

RadialProfile::RadialProfile(std::vector<double> r, std::vector<double> rho)
    : r_(std::move(r)), rho_(std::move(rho)) {
  if (r_.size() != rho_.size() || r_.size() < 2)
    throw Error("domain", "radial profile needs matching r/rho arrays with at "
                          "least two points");
  if (r_.front() != 0.0)
    throw Error("domain", "radial profile must start at r = 0");
  for (std::size_t k = 0; k + 1 < r_.size(); ++k)
    if (!(r_[k + 1] > r_[k]))
      throw Error("domain", "radial grid must be strictly ascending");
  for (double v : rho_) {
    if (!std::isfinite(v)) throw Error("domain", "radial profile value is not finite");
    if (v < 0.0) throw Error("domain", "radial profile value is negative");
  }

  // Fritsch-Carlson limited slopes: monotone between knots, no overshoot, so
  // nonnegative data stays nonnegative everywhere.
  const std::size_t n = r_.size();
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h[k] = r_[k + 1] - r_[k];
    d[k] = (rho_[k + 1] - rho_[k]) / h[k];
  }
  slope_.assign(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (d[k - 1] == 0.0 || d[k] == 0.0 || (d[k - 1] > 0.0) != (d[k] > 0.0)) {
      slope_[k] = 0.0;
    } else {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      slope_[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
    }
  }
  auto end_slope = [](double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if ((d0 > 0.0) != (d1 > 0.0) && std::abs(m) > 3.0 * std::abs(d0))
      return 3.0 * d0;
    return m;
  };
  if (n == 2) {
    slope_[0] = slope_[1] = d[0];
  } else {
    slope_[0] = end_slope(h[0], h[1], d[0], d[1]);
    slope_[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  }
}

double RadialProfile::operator()(double r) const {
  if (r_.empty()) return 0.0;
  if (r <= 0.0) return rho_.front();
  if (r >= r_.back()) return r == r_.back() ? rho_.back() : 0.0;
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  const std::size_t k = static_cast<std::size_t>(it - r_.begin()) - 1;
  const double h = r_[k + 1] - r_[k];
  const double t = (r - r_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
  const double h10 = t3 - 2.0 * t2 + t;
  const double h01 = -2.0 * t3 + 3.0 * t2;
  const double h11 = t3 - t2;
  return h00 * rho_[k] + h10 * h * slope_[k] + h01 * rho_[k + 1] +
         h11 * h * slope_[k + 1];
}

double RadialProfile::charge() const {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < r_.size(); ++k) {
    const double fa = rho_[k] * r_[k] * r_[k];
    const double fb = rho_[k + 1] * r_[k + 1] * r_[k + 1];
    acc += 0.5 * (fa + fb) * (r_[k + 1] - r_[k]);
  }
  return 4.0 * kPi * acc;
}

AtomicDensityTable::AtomicDensityTable(std::map<int, RadialProfile> profiles)
    : profiles_(std::move(profiles)) {}

bool AtomicDensityTable::has(int species) const {
  return profiles_.count(species) != 0;
}

const RadialProfile& AtomicDensityTable::profile(int species) const {
  const auto it = profiles_.find(species);
  if (it == profiles_.end())
    throw Error("table-miss",
                "no atomic table for species " + std::to_string(species));
  return it->second;
}

std::vector<double> spherical_average(const DensityField& field,
                                      const Eigen::Vector3d& center,
                                      const std::vector<double>& radii) {
  const Grid& grid = field.grid;
  const auto spectrum = fft_forward(field);
  const Eigen::Matrix3d bt = 2.0 * kPi * reciprocal_lattice(grid.cell).transpose();

  // Collapse the spectrum into |G| shells: the angular average of e^{iG.u}
  // over a sphere of radius r is j0(|G| r), so each shell contributes its
  // phase-summed amplitude times one j0 evaluation.
  std::map<std::int64_t, std::pair<double, double>> shells;  // key -> (g2, amp)
  for (std::int64_t idx = 0; idx < grid.size(); ++idx) {
    const std::array<int, 3> mi = box_miller(grid, idx);
    const Eigen::Vector3d m(mi[0], mi[1], mi[2]);
    const Eigen::Vector3d g = bt * m;
    const double g2 = g.squaredNorm();
    const double phase = g.dot(center);
    const double amp =
        (spectrum[static_cast<std::size_t>(idx)] *
         std::complex<double>(std::cos(phase), std::sin(phase)))
            .real();
    const auto key = static_cast<std::int64_t>(std::llround(g2 * 1e9));
    shells.try_emplace(key, g2, 0.0).first->second.second += amp;
  }

  std::vector<double> out(radii.size(), 0.0);
  for (std::size_t k = 0; k < radii.size(); ++k) {
    double acc = 0.0;
    for (const auto& kv : shells)
      acc += kv.second.second * sinc_j0(std::sqrt(kv.second.first) * radii[k]);
    out[k] = acc;
  }
  return out;
}

RadialProfile build_atomic_table(const Species& species,
                                 const SolverParams& params,
                                 const TableParams& table) {
  if (table.n_points < 2)
    throw Error("domain", "atomic table needs at least two radial points");
  if (!(table.outer_radius > 0.0) ||
      !(table.taper_start > 0.0 && table.taper_start < table.taper_end &&
        table.taper_end <= table.outer_radius))
    throw Error("domain", "atomic table taper window is malformed");
  if (table.cell_side < 2.0 * table.outer_radius)
    throw Error("domain", "atomic table cell must span twice the outer radius");

  Eigen::Matrix3d cell = table.cell_side * Eigen::Matrix3d::Identity();
  const Eigen::Vector3d center(table.cell_side / 2.0, table.cell_side / 2.0,
                               table.cell_side / 2.0);
  Structure one(cell, {Atom{center, species.id}},
                SpeciesTable(std::vector<Species>{species}),
                "atom-" + std::to_string(species.id));

  const ScfResult res = run_scf(one, params);
  if (!res.trace.converged)
    throw Error("table-build",
                "single-atom run for species " + std::to_string(species.id) +
                    " did not converge in " + std::to_string(params.max_iter) +
                    " iterations");

  std::vector<double> radii(static_cast<std::size_t>(table.n_points));
  for (int k = 0; k < table.n_points; ++k)
    radii[static_cast<std::size_t>(k)] =
        table.outer_radius * static_cast<double>(k) /
        static_cast<double>(table.n_points - 1);
  std::vector<double> rho = spherical_average(res.density, center, radii);

  for (int k = 0; k < table.n_points; ++k) {
    const std::size_t u = static_cast<std::size_t>(k);
    if (rho[u] < 0.0) rho[u] = 0.0;  // far-field ringing only
    const double r = radii[u];
    if (r >= table.taper_end) {
      rho[u] = 0.0;
    } else if (r > table.taper_start) {
      rho[u] *= 0.5 * (1.0 + std::cos(kPi * (r - table.taper_start) /
                                      (table.taper_end - table.taper_start)));
    }
  }

  double integral = 0.0;
  for (int k = 0; k + 1 < table.n_points; ++k) {
    const std::size_t u = static_cast<std::size_t>(k);
    integral += 0.5 *
                (rho[u] * radii[u] * radii[u] +
                 rho[u + 1] * radii[u + 1] * radii[u + 1]) *
                (radii[u + 1] - radii[u]);
  }
  integral *= 4.0 * kPi;
  if (!(integral > 0.0))
    throw Error("table-build", "species " + std::to_string(species.id) +
                                   " produced an empty radial density");
  const double factor = species.z_val / integral;
  for (double& v : rho) v *= factor;

  return RadialProfile(std::move(radii), std::move(rho));
}

DensityField acs_density(const Structure& s, const AtomicDensityTable& table,
                         const Grid& grid) {
  for (int id : s.combo()) (void)table.profile(id);  // table-miss up front

  DensityField out = DensityField::zeros(grid);
  out.band_limited = false;
  const double n_e = s.electron_count();
  if (s.atoms().empty() || n_e <= 0.0) return out;

  // Canonical atom order: the superposition and its normalization must not
  // depend on how the caller happened to label the atoms.
  std::vector<std::size_t> order(s.atoms().size());
  for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t lhs, std::size_t rhs) {
                     const Atom& la = s.atoms()[lhs];
                     const Atom& ra = s.atoms()[rhs];
                     if (la.species != ra.species) return la.species < ra.species;
                     if (la.pos.x() != ra.pos.x()) return la.pos.x() < ra.pos.x();
                     if (la.pos.y() != ra.pos.y()) return la.pos.y() < ra.pos.y();
                     return la.pos.z() < ra.pos.z();
                   });

  const std::int64_t j = grid.size();
  std::vector<double> atom_totals;
  atom_totals.reserve(order.size());
  std::vector<double> contribs;
  for (std::size_t a : order) {
    const Atom& atom = s.atoms()[a];
    const RadialProfile& prof = table.profile(atom.species);
    const double outer = prof.outer_radius();
    contribs.clear();
    for (std::int64_t idx = 0; idx < j; ++idx) {
      double here = 0.0;
      for (double dist : image_distances(s.cell(), atom.pos, grid.point(idx),
                                         outer))
        here += prof(dist);
      out.values[static_cast<std::size_t>(idx)] += here;
      if (here != 0.0) contribs.push_back(here);
    }
    atom_totals.push_back(canonical_sum(contribs));
  }

  // Normalize with an order-canonical integral so translated/relabeled
  // copies of the same structure scale by the bit-identical factor.
  const double dv = grid.cell.determinant() / static_cast<double>(j);
  const double integral = std::abs(dv) * canonical_sum(atom_totals);
  if (!(integral > 0.0))
    throw Error("numerical", "atomic superposition integrates to zero");
  const double factor = n_e / integral;
  for (double& v : out.values) v *= factor;
  return out;
}

DensityField ingest_predicted_density(const DensityField& raw,
                                      const Structure& s,
                                      const SolverParams& params) {
  const Grid grid = Grid::for_cutoff(s.cell(), params.ecutrho);
  if (!same_grid(raw.grid, grid))
    throw Error("shape", "predicted density grid does not match the "
                         "structure's solver grid");
  const double n_e = s.electron_count();
  if (n_e <= 0.0)
    throw Error("domain", "cannot normalize a prediction for a structure "
                          "with no electrons");

  const std::size_t j = raw.values.size();
  std::size_t floored = 0;
  for (double v : raw.values) {
    if (!std::isfinite(v))
      throw Error("numerical-blowup", "predicted density contains non-finite "
                                      "values");
    if (v <= kIngestFloor) ++floored;
  }
  if (2 * floored >= j)
    throw Error("degenerate-prediction",
                std::to_string(floored) + " of " + std::to_string(j) +
                    " predicted values sit at or below the density floor");

  DensityField out = raw;
  out.band_limited = false;
  out.payload.reset();
  for (double& v : out.values)
    if (v < kIngestFloor) v = kIngestFloor;

  // Clamp/rescale to a joint fixed point: once nothing clamps and the scale
  // factor is unity to roundoff, re-ingesting returns the field unchanged.
  const double dv = std::abs(grid.cell.determinant()) /
                    static_cast<double>(grid.size());
  for (int pass = 0; pass < 100; ++pass) {
    const double factor = n_e / (dv * compensated_sum(out.values));
    if (std::abs(factor - 1.0) <= 1e-14) break;
    for (double& v : out.values) {
      v *= factor;
      if (v < kIngestFloor) v = kIngestFloor;
    }
  }
  return out;
}

void save_atomic_tables(const std::string& dir,
                        const AtomicDensityTable& table) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("io", "cannot create table directory " + dir);

  nlohmann::json index = nlohmann::json::object();
  for (const auto& [id, prof] : table.profiles()) {
    const std::string name = "species-" + std::to_string(id) + ".csv";
    index[std::to_string(id)] = name;
    std::ofstream f(dir + "/" + name);
    if (!f) throw Error("io", "cannot write " + dir + "/" + name);
    f << "r_bohr,rho\n";
    char line[80];
    for (std::size_t k = 0; k < prof.radii().size(); ++k) {
      std::snprintf(line, sizeof line, "%.17g,%.17g\n", prof.radii()[k],
                    prof.values()[k]);
      f << line;
    }
    if (!f.good()) throw Error("io", "short write to " + dir + "/" + name);
  }
  std::ofstream f(dir + "/index.json");
  if (!f) throw Error("io", "cannot write " + dir + "/index.json");
  f << index.dump(2) << "\n";
  if (!f.good()) throw Error("io", "short write to " + dir + "/index.json");
}

AtomicDensityTable load_atomic_tables(const std::string& dir) {
  std::ifstream jf(dir + "/index.json");
  if (!jf) throw Error("io", "cannot read " + dir + "/index.json");
  nlohmann::json index;
  try {
    jf >> index;
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("bad table index: ") + e.what());
  }
  if (!index.is_object())
    throw Error("parse", "table index must be a JSON object");

  std::map<int, RadialProfile> profiles;
  for (const auto& [key, value] : index.items()) {
    int id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw Error("parse", "table index key '" + key + "' is not a species id");
    }
    if (!value.is_string())
      throw Error("parse", "table index entry for species " + key +
                               " must be a file name");
    const std::string path = dir + "/" + value.get<std::string>();
    std::ifstream f(path);
    if (!f) throw Error("io", "cannot read " + path);
    std::string header;
    std::getline(f, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "r_bohr,rho")
      throw Error("parse", path + ": expected header r_bohr,rho");
    std::vector<double> r, rho;
    std::string line;
    while (std::getline(f, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      double rv = 0.0, dv = 0.0;
      char trail = 0;
      if (std::sscanf(line.c_str(), "%lf,%lf%c", &rv, &dv, &trail) != 2)
        throw Error("parse", path + ": bad row '" + line + "'");
      r.push_back(rv);
      rho.push_back(dv);
    }
    try {
      profiles.emplace(id, RadialProfile(std::move(r), std::move(rho)));
    } catch (const Error& e) {
      throw Error("parse", path + ": " + e.message());
    }
  }
  return AtomicDensityTable(std::move(profiles));
}

}  // namespace rhobench
