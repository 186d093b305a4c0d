#include "rhobench/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace rhobench {

SpeciesTable::SpeciesTable(std::vector<Species> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const Species& a, const Species& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Species& s = entries_[i];
    if (!(s.z_val > 0.0))
      throw Error("domain", "species " + std::to_string(s.id) +
                                ": z_val must be positive");
    if (!(s.sigma > 0.0))
      throw Error("domain", "species " + std::to_string(s.id) +
                                ": sigma must be positive");
    if (i > 0 && entries_[i - 1].id == s.id)
      throw Error("domain", "duplicate species id " + std::to_string(s.id));
  }
}

bool SpeciesTable::has(int id) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), id,
      [](const Species& s, int value) { return s.id < value; });
  return it != entries_.end() && it->id == id;
}

const Species& SpeciesTable::get(int id) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), id,
      [](const Species& s, int value) { return s.id < value; });
  if (it == entries_.end() || it->id != id)
    throw Error("domain", "unknown species id " + std::to_string(id));
  return *it;
}

Eigen::Matrix3d reciprocal_lattice(const Eigen::Matrix3d& cell) {
  const Eigen::Vector3d a1 = cell.row(0), a2 = cell.row(1), a3 = cell.row(2);
  const double vol = a1.dot(a2.cross(a3));
  const double scale = a1.norm() * a2.norm() * a3.norm();
  if (!(std::abs(vol) > 1e-12 * std::max(scale, 1e-300)))
    throw Error("degenerate-cell", "cell matrix is singular");
  Eigen::Matrix3d recip;
  recip.row(0) = a2.cross(a3) / vol;
  recip.row(1) = a3.cross(a1) / vol;
  recip.row(2) = a1.cross(a2) / vol;
  return recip;
}

Structure::Structure(const Eigen::Matrix3d& cell, std::vector<Atom> atoms,
                     SpeciesTable table, std::string id)
    : cell_(cell), atoms_(std::move(atoms)), table_(std::move(table)),
      id_(std::move(id)) {
  const double det = cell_.determinant();
  const double scale =
      cell_.row(0).norm() * cell_.row(1).norm() * cell_.row(2).norm();
  if (!(det > 1e-12 * std::max(scale, 1e-300)))
    throw Error("degenerate-cell",
                "cell must be right-handed with positive determinant");
  volume_ = det;
  recip_ = reciprocal_lattice(cell_);

  std::set<int> combo;
  double electrons = 0.0;
  for (Atom& atom : atoms_) {
    if (!table_.has(atom.species))
      throw Error("domain", "atom references unknown species id " +
                                std::to_string(atom.species));
    Eigen::Vector3d f = recip_ * atom.pos;  // fractional coordinates
    bool moved = false;
    for (int i = 0; i < 3; ++i) {
      const double shift = std::floor(f[i]);
      if (shift != 0.0) moved = true;
      f[i] -= shift;
      if (f[i] >= 1.0) f[i] -= 1.0, moved = true;
      if (f[i] < 0.0) f[i] += 1.0, moved = true;
    }
    // Positions already inside the cell stay bitwise untouched so that
    // construction is idempotent (json round trips reproduce fields exactly).
    if (moved) atom.pos = cell_.transpose() * f;
    combo.insert(atom.species);
    electrons += table_.get(atom.species).z_val;
  }
  combo_.assign(combo.begin(), combo.end());
  electron_count_ = electrons;

  const double half = electrons / 2.0;
  if (std::abs(half - std::round(half)) > 1e-9)
    throw Error("domain",
                "total valence electron count must be even (spin-restricted "
                "solver), got " +
                    std::to_string(electrons));
}

Structure Structure::from_json(const nlohmann::json& j, std::string id) {
  try {
    Eigen::Matrix3d cell;
    const auto& jc = j.at("cell");
    if (jc.size() != 3) throw Error("parse", "cell must be a 3x3 array");
    for (int r = 0; r < 3; ++r) {
      if (jc.at(r).size() != 3)
        throw Error("parse", "cell must be a 3x3 array");
      for (int c = 0; c < 3; ++c) cell(r, c) = jc.at(r).at(c).get<double>();
    }

    std::vector<Species> species;
    for (const auto& js : j.at("species_table")) {
      species.push_back({js.at("id").get<int>(), js.at("z_val").get<double>(),
                         js.at("sigma").get<double>()});
    }

    std::vector<Atom> atoms;
    for (const auto& ja : j.at("atoms")) {
      Atom atom;
      const auto& jp = ja.at("pos");
      if (jp.size() != 3) throw Error("parse", "atom pos must have 3 entries");
      for (int i = 0; i < 3; ++i) atom.pos[i] = jp.at(i).get<double>();
      atom.species = ja.at("species").get<int>();
      atoms.push_back(atom);
    }
    return Structure(cell, std::move(atoms), SpeciesTable(std::move(species)),
                     std::move(id));
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("malformed structure json: ") + e.what());
  }
}

void Structure::to_json(nlohmann::json& j) const {
  j = nlohmann::json::object();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) j["cell"][r][c] = cell_(r, c);
  j["atoms"] = nlohmann::json::array();
  for (const Atom& atom : atoms_) {
    nlohmann::json ja;
    ja["pos"] = {atom.pos[0], atom.pos[1], atom.pos[2]};
    ja["species"] = atom.species;
    j["atoms"].push_back(ja);
  }
  j["species_table"] = nlohmann::json::array();
  for (const Species& s : table_.entries()) {
    nlohmann::json js;
    js["id"] = s.id;
    js["z_val"] = s.z_val;
    js["sigma"] = s.sigma;
    j["species_table"].push_back(js);
  }
}

Structure Structure::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open structure file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", path + ": " + e.what());
  }
  std::string id = path;
  if (auto slash = id.find_last_of('/'); slash != std::string::npos)
    id = id.substr(slash + 1);
  if (auto dot = id.find_last_of('.'); dot != std::string::npos)
    id = id.substr(0, dot);
  return from_json(j, id);
}

void Structure::save(const std::string& path) const {
  nlohmann::json j;
  to_json(j);
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write structure file " + path);
  out << j.dump(2) << '\n';
}

std::vector<GVector> gvectors_within(const Eigen::Matrix3d& cell,
                                     double cutoff) {
  std::vector<GVector> out;
  if (!(cutoff >= 0.0)) return out;
  const Eigen::Matrix3d recip = reciprocal_lattice(cell);
  const double gmax = std::sqrt(2.0 * cutoff);
  const double two_pi = 2.0 * M_PI;
  std::array<int, 3> mmax;
  for (int a = 0; a < 3; ++a)
    mmax[a] = static_cast<int>(
        std::floor(cell.row(a).norm() * gmax / two_pi + 1e-9));
  const double cut = cutoff * (1.0 + 1e-12);
  for (int h = -mmax[0]; h <= mmax[0]; ++h)
    for (int k = -mmax[1]; k <= mmax[1]; ++k)
      for (int l = -mmax[2]; l <= mmax[2]; ++l) {
        const Eigen::Vector3d g =
            two_pi * (recip.transpose() * Eigen::Vector3d(h, k, l));
        const double kin = 0.5 * g.squaredNorm();
        if (kin <= cut) out.push_back({{h, k, l}, g, kin});
      }
  std::sort(out.begin(), out.end(), [](const GVector& x, const GVector& y) {
    if (x.kin != y.kin) return x.kin < y.kin;
    return x.miller < y.miller;
  });
  return out;
}

int fft_friendly(int n) {
  if (n < 1) n = 1;
  for (;; ++n) {
    int m = n;
    for (int p : {2, 3, 5})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

Grid Grid::for_cutoff(const Eigen::Matrix3d& cell, double ecutrho) {
  if (!(ecutrho > 0.0))
    throw Error("domain", "ecutrho must be positive");
  Grid grid;
  grid.cell = cell;
  const double gmax = std::sqrt(2.0 * ecutrho);
  for (int a = 0; a < 3; ++a) {
    const int maxm = static_cast<int>(
        std::floor(cell.row(a).norm() * gmax / (2.0 * M_PI) + 1e-9));
    grid.dims[a] = fft_friendly(2 * maxm + 1);
  }
  return grid;
}

bool same_grid(const Grid& a, const Grid& b) {
  return a.dims == b.dims && a.cell == b.cell;
}

double DensityField::integral() const {
  double sum = 0.0;
  for (double v : values) sum += v;
  return grid.cell.determinant() / static_cast<double>(grid.size()) * sum;
}

DensityField DensityField::uniform(const Grid& grid, double value) {
  DensityField f;
  f.grid = grid;
  f.values.assign(static_cast<std::size_t>(grid.size()), value);
  f.band_limited = true;  // constant fields are pure DC
  return f;
}

DensityField DensityField::zeros(const Grid& grid) {
  return uniform(grid, 0.0);
}

std::vector<double> image_distances(const Eigen::Matrix3d& cell,
                                    const Eigen::Vector3d& a,
                                    const Eigen::Vector3d& b, double radius) {
  std::vector<double> out;
  if (!(radius >= 0.0)) return out;
  const Eigen::Matrix3d recip = reciprocal_lattice(cell);
  Eigen::Vector3d f = recip * (b - a);
  for (int i = 0; i < 3; ++i) {
    f[i] -= std::floor(f[i]);
    if (f[i] >= 1.0) f[i] -= 1.0;
    if (f[i] < 0.0) f[i] += 1.0;
  }
  const Eigen::Vector3d base = cell.transpose() * f;
  // |n_i| <= radius*|b_i| + 1 covers every image of the reduced separation
  // within the radius (plane-spacing bound, +1 slack for the reduction).
  std::array<int, 3> depth;
  for (int i = 0; i < 3; ++i)
    depth[i] = static_cast<int>(std::ceil(radius * recip.row(i).norm())) + 1;
  const double limit = radius * (1.0 + 1e-12);
  for (int c1 = -depth[0]; c1 <= depth[0]; ++c1)
    for (int c2 = -depth[1]; c2 <= depth[1]; ++c2)
      for (int c3 = -depth[2]; c3 <= depth[2]; ++c3) {
        const Eigen::Vector3d v =
            base + cell.transpose() * Eigen::Vector3d(c1, c2, c3);
        const double r = v.norm();
        if (r <= limit) out.push_back(r);
      }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> min_image_distance(const Structure& structure,
                                       const Eigen::Vector3d& a,
                                       const Eigen::Vector3d& b,
                                       double radius) {
  return image_distances(structure.cell(), a, b, radius);
}

}  // namespace rhobench
