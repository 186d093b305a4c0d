#include "rhobench/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "rhobench/errors.hpp"
#include "rhobench/parallel.hpp"

namespace rhobench {

namespace {

bool grids_match(const Grid& a, const Grid& b) {
  if (a.dims != b.dims) return false;
  const double scale = std::max(1.0, a.cell.cwiseAbs().maxCoeff());
  return (a.cell - b.cell).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

// Unbiased draw from [0, n); rejection keeps the sequence identical across
// standard libraries, which std::uniform_int_distribution does not.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t reject_below = (-n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= reject_below) return r % n;
  }
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::vector<double> DescriptorSpec::centers() const {
  std::vector<double> mu(static_cast<std::size_t>(n_radial));
  for (int k = 0; k < n_radial; ++k)
    mu[static_cast<std::size_t>(k)] = r_cut * k / (n_radial - 1);
  return mu;
}

void DescriptorSpec::validate() const {
  if (!(r_cut > 0.0) || !std::isfinite(r_cut))
    throw Error("domain", "descriptor r_cut must be positive");
  if (n_radial < 2) throw Error("domain", "descriptor needs n_radial >= 2");
  if (!(ell > 0.0) || !std::isfinite(ell))
    throw Error("domain", "descriptor ell must be positive");
  std::vector<int> ids = species_list;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw Error("domain", "descriptor species_list has duplicates");
}

nlohmann::json DescriptorSpec::to_json() const {
  return {{"r_cut", r_cut},
          {"n_radial", n_radial},
          {"ell", ell},
          {"species_list", species_list}};
}

DescriptorSpec DescriptorSpec::from_json(const nlohmann::json& j) {
  DescriptorSpec spec;
  try {
    spec.r_cut = j.at("r_cut").get<double>();
    spec.n_radial = j.at("n_radial").get<int>();
    spec.ell = j.at("ell").get<double>();
    spec.species_list = j.at("species_list").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("descriptor json: ") + e.what());
  }
  try {
    spec.validate();
  } catch (const Error& e) {
    throw Error("parse", std::string("descriptor json: ") + e.message());
  }
  return spec;
}

Eigen::VectorXd featurize(const Structure& s, const Eigen::Vector3d& point,
                          const DescriptorSpec& spec) {
  spec.validate();
  const std::vector<double> mu = spec.centers();
  const double inv2l2 = 1.0 / (2.0 * spec.ell * spec.ell);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(spec.feature_dim());
  for (const Atom& atom : s.atoms()) {
    const auto slot = std::find(spec.species_list.begin(),
                                spec.species_list.end(), atom.species);
    if (slot == spec.species_list.end()) continue;  // unlisted: no term
    const int base = static_cast<int>(slot - spec.species_list.begin()) *
                     spec.n_radial;
    for (double d : image_distances(s.cell(), atom.pos, point, spec.r_cut))
      for (int k = 0; k < spec.n_radial; ++k) {
        const double dr = d - mu[static_cast<std::size_t>(k)];
        phi[base + k] += std::exp(-dr * dr * inv2l2);
      }
  }
  phi[spec.feature_dim() - 1] = 1.0;
  return phi;
}

std::vector<QuerySample> sample_dataset(const std::vector<SolvedDensity>& data,
                                        const DescriptorSpec& spec,
                                        int n_per_structure,
                                        std::uint64_t seed) {
  spec.validate();
  if (n_per_structure < 1)
    throw Error("domain", "n_per_structure must be >= 1");
  for (const SolvedDensity& e : data)
    if (e.structure == nullptr || e.density == nullptr)
      throw Error("domain", "sample_dataset entry is missing a field");
  std::mt19937_64 rng(seed);
  std::vector<QuerySample> samples;
  for (const SolvedDensity& e : data) {
    const Grid& grid = e.density->grid;
    const double scale = std::max(1.0, e.structure->cell().cwiseAbs().maxCoeff());
    if ((grid.cell - e.structure->cell()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw Error("shape", "density grid does not belong to structure " +
                               e.structure->id());
    const std::int64_t j = grid.size();
    const std::int64_t n = std::min<std::int64_t>(n_per_structure, j);
    std::vector<std::int64_t> idx(static_cast<std::size_t>(j));
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first n entries are a uniform draw without
    // replacement.
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t pick =
          i + static_cast<std::int64_t>(
                  bounded(rng, static_cast<std::uint64_t>(j - i)));
      std::swap(idx[static_cast<std::size_t>(i)],
                idx[static_cast<std::size_t>(pick)]);
    }
    samples.reserve(samples.size() + static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      QuerySample q;
      q.grid_index = idx[static_cast<std::size_t>(i)];
      q.source_id = e.structure->id();
      q.features = featurize(*e.structure, grid.point(q.grid_index), spec);
      // Band-limited truth can carry -1e-16-scale ripple; targets are
      // densities, so clamp.
      q.target = std::max(0.0, e.density->values[
          static_cast<std::size_t>(q.grid_index)]);
      samples.push_back(std::move(q));
    }
  }
  return samples;
}

PredictorModel fit(const std::vector<QuerySample>& samples,
                   const DescriptorSpec& spec, double ridge_lambda) {
  spec.validate();
  if (!std::isfinite(ridge_lambda) || ridge_lambda < 0.0)
    throw Error("domain", "ridge_lambda must be finite and >= 0");
  const int dim = spec.feature_dim();
  if (static_cast<std::int64_t>(samples.size()) < dim)
    throw Error("domain", "need at least " + std::to_string(dim) +
                              " samples to fit " + std::to_string(dim) +
                              " weights");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
  std::string manifest;
  for (const QuerySample& q : samples) {
    if (q.features.size() != dim)
      throw Error("shape", "sample feature length " +
                               std::to_string(q.features.size()) +
                               " does not match descriptor dim " +
                               std::to_string(dim));
    if (!q.features.allFinite() || !std::isfinite(q.target) || q.target < 0.0)
      throw Error("domain", "sample from " + q.source_id + " is malformed");
    a.selfadjointView<Eigen::Lower>().rankUpdate(q.features);
    b.noalias() += q.features * q.target;
    manifest += q.source_id;
    manifest += ':';
    manifest += std::to_string(q.grid_index);
    manifest += '\n';
  }
  Eigen::MatrixXd sys = a.selfadjointView<Eigen::Lower>();
  sys.diagonal().head(dim - 1).array() += ridge_lambda;  // bias unpenalized

  PredictorModel model;
  model.spec = spec;
  model.ridge_lambda = ridge_lambda;
  model.manifest_hash = fnv1a_hex(manifest);
  if (ridge_lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys);
    if (qr.rank() < dim)
      throw Error("singular-system",
                  "normal equations are rank deficient; use ridge_lambda > 0");
    model.weights = qr.solve(b);
  } else {
    // lambda > 0 makes the system positive definite: any null vector would
    // have to be pure bias, and the bias column is all ones.
    model.weights = Eigen::LDLT<Eigen::MatrixXd>(sys).solve(b);
  }
  if (!model.weights.allFinite())
    throw Error("numerical", "ridge solve produced non-finite weights");

  double abs_err = 0.0;
  for (const QuerySample& q : samples)
    abs_err += std::abs(model.weights.dot(q.features) - q.target);
  model.train_mae = abs_err / static_cast<double>(samples.size());
  return model;
}

DensityField predict_grid(const Structure& s, const PredictorModel& model,
                          const Grid& grid) {
  model.spec.validate();
  if (model.weights.size() != model.spec.feature_dim())
    throw Error("domain", "model weight length does not match its descriptor");
  for (const Species& sp : s.species_table().entries())
    if (std::find(model.spec.species_list.begin(),
                  model.spec.species_list.end(),
                  sp.id) == model.spec.species_list.end())
      throw Error("coverage", "structure " + s.id() + " contains species " +
                                  std::to_string(sp.id) +
                                  " the model was not trained on");
  DensityField out = DensityField::zeros(grid);
  out.band_limited = false;  // raw pointwise values, not a spectrum
  out.payload.reset();
  parallel_for(grid.size(), [&](std::int64_t begin, std::int64_t end) {
    for (std::int64_t i = begin; i < end; ++i)
      out.values[static_cast<std::size_t>(i)] =
          model.weights.dot(featurize(s, grid.point(i), model.spec));
  });
  return out;
}

double evaluate_mae(const DensityField& prediction, const DensityField& truth) {
  if (!grids_match(prediction.grid, truth.grid))
    throw Error("shape", "prediction and truth are on different grids");
  double total = 0.0;
  const std::int64_t j = prediction.grid.size();
  for (std::int64_t i = 0; i < j; ++i)
    total += std::abs(prediction.values[static_cast<std::size_t>(i)] -
                      truth.values[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(j);
}

nlohmann::json PredictorModel::to_json() const {
  if (!weights.allFinite() || !std::isfinite(train_mae) ||
      !std::isfinite(ridge_lambda))
    throw Error("codec", "model holds non-finite values");
  nlohmann::json j;
  j["descriptor"] = spec.to_json();
  j["ridge_lambda"] = ridge_lambda;
  j["train_mae"] = train_mae;
  j["manifest_hash"] = manifest_hash;
  j["weights"] = std::vector<double>(weights.data(),
                                     weights.data() + weights.size());
  return j;
}

PredictorModel PredictorModel::from_json(const nlohmann::json& j) {
  PredictorModel model;
  try {
    model.spec = DescriptorSpec::from_json(j.at("descriptor"));
    model.ridge_lambda = j.at("ridge_lambda").get<double>();
    model.train_mae = j.at("train_mae").get<double>();
    model.manifest_hash = j.at("manifest_hash").get<std::string>();
    const auto w = j.at("weights").get<std::vector<double>>();
    model.weights = Eigen::Map<const Eigen::VectorXd>(
        w.data(), static_cast<Eigen::Index>(w.size()));
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string("model json: ") + e.what());
  }
  if (model.weights.size() != model.spec.feature_dim())
    throw Error("parse", "model json: weight length does not match descriptor");
  if (!model.weights.allFinite() || !std::isfinite(model.ridge_lambda) ||
      model.ridge_lambda < 0.0 || !std::isfinite(model.train_mae))
    throw Error("parse", "model json: non-finite or negative fields");
  return model;
}

void PredictorModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  out << to_json().dump(2) << "\n";
  if (!out.flush()) throw Error("io", "short write to " + path);
}

PredictorModel PredictorModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse", std::string(path) + ": " + e.what());
  }
  return from_json(j);
}

}  // namespace rhobench
