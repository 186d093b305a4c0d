#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "rhobench/core.hpp"

namespace rhobench {

// Radial-Gaussian descriptor of the atomic environment around a grid point.
// For species index z (position in species_list) and radial center
// mu_k = k * r_cut / (n_radial - 1), the feature is
//
//   phi[z * n_radial + k] = sum over atoms of that species and their
//                           periodic images with d <= r_cut of
//                           exp(-(d - mu_k)^2 / (2 ell^2))
//
// and the last entry is a constant bias of 1. Atoms whose species is not in
// species_list contribute nothing: the formula only sums over listed species.
struct DescriptorSpec {
  double r_cut = 6.0;
  int n_radial = 24;
  double ell = 0.25;
  std::vector<int> species_list;

  int feature_dim() const {
    return static_cast<int>(species_list.size()) * n_radial + 1;
  }
  std::vector<double> centers() const;

  // Throws "domain" unless r_cut > 0, n_radial >= 2, ell > 0 and the species
  // list is duplicate-free.
  void validate() const;

  nlohmann::json to_json() const;
  static DescriptorSpec from_json(const nlohmann::json& j);
};

// One supervised pair: descriptor at a grid point plus the converged density
// value there. source_id / grid_index record where the target came from.
struct QuerySample {
  Eigen::VectorXd features;
  double target = 0.0;
  std::string source_id;
  std::int64_t grid_index = 0;
};

// A structure paired with its converged density on the solver grid.
struct SolvedDensity {
  const Structure* structure = nullptr;
  const DensityField* density = nullptr;
};

struct PredictorModel {
  DescriptorSpec spec;
  Eigen::VectorXd weights;
  double ridge_lambda = 0.0;
  double train_mae = 0.0;
  // FNV-1a hash (16 hex digits) of the "source_id:grid_index" lines of the
  // training samples, in training order. Identifies the data a model saw.
  std::string manifest_hash;

  nlohmann::json to_json() const;
  static PredictorModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static PredictorModel load(const std::string& path);
};

// Descriptor vector (length spec.feature_dim()) for one point in the cell.
Eigen::VectorXd featurize(const Structure& s, const Eigen::Vector3d& point,
                          const DescriptorSpec& spec);

// Draws n_per_structure grid points uniformly without replacement from each
// entry (all points when the grid is smaller) and featurizes them. The same
// seed and input order reproduce the exact sample sequence. Tiny negative
// targets (round-trip ripple in band-limited densities) are clamped to zero.
std::vector<QuerySample> sample_dataset(const std::vector<SolvedDensity>& data,
                                        const DescriptorSpec& spec,
                                        int n_per_structure,
                                        std::uint64_t seed);

// Ridge regression via the normal equations; the bias column is never
// penalized. Requires at least feature_dim() samples and ridge_lambda >= 0;
// with ridge_lambda == 0 a rank-deficient system throws "singular-system".
// train_mae is the mean absolute residual over the training samples.
PredictorModel fit(const std::vector<QuerySample>& samples,
                   const DescriptorSpec& spec, double ridge_lambda);

// Raw (un-normalized, possibly negative) predicted density on the grid.
// Throws "coverage" if the structure contains a species the model was not
// trained on. Feed the result to ingest_predicted_density before use.
DensityField predict_grid(const Structure& s, const PredictorModel& model,
                          const Grid& grid);

// Mean absolute pointwise difference; throws "shape" on grid mismatch.
double evaluate_mae(const DensityField& prediction, const DensityField& truth);

}  // namespace rhobench
