// Pipeline driver: gen / train / predict / bench / validate / project.
//
// Exit codes: 0 success, 2 usage (bad flags, missing inputs), 1 pipeline
// failure. Failures print exactly one "error:<category>:<message>" line on
// stderr. All outputs are deterministic for fixed inputs and seeds, so two
// identical invocations produce hash-identical directories; RHOBENCH_THREADS
// only changes scheduling, never file contents.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rhobench/bench.hpp"
#include "rhobench/core.hpp"
#include "rhobench/densio.hpp"
#include "rhobench/errors.hpp"
#include "rhobench/initdens.hpp"
#include "rhobench/parallel.hpp"
#include "rhobench/predictor.hpp"
#include "rhobench/solver.hpp"

namespace fs = std::filesystem;
using namespace rhobench;
using nlohmann::json;

namespace {

// Distinguishes bad invocations (exit 2) from pipeline failures (exit 1).
struct UsageFailure {
  std::string message;
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path))
    throw UsageFailure{"missing " + what + " file " + path};
}

void require_dir(const std::string& path, const std::string& what) {
  if (!fs::is_directory(path))
    throw UsageFailure{"missing " + what + " directory " + path};
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

json load_json(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + what + " " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("parse", path + ": " + e.what());
  }
  return j;
}

void dump_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw Error("io", "short write to " + path);
}

// ---------------------------------------------------------------------------
// Suite directory layout (written by gen, read by train/bench):
//   suite.json            pool, counts, seed, solver/table parameters, splits
//   structures/<id>.json  every structure of every split
//   truths/<id>.rho       converged ground-truth density, train split only
//   tables/               atomic radial tables (index.json + per-species CSV)

struct SuiteConfig {
  int pool = 0;
  std::uint64_t seed = 0;
  SuiteCounts counts;
  SolverParams solver;
  TableParams table;
};

json counts_to_json(const SuiteCounts& c) {
  return json{{"train_binary", c.train_binary},
              {"val_binary", c.val_binary},
              {"test_binary", c.test_binary},
              {"test_ternary", c.test_ternary}};
}

json splits_to_json(const SplitSuite& suite) {
  json splits = json::object();
  for (const auto& [name, members] : suite.named()) {
    json ids = json::array();
    for (const Structure& s : *members) ids.push_back(s.id());
    splits[name] = ids;
  }
  return splits;
}

void write_suite_manifest(const std::string& dir, const SuiteConfig& cfg,
                          const SplitSuite& suite) {
  json j;
  j["format"] = "rhobench-suite-1";
  j["seed"] = cfg.seed;
  j["pool"] = json::array();
  for (const Species& sp : suite.pool)
    j["pool"].push_back(
        json{{"id", sp.id}, {"z_val", sp.z_val}, {"sigma", sp.sigma}});
  j["counts"] = counts_to_json(cfg.counts);
  j["solver"] = cfg.solver.to_json();
  j["table_params"] = json{{"cell_side", cfg.table.cell_side},
                           {"n_points", cfg.table.n_points},
                           {"outer_radius", cfg.table.outer_radius},
                           {"taper_start", cfg.table.taper_start},
                           {"taper_end", cfg.table.taper_end}};
  j["splits"] = splits_to_json(suite);
  dump_json(j, dir + "/suite.json");
}

struct LoadedSuite {
  SplitSuite suite;
  SolverParams solver;
};

LoadedSuite load_suite(const std::string& dir) {
  const json j = load_json(dir + "/suite.json", "suite manifest");
  if (j.value("format", "") != "rhobench-suite-1")
    throw Error("parse", dir + "/suite.json: not a rhobench suite manifest");
  LoadedSuite out;
  out.solver = SolverParams::from_json(j.at("solver"));
  out.suite.seed = j.at("seed").get<std::uint64_t>();
  for (const json& sp : j.at("pool"))
    out.suite.pool.push_back({sp.at("id").get<int>(),
                              sp.at("z_val").get<double>(),
                              sp.at("sigma").get<double>()});
  const json& splits = j.at("splits");
  const auto load_split = [&](const char* name, std::vector<Structure>& dst) {
    for (const json& id : splits.at(name)) {
      const std::string path =
          dir + "/structures/" + id.get<std::string>() + ".json";
      if (!fs::is_regular_file(path))
        throw Error("io", "suite manifest names missing structure " + path);
      dst.push_back(Structure::load(path));
    }
  };
  load_split("train_unary", out.suite.train_unary);
  load_split("train_binary", out.suite.train_binary);
  load_split("val_binary", out.suite.val_binary);
  load_split("test_binary", out.suite.test_binary);
  load_split("test_ternary", out.suite.test_ternary);
  return out;
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const SuiteConfig& cfg, const std::string& out_dir) {
  cfg.solver.validate();
  const SplitSuite suite = generate_suite(cfg.pool, cfg.counts, cfg.seed);

  fs::create_directories(out_dir + "/structures");
  fs::create_directories(out_dir + "/truths");
  fs::create_directories(out_dir + "/tables");

  int n_structures = 0;
  for (const auto& [name, members] : suite.named())
    for (const Structure& s : *members) {
      s.save(out_dir + "/structures/" + s.id() + ".json");
      ++n_structures;
    }

  // Single-atom table runs are independent; the table assembly below is a
  // deterministic reduction over species id.
  std::vector<RadialProfile> profiles(suite.pool.size());
  parallel_for(static_cast<std::int64_t>(suite.pool.size()),
               [&](std::int64_t begin, std::int64_t end) {
                 for (std::int64_t i = begin; i < end; ++i)
                   profiles[static_cast<std::size_t>(i)] = build_atomic_table(
                       suite.pool[static_cast<std::size_t>(i)], cfg.solver,
                       cfg.table);
               });
  std::map<int, RadialProfile> by_id;
  for (std::size_t i = 0; i < suite.pool.size(); ++i)
    by_id[suite.pool[i].id] = profiles[i];
  const AtomicDensityTable table{by_id};
  save_atomic_tables(out_dir + "/tables", table);

  // Ground truths start from the Gaussian superposition guess, not the ACS
  // tables, so the training targets carry no dependence on table quality.
  const std::vector<const Structure*> train = suite.train();
  std::vector<std::string> failed(train.size());
  parallel_for(
      static_cast<std::int64_t>(train.size()),
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
          const Structure& s = *train[static_cast<std::size_t>(i)];
          const ScfResult r = run_scf(s, cfg.solver);
          if (!r.trace.converged) {
            failed[static_cast<std::size_t>(i)] = s.id();
            continue;
          }
          write_reciprocal(r.density, s.cell(), cfg.solver.ecutrho,
                           out_dir + "/truths/" + s.id() + ".rho");
        }
      });
  for (const std::string& id : failed)
    if (!id.empty())
      throw Error("non-convergence",
                  "ground-truth SCF for " + id + " did not converge");

  // Manifest last: its presence marks a complete data directory.
  write_suite_manifest(out_dir, cfg, suite);

  std::printf("suite %s pool %d seed %llu structures %d truths %zu\n",
              out_dir.c_str(), cfg.pool,
              static_cast<unsigned long long>(cfg.seed), n_structures,
              train.size());
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  double r_cut = 6.0;
  int n_radial = 24;
  double ridge_lambda = 1e-6;
  int n_per = 400;
  std::uint64_t seed = 0;
};

int cmd_train(const std::string& data_dir, const std::string& out_path,
              const TrainOptions& opt) {
  require_dir(data_dir, "data");
  require_file(data_dir + "/suite.json", "suite manifest");
  const LoadedSuite loaded = load_suite(data_dir);

  const std::vector<const Structure*> train = loaded.suite.train();
  std::vector<DensityField> truths;
  truths.reserve(train.size());
  for (const Structure* s : train) {
    const std::string path = data_dir + "/truths/" + s->id() + ".rho";
    if (!fs::is_regular_file(path))
      throw Error("io", "missing ground-truth density " + path);
    const Grid grid = Grid::for_cutoff(s->cell(), loaded.solver.ecutrho);
    truths.push_back(read_reciprocal(path, grid));
  }
  std::vector<SolvedDensity> data;
  for (std::size_t i = 0; i < train.size(); ++i)
    data.push_back({train[i], &truths[i]});

  DescriptorSpec spec;
  spec.r_cut = opt.r_cut;
  spec.n_radial = opt.n_radial;
  for (const Species& sp : loaded.suite.pool) spec.species_list.push_back(sp.id);
  spec.validate();

  const std::vector<QuerySample> samples =
      sample_dataset(data, spec, opt.n_per, opt.seed);
  const PredictorModel model = fit(samples, spec, opt.ridge_lambda);
  model.save(out_path);

  std::printf("model %s features %d samples %zu train_mae %.6e manifest %s\n",
              out_path.c_str(), spec.feature_dim(), samples.size(),
              model.train_mae, model.manifest_hash.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const std::string& model_path, const std::string& structure_path,
                const std::string& out_path, double ecutrho) {
  require_file(model_path, "model");
  require_file(structure_path, "structure");
  const PredictorModel model = PredictorModel::load(model_path);
  const Structure s = Structure::load(structure_path);

  SolverParams params;
  params.ecutrho = ecutrho;
  params.ecutwfc = ecutrho / 4.0;
  params.validate();

  const Grid grid = Grid::for_cutoff(s.cell(), params.ecutrho);
  const DensityField raw = predict_grid(s, model, grid);
  // The ingested field is nonnegative and integrates to the electron count,
  // so the file is directly usable as an SCF initial guess.
  const DensityField rho = ingest_predicted_density(raw, s, params);
  write_realspace(rho, out_path);

  std::printf("density %s grid %dx%dx%d integral %.12g\n", out_path.c_str(),
              grid.dims[0], grid.dims[1], grid.dims[2], rho.integral());
  return 0;
}

// ---------------------------------------------------------------------------
// bench

json side_to_json(const ScfTrace& trace, const std::optional<double>& gap) {
  json j;
  j["converged"] = trace.converged;
  j["iterations"] = trace.iterations_to_converge
                        ? json(*trace.iterations_to_converge)
                        : json(nullptr);
  j["final_energy"] = trace.final_energy;
  j["gap"] = gap ? json(*gap) : json(nullptr);
  return j;
}

void write_pairs_manifest(const std::vector<ConvergencePair>& pairs,
                          const std::string& path) {
  json j;
  j["format"] = "rhobench-pairs-1";
  j["pairs"] = json::array();
  for (const ConvergencePair& p : pairs) {
    json e;
    e["structure_id"] = p.structure_id;
    e["split"] = p.split;
    e["flags"] = p.flags;
    e["s_auc"] = p.excluded() ? json(nullptr) : json(p.s_auc_value);
    e["iter_savings_pct"] =
        p.iter_savings_pct ? json(*p.iter_savings_pct) : json(nullptr);
    e["baseline"] = side_to_json(p.baseline_trace, p.baseline_gap);
    e["learned"] = side_to_json(p.learned_trace, p.learned_gap);
    j["pairs"].push_back(e);
  }
  dump_json(j, path);
}

int cmd_bench(const std::string& data_dir, const std::string& model_path,
              const std::string& out_parent) {
  require_dir(data_dir, "data");
  require_file(data_dir + "/suite.json", "suite manifest");
  require_file(model_path, "model");
  require_dir(data_dir + "/tables", "atomic-table");

  const LoadedSuite loaded = load_suite(data_dir);
  const PredictorModel model = PredictorModel::load(model_path);
  const AtomicDensityTable table = load_atomic_tables(data_dir + "/tables");

  const std::string run_dir = out_parent + "/run-seed" +
                              std::to_string(loaded.suite.seed) + "-" +
                              model.manifest_hash;
  fs::create_directories(run_dir + "/structures");
  fs::create_directories(run_dir + "/densities");
  fs::create_directories(run_dir + "/traces");

  // Converged endpoint densities land next to the metrics so a validate run
  // can restart from them without the original data directory.
  const double ecutrho = loaded.solver.ecutrho;
  const auto sink = [&](const ConvergencePair& pair, const ScfResult* baseline,
                        const ScfResult* learned) {
    const std::string base = run_dir + "/densities/" + pair.structure_id;
    if (baseline && baseline->trace.converged)
      write_reciprocal(baseline->density, baseline->density.grid.cell, ecutrho,
                       base + ".baseline.rho");
    if (learned && learned->trace.converged)
      write_reciprocal(learned->density, learned->density.grid.cell, ecutrho,
                       base + ".learned.rho");
  };

  const BenchmarkResult result =
      run_benchmark(loaded.suite, model, table, loaded.solver, sink);

  for (const auto& [name, members] : loaded.suite.named())
    for (const Structure& s : *members)
      s.save(run_dir + "/structures/" + s.id() + ".json");
  save_pairs_csv(result.pairs, run_dir + "/pairs.csv");
  save_summary_csv(result.summaries, run_dir + "/summary.csv");
  write_pairs_manifest(result.pairs, run_dir + "/pairs.json");
  for (const ConvergencePair& p : result.pairs) {
    save_trace_csv(p, run_dir + "/traces/" + p.structure_id + ".csv");
    save_convergence_svg(p, run_dir + "/traces/" + p.structure_id + ".svg");
  }

  json run;
  run["format"] = "rhobench-run-1";
  run["suite_seed"] = loaded.suite.seed;
  run["model_hash"] = model.manifest_hash;
  run["solver"] = loaded.solver.to_json();
  run["splits"] = splits_to_json(loaded.suite);
  json excluded = json::object();
  for (const auto& [split, n] : result.excluded) excluded[split] = n;
  run["excluded"] = excluded;
  dump_json(run, run_dir + "/run.json");

  std::printf("run_dir %s\n", run_dir.c_str());
  for (const SavingsSummary& s : result.summaries)
    std::printf("summary %s %s n %d positive %.1f%% mean %.4g median %.4g\n",
                s.split.c_str(), s.metric.c_str(), s.n, s.pct_positive, s.mean,
                s.median);
  return 0;
}

// ---------------------------------------------------------------------------
// validate

std::vector<ConvergencePair> load_pairs_manifest(const std::string& path) {
  const json j = load_json(path, "pairs manifest");
  if (j.value("format", "") != "rhobench-pairs-1")
    throw Error("parse", path + ": not a rhobench pairs manifest");
  std::vector<ConvergencePair> pairs;
  for (const json& e : j.at("pairs")) {
    ConvergencePair p;
    p.structure_id = e.at("structure_id").get<std::string>();
    p.split = e.at("split").get<std::string>();
    p.flags = e.at("flags").get<std::string>();
    const auto side = [](const json& js, ScfTrace& trace,
                         std::optional<double>& gap) {
      trace.converged = js.at("converged").get<bool>();
      trace.final_energy = js.at("final_energy").get<double>();
      if (!js.at("gap").is_null()) gap = js.at("gap").get<double>();
    };
    side(e.at("baseline"), p.baseline_trace, p.baseline_gap);
    side(e.at("learned"), p.learned_trace, p.learned_gap);
    pairs.push_back(p);
  }
  return pairs;
}

// Restart thresholds mirror the codec contract: a converged density written
// through the reciprocal codec and read back must restart in at most two
// iterations and land on the same energy to 1e-10 relative.
constexpr int kRestartMaxIters = 2;
constexpr double kRestartEnergyTol = 1e-10;
constexpr double kEnergyBiasTol = 1e-8;
constexpr double kGapTol = 1e-6;

struct RoundTrip {
  std::string file;
  bool ok = false;
  int iterations = 0;
  double energy_rel_diff = 0.0;
};

int cmd_validate(const std::string& run_dir) {
  require_dir(run_dir, "run");
  require_file(run_dir + "/run.json", "run manifest");
  require_file(run_dir + "/pairs.json", "pairs manifest");

  const json run = load_json(run_dir + "/run.json", "run manifest");
  if (run.value("format", "") != "rhobench-run-1")
    throw Error("parse", run_dir + "/run.json: not a rhobench run manifest");
  const SolverParams params = SolverParams::from_json(run.at("solver"));
  const std::vector<ConvergencePair> pairs =
      load_pairs_manifest(run_dir + "/pairs.json");

  int failures = 0;

  const EnergyBiasReport energy = validate_energy_bias(pairs);
  std::printf("energy_bias pairs %zu skipped %d exact_zero %d mean %.3e max %.3e\n",
              energy.rel_diffs.size(), energy.n_skipped, energy.n_exact_zero,
              energy.mean_nonzero, energy.max_nonzero);
  for (const auto& [id, rel] : energy.rel_diffs)
    if (rel > kEnergyBiasTol) {
      std::printf("fail energy_bias %s %.3e\n", id.c_str(), rel);
      ++failures;
    }

  const GapReport gaps = validate_gaps(pairs);
  std::printf("gaps pairs %zu skipped %d mean %.3e max %.3e\n",
              gaps.gap_diffs.size(), gaps.n_skipped, gaps.mean, gaps.max);
  for (const auto& [id, diff] : gaps.gap_diffs)
    if (diff > kGapTol) {
      std::printf("fail gap %s %.3e\n", id.c_str(), diff);
      ++failures;
    }

  // Round trip: every converged endpoint density restarts from its file.
  std::vector<std::pair<std::string, double>> jobs;  // file stem, energy
  for (const ConvergencePair& p : pairs) {
    const std::string base = run_dir + "/densities/" + p.structure_id;
    if (p.baseline_trace.converged)
      jobs.emplace_back(p.structure_id + ".baseline",
                        p.baseline_trace.final_energy);
    if (p.learned_trace.converged)
      jobs.emplace_back(p.structure_id + ".learned",
                        p.learned_trace.final_energy);
  }
  std::vector<RoundTrip> trips(jobs.size());
  parallel_for(
      static_cast<std::int64_t>(jobs.size()),
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) {
          const auto& [stem, recorded] = jobs[static_cast<std::size_t>(i)];
          RoundTrip& t = trips[static_cast<std::size_t>(i)];
          t.file = stem;
          const std::string id = stem.substr(0, stem.find_last_of('.'));
          const Structure s =
              Structure::load(run_dir + "/structures/" + id + ".json");
          const Grid grid = Grid::for_cutoff(s.cell(), params.ecutrho);
          const DensityField rho = read_reciprocal(
              run_dir + "/densities/" + stem + ".rho", grid);
          const ScfResult restart = run_scf(s, params, &rho);
          t.iterations = restart.trace.iterations_to_converge
                             ? *restart.trace.iterations_to_converge
                             : params.max_iter;
          t.energy_rel_diff =
              std::abs(restart.trace.final_energy - recorded) /
              std::abs(recorded);
          t.ok = restart.trace.converged && t.iterations <= kRestartMaxIters &&
                 t.energy_rel_diff <= kRestartEnergyTol;
        }
      });

  int pass = 0;
  int max_iters = 0;
  double max_rel = 0.0;
  for (const RoundTrip& t : trips) {
    if (t.ok) {
      ++pass;
    } else {
      std::printf("fail round_trip %s iters %d energy_rel %.3e\n",
                  t.file.c_str(), t.iterations, t.energy_rel_diff);
      ++failures;
    }
    max_iters = std::max(max_iters, t.iterations);
    max_rel = std::max(max_rel, t.energy_rel_diff);
  }
  std::printf("round_trip files %zu pass %d max_iters %d max_energy_rel %.3e\n",
              trips.size(), pass, max_iters, max_rel);

  if (failures > 0)
    throw Error("validation", std::to_string(failures) + " checks failed");
  std::printf("validate PASS\n");
  return 0;
}

// ---------------------------------------------------------------------------
// project

DensityField load_density_any(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open density file " + path);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  if (in.gcount() != 4) throw Error("parse", path + ": truncated header");
  const std::string tag(magic, 4);
  if (tag == "RHR1") return read_realspace(path);
  if (tag != "RHO1") throw Error("parse", path + ": unknown density format");

  // RHO1 carries its own grid: dims u32 x3 at offset 4, cell f64 x9 at 16.
  std::uint32_t dims[3];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  double cell[9];
  in.read(reinterpret_cast<char*>(cell), sizeof cell);
  if (!in) throw Error("parse", path + ": truncated header");
  Grid grid;
  grid.dims = {static_cast<int>(dims[0]), static_cast<int>(dims[1]),
               static_cast<int>(dims[2])};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) grid.cell(r, c) = cell[3 * r + c];
  return read_reciprocal(path, grid);
}

int cmd_project(const std::string& density_path, const std::string& out_path) {
  require_file(density_path, "density");
  const DensityField field = load_density_any(density_path);
  const Projection proj = project_density(field);
  save_projection_pgm(proj, out_path);
  save_projection_csv(proj, out_path + ".csv");
  std::printf("projection %s size %dx%d csv %s.csv\n", out_path.c_str(),
              proj.n, proj.n, out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plane-wave SCF benchmark pipeline"};
  app.require_subcommand(1);

  SuiteConfig cfg;
  cfg.pool = 8;
  cfg.seed = 7;
  cfg.solver.mixing = Mixing::anderson;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen",
                                 "generate a split suite with ground-truth "
                                 "densities and atomic tables");
  gen->add_option("--pool", cfg.pool, "species pool size")->required();
  gen->add_option("--seed", cfg.seed, "suite RNG seed")->required();
  gen->add_option("--out", gen_out, "output data directory")->required();
  gen->add_option("--train-binary", cfg.counts.train_binary);
  gen->add_option("--val-binary", cfg.counts.val_binary);
  gen->add_option("--test-binary", cfg.counts.test_binary);
  gen->add_option("--test-ternary", cfg.counts.test_ternary);
  gen->add_option("--ecutwfc", cfg.solver.ecutwfc);
  gen->add_option("--ecutrho", cfg.solver.ecutrho);
  gen->add_option("--conv-thr", cfg.solver.conv_thr);
  gen->add_option("--max-iter", cfg.solver.max_iter);
  std::string mixing = "anderson";
  gen->add_option("--mixing", mixing)
      ->check(CLI::IsMember({"linear", "anderson"}));
  gen->add_option("--table-cell", cfg.table.cell_side);
  gen->add_option("--table-points", cfg.table.n_points);
  gen->add_option("--table-outer", cfg.table.outer_radius);
  gen->add_option("--table-taper-start", cfg.table.taper_start);
  gen->add_option("--table-taper-end", cfg.table.taper_end);

  std::string train_data, train_out;
  TrainOptions topt;
  auto* train = app.add_subcommand("train",
                                   "fit the pointwise density predictor on a "
                                   "generated suite");
  train->add_option("--data", train_data, "data directory from gen")->required();
  train->add_option("--out", train_out, "model JSON path")->required();
  train->add_option("--rcut", topt.r_cut, "descriptor cutoff radius (bohr)");
  train->add_option("--nradial", topt.n_radial, "radial features per species");
  train->add_option("--lambda", topt.ridge_lambda, "ridge strength");
  train->add_option("--nper", topt.n_per, "sampled grid points per structure");
  train->add_option("--seed", topt.seed, "sampling seed");

  std::string pred_model, pred_structure, pred_out;
  double pred_ecutrho = 32.0;
  auto* predict = app.add_subcommand("predict",
                                     "write the model's density for one "
                                     "structure, normalized for SCF use");
  predict->add_option("--model", pred_model)->required();
  predict->add_option("--structure", pred_structure)->required();
  predict->add_option("--out", pred_out)->required();
  predict->add_option("--ecutrho", pred_ecutrho, "density grid cutoff");

  std::string bench_data, bench_model, bench_out = ".";
  auto* bench = app.add_subcommand("bench",
                                   "run baseline and learned-initialization "
                                   "SCF over a suite and write the run dir");
  bench->add_option("--data", bench_data)->required();
  bench->add_option("--model", bench_model)->required();
  bench->add_option("--out", bench_out, "parent of the created run directory");

  std::string validate_run;
  auto* validate = app.add_subcommand("validate",
                                      "check energy bias, gaps, and codec "
                                      "round-trip restarts for a run dir");
  validate->add_option("--run", validate_run)->required();

  std::string proj_density, proj_out;
  auto* project = app.add_subcommand("project",
                                     "axis-sum a density file to a CSV matrix "
                                     "and grayscale image");
  project->add_option("--density", proj_density)->required();
  project->add_option("--out", proj_out, "image path; CSV lands at <out>.csv")
      ->required();

  int rc = 0;
  gen->callback([&] {
    cfg.solver.mixing = mixing == "linear" ? Mixing::linear : Mixing::anderson;
    rc = cmd_gen(cfg, gen_out);
  });
  train->callback([&] { rc = cmd_train(train_data, train_out, topt); });
  predict->callback(
      [&] { rc = cmd_predict(pred_model, pred_structure, pred_out, pred_ecutrho); });
  bench->callback([&] { rc = cmd_bench(bench_data, bench_model, bench_out); });
  validate->callback([&] { rc = cmd_validate(validate_run); });
  project->callback([&] { rc = cmd_project(proj_density, proj_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {  // --help / --version
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error:usage:" << one_line(e.what()) << "\n";
    return 2;
  } catch (const UsageFailure& e) {
    std::cerr << "error:usage:" << one_line(e.message) << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error:" << e.category() << ":" << one_line(e.message())
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error:internal:" << one_line(e.what()) << "\n";
    return 1;
  }
  return rc;
}
