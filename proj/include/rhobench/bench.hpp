#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rhobench/core.hpp"
#include "rhobench/initdens.hpp"
#include "rhobench/predictor.hpp"
#include "rhobench/solver.hpp"

namespace rhobench {

// How many element combinations each binary/ternary split receives. Every
// species in the pool always gets one unary training structure, so test
// species are never unseen.
struct SuiteCounts {
  int train_binary = 14;
  int val_binary = 4;
  int test_binary = 10;
  int test_ternary = 10;
};

struct SplitSuite {
  std::vector<Species> pool;  // ordered ids; sigma grows with the id
  std::vector<Structure> train_unary;
  std::vector<Structure> train_binary;
  std::vector<Structure> val_binary;
  std::vector<Structure> test_binary;
  std::vector<Structure> test_ternary;
  std::uint64_t seed = 0;

  // Split-name -> members, in the fixed emission order above.
  std::vector<std::pair<std::string, const std::vector<Structure>*>> named()
      const;
  std::vector<const Structure*> train() const;  // unary + binary
};

// Builds toy structures: unary simple-cubic, binary CsCl-like, ternary
// perovskite-like, each with seeded positional jitter of at most 2% of the
// lattice constant. Binary combos are partitioned across train/val/test, so
// no test combo ever appears in training; ternary combos are test-only.
// Deterministic: the same arguments reproduce every structure byte-for-byte.
// Throws "suite-construction" when pool_size < 3 or the requested counts
// exceed the available combinations.
SplitSuite generate_suite(int pool_size, const SuiteCounts& counts,
                          std::uint64_t seed);

// Signed area between two SCF accuracy curves:
//   sum_i [log x_i - log y_i] / sum_i |max(log x_i, log y_i)|, n = min len.
// Positive means the learned curve sits below the baseline. Throws "domain"
// on empty or nonpositive input and "undefined-metric" when the denominator
// is zero (every paired accuracy exactly 1).
double s_auc(const std::vector<double>& baseline,
             const std::vector<double>& learned);

// 100*(n_b - n_l)/n_b when both converged; +/-100 when exactly one side
// converged; absent when neither did.
std::optional<double> iteration_savings(const ScfTrace& baseline,
                                        const ScfTrace& learned);

struct ConvergencePair {
  std::string structure_id;
  std::string split;
  ScfTrace baseline_trace;  // ACS-initialized run
  ScfTrace learned_trace;   // predicted-density-initialized run
  double s_auc_value = 0.0;
  std::optional<double> iter_savings_pct;
  // HOMO-LUMO gaps (hartree) when the run left at least one empty band.
  std::optional<double> baseline_gap;
  std::optional<double> learned_gap;
  std::string flags;  // empty, or "excluded:<stage>:<category>"

  bool excluded() const { return !flags.empty(); }
};

// One row per (split, metric); median of an even-sized list is the
// lower-middle order statistic.
struct SavingsSummary {
  std::string split;
  std::string metric;  // "s_auc" or "iter_savings_pct"
  int n = 0;
  int n_plus = 0;
  double pct_positive = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
  double min = 0.0;
};

SavingsSummary summarize_values(const std::string& split,
                                const std::string& metric,
                                const std::vector<double>& values);

struct BenchmarkResult {
  std::vector<ConvergencePair> pairs;     // suite emission order
  std::vector<SavingsSummary> summaries;  // per populated split, both metrics
  std::map<std::string, int> excluded;    // split -> pairs dropped
};

// Invoked once per pair right after both of its runs finish, from whichever
// worker ran the pair; a side that failed before producing a result is null.
// Calls on distinct pairs may be concurrent, so implementations must only
// touch per-pair state (independent file writes are fine).
using PairSink = std::function<void(const ConvergencePair&,
                                    const ScfResult* baseline,
                                    const ScfResult* learned)>;

// For every suite structure: one SCF from the ACS baseline and one from the
// ingested model prediction, identical parameters, then paired metrics.
// Solver blow-ups (and other numerical failures) on either side flag the
// pair as excluded instead of aborting the run; configuration errors
// ("coverage", "table-miss") still propagate.
BenchmarkResult run_benchmark(const SplitSuite& suite,
                              const PredictorModel& model,
                              const AtomicDensityTable& table,
                              const SolverParams& params,
                              const PairSink& sink = {});

struct EnergyBiasReport {
  // structure id -> |E_learned - E_baseline| / |E_baseline|, converged pairs
  std::vector<std::pair<std::string, double>> rel_diffs;
  int n_exact_zero = 0;
  double mean_nonzero = 0.0;
  double max_nonzero = 0.0;
  int n_skipped = 0;  // pairs without both sides converged
};
EnergyBiasReport validate_energy_bias(const std::vector<ConvergencePair>& pairs);

struct GapReport {
  std::vector<std::pair<std::string, double>> gap_diffs;  // |gap_l - gap_b|
  double mean = 0.0;
  double max = 0.0;
  int n_skipped = 0;  // unconverged or missing an empty band
};
GapReport validate_gaps(const std::vector<ConvergencePair>& pairs);

// pairs.csv: structure_id,split,s_auc,iter_savings_pct,baseline_iters,
// learned_iters,e_rel_diff,gap_diff,flags — absent values are empty fields.
void save_pairs_csv(const std::vector<ConvergencePair>& pairs,
                    const std::string& path);
// summary.csv: split,metric,n,n_plus,pct_positive,mean,median,max,min.
void save_summary_csv(const std::vector<SavingsSummary>& summaries,
                      const std::string& path);
// Per-iteration accuracy/energy series of both runs, padded with blanks.
void save_trace_csv(const ConvergencePair& pair, const std::string& path);
// Log-scale accuracy-vs-iteration plot: baseline solid, learned dashed.
void save_convergence_svg(const ConvergencePair& pair,
                          const std::string& path);

}  // namespace rhobench
