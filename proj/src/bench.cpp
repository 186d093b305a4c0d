#include "rhobench/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

#include "rhobench/errors.hpp"
#include "rhobench/parallel.hpp"

namespace rhobench {

namespace {

// Rejection-sampled draw from [0, n): identical sequences on every standard
// library, unlike std::uniform_int_distribution.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t reject_below = (-n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= reject_below) return r % n;
  }
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[bounded(rng, i)]);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Eigen::Matrix3d cubic_cell(double a) {
  return (Eigen::Matrix3d() << a, 0, 0, 0, a, 0, 0, 0, a).finished();
}

// Jitter every coordinate by at most 2% of the lattice constant.
std::vector<Atom> perturb(std::vector<Atom> atoms, double a,
                          std::mt19937_64& rng) {
  for (Atom& atom : atoms)
    for (int c = 0; c < 3; ++c)
      atom.pos[c] += (2.0 * uniform01(rng) - 1.0) * 0.02 * a;
  return atoms;
}

std::string combo_id(const char* prefix, const std::vector<int>& ids) {
  std::string s = prefix;
  for (int id : ids) {
    s += '-';
    s += std::to_string(id);
  }
  return s;
}

// HOMO-LUMO gap; absent when every band is occupied.
std::optional<double> gap_of(const KsOrbitals& orb) {
  int homo = -1, lumo = -1;
  for (Eigen::Index i = 0; i < orb.occupations.size(); ++i) {
    if (orb.occupations[i] > 0.0) homo = static_cast<int>(i);
    else if (lumo < 0) lumo = static_cast<int>(i);
  }
  if (homo < 0 || lumo < 0) return std::nullopt;
  return orb.eigenvalues[lumo] - orb.eigenvalues[homo];
}

// Categories that mean the caller wired the benchmark wrong; everything else
// is a per-structure numerical failure and flags the pair instead.
bool configuration_error(const Error& e) {
  return e.category() == "coverage" || e.category() == "table-miss" ||
         e.category() == "shape" || e.category() == "domain";
}

}  // namespace

std::vector<std::pair<std::string, const std::vector<Structure>*>>
SplitSuite::named() const {
  return {{"train_unary", &train_unary},
          {"train_binary", &train_binary},
          {"val_binary", &val_binary},
          {"test_binary", &test_binary},
          {"test_ternary", &test_ternary}};
}

std::vector<const Structure*> SplitSuite::train() const {
  std::vector<const Structure*> out;
  for (const Structure& s : train_unary) out.push_back(&s);
  for (const Structure& s : train_binary) out.push_back(&s);
  return out;
}

SplitSuite generate_suite(int pool_size, const SuiteCounts& counts,
                          std::uint64_t seed) {
  if (pool_size < 3)
    throw Error("suite-construction", "species pool must have >= 3 members");
  if (counts.train_binary < 0 || counts.val_binary < 0 ||
      counts.test_binary < 0 || counts.test_ternary < 0)
    throw Error("suite-construction", "split counts must be nonnegative");
  const int n_pairs = pool_size * (pool_size - 1) / 2;
  const int n_triples = pool_size * (pool_size - 1) * (pool_size - 2) / 6;
  const int want_pairs =
      counts.train_binary + counts.val_binary + counts.test_binary;
  if (want_pairs > n_pairs)
    throw Error("suite-construction",
                "requested " + std::to_string(want_pairs) +
                    " binary combos but only " + std::to_string(n_pairs) +
                    " exist");
  if (counts.test_ternary > n_triples)
    throw Error("suite-construction",
                "requested " + std::to_string(counts.test_ternary) +
                    " ternary combos but only " + std::to_string(n_triples) +
                    " exist");

  SplitSuite suite;
  suite.seed = seed;
  // Widths stay small enough that every species binds its two electrons well
  // below the cell's free-electron manifold; wider Gaussians turn the crowded
  // motifs metallic and the SCF never settles under integer occupations.
  for (int i = 1; i <= pool_size; ++i) {
    const double sigma = 0.45 + 0.25 * static_cast<double>(i - 1) /
                                    static_cast<double>(pool_size - 1);
    suite.pool.push_back({i, 2.0, sigma});
  }
  auto species_of = [&](int id) -> const Species& {
    return suite.pool[static_cast<std::size_t>(id - 1)];
  };
  auto table_of = [&](const std::vector<int>& ids) {
    std::vector<Species> entries;
    for (int id : ids) entries.push_back(species_of(id));
    return SpeciesTable(entries);
  };

  std::mt19937_64 rng(seed);

  // Unary: one atom, simple cubic. Every species trains.
  for (int i = 1; i <= pool_size; ++i) {
    const double a = 5.2 + 0.8 * species_of(i).sigma;
    std::vector<Atom> atoms = {{Eigen::Vector3d::Zero(), i}};
    suite.train_unary.emplace_back(cubic_cell(a), perturb(atoms, a, rng),
                                   table_of({i}), combo_id("unary", {i}));
  }

  // Binary: CsCl-like motif (corner + body center).
  std::vector<std::array<int, 2>> pairs;
  for (int i = 1; i <= pool_size; ++i)
    for (int j = i + 1; j <= pool_size; ++j) pairs.push_back({i, j});
  shuffle_inplace(pairs, rng);
  auto binary_structure = [&](const std::array<int, 2>& combo) {
    const double a =
        5.6 + 0.45 * (species_of(combo[0]).sigma + species_of(combo[1]).sigma);
    std::vector<Atom> atoms = {
        {Eigen::Vector3d::Zero(), combo[0]},
        {Eigen::Vector3d(0.5 * a, 0.5 * a, 0.5 * a), combo[1]}};
    return Structure(cubic_cell(a), perturb(atoms, a, rng),
                     table_of({combo[0], combo[1]}),
                     combo_id("binary", {combo[0], combo[1]}));
  };
  int next = 0;
  for (int k = 0; k < counts.train_binary; ++k)
    suite.train_binary.push_back(binary_structure(pairs[next++]));
  for (int k = 0; k < counts.val_binary; ++k)
    suite.val_binary.push_back(binary_structure(pairs[next++]));
  for (int k = 0; k < counts.test_binary; ++k)
    suite.test_binary.push_back(binary_structure(pairs[next++]));

  // Ternary: perovskite-like motif (corner + body center + face centers);
  // ternary combos never coincide with the binary train combos. The roomier
  // cell keeps the face-center states below the free-electron manifold, so
  // every combo stays gapped at the zone center.
  std::vector<std::array<int, 3>> triples;
  for (int i = 1; i <= pool_size; ++i)
    for (int j = i + 1; j <= pool_size; ++j)
      for (int k = j + 1; k <= pool_size; ++k) triples.push_back({i, j, k});
  shuffle_inplace(triples, rng);
  for (int t = 0; t < counts.test_ternary; ++t) {
    const std::array<int, 3>& c = triples[static_cast<std::size_t>(t)];
    const double a = 8.4 + 0.3 * (species_of(c[0]).sigma +
                                  species_of(c[1]).sigma +
                                  species_of(c[2]).sigma);
    std::vector<Atom> atoms = {
        {Eigen::Vector3d::Zero(), c[0]},
        {Eigen::Vector3d(0.5 * a, 0.5 * a, 0.5 * a), c[1]},
        {Eigen::Vector3d(0.5 * a, 0.5 * a, 0.0), c[2]},
        {Eigen::Vector3d(0.5 * a, 0.0, 0.5 * a), c[2]},
        {Eigen::Vector3d(0.0, 0.5 * a, 0.5 * a), c[2]}};
    suite.test_ternary.emplace_back(cubic_cell(a), perturb(atoms, a, rng),
                                    table_of({c[0], c[1], c[2]}),
                                    combo_id("ternary", {c[0], c[1], c[2]}));
  }

  // Disjointness is structural (binary combos are partitioned, ternary
  // combos have three elements); assert it anyway on every build.
  std::set<std::vector<int>> train_combos, test_combos;
  for (const Structure& s : suite.train_unary) train_combos.insert(s.combo());
  for (const Structure& s : suite.train_binary) train_combos.insert(s.combo());
  for (const Structure& s : suite.val_binary) train_combos.insert(s.combo());
  for (const Structure& s : suite.test_binary) test_combos.insert(s.combo());
  for (const Structure& s : suite.test_ternary) test_combos.insert(s.combo());
  for (const auto& combo : test_combos)
    if (train_combos.count(combo))
      throw Error("suite-construction",
                  "test combo leaked into the training splits");
  return suite;
}

double s_auc(const std::vector<double>& baseline,
             const std::vector<double>& learned) {
  if (baseline.empty() || learned.empty())
    throw Error("domain", "s-AUC needs two nonempty accuracy series");
  for (double v : baseline)
    if (!std::isfinite(v) || v <= 0.0)
      throw Error("domain", "s-AUC accuracies must be strictly positive");
  for (double v : learned)
    if (!std::isfinite(v) || v <= 0.0)
      throw Error("domain", "s-AUC accuracies must be strictly positive");
  const std::size_t n = std::min(baseline.size(), learned.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(baseline[i]);
    const double ly = std::log(learned[i]);
    num += lx - ly;
    den += std::abs(std::max(lx, ly));
  }
  if (den == 0.0)
    throw Error("undefined-metric",
                "all paired accuracies are exactly 1; the curves carry no "
                "area to compare");
  return num / den;
}

std::optional<double> iteration_savings(const ScfTrace& baseline,
                                        const ScfTrace& learned) {
  if (baseline.converged && learned.converged) {
    const int nb = baseline.iterations_to_converge.value();
    const int nl = learned.iterations_to_converge.value();
    return 100.0 * static_cast<double>(nb - nl) / static_cast<double>(nb);
  }
  if (learned.converged) return 100.0;   // baseline never got there
  if (baseline.converged) return -100.0;  // learned never got there
  return std::nullopt;
}

SavingsSummary summarize_values(const std::string& split,
                                const std::string& metric,
                                const std::vector<double>& values) {
  SavingsSummary s;
  s.split = split;
  s.metric = metric;
  s.n = static_cast<int>(values.size());
  if (values.empty()) return s;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : values) {
    total += v;
    if (v > 0.0) ++s.n_plus;
  }
  s.pct_positive = 100.0 * s.n_plus / s.n;
  s.mean = total / s.n;
  s.median = sorted[static_cast<std::size_t>((s.n - 1) / 2)];
  s.max = sorted.back();
  s.min = sorted.front();
  return s;
}

namespace {

void run_pair(const Structure& s, const std::string& split,
              const PredictorModel& model, const AtomicDensityTable& table,
              const SolverParams& params, ConvergencePair& pair,
              std::optional<ScfResult>& rb, std::optional<ScfResult>& rl) {
  pair.structure_id = s.id();
  pair.split = split;
  const Grid grid = Grid::for_cutoff(s.cell(), params.ecutrho);

  try {
    const DensityField init = acs_density(s, table, grid);
    rb = run_scf(s, params, &init);
  } catch (const Error& e) {
    if (configuration_error(e)) throw;
    pair.flags = "excluded:baseline:" + e.category();
    return;
  }
  pair.baseline_trace = rb->trace;
  pair.baseline_gap = gap_of(rb->orbitals);

  try {
    const DensityField raw = predict_grid(s, model, grid);
    const DensityField init = ingest_predicted_density(raw, s, params);
    rl = run_scf(s, params, &init);
  } catch (const Error& e) {
    if (configuration_error(e)) throw;
    pair.flags = "excluded:learned:" + e.category();
    return;
  }
  pair.learned_trace = rl->trace;
  pair.learned_gap = gap_of(rl->orbitals);

  try {
    pair.s_auc_value =
        s_auc(pair.baseline_trace.accuracies, pair.learned_trace.accuracies);
  } catch (const Error& e) {
    pair.flags = "excluded:metric:" + e.category();
    return;
  }
  pair.iter_savings_pct =
      iteration_savings(pair.baseline_trace, pair.learned_trace);
}

ConvergencePair bench_one(const Structure& s, const std::string& split,
                          const PredictorModel& model,
                          const AtomicDensityTable& table,
                          const SolverParams& params, const PairSink& sink) {
  ConvergencePair pair;
  std::optional<ScfResult> rb, rl;
  run_pair(s, split, model, table, params, pair, rb, rl);
  if (sink) sink(pair, rb ? &*rb : nullptr, rl ? &*rl : nullptr);
  return pair;
}

}  // namespace

BenchmarkResult run_benchmark(const SplitSuite& suite,
                              const PredictorModel& model,
                              const AtomicDensityTable& table,
                              const SolverParams& params,
                              const PairSink& sink) {
  params.validate();
  std::vector<std::pair<std::string, const Structure*>> jobs;
  for (const auto& [name, members] : suite.named())
    for (const Structure& s : *members) jobs.emplace_back(name, &s);

  BenchmarkResult out;
  out.pairs.resize(jobs.size());
  // Pairs are independent; summaries are aggregated after the join below.
  parallel_for(static_cast<std::int64_t>(jobs.size()),
               [&](std::int64_t begin, std::int64_t end) {
                 for (std::int64_t i = begin; i < end; ++i) {
                   const auto& [name, s] = jobs[static_cast<std::size_t>(i)];
                   out.pairs[static_cast<std::size_t>(i)] =
                       bench_one(*s, name, model, table, params, sink);
                 }
               });

  for (const auto& [name, members] : suite.named()) {
    if (members->empty()) continue;
    std::vector<double> aucs, savings;
    int excluded = 0;
    for (const ConvergencePair& pair : out.pairs) {
      if (pair.split != name) continue;
      if (pair.excluded()) {
        ++excluded;
        continue;
      }
      aucs.push_back(pair.s_auc_value);
      if (pair.iter_savings_pct) savings.push_back(*pair.iter_savings_pct);
    }
    out.summaries.push_back(summarize_values(name, "s_auc", aucs));
    out.summaries.push_back(
        summarize_values(name, "iter_savings_pct", savings));
    out.excluded[name] = excluded;
  }
  return out;
}

EnergyBiasReport validate_energy_bias(
    const std::vector<ConvergencePair>& pairs) {
  EnergyBiasReport r;
  double total = 0.0;
  int n_nonzero = 0;
  for (const ConvergencePair& p : pairs) {
    if (p.excluded() || !p.baseline_trace.converged ||
        !p.learned_trace.converged) {
      ++r.n_skipped;
      continue;
    }
    const double eb = p.baseline_trace.final_energy;
    const double el = p.learned_trace.final_energy;
    const double rel =
        eb == 0.0 ? std::abs(el - eb) : std::abs(el - eb) / std::abs(eb);
    r.rel_diffs.emplace_back(p.structure_id, rel);
    if (rel == 0.0) {
      ++r.n_exact_zero;
    } else {
      total += rel;
      ++n_nonzero;
      r.max_nonzero = std::max(r.max_nonzero, rel);
    }
  }
  r.mean_nonzero = n_nonzero > 0 ? total / n_nonzero : 0.0;
  return r;
}

GapReport validate_gaps(const std::vector<ConvergencePair>& pairs) {
  GapReport r;
  double total = 0.0;
  for (const ConvergencePair& p : pairs) {
    if (p.excluded() || !p.baseline_trace.converged ||
        !p.learned_trace.converged || !p.baseline_gap || !p.learned_gap) {
      ++r.n_skipped;
      continue;
    }
    const double diff = std::abs(*p.learned_gap - *p.baseline_gap);
    r.gap_diffs.emplace_back(p.structure_id, diff);
    total += diff;
    r.max = std::max(r.max, diff);
  }
  r.mean = r.gap_diffs.empty() ? 0.0 : total / r.gap_diffs.size();
  return r;
}

void save_pairs_csv(const std::vector<ConvergencePair>& pairs,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  out << "structure_id,split,s_auc,iter_savings_pct,baseline_iters,"
         "learned_iters,e_rel_diff,gap_diff,flags\n";
  for (const ConvergencePair& p : pairs) {
    out << p.structure_id << ',' << p.split << ',';
    if (!p.excluded()) out << fmt(p.s_auc_value);
    out << ',';
    if (p.iter_savings_pct) out << fmt(*p.iter_savings_pct);
    out << ',';
    if (p.baseline_trace.iterations_to_converge)
      out << *p.baseline_trace.iterations_to_converge;
    out << ',';
    if (p.learned_trace.iterations_to_converge)
      out << *p.learned_trace.iterations_to_converge;
    out << ',';
    if (p.baseline_trace.converged && p.learned_trace.converged) {
      const double eb = p.baseline_trace.final_energy;
      const double el = p.learned_trace.final_energy;
      out << fmt(eb == 0.0 ? std::abs(el - eb)
                           : std::abs(el - eb) / std::abs(eb));
    }
    out << ',';
    if (p.baseline_trace.converged && p.learned_trace.converged &&
        p.baseline_gap && p.learned_gap)
      out << fmt(std::abs(*p.learned_gap - *p.baseline_gap));
    out << ',' << p.flags << '\n';
  }
  if (!out.flush()) throw Error("io", "short write to " + path);
}

void save_summary_csv(const std::vector<SavingsSummary>& summaries,
                      const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  out << "split,metric,n,n_plus,pct_positive,mean,median,max,min\n";
  for (const SavingsSummary& s : summaries)
    out << s.split << ',' << s.metric << ',' << s.n << ',' << s.n_plus << ','
        << fmt(s.pct_positive) << ',' << fmt(s.mean) << ',' << fmt(s.median)
        << ',' << fmt(s.max) << ',' << fmt(s.min) << '\n';
  if (!out.flush()) throw Error("io", "short write to " + path);
}

void save_trace_csv(const ConvergencePair& pair, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  out << "iter,baseline_accuracy,baseline_energy,learned_accuracy,"
         "learned_energy\n";
  const std::size_t rows = std::max(pair.baseline_trace.accuracies.size(),
                                    pair.learned_trace.accuracies.size());
  for (std::size_t i = 0; i < rows; ++i) {
    out << (i + 1) << ',';
    if (i < pair.baseline_trace.accuracies.size())
      out << fmt(pair.baseline_trace.accuracies[i]);
    out << ',';
    if (i < pair.baseline_trace.energies.size())
      out << fmt(pair.baseline_trace.energies[i]);
    out << ',';
    if (i < pair.learned_trace.accuracies.size())
      out << fmt(pair.learned_trace.accuracies[i]);
    out << ',';
    if (i < pair.learned_trace.energies.size())
      out << fmt(pair.learned_trace.energies[i]);
    out << '\n';
  }
  if (!out.flush()) throw Error("io", "short write to " + path);
}

namespace {

std::string svg_polyline(const std::vector<double>& series, double x0,
                         double x1, double y0, double y1, double lo_log,
                         double hi_log, std::size_t max_len,
                         const char* style) {
  std::string pts;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double fx = max_len > 1
                          ? static_cast<double>(i) /
                                static_cast<double>(max_len - 1)
                          : 0.5;
    const double lv = std::log10(std::max(series[i], 1e-16));
    const double fy = hi_log > lo_log ? (lv - lo_log) / (hi_log - lo_log) : 0.5;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x0 + fx * (x1 - x0),
                  y1 - fy * (y1 - y0));
    pts += buf;
  }
  return "<polyline fill=\"none\" " + std::string(style) + " points=\"" +
         pts + "\"/>\n";
}

}  // namespace

void save_convergence_svg(const ConvergencePair& pair,
                          const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("io", "cannot open " + path + " for writing");
  const auto& xb = pair.baseline_trace.accuracies;
  const auto& xl = pair.learned_trace.accuracies;
  const double w = 640, h = 400, left = 64, right = 20, top = 44, bottom = 52;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2
      << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"15\">"
      << pair.structure_id << " (" << pair.split << ")</text>\n";
  if (xb.empty() && xl.empty()) {
    out << "<text x=\"" << w / 2 << "\" y=\"" << h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">no trace data</text>\n</svg>\n";
    if (!out.flush()) throw Error("io", "short write to " + path);
    return;
  }
  double lo = 1e9, hi = -1e9;
  const std::size_t max_len = std::max(xb.size(), xl.size());
  for (const auto* series : {&xb, &xl})
    for (double v : *series) {
      const double lv = std::log10(std::max(v, 1e-16));
      lo = std::min(lo, lv);
      hi = std::max(hi, lv);
    }
  const double lo_log = std::floor(lo) - 0.2, hi_log = std::ceil(hi) + 0.2;
  const double x0 = left, x1 = w - right, y0 = top, y1 = h - bottom;
  // decade gridlines with labels
  for (int d = static_cast<int>(std::ceil(lo_log));
       d <= static_cast<int>(std::floor(hi_log)); ++d) {
    const double fy = (d - lo_log) / (hi_log - lo_log);
    const double y = y1 - fy * (y1 - y0);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#dddddd\"/>\n"
                  "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\" "
                  "font-family=\"sans-serif\" font-size=\"11\">1e%d</text>\n",
                  x0, y, x1, y, x0 - 6.0, y + 4.0, d);
    out << buf;
  }
  out << "<line x1=\"" << x0 << "\" y1=\"" << y1 << "\" x2=\"" << x1
      << "\" y2=\"" << y1 << "\" stroke=\"#333333\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0
      << "\" y2=\"" << y1 << "\" stroke=\"#333333\"/>\n";
  out << svg_polyline(xb, x0, x1, y0, y1, lo_log, hi_log, max_len,
                      "stroke=\"#c0392b\" stroke-width=\"2\"");
  out << svg_polyline(xl, x0, x1, y0, y1, lo_log, hi_log, max_len,
                      "stroke=\"#2a6fbb\" stroke-width=\"2\" "
                      "stroke-dasharray=\"6 4\"");
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << h - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">SCF iteration</text>\n"
      << "<text x=\"18\" y=\"" << (y0 + y1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 18 "
      << (y0 + y1) / 2 << ")\">accuracy (Ha)</text>\n"
      << "<text x=\"" << x1 - 8 << "\" y=\"" << y0 + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
         "fill=\"#c0392b\">baseline</text>\n"
      << "<text x=\"" << x1 - 8 << "\" y=\"" << y0 + 18
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
         "fill=\"#2a6fbb\">learned</text>\n</svg>\n";
  if (!out.flush()) throw Error("io", "short write to " + path);
}

}  // namespace rhobench
