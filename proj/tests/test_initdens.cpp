#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rhobench/core.hpp"
#include "rhobench/errors.hpp"
#include "rhobench/initdens.hpp"
#include "rhobench/solver.hpp"

using namespace rhobench;

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::Matrix3d cubic(double a) {
  return (Eigen::Matrix3d() << a, 0, 0, 0, a, 0, 0, 0, a).finished();
}

std::string category_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  return "";
}

// Gaussian bump tabulated on a uniform radial grid; integral is irrelevant
// for superposition tests because acs_density renormalizes.
RadialProfile gaussian_profile(double width, double outer, int n) {
  std::vector<double> r(static_cast<std::size_t>(n)),
      rho(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto u = static_cast<std::size_t>(k);
    r[u] = outer * k / (n - 1);
    rho[u] = std::exp(-0.5 * r[u] * r[u] / (width * width));
  }
  return RadialProfile(std::move(r), std::move(rho));
}

AtomicDensityTable one_species_table(int id, double width) {
  std::map<int, RadialProfile> profiles;
  profiles.emplace(id, gaussian_profile(width, 3.0, 301));
  return AtomicDensityTable(std::move(profiles));
}

// Reference superposition evaluated directly, before normalization.
double raw_superposition(const Structure& s, const AtomicDensityTable& table,
                         const Eigen::Vector3d& point) {
  double acc = 0.0;
  for (const Atom& atom : s.atoms()) {
    const RadialProfile& prof = table.profile(atom.species);
    for (double d :
         image_distances(s.cell(), atom.pos, point, prof.outer_radius()))
      acc += prof(d);
  }
  return acc;
}

SolverParams table_test_params() {
  SolverParams p;
  p.ecutwfc = 2.0;
  p.ecutrho = 8.0;
  p.conv_thr = 1e-8;
  p.eig_method = EigMethod::iterative;
  p.mixing = Mixing::anderson;
  return p;
}

}  // namespace

TEST_CASE("radial profile interpolation") {
  SUBCASE("passes through knots exactly") {
    RadialProfile prof({0.0, 0.5, 1.25, 2.0}, {4.0, 2.5, 0.5, 0.1});
    CHECK(prof(0.0) == 4.0);
    CHECK(prof(0.5) == 2.5);
    CHECK(prof(1.25) == 0.5);
    CHECK(prof(2.0) == 0.1);
  }

  SUBCASE("reproduces linear data") {
    std::vector<double> r{0.0, 0.4, 1.0, 1.7, 2.0};
    std::vector<double> y(r.size());
    for (std::size_t k = 0; k < r.size(); ++k) y[k] = 3.0 - 0.9 * r[k];
    RadialProfile prof(r, y);
    for (double x : {0.13, 0.4, 0.77, 1.31, 1.99})
      CHECK(std::abs(prof(x) - (3.0 - 0.9 * x)) <= 1e-14);
  }

  SUBCASE("no overshoot on monotone data") {
    RadialProfile prof = gaussian_profile(0.7, 4.0, 21);
    const auto& r = prof.radii();
    const auto& y = prof.values();
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
      for (int s = 1; s < 7; ++s) {
        const double x = r[k] + (r[k + 1] - r[k]) * s / 7.0;
        const double v = prof(x);
        CHECK(v <= y[k] + 1e-15);
        CHECK(v >= y[k + 1] - 1e-15);
      }
    }
  }

  SUBCASE("accurate on a dense smooth table") {
    RadialProfile prof = gaussian_profile(1.0, 6.0, 201);
    for (double x = 0.0; x < 6.0; x += 0.0137) {
      const double want = std::exp(-0.5 * x * x);
      CHECK(std::abs(prof(x) - want) <= 1e-4);
    }
  }

  SUBCASE("zero beyond the outer radius") {
    RadialProfile prof = gaussian_profile(0.7, 3.0, 31);
    CHECK(prof(3.0 + 1e-9) == 0.0);
    CHECK(prof(100.0) == 0.0);
  }

  SUBCASE("charge matches the analytic Gaussian integral") {
    // 4*pi Int exp(-r^2/2w^2) r^2 dr over [0,inf) = (2*pi)^{3/2} w^3; the
    // [0,6w] truncation error is ~1e-7 relative, trapezoid error smaller.
    const double w = 0.8;
    RadialProfile prof = gaussian_profile(w, 6.0 * w, 2001);
    const double want = std::pow(2.0 * kPi, 1.5) * w * w * w;
    CHECK(std::abs(prof.charge() - want) <= 1e-5 * want);
  }

  SUBCASE("rejects malformed tables") {
    CHECK(category_of([] {
            RadialProfile({0.0, 1.0, 0.5}, {1.0, 0.5, 0.2});
          }) == "domain");
    CHECK(category_of([] {
            RadialProfile({0.1, 1.0}, {1.0, 0.5});
          }) == "domain");
    CHECK(category_of([] {
            RadialProfile({0.0, 1.0}, {1.0, -0.5});
          }) == "domain");
    CHECK(category_of([] { RadialProfile({0.0}, {1.0}); }) == "domain");
  }
}

TEST_CASE("spherical average matches the plane-wave closed form") {
  const double a = 6.0;
  Grid grid{{12, 12, 12}, cubic(a)};
  const Eigen::Vector3d center(1.75, 0.5, 3.25);
  const Eigen::Vector3d g0 = 2.0 * kPi / a * Eigen::Vector3d(1, 0, 0);
  const Eigen::Vector3d g1 = 2.0 * kPi / a * Eigen::Vector3d(1, 1, 0);
  const double c0 = 0.37, c1 = 0.11;

  DensityField field = DensityField::zeros(grid);
  for (std::int64_t idx = 0; idx < grid.size(); ++idx) {
    const Eigen::Vector3d r = grid.point(idx);
    field.values[static_cast<std::size_t>(idx)] =
        1.0 + c0 * std::cos(g0.dot(r - center)) +
        c1 * std::cos(g1.dot(r - center));
  }

  std::vector<double> radii{0.0, 0.3, 1.0, 1.7, 2.9};
  auto j0 = [](double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; };

  SUBCASE("centered on the modes") {
    const auto avg = spherical_average(field, center, radii);
    for (std::size_t k = 0; k < radii.size(); ++k) {
      const double want = 1.0 + c0 * j0(g0.norm() * radii[k]) +
                          c1 * j0(g1.norm() * radii[k]);
      CHECK(std::abs(avg[k] - want) <= 1e-12);
    }
  }

  SUBCASE("offset center picks up the mode phase") {
    const Eigen::Vector3d other(0.25, 4.0, 1.0);
    const auto avg = spherical_average(field, other, radii);
    for (std::size_t k = 0; k < radii.size(); ++k) {
      const double want = 1.0 +
                          c0 * std::cos(g0.dot(other - center)) *
                              j0(g0.norm() * radii[k]) +
                          c1 * std::cos(g1.dot(other - center)) *
                              j0(g1.norm() * radii[k]);
      CHECK(std::abs(avg[k] - want) <= 1e-12);
    }
  }
}

TEST_CASE("atomic table construction") {
  const SolverParams params = table_test_params();
  TableParams tp;
  tp.n_points = 400;  // coarse grid keeps the test fast; production uses 2000
  const Species sp{1, 2.0, 0.8};
  // static: doctest re-enters the case once per subcase and the single-atom
  // run is the expensive part.
  static const RadialProfile prof = build_atomic_table(sp, params, tp);

  SUBCASE("radial integral equals the valence charge exactly") {
    CHECK(std::abs(prof.charge() - sp.z_val) <= 1e-12 * sp.z_val);
  }

  SUBCASE("density peaks at the origin and stays nonnegative") {
    const auto& y = prof.values();
    for (double v : y) {
      CHECK(v >= 0.0);
      CHECK(v <= y.front());
    }
    CHECK(y.front() > 0.0);
  }

  SUBCASE("tapers to zero at the table edge") {
    const auto& r = prof.radii();
    const auto& y = prof.values();
    for (std::size_t k = 0; k < r.size(); ++k)
      if (r[k] >= tp.taper_end) CHECK(y[k] == 0.0);
    CHECK(prof(tp.outer_radius) <= 1e-12);
  }

  SUBCASE("same species parameters give bit-identical tables") {
    const Species clone{7, 2.0, 0.8};  // different id, same physics
    const RadialProfile again = build_atomic_table(clone, params, tp);
    REQUIRE(again.values().size() == prof.values().size());
    CHECK(std::memcmp(again.values().data(), prof.values().data(),
                      prof.values().size() * sizeof(double)) == 0);
  }

  SUBCASE("non-convergence is reported as table-build") {
    SolverParams tight = params;
    tight.conv_thr = 1e-13;
    tight.max_iter = 2;
    CHECK(category_of([&] { build_atomic_table(sp, tight, tp); }) ==
          "table-build");
  }

  SUBCASE("malformed table parameters are rejected") {
    TableParams bad = tp;
    bad.cell_side = 12.0;  // cannot span twice the outer radius
    CHECK(category_of([&] { build_atomic_table(sp, params, bad); }) ==
          "domain");
    bad = tp;
    bad.taper_end = bad.outer_radius + 1.0;
    CHECK(category_of([&] { build_atomic_table(sp, params, bad); }) ==
          "domain");
    bad = tp;
    bad.n_points = 1;
    CHECK(category_of([&] { build_atomic_table(sp, params, bad); }) ==
          "domain");
  }
}

TEST_CASE("atomic superposition field") {
  const double a = 8.0;
  Grid grid{{32, 32, 32}, cubic(a)};  // dyadic spacing: shifts are exact

  SUBCASE("single atom matches the direct image sum") {
    Structure s(cubic(a), {{Eigen::Vector3d(2.0, 2.0, 2.0), 1}},
                SpeciesTable({{1, 2.0, 0.8}}), "one");
    const auto table = one_species_table(1, 0.9);
    const DensityField field = acs_density(s, table, grid);

    CHECK(std::abs(field.integral() - s.electron_count()) <=
          1e-12 * s.electron_count());
    CHECK_FALSE(field.band_limited);

    // Undo the normalization to compare against the raw superposition.
    double raw_int = 0.0;
    const double dv = s.volume() / static_cast<double>(grid.size());
    for (std::int64_t idx = 0; idx < grid.size(); ++idx)
      raw_int += dv * raw_superposition(s, table, grid.point(idx));
    const double factor = s.electron_count() / raw_int;
    for (std::int64_t idx = 0; idx < grid.size(); idx += 997) {
      const double want =
          factor * raw_superposition(s, table, grid.point(idx));
      CHECK(std::abs(field.values[static_cast<std::size_t>(idx)] - want) <=
            1e-12);
    }
  }

  SUBCASE("two atoms superpose and normalize") {
    Structure s(cubic(a),
                {{Eigen::Vector3d(1.0, 1.5, 2.0), 1},
                 {Eigen::Vector3d(5.0, 4.5, 3.0), 2}},
                SpeciesTable({{1, 2.0, 0.8}, {2, 4.0, 1.0}}), "two");
    std::map<int, RadialProfile> profiles;
    profiles.emplace(1, gaussian_profile(0.7, 3.0, 301));
    profiles.emplace(2, gaussian_profile(1.1, 3.5, 301));
    const AtomicDensityTable table(std::move(profiles));

    const DensityField field = acs_density(s, table, grid);
    CHECK(std::abs(field.integral() - 6.0) <= 1e-12 * 6.0);
    for (double v : field.values) CHECK(v >= 0.0);
  }

  SUBCASE("atom relabeling leaves the field bit-identical") {
    std::vector<Atom> fwd{{Eigen::Vector3d(1.0, 1.5, 2.0), 1},
                          {Eigen::Vector3d(5.0, 4.5, 3.0), 2},
                          {Eigen::Vector3d(3.0, 6.0, 6.5), 1}};
    std::vector<Atom> rev(fwd.rbegin(), fwd.rend());
    SpeciesTable st({{1, 2.0, 0.8}, {2, 4.0, 1.0}});
    Structure s1(cubic(a), fwd, st, "fwd");
    Structure s2(cubic(a), rev, st, "rev");
    std::map<int, RadialProfile> profiles;
    profiles.emplace(1, gaussian_profile(0.7, 3.0, 301));
    profiles.emplace(2, gaussian_profile(1.1, 3.5, 301));
    const AtomicDensityTable table(std::move(profiles));

    const DensityField f1 = acs_density(s1, table, grid);
    const DensityField f2 = acs_density(s2, table, grid);
    CHECK(std::memcmp(f1.values.data(), f2.values.data(),
                      f1.values.size() * sizeof(double)) == 0);
  }

  SUBCASE("translation by a lattice vector leaves the field unchanged") {
    SpeciesTable st({{1, 2.0, 0.8}});
    Structure s1(cubic(a), {{Eigen::Vector3d(2.0, 2.0, 2.0), 1}}, st, "base");
    Structure s2(cubic(a), {{Eigen::Vector3d(2.0 + a, 2.0, 2.0), 1}}, st,
                 "wrapped");
    const auto table = one_species_table(1, 0.9);
    const DensityField f1 = acs_density(s1, table, grid);
    const DensityField f2 = acs_density(s2, table, grid);
    CHECK(std::memcmp(f1.values.data(), f2.values.data(),
                      f1.values.size() * sizeof(double)) == 0);
  }

  SUBCASE("translation by whole grid steps shifts the field exactly") {
    // step = a/32 is dyadic, so shifted grid points and atom coordinates are
    // exact and every distance reproduces bit-for-bit.
    const double step = a / 32.0;
    const Eigen::Vector3d t(3 * step, 0.0, 0.0);
    SpeciesTable st({{1, 2.0, 0.8}, {2, 4.0, 1.0}});
    std::vector<Atom> atoms{{Eigen::Vector3d(1.0, 1.5, 2.0), 1},
                            {Eigen::Vector3d(5.0, 4.5, 3.0), 2}};
    std::vector<Atom> moved = atoms;
    for (Atom& atom : moved) atom.pos += t;
    Structure s1(cubic(a), atoms, st, "base");
    Structure s2(cubic(a), moved, st, "moved");
    std::map<int, RadialProfile> profiles;
    profiles.emplace(1, gaussian_profile(0.7, 3.0, 301));
    profiles.emplace(2, gaussian_profile(1.1, 3.5, 301));
    const AtomicDensityTable table(std::move(profiles));

    const DensityField f1 = acs_density(s1, table, grid);
    const DensityField f2 = acs_density(s2, table, grid);
    for (int i3 = 0; i3 < 32; ++i3)
      for (int i2 = 0; i2 < 32; ++i2)
        for (int i1 = 0; i1 < 32; ++i1) {
          const double got =
              f2.values[static_cast<std::size_t>(grid.index((i1 + 3) % 32, i2, i3))];
          const double want =
              f1.values[static_cast<std::size_t>(grid.index(i1, i2, i3))];
          CHECK(got == want);
        }
  }

  SUBCASE("missing species reports table-miss") {
    Structure s(cubic(a), {{Eigen::Vector3d(2.0, 2.0, 2.0), 2}},
                SpeciesTable({{2, 2.0, 0.8}}), "miss");
    const auto table = one_species_table(1, 0.9);
    CHECK(category_of([&] { acs_density(s, table, grid); }) == "table-miss");
  }
}

TEST_CASE("predicted density ingestion") {
  const double a = 7.0;
  SpeciesTable st({{1, 2.0, 0.8}, {2, 2.0, 1.1}});
  Structure s(cubic(a),
              {{Eigen::Vector3d(0, 0, 0), 1},
               {Eigen::Vector3d(a / 2, a / 2, a / 2), 2}},
              st, "pair");
  SolverParams params;
  params.ecutwfc = 2.0;
  params.ecutrho = 8.0;
  const Grid grid = Grid::for_cutoff(s.cell(), params.ecutrho);
  const double n_e = s.electron_count();

  SUBCASE("valid field only picks up the normalization factor") {
    DensityField raw = DensityField::zeros(grid);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(0.1, 1.0);
    for (double& v : raw.values) v = dist(rng);
    const double scale0 = raw.integral();
    const DensityField out = ingest_predicted_density(raw, s, params);
    CHECK(std::abs(out.integral() - n_e) <= 1e-12 * n_e);
    for (std::size_t k = 0; k < raw.values.size(); k += 311) {
      const double want = raw.values[k] * n_e / scale0;
      CHECK(std::abs(out.values[k] - want) <= 1e-12 * want);
    }
  }

  SUBCASE("negative points land on the floor") {
    DensityField raw = DensityField::uniform(grid, n_e / s.volume());
    REQUIRE(raw.values.size() > 101);
    raw.values[3] = -0.2;
    raw.values[100] = -1e-30;
    const DensityField out = ingest_predicted_density(raw, s, params);
    // Floored points carry the same global normalization factor as every
    // other point; read it off an untouched one.
    const double factor = out.values[7] / raw.values[7];
    CHECK(out.values[3] == doctest::Approx(1e-10 * factor).epsilon(1e-12));
    CHECK(out.values[100] == doctest::Approx(1e-10 * factor).epsilon(1e-12));
    CHECK(std::abs(out.integral() - n_e) <= 1e-12 * n_e);
    double lo = out.values[0];
    for (double v : out.values) lo = std::min(lo, v);
    CHECK(lo >= 1e-10);
  }

  SUBCASE("ingestion is idempotent bitwise") {
    DensityField raw = DensityField::zeros(grid);
    std::mt19937 rng(23);
    std::normal_distribution<double> dist(0.05, 0.04);
    for (double& v : raw.values) v = dist(rng);  // some values negative
    const DensityField once = ingest_predicted_density(raw, s, params);
    const DensityField twice = ingest_predicted_density(once, s, params);
    CHECK(std::memcmp(once.values.data(), twice.values.data(),
                      once.values.size() * sizeof(double)) == 0);
  }

  SUBCASE("all-zero prediction is degenerate") {
    DensityField raw = DensityField::zeros(grid);
    CHECK(category_of([&] { ingest_predicted_density(raw, s, params); }) ==
          "degenerate-prediction");
  }

  SUBCASE("half-floored prediction is degenerate, just under half passes") {
    DensityField raw = DensityField::uniform(grid, 0.5);
    const std::size_t j = raw.values.size();
    const std::size_t half = (j + 1) / 2;  // ceil: >= 50% of points
    for (std::size_t k = 0; k < half; ++k) raw.values[k] = 0.0;
    CHECK(category_of([&] { ingest_predicted_density(raw, s, params); }) ==
          "degenerate-prediction");

    DensityField ok = DensityField::uniform(grid, 0.5);
    const std::size_t under = j / 2 - 1;
    for (std::size_t k = 0; k < under; ++k) ok.values[k] = 0.0;
    const DensityField out = ingest_predicted_density(ok, s, params);
    CHECK(std::abs(out.integral() - n_e) <= 1e-12 * n_e);
  }

  SUBCASE("non-finite prediction reports numerical-blowup") {
    DensityField raw = DensityField::uniform(grid, 0.5);
    raw.values[17] = std::nan("");
    CHECK(category_of([&] { ingest_predicted_density(raw, s, params); }) ==
          "numerical-blowup");
  }

  SUBCASE("wrong grid reports shape") {
    Grid other{{10, 10, 10}, cubic(a)};
    DensityField raw = DensityField::uniform(other, 0.5);
    CHECK(category_of([&] { ingest_predicted_density(raw, s, params); }) ==
          "shape");
  }
}

TEST_CASE("atomic table file round trip") {
  const std::string dir = "initdens_tables_test";
  std::filesystem::remove_all(dir);

  std::map<int, RadialProfile> profiles;
  profiles.emplace(1, gaussian_profile(0.7, 3.0, 50));
  profiles.emplace(12, gaussian_profile(1.1, 4.0, 64));
  const AtomicDensityTable table(std::move(profiles));
  save_atomic_tables(dir, table);

  SUBCASE("round trips bitwise") {
    const AtomicDensityTable back = load_atomic_tables(dir);
    REQUIRE(back.profiles().size() == 2);
    for (const auto& [id, prof] : table.profiles()) {
      REQUIRE(back.has(id));
      const RadialProfile& rt = back.profile(id);
      REQUIRE(rt.values().size() == prof.values().size());
      CHECK(std::memcmp(rt.values().data(), prof.values().data(),
                        prof.values().size() * sizeof(double)) == 0);
      CHECK(std::memcmp(rt.radii().data(), prof.radii().data(),
                        prof.radii().size() * sizeof(double)) == 0);
    }
  }

  SUBCASE("expected files exist") {
    CHECK(std::filesystem::exists(dir + "/index.json"));
    CHECK(std::filesystem::exists(dir + "/species-1.csv"));
    CHECK(std::filesystem::exists(dir + "/species-12.csv"));
    std::ifstream f(dir + "/species-1.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "r_bohr,rho");
  }

  SUBCASE("missing directory reports io") {
    CHECK(category_of([] { load_atomic_tables("no_such_table_dir"); }) ==
          "io");
  }

  SUBCASE("corrupt header reports parse") {
    std::ofstream f(dir + "/species-1.csv");
    f << "radius,density\n0,1\n";
    f.close();
    CHECK(category_of([&] { load_atomic_tables(dir); }) == "parse");
  }

  std::filesystem::remove_all(dir);
}
