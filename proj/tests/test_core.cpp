#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rhobench/core.hpp"
#include "rhobench/fft.hpp"

using namespace rhobench;

namespace {

Eigen::Matrix3d cubic(double a) {
  return (Eigen::Matrix3d() << a, 0, 0, 0, a, 0, 0, 0, a).finished();
}

Eigen::Matrix3d skewed_cell() {
  return (Eigen::Matrix3d() << 6.2, 0.0, 0.0,
                               1.1, 5.7, 0.0,
                               -0.8, 0.9, 7.3).finished();
}

SpeciesTable two_species() {
  return SpeciesTable({{1, 2.0, 0.8}, {2, 2.0, 1.1}});
}

std::vector<double> random_field(const Grid& grid, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(grid.size());
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST_CASE("reciprocal lattice basics") {
  CHECK((reciprocal_lattice(Eigen::Matrix3d::Identity()) -
         Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));

  const Eigen::Matrix3d b = reciprocal_lattice(cubic(4.0));
  CHECK((b - 0.25 * Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <=
        1e-15);
}

TEST_CASE("reciprocal lattice of a skew cell satisfies B^T cell = I") {
  const Eigen::Matrix3d cell = skewed_cell();
  const Eigen::Matrix3d b = reciprocal_lattice(cell);
  const Eigen::Matrix3d prod = b.transpose() * cell;
  CHECK((prod - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((b - oracle::inverse_transpose(cell)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("reciprocal lattice rejects singular cells") {
  Eigen::Matrix3d cell = cubic(3.0);
  cell.row(2) = cell.row(0) + cell.row(1);
  CHECK_THROWS_AS(reciprocal_lattice(cell), Error);
  try {
    reciprocal_lattice(cell);
  } catch (const Error& e) {
    CHECK(e.category() == "degenerate-cell");
  }
}

TEST_CASE("gvectors_within always contains the zero vector") {
  for (double cutoff : {0.0, 1e-6, 0.3, 7.0}) {
    const auto gs = gvectors_within(skewed_cell(), cutoff);
    REQUIRE(!gs.empty());
    CHECK(gs.front().miller == std::array<int, 3>{0, 0, 0});
    CHECK(gs.front().kin == 0.0);
  }
}

TEST_CASE("gvectors_within cubic shell count matches integer enumeration") {
  // a = 2*pi makes B the identity, so 0.5|G|^2 = (h^2+k^2+l^2)/2.
  const Eigen::Matrix3d cell = cubic(2.0 * M_PI);
  const auto gs = gvectors_within(cell, 2.0);
  CHECK(gs.size() == 33);  // 1 + 6 + 12 + 8 + 6 integer triples with n2 <= 4
  for (double cutoff : {0.4, 1.0, 2.0, 3.0, 4.5}) {
    const auto set = gvectors_within(cell, cutoff);
    CHECK(static_cast<int>(set.size()) ==
          oracle::count_gvectors_brute(cell, cutoff, 6));
  }
}

TEST_CASE("gvectors_within skew cell matches brute enumeration") {
  const Eigen::Matrix3d cell = skewed_cell();
  for (double cutoff : {0.5, 2.0, 8.0}) {
    const auto set = gvectors_within(cell, cutoff);
    CHECK(static_cast<int>(set.size()) ==
          oracle::count_gvectors_brute(cell, cutoff, 12));
  }
}

TEST_CASE("gvectors_within below the first shell returns only G=0") {
  const double a = 5.0;
  const double first_shell = 0.5 * std::pow(2.0 * M_PI / a, 2);
  const auto gs = gvectors_within(cubic(a), 0.5 * first_shell);
  CHECK(gs.size() == 1);
}

TEST_CASE("gvectors_within is sorted and monotone in the cutoff") {
  const Eigen::Matrix3d cell = skewed_cell();
  const auto small = gvectors_within(cell, 2.0);
  const auto large = gvectors_within(cell, 5.0);
  REQUIRE(small.size() <= large.size());
  // Sorted by (kin, miller):
  for (std::size_t i = 1; i < large.size(); ++i) {
    const bool ordered =
        large[i - 1].kin < large[i].kin ||
        (large[i - 1].kin == large[i].kin &&
         large[i - 1].miller < large[i].miller);
    CHECK(ordered);
  }
  // Prefix property: identical cutoff test means the smaller set is a
  // subset; with identical ordering it is a prefix.
  for (std::size_t i = 0; i < small.size(); ++i)
    CHECK(small[i].miller == large[i].miller);
  // g consistent with miller: kinetic value nonnegative and matches |g|.
  for (const auto& gv : large)
    CHECK(gv.kin == doctest::Approx(0.5 * gv.g.squaredNorm()).epsilon(1e-15));
}

TEST_CASE("fft_friendly returns smallest 2,3,5-smooth bound") {
  CHECK(fft_friendly(1) == 1);
  CHECK(fft_friendly(7) == 8);
  CHECK(fft_friendly(11) == 12);
  CHECK(fft_friendly(13) == 15);
  CHECK(fft_friendly(17) == 18);
  CHECK(fft_friendly(23) == 24);
  CHECK(fft_friendly(31) == 32);
  CHECK(fft_friendly(97) == 100);
}

TEST_CASE("grid dims hold the ecutrho sphere") {
  const Eigen::Matrix3d cell = cubic(2.0 * M_PI);
  const Grid grid = Grid::for_cutoff(cell, 2.0);
  CHECK(grid.dims == std::array<int, 3>{5, 5, 5});
  for (const auto& gv : gvectors_within(cell, 2.0))
    for (int axis = 0; axis < 3; ++axis)
      CHECK(2 * std::abs(gv.miller[axis]) < grid.dims[axis]);

  const Grid skew = Grid::for_cutoff(skewed_cell(), 32.0);
  for (const auto& gv : gvectors_within(skewed_cell(), 32.0))
    for (int axis = 0; axis < 3; ++axis)
      CHECK(2 * std::abs(gv.miller[axis]) < skew.dims[axis]);
}

TEST_CASE("fft of a constant field is a pure DC coefficient") {
  Grid grid;
  grid.dims = {9, 9, 9};
  grid.cell = cubic(5.0);
  const auto coeffs = fft_forward(grid, std::vector<double>(grid.size(), 3.25));
  CHECK(std::abs(coeffs[0] - std::complex<double>(3.25, 0.0)) <= 1e-13);
  for (std::size_t i = 1; i < coeffs.size(); ++i)
    CHECK(std::abs(coeffs[i]) <= 1e-13);
}

TEST_CASE("fft of a cosine splits between +G0 and -G0") {
  Grid grid;
  grid.dims = {12, 9, 10};
  grid.cell = skewed_cell();
  const std::array<int, 3> m0{1, 0, 2};
  const Eigen::Matrix3d b = reciprocal_lattice(grid.cell);
  const Eigen::Vector3d g0 =
      2.0 * M_PI * (b.transpose() * Eigen::Vector3d(m0[0], m0[1], m0[2]));
  std::vector<double> values(grid.size());
  for (std::int64_t i = 0; i < grid.size(); ++i)
    values[i] = std::cos(g0.dot(grid.point(i)));
  const auto coeffs = fft_forward(grid, values);
  const auto plus = box_index_of_miller(grid, m0);
  const auto minus = box_index_of_miller(grid, {-m0[0], -m0[1], -m0[2]});
  CHECK(std::abs(coeffs[plus] - std::complex<double>(0.5, 0.0)) <= 1e-12);
  CHECK(std::abs(coeffs[minus] - std::complex<double>(0.5, 0.0)) <= 1e-12);
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    if (i == plus || i == minus) continue;
    CHECK(std::abs(coeffs[i]) <= 1e-12);
  }
}

TEST_CASE("fft round trip is the identity to 1e-12 relative") {
  for (auto dims : {std::array<int, 3>{9, 9, 9}, std::array<int, 3>{8, 9, 10},
                    std::array<int, 3>{6, 10, 15}}) {
    Grid grid;
    grid.dims = dims;
    grid.cell = skewed_cell();
    const auto values = random_field(grid, 1234);
    const auto back = fft_backward_real(grid, fft_forward(grid, values));
    double max_err = 0.0, max_val = 0.0;
    for (std::int64_t i = 0; i < grid.size(); ++i) {
      max_err = std::max(max_err, std::abs(back[i] - values[i]));
      max_val = std::max(max_val, std::abs(values[i]));
    }
    CHECK(max_err <= 1e-12 * max_val);
  }
}

TEST_CASE("fft matches the naive DFT oracle") {
  for (auto dims : {std::array<int, 3>{9, 9, 9}, std::array<int, 3>{8, 9, 10}}) {
    Grid grid;
    grid.dims = dims;
    grid.cell = skewed_cell();
    const auto values = random_field(grid, 77);
    const auto fast = fft_forward(grid, values);
    const auto slow = oracle::dft_forward_naive(grid, values);
    REQUIRE(fast.size() == slow.size());
    double max_err = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i)
      max_err = std::max(max_err, std::abs(fast[i] - slow[i]));
    CHECK(max_err <= 1e-12);
  }
}

TEST_CASE("fft of a real field is Hermitian") {
  Grid grid;
  grid.dims = {8, 9, 10};  // even first axis exercises the Nyquist slots
  grid.cell = cubic(6.0);
  const auto coeffs = fft_forward(grid, random_field(grid, 9));
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    const auto m = box_miller(grid, i);
    const auto j = box_index_of_miller(grid, {-m[0], -m[1], -m[2]});
    CHECK(std::abs(coeffs[i] - std::conj(coeffs[j])) <= 1e-13);
  }
}

TEST_CASE("box miller mapping round-trips") {
  Grid grid;
  grid.dims = {8, 9, 10};
  grid.cell = cubic(6.0);
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    const auto m = box_miller(grid, i);
    CHECK(box_index_of_miller(grid, m) == i);
  }
}

TEST_CASE("image distances: identical points") {
  const Structure st(cubic(10.0), {{Eigen::Vector3d(1, 1, 1), 1}},
                     two_species());
  const Eigen::Vector3d p(1, 1, 1);
  const auto d = min_image_distance(st, p, p, 4.0);
  REQUIRE(d.size() == 1);
  CHECK(d[0] == 0.0);
}

TEST_CASE("image distances: wrapped minimum image") {
  const Structure st(cubic(10.0), {{Eigen::Vector3d(1, 1, 1), 1}},
                     two_species());
  const auto d = min_image_distance(st, Eigen::Vector3d(0, 0, 0),
                                    Eigen::Vector3d(9, 0, 0), 4.0);
  REQUIRE(d.size() == 1);
  CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("image distances match brute-force enumeration") {
  const Eigen::Matrix3d cell = skewed_cell();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(0.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d a(dist(rng), dist(rng), dist(rng));
    const Eigen::Vector3d b(dist(rng), dist(rng), dist(rng));
    const double radius = 7.5;
    const auto fast = image_distances(cell, a, b, radius);
    const auto brute = oracle::image_distances_brute(cell, a, b, radius, 3);
    REQUIRE(fast.size() == brute.size());
    for (std::size_t i = 0; i < fast.size(); ++i)
      CHECK(fast[i] == doctest::Approx(brute[i]).epsilon(1e-12));
  }
}

TEST_CASE("image distances are symmetric in their endpoints") {
  const Eigen::Matrix3d cell = skewed_cell();
  const Eigen::Vector3d a(0.3, 4.1, 2.2), b(5.0, 1.7, 6.6);
  const auto ab = image_distances(cell, a, b, 9.0);
  const auto ba = image_distances(cell, b, a, 9.0);
  REQUIRE(ab.size() == ba.size());
  for (std::size_t i = 0; i < ab.size(); ++i)
    CHECK(ab[i] == doctest::Approx(ba[i]).epsilon(1e-12));
}

TEST_CASE("structure construction reduces positions and builds the combo") {
  const Structure st(cubic(10.0),
                     {{Eigen::Vector3d(11.0, -1.0, 5.0), 2},
                      {Eigen::Vector3d(2.0, 2.0, 2.0), 1}},
                     two_species());
  CHECK(st.atoms()[0].pos.x() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(st.atoms()[0].pos.y() == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(st.atoms()[0].pos.z() == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(st.combo() == std::vector<int>{1, 2});
  CHECK(st.electron_count() == 4.0);
  CHECK(st.volume() == doctest::Approx(1000.0));
}

TEST_CASE("structure rejects odd electron counts") {
  const SpeciesTable odd({{1, 3.0, 0.9}});
  CHECK_THROWS_AS(
      Structure(cubic(8.0), {{Eigen::Vector3d(0, 0, 0), 1}}, odd), Error);
}

TEST_CASE("structure rejects left-handed or singular cells") {
  Eigen::Matrix3d left = cubic(5.0);
  left.row(0) *= -1.0;
  CHECK_THROWS_AS(Structure(left, {}, two_species()), Error);
}

TEST_CASE("lattice-vector translation leaves reduced positions unchanged") {
  // Dyadic data makes the fractional reduction exact, so the invariance is
  // bitwise.
  const Eigen::Matrix3d cell = cubic(8.0);
  const Eigen::Vector3d pos(1.25, 3.5, 0.75);
  const Structure base(cell, {{pos, 1}}, two_species());
  const Structure shifted(
      cell, {{pos + cell.row(1).transpose(), 1}}, two_species());
  CHECK(base.atoms()[0].pos == shifted.atoms()[0].pos);
}

TEST_CASE("structure json round trip preserves everything") {
  const Structure st(skewed_cell(),
                     {{Eigen::Vector3d(0.5, 0.25, 1.0), 1},
                      {Eigen::Vector3d(3.0, 2.0, 4.0), 2}},
                     two_species(), "pair");
  nlohmann::json j;
  st.to_json(j);
  CHECK(j.contains("cell"));
  CHECK(j.contains("atoms"));
  CHECK(j.contains("species_table"));
  CHECK(j["atoms"][0].contains("pos"));
  CHECK(j["atoms"][0].contains("species"));
  CHECK(j["species_table"][0].contains("id"));
  CHECK(j["species_table"][0].contains("z_val"));
  CHECK(j["species_table"][0].contains("sigma"));

  const Structure back = Structure::from_json(j, "pair");
  CHECK(back.cell() == st.cell());
  REQUIRE(back.atoms().size() == st.atoms().size());
  for (std::size_t i = 0; i < st.atoms().size(); ++i) {
    CHECK(back.atoms()[i].pos == st.atoms()[i].pos);
    CHECK(back.atoms()[i].species == st.atoms()[i].species);
  }
  CHECK(back.electron_count() == st.electron_count());
}

TEST_CASE("malformed structure json raises a parse error") {
  const auto j = nlohmann::json::parse(R"({"cell": [[1,0,0],[0,1,0]]})");
  CHECK_THROWS_AS(Structure::from_json(j), Error);
  try {
    Structure::from_json(j);
  } catch (const Error& e) {
    CHECK(e.category() == "parse");
  }
}

TEST_CASE("density field integral uses the cell measure") {
  Grid grid;
  grid.dims = {6, 6, 6};
  grid.cell = cubic(3.0);
  const auto f = DensityField::uniform(grid, 2.0);
  CHECK(f.integral() == doctest::Approx(2.0 * 27.0).epsilon(1e-14));
  CHECK(f.band_limited);
}
