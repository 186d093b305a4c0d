#include "rhobench/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace rhobench {

namespace {

// Plans are cached per (dims, sign). FFTW's planner is not thread-safe, so
// creation is serialized; fftw_execute_dft on distinct buffers is safe.
// FFTW_ESTIMATE keeps planning deterministic, FFTW_UNALIGNED lets plans run
// on plain std::vector storage.
std::mutex plan_mutex;
std::map<std::array<int, 4>, fftw_plan>& plan_cache() {
  static std::map<std::array<int, 4>, fftw_plan> cache;
  return cache;
}

fftw_plan plan_for(const Grid& grid, int sign) {
  const std::array<int, 4> key{grid.dims[0], grid.dims[1], grid.dims[2], sign};
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto& cache = plan_cache();
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<std::complex<double>> in(grid.size()), out(grid.size());
  // The value layout has the first axis fastest; FFTW is row-major (last
  // axis fastest), so the dims are passed reversed.
  fftw_plan plan = fftw_plan_dft_3d(
      grid.dims[2], grid.dims[1], grid.dims[0],
      reinterpret_cast<fftw_complex*>(in.data()),
      reinterpret_cast<fftw_complex*>(out.data()), sign,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan) throw Error("numerical", "fftw plan creation failed");
  cache.emplace(key, plan);
  return plan;
}

std::vector<std::complex<double>> execute(
    const Grid& grid, const std::vector<std::complex<double>>& in, int sign) {
  if (static_cast<std::int64_t>(in.size()) != grid.size())
    throw Error("shape", "fft input length does not match grid size");
  fftw_plan plan = plan_for(grid, sign);
  std::vector<std::complex<double>> out(in.size());
  // Out-of-place c2c transforms without FFTW_DESTROY_INPUT preserve input.
  fftw_execute_dft(
      plan,
      reinterpret_cast<fftw_complex*>(
          const_cast<std::complex<double>*>(in.data())),
      reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

std::vector<std::complex<double>> fft_forward_complex(
    const Grid& grid, const std::vector<std::complex<double>>& values) {
  auto out = execute(grid, values, FFTW_FORWARD);
  const double inv_j = 1.0 / static_cast<double>(grid.size());
  for (auto& c : out) c *= inv_j;
  return out;
}

std::vector<std::complex<double>> fft_forward(
    const Grid& grid, const std::vector<double>& values) {
  std::vector<std::complex<double>> complex_values(values.begin(),
                                                   values.end());
  return fft_forward_complex(grid, complex_values);
}

std::vector<std::complex<double>> fft_forward(const DensityField& field) {
  return fft_forward(field.grid, field.values);
}

std::vector<std::complex<double>> fft_backward(
    const Grid& grid, const std::vector<std::complex<double>>& coeffs) {
  return execute(grid, coeffs, FFTW_BACKWARD);
}

std::vector<double> fft_backward_real(
    const Grid& grid, const std::vector<std::complex<double>>& coeffs) {
  auto full = fft_backward(grid, coeffs);
  std::vector<double> out(full.size());
  for (std::size_t i = 0; i < full.size(); ++i) out[i] = full[i].real();
  return out;
}

std::array<int, 3> box_miller(const Grid& grid, std::int64_t idx) {
  const auto ijk = grid.unravel(idx);
  std::array<int, 3> m;
  for (int a = 0; a < 3; ++a)
    m[a] = ijk[a] <= grid.dims[a] / 2 ? ijk[a] : ijk[a] - grid.dims[a];
  return m;
}

std::int64_t box_index_of_miller(const Grid& grid,
                                 const std::array<int, 3>& miller) {
  std::array<int, 3> w;
  for (int a = 0; a < 3; ++a) {
    const int n = grid.dims[a];
    w[a] = ((miller[a] % n) + n) % n;
  }
  return grid.index(w[0], w[1], w[2]);
}

}  // namespace rhobench
