#pragma once

#include <complex>
#include <vector>

#include "rhobench/core.hpp"

namespace rhobench {

// Discrete Fourier transforms on the canonical grid layout (first axis
// fastest). Conventions, fixed for every consumer including the codec:
//   forward:   rho(G) = (1/J) * sum_r rho(r) * exp(-i G.r)
//   backward:  rho(r) =         sum_G rho(G) * exp(+i G.r)
// so backward(forward(x)) == x up to rounding. Coefficients live on the full
// box, addressed by wrapped Miller indices via box_index_of_miller.

std::vector<std::complex<double>> fft_forward(
    const Grid& grid, const std::vector<double>& values);

std::vector<std::complex<double>> fft_forward(const DensityField& field);

std::vector<std::complex<double>> fft_forward_complex(
    const Grid& grid, const std::vector<std::complex<double>>& values);

std::vector<std::complex<double>> fft_backward(
    const Grid& grid, const std::vector<std::complex<double>>& coeffs);

std::vector<double> fft_backward_real(
    const Grid& grid, const std::vector<std::complex<double>>& coeffs);

// Miller triple stored in a box slot: each component mapped to
// (-n/2, n/2] … i.e. idx <= n/2 ? idx : idx - n.
std::array<int, 3> box_miller(const Grid& grid, std::int64_t idx);

// Box slot of a Miller triple (components wrapped mod dims).
std::int64_t box_index_of_miller(const Grid& grid,
                                 const std::array<int, 3>& miller);

}  // namespace rhobench
