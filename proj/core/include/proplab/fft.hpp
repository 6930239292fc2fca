// Radix-2 complex FFT used by the sharp frequency projections, the Feynman
// kernel construction and the Gram convolutions. Power-of-two lengths only.
#pragma once

#include <complex>
#include <vector>

namespace proplab::fft {

using Cplx = std::complex<double>;

bool is_pow2(std::size_t n);

// In-place forward transform: X_k = sum_j x_j exp(-2 pi i j k / n).
void forward(std::vector<Cplx>& a);
// In-place inverse with 1/n normalization.
void inverse(std::vector<Cplx>& a);

// Strided transforms over a flattened 2-D array (rows x cols, row-major).
void forward_rows(std::vector<Cplx>& a, std::size_t rows, std::size_t cols);
void inverse_rows(std::vector<Cplx>& a, std::size_t rows, std::size_t cols);
void forward_cols(std::vector<Cplx>& a, std::size_t rows, std::size_t cols);
void inverse_cols(std::vector<Cplx>& a, std::size_t rows, std::size_t cols);

// DFT frequency in index convention: k in [0, n/2) positive, n/2 Nyquist,
// (n/2, n) negative.
double frequency(std::size_t index, std::size_t n, double spacing);

}  // namespace proplab::fft
