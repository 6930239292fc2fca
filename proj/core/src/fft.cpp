#include "proplab/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace proplab::fft {

bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

void transform(Cplx* a, std::size_t n, int sign) {
  if (!is_pow2(n)) throw std::invalid_argument("fft length must be a power of two");
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    Cplx wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        Cplx u = a[i + k];
        Cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

}  // namespace

void forward(std::vector<Cplx>& a) { transform(a.data(), a.size(), -1); }

void inverse(std::vector<Cplx>& a) {
  transform(a.data(), a.size(), +1);
  double inv = 1.0 / static_cast<double>(a.size());
  for (auto& v : a) v *= inv;
}

void forward_rows(std::vector<Cplx>& a, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) transform(a.data() + r * cols, cols, -1);
}

void inverse_rows(std::vector<Cplx>& a, std::size_t rows, std::size_t cols) {
  double inv = 1.0 / static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    transform(a.data() + r * cols, cols, +1);
    for (std::size_t c = 0; c < cols; ++c) a[r * cols + c] *= inv;
  }
}

void forward_cols(std::vector<Cplx>& a, std::size_t rows, std::size_t cols) {
  std::vector<Cplx> tmp(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) tmp[r] = a[r * cols + c];
    transform(tmp.data(), rows, -1);
    for (std::size_t r = 0; r < rows; ++r) a[r * cols + c] = tmp[r];
  }
}

void inverse_cols(std::vector<Cplx>& a, std::size_t rows, std::size_t cols) {
  std::vector<Cplx> tmp(rows);
  double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) tmp[r] = a[r * cols + c];
    transform(tmp.data(), rows, +1);
    for (std::size_t r = 0; r < rows; ++r) a[r * cols + c] = tmp[r] * inv;
  }
}

double frequency(std::size_t index, std::size_t n, double spacing) {
  double k = static_cast<double>(index);
  if (index > n / 2) k -= static_cast<double>(n);
  return 2.0 * std::numbers::pi * k / (static_cast<double>(n) * spacing);
}

}  // namespace proplab::fft
