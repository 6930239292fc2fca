// Independent oracles for the test suites: finite differences, quadrature,
// naive DFT, matrix exponentials. These stay decoupled from the library
// implementation paths they check.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// composite Simpson on [a, b]
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2001) {
  if (n % 2 == 0) ++n;
  double h = (b - a) / (n - 1);
  double acc = f(a) + f(b);
  for (int i = 1; i + 1 < n; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// modified Bessel K0 via the cosine-integral representation
// K0(r) = int_0^inf cos(r t) / sqrt(t^2 + 1) dt
inline double bessel_k0(double r) {
  auto integrand = [r](double t) { return std::cos(r * t) / std::sqrt(t * t + 1.0); };
  // split the oscillatory integral into half-periods and sum
  double acc = 0.0;
  double period = M_PI / r;
  double a = 0.0;
  for (int k = 0; k < 400; ++k) {
    double b = a + period;
    acc += simpson(integrand, a, b, 41);
    a = b;
    if (k > 20 && std::abs(simpson(integrand, a, a + period, 41)) < 1e-12) break;
  }
  return acc;
}

inline std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) {
      double ang = -2.0 * M_PI * static_cast<double>(j * k % n) / static_cast<double>(n);
      out[k] += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
  return out;
}

inline Eigen::MatrixXcd expm(const Eigen::MatrixXcd& m) { return m.exp(); }

}  // namespace oracle
