#pragma once

#include "qkdrate/channel.hpp"

#include <random>

// Shared random-instance generators for the property tests.
namespace qkd::testing {

inline Matrix random_hermitian(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
  return 0.5 * (m + Matrix(m.adjoint()));
}

inline Matrix random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Matrix rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline Vector random_pure(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = Complex(gauss(rng), gauss(rng));
  return v / v.norm();
}

// Random valid channel: shrink a random Stokes draw toward the identity
// channel's fixed point (the fully depolarizing channel) until PSD.
inline StokesParams random_channel(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  StokesParams s;
  for (int i = 0; i < 3; ++i) {
    s.t(i) = 0.5 * unit(rng);
    for (int j = 0; j < 3; ++j) s.R(i, j) = unit(rng);
  }
  for (int step = 0; step < 200 && choi_min_eigenvalue(s) < 0; ++step) {
    s.R *= 0.9;
    s.t *= 0.9;
  }
  return s;
}

inline BellDistribution random_bell(std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  double a = exp1(rng), b = exp1(rng), c = exp1(rng), d = exp1(rng);
  double sum = a + b + c + d;
  return BellDistribution{a / sum, b / sum, c / sum, d / sum};
}

inline CcqState random_ccq(int registers, int eve_dim, std::mt19937_64& rng) {
  CcqState s;
  for (int i = 0; i < registers; ++i)
    s.registers.push_back({std::string(1, static_cast<char>('A' + i)), 2});
  int cells = s.alphabet_size();
  std::exponential_distribution<double> exp1(1.0);
  s.joint.resize(cells);
  double total = 0;
  for (double& p : s.joint) {
    p = exp1(rng);
    total += p;
  }
  for (double& p : s.joint) p /= total;
  s.eve_dim = eve_dim;
  s.conditionals.resize(cells);
  for (int c = 0; c < cells; ++c) s.conditionals[c] = random_density(eve_dim, rng);
  return s;
}

}  // namespace qkd::testing
