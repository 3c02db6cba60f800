#include "qkdrate/quantum.hpp"

#include "qkdrate/channel.hpp"
#include "test_support.hpp"

#include "doctest.h"

#include <cmath>

using namespace qkd;
using qkd::testing::random_ccq;
using qkd::testing::random_density;
using qkd::testing::random_hermitian;
using qkd::testing::random_pure;

namespace {

// Independent oracle for the closed-form entropy values: straight
// evaluation of -sum p log2 p.
double direct_entropy(std::initializer_list<double> ps) {
  double h = 0;
  for (double p : ps)
    if (p > 0) h -= p * std::log2(p);
  return h;
}

}  // namespace

TEST_CASE("binary entropy") {
  CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.25) ==
        doctest::Approx(direct_entropy({0.25, 0.75})).epsilon(1e-12));
  CHECK(binary_entropy(0.25) == doctest::Approx(0.811278).epsilon(1e-6));
  for (double p : {0.1, 0.3, 0.47})
    CHECK(binary_entropy(p) == doctest::Approx(binary_entropy(1 - p)));
  CHECK_THROWS_AS(binary_entropy(-0.1), domain_error);
  CHECK_THROWS_AS(binary_entropy(1.1), domain_error);
}

TEST_CASE("shannon entropy") {
  CHECK(shannon_entropy({1, 0, 0, 0}) == 0.0);
  CHECK(shannon_entropy({0.25, 0.25, 0.25, 0.25}) == doctest::Approx(2.0));
  CHECK(shannon_entropy({0.85, 0.05, 0.05, 0.05}) ==
        doctest::Approx(direct_entropy({0.85, 0.05, 0.05, 0.05})));
  CHECK(shannon_entropy({0.85, 0.05, 0.05, 0.05}) ==
        doctest::Approx(0.847584).epsilon(1e-6));
  CHECK_THROWS_AS(shannon_entropy({0.5, 0.6}), domain_error);
}

TEST_CASE("von Neumann entropy") {
  CHECK(von_neumann_entropy(0.5 * Matrix::Identity(2, 2)) ==
        doctest::Approx(1.0));

  std::mt19937_64 rng(7);
  Vector psi = random_pure(3, rng);
  CHECK(von_neumann_entropy(psi * psi.adjoint()) ==
        doctest::Approx(0.0).epsilon(1e-9));

  // Qubit with Bloch vector of norm 0.6: H = h((1+0.6)/2) = h(0.8).
  Matrix rho(2, 2);
  rho << 0.5 + 0.3 * 0.6, 0.3 * 0.8, 0.3 * 0.8, 0.5 - 0.3 * 0.6;
  CHECK(von_neumann_entropy(rho) == doctest::Approx(binary_entropy(0.8)));
  CHECK(von_neumann_entropy(rho) == doctest::Approx(0.721928).epsilon(1e-6));

  Matrix not_psd(2, 2);
  not_psd << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(von_neumann_entropy(not_psd), domain_error);
}

TEST_CASE("partial trace") {
  Vector bell(4);
  bell << 1 / std::sqrt(2.0), 0, 0, 1 / std::sqrt(2.0);
  Matrix reduced = partial_trace(bell * bell.adjoint(), {2, 2}, {0});
  CHECK((reduced - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(11);
  Matrix a = random_density(3, rng);
  Matrix b = random_density(2, rng);
  Matrix back = partial_trace(kron(a, b), {3, 2}, {0});
  CHECK((back - a).cwiseAbs().maxCoeff() < 1e-12);

  // Tracing Bob out of any Choi operator gives Alice's I/2 marginal.
  ChoiOperator choi = stokes_to_choi(make_amplitude_damping_channel(0.2));
  Matrix alice = partial_trace(choi.op, {2, 2}, {0});
  CHECK((alice - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(partial_trace(Matrix::Identity(3, 3), {2, 2}, {0}),
                  domain_error);
}

TEST_CASE("purify") {
  std::mt19937_64 rng(13);

  Vector psi = random_pure(3, rng);
  Vector purified = purify(psi * psi.adjoint());
  CHECK(purified.size() == 3);  // one-dimensional environment

  Vector half = purify(0.5 * Matrix::Identity(2, 2));
  CHECK(half.size() == 4);
  Matrix reduced = partial_trace(half * half.adjoint(), {2, 2}, {0});
  CHECK((reduced - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-9);

  ChoiOperator bell_choi = stokes_to_choi(
      make_pauli_channel(BellDistribution{0.85, 0.05, 0.05, 0.05}));
  Vector big = purify(bell_choi.op);
  CHECK(big.size() == 16);
  Matrix back = partial_trace(big * big.adjoint(), {4, 4}, {0});
  CHECK((back - bell_choi.op).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("purify then reduce is the identity on random densities") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    int dim = 2 + static_cast<int>(rng() % 5);
    Matrix rho = random_density(dim, rng);
    Vector psi = purify(rho);
    int env = static_cast<int>(psi.size()) / dim;
    Matrix back = partial_trace(psi * psi.adjoint(), {dim, env}, {0});
    CHECK((back - rho).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("eigendecomposition reconstructs Hermitian inputs up to dim 64") {
  std::mt19937_64 rng(19);
  for (int dim : {2, 5, 16, 33, 64}) {
    Matrix h = random_hermitian(dim, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    Matrix rebuilt = solver.eigenvectors() *
                     solver.eigenvalues().asDiagonal() *
                     solver.eigenvectors().adjoint();
    CHECK((h - rebuilt).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("trace distance") {
  std::mt19937_64 rng(23);
  Matrix rho = random_density(3, rng);
  CHECK(trace_distance(rho, rho) == doctest::Approx(0.0).epsilon(1e-12));

  Matrix e0 = Matrix::Zero(2, 2), e1 = Matrix::Zero(2, 2);
  e0(0, 0) = 1;
  e1(1, 1) = 1;
  CHECK(trace_distance(e0, e1) == doctest::Approx(2.0));

  Matrix p = Matrix::Zero(2, 2), q = Matrix::Zero(2, 2);
  p(0, 0) = 0.6;
  p(1, 1) = 0.4;
  q(0, 0) = 0.5;
  q(1, 1) = 0.5;
  CHECK(trace_distance(p, q) == doctest::Approx(0.2));

  CHECK_THROWS_AS(trace_distance(e0, Matrix::Identity(3, 3)), domain_error);
}

TEST_CASE("trace distance is a metric on random triples") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix a = random_density(4, rng);
    Matrix b = random_density(4, rng);
    Matrix c = random_density(4, rng);
    CHECK(trace_distance(a, b) ==
          doctest::Approx(trace_distance(b, a)).epsilon(1e-9));
    CHECK(trace_distance(a, c) <=
          trace_distance(a, b) + trace_distance(b, c) + 1e-9);
    CHECK(trace_distance(a, b) >= -1e-12);
  }
}

TEST_CASE("min entropy") {
  Matrix sigma_trivial = Matrix::Identity(1, 1);
  Matrix uniform = 0.5 * Matrix::Identity(2, 2);
  auto h = min_entropy(uniform, sigma_trivial, 2);
  REQUIRE(h.has_value());
  CHECK(*h == doctest::Approx(1.0));

  std::mt19937_64 rng(31);
  Vector psi = random_pure(2, rng);
  auto h_pure = min_entropy(psi * psi.adjoint(), sigma_trivial, 2);
  REQUIRE(h_pure.has_value());
  CHECK(*h_pure == doctest::Approx(0.0).epsilon(1e-9));

  // Classical-classical uniform on four outcomes, sigma = Bob marginal.
  Matrix cc = 0.25 * Matrix::Identity(4, 4);
  auto h_cc = min_entropy(cc, uniform, 2);
  REQUIRE(h_cc.has_value());
  CHECK(*h_cc == doctest::Approx(1.0));

  // Exhaustive grid search over lambda as the independent oracle: the
  // smallest feasible lambda on a 1e-4 grid should match 2^(-H).
  double best_lambda = 1.0;
  for (double lam = 1.0; lam >= 1e-4; lam -= 1e-4) {
    Matrix gap = lam * kron(Matrix::Identity(2, 2), uniform) - cc;
    if (hermitian_eigenvalues(gap).minCoeff() >= -1e-12)
      best_lambda = lam;
    else
      break;
  }
  CHECK(std::pow(2.0, -*h_cc) == doctest::Approx(best_lambda).epsilon(1e-3));

  // Support violation: sigma concentrated on |0> but rho has |1> weight.
  Matrix sigma0 = Matrix::Zero(2, 2);
  sigma0(0, 0) = 1;
  CHECK(!min_entropy(cc, sigma0, 2).has_value());
}

TEST_CASE("min entropy PSD characterization on random cq states") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    CcqState s = random_ccq(1, 3, rng);
    Matrix rho = s.total_operator();
    Matrix sigma = partial_trace(rho, {2, 3}, {1});
    auto h = min_entropy(rho, sigma, 2);
    REQUIRE(h.has_value());
    double lambda = std::pow(2.0, -*h);
    Matrix base = kron(Matrix::Identity(2, 2), sigma);
    CHECK(hermitian_eigenvalues(lambda * base - rho).minCoeff() > -1e-9);
    CHECK(hermitian_eigenvalues((lambda - 1e-6) * base - rho).minCoeff() <
          -1e-12);
  }
}

TEST_CASE("max entropy as log rank") {
  std::mt19937_64 rng(41);
  Vector psi = random_pure(4, rng);
  CHECK(max_entropy_rank(psi * psi.adjoint()) == doctest::Approx(0.0));
  CHECK(max_entropy_rank(0.5 * Matrix::Identity(2, 2)) == doctest::Approx(1.0));

  ChoiOperator rank3 =
      stokes_to_choi(make_pauli_channel(BellDistribution{0.5, 0.3, 0.2, 0.0}));
  CHECK(max_entropy_rank(rank3.op) == doctest::Approx(std::log2(3.0)));
}

TEST_CASE("smooth min-entropy product bound") {
  // Large n: the correction vanishes and the bound tends to HXB - HB.
  CHECK(smooth_min_entropy_product_bound(1.7, 0.9, 1.0, 4e18, 1e-9) ==
        doctest::Approx(0.8).epsilon(1e-4));

  double delta = 5.0 * std::sqrt(std::log2(2e9) / 1e6);
  CHECK(smooth_min_entropy_product_bound(1.0, 0.0, 1.0, 1000000, 1e-9) ==
        doctest::Approx(1.0 - delta));

  double prev = -1e9;
  for (long long n : {100LL, 1000LL, 10000LL, 100000LL}) {
    double v = smooth_min_entropy_product_bound(1.0, 0.2, 1.0, n, 1e-6);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(smooth_min_entropy_product_bound(1, 0, 1, 10, 1.5),
                  domain_error);
  CHECK_THROWS_AS(smooth_min_entropy_product_bound(1, 0, 1, 0, 0.5),
                  domain_error);
}

TEST_CASE("ccq conditional entropy basics") {
  // E independent of X: H(X|E) = H(X).
  std::mt19937_64 rng(43);
  CcqState s;
  s.registers = {{"X", 2}};
  s.joint = {0.3, 0.7};
  s.eve_dim = 3;
  Matrix shared = random_density(3, rng);
  s.conditionals = {shared, shared};
  CHECK(conditional_entropy(s, {"X"}, {}, true) ==
        doctest::Approx(binary_entropy(0.3)).epsilon(1e-9));

  // Perfectly correlated classical registers: H(X|Y) = 0.
  CcqState c;
  c.registers = {{"X", 2}, {"Y", 2}};
  c.joint = {0.5, 0.0, 0.0, 0.5};
  c.eve_dim = 1;
  CHECK(conditional_entropy(c, {"X"}, {"Y"}, false) ==
        doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(conditional_entropy(c, {"Q"}, {}, false), domain_error);
}

TEST_CASE("ccq conditional entropy matches the depolarizing closed form") {
  // rho_XE of the depolarizing channel:
  // H(X|E) = 1 - H[p] + h((1 + R_zz)/2).
  const double e = 0.1;
  ChoiOperator rho = stokes_to_choi(make_depolarizing_channel(e));
  Vector psi = purify(rho.op);
  const int r = static_cast<int>(psi.size()) / 4;

  CcqState s;
  s.registers = {{"X", 2}};
  s.eve_dim = r;
  s.joint.assign(2, 0.0);
  s.conditionals.resize(2);
  for (int x = 0; x < 2; ++x) {
    Matrix block = Matrix::Zero(r, r);
    for (int b = 0; b < 2; ++b) {
      Vector v(r);
      for (int k = 0; k < r; ++k) v[k] = psi[(x * 2 + b) * r + k];
      block += v * v.adjoint();
    }
    s.joint[x] = block.trace().real();
    s.conditionals[x] = block / s.joint[x];
  }

  double expected = 1.0 -
                    direct_entropy({1 - 3 * e / 2, e / 2, e / 2, e / 2}) +
                    binary_entropy((1 + (1 - 2 * e)) / 2);
  CHECK(conditional_entropy(s, {"X"}, {}, true) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("ccq chain rule on random states") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    CcqState s = random_ccq(3, 2, rng);
    double lhs = conditional_entropy(s, {"A", "B"}, {"C"}, true);
    double rhs = conditional_entropy(s, {"A"}, {"B", "C"}, true) +
                 conditional_entropy(s, {"B"}, {"C"}, true);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}
