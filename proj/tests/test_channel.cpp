#include "qkdrate/channel.hpp"

#include "test_support.hpp"

#include "doctest.h"

#include <cmath>
#include <map>

using namespace qkd;
using qkd::testing::random_bell;
using qkd::testing::random_channel;

TEST_CASE("stokes_to_choi on reference channels") {
  // Identity channel reconstructs the maximally entangled projector.
  ChoiOperator id = stokes_to_choi(make_identity_channel());
  Vector bell(4);
  bell << 1 / std::sqrt(2.0), 0, 0, 1 / std::sqrt(2.0);
  CHECK((id.op - bell * bell.adjoint()).cwiseAbs().maxCoeff() < 1e-12);

  // Depolarizing channel is Bell diagonal with p00 = 1 - 3e/2.
  const double e = 0.12;
  ChoiOperator dep = stokes_to_choi(make_depolarizing_channel(e));
  Eigen::VectorXd ev = hermitian_eigenvalues(dep.op);
  CHECK(ev(3) == doctest::Approx(1 - 3 * e / 2).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(ev(i) == doctest::Approx(e / 2));

  // Amplitude damping stays PSD across the whole parameter range.
  for (int i = 0; i <= 50; ++i) {
    double p = i / 50.0;
    ChoiOperator ad = stokes_to_choi(make_amplitude_damping_channel(p));
    CHECK(hermitian_eigenvalues(ad.op).minCoeff() > -1e-12);
    ad.validate();
  }

  // Non-PSD raw parameters are rejected with the offending eigenvalue.
  StokesParams bad;
  bad.R = Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal();
  bad.t = Eigen::Vector3d(0.5, 0, 0);
  CHECK_THROWS_AS(stokes_to_choi(bad), invalid_channel);
  try {
    stokes_to_choi(bad);
  } catch (const invalid_channel& ex) {
    CHECK(ex.min_eigenvalue < -1e-9);
  }
}

TEST_CASE("channel constructors") {
  StokesParams rot = make_rotation_channel(0.7);
  CHECK(rot.R(2, 2) == 1.0);
  CHECK(rot.R(0, 0) == doctest::Approx(std::cos(0.7)));
  CHECK(rot.R(0, 1) == doctest::Approx(-std::sin(0.7)));
  CHECK(rot.R(1, 0) == doctest::Approx(std::sin(0.7)));
  CHECK(rot.t.norm() == 0.0);

  StokesParams rd = make_rotated_depolarizing_channel(0.1, M_PI / 4);
  Eigen::Matrix3d expected =
      make_rotation_channel(M_PI / 4).R * make_depolarizing_channel(0.1).R;
  CHECK((rd.R - expected).cwiseAbs().maxCoeff() < 1e-12);

  StokesParams pauli_id = make_pauli_channel(BellDistribution{1, 0, 0, 0});
  CHECK((pauli_id.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <
        1e-12);

  CHECK_THROWS_AS(make_depolarizing_channel(0.7), domain_error);
  CHECK_THROWS_AS(make_amplitude_damping_channel(-0.1), domain_error);
  CHECK_THROWS_AS(make_pauli_channel(BellDistribution{0.7, 0.4, 0, -0.1}),
                  domain_error);
}

TEST_CASE("stokes/choi round trip on random channels") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    StokesParams s = random_channel(rng);
    ChoiOperator rho = stokes_to_choi(s);
    rho.validate();
    StokesParams back = choi_to_stokes(rho);
    CHECK((back.R - s.R).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((back.t - s.t).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("bell distribution to diagonal stokes round trip") {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    BellDistribution p = random_bell(rng);
    auto e = p.diagonal_stokes();
    BellDistribution back =
        BellDistribution::from_diagonal_stokes(e[0], e[1], e[2]);
    CHECK(back.p00 == doctest::Approx(p.p00).epsilon(1e-12));
    CHECK(back.p10 == doctest::Approx(p.p10).epsilon(1e-12));
    CHECK(back.p01 == doctest::Approx(p.p01).epsilon(1e-12));
    CHECK(back.p11 == doctest::Approx(p.p11).epsilon(1e-12));
  }
}

TEST_CASE("joint distribution") {
  ChoiOperator id = stokes_to_choi(make_identity_channel());
  auto zz = joint_distribution(id, Basis::Z, Basis::Z);
  CHECK(zz[0] == doctest::Approx(0.5));
  CHECK(zz[1] == doctest::Approx(0.0));
  CHECK(zz[2] == doctest::Approx(0.0));
  CHECK(zz[3] == doctest::Approx(0.5));

  auto zx = joint_distribution(id, Basis::Z, Basis::X);
  for (double v : zx) CHECK(v == doctest::Approx(0.25));

  const double p = 0.3;
  ChoiOperator ad = stokes_to_choi(make_amplitude_damping_channel(p));
  auto adzz = joint_distribution(ad, Basis::Z, Basis::Z);
  CHECK(adzz[0] == doctest::Approx(0.5));
  CHECK(adzz[1] == doctest::Approx(0.0));
  CHECK(adzz[2] == doctest::Approx(p / 2));
  CHECK(adzz[3] == doctest::Approx((1 - p) / 2));
}

TEST_CASE("alice marginal is uniform for every channel and basis pair") {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    ChoiOperator rho = stokes_to_choi(random_channel(rng));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        auto j = joint_distribution(rho, static_cast<Basis>(a),
                                    static_cast<Basis>(b));
        CHECK(j[0] + j[1] == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(j[2] + j[3] == doctest::Approx(0.5).epsilon(1e-10));
      }
  }
}

TEST_CASE("sample distribution") {
  ChoiOperator id = stokes_to_choi(make_identity_channel());
  auto pb = sample_distribution(id, Protocol::Bb84);
  CHECK(pb[outcome_index({0, Basis::Z, 0, Basis::Z}, Protocol::Bb84)] ==
        doctest::Approx(0.125));
  CHECK(pb[outcome_index({0, Basis::Z, 1, Basis::Z}, Protocol::Bb84)] ==
        doctest::Approx(0.0));

  // Fully depolarizing: uniform over all 36 six-state outcomes.
  ChoiOperator mixed = stokes_to_choi(make_depolarizing_channel(0.5));
  auto ps = sample_distribution(mixed, Protocol::Sixstate);
  REQUIRE(ps.size() == 36);
  for (double v : ps) CHECK(v == doctest::Approx(1.0 / 36));

  // Basis choices are independent of the channel.
  std::mt19937_64 rng(109);
  for (int trial = 0; trial < 5; ++trial) {
    ChoiOperator rho = stokes_to_choi(random_channel(rng));
    auto dist = sample_distribution(rho, Protocol::Sixstate);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        double mass = 0;
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y)
            mass += dist[outcome_index(
                {x, static_cast<Basis>(a), y, static_cast<Basis>(b)},
                Protocol::Sixstate)];
        CHECK(mass == doctest::Approx(1.0 / 9).epsilon(1e-10));
      }
  }
}

TEST_CASE("degrade") {
  DegradedOutcome d1 = degrade({0, Basis::Z, 1, Basis::Z});
  CHECK(d1.sym == 1);
  CHECK(d1.basis_a == Basis::Z);
  CHECK(d1.basis_b == Basis::Z);

  DegradedOutcome d2 = degrade({1, Basis::Z, 0, Basis::X});
  CHECK(d2.sym == DegradedOutcome::kDelta);

  DegradedOutcome d3 = degrade({1, Basis::X, 1, Basis::X});
  CHECK(d3.sym == 0);

  // Total and deterministic, with fiber sizes 2 (matched) and 4 (mismatched).
  std::map<int, int> fiber;
  for (int i = 0; i < outcome_count(Protocol::Sixstate); ++i) {
    SampleOutcome z = outcome_from_index(i, Protocol::Sixstate);
    ++fiber[degraded_index(degrade(z), Protocol::Sixstate)];
  }
  for (const auto& [deg, count] : fiber) {
    int sym = deg / 9;
    CHECK(count == (sym == DegradedOutcome::kDelta ? 4 : 2));
  }
}

TEST_CASE("pauli sample distribution depends only on the bell distribution") {
  std::mt19937_64 rng(113);
  for (int trial = 0; trial < 10; ++trial) {
    BellDistribution p = random_bell(rng);
    auto e = p.diagonal_stokes();
    ChoiOperator rho = stokes_to_choi(make_pauli_channel(p));
    auto dist = sample_distribution(rho, Protocol::Sixstate);
    for (int a = 0; a < 3; ++a) {
      // Matched-basis agreement carries e_a (the y basis anticorrelates).
      double agree = 0;
      for (int x = 0; x < 2; ++x)
        agree += dist[outcome_index(
            {x, static_cast<Basis>(a), x, static_cast<Basis>(a)},
            Protocol::Sixstate)];
      double expected = a == 2 ? (1 - e[a]) / 2 : (1 + e[a]) / 2;
      CHECK(9 * agree == doctest::Approx(expected).epsilon(1e-10));
      // Mismatched blocks are flat for Pauli channels.
      for (int b = 0; b < 3; ++b) {
        if (a == b) continue;
        for (int x = 0; x < 2; ++x)
          for (int y = 0; y < 2; ++y)
            CHECK(dist[outcome_index({x, static_cast<Basis>(a), y,
                                      static_cast<Basis>(b)},
                                     Protocol::Sixstate)] ==
                  doctest::Approx(1.0 / 36).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("feasible ryy interval") {
  // Amplitude damping collapses to the single point sqrt(1-p).
  for (double p : {0.1, 0.35, 0.72}) {
    StokesParams s = make_amplitude_damping_channel(p);
    Interval iv = feasible_ryy_interval(ParameterSlice::make_omega(s).omega);
    CHECK(iv.width() < 1e-9);
    CHECK(iv.lo == doctest::Approx(std::sqrt(1 - p)).epsilon(1e-7));
  }

  // Identity channel: only R_yy = 1 is consistent with R_zz = R_xx = 1.
  Interval id_iv = feasible_ryy_interval(
      ParameterSlice::make_omega(make_identity_channel()).omega);
  CHECK(id_iv.width() < 1e-9);
  CHECK(id_iv.lo == doctest::Approx(1.0).epsilon(1e-9));

  // Depolarizing slice: the PSD bisection against the hand-derived
  // interval e_y in [1-4e, 1], i.e. Bell completions
  // (1-2e+k, e-k, e-k, k) for k in [0, e].
  const double e = 0.2;
  std::array<double, 6> omega =
      ParameterSlice::make_omega(make_depolarizing_channel(e)).omega;
  Interval dep = feasible_ryy_interval(omega);
  CHECK(dep.lo == doctest::Approx(1 - 4 * e).epsilon(1e-9));
  CHECK(dep.hi == doctest::Approx(1.0).epsilon(1e-9));
  for (double kappa : {0.0, 0.5 * e, e}) {
    BellDistribution completion{1 - 2 * e + kappa, e - kappa, e - kappa,
                                kappa};
    auto diag = completion.diagonal_stokes();
    CHECK(diag[0] == doctest::Approx(1 - 2 * e));
    CHECK(diag[1] == doctest::Approx(1 - 2 * e));
    CHECK(diag[2] >= dep.lo - 1e-9);
    CHECK(diag[2] <= dep.hi + 1e-9);
  }

  // Every point of the returned interval really is PSD.
  for (int i = 0; i <= 10; ++i) {
    double ryy = dep.lo + dep.width() * i / 10.0;
    CHECK(hermitian_eigenvalues(omega_completion(omega, ryy).op).minCoeff() >
          -1e-9);
  }

  // An inconsistent slice has no completion.
  std::array<double, 6> impossible{1.0, 0.0, 0.0, 1.0, 0.9, 0.0};
  CHECK_THROWS_AS(feasible_ryy_interval(impossible), empty_candidate_set);
}

TEST_CASE("candidate set bounds and samplers") {
  std::mt19937_64 rng(127);

  ParameterSlice omega =
      ParameterSlice::make_omega(make_rotated_depolarizing_channel(0.05, 0.6));
  CandidateSetBounds ob = candidate_set_bounds(omega);
  REQUIRE(ob.ryy.has_value());
  CHECK(choi_min_eigenvalue(ob.witness) > -1e-9);
  for (int i = 0; i < 10; ++i) {
    StokesParams s = sample_completion(omega, rng);
    CHECK(choi_min_eigenvalue(s) > -1e-9);
    CHECK(s.R(0, 0) == doctest::Approx(omega.omega[0]));
    CHECK(s.R(1, 1) == doctest::Approx(omega.omega[3]));
  }

  ParameterSlice gamma =
      ParameterSlice::make_gamma(make_amplitude_damping_channel(0.4));
  CandidateSetBounds gb = candidate_set_bounds(gamma);
  CHECK(choi_min_eigenvalue(gb.witness) > -1e-9);
  for (int i = 0; i < 10; ++i) {
    StokesParams s = sample_completion(gamma, rng);
    CHECK(choi_min_eigenvalue(s) > -1e-9);
    CHECK(s.R(0, 0) == doctest::Approx(gamma.gamma[0]));
    CHECK(s.R(1, 1) == doctest::Approx(gamma.gamma[1]));
    CHECK(s.R(2, 2) == doctest::Approx(gamma.gamma[2]));
  }

  ParameterSlice upsilon =
      ParameterSlice::make_upsilon(make_depolarizing_channel(0.1));
  CandidateSetBounds ub = candidate_set_bounds(upsilon);
  REQUIRE(ub.bell_ey.has_value());
  for (int i = 0; i < 10; ++i) {
    StokesParams s = sample_completion(upsilon, rng);
    CHECK(choi_min_eigenvalue(s) > -1e-9);
    CHECK(s.R(0, 0) == doctest::Approx(upsilon.upsilon[0]));
    CHECK(s.R(1, 1) == doctest::Approx(upsilon.upsilon[1]));
  }
}
