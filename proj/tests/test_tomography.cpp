#include "qkdrate/tomography.hpp"

#include "test_support.hpp"

#include "doctest.h"

#include <cmath>
#include <sstream>

using namespace qkd;

TEST_CASE("draw_samples is deterministic and respects the support") {
  ChoiOperator id = stokes_to_choi(make_identity_channel());
  SampleSet a = draw_samples(id, Protocol::Bb84, 5000, 42);
  SampleSet b = draw_samples(id, Protocol::Bb84, 5000, 42);
  CHECK(a.counts == b.counts);

  // Matched bases never disagree over the identity channel.
  for (int basis = 0; basis < 2; ++basis)
    for (int bit = 0; bit < 2; ++bit) {
      SampleOutcome z{bit, static_cast<Basis>(basis), 1 - bit,
                      static_cast<Basis>(basis)};
      CHECK(a.counts[outcome_index(z, Protocol::Bb84)] == 0.0);
    }

  double total = 0;
  for (double c : a.counts) total += c;
  CHECK(total == 5000.0);

  CHECK_THROWS_AS(draw_samples(id, Protocol::Bb84, 0, 1), domain_error);
}

TEST_CASE("chi-square fit of sampled counts at m = 1e5") {
  // Frozen seed list; each statistic stays below the 99th percentile of the
  // chi-square with (#outcomes - 1) degrees of freedom.
  ChoiOperator rho = stokes_to_choi(make_amplitude_damping_channel(0.3));
  const double q99_sixstate = 57.342;  // chi2(35) upper 1% point
  std::vector<double> probs = sample_distribution(rho, Protocol::Sixstate);
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    SampleSet s = draw_samples(rho, Protocol::Sixstate, 100000, seed);
    double stat = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
      double expected = probs[i] * s.m;
      if (expected < 1e-9) {
        CHECK(s.counts[i] == 0.0);
        continue;
      }
      stat += (s.counts[i] - expected) * (s.counts[i] - expected) / expected;
    }
    CHECK(stat < q99_sixstate);
  }
}

TEST_CASE("ml estimate recovers the truth from exact counts") {
  struct Case {
    StokesParams channel;
    EstimationMode mode;
  };
  std::vector<Case> cases = {
      {make_rotated_depolarizing_channel(0.08, 0.5), EstimationMode::FullSixstate},
      {make_amplitude_damping_channel(0.25), EstimationMode::FullSixstate},
      {make_rotated_depolarizing_channel(0.08, 0.5), EstimationMode::Bb84Omega},
      {make_depolarizing_channel(0.1), EstimationMode::DegradedGamma},
      {make_depolarizing_channel(0.1), EstimationMode::DegradedUpsilon},
  };
  for (const auto& c : cases) {
    Protocol protocol = (c.mode == EstimationMode::Bb84Omega ||
                         c.mode == EstimationMode::DegradedUpsilon)
                            ? Protocol::Bb84
                            : Protocol::Sixstate;
    ChoiOperator rho = stokes_to_choi(c.channel);
    SampleSet s = exact_sample_set(rho, protocol, 1000000);
    EstimationReport rep = ml_estimate(s, c.mode);
    CHECK(estimation_error(rep, rho) < 1e-5);
  }
}

TEST_CASE("ml estimate concentrates with m = 1e5 draws") {
  ChoiOperator rho = stokes_to_choi(make_depolarizing_channel(0.1));
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    SampleSet s = draw_samples(rho, Protocol::Sixstate, 100000, seed);
    EstimationReport rep = ml_estimate(s, EstimationMode::FullSixstate);
    // |e_hat - e| on the diagonal, read from the estimated Stokes matrix.
    double e_hat = (1.0 - rep.estimate.full.R(0, 0)) / 2.0;
    CHECK(std::abs(e_hat - 0.1) < 0.01);
  }
}

TEST_CASE("degraded-upsilon estimation of the rotation channel") {
  // Only matched-basis agreement statistics survive the degrading map, so
  // the estimate has to match the analytic degraded distribution, which
  // carries R_zz = R_xx = cos(theta).
  ChoiOperator rho = stokes_to_choi(make_rotation_channel(M_PI / 3));
  SampleSet s = exact_sample_set(rho, Protocol::Bb84, 1000000);
  EstimationReport rep = ml_estimate(s, EstimationMode::DegradedUpsilon);
  CHECK(rep.estimate.upsilon[0] ==
        doctest::Approx(std::cos(M_PI / 3)).epsilon(1e-5));
  CHECK(rep.estimate.upsilon[1] ==
        doctest::Approx(std::cos(M_PI / 3)).epsilon(1e-5));
}

TEST_CASE("log-likelihood at the estimate dominates the initializer") {
  ChoiOperator rho = stokes_to_choi(make_amplitude_damping_channel(0.35));
  for (uint64_t seed : {3u, 7u, 11u}) {
    SampleSet s = draw_samples(rho, Protocol::Sixstate, 2000, seed);
    EstimationReport rep = ml_estimate(s, EstimationMode::FullSixstate);
    // The moment initializer is itself reachable: the ML result must not be
    // worse (ml_estimate already guarantees this internally; check the
    // reported likelihood against a directly evaluated competitor).
    std::vector<double> probs = sample_distribution(
        ChoiOperator{stokes_to_choi_unchecked(rep.estimate.full)},
        Protocol::Sixstate);
    CHECK(rep.log_likelihood ==
          doctest::Approx(log_likelihood(s.counts, probs)).epsilon(1e-9));
  }
}

TEST_CASE("degraded likelihood only sees the degraded histogram") {
  ChoiOperator rho = stokes_to_choi(make_depolarizing_channel(0.12));
  SampleSet s = draw_samples(rho, Protocol::Sixstate, 20000, 5);

  // Move mass between two raw outcomes in the same degraded fiber:
  // (x=0,z | y=1,z) and (x=1,z | y=0,z) both degrade to (w=1, z, z).
  SampleSet permuted = s;
  int i1 = outcome_index({0, Basis::Z, 1, Basis::Z}, Protocol::Sixstate);
  int i2 = outcome_index({1, Basis::Z, 0, Basis::Z}, Protocol::Sixstate);
  std::swap(permuted.counts[i1], permuted.counts[i2]);

  EstimationReport a = ml_estimate(s, EstimationMode::DegradedGamma);
  EstimationReport b = ml_estimate(permuted, EstimationMode::DegradedGamma);
  for (int i = 0; i < 3; ++i)
    CHECK(a.estimate.gamma[i] == doctest::Approx(b.estimate.gamma[i]));
}

TEST_CASE("full model separates a non-pauli channel from the pauli family") {
  ChoiOperator rho =
      stokes_to_choi(make_rotated_depolarizing_channel(0.05, M_PI / 4));
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    SampleSet s = draw_samples(rho, Protocol::Sixstate, 100000, seed);
    EstimationReport full = ml_estimate(s, EstimationMode::FullSixstate);
    double pauli_ll = ml_loglikelihood_pauli(s);
    CHECK(full.log_likelihood - pauli_ll > 0.0);
  }
}

TEST_CASE("consistency report") {
  ChoiOperator rho = stokes_to_choi(make_depolarizing_channel(0.1));
  // Very large m: the error never exceeds a loose alpha.
  auto rows = consistency_report(rho, EstimationMode::FullSixstate, 0.1,
                                 {1000000}, 5, 99);
  CHECK(rows[0].mu_hat == 0.0);

  // alpha beyond the parameter-space diameter is never exceeded.
  auto loose = consistency_report(rho, EstimationMode::DegradedUpsilon, 8.0,
                                  {100}, 5, 3);
  CHECK(loose[0].mu_hat == 0.0);

  CHECK_THROWS_AS(consistency_report(rho, EstimationMode::FullSixstate, 0.1,
                                     {100}, 0, 1),
                  domain_error);
}

TEST_CASE("estimated ambiguity per slice") {
  // Full six-state estimate of the identity channel.
  SampleSet s = exact_sample_set(stokes_to_choi(make_identity_channel()),
                                 Protocol::Sixstate, 10000);
  EstimationReport rep = ml_estimate(s, EstimationMode::FullSixstate);
  CHECK(estimated_ambiguity(rep) == doctest::Approx(1.0).epsilon(1e-5));

  // Upsilon slice at (0.9, 0.9): worst case is the unital bound value
  // 1 - h((1+0.9)/2).
  EstimationReport ups;
  ups.mode = EstimationMode::DegradedUpsilon;
  ups.estimate.kind = ParameterSlice::Kind::Bb84Upsilon;
  ups.estimate.upsilon = {0.9, 0.9};
  CHECK(estimated_ambiguity(ups) ==
        doctest::Approx(1 - binary_entropy(0.95)).epsilon(1e-7));

  // Omega slice of amplitude damping: the single-point candidate set value.
  EstimationReport omega;
  omega.mode = EstimationMode::Bb84Omega;
  omega.estimate =
      ParameterSlice::make_omega(make_amplitude_damping_channel(0.2));
  double expected = eve_ambiguity(
      stokes_to_choi(make_amplitude_damping_channel(0.2)), Direction::Direct,
      Basis::Z);
  CHECK(estimated_ambiguity(omega) == doctest::Approx(expected).epsilon(1e-7));
}

TEST_CASE("eta_hat shrinks with alpha") {
  EstimationReport rep;
  rep.mode = EstimationMode::DegradedGamma;
  rep.estimate.kind = ParameterSlice::Kind::SixstateGamma;
  rep.estimate.gamma = {0.8, 0.8, 0.8};
  double big = eta_hat(rep, 0.1);
  double small = eta_hat(rep, 0.01);
  CHECK(small < big);
  CHECK(small > 0.0);
}

TEST_CASE("sample csv round trip") {
  ChoiOperator rho = stokes_to_choi(make_amplitude_damping_channel(0.4));
  SampleSet s = draw_samples(rho, Protocol::Sixstate, 3000, 17);
  std::string text = sample_set_to_csv(s);
  std::istringstream in(text);
  SampleSet back = sample_set_from_csv(in, Protocol::Sixstate);
  CHECK(back.m == s.m);
  CHECK(back.counts == s.counts);

  std::istringstream bad("no header\n");
  CHECK_THROWS_AS(sample_set_from_csv(bad, Protocol::Sixstate), domain_error);
}
