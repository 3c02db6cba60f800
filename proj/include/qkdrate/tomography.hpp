#pragma once

#include "qkdrate/rates_oneway.hpp"

#include <cstdint>
#include <iosfwd>

// Finite-sample channel estimation: seeded outcome sampling, maximum
// likelihood in each parameter slice, and consistency diagnostics.
namespace qkd {

struct SampleSet {
  Protocol protocol = Protocol::Sixstate;
  long long m = 0;
  // Histogram over the flat outcome ordering. Real-valued so an exact
  // distribution (counts = m * P) can stand in for the m -> infinity limit.
  std::vector<double> counts;
  uint64_t seed = 0;
};

enum class EstimationMode {
  FullSixstate,
  Bb84Omega,
  DegradedGamma,
  DegradedUpsilon,
};

struct EstimationReport {
  EstimationMode mode = EstimationMode::FullSixstate;
  ParameterSlice estimate;
  double log_likelihood = 0;  // bits
  double ambiguity_estimate = 0;
  bool converged = false;
  int iterations = 0;
};

// i.i.d. draws from sample_distribution via inverse CDF over the fixed
// outcome ordering with a seeded mt19937_64; identical inputs give
// identical counts.
SampleSet draw_samples(const ChoiOperator& rho, Protocol protocol, long long m,
                       uint64_t seed);

// Exact-distribution surrogate: counts = m * P_rho.
SampleSet exact_sample_set(const ChoiOperator& rho, Protocol protocol,
                           long long m);

struct MlOptions {
  int max_iterations = 5000;
  double step_tol = 1e-8;
};

// Maximizes sum counts(z) * log2 P_theta(z) over the slice's parameter
// space subject to PSD completability: Nelder-Mead from the
// moment-matching initializer with a PSD barrier. Degraded modes first
// push the histogram through degrade. Non-convergence is reported in the
// result, not thrown.
EstimationReport ml_estimate(const SampleSet& s, EstimationMode mode,
                             const MlOptions& options = {});

// Pauli-restricted ML over the Bell-diagonal family; used to contrast the
// full model against the Pauli submodel. Returns the best log-likelihood.
double ml_loglikelihood_pauli(const SampleSet& s);

// Log-likelihood (bits) of a histogram under an explicit outcome
// distribution.
double log_likelihood(const std::vector<double>& counts,
                      const std::vector<double>& probs);

// Flat parameter vector of a slice (the estimation-error coordinates).
std::vector<double> slice_parameters(const ParameterSlice& slice);

// Estimation-error norm between reports: trace distance of the Choi
// operators in full mode, Euclidean distance on the slice parameters
// otherwise.
double estimation_error(const EstimationReport& report,
                        const ChoiOperator& truth);

struct ConsistencyRow {
  long long m = 0;
  double mu_hat = 0;  // fraction of trials with error norm > alpha
};

std::vector<ConsistencyRow> consistency_report(const ChoiOperator& rho_true,
                                               EstimationMode mode,
                                               double alpha,
                                               const std::vector<long long>& m_list,
                                               int trials, uint64_t seed);

// Plugs the estimate into eve_ambiguity (full modes) or the worst-case
// minimizer over the estimated slice.
double estimated_ambiguity(const EstimationReport& report,
                           Direction dir = Direction::Direct,
                           Basis key_basis = Basis::Z);

// Numeric realization of the continuity modulus eta(alpha): the largest
// |H(perturbed) - H(estimate)| over a deterministic 26-point sphere sample
// of slice perturbations of radius alpha (infeasible points are shrunk
// back to the completable region).
double eta_hat(const EstimationReport& report, double alpha,
               Direction dir = Direction::Direct, Basis key_basis = Basis::Z);

// CSV with header x,basisA,y,basisB,count.
std::string sample_set_to_csv(const SampleSet& s);
SampleSet sample_set_from_csv(std::istream& in, Protocol protocol);

}  // namespace qkd
