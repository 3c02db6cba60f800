#pragma once

#include "qkdrate/channel.hpp"

#include <optional>

// Asymptotic one-way key-rate formulas: proposed (full-tomography) vs
// conventional (degraded-statistics) estimation, direct vs reverse
// reconciliation, both protocols, any measurement basis, optional noisy
// preprocessing.
namespace qkd {

enum class Estimation { Proposed, Conventional };
enum class Direction { Direct, Reverse };

struct RateQuery {
  ParameterSlice channel;
  Protocol protocol = Protocol::Sixstate;
  Estimation estimation = Estimation::Proposed;
  Direction direction = Direction::Direct;
  Basis key_basis = Basis::Z;
  std::optional<double> noisy_q;  // fixed preprocessing flip probability
  bool optimize_q = false;        // 1e-3 grid plus golden refinement

  void validate() const;
};

struct RateResult {
  double rate = 0;  // clamped at 0
  double raw = 0;   // unclamped formula value
  double eve_ambiguity = 0;
  double reconciliation_cost = 0;
  std::optional<ChoiOperator> worst_case;  // inner-minimum attainer
  std::optional<double> optimal_q;
  std::optional<double> branch1, branch2;  // filled by the two-way rates
};

// H(X|E) (direct) or H(Y|E) (reverse): purify rho, measure key_basis on the
// corresponding side, trace out the other legitimate party.
double eve_ambiguity(const ChoiOperator& rho, Direction dir, Basis key_basis);

// Same with the key bit first passed through a probability-q flip.
double eve_ambiguity_noisy(const ChoiOperator& rho, Direction dir,
                           Basis key_basis, double q);

// H(X|Y) (direct) or H(Y|X) (reverse) of the matched-basis joint
// distribution.
double reconciliation_cost(const ChoiOperator& rho, Direction dir,
                           Basis key_basis);
double reconciliation_cost_noisy(const ChoiOperator& rho, Direction dir,
                                 Basis key_basis, double q);

RateResult rate_sixstate(const RateQuery& q);
RateResult rate_bb84(const RateQuery& q);
RateResult rate_conventional(const RateQuery& q);

// Dispatch on protocol + estimation.
RateResult compute_rate(const RateQuery& q);

// min over the slice's candidate set of Eve's ambiguity; the BB84 omega
// minimization is reduced to the single free coordinate R_yy and solved by
// golden section (200-point pre-scan). Returns the minimizer through
// worst_case when non-null.
double worst_case_ambiguity(const ParameterSlice& slice, Direction dir,
                            Basis key_basis,
                            ChoiOperator* worst_case = nullptr);

// Closed form of the BB84 worst-case ambiguity bound; exact when t = 0.
// d_z, d_x are the singular values of [[R_zz,R_zx],[R_xz,R_xx]].
double unital_bound_ambiguity(const std::array<double, 6>& omega,
                              Direction dir);

// Closed forms of H(X|E) / H(Y|E) for unital channels (t = 0).
double unital_sixstate_ambiguity(const StokesParams& s, Direction dir);

// Numeric re-minimization of the conventional rate over the slice's full
// candidate set (9 or 10 free coordinates, Nelder-Mead with a PSD barrier,
// multi-start); used to verify the closed forms.
double conventional_rate_numeric(const ParameterSlice& slice, Direction dir,
                                 Basis key_basis, int restarts,
                                 std::mt19937_64& rng);

struct ImprovementReport {
  enum class Verdict { Equal, Strict };
  Verdict verdict = Verdict::Equal;
  bool predicted_strict = false;  // (t_z,t_x) != 0 or (R_zx,R_xz) != 0
  double proposed = 0;
  double conventional = 0;
  double delta = 0;
};

// Compares the proposed and conventional BB84 rates for an omega slice.
// Classifies equal when |delta| < 1e-8, strict when delta > 1e-8.
// Requires R_zz != 0 and R_xx != 0.
ImprovementReport strict_improvement_check(const std::array<double, 6>& omega,
                                           Direction dir = Direction::Direct,
                                           Basis key_basis = Basis::Z);

}  // namespace qkd
