#pragma once

#include "qkdrate/rates_oneway.hpp"

#include <array>
#include <cstdint>
#include <utility>

// Two-way postprocessing rates: auxiliary-register construction from two
// channel copies, general block-function rates, the Bell-diagonal closed
// form, and the comparison formulas.
namespace qkd {

// Truth tables F2^2 -> F2 deciding which second bits are kept. Entry index
// is 2*a1 + a2; packed form has bit i = chi(i>>1, i&1). The second bit is
// kept exactly when chi evaluates to 0 on (U1, V1).
struct BlockFunctions {
  std::array<uint8_t, 4> chi_a{};
  std::array<uint8_t, 4> chi_b{};

  static BlockFunctions from_tables(int packed_a, int packed_b);
  // chi_A = parity test (keep Alice's bit on agreeing blocks), chi_B = 1.
  static BlockFunctions advantage_distillation();
  int packed_a() const;
  int packed_b() const;
};

inline int zeta(int bit, int u1, int v1, const std::array<uint8_t, 4>& chi) {
  return chi[2 * u1 + v1] ? 0 : bit;
}

// Registers (U1, U2, V2, W1), each binary, with Eve part E1E2 of dimension
// at most 16, plus the classical copy-pair distribution the cost terms need.
struct TwoWayState {
  CcqState state;                 // register order U1, U2, V2, W1
  std::array<double, 16> pxy2{};  // P(x1,y1,x2,y2), index ((x1*2+y1)*2+x2)*2+y2
  BlockFunctions f;               // the block functions the registers used
};

TwoWayState derive_two_way_state(const ChoiOperator& rho,
                                 const BlockFunctions& f);
// Same construction from an explicit purification of rho on (A,B,E); used
// when a specific environment basis matters.
TwoWayState derive_two_way_state_from_purification(const Vector& psi_abe,
                                                   int eve_dim,
                                                   const BlockFunctions& f);

// The entropic ingredients of the rate formulas. The quantum terms are the
// same for both reconciliation directions (V1 = U1 + W1 is a relabeling);
// only the first-round cost differs.
struct TwoWayEntropies {
  double h_u1u2v2_given_w1e = 0;  // H(U1 U2 V2 | W1 E1 E2)
  double h_u2v2_given_u1w1e = 0;  // H(U2 V2 | U1 W1 E1 E2)
  double cost_u1_direct = 0;      // H(U1 | Y1 Y2)
  double cost_u1_reverse = 0;     // H(V1 | X1 X2)
  double cost_u2 = 0;             // H(U2 | W1 Y1 Y2)
  double cost_v2 = 0;             // H(V2 | W1 X1 X2)
};

TwoWayEntropies two_way_entropies(const TwoWayState& s);

// 1/2 max[ H(U1U2V2|W1E1E2) - H(U1|Y1Y2) - H(U2|W1Y1Y2) - H(V2|W1X1X2),
//          H(U2V2|U1W1E1E2) - H(U2|W1Y1Y2) - H(V2|W1X1X2) ]
// (direct; reverse swaps U1<->V1 and the X/Y costs). BB84 minimizes over
// the omega candidate set via the R_yy reduction. Both branch values are
// reported.
RateResult rate_twoway(const ParameterSlice& channel, Protocol protocol,
                       Direction dir, const BlockFunctions& f);

// Closed form of the two-way rate for a Bell-diagonal state under the
// advantage-distillation block functions. Zero-denominator h-terms take
// their continuous-extension value 0.
double pauli_closed_form(const BellDistribution& p);

struct ComparisonRates {
  double advantage_distillation = 0;
  std::optional<double> vollbrecht;  // Bell-diagonal input only
  double gohari = 0;
};

// Advantage-distillation, Vollbrecht-Verstraete EDP yield, and the
// Gohari-Anantharam diagnostic, all with the advantage-distillation block
// functions.
ComparisonRates comparison_rates(const ChoiOperator& rho,
                                 const std::optional<BellDistribution>& bell);

double vollbrecht_yield(const BellDistribution& p);

// Eigendecomposition of the uniform coset mixture
//   sum_{x in C} 1/|C| rho^{x+a, k}
// of phase-register states for a Bell distribution, in the 2^m-dimensional
// l-register space (bit i of an index is copy i). Eigenvalues are indexed
// by coset representatives of F2^m / C-perp; zero eigenvalues carry a zero
// vector.
struct CosetSpectralData {
  std::vector<uint32_t> representatives;
  std::vector<double> eigenvalues;
  std::vector<Vector> eigenvectors;
};

CosetSpectralData coset_mixture_eigendecomposition(
    const std::vector<uint32_t>& code, int m, uint32_t a, uint32_t k,
    const BellDistribution& pkl);

// The pure Eve state |phi^m(x, k)> in the l-register space.
Vector coset_state_vector(int m, uint32_t x, uint32_t k,
                          const BellDistribution& pkl);

// Exhaustive search over all 16 x 16 truth-table pairs; ties break to the
// lexicographically first (packed_a, packed_b). rate_table, when non-null,
// receives all 256 raw rates indexed 16*packed_a + packed_b.
std::pair<BlockFunctions, RateResult> optimize_block_functions(
    const ParameterSlice& channel, Protocol protocol, Direction dir,
    std::vector<double>* rate_table = nullptr);

}  // namespace qkd
