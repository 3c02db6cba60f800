#pragma once

#include "qkdrate/quantum.hpp"
#include "qkdrate/rates_twoway.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>

// Desk-scale executable postprocessing: linear-code Slepian-Wolf
// reconciliation (one-way and two-way), Toeplitz-hash privacy
// amplification, finite-key lengths, and exact small-instance secrecy
// audits.
namespace qkd {

using BitVec = std::vector<uint8_t>;

// k x n binary parity-check matrix of full rank k. Bit j of a row is
// column j. Decoding budgets: n <= 24 and n - k <= 20 (exhaustive coset
// enumeration).
struct LinearCode {
  int n = 0;
  int k = 0;
  std::vector<uint32_t> rows;

  static LinearCode from_rows(int n, std::vector<uint32_t> rows);
  // Rejection-sampled full-rank random matrix, deterministic in the seed.
  static LinearCode random_code(int n, int k, uint64_t seed);
  // Random full-rank code whose nonzero codewords all have weight in
  // [min_weight, n - min_weight]. Minimum-entropy decoding cannot tell a
  // sequence from its complement by type alone, so codes with
  // near-complement words decode badly at desk-scale block lengths; this
  // search realizes the "there exists a parity check matrix" side of the
  // universal-coding theorem. Requires n - k <= 20 (codeword enumeration).
  static LinearCode search_code(int n, int k, int min_weight, uint64_t seed);
  // The 9 x 20 parity check of a [20,11,5] code obtained from the binary
  // Golay [23,12,7] code by shortening once and puncturing twice. The
  // workhorse block code of the desk-scale reconciliation runs: its weight
  // window [5,16] clears the low-weight and near-complement error families
  // of minimum-entropy decoding.
  static LinearCode golay_derived_20_11();
  // Text format: first line "n k", then k lines of n characters in {0,1}
  // (leftmost character = column 0).
  static LinearCode parse(std::istream& in);
  std::string to_text() const;
};

BitVec syndrome(const LinearCode& code, const BitVec& x);

// argmin over {x : Mx = t} of the empirical joint-type entropy
// H(P_{x,side}); ties break to the lexicographically smallest x.
BitVec min_entropy_decode(const LinearCode& code, const BitVec& syndrome_bits,
                          const std::vector<int>& side, int side_alphabet);

struct OneWayIrResult {
  BitVec x_hat;
  BitVec transcript;  // the syndrome, the only public message
};

OneWayIrResult one_way_ir(const BitVec& x, const BitVec& y,
                          const LinearCode& code);

struct TwoWayIrResult {
  // Alice ends with (u1, u2_tilde, v2_hat), Bob with (u1_hat, u2_hat,
  // v2_tilde); success means both equal the true (u1, u2, v2).
  BitVec u1, u2_tilde, v2_hat;
  BitVec u1_hat, u2_hat, v2_tilde;
  // Public transcript: first syndrome, Bob's parity estimate, and the two
  // cross syndromes.
  BitVec t1, w1_hat, t_a2, t_b2;
  bool success = false;
};

// The six-step two-way procedure on length-2n sequences (n blocks of 2).
TwoWayIrResult two_way_ir(const BitVec& x, const BitVec& y,
                          const LinearCode& m1, const LinearCode& m_a2,
                          const LinearCode& m_b2, const BlockFunctions& f);

// Seeded binary Toeplitz matrix as the universal hash family.
struct ToeplitzHash {
  int in_bits = 0;
  int out_bits = 0;
  BitVec diagonal;  // n + l - 1 bits; T(i,j) = diagonal[i - j + n - 1]

  static ToeplitzHash from_bits(int n, int l, BitVec diagonal);
  static ToeplitzHash from_seed(int n, int l, uint64_t seed);
};

BitVec toeplitz_apply(const ToeplitzHash& h, const BitVec& x);

struct FiniteKeyParams {
  long long n = 0;  // key-generation rounds (pairs for two-way)
  long long m = 0;  // sample rounds (diagnostic only)
  double eps = 1e-9;
  double delta = 1e-9;
  double alpha = 0.05;
  double eta = 0;  // continuity allowance from tomography
  long long k = 0;                        // one-way syndrome length
  long long k1 = 0, k_a2 = 0, k_b2 = 0;   // two-way syndrome lengths
};

struct FiniteKeyResult {
  long long length = 0;
  bool abort = false;
  double rhs = 0;   // per-symbol right-hand side of the length condition
  double nu_n = 0;
};

// Largest l with l/n < H - eta - k/n - nu_n,
// nu_n = 5 sqrt(log2(3/eps)/n) + 2 log2(3/(2 eps))/n. Abort outside the
// acceptable region (nonpositive right-hand side).
FiniteKeyResult finite_key_length_oneway(const FiniteKeyParams& p,
                                         double ambiguity);

// Two-way variant, normalized per 2n symbols:
// l/(2n) < 1/2 max[H1 - eta - (k1+kA2+kB2)/n, H2 - eta - (kA2+kB2)/n] - nu_n,
// nu_n = 5 sqrt(log2(36/eps^2)/n) + 2 log2(3/eps)/n.
FiniteKeyResult finite_key_length_twoway(const FiniteKeyParams& p,
                                         double h_branch1, double h_branch2);

struct SecrecyAuditResult {
  double distance = 0;     // exact d(rho_F(X)EF | EF), family-averaged
  double bound = 0;        // 2^{-(H_min - l)/2}
  double min_entropy = 0;  // H_min used by the bound
  long long family_size = 0;
  long long family_evaluated = 0;
  bool exhaustive = true;
};

// Exact privacy-amplification audit over the Toeplitz family. The state is
// a CcqState whose classical registers form the hashed input X (optionally
// with a classical side-information register named "E") and whose quantum
// part is Eve's operator. Exhaustive when the seed space is at most 2^20,
// otherwise a deterministic stride subsample of `subsample` seeds.
// For classical Eve H_min is the exact optimal-sigma value; with a quantum
// part the bound uses sigma = rho_E (a valid, slightly looser choice).
SecrecyAuditResult secrecy_audit(const CcqState& state, int l,
                                 long long subsample = 0);

}  // namespace qkd
