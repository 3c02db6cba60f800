#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Dense complex linear algebra on small Hilbert spaces plus the entropy
// functionals used by the key-rate formulas. All logarithms are base 2 and
// all entropies are in bits. Everything here is a pure function over
// immutable values; there is no shared mutable state.
namespace qkd {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Tolerances. Double-precision Hermitian solves on dim <= 256 keep the
// backward error well below these.
inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kPsdTol = 1e-10;
inline constexpr double kRankCutoff = 1e-12;

// Domain violation (bad probability, non-PSD operator, dimension mismatch...).
class domain_error : public std::runtime_error {
 public:
  explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// An exact/exhaustive routine was asked to run outside its size budget.
class budget_exceeded : public std::runtime_error {
 public:
  explicit budget_exceeded(const std::string& what) : std::runtime_error(what) {}
};

Matrix kron(const Matrix& a, const Matrix& b);

bool is_hermitian(const Matrix& m, double tol = kHermitianTol);

// Throws domain_error unless m is Hermitian, PSD within -kPsdTol and has
// unit trace within kPsdTol.
void require_density_operator(const Matrix& m, const std::string& who);

// Eigenvalues of a Hermitian matrix, ascending.
Eigen::VectorXd hermitian_eigenvalues(const Matrix& m);

// -sum lambda*log2(lambda) over a spectrum; eigenvalues in [-kPsdTol, 0)
// are clamped to 0, anything more negative is rejected. The spectrum does
// not have to be normalized (used on unnormalized blocks of cq states).
double entropy_of_spectrum(const Eigen::VectorXd& eigenvalues);

double binary_entropy(double p);

double shannon_entropy(const std::vector<double>& probs);

double von_neumann_entropy(const Matrix& rho);

// Partial trace over the subsystems NOT listed in keep. dims are the
// subsystem dimensions in tensor order (first factor most significant);
// keep lists subsystem indices to retain, in their original order.
Matrix partial_trace(const Matrix& rho, const std::vector<int>& dims,
                     const std::vector<int>& keep);

// Purification of a density operator: a pure state on dim*rank whose
// reduction onto the first factor equals rho. The environment dimension is
// the rank of rho with eigenvalue cutoff kRankCutoff. Index convention:
// amplitude(i*rank + j) pairs system basis i with environment basis j.
Vector purify(const Matrix& rho);

// Tr|rho - sigma| = sum of absolute eigenvalues of the difference.
double trace_distance(const Matrix& rho, const Matrix& sigma);

// H_min(rho_AB | sigma_B) = -log2 of the smallest lambda with
// lambda*id_A (x) sigma_B - rho_AB PSD. Returns nullopt when the support
// condition supp(rho_B) <= supp(sigma_B) fails (the -infinity case); an
// explicit "undefined" rather than a float infinity.
std::optional<double> min_entropy(const Matrix& rho_AB, const Matrix& sigma_B,
                                  int dim_a);

// log2 rank with eigenvalue cutoff kRankCutoff.
double max_entropy_rank(const Matrix& rho);

// Per-symbol lower bound on the smooth min-entropy of an n-fold product cq
// state: (HXB - HB) - delta with
// delta = (2*HmaxX + 3) * sqrt(log2(2/eps) / n).
double smooth_min_entropy_product_bound(double h_xb, double h_b,
                                        double h_max_x, long long n,
                                        double eps);

// Classical registers with a joint distribution and one normalized
// conditional operator per outcome of nonzero probability. Houses rho_XE,
// rho_XYE and the two-copy register state of the two-way postprocessing.
struct CcqState {
  struct Register {
    std::string name;
    int size = 2;
  };

  std::vector<Register> registers;
  std::vector<double> joint;         // flat row-major over registers
  std::vector<Matrix> conditionals;  // per outcome; may be empty where joint==0
  int eve_dim = 1;                   // 1 means no quantum part

  int alphabet_size() const;
  int register_index(const std::string& name) const;
  std::vector<int> outcome_of(int index) const;
  int index_of(const std::vector<int>& outcome) const;

  // sum_c P(c) |c><c| (x) rho^c as one dense operator.
  Matrix total_operator() const;

  void validate(double tol = kPsdTol) const;
};

// Entropy of the reduced operator keeping the register subset (by index)
// and, optionally, the quantum part. Blocks are diagonal in the classical
// labels, so this costs one small eigensolve per kept-label cell.
double ccq_reduced_entropy(const CcqState& s, const std::vector<int>& keep_regs,
                           bool keep_eve);

// H(targets | given [, E]) = H(targets+given[+E]) - H(given[+E]).
// Classical-only conditioning reduces to the Shannon conditional entropy.
double conditional_entropy(const CcqState& s,
                           const std::vector<std::string>& targets,
                           const std::vector<std::string>& given,
                           bool given_includes_quantum);

}  // namespace qkd
