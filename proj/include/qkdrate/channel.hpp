#pragma once

#include "qkdrate/quantum.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

// Qubit channel representations (Stokes <-> Choi), the channel constructors
// used throughout, and measurement-outcome distributions. Coordinate order
// is (z, x, y) everywhere; complex conjugation of the Pauli operators uses
// the computational-basis convention (conj(sigma_y) = -sigma_y).
namespace qkd {

enum class Basis : int { Z = 0, X = 1, Y = 2 };
enum class Protocol { Bb84, Sixstate };

inline int basis_count(Protocol p) { return p == Protocol::Bb84 ? 2 : 3; }

const Matrix& pauli(Basis b);     // sigma_z, sigma_x, sigma_y
const Matrix& pauli_identity();   // 2x2 identity
// +1 eigenvector of pauli(b) maps to bit 0, -1 eigenvector to bit 1.
Vector basis_ket(Basis b, int bit);

// Channel not completely positive: the reconstructed Choi operator has a
// negative eigenvalue.
class invalid_channel : public domain_error {
 public:
  invalid_channel(const std::string& what, double min_eig)
      : domain_error(what), min_eigenvalue(min_eig) {}
  double min_eigenvalue;
};

class empty_candidate_set : public domain_error {
 public:
  explicit empty_candidate_set(const std::string& what) : domain_error(what) {}
};

// Affine Bloch-sphere action of a qubit channel: theta -> R*theta + t,
// rows/cols ordered (z, x, y).
struct StokesParams {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
};

// Normalized Choi operator on A(x)B, computational basis 00,01,10,11.
// Hermitian, PSD, trace 1, Tr_B = I/2.
struct ChoiOperator {
  Matrix op;

  void validate(double tol = 1e-9) const;
};

// Probabilities of the Bell-diagonal decomposition of a Pauli channel.
// Index order (p00, p10, p01, p11): first index flags a bit flip, second a
// phase flip.
struct BellDistribution {
  double p00 = 1, p10 = 0, p01 = 0, p11 = 0;

  void validate(double tol = 1e-9) const;
  std::array<double, 3> diagonal_stokes() const;  // (e_z, e_x, e_y)
  static BellDistribution from_diagonal_stokes(double ez, double ex, double ey);
};

// One sample event: Alice's bit and basis, Bob's bit and basis.
struct SampleOutcome {
  int xa = 0;
  Basis basis_a = Basis::Z;
  int yb = 0;
  Basis basis_b = Basis::Z;
};

// Flat index of a SampleOutcome: ((xa*|J| + a)*2 + yb)*|J| + b with the
// basis order z,x,y. This ordering is the sampling and CSV convention.
int outcome_index(const SampleOutcome& z, Protocol p);
SampleOutcome outcome_from_index(int index, Protocol p);
inline int outcome_count(Protocol p) {
  return 4 * basis_count(p) * basis_count(p);
}

// Degraded symbol from the conventional estimation: (x+y, a, b) on matched
// bases, (Delta, a, b) otherwise.
struct DegradedOutcome {
  static constexpr int kDelta = 2;
  int sym = 0;  // 0, 1 or kDelta
  Basis basis_a = Basis::Z;
  Basis basis_b = Basis::Z;
};

DegradedOutcome degrade(const SampleOutcome& z);
int degraded_index(const DegradedOutcome& d, Protocol p);
inline int degraded_count(Protocol p) {
  return 3 * basis_count(p) * basis_count(p);
}

// The observed parameter slice a protocol+estimation pair can see, with the
// complementary coordinates free.
struct ParameterSlice {
  enum class Kind { Full, Bb84Omega, SixstateGamma, Bb84Upsilon };

  Kind kind = Kind::Full;
  // Full: the whole parameterization.
  StokesParams full;
  // Bb84Omega: (R_zz, R_zx, R_xz, R_xx, t_z, t_x).
  std::array<double, 6> omega{};
  // SixstateGamma: (R_zz, R_xx, R_yy).
  std::array<double, 3> gamma{};
  // Bb84Upsilon: (R_zz, R_xx).
  std::array<double, 2> upsilon{};

  static ParameterSlice make_full(const StokesParams& s);
  static ParameterSlice make_omega(const StokesParams& s);
  static ParameterSlice make_gamma(const StokesParams& s);
  static ParameterSlice make_upsilon(const StokesParams& s);
};

// rho = 1/4 [I(x)I + sum_b t_b I(x)sigma_b + sum_ab R_ba conj(sigma_a)(x)sigma_b].
// Throws invalid_channel when the result is not PSD.
ChoiOperator stokes_to_choi(const StokesParams& s);
StokesParams choi_to_stokes(const ChoiOperator& rho);
// Same reconstruction without the PSD check; used inside feasibility probes.
Matrix stokes_to_choi_unchecked(const StokesParams& s);
// Smallest eigenvalue of the reconstructed Choi operator.
double choi_min_eigenvalue(const StokesParams& s);

StokesParams make_identity_channel();
StokesParams make_pauli_channel(const BellDistribution& p);
StokesParams make_depolarizing_channel(double e);        // e in [0, 1/2]
StokesParams make_amplitude_damping_channel(double p);   // p in [0, 1]
StokesParams make_rotation_channel(double theta);        // z-x plane rotation
StokesParams make_rotated_depolarizing_channel(double e, double angle);
StokesParams make_unital_channel(const Eigen::Matrix3d& r);
StokesParams make_raw_channel(const Eigen::Matrix3d& r, const Eigen::Vector3d& t);

// P(x,y) = Tr[(|x_a><x_a| (x) |y_b><y_b|) rho], flat index 2*x + y.
std::array<double, 4> joint_distribution(const ChoiOperator& rho, Basis a,
                                         Basis b);

// P(x,a,y,b) = joint_distribution(rho,a,b)(x,y) / |J|^2 over the flat
// outcome ordering above.
std::vector<double> sample_distribution(const ChoiOperator& rho, Protocol p);
// Pushforward of sample_distribution under degrade.
std::vector<double> degraded_distribution(const ChoiOperator& rho, Protocol p);

struct Interval {
  double lo = 0;
  double hi = 0;
  double width() const { return hi - lo; }
};

// Feasible R_yy interval of the reduced candidate family
//   R = [[R_zz,R_zx,0],[R_xz,R_xx,0],[0,0,R_yy]], t = (t_z,t_x,0)
// for a given omega slice, located by maximizing the concave boundary
// eigenvalue and bisecting it to ~1e-12. Throws empty_candidate_set.
Interval feasible_ryy_interval(const std::array<double, 6>& omega);

// Choi operator of the reduced family member at a given R_yy.
ChoiOperator omega_completion(const std::array<double, 6>& omega, double ryy);

// Bell-diagonal completion of a gamma slice (the partial twirl fixed point).
// Throws empty_candidate_set when the slice is not PSD-completable.
BellDistribution gamma_completion(const std::array<double, 3>& gamma);

// Feasible e_y interval for Bell-diagonal completions of an upsilon slice.
Interval upsilon_feasible_ey(const std::array<double, 2>& upsilon);

// Description of the candidate set for a slice: an interval for omega
// slices, plus a sampler producing feasible completions for every kind.
struct CandidateSetBounds {
  ParameterSlice::Kind kind;
  std::optional<Interval> ryy;        // omega slices
  std::optional<Interval> bell_ey;    // upsilon slices
  StokesParams witness;               // one feasible completion
};

CandidateSetBounds candidate_set_bounds(const ParameterSlice& slice);

// A feasible completion of the slice's free coordinates, uniform-ish over
// the region via rejection from the slice-respecting parameterization.
StokesParams sample_completion(const ParameterSlice& slice, std::mt19937_64& rng);

}  // namespace qkd
