#include "qkdrate/channel.hpp"

#include "qkdrate/optim.hpp"

#include <cmath>

namespace qkd {

namespace {

Matrix make_pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix make_pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix make_pauli_y() {
  Matrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

}  // namespace

const Matrix& pauli(Basis b) {
  static const Matrix z = make_pauli_z();
  static const Matrix x = make_pauli_x();
  static const Matrix y = make_pauli_y();
  switch (b) {
    case Basis::Z:
      return z;
    case Basis::X:
      return x;
    default:
      return y;
  }
}

const Matrix& pauli_identity() {
  static const Matrix i = Matrix::Identity(2, 2);
  return i;
}

Vector basis_ket(Basis b, int bit) {
  if (bit != 0 && bit != 1) throw domain_error("basis_ket: bit must be 0 or 1");
  Vector v(2);
  const double s = 1.0 / std::sqrt(2.0);
  switch (b) {
    case Basis::Z:
      v << (bit == 0 ? 1 : 0), (bit == 0 ? 0 : 1);
      break;
    case Basis::X:
      v << s, (bit == 0 ? s : -s);
      break;
    case Basis::Y:
      v << s, (bit == 0 ? Complex(0, s) : Complex(0, -s));
      break;
  }
  return v;
}

void ChoiOperator::validate(double tol) const {
  if (op.rows() != 4 || op.cols() != 4)
    throw domain_error("ChoiOperator: dimension must be 4");
  if (!is_hermitian(op, tol)) throw domain_error("ChoiOperator: not Hermitian");
  if (std::abs(op.trace().real() - 1.0) > tol)
    throw domain_error("ChoiOperator: trace is not 1");
  double min_eig = hermitian_eigenvalues(op).minCoeff();
  if (min_eig < -tol)
    throw invalid_channel("ChoiOperator: not PSD", min_eig);
  Matrix alice = partial_trace(op, {2, 2}, {0});
  if ((alice - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() > tol)
    throw domain_error("ChoiOperator: Alice marginal is not I/2");
}

void BellDistribution::validate(double tol) const {
  const double ps[4] = {p00, p10, p01, p11};
  double total = 0;
  for (double p : ps) {
    if (p < -tol) throw domain_error("BellDistribution: negative probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw domain_error("BellDistribution: probabilities sum to " +
                       std::to_string(total));
}

std::array<double, 3> BellDistribution::diagonal_stokes() const {
  return {p00 + p01 - p10 - p11,   // e_z
          p00 - p01 + p10 - p11,   // e_x
          p00 - p01 - p10 + p11};  // e_y
}

BellDistribution BellDistribution::from_diagonal_stokes(double ez, double ex,
                                                        double ey) {
  BellDistribution p;
  p.p00 = (1 + ez + ex + ey) / 4;
  p.p01 = (1 + ez - ex - ey) / 4;
  p.p10 = (1 - ez + ex - ey) / 4;
  p.p11 = (1 - ez - ex + ey) / 4;
  return p;
}

int outcome_index(const SampleOutcome& z, Protocol p) {
  const int j = basis_count(p);
  const int a = static_cast<int>(z.basis_a);
  const int b = static_cast<int>(z.basis_b);
  if (a >= j || b >= j) throw domain_error("outcome_index: basis not in protocol");
  if ((z.xa & ~1) || (z.yb & ~1)) throw domain_error("outcome_index: bad bit");
  return ((z.xa * j + a) * 2 + z.yb) * j + b;
}

SampleOutcome outcome_from_index(int index, Protocol p) {
  const int j = basis_count(p);
  if (index < 0 || index >= outcome_count(p))
    throw domain_error("outcome_from_index: out of range");
  SampleOutcome z;
  z.basis_b = static_cast<Basis>(index % j);
  index /= j;
  z.yb = index % 2;
  index /= 2;
  z.basis_a = static_cast<Basis>(index % j);
  index /= j;
  z.xa = index;
  return z;
}

DegradedOutcome degrade(const SampleOutcome& z) {
  DegradedOutcome d;
  d.basis_a = z.basis_a;
  d.basis_b = z.basis_b;
  d.sym = (z.basis_a == z.basis_b) ? ((z.xa + z.yb) & 1) : DegradedOutcome::kDelta;
  return d;
}

int degraded_index(const DegradedOutcome& d, Protocol p) {
  const int j = basis_count(p);
  return (d.sym * j + static_cast<int>(d.basis_a)) * j +
         static_cast<int>(d.basis_b);
}

ParameterSlice ParameterSlice::make_full(const StokesParams& s) {
  ParameterSlice p;
  p.kind = Kind::Full;
  p.full = s;
  return p;
}

ParameterSlice ParameterSlice::make_omega(const StokesParams& s) {
  ParameterSlice p;
  p.kind = Kind::Bb84Omega;
  p.omega = {s.R(0, 0), s.R(0, 1), s.R(1, 0), s.R(1, 1), s.t(0), s.t(1)};
  return p;
}

ParameterSlice ParameterSlice::make_gamma(const StokesParams& s) {
  ParameterSlice p;
  p.kind = Kind::SixstateGamma;
  p.gamma = {s.R(0, 0), s.R(1, 1), s.R(2, 2)};
  return p;
}

ParameterSlice ParameterSlice::make_upsilon(const StokesParams& s) {
  ParameterSlice p;
  p.kind = Kind::Bb84Upsilon;
  p.upsilon = {s.R(0, 0), s.R(1, 1)};
  return p;
}

Matrix stokes_to_choi_unchecked(const StokesParams& s) {
  static const Basis kBases[3] = {Basis::Z, Basis::X, Basis::Y};
  Matrix rho = kron(pauli_identity(), pauli_identity());
  for (int b = 0; b < 3; ++b)
    rho += s.t(b) * kron(pauli_identity(), pauli(kBases[b]));
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a)
      rho += s.R(b, a) * kron(pauli(kBases[a]).conjugate(), pauli(kBases[b]));
  return 0.25 * rho;
}

double choi_min_eigenvalue(const StokesParams& s) {
  return hermitian_eigenvalues(stokes_to_choi_unchecked(s)).minCoeff();
}

ChoiOperator stokes_to_choi(const StokesParams& s) {
  if (!s.R.allFinite() || !s.t.allFinite())
    throw domain_error("stokes_to_choi: non-finite parameter");
  ChoiOperator rho{stokes_to_choi_unchecked(s)};
  double min_eig = hermitian_eigenvalues(rho.op).minCoeff();
  if (min_eig < -1e-9)
    throw invalid_channel("stokes_to_choi: reconstructed Choi operator is not "
                          "PSD (invalid channel)",
                          min_eig);
  return rho;
}

StokesParams choi_to_stokes(const ChoiOperator& rho) {
  static const Basis kBases[3] = {Basis::Z, Basis::X, Basis::Y};
  StokesParams s;
  for (int b = 0; b < 3; ++b) {
    s.t(b) =
        (rho.op * kron(pauli_identity(), pauli(kBases[b]))).trace().real();
    for (int a = 0; a < 3; ++a)
      s.R(b, a) =
          (rho.op * kron(pauli(kBases[a]).conjugate(), pauli(kBases[b])))
              .trace()
              .real();
  }
  return s;
}

StokesParams make_identity_channel() { return StokesParams{}; }

StokesParams make_pauli_channel(const BellDistribution& p) {
  p.validate();
  auto e = p.diagonal_stokes();
  StokesParams s;
  s.R = Eigen::Vector3d(e[0], e[1], e[2]).asDiagonal();
  stokes_to_choi(s);
  return s;
}

StokesParams make_depolarizing_channel(double e) {
  if (!(e >= 0.0 && e <= 0.5))
    throw domain_error("depolarizing: e must be in [0, 1/2]");
  StokesParams s;
  s.R = (1.0 - 2.0 * e) * Eigen::Matrix3d::Identity();
  return s;
}

StokesParams make_amplitude_damping_channel(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw domain_error("amplitude_damping: p must be in [0, 1]");
  StokesParams s;
  double root = std::sqrt(1.0 - p);
  s.R = Eigen::Vector3d(1.0 - p, root, root).asDiagonal();
  s.t = Eigen::Vector3d(p, 0, 0);
  return s;
}

StokesParams make_rotation_channel(double theta) {
  if (!std::isfinite(theta)) throw domain_error("rotation: theta not finite");
  StokesParams s;
  s.R << std::cos(theta), -std::sin(theta), 0,  //
      std::sin(theta), std::cos(theta), 0,      //
      0, 0, 1;
  return s;
}

StokesParams make_rotated_depolarizing_channel(double e, double angle) {
  StokesParams rot = make_rotation_channel(angle);
  StokesParams dep = make_depolarizing_channel(e);
  StokesParams s;
  s.R = rot.R * dep.R;
  return s;
}

StokesParams make_unital_channel(const Eigen::Matrix3d& r) {
  StokesParams s;
  s.R = r;
  stokes_to_choi(s);
  return s;
}

StokesParams make_raw_channel(const Eigen::Matrix3d& r,
                              const Eigen::Vector3d& t) {
  StokesParams s;
  s.R = r;
  s.t = t;
  stokes_to_choi(s);
  return s;
}

std::array<double, 4> joint_distribution(const ChoiOperator& rho, Basis a,
                                         Basis b) {
  std::array<double, 4> p{};
  double total = 0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      Vector ket = kron(Matrix(basis_ket(a, x)), Matrix(basis_ket(b, y)));
      double prob = (ket.adjoint() * rho.op * ket)(0, 0).real();
      p[2 * x + y] = std::max(0.0, prob);
      total += p[2 * x + y];
    }
  if (std::abs(total - 1.0) > 1e-8)
    throw domain_error("joint_distribution: probabilities sum to " +
                       std::to_string(total));
  return p;
}

std::vector<double> sample_distribution(const ChoiOperator& rho, Protocol p) {
  const int j = basis_count(p);
  const double basis_weight = 1.0 / (j * j);
  std::vector<double> out(outcome_count(p), 0.0);
  for (int a = 0; a < j; ++a)
    for (int b = 0; b < j; ++b) {
      auto joint =
          joint_distribution(rho, static_cast<Basis>(a), static_cast<Basis>(b));
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          SampleOutcome z{x, static_cast<Basis>(a), y, static_cast<Basis>(b)};
          out[outcome_index(z, p)] = basis_weight * joint[2 * x + y];
        }
    }
  return out;
}

std::vector<double> degraded_distribution(const ChoiOperator& rho, Protocol p) {
  std::vector<double> raw = sample_distribution(rho, p);
  std::vector<double> out(degraded_count(p), 0.0);
  for (int i = 0; i < static_cast<int>(raw.size()); ++i)
    out[degraded_index(degrade(outcome_from_index(i, p)), p)] += raw[i];
  return out;
}

ChoiOperator omega_completion(const std::array<double, 6>& omega, double ryy) {
  StokesParams s;
  s.R << omega[0], omega[1], 0,  //
      omega[2], omega[3], 0,     //
      0, 0, ryy;
  s.t = Eigen::Vector3d(omega[4], omega[5], 0);
  ChoiOperator rho{stokes_to_choi_unchecked(s)};
  return rho;
}

namespace {

StokesParams omega_completion_stokes(const std::array<double, 6>& omega,
                                     double ryy) {
  StokesParams s;
  s.R << omega[0], omega[1], 0, omega[2], omega[3], 0, 0, 0, ryy;
  s.t = Eigen::Vector3d(omega[4], omega[5], 0);
  return s;
}

}  // namespace

Interval feasible_ryy_interval(const std::array<double, 6>& omega) {
  auto boundary_eig = [&](double ryy) {
    return choi_min_eigenvalue(omega_completion_stokes(omega, ryy));
  };

  // The smallest Choi eigenvalue is concave along this affine family, so a
  // golden-section maximization locates the feasibility peak.
  ScalarMinResult peak = golden_section_max(boundary_eig, -1.0, 1.0, 1e-13, 41);
  if (peak.value < -1e-9)
    throw empty_candidate_set(
        "feasible_ryy_interval: no PSD completion of this omega slice");

  auto bisect_edge = [&](double inside, double outside) {
    if (boundary_eig(outside) >= 0.0) return outside;
    for (int i = 0; i < 60; ++i) {
      double mid = 0.5 * (inside + outside);
      (boundary_eig(mid) >= 0.0 ? inside : outside) = mid;
    }
    return inside;
  };

  Interval iv;
  if (peak.value <= 0.0) {
    // Tangency: the feasible set collapses to (numerically) a single point.
    iv.lo = iv.hi = peak.x;
    return iv;
  }
  iv.lo = bisect_edge(peak.x, -1.0);
  iv.hi = bisect_edge(peak.x, 1.0);
  return iv;
}

BellDistribution gamma_completion(const std::array<double, 3>& gamma) {
  BellDistribution p =
      BellDistribution::from_diagonal_stokes(gamma[0], gamma[1], gamma[2]);
  const double min_p = std::min(std::min(p.p00, p.p01), std::min(p.p10, p.p11));
  if (min_p < -1e-9)
    throw empty_candidate_set(
        "gamma_completion: slice has no PSD completion (Bell probability " +
        std::to_string(min_p) + ")");
  return p;
}

Interval upsilon_feasible_ey(const std::array<double, 2>& upsilon) {
  const double ez = upsilon[0], ex = upsilon[1];
  Interval iv;
  iv.lo = std::abs(ez + ex) - 1.0;
  iv.hi = 1.0 - std::abs(ez - ex);
  if (iv.lo > iv.hi + 1e-12)
    throw empty_candidate_set("upsilon slice has no Bell-diagonal completion");
  return iv;
}

CandidateSetBounds candidate_set_bounds(const ParameterSlice& slice) {
  CandidateSetBounds out;
  out.kind = slice.kind;
  switch (slice.kind) {
    case ParameterSlice::Kind::Full: {
      stokes_to_choi(slice.full);
      out.witness = slice.full;
      break;
    }
    case ParameterSlice::Kind::Bb84Omega: {
      Interval iv = feasible_ryy_interval(slice.omega);
      out.ryy = iv;
      out.witness =
          omega_completion_stokes(slice.omega, 0.5 * (iv.lo + iv.hi));
      break;
    }
    case ParameterSlice::Kind::SixstateGamma: {
      out.witness = make_pauli_channel(gamma_completion(slice.gamma));
      break;
    }
    case ParameterSlice::Kind::Bb84Upsilon: {
      Interval iv = upsilon_feasible_ey(slice.upsilon);
      out.bell_ey = iv;
      out.witness = make_pauli_channel(BellDistribution::from_diagonal_stokes(
          slice.upsilon[0], slice.upsilon[1], 0.5 * (iv.lo + iv.hi)));
      break;
    }
  }
  return out;
}

StokesParams sample_completion(const ParameterSlice& slice,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  CandidateSetBounds bounds = candidate_set_bounds(slice);

  auto shrink_until_feasible = [&](const StokesParams& witness,
                                   const StokesParams& proposal) {
    StokesParams cur = proposal;
    for (int step = 0; step < 80; ++step) {
      if (choi_min_eigenvalue(cur) >= 0.0) return cur;
      cur.R = witness.R + 0.7 * (cur.R - witness.R);
      cur.t = witness.t + 0.7 * (cur.t - witness.t);
    }
    return witness;
  };

  switch (slice.kind) {
    case ParameterSlice::Kind::Full:
      return slice.full;
    case ParameterSlice::Kind::Bb84Omega: {
      // All six complementary coordinates (R_zy, R_xy, R_yz, R_yx, R_yy, t_y)
      // are free.
      StokesParams proposal = bounds.witness;
      proposal.R(0, 2) = unit(rng);
      proposal.R(1, 2) = unit(rng);
      proposal.R(2, 0) = unit(rng);
      proposal.R(2, 1) = unit(rng);
      proposal.R(2, 2) = unit(rng);
      proposal.t(2) = unit(rng);
      return shrink_until_feasible(bounds.witness, proposal);
    }
    case ParameterSlice::Kind::SixstateGamma: {
      StokesParams proposal = bounds.witness;
      proposal.R(0, 1) = unit(rng);
      proposal.R(0, 2) = unit(rng);
      proposal.R(1, 0) = unit(rng);
      proposal.R(1, 2) = unit(rng);
      proposal.R(2, 0) = unit(rng);
      proposal.R(2, 1) = unit(rng);
      proposal.t = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
      return shrink_until_feasible(bounds.witness, proposal);
    }
    case ParameterSlice::Kind::Bb84Upsilon: {
      StokesParams proposal = bounds.witness;
      proposal.R(0, 1) = unit(rng);
      proposal.R(0, 2) = unit(rng);
      proposal.R(1, 0) = unit(rng);
      proposal.R(1, 2) = unit(rng);
      proposal.R(2, 0) = unit(rng);
      proposal.R(2, 1) = unit(rng);
      proposal.R(2, 2) = unit(rng);
      proposal.t = Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
      return shrink_until_feasible(bounds.witness, proposal);
    }
  }
  throw domain_error("sample_completion: unreachable");
}

}  // namespace qkd
