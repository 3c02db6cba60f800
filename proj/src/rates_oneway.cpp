#include "qkdrate/rates_oneway.hpp"

#include "qkdrate/optim.hpp"

#include <cmath>

namespace qkd {

namespace {

constexpr double kGoldenTol = 1e-7;
constexpr int kPrescanPoints = 200;

struct MeasuredState {
  // Unnormalized Eve conditionals, one per key bit; trace = P(bit).
  std::array<Matrix, 2> sigma;
  double h_eve;  // H(rho_E) = H(rho_AB)
};

// Measure the purification of rho in `basis` on Alice's (direct) or Bob's
// (reverse) side and trace out the other party.
MeasuredState measure_side(const ChoiOperator& rho, Direction dir,
                           Basis basis) {
  Vector psi = purify(rho.op);
  const int r = static_cast<int>(psi.size() / 4);

  MeasuredState out;
  out.h_eve = entropy_of_spectrum(hermitian_eigenvalues(rho.op));
  for (int bit = 0; bit < 2; ++bit) {
    Vector ket = basis_ket(basis, bit);
    // Project the measured side, leaving a vector on (other party) x E.
    Vector v = Vector::Zero(2LL * r);
    for (int other = 0; other < 2; ++other)
      for (int e = 0; e < r; ++e) {
        Complex acc(0, 0);
        for (int m = 0; m < 2; ++m) {
          long long idx = dir == Direction::Direct
                              ? (static_cast<long long>(m) * 2 + other) * r + e
                              : (static_cast<long long>(other) * 2 + m) * r + e;
          acc += std::conj(ket[m]) * psi[idx];
        }
        v[static_cast<long long>(other) * r + e] = acc;
      }
    // Trace out the other party.
    Matrix sigma = Matrix::Zero(r, r);
    for (int other = 0; other < 2; ++other)
      sigma += v.segment(static_cast<long long>(other) * r, r) *
               v.segment(static_cast<long long>(other) * r, r).adjoint();
    out.sigma[bit] = sigma;
  }
  return out;
}

double ambiguity_from_state(const MeasuredState& ms, double q) {
  double h_joint = 0;
  for (int u = 0; u < 2; ++u) {
    Matrix block = (1.0 - q) * ms.sigma[u] + q * ms.sigma[1 - u];
    h_joint += entropy_of_spectrum(hermitian_eigenvalues(block));
  }
  return h_joint - ms.h_eve;
}

double conditional_from_joint(const std::array<double, 4>& p, bool x_given_y) {
  // p indexed 2*x + y.
  double h_joint = 0, h_cond = 0;
  for (double v : p)
    if (v > 0) h_joint -= v * std::log2(v);
  for (int given = 0; given < 2; ++given) {
    double m = x_given_y ? p[given] + p[2 + given] : p[2 * given] + p[2 * given + 1];
    if (m > 0) h_cond -= m * std::log2(m);
  }
  return h_joint - h_cond;
}

std::array<double, 4> noisy_joint(const std::array<double, 4>& p, Direction dir,
                                  double q) {
  // Flip the reconciled party's bit with probability q: Alice for direct,
  // Bob for reverse.
  std::array<double, 4> out{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      if (dir == Direction::Direct) {
        out[2 * x + y] += (1 - q) * p[2 * x + y] + q * p[2 * (1 - x) + y];
      } else {
        out[2 * x + y] += (1 - q) * p[2 * x + y] + q * p[2 * x + (1 - y)];
      }
    }
  return out;
}

double cost_from_joint(const std::array<double, 4>& p, Direction dir) {
  return conditional_from_joint(p, dir == Direction::Direct);
}

double clamp01(double x) { return std::max(0.0, x); }

// Shared search for the optimal preprocessing flip probability: 1e-3 grid
// over [0, 1/2] followed by golden-section refinement around the best cell.
RateResult optimize_over_q(const std::function<RateResult(double)>& eval) {
  RateResult best = eval(0.0);
  best.optimal_q = 0.0;
  constexpr double kStep = 1e-3;
  for (int i = 1; i <= 500; ++i) {
    double q = i * kStep;
    RateResult r = eval(q);
    if (r.raw > best.raw) {
      best = r;
      best.optimal_q = q;
    }
  }
  double q0 = *best.optimal_q;
  ScalarMinResult refined = golden_section_min(
      [&](double q) { return -eval(q).raw; }, std::max(0.0, q0 - kStep),
      std::min(0.5, q0 + kStep), 1e-9);
  if (-refined.value > best.raw) {
    best = eval(refined.x);
    best.optimal_q = refined.x;
  }
  return best;
}

}  // namespace

void RateQuery::validate() const {
  if (key_basis == Basis::Y && protocol == Protocol::Bb84)
    throw domain_error("RateQuery: y key basis requires the six-state protocol");
  if (noisy_q && !(*noisy_q >= 0.0 && *noisy_q <= 0.5))
    throw domain_error("RateQuery: noisy preprocessing q must be in [0, 1/2]");
  switch (channel.kind) {
    case ParameterSlice::Kind::Full:
      break;
    case ParameterSlice::Kind::Bb84Omega:
      if (protocol != Protocol::Bb84 || estimation != Estimation::Proposed)
        throw domain_error("RateQuery: omega slice is bb84/proposed only");
      break;
    case ParameterSlice::Kind::SixstateGamma:
      if (protocol != Protocol::Sixstate || estimation != Estimation::Conventional)
        throw domain_error("RateQuery: gamma slice is sixstate/conventional only");
      break;
    case ParameterSlice::Kind::Bb84Upsilon:
      if (protocol != Protocol::Bb84 || estimation != Estimation::Conventional)
        throw domain_error("RateQuery: upsilon slice is bb84/conventional only");
      break;
  }
}

double eve_ambiguity(const ChoiOperator& rho, Direction dir, Basis key_basis) {
  return ambiguity_from_state(measure_side(rho, dir, key_basis), 0.0);
}

double eve_ambiguity_noisy(const ChoiOperator& rho, Direction dir,
                           Basis key_basis, double q) {
  return ambiguity_from_state(measure_side(rho, dir, key_basis), q);
}

double reconciliation_cost(const ChoiOperator& rho, Direction dir,
                           Basis key_basis) {
  return cost_from_joint(joint_distribution(rho, key_basis, key_basis), dir);
}

double reconciliation_cost_noisy(const ChoiOperator& rho, Direction dir,
                                 Basis key_basis, double q) {
  auto p = noisy_joint(joint_distribution(rho, key_basis, key_basis), dir, q);
  return cost_from_joint(p, dir);
}

RateResult rate_sixstate(const RateQuery& q) {
  q.validate();
  if (q.channel.kind != ParameterSlice::Kind::Full)
    throw domain_error("rate_sixstate: proposed estimation needs the full channel");
  ChoiOperator rho = stokes_to_choi(q.channel.full);
  MeasuredState ms = measure_side(rho, q.direction, q.key_basis);
  auto joint = joint_distribution(rho, q.key_basis, q.key_basis);

  auto eval = [&](double flip) {
    RateResult r;
    r.eve_ambiguity = ambiguity_from_state(ms, flip);
    r.reconciliation_cost =
        cost_from_joint(noisy_joint(joint, q.direction, flip), q.direction);
    r.raw = r.eve_ambiguity - r.reconciliation_cost;
    r.rate = clamp01(r.raw);
    return r;
  };

  if (q.optimize_q) return optimize_over_q(eval);
  RateResult r = eval(q.noisy_q.value_or(0.0));
  if (q.noisy_q) r.optimal_q = q.noisy_q;
  return r;
}

double worst_case_ambiguity(const ParameterSlice& slice, Direction dir,
                            Basis key_basis, ChoiOperator* worst_case) {
  switch (slice.kind) {
    case ParameterSlice::Kind::Full: {
      ChoiOperator rho = stokes_to_choi(slice.full);
      if (worst_case) *worst_case = rho;
      return eve_ambiguity(rho, dir, key_basis);
    }
    case ParameterSlice::Kind::Bb84Omega: {
      Interval iv = feasible_ryy_interval(slice.omega);
      auto f = [&](double ryy) {
        return eve_ambiguity(omega_completion(slice.omega, ryy), dir, key_basis);
      };
      ScalarMinResult best = iv.width() <= 1e-12
                                 ? ScalarMinResult{iv.lo, f(iv.lo)}
                                 : golden_section_min(f, iv.lo, iv.hi,
                                                      kGoldenTol, kPrescanPoints);
      if (worst_case) *worst_case = omega_completion(slice.omega, best.x);
      return best.value;
    }
    case ParameterSlice::Kind::SixstateGamma: {
      // The partial twirl attains the minimum for degraded six-state slices.
      ChoiOperator rho =
          stokes_to_choi(make_pauli_channel(gamma_completion(slice.gamma)));
      if (worst_case) *worst_case = rho;
      return eve_ambiguity(rho, dir, key_basis);
    }
    case ParameterSlice::Kind::Bb84Upsilon: {
      Interval iv = upsilon_feasible_ey(slice.upsilon);
      auto channel_at = [&](double ey) {
        return stokes_to_choi(
            make_pauli_channel(BellDistribution::from_diagonal_stokes(
                slice.upsilon[0], slice.upsilon[1], ey)));
      };
      auto f = [&](double ey) {
        return eve_ambiguity(channel_at(ey), dir, key_basis);
      };
      ScalarMinResult best =
          golden_section_min(f, iv.lo, iv.hi, kGoldenTol, kPrescanPoints);
      if (worst_case) *worst_case = channel_at(best.x);
      return best.value;
    }
  }
  throw domain_error("worst_case_ambiguity: unreachable");
}

RateResult rate_bb84(const RateQuery& q) {
  q.validate();
  std::array<double, 6> omega;
  if (q.channel.kind == ParameterSlice::Kind::Bb84Omega) {
    omega = q.channel.omega;
  } else if (q.channel.kind == ParameterSlice::Kind::Full) {
    omega = ParameterSlice::make_omega(q.channel.full).omega;
  } else {
    throw domain_error("rate_bb84: needs an omega slice or a full channel");
  }

  Interval iv = feasible_ryy_interval(omega);
  // The matched-basis joint distribution depends only on the omega slice,
  // so the reconciliation cost is constant over the candidate set.
  ChoiOperator probe = omega_completion(omega, 0.5 * (iv.lo + iv.hi));
  auto joint = joint_distribution(probe, q.key_basis, q.key_basis);

  auto eval = [&](double flip) {
    auto ambiguity = [&](double ryy) {
      return eve_ambiguity_noisy(omega_completion(omega, ryy), q.direction,
                                 q.key_basis, flip);
    };
    ScalarMinResult best =
        iv.width() <= 1e-12
            ? ScalarMinResult{iv.lo, ambiguity(iv.lo)}
            : golden_section_min(ambiguity, iv.lo, iv.hi, kGoldenTol,
                                 kPrescanPoints);
    RateResult r;
    r.eve_ambiguity = best.value;
    r.reconciliation_cost =
        cost_from_joint(noisy_joint(joint, q.direction, flip), q.direction);
    r.raw = r.eve_ambiguity - r.reconciliation_cost;
    r.rate = clamp01(r.raw);
    r.worst_case = omega_completion(omega, best.x);
    return r;
  };

  if (q.optimize_q) return optimize_over_q(eval);
  RateResult r = eval(q.noisy_q.value_or(0.0));
  if (q.noisy_q) r.optimal_q = q.noisy_q;
  return r;
}

RateResult rate_conventional(const RateQuery& q) {
  q.validate();

  if (q.protocol == Protocol::Sixstate) {
    std::array<double, 3> gamma;
    if (q.channel.kind == ParameterSlice::Kind::SixstateGamma)
      gamma = q.channel.gamma;
    else if (q.channel.kind == ParameterSlice::Kind::Full)
      gamma = ParameterSlice::make_gamma(q.channel.full).gamma;
    else
      throw domain_error("rate_conventional: needs a gamma slice (sixstate)");

    // The worst case over the candidate set is the partial twirl, i.e. the
    // Bell-diagonal completion; without preprocessing the rate reduces to
    // 1 - H[p_i, p_z, p_x, p_y].
    BellDistribution bell = gamma_completion(gamma);
    ChoiOperator twirl = stokes_to_choi(make_pauli_channel(bell));
    MeasuredState ms = measure_side(twirl, q.direction, q.key_basis);
    auto joint = joint_distribution(twirl, q.key_basis, q.key_basis);
    auto eval = [&](double flip) {
      RateResult r;
      r.eve_ambiguity = ambiguity_from_state(ms, flip);
      r.reconciliation_cost =
          cost_from_joint(noisy_joint(joint, q.direction, flip), q.direction);
      r.raw = flip == 0.0 ? 1.0 - shannon_entropy({std::max(0.0, bell.p00),
                                                   std::max(0.0, bell.p01),
                                                   std::max(0.0, bell.p10),
                                                   std::max(0.0, bell.p11)})
                          : r.eve_ambiguity - r.reconciliation_cost;
      r.rate = clamp01(r.raw);
      r.worst_case = twirl;
      return r;
    };
    if (q.optimize_q) return optimize_over_q(eval);
    RateResult r = eval(q.noisy_q.value_or(0.0));
    if (q.noisy_q) r.optimal_q = q.noisy_q;
    return r;
  }

  std::array<double, 2> upsilon;
  if (q.channel.kind == ParameterSlice::Kind::Bb84Upsilon)
    upsilon = q.channel.upsilon;
  else if (q.channel.kind == ParameterSlice::Kind::Full)
    upsilon = ParameterSlice::make_upsilon(q.channel.full).upsilon;
  else
    throw domain_error("rate_conventional: needs an upsilon slice (bb84)");

  // Worst case over the candidate set = Bell-diagonal family with free e_y.
  Interval iv = upsilon_feasible_ey(upsilon);
  auto channel_at = [&](double ey) {
    return stokes_to_choi(
        make_pauli_channel(BellDistribution::from_diagonal_stokes(
            upsilon[0], upsilon[1], ey)));
  };

  auto eval = [&](double flip) {
    RateResult r;
    if (flip == 0.0) {
      // Closed form; the inner minimum is attained where the Bell marginals
      // factorize, e_y = e_z * e_x.
      ChoiOperator worst = channel_at(upsilon[0] * upsilon[1]);
      r.eve_ambiguity = eve_ambiguity(worst, q.direction, q.key_basis);
      r.reconciliation_cost =
          reconciliation_cost(worst, q.direction, q.key_basis);
      r.raw = 1.0 - binary_entropy((1.0 + upsilon[0]) / 2.0) -
              binary_entropy((1.0 + upsilon[1]) / 2.0);
      r.rate = clamp01(r.raw);
      r.worst_case = worst;
      return r;
    }
    auto objective = [&](double ey) {
      ChoiOperator rho = channel_at(ey);
      return eve_ambiguity_noisy(rho, q.direction, q.key_basis, flip) -
             reconciliation_cost_noisy(rho, q.direction, q.key_basis, flip);
    };
    ScalarMinResult best =
        golden_section_min(objective, iv.lo, iv.hi, kGoldenTol, kPrescanPoints);
    ChoiOperator worst = channel_at(best.x);
    r.eve_ambiguity =
        eve_ambiguity_noisy(worst, q.direction, q.key_basis, flip);
    r.reconciliation_cost =
        reconciliation_cost_noisy(worst, q.direction, q.key_basis, flip);
    r.raw = best.value;
    r.rate = clamp01(r.raw);
    r.worst_case = worst;
    return r;
  };

  if (q.optimize_q) return optimize_over_q(eval);
  RateResult r = eval(q.noisy_q.value_or(0.0));
  if (q.noisy_q) r.optimal_q = q.noisy_q;
  return r;
}

RateResult compute_rate(const RateQuery& q) {
  if (q.estimation == Estimation::Conventional) return rate_conventional(q);
  return q.protocol == Protocol::Sixstate ? rate_sixstate(q) : rate_bb84(q);
}

namespace {

// Signed singular values (e_z, e_x, e_y) with proper rotations on both sides.
std::array<double, 3> proper_svd(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  double sign = svd.matrixU().determinant() * svd.matrixV().determinant();
  if (sign < 0) s(2) = -s(2);
  return {s(0), s(1), s(2)};
}

double bell_entropy_from_diag(double ez, double ex, double ey) {
  BellDistribution p = BellDistribution::from_diagonal_stokes(ez, ex, ey);
  double h = 0;
  for (double v : {p.p00, p.p01, p.p10, p.p11}) {
    double c = std::max(0.0, v);
    if (c > 0) h -= c * std::log2(c);
  }
  return h;
}

}  // namespace

double unital_sixstate_ambiguity(const StokesParams& s, Direction dir) {
  if (s.t.cwiseAbs().maxCoeff() > 1e-12)
    throw domain_error("unital_sixstate_ambiguity: channel is not unital");
  auto e = proper_svd(s.R);
  double h_bell = bell_entropy_from_diag(e[0], e[1], e[2]);
  double norm = dir == Direction::Direct ? s.R.col(0).norm() : s.R.row(0).norm();
  return 1.0 - h_bell + binary_entropy((1.0 + norm) / 2.0);
}

double unital_bound_ambiguity(const std::array<double, 6>& omega,
                              Direction dir) {
  Eigen::Matrix2d block;
  block << omega[0], omega[1], omega[2], omega[3];
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(block);
  double dz = svd.singularValues()(0);
  double dx = svd.singularValues()(1);
  double norm = dir == Direction::Direct
                    ? std::hypot(omega[0], omega[2])   // sqrt(Rzz^2 + Rxz^2)
                    : std::hypot(omega[0], omega[1]);  // sqrt(Rzz^2 + Rzx^2)
  return 1.0 - binary_entropy((1.0 + dz) / 2.0) -
         binary_entropy((1.0 + dx) / 2.0) +
         binary_entropy((1.0 + norm) / 2.0);
}

double conventional_rate_numeric(const ParameterSlice& slice, Direction dir,
                                 Basis key_basis, int restarts,
                                 std::mt19937_64& rng) {
  if (slice.kind != ParameterSlice::Kind::SixstateGamma &&
      slice.kind != ParameterSlice::Kind::Bb84Upsilon)
    throw domain_error("conventional_rate_numeric: needs a gamma or upsilon slice");

  const bool is_gamma = slice.kind == ParameterSlice::Kind::SixstateGamma;

  auto assemble = [&](const std::vector<double>& free) {
    StokesParams s;
    if (is_gamma) {
      // Free: R_zx, R_zy, R_xz, R_xy, R_yz, R_yx, t_z, t_x, t_y.
      s.R << slice.gamma[0], free[0], free[1],  //
          free[2], slice.gamma[1], free[3],     //
          free[4], free[5], slice.gamma[2];
      s.t = Eigen::Vector3d(free[6], free[7], free[8]);
    } else {
      // Free: R_zx, R_zy, R_xz, R_xy, R_yz, R_yx, R_yy, t_z, t_x, t_y.
      s.R << slice.upsilon[0], free[0], free[1],  //
          free[2], slice.upsilon[1], free[3],     //
          free[4], free[5], free[6];
      s.t = Eigen::Vector3d(free[7], free[8], free[9]);
    }
    return s;
  };

  auto objective = [&](const std::vector<double>& free) {
    StokesParams s = assemble(free);
    double min_eig = choi_min_eigenvalue(s);
    if (min_eig < 0) return 10.0 - 1e3 * min_eig;  // barrier outside the set
    ChoiOperator rho{stokes_to_choi_unchecked(s)};
    return eve_ambiguity(rho, dir, key_basis) -
           reconciliation_cost(rho, dir, key_basis);
  };

  const size_t nfree = is_gamma ? 9 : 10;
  double best = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < restarts; ++attempt) {
    std::vector<double> start(nfree, 0.0);
    if (attempt > 0) {
      StokesParams s = sample_completion(slice, rng);
      if (is_gamma) {
        start = {s.R(0, 1), s.R(0, 2), s.R(1, 0), s.R(1, 2), s.R(2, 0),
                 s.R(2, 1), s.t(0),    s.t(1),    s.t(2)};
      } else {
        start = {s.R(0, 1), s.R(0, 2), s.R(1, 0), s.R(1, 2), s.R(2, 0),
                 s.R(2, 1), s.R(2, 2), s.t(0),    s.t(1),    s.t(2)};
      }
    } else if (!is_gamma) {
      Interval iv = upsilon_feasible_ey(slice.upsilon);
      start[6] = 0.5 * (iv.lo + iv.hi);
    }
    NelderMeadResult r = nelder_mead(objective, start, 0.08, 1e-9, 20000);
    best = std::min(best, r.value);
  }
  return best;
}

ImprovementReport strict_improvement_check(const std::array<double, 6>& omega,
                                           Direction dir, Basis key_basis) {
  if (std::abs(omega[0]) < 1e-12 || std::abs(omega[3]) < 1e-12)
    throw domain_error(
        "strict_improvement_check: degenerate R_zz or R_xx (theorem "
        "precondition violated)");

  RateQuery proposed;
  proposed.channel = ParameterSlice{};
  proposed.channel.kind = ParameterSlice::Kind::Bb84Omega;
  proposed.channel.omega = omega;
  proposed.protocol = Protocol::Bb84;
  proposed.estimation = Estimation::Proposed;
  proposed.direction = dir;
  proposed.key_basis = key_basis;

  RateQuery conventional = proposed;
  conventional.channel.kind = ParameterSlice::Kind::Bb84Upsilon;
  conventional.channel.upsilon = {omega[0], omega[3]};
  conventional.estimation = Estimation::Conventional;

  ImprovementReport report;
  report.proposed = rate_bb84(proposed).raw;
  report.conventional = rate_conventional(conventional).raw;
  report.delta = report.proposed - report.conventional;
  report.predicted_strict =
      std::abs(omega[4]) > 1e-12 || std::abs(omega[5]) > 1e-12 ||
      std::abs(omega[1]) > 1e-12 || std::abs(omega[2]) > 1e-12;
  report.verdict = report.delta > 1e-8 ? ImprovementReport::Verdict::Strict
                                       : ImprovementReport::Verdict::Equal;
  return report;
}

}  // namespace qkd
