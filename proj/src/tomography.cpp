#include "qkdrate/tomography.hpp"

#include "qkdrate/optim.hpp"

#include <cmath>
#include <istream>
#include <sstream>

namespace qkd {

namespace {

const char* basis_letter(Basis b) {
  switch (b) {
    case Basis::Z:
      return "z";
    case Basis::X:
      return "x";
    default:
      return "y";
  }
}

Basis basis_from_letter(const std::string& s) {
  if (s == "z") return Basis::Z;
  if (s == "x") return Basis::X;
  if (s == "y") return Basis::Y;
  throw domain_error("bad basis letter '" + s + "'");
}

int param_count(EstimationMode mode) {
  switch (mode) {
    case EstimationMode::FullSixstate:
      return 12;
    case EstimationMode::Bb84Omega:
      return 6;
    case EstimationMode::DegradedGamma:
      return 3;
    case EstimationMode::DegradedUpsilon:
      return 2;
  }
  return 0;
}

Protocol mode_protocol(EstimationMode mode) {
  return (mode == EstimationMode::Bb84Omega ||
          mode == EstimationMode::DegradedUpsilon)
             ? Protocol::Bb84
             : Protocol::Sixstate;
}

bool is_degraded(EstimationMode mode) {
  return mode == EstimationMode::DegradedGamma ||
         mode == EstimationMode::DegradedUpsilon;
}

StokesParams stokes_from_params(EstimationMode mode,
                                const std::vector<double>& th) {
  StokesParams s;
  switch (mode) {
    case EstimationMode::FullSixstate:
      s.R << th[0], th[1], th[2], th[3], th[4], th[5], th[6], th[7], th[8];
      s.t = Eigen::Vector3d(th[9], th[10], th[11]);
      break;
    case EstimationMode::Bb84Omega:
      s.R << th[0], th[1], 0, th[2], th[3], 0, 0, 0, 0;
      s.t = Eigen::Vector3d(th[4], th[5], 0);
      break;
    case EstimationMode::DegradedGamma:
      s.R = Eigen::Vector3d(th[0], th[1], th[2]).asDiagonal();
      break;
    case EstimationMode::DegradedUpsilon:
      s.R = Eigen::Vector3d(th[0], th[1], 0).asDiagonal();
      break;
  }
  return s;
}

ParameterSlice slice_from_params(EstimationMode mode,
                                 const std::vector<double>& th) {
  ParameterSlice p;
  switch (mode) {
    case EstimationMode::FullSixstate:
      return ParameterSlice::make_full(stokes_from_params(mode, th));
    case EstimationMode::Bb84Omega:
      p.kind = ParameterSlice::Kind::Bb84Omega;
      p.omega = {th[0], th[1], th[2], th[3], th[4], th[5]};
      return p;
    case EstimationMode::DegradedGamma:
      p.kind = ParameterSlice::Kind::SixstateGamma;
      p.gamma = {th[0], th[1], th[2]};
      return p;
    case EstimationMode::DegradedUpsilon:
      p.kind = ParameterSlice::Kind::Bb84Upsilon;
      p.upsilon = {th[0], th[1]};
      return p;
  }
  return p;
}

// Outcome probabilities as closed linear forms in the slice parameters;
// no operator reconstruction needed inside the likelihood loop.
std::vector<double> outcome_probs(EstimationMode mode,
                                  const std::vector<double>& th) {
  const Protocol protocol = mode_protocol(mode);
  const int j = basis_count(protocol);
  const double block = 1.0 / (j * j);

  if (is_degraded(mode)) {
    // Matched bases carry (1 +/- e_a)/2; mismatched blocks are flat.
    std::vector<double> probs(degraded_count(protocol), 0.0);
    std::array<double, 3> e{0, 0, 0};
    if (mode == EstimationMode::DegradedGamma) {
      e = {th[0], th[1], th[2]};
    } else {
      e = {th[0], th[1], 0};
    }
    for (int a = 0; a < j; ++a)
      for (int b = 0; b < j; ++b) {
        if (a == b) {
          // The matched-basis agreement carries Tr[rho sigma_a (x) sigma_a],
          // which is -e_y in the y basis (conjugation convention).
          double e_eff = (static_cast<Basis>(a) == Basis::Y) ? -e[a] : e[a];
          for (int w = 0; w < 2; ++w) {
            DegradedOutcome d{w, static_cast<Basis>(a), static_cast<Basis>(b)};
            probs[degraded_index(d, protocol)] =
                block * 0.5 * (1.0 + (w == 0 ? e_eff : -e_eff));
          }
        } else {
          DegradedOutcome d{DegradedOutcome::kDelta, static_cast<Basis>(a),
                            static_cast<Basis>(b)};
          probs[degraded_index(d, protocol)] = block;
        }
      }
    return probs;
  }

  StokesParams s = stokes_from_params(mode, th);
  std::vector<double> probs(outcome_count(protocol), 0.0);
  for (int a = 0; a < j; ++a)
    for (int b = 0; b < j; ++b) {
      const double sign_a = (static_cast<Basis>(a) == Basis::Y) ? -1.0 : 1.0;
      const double s_ab = sign_a * s.R(b, a);  // Tr[rho sigma_a (x) sigma_b]
      const double t_b = s.t(b);
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          double v = 0.25 * (1.0 + (y ? -t_b : t_b) +
                             (((x + y) & 1) ? -s_ab : s_ab));
          SampleOutcome z{x, static_cast<Basis>(a), y, static_cast<Basis>(b)};
          probs[outcome_index(z, protocol)] = block * v;
        }
    }
  return probs;
}

// Distance to PSD-completability, 0 when completable. This is the barrier
// the ML search descends against.
double completability_deficit(EstimationMode mode,
                              const std::vector<double>& th) {
  switch (mode) {
    case EstimationMode::FullSixstate: {
      double min_eig = choi_min_eigenvalue(stokes_from_params(mode, th));
      return std::max(0.0, -min_eig);
    }
    case EstimationMode::Bb84Omega: {
      std::array<double, 6> omega{th[0], th[1], th[2], th[3], th[4], th[5]};
      auto eig = [&](double ryy) {
        StokesParams s;
        s.R << omega[0], omega[1], 0, omega[2], omega[3], 0, 0, 0, ryy;
        s.t = Eigen::Vector3d(omega[4], omega[5], 0);
        return choi_min_eigenvalue(s);
      };
      // Concave in R_yy: coarse grid then a short golden refinement.
      double best_x = 0, best = -1e9;
      for (int i = 0; i <= 16; ++i) {
        double r = -1.0 + 2.0 * i / 16.0;
        double v = eig(r);
        if (v > best) {
          best = v;
          best_x = r;
        }
      }
      ScalarMinResult peak = golden_section_max(
          eig, std::max(-1.0, best_x - 0.125), std::min(1.0, best_x + 0.125),
          1e-9);
      return std::max(0.0, -std::max(best, peak.value));
    }
    case EstimationMode::DegradedGamma: {
      BellDistribution p =
          BellDistribution::from_diagonal_stokes(th[0], th[1], th[2]);
      double worst = std::min(std::min(p.p00, p.p01), std::min(p.p10, p.p11));
      return std::max(0.0, -worst);
    }
    case EstimationMode::DegradedUpsilon: {
      double deficit = 0;
      deficit = std::max(deficit, std::abs(th[0]) - 1.0);
      deficit = std::max(deficit, std::abs(th[1]) - 1.0);
      return std::max(0.0, deficit);
    }
  }
  return 0;
}

std::vector<double> project_completable(EstimationMode mode,
                                        std::vector<double> th) {
  for (int step = 0; step < 200; ++step) {
    if (completability_deficit(mode, th) <= 0.0) return th;
    for (double& v : th) v *= 0.95;
  }
  return std::vector<double>(th.size(), 0.0);
}

std::vector<double> degraded_histogram(const SampleSet& s) {
  std::vector<double> out(degraded_count(s.protocol), 0.0);
  for (int i = 0; i < static_cast<int>(s.counts.size()); ++i)
    out[degraded_index(degrade(outcome_from_index(i, s.protocol)),
                       s.protocol)] += s.counts[i];
  return out;
}

// Empirical frequencies inverted through the linear Stokes relations.
std::vector<double> moment_matching_start(const SampleSet& s,
                                          EstimationMode mode) {
  const Protocol protocol = s.protocol;
  const int j = basis_count(protocol);
  const double scale = static_cast<double>(j * j);
  std::vector<double> freq(s.counts.size());
  for (size_t i = 0; i < s.counts.size(); ++i)
    freq[i] = s.counts[i] / static_cast<double>(s.m);

  if (is_degraded(mode)) {
    std::vector<double> deg(degraded_count(protocol), 0.0);
    for (int i = 0; i < static_cast<int>(freq.size()); ++i)
      deg[degraded_index(degrade(outcome_from_index(i, protocol)), protocol)] +=
          freq[i];
    std::vector<double> th(param_count(mode), 0.0);
    for (int a = 0; a < param_count(mode); ++a) {
      DegradedOutcome d0{0, static_cast<Basis>(a), static_cast<Basis>(a)};
      DegradedOutcome d1{1, static_cast<Basis>(a), static_cast<Basis>(a)};
      double n0 = deg[degraded_index(d0, protocol)];
      double n1 = deg[degraded_index(d1, protocol)];
      double sign = (static_cast<Basis>(a) == Basis::Y) ? -1.0 : 1.0;
      th[a] = (n0 + n1) > 0 ? sign * (n0 - n1) / (n0 + n1) : 0.0;
    }
    return project_completable(mode, th);
  }

  Eigen::Matrix3d s_hat = Eigen::Matrix3d::Zero();
  Eigen::Vector3d t_hat = Eigen::Vector3d::Zero();
  for (int b = 0; b < j; ++b) {
    double t_acc = 0;
    for (int a = 0; a < j; ++a) {
      double s_acc = 0;
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          SampleOutcome z{x, static_cast<Basis>(a), y, static_cast<Basis>(b)};
          double v = freq[outcome_index(z, protocol)];
          s_acc += (((x + y) & 1) ? -v : v);
          t_acc += (y ? -v : v);
        }
      double sign_a = (static_cast<Basis>(a) == Basis::Y) ? -1.0 : 1.0;
      s_hat(b, a) = sign_a * scale * s_acc;
    }
    t_hat(b) = scale * t_acc / j;
  }

  std::vector<double> th;
  if (mode == EstimationMode::FullSixstate) {
    th = {s_hat(0, 0), s_hat(0, 1), s_hat(0, 2), s_hat(1, 0),
          s_hat(1, 1), s_hat(1, 2), s_hat(2, 0), s_hat(2, 1),
          s_hat(2, 2), t_hat(0),    t_hat(1),    t_hat(2)};
  } else {
    th = {s_hat(0, 0), s_hat(0, 1), s_hat(1, 0),
          s_hat(1, 1), t_hat(0),    t_hat(1)};
  }
  return project_completable(mode, th);
}

}  // namespace

double log_likelihood(const std::vector<double>& counts,
                      const std::vector<double>& probs) {
  if (counts.size() != probs.size())
    throw domain_error("log_likelihood: size mismatch");
  double ll = 0;
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] <= 0) continue;
    if (probs[i] <= 0) return -1e18;
    ll += counts[i] * std::log2(probs[i]);
  }
  return ll;
}

SampleSet draw_samples(const ChoiOperator& rho, Protocol protocol, long long m,
                       uint64_t seed) {
  if (m < 1) throw domain_error("draw_samples: m must be >= 1");
  std::vector<double> probs = sample_distribution(rho, protocol);
  std::vector<double> cdf(probs.size());
  double acc = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  SampleSet out;
  out.protocol = protocol;
  out.m = m;
  out.seed = seed;
  out.counts.assign(probs.size(), 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (long long i = 0; i < m; ++i) {
    double u = unit(rng);
    size_t idx =
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (idx >= probs.size()) idx = probs.size() - 1;
    out.counts[idx] += 1.0;
  }
  return out;
}

SampleSet exact_sample_set(const ChoiOperator& rho, Protocol protocol,
                           long long m) {
  SampleSet out;
  out.protocol = protocol;
  out.m = m;
  out.seed = 0;
  out.counts = sample_distribution(rho, protocol);
  for (double& c : out.counts) c *= static_cast<double>(m);
  return out;
}

EstimationReport ml_estimate(const SampleSet& s, EstimationMode mode,
                             const MlOptions& options) {
  if (mode_protocol(mode) != s.protocol)
    throw domain_error("ml_estimate: mode incompatible with sample protocol");

  const std::vector<double> data =
      is_degraded(mode) ? degraded_histogram(s) : s.counts;
  const double norm = static_cast<double>(s.m);

  auto objective = [&](const std::vector<double>& th) {
    double deficit = completability_deficit(mode, th);
    if (deficit > 1e-12) return 10.0 + 1e3 * deficit;
    double ll = log_likelihood(data, outcome_probs(mode, th));
    return -ll / norm;
  };

  std::vector<double> start = moment_matching_start(s, mode);
  const double start_ll = log_likelihood(data, outcome_probs(mode, start));

  NelderMeadResult nm =
      nelder_mead(objective, start, 0.05, options.step_tol,
                  options.max_iterations);
  std::vector<double> th = project_completable(mode, nm.x);
  double final_ll = log_likelihood(data, outcome_probs(mode, th));
  if (final_ll < start_ll) {
    th = start;
    final_ll = start_ll;
  }

  EstimationReport report;
  report.mode = mode;
  report.estimate = slice_from_params(mode, th);
  report.log_likelihood = final_ll;
  report.converged = nm.converged;
  report.iterations = nm.iterations;
  report.ambiguity_estimate = estimated_ambiguity(report);
  return report;
}

double ml_loglikelihood_pauli(const SampleSet& s) {
  if (s.protocol != Protocol::Sixstate)
    throw domain_error("ml_loglikelihood_pauli: needs six-state samples");
  const double norm = static_cast<double>(s.m);
  auto objective = [&](const std::vector<double>& e) {
    BellDistribution p = BellDistribution::from_diagonal_stokes(e[0], e[1], e[2]);
    double worst = std::min(std::min(p.p00, p.p01), std::min(p.p10, p.p11));
    if (worst < 0) return 10.0 - 1e3 * worst;
    std::vector<double> th = {e[0], 0, 0, 0, e[1], 0, 0, 0, e[2], 0, 0, 0};
    return -log_likelihood(s.counts, outcome_probs(EstimationMode::FullSixstate,
                                                   th)) /
           norm;
  };
  // Moment start from the matched-basis agreement statistics.
  std::vector<double> deg(degraded_count(Protocol::Sixstate), 0.0);
  for (int i = 0; i < static_cast<int>(s.counts.size()); ++i)
    deg[degraded_index(degrade(outcome_from_index(i, s.protocol)), s.protocol)] +=
        s.counts[i];
  std::vector<double> start(3, 0.0);
  for (int a = 0; a < 3; ++a) {
    DegradedOutcome d0{0, static_cast<Basis>(a), static_cast<Basis>(a)};
    DegradedOutcome d1{1, static_cast<Basis>(a), static_cast<Basis>(a)};
    double n0 = deg[degraded_index(d0, Protocol::Sixstate)];
    double n1 = deg[degraded_index(d1, Protocol::Sixstate)];
    start[a] = (n0 + n1) > 0 ? 0.99 * (n0 - n1) / (n0 + n1) : 0.0;
  }
  NelderMeadResult nm = nelder_mead(objective, start, 0.05, 1e-9, 5000);
  return -nm.value * norm;
}

std::vector<double> slice_parameters(const ParameterSlice& slice) {
  switch (slice.kind) {
    case ParameterSlice::Kind::Full: {
      const auto& s = slice.full;
      return {s.R(0, 0), s.R(0, 1), s.R(0, 2), s.R(1, 0), s.R(1, 1), s.R(1, 2),
              s.R(2, 0), s.R(2, 1), s.R(2, 2), s.t(0),    s.t(1),    s.t(2)};
    }
    case ParameterSlice::Kind::Bb84Omega:
      return std::vector<double>(slice.omega.begin(), slice.omega.end());
    case ParameterSlice::Kind::SixstateGamma:
      return std::vector<double>(slice.gamma.begin(), slice.gamma.end());
    case ParameterSlice::Kind::Bb84Upsilon:
      return std::vector<double>(slice.upsilon.begin(), slice.upsilon.end());
  }
  return {};
}

double estimation_error(const EstimationReport& report,
                        const ChoiOperator& truth) {
  if (report.mode == EstimationMode::FullSixstate) {
    Matrix est = stokes_to_choi_unchecked(report.estimate.full);
    return trace_distance(est, truth.op);
  }
  StokesParams ts = choi_to_stokes(truth);
  ParameterSlice true_slice;
  switch (report.mode) {
    case EstimationMode::Bb84Omega:
      true_slice = ParameterSlice::make_omega(ts);
      break;
    case EstimationMode::DegradedGamma:
      true_slice = ParameterSlice::make_gamma(ts);
      break;
    default:
      true_slice = ParameterSlice::make_upsilon(ts);
      break;
  }
  std::vector<double> a = slice_parameters(report.estimate);
  std::vector<double> b = slice_parameters(true_slice);
  double sq = 0;
  for (size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

std::vector<ConsistencyRow> consistency_report(const ChoiOperator& rho_true,
                                               EstimationMode mode,
                                               double alpha,
                                               const std::vector<long long>& m_list,
                                               int trials, uint64_t seed) {
  if (alpha <= 0) throw domain_error("consistency_report: alpha must be > 0");
  if (trials < 1) throw domain_error("consistency_report: trials must be >= 1");
  std::vector<ConsistencyRow> rows;
  for (long long m : m_list) {
    int misses = 0;
    for (int t = 0; t < trials; ++t) {
      uint64_t trial_seed =
          seed ^ (0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(t + 1)) ^
          static_cast<uint64_t>(m);
      SampleSet s = draw_samples(rho_true, mode_protocol(mode), m, trial_seed);
      EstimationReport rep = ml_estimate(s, mode);
      if (estimation_error(rep, rho_true) > alpha) ++misses;
    }
    rows.push_back({m, static_cast<double>(misses) / trials});
  }
  return rows;
}

double estimated_ambiguity(const EstimationReport& report, Direction dir,
                           Basis key_basis) {
  return worst_case_ambiguity(report.estimate, dir, key_basis);
}

double eta_hat(const EstimationReport& report, double alpha, Direction dir,
               Basis key_basis) {
  std::vector<double> center = slice_parameters(report.estimate);
  const size_t d = center.size();
  EstimationMode mode = report.mode;
  const double h_center = worst_case_ambiguity(report.estimate, dir, key_basis);

  std::vector<std::vector<double>> dirs;
  for (size_t i = 0; i < d; ++i) {
    std::vector<double> unit(d, 0.0);
    unit[i] = 1.0;
    dirs.push_back(unit);
    unit[i] = -1.0;
    dirs.push_back(unit);
  }
  std::mt19937_64 rng(0xE7AULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  while (dirs.size() < 26) {
    std::vector<double> v(d);
    double norm = 0;
    for (double& x : v) {
      x = gauss(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-9) continue;
    for (double& x : v) x /= norm;
    dirs.push_back(v);
  }

  double eta = 0;
  for (const auto& dir_vec : dirs) {
    // Shrink back toward the center until PSD-completable; stays in the ball.
    for (double scale = 1.0; scale > 1e-4; scale *= 0.5) {
      std::vector<double> th(d);
      for (size_t i = 0; i < d; ++i)
        th[i] = center[i] + alpha * scale * dir_vec[i];
      if (completability_deficit(mode, th) > 1e-12) continue;
      double h = worst_case_ambiguity(slice_from_params(mode, th), dir, key_basis);
      eta = std::max(eta, std::abs(h - h_center));
      break;
    }
  }
  return eta;
}

std::string sample_set_to_csv(const SampleSet& s) {
  std::ostringstream out;
  out << "x,basisA,y,basisB,count\n";
  for (int i = 0; i < static_cast<int>(s.counts.size()); ++i) {
    if (s.counts[i] == 0) continue;
    SampleOutcome z = outcome_from_index(i, s.protocol);
    out << z.xa << ',' << basis_letter(z.basis_a) << ',' << z.yb << ','
        << basis_letter(z.basis_b) << ',' << s.counts[i] << '\n';
  }
  return out.str();
}

SampleSet sample_set_from_csv(std::istream& in, Protocol protocol) {
  SampleSet s;
  s.protocol = protocol;
  s.counts.assign(outcome_count(protocol), 0.0);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,basisA,y,basisB,count", 0) != 0)
    throw domain_error("sample CSV: missing header");
  double total = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string xa, ba, yb, bb, count;
    if (!std::getline(row, xa, ',') || !std::getline(row, ba, ',') ||
        !std::getline(row, yb, ',') || !std::getline(row, bb, ',') ||
        !std::getline(row, count, ','))
      throw domain_error("sample CSV: malformed row '" + line + "'");
    SampleOutcome z{std::stoi(xa), basis_from_letter(ba), std::stoi(yb),
                    basis_from_letter(bb)};
    double c = std::stod(count);
    s.counts[outcome_index(z, protocol)] += c;
    total += c;
  }
  s.m = static_cast<long long>(std::llround(total));
  return s;
}

}  // namespace qkd
