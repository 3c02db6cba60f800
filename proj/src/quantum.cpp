#include "qkdrate/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qkd {

namespace {

double log2_safe(double x) { return std::log2(x); }

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

void require_density_operator(const Matrix& m, const std::string& who) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw domain_error(who + ": operator is not square");
  if (!is_hermitian(m, 1e-9))
    throw domain_error(who + ": operator is not Hermitian");
  if (std::abs(m.trace().real() - 1.0) > 1e-8 || std::abs(m.trace().imag()) > 1e-10)
    throw domain_error(who + ": trace is not 1");
  Eigen::VectorXd ev = hermitian_eigenvalues(m);
  if (ev.minCoeff() < -1e-8)
    throw domain_error(who + ": operator has negative eigenvalue " +
                       std::to_string(ev.minCoeff()));
}

Eigen::VectorXd hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw domain_error("hermitian_eigenvalues: eigensolver failed");
  return solver.eigenvalues();
}

double entropy_of_spectrum(const Eigen::VectorXd& eigenvalues) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    double lam = eigenvalues[i];
    if (lam < -kPsdTol)
      throw domain_error("entropy_of_spectrum: eigenvalue " +
                         std::to_string(lam) + " below -1e-10");
    if (lam <= 0.0) continue;  // 0*log 0 = 0, tiny negatives clamp to 0
    h -= lam * log2_safe(lam);
  }
  return h;
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw domain_error("binary_entropy: p must be in [0,1], got " +
                       std::to_string(p));
  double h = 0.0;
  if (p > 0.0) h -= p * log2_safe(p);
  if (p < 1.0) h -= (1.0 - p) * log2_safe(1.0 - p);
  return h;
}

double shannon_entropy(const std::vector<double>& probs) {
  double total = 0.0;
  double h = 0.0;
  for (double p : probs) {
    if (p < -kPsdTol)
      throw domain_error("shannon_entropy: negative probability");
    if (p > 0.0) h -= p * log2_safe(p);
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw domain_error("shannon_entropy: probabilities sum to " +
                       std::to_string(total));
  return h;
}

double von_neumann_entropy(const Matrix& rho) {
  require_density_operator(rho, "von_neumann_entropy");
  return entropy_of_spectrum(hermitian_eigenvalues(rho));
}

Matrix partial_trace(const Matrix& rho, const std::vector<int>& dims,
                     const std::vector<int>& keep) {
  long long total = 1;
  for (int d : dims) {
    if (d <= 0) throw domain_error("partial_trace: nonpositive dimension");
    total *= d;
  }
  if (rho.rows() != total || rho.cols() != total)
    throw domain_error("partial_trace: operator dim does not match dims");

  const int n = static_cast<int>(dims.size());
  std::vector<bool> kept(n, false);
  for (int k : keep) {
    if (k < 0 || k >= n) throw domain_error("partial_trace: bad keep index");
    kept[k] = true;
  }

  long long keep_dim = 1, trace_dim = 1;
  for (int i = 0; i < n; ++i) (kept[i] ? keep_dim : trace_dim) *= dims[i];

  // Strides of each subsystem in the flat index.
  std::vector<long long> stride(n, 1);
  for (int i = n - 2; i >= 0; --i) stride[i] = stride[i + 1] * dims[i + 1];

  std::vector<int> keep_idx, trace_idx;
  for (int i = 0; i < n; ++i) (kept[i] ? keep_idx : trace_idx).push_back(i);

  auto flat = [&](long long k, long long t) {
    long long idx = 0;
    long long kk = k;
    for (int i = static_cast<int>(keep_idx.size()) - 1; i >= 0; --i) {
      int s = keep_idx[i];
      idx += (kk % dims[s]) * stride[s];
      kk /= dims[s];
    }
    long long tt = t;
    for (int i = static_cast<int>(trace_idx.size()) - 1; i >= 0; --i) {
      int s = trace_idx[i];
      idx += (tt % dims[s]) * stride[s];
      tt /= dims[s];
    }
    return idx;
  };

  Matrix out = Matrix::Zero(keep_dim, keep_dim);
  for (long long r = 0; r < keep_dim; ++r)
    for (long long c = 0; c < keep_dim; ++c) {
      Complex acc(0, 0);
      for (long long t = 0; t < trace_dim; ++t)
        acc += rho(flat(r, t), flat(c, t));
      out(r, c) = acc;
    }
  return out;
}

Vector purify(const Matrix& rho) {
  require_density_operator(rho, "purify");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(rho);
  if (solver.info() != Eigen::Success)
    throw domain_error("purify: eigensolver failed");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  std::vector<int> support;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > kRankCutoff) support.push_back(static_cast<int>(i));
  if (support.empty()) throw domain_error("purify: zero operator");

  const int dim = static_cast<int>(rho.rows());
  const int rank = static_cast<int>(support.size());
  Vector psi = Vector::Zero(static_cast<long long>(dim) * rank);
  for (int j = 0; j < rank; ++j) {
    double amp = std::sqrt(ev[support[j]]);
    for (int i = 0; i < dim; ++i)
      psi[static_cast<long long>(i) * rank + j] =
          amp * solver.eigenvectors()(i, support[j]);
  }
  return psi;
}

double trace_distance(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw domain_error("trace_distance: dimension mismatch");
  Eigen::VectorXd ev = hermitian_eigenvalues(rho - sigma);
  return ev.cwiseAbs().sum();
}

std::optional<double> min_entropy(const Matrix& rho_AB, const Matrix& sigma_B,
                                  int dim_a) {
  if (dim_a <= 0) throw domain_error("min_entropy: bad dim_a");
  const int dim_b = static_cast<int>(sigma_B.rows());
  if (sigma_B.rows() != sigma_B.cols())
    throw domain_error("min_entropy: sigma_B not square");
  if (rho_AB.rows() != static_cast<long long>(dim_a) * dim_b)
    throw domain_error("min_entropy: dimension mismatch");
  require_density_operator(sigma_B, "min_entropy(sigma_B)");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(sigma_B);
  const Eigen::VectorXd& mu = solver.eigenvalues();

  Matrix inv_sqrt = Matrix::Zero(dim_b, dim_b);
  Matrix proj = Matrix::Zero(dim_b, dim_b);
  for (int j = 0; j < dim_b; ++j) {
    if (mu[j] > kRankCutoff) {
      Vector v = solver.eigenvectors().col(j);
      inv_sqrt += (1.0 / std::sqrt(mu[j])) * v * v.adjoint();
      proj += v * v.adjoint();
    }
  }

  // Support condition: rho must live inside id_A (x) supp(sigma_B).
  Matrix eye_a = Matrix::Identity(dim_a, dim_a);
  Matrix p = kron(eye_a, proj);
  Matrix residual = rho_AB - p * rho_AB * p;
  if (residual.cwiseAbs().maxCoeff() > 1e-9) return std::nullopt;

  Matrix w = kron(eye_a, inv_sqrt);
  Eigen::VectorXd ev = hermitian_eigenvalues(w * rho_AB * w);
  double lambda = ev.maxCoeff();
  if (lambda <= 0.0) return std::nullopt;
  return -log2_safe(lambda);
}

double max_entropy_rank(const Matrix& rho) {
  require_density_operator(rho, "max_entropy_rank");
  Eigen::VectorXd ev = hermitian_eigenvalues(rho);
  int rank = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > kRankCutoff) ++rank;
  return log2_safe(static_cast<double>(rank));
}

double smooth_min_entropy_product_bound(double h_xb, double h_b,
                                        double h_max_x, long long n,
                                        double eps) {
  if (n < 1) throw domain_error("smooth_min_entropy_product_bound: n < 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw domain_error("smooth_min_entropy_product_bound: eps out of (0,1)");
  double delta =
      (2.0 * h_max_x + 3.0) * std::sqrt(log2_safe(2.0 / eps) / static_cast<double>(n));
  return (h_xb - h_b) - delta;
}

int CcqState::alphabet_size() const {
  int a = 1;
  for (const auto& r : registers) a *= r.size;
  return a;
}

int CcqState::register_index(const std::string& name) const {
  for (size_t i = 0; i < registers.size(); ++i)
    if (registers[i].name == name) return static_cast<int>(i);
  throw domain_error("CcqState: unknown register '" + name + "'");
}

std::vector<int> CcqState::outcome_of(int index) const {
  std::vector<int> out(registers.size());
  for (int i = static_cast<int>(registers.size()) - 1; i >= 0; --i) {
    out[i] = index % registers[i].size;
    index /= registers[i].size;
  }
  return out;
}

int CcqState::index_of(const std::vector<int>& outcome) const {
  if (outcome.size() != registers.size())
    throw domain_error("CcqState: outcome arity mismatch");
  int idx = 0;
  for (size_t i = 0; i < registers.size(); ++i) {
    if (outcome[i] < 0 || outcome[i] >= registers[i].size)
      throw domain_error("CcqState: outcome out of range");
    idx = idx * registers[i].size + outcome[i];
  }
  return idx;
}

Matrix CcqState::total_operator() const {
  const int a = alphabet_size();
  const long long dim = static_cast<long long>(a) * eve_dim;
  Matrix out = Matrix::Zero(dim, dim);
  for (int c = 0; c < a; ++c) {
    if (joint[c] <= 0.0) continue;
    if (eve_dim == 1 && conditionals.empty()) {
      out(c, c) = joint[c];
      continue;
    }
    out.block(static_cast<long long>(c) * eve_dim,
              static_cast<long long>(c) * eve_dim, eve_dim, eve_dim) =
        joint[c] * conditionals[c];
  }
  return out;
}

void CcqState::validate(double tol) const {
  const int a = alphabet_size();
  if (static_cast<int>(joint.size()) != a)
    throw domain_error("CcqState: joint size mismatch");
  if (static_cast<int>(conditionals.size()) != a &&
      !(eve_dim == 1 && conditionals.empty()))
    throw domain_error("CcqState: conditionals size mismatch");
  double total = 0.0;
  for (int c = 0; c < a; ++c) {
    double p = joint[c];
    if (p < -tol) throw domain_error("CcqState: negative probability");
    total += p;
    if (p > tol && eve_dim > 1)
      require_density_operator(conditionals[c], "CcqState conditional");
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw domain_error("CcqState: joint does not sum to 1");
}

double ccq_reduced_entropy(const CcqState& s, const std::vector<int>& keep_regs,
                           bool keep_eve) {
  const int a = s.alphabet_size();

  int reduced_size = 1;
  for (int r : keep_regs) reduced_size *= s.registers[r].size;

  auto reduced_index = [&](const std::vector<int>& outcome) {
    int idx = 0;
    for (int r : keep_regs) idx = idx * s.registers[r].size + outcome[r];
    return idx;
  };

  if (!keep_eve || s.eve_dim == 1) {
    std::vector<double> marginal(reduced_size, 0.0);
    for (int c = 0; c < a; ++c)
      if (s.joint[c] > 0.0) marginal[reduced_index(s.outcome_of(c))] += s.joint[c];
    double h = 0.0;
    for (double p : marginal)
      if (p > 0.0) h -= p * std::log2(p);
    return h;
  }

  std::vector<Matrix> blocks(reduced_size);
  for (int c = 0; c < a; ++c) {
    if (s.joint[c] <= 0.0) continue;
    int r = reduced_index(s.outcome_of(c));
    if (blocks[r].size() == 0) blocks[r] = Matrix::Zero(s.eve_dim, s.eve_dim);
    blocks[r] += s.joint[c] * s.conditionals[c];
  }
  double h = 0.0;
  for (const Matrix& b : blocks) {
    if (b.size() == 0) continue;
    h += entropy_of_spectrum(hermitian_eigenvalues(b));
  }
  return h;
}

double conditional_entropy(const CcqState& s,
                           const std::vector<std::string>& targets,
                           const std::vector<std::string>& given,
                           bool given_includes_quantum) {
  std::vector<int> given_idx, joint_idx;
  for (const auto& n : given) given_idx.push_back(s.register_index(n));
  joint_idx = given_idx;
  for (const auto& n : targets) {
    int r = s.register_index(n);
    if (std::find(joint_idx.begin(), joint_idx.end(), r) != joint_idx.end())
      throw domain_error("conditional_entropy: register '" + n +
                         "' on both sides");
    joint_idx.push_back(r);
  }
  // Keep register order canonical so reduced indices are well defined.
  std::sort(joint_idx.begin(), joint_idx.end());
  std::sort(given_idx.begin(), given_idx.end());
  return ccq_reduced_entropy(s, joint_idx, given_includes_quantum) -
         ccq_reduced_entropy(s, given_idx, given_includes_quantum);
}

}  // namespace qkd
