#include "qkdrate/postprocessing.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <random>
#include <sstream>

namespace qkd {

namespace {

constexpr int kMaxBlockLength = 24;
constexpr int kMaxCosetLogSize = 20;
constexpr long long kExhaustiveSeedBudget = 1LL << 20;

int f2_rank(std::vector<uint32_t> rows, int n) {
  int rank = 0;
  for (int col = 0; col < n && rank < static_cast<int>(rows.size()); ++col) {
    uint32_t mask = 1u << col;
    int pivot = -1;
    for (int r = rank; r < static_cast<int>(rows.size()); ++r)
      if (rows[r] & mask) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(rows[rank], rows[pivot]);
    for (int r = 0; r < static_cast<int>(rows.size()); ++r)
      if (r != rank && (rows[r] & mask)) rows[r] ^= rows[rank];
    ++rank;
  }
  return rank;
}

uint32_t pack_bits(const BitVec& x) {
  uint32_t w = 0;
  for (size_t i = 0; i < x.size(); ++i)
    if (x[i]) w |= 1u << i;
  return w;
}

BitVec unpack_bits(uint32_t w, int n) {
  BitVec x(n, 0);
  for (int i = 0; i < n; ++i) x[i] = (w >> i) & 1;
  return x;
}

// Lexicographic order on bit vectors (position 0 most significant).
bool lex_less(uint32_t a, uint32_t b, int n) {
  for (int i = 0; i < n; ++i) {
    int ai = (a >> i) & 1, bi = (b >> i) & 1;
    if (ai != bi) return ai < bi;
  }
  return false;
}

double type_entropy(uint32_t word, const std::vector<int>& side,
                    int side_alphabet, std::vector<int>& scratch) {
  const int n = static_cast<int>(side.size());
  std::fill(scratch.begin(), scratch.end(), 0);
  for (int i = 0; i < n; ++i)
    ++scratch[((word >> i) & 1) * side_alphabet + side[i]];
  double h = 0;
  for (int c : scratch)
    if (c > 0) {
      double p = static_cast<double>(c) / n;
      h -= p * std::log2(p);
    }
  return h;
}

}  // namespace

LinearCode LinearCode::from_rows(int n, std::vector<uint32_t> rows) {
  if (n < 1 || n > kMaxBlockLength)
    throw budget_exceeded("LinearCode: block length limited to 24");
  const int k = static_cast<int>(rows.size());
  if (k < 0 || k > n) throw domain_error("LinearCode: need 0 <= k <= n");
  for (uint32_t r : rows)
    if (r >> n) throw domain_error("LinearCode: row has bits beyond n");
  if (f2_rank(rows, n) != k)
    throw domain_error("LinearCode: parity-check matrix is rank deficient");
  LinearCode code;
  code.n = n;
  code.k = k;
  code.rows = std::move(rows);
  return code;
}

LinearCode LinearCode::random_code(int n, int k, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<uint32_t> word(0, (1u << n) - 1);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<uint32_t> rows(k);
    for (auto& r : rows) r = word(rng);
    if (f2_rank(rows, n) == k) return from_rows(n, std::move(rows));
  }
  throw domain_error("LinearCode::random_code: no full-rank draw (bad k?)");
}

LinearCode LinearCode::search_code(int n, int k, int min_weight,
                                   uint64_t seed) {
  if (n - k > kMaxCosetLogSize)
    throw budget_exceeded("search_code: codeword space above 2^20");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<uint32_t> word(0, (1u << n) - 1);
  for (int attempt = 0; attempt < 20000; ++attempt) {
    std::vector<uint32_t> rows(k);
    for (auto& r : rows) r = word(rng);
    if (f2_rank(rows, n) != k) continue;
    LinearCode code;
    code.n = n;
    code.k = k;
    code.rows = rows;

    // Null-space basis via the existing decoder plumbing: enumerate the
    // zero-syndrome coset and check the weight spectrum.
    std::vector<uint32_t> reduced = rows;
    std::vector<int> pivot_col(k, -1);
    int rank = 0;
    for (int col = 0; col < n && rank < k; ++col) {
      uint32_t mask = 1u << col;
      int pivot = -1;
      for (int r = rank; r < k; ++r)
        if (reduced[r] & mask) {
          pivot = r;
          break;
        }
      if (pivot < 0) continue;
      std::swap(reduced[rank], reduced[pivot]);
      for (int r = 0; r < k; ++r)
        if (r != rank && (reduced[r] & mask)) reduced[r] ^= reduced[rank];
      pivot_col[rank] = col;
      ++rank;
    }
    std::vector<uint32_t> basis;
    std::vector<bool> is_pivot(n, false);
    for (int r = 0; r < rank; ++r) is_pivot[pivot_col[r]] = true;
    for (int col = 0; col < n; ++col) {
      if (is_pivot[col]) continue;
      uint32_t v = 1u << col;
      for (int r = 0; r < rank; ++r)
        if (reduced[r] & (1u << col)) v |= 1u << pivot_col[r];
      basis.push_back(v);
    }

    bool ok = true;
    uint32_t cw = 0;
    for (uint32_t counter = 1; counter < (1u << basis.size()) && ok;
         ++counter) {
      cw ^= basis[std::countr_zero(counter)];
      int w = std::popcount(cw);
      if (w < min_weight || w > n - min_weight) ok = false;
    }
    if (ok) return code;
  }
  throw domain_error("search_code: no code found with that weight window");
}

LinearCode LinearCode::golay_derived_20_11() {
  // Cyclic Golay [23,12,7]: generator polynomial
  // g(x) = x^11 + x^10 + x^6 + x^5 + x^4 + x^2 + 1.
  const uint32_t g = 0b110001110101;
  // Shorten at coordinate 0 (span the multiples x*g ... x^11*g), drop that
  // coordinate, then puncture the two highest coordinates: [20,11,>=5].
  std::vector<uint32_t> generator(11);
  for (int i = 0; i < 11; ++i)
    generator[i] = (g << (i + 1)) >> 1 & ((1u << 20) - 1);

  // Parity check = null-space basis of the generator (row reduce G).
  std::vector<uint32_t> rows = generator;
  std::vector<int> pivot_col;
  int rank = 0;
  for (int col = 0; col < 20 && rank < 11; ++col) {
    uint32_t mask = 1u << col;
    int pivot = -1;
    for (int r = rank; r < 11; ++r)
      if (rows[r] & mask) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(rows[rank], rows[pivot]);
    for (int r = 0; r < 11; ++r)
      if (r != rank && (rows[r] & mask)) rows[r] ^= rows[rank];
    pivot_col.push_back(col);
    ++rank;
  }
  std::vector<bool> is_pivot(20, false);
  for (int c : pivot_col) is_pivot[c] = true;
  std::vector<uint32_t> checks;
  for (int col = 0; col < 20; ++col) {
    if (is_pivot[col]) continue;
    uint32_t v = 1u << col;
    for (int r = 0; r < rank; ++r)
      if (rows[r] & (1u << col)) v |= 1u << pivot_col[r];
    checks.push_back(v);
  }
  return from_rows(20, std::move(checks));
}

LinearCode LinearCode::parse(std::istream& in) {
  int n = 0, k = 0;
  if (!(in >> n >> k)) throw domain_error("LinearCode::parse: missing 'n k'");
  std::vector<uint32_t> rows;
  std::string line;
  std::getline(in, line);
  for (int r = 0; r < k; ++r) {
    if (!std::getline(in, line) || static_cast<int>(line.size()) < n)
      throw domain_error("LinearCode::parse: missing row " + std::to_string(r));
    uint32_t w = 0;
    for (int j = 0; j < n; ++j) {
      if (line[j] == '1')
        w |= 1u << j;
      else if (line[j] != '0')
        throw domain_error("LinearCode::parse: row characters must be 0/1");
    }
    rows.push_back(w);
  }
  return from_rows(n, std::move(rows));
}

std::string LinearCode::to_text() const {
  std::ostringstream out;
  out << n << ' ' << k << '\n';
  for (uint32_t r : rows) {
    for (int j = 0; j < n; ++j) out << ((r >> j) & 1);
    out << '\n';
  }
  return out.str();
}

BitVec syndrome(const LinearCode& code, const BitVec& x) {
  if (static_cast<int>(x.size()) != code.n)
    throw domain_error("syndrome: input length mismatch");
  uint32_t word = pack_bits(x);
  BitVec t(code.k, 0);
  for (int r = 0; r < code.k; ++r)
    t[r] = std::popcount(code.rows[r] & word) & 1;
  return t;
}

BitVec min_entropy_decode(const LinearCode& code, const BitVec& syndrome_bits,
                          const std::vector<int>& side, int side_alphabet) {
  if (static_cast<int>(syndrome_bits.size()) != code.k)
    throw domain_error("min_entropy_decode: syndrome length mismatch");
  if (static_cast<int>(side.size()) != code.n)
    throw domain_error("min_entropy_decode: side information length mismatch");
  if (code.n - code.k > kMaxCosetLogSize)
    throw budget_exceeded("min_entropy_decode: coset has more than 2^20 words");

  // Row-reduce [M | t] to get one particular solution and a null basis.
  std::vector<uint32_t> rows = code.rows;
  BitVec t = syndrome_bits;
  std::vector<int> pivot_col(code.k, -1);
  int rank = 0;
  for (int col = 0; col < code.n && rank < code.k; ++col) {
    uint32_t mask = 1u << col;
    int pivot = -1;
    for (int r = rank; r < code.k; ++r)
      if (rows[r] & mask) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    std::swap(rows[rank], rows[pivot]);
    std::swap(t[rank], t[pivot]);
    for (int r = 0; r < code.k; ++r)
      if (r != rank && (rows[r] & mask)) {
        rows[r] ^= rows[rank];
        t[r] ^= t[rank];
      }
    pivot_col[rank] = col;
    ++rank;
  }

  uint32_t particular = 0;
  for (int r = 0; r < rank; ++r)
    if (t[r]) particular |= 1u << pivot_col[r];

  std::vector<uint32_t> null_basis;
  std::vector<bool> is_pivot(code.n, false);
  for (int r = 0; r < rank; ++r) is_pivot[pivot_col[r]] = true;
  for (int col = 0; col < code.n; ++col) {
    if (is_pivot[col]) continue;
    uint32_t v = 1u << col;
    for (int r = 0; r < rank; ++r)
      if (rows[r] & (1u << col)) v |= 1u << pivot_col[r];
    null_basis.push_back(v);
  }

  const int free_dims = static_cast<int>(null_basis.size());
  uint32_t best_word = particular;
  std::vector<int> scratch(2 * side_alphabet);
  double best_h = type_entropy(particular, side, side_alphabet, scratch);
  uint32_t candidate = particular;
  for (uint32_t counter = 1; counter < (1u << free_dims); ++counter) {
    // Gray-code walk: flip one basis vector per step.
    candidate ^= null_basis[std::countr_zero(counter)];
    double h = type_entropy(candidate, side, side_alphabet, scratch);
    if (h < best_h - 1e-12 ||
        (h < best_h + 1e-12 && lex_less(candidate, best_word, code.n))) {
      best_h = h;
      best_word = candidate;
    }
  }
  return unpack_bits(best_word, code.n);
}

OneWayIrResult one_way_ir(const BitVec& x, const BitVec& y,
                          const LinearCode& code) {
  if (x.size() != y.size()) throw domain_error("one_way_ir: length mismatch");
  OneWayIrResult r;
  r.transcript = syndrome(code, x);
  std::vector<int> side(y.begin(), y.end());
  r.x_hat = min_entropy_decode(code, r.transcript, side, 2);
  return r;
}

TwoWayIrResult two_way_ir(const BitVec& x, const BitVec& y,
                          const LinearCode& m1, const LinearCode& m_a2,
                          const LinearCode& m_b2, const BlockFunctions& f) {
  if (x.size() != y.size() || x.size() % 2 != 0)
    throw domain_error("two_way_ir: sequences must have equal even length");
  const int n = static_cast<int>(x.size()) / 2;
  if (m1.n != n || m_a2.n != n || m_b2.n != n)
    throw domain_error("two_way_ir: code lengths must equal the block count");

  TwoWayIrResult r;
  BitVec v1(n);
  r.u1.resize(n);
  for (int i = 0; i < n; ++i) {
    r.u1[i] = x[2 * i] ^ x[2 * i + 1];
    v1[i] = y[2 * i] ^ y[2 * i + 1];
  }

  // (ii) Alice sends the syndrome of the parity sequence.
  r.t1 = syndrome(m1, r.u1);

  // (iii) Bob decodes u1 from (y, t1) and returns the parity of
  // discrepancies.
  std::vector<int> side1(n);
  for (int i = 0; i < n; ++i) side1[i] = y[2 * i] * 2 + y[2 * i + 1];
  r.u1_hat = min_entropy_decode(m1, r.t1, side1, 4);
  r.w1_hat.resize(n);
  for (int i = 0; i < n; ++i) r.w1_hat[i] = r.u1_hat[i] ^ v1[i];

  // (iv) Both sides apply the block functions with their reconstructed
  // first-round registers.
  r.u2_tilde.resize(n);
  r.v2_tilde.resize(n);
  for (int i = 0; i < n; ++i) {
    int v1_alice = r.u1[i] ^ r.w1_hat[i];  // Alice's view of Bob's parity
    r.u2_tilde[i] = zeta(x[2 * i + 1], r.u1[i], v1_alice, f.chi_a);
    r.v2_tilde[i] = zeta(y[2 * i + 1], r.u1_hat[i], v1[i], f.chi_b);
  }

  // (v) Cross syndromes.
  r.t_a2 = syndrome(m_a2, r.u2_tilde);
  r.t_b2 = syndrome(m_b2, r.v2_tilde);

  // (vi) Cross decodes with (parity, own pair) side information.
  std::vector<int> side_bob(n), side_alice(n);
  for (int i = 0; i < n; ++i) {
    side_bob[i] = (r.w1_hat[i] * 2 + y[2 * i]) * 2 + y[2 * i + 1];
    side_alice[i] = (r.w1_hat[i] * 2 + x[2 * i]) * 2 + x[2 * i + 1];
  }
  r.u2_hat = min_entropy_decode(m_a2, r.t_a2, side_bob, 8);
  r.v2_hat = min_entropy_decode(m_b2, r.t_b2, side_alice, 8);

  BitVec u2(n), v2(n);
  for (int i = 0; i < n; ++i) {
    int u1 = r.u1[i], vv1 = v1[i];
    u2[i] = zeta(x[2 * i + 1], u1, vv1, f.chi_a);
    v2[i] = zeta(y[2 * i + 1], u1, vv1, f.chi_b);
  }
  r.success = r.u1 == r.u1_hat && r.u2_tilde == u2 && r.u2_hat == u2 &&
              r.v2_tilde == v2 && r.v2_hat == v2;
  return r;
}

ToeplitzHash ToeplitzHash::from_bits(int n, int l, BitVec diagonal) {
  if (l < 0 || l > n) throw domain_error("ToeplitzHash: need 0 <= l <= n");
  if (static_cast<int>(diagonal.size()) != n + l - 1 && !(l == 0 && diagonal.empty()))
    throw domain_error("ToeplitzHash: diagonal needs n + l - 1 bits");
  ToeplitzHash h;
  h.in_bits = n;
  h.out_bits = l;
  h.diagonal = std::move(diagonal);
  return h;
}

ToeplitzHash ToeplitzHash::from_seed(int n, int l, uint64_t seed) {
  BitVec diag;
  if (l > 0) {
    diag.resize(n + l - 1);
    for (int i = 0; i < n + l - 1; ++i) {
      // Bit i of the seed integer is diagonal entry i; wider diagonals draw
      // further bits from a seeded generator.
      if (i < 64) {
        diag[i] = (seed >> i) & 1;
      } else {
        std::mt19937_64 rng(seed + 0x1234567ULL * i);
        diag[i] = rng() & 1;
      }
    }
  }
  return from_bits(n, l, std::move(diag));
}

BitVec toeplitz_apply(const ToeplitzHash& h, const BitVec& x) {
  if (static_cast<int>(x.size()) != h.in_bits)
    throw domain_error("toeplitz_apply: input length mismatch");
  BitVec out(h.out_bits, 0);
  for (int i = 0; i < h.out_bits; ++i) {
    int acc = 0;
    for (int j = 0; j < h.in_bits; ++j)
      acc ^= h.diagonal[i - j + h.in_bits - 1] & x[j];
    out[i] = acc;
  }
  return out;
}

namespace {

double nu_oneway(long long n, double eps) {
  return 5.0 * std::sqrt(std::log2(3.0 / eps) / static_cast<double>(n)) +
         2.0 * std::log2(3.0 / (2.0 * eps)) / static_cast<double>(n);
}

double nu_twoway(long long n, double eps) {
  return 5.0 * std::sqrt(std::log2(36.0 / (eps * eps)) / static_cast<double>(n)) +
         2.0 * std::log2(3.0 / eps) / static_cast<double>(n);
}

long long largest_below(double bound) {
  // Largest integer strictly below `bound`.
  double c = std::ceil(bound);
  long long l = static_cast<long long>(c) - 1;
  if (c == bound) return static_cast<long long>(bound) - 1;
  return l;
}

}  // namespace

FiniteKeyResult finite_key_length_oneway(const FiniteKeyParams& p,
                                         double ambiguity) {
  if (p.n < 1) throw domain_error("finite_key_length: n must be >= 1");
  if (!(p.eps > 0 && p.eps < 1))
    throw domain_error("finite_key_length: eps out of (0,1)");
  FiniteKeyResult r;
  r.nu_n = nu_oneway(p.n, p.eps);
  r.rhs = ambiguity - p.eta - static_cast<double>(p.k) / p.n - r.nu_n;
  if (r.rhs <= 0) {
    r.abort = true;
    return r;
  }
  r.length = largest_below(r.rhs * static_cast<double>(p.n));
  if (r.length < 0) r.length = 0;
  return r;
}

FiniteKeyResult finite_key_length_twoway(const FiniteKeyParams& p,
                                         double h_branch1, double h_branch2) {
  if (p.n < 1) throw domain_error("finite_key_length: n must be >= 1");
  if (!(p.eps > 0 && p.eps < 1))
    throw domain_error("finite_key_length: eps out of (0,1)");
  FiniteKeyResult r;
  r.nu_n = nu_twoway(p.n, p.eps);
  const double nn = static_cast<double>(p.n);
  double branch1 =
      h_branch1 - p.eta - static_cast<double>(p.k1 + p.k_a2 + p.k_b2) / nn;
  double branch2 = h_branch2 - p.eta - static_cast<double>(p.k_a2 + p.k_b2) / nn;
  r.rhs = 0.5 * std::max(branch1, branch2) - r.nu_n;
  if (r.rhs <= 0) {
    r.abort = true;
    return r;
  }
  r.length = largest_below(r.rhs * 2.0 * nn);
  if (r.length < 0) r.length = 0;
  return r;
}

SecrecyAuditResult secrecy_audit(const CcqState& state, int l,
                                 long long subsample) {
  // Split the classical registers into the hashed input X and an optional
  // side-information register named "E".
  int e_reg = -1;
  for (size_t i = 0; i < state.registers.size(); ++i)
    if (state.registers[i].name == "E") e_reg = static_cast<int>(i);

  int x_bits = 0;
  long long x_size = 1, e_size = 1;
  for (size_t i = 0; i < state.registers.size(); ++i) {
    if (static_cast<int>(i) == e_reg) {
      e_size = state.registers[i].size;
      continue;
    }
    int sz = state.registers[i].size;
    if ((sz & (sz - 1)) != 0)
      throw domain_error("secrecy_audit: X register sizes must be powers of 2");
    while (sz > 1) {
      sz >>= 1;
      ++x_bits;
    }
    x_size *= state.registers[i].size;
  }
  if (l < 0 || l > x_bits)
    throw domain_error("secrecy_audit: need 0 <= l <= input bits");

  const bool quantum_eve = state.eve_dim > 1;
  if (quantum_eve) {
    if (x_size * state.eve_dim * e_size > 1024)
      throw budget_exceeded("secrecy_audit: quantum-Eve operator above 1024 dims");
  } else if (x_bits > 16) {
    throw budget_exceeded("secrecy_audit: classical audit limited to 16 bits");
  }

  // Flatten to P(x, e) and the quantum conditionals.
  const int a = state.alphabet_size();
  std::vector<double> p_xe(x_size * e_size, 0.0);
  std::vector<Matrix> rho_xe;
  if (quantum_eve) rho_xe.assign(x_size * e_size, Matrix());
  for (int c = 0; c < a; ++c) {
    if (state.joint[c] <= 0) continue;
    std::vector<int> outcome = state.outcome_of(c);
    long long x = 0, e = 0;
    for (size_t i = 0; i < outcome.size(); ++i) {
      if (static_cast<int>(i) == e_reg)
        e = outcome[i];
      else
        x = x * state.registers[i].size + outcome[i];
    }
    p_xe[x * e_size + e] += state.joint[c];
    if (quantum_eve) {
      Matrix add = state.joint[c] * state.conditionals[c];
      if (rho_xe[x * e_size + e].size() == 0)
        rho_xe[x * e_size + e] = add;
      else
        rho_xe[x * e_size + e] += add;
    }
  }

  SecrecyAuditResult out;

  // H_min(X | E).
  if (!quantum_eve) {
    double sum = 0;
    for (long long e = 0; e < e_size; ++e) {
      double best = 0;
      for (long long x = 0; x < x_size; ++x)
        best = std::max(best, p_xe[x * e_size + e]);
      sum += best;
    }
    out.min_entropy = -std::log2(sum);
  } else {
    // sigma = rho_E per classical cell e; exploit the block structure.
    double lambda = 0;
    for (long long e = 0; e < e_size; ++e) {
      Matrix sigma_e = Matrix::Zero(state.eve_dim, state.eve_dim);
      for (long long x = 0; x < x_size; ++x)
        if (rho_xe[x * e_size + e].size() != 0) sigma_e += rho_xe[x * e_size + e];
      Eigen::SelfAdjointEigenSolver<Matrix> solver(sigma_e);
      Matrix inv_sqrt = Matrix::Zero(state.eve_dim, state.eve_dim);
      for (int i = 0; i < state.eve_dim; ++i)
        if (solver.eigenvalues()[i] > kRankCutoff)
          inv_sqrt += (1.0 / std::sqrt(solver.eigenvalues()[i])) *
                      solver.eigenvectors().col(i) *
                      solver.eigenvectors().col(i).adjoint();
      for (long long x = 0; x < x_size; ++x) {
        if (rho_xe[x * e_size + e].size() == 0) continue;
        Matrix t = inv_sqrt * rho_xe[x * e_size + e] * inv_sqrt;
        lambda = std::max(lambda, hermitian_eigenvalues(t).maxCoeff());
      }
    }
    out.min_entropy = -std::log2(lambda);
  }
  out.bound = std::pow(2.0, -0.5 * (out.min_entropy - l));

  // Family average of the exact trace distance from uniform.
  const int diag_bits = x_bits + l - 1;
  out.family_size = l == 0 ? 1 : (1LL << diag_bits);
  long long step = 1;
  long long evaluations = out.family_size;
  if (out.family_size > kExhaustiveSeedBudget) {
    if (subsample <= 0)
      throw budget_exceeded(
          "secrecy_audit: seed space above 2^20; pass a subsample size");
    evaluations = std::min(subsample, out.family_size);
    step = out.family_size / evaluations;
    out.exhaustive = false;
  }

  const long long s_size = 1LL << l;
  const double uniform = 1.0 / static_cast<double>(s_size);
  double total = 0;
  for (long long idx = 0; idx < evaluations; ++idx) {
    uint64_t seed = static_cast<uint64_t>(idx * step);
    // Hash values for every x.
    std::vector<long long> hash_of(x_size, 0);
    if (l > 0) {
      for (long long x = 0; x < x_size; ++x) {
        long long s = 0;
        for (int i = 0; i < l; ++i) {
          int acc = 0;
          for (int j = 0; j < x_bits; ++j)
            if ((x >> j) & 1)
              acc ^= static_cast<int>((seed >> (i - j + x_bits - 1)) & 1);
          s |= static_cast<long long>(acc) << i;
        }
        hash_of[x] = s;
      }
    }

    double d_f = 0;
    if (!quantum_eve) {
      std::vector<double> p_se(s_size * e_size, 0.0);
      std::vector<double> p_e(e_size, 0.0);
      for (long long x = 0; x < x_size; ++x)
        for (long long e = 0; e < e_size; ++e) {
          p_se[hash_of[x] * e_size + e] += p_xe[x * e_size + e];
          p_e[e] += p_xe[x * e_size + e];
        }
      for (long long s = 0; s < s_size; ++s)
        for (long long e = 0; e < e_size; ++e)
          d_f += std::abs(p_se[s * e_size + e] - uniform * p_e[e]);
    } else {
      for (long long e = 0; e < e_size; ++e) {
        Matrix sigma_e = Matrix::Zero(state.eve_dim, state.eve_dim);
        std::vector<Matrix> sigma_se(s_size,
                                     Matrix::Zero(state.eve_dim, state.eve_dim));
        for (long long x = 0; x < x_size; ++x) {
          if (rho_xe[x * e_size + e].size() == 0) continue;
          sigma_se[hash_of[x]] += rho_xe[x * e_size + e];
          sigma_e += rho_xe[x * e_size + e];
        }
        for (long long s = 0; s < s_size; ++s)
          d_f += hermitian_eigenvalues(sigma_se[s] - uniform * sigma_e)
                     .cwiseAbs()
                     .sum();
      }
    }
    total += d_f;
  }
  out.family_evaluated = evaluations;
  out.distance = total / static_cast<double>(evaluations);
  return out;
}

}  // namespace qkd
