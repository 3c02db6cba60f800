#include "qkdrate/rates_twoway.hpp"

#include "qkdrate/optim.hpp"

#include <bit>
#include <cmath>
#include <functional>

namespace qkd {

namespace {

constexpr double kGoldenTol = 1e-7;
constexpr int kPrescanPoints = 200;

int reg_u1() { return 0; }
int reg_u2() { return 1; }
int reg_v2() { return 2; }
int reg_w1() { return 3; }

struct PairEvent {
  double p = 0;
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  int u1 = 0, v1 = 0, w1 = 0, u2 = 0, v2 = 0;
};

std::vector<PairEvent> pair_events(const TwoWayState& s,
                                   const BlockFunctions& f) {
  std::vector<PairEvent> events;
  events.reserve(16);
  for (int x1 = 0; x1 < 2; ++x1)
    for (int y1 = 0; y1 < 2; ++y1)
      for (int x2 = 0; x2 < 2; ++x2)
        for (int y2 = 0; y2 < 2; ++y2) {
          PairEvent e;
          e.p = s.pxy2[((x1 * 2 + y1) * 2 + x2) * 2 + y2];
          e.x1 = x1;
          e.y1 = y1;
          e.x2 = x2;
          e.y2 = y2;
          e.u1 = x1 ^ x2;
          e.v1 = y1 ^ y2;
          e.w1 = e.u1 ^ e.v1;
          e.u2 = zeta(x2, e.u1, e.v1, f.chi_a);
          e.v2 = zeta(y2, e.u1, e.v1, f.chi_b);
          events.push_back(e);
        }
  return events;
}

double classical_conditional_entropy(
    const std::vector<PairEvent>& events,
    const std::function<int(const PairEvent&)>& lhs, int lhs_size,
    const std::function<int(const PairEvent&)>& rhs, int rhs_size) {
  std::vector<double> joint(lhs_size * rhs_size, 0.0);
  std::vector<double> marginal(rhs_size, 0.0);
  for (const PairEvent& e : events) {
    if (e.p <= 0) continue;
    joint[lhs(e) * rhs_size + rhs(e)] += e.p;
    marginal[rhs(e)] += e.p;
  }
  double h = 0;
  for (double v : joint)
    if (v > 0) h -= v * std::log2(v);
  for (double v : marginal)
    if (v > 0) h += v * std::log2(v);
  return h;
}

}  // namespace

BlockFunctions BlockFunctions::from_tables(int packed_a, int packed_b) {
  if (packed_a < 0 || packed_a > 15 || packed_b < 0 || packed_b > 15)
    throw domain_error("BlockFunctions: packed table out of range");
  BlockFunctions f;
  for (int i = 0; i < 4; ++i) {
    f.chi_a[i] = (packed_a >> i) & 1;
    f.chi_b[i] = (packed_b >> i) & 1;
  }
  return f;
}

BlockFunctions BlockFunctions::advantage_distillation() {
  BlockFunctions f;
  f.chi_a = {0, 1, 1, 0};  // keep Alice's second bit iff U1 == V1
  f.chi_b = {1, 1, 1, 1};  // always discard Bob's second bit
  return f;
}

int BlockFunctions::packed_a() const {
  int v = 0;
  for (int i = 0; i < 4; ++i) v |= chi_a[i] << i;
  return v;
}

int BlockFunctions::packed_b() const {
  int v = 0;
  for (int i = 0; i < 4; ++i) v |= chi_b[i] << i;
  return v;
}

TwoWayState derive_two_way_state_from_purification(const Vector& psi_abe,
                                                   int eve_dim,
                                                   const BlockFunctions& f) {
  if (psi_abe.size() != 4LL * eve_dim)
    throw domain_error("derive_two_way_state: purification size mismatch");
  const int r = eve_dim;

  // Unnormalized single-copy Eve operators, trace = P(x, y).
  std::array<Matrix, 4> m;
  std::array<double, 4> pxy{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      Vector v = psi_abe.segment(static_cast<long long>(x * 2 + y) * r, r);
      m[x * 2 + y] = v * v.adjoint();
      pxy[x * 2 + y] = m[x * 2 + y].trace().real();
    }

  TwoWayState out;
  out.state.registers = {{"U1", 2}, {"U2", 2}, {"V2", 2}, {"W1", 2}};
  out.state.eve_dim = r * r;
  const int cells = 16;
  out.state.joint.assign(cells, 0.0);
  std::vector<Matrix> blocks(cells);

  for (int x1 = 0; x1 < 2; ++x1)
    for (int y1 = 0; y1 < 2; ++y1)
      for (int x2 = 0; x2 < 2; ++x2)
        for (int y2 = 0; y2 < 2; ++y2) {
          double p = pxy[x1 * 2 + y1] * pxy[x2 * 2 + y2];
          out.pxy2[((x1 * 2 + y1) * 2 + x2) * 2 + y2] = p;
          if (p <= 0) continue;
          int u1 = x1 ^ x2;
          int v1 = y1 ^ y2;
          int w1 = u1 ^ v1;
          int u2 = zeta(x2, u1, v1, f.chi_a);
          int v2 = zeta(y2, u1, v1, f.chi_b);
          int cell = out.state.index_of({u1, u2, v2, w1});
          out.state.joint[cell] += p;
          Matrix eve = kron(m[x1 * 2 + y1], m[x2 * 2 + y2]);
          if (blocks[cell].size() == 0)
            blocks[cell] = eve;
          else
            blocks[cell] += eve;
        }

  out.state.conditionals.resize(cells);
  for (int c = 0; c < cells; ++c)
    if (out.state.joint[c] > 0)
      out.state.conditionals[c] = blocks[c] / out.state.joint[c];
  out.f = f;
  return out;
}

TwoWayState derive_two_way_state(const ChoiOperator& rho,
                                 const BlockFunctions& f) {
  Vector psi = purify(rho.op);
  return derive_two_way_state_from_purification(
      psi, static_cast<int>(psi.size() / 4), f);
}

TwoWayEntropies two_way_entropies(const TwoWayState& s) {
  const double h_joint = ccq_reduced_entropy(
      s.state, {reg_u1(), reg_u2(), reg_v2(), reg_w1()}, true);
  const double h_w1e = ccq_reduced_entropy(s.state, {reg_w1()}, true);
  const double h_u1w1e =
      ccq_reduced_entropy(s.state, {reg_u1(), reg_w1()}, true);

  std::vector<PairEvent> events = pair_events(s, s.f);
  TwoWayEntropies e;
  e.h_u1u2v2_given_w1e = h_joint - h_w1e;
  e.h_u2v2_given_u1w1e = h_joint - h_u1w1e;
  e.cost_u1_direct = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.u1; }, 2,
      [](const PairEvent& v) { return v.y1 * 2 + v.y2; }, 4);
  e.cost_u1_reverse = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.v1; }, 2,
      [](const PairEvent& v) { return v.x1 * 2 + v.x2; }, 4);
  e.cost_u2 = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.u2; }, 2,
      [](const PairEvent& v) { return (v.w1 * 2 + v.y1) * 2 + v.y2; }, 8);
  e.cost_v2 = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.v2; }, 2,
      [](const PairEvent& v) { return (v.w1 * 2 + v.x1) * 2 + v.x2; }, 8);
  return e;
}

namespace {

struct BranchValues {
  double b1 = 0, b2 = 0;
  double quantum1 = 0, quantum2 = 0;
  double costs1 = 0, costs2 = 0;
};

BranchValues branch_values(const ChoiOperator& rho, Direction dir,
                           const BlockFunctions& f) {
  TwoWayEntropies e = two_way_entropies(derive_two_way_state(rho, f));
  double cost_u1 =
      dir == Direction::Direct ? e.cost_u1_direct : e.cost_u1_reverse;
  BranchValues b;
  b.quantum1 = e.h_u1u2v2_given_w1e;
  b.quantum2 = e.h_u2v2_given_u1w1e;
  b.costs1 = cost_u1 + e.cost_u2 + e.cost_v2;
  b.costs2 = e.cost_u2 + e.cost_v2;
  b.b1 = b.quantum1 - b.costs1;
  b.b2 = b.quantum2 - b.costs2;
  return b;
}

RateResult result_from_branches(const BranchValues& b) {
  RateResult r;
  r.branch1 = 0.5 * b.b1;
  r.branch2 = 0.5 * b.b2;
  r.raw = std::max(*r.branch1, *r.branch2);
  r.rate = std::max(0.0, r.raw);
  if (b.b1 >= b.b2) {
    r.eve_ambiguity = 0.5 * b.quantum1;
    r.reconciliation_cost = 0.5 * b.costs1;
  } else {
    r.eve_ambiguity = 0.5 * b.quantum2;
    r.reconciliation_cost = 0.5 * b.costs2;
  }
  return r;
}

}  // namespace

RateResult rate_twoway(const ParameterSlice& channel, Protocol protocol,
                       Direction dir, const BlockFunctions& f) {
  if (protocol == Protocol::Sixstate ||
      channel.kind == ParameterSlice::Kind::Full) {
    if (channel.kind != ParameterSlice::Kind::Full)
      throw domain_error("rate_twoway: six-state needs the full channel");
    ChoiOperator rho = stokes_to_choi(channel.full);
    if (protocol == Protocol::Sixstate) {
      RateResult r = result_from_branches(branch_values(rho, dir, f));
      r.worst_case = rho;
      return r;
    }
    // BB84 on a full channel: minimize over the omega candidate set.
    ParameterSlice omega = ParameterSlice::make_omega(channel.full);
    return rate_twoway(omega, protocol, dir, f);
  }

  if (channel.kind != ParameterSlice::Kind::Bb84Omega)
    throw domain_error("rate_twoway: bb84 needs an omega slice or full channel");

  Interval iv = feasible_ryy_interval(channel.omega);
  auto objective = [&](double ryy) {
    BranchValues b = branch_values(omega_completion(channel.omega, ryy), dir, f);
    return std::max(b.b1, b.b2);
  };
  ScalarMinResult best =
      iv.width() <= 1e-12
          ? ScalarMinResult{iv.lo, objective(iv.lo)}
          : golden_section_min(objective, iv.lo, iv.hi, kGoldenTol,
                               kPrescanPoints);
  ChoiOperator worst = omega_completion(channel.omega, best.x);
  RateResult r = result_from_branches(branch_values(worst, dir, f));
  r.worst_case = worst;
  return r;
}

double pauli_closed_form(const BellDistribution& p) {
  p.validate();
  const double pk0 = p.p00 + p.p01;  // no bit flip
  const double pk1 = p.p10 + p.p11;
  const double pbar0 = pk0 * pk0 + pk1 * pk1;
  const double pbar1 = 2.0 * pk0 * pk1;

  auto dist_entropy = [](std::initializer_list<double> vals) {
    double h = 0;
    for (double v : vals) {
      double c = std::max(0.0, v);
      if (c > 0) h -= c * std::log2(c);
    }
    return h;
  };

  const double h_pkl = dist_entropy({p.p00, p.p01, p.p10, p.p11});

  double h_term = 0;
  if (pk0 > 0 && pk1 > 0)
    h_term = binary_entropy((p.p00 * p.p10 + p.p01 * p.p11) / (pk0 * pk1));
  const double branch1 = 1.0 - h_pkl + 0.5 * pbar1 * h_term;

  // pbar0 >= 1/2 always, so the primed distribution is well defined.
  const double h_primed = dist_entropy(
      {(p.p00 * p.p00 + p.p01 * p.p01) / pbar0, 2.0 * p.p00 * p.p01 / pbar0,
       (p.p10 * p.p10 + p.p11 * p.p11) / pbar0, 2.0 * p.p10 * p.p11 / pbar0});
  const double branch2 = 0.5 * pbar0 * (1.0 - h_primed);

  return std::max(branch1, branch2);
}

double vollbrecht_yield(const BellDistribution& p) {
  p.validate();
  const double pk0 = p.p00 + p.p01;
  const double pk1 = p.p10 + p.p11;
  const double pbar1 = 2.0 * pk0 * pk1;

  auto dist_entropy = [](std::initializer_list<double> vals) {
    double h = 0;
    for (double v : vals) {
      double c = std::max(0.0, v);
      if (c > 0) h -= c * std::log2(c);
    }
    return h;
  };

  double h_terms = 0;
  if (pk0 > 0) h_terms += binary_entropy(p.p01 / pk0);
  if (pk1 > 0) h_terms += binary_entropy(p.p11 / pk1);
  return 1.0 - dist_entropy({p.p00, p.p01, p.p10, p.p11}) +
         0.25 * pbar1 * h_terms;
}

ComparisonRates comparison_rates(const ChoiOperator& rho,
                                 const std::optional<BellDistribution>& bell) {
  const BlockFunctions f = BlockFunctions::advantage_distillation();
  TwoWayState s = derive_two_way_state(rho, f);
  std::vector<PairEvent> events = pair_events(s, f);

  auto red = [&](std::vector<int> regs) {
    return ccq_reduced_entropy(s.state, regs, true);
  };

  ComparisonRates out;

  // Advantage distillation: 1/2 [H(U2|U1 W1 E1E2) - H(U2|W1 Y1 Y2)].
  const double h_u2_given_u1w1e =
      red({reg_u1(), reg_u2(), reg_w1()}) - red({reg_u1(), reg_w1()});
  const double cost_u2 = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.u2; }, 2,
      [](const PairEvent& v) { return (v.w1 * 2 + v.y1) * 2 + v.y2; }, 8);
  out.advantage_distillation = 0.5 * (h_u2_given_u1w1e - cost_u2);

  if (bell) out.vollbrecht = vollbrecht_yield(*bell);

  // Gohari-Anantharam four-difference diagnostic.
  const double h_u1_given_e = red({reg_u1()}) - red({});
  const double h_w1_given_u1e = red({reg_u1(), reg_w1()}) - red({reg_u1()});
  const double h_v2_given_u1w1u2e =
      red({reg_u1(), reg_u2(), reg_v2(), reg_w1()}) -
      red({reg_u1(), reg_u2(), reg_w1()});

  const double c_u1 = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.u1; }, 2,
      [](const PairEvent& v) { return v.y1 * 2 + v.y2; }, 4);
  const double c_w1 = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.w1; }, 2,
      [](const PairEvent& v) { return (v.u1 * 2 + v.x1) * 2 + v.x2; }, 8);
  const double c_u2 = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.u2; }, 2,
      [](const PairEvent& v) { return ((v.u1 * 2 + v.w1) * 2 + v.y1) * 2 + v.y2; },
      16);
  const double c_v2 = classical_conditional_entropy(
      events, [](const PairEvent& v) { return v.v2; }, 2,
      [](const PairEvent& v) {
        return ((v.u1 * 2 + v.w1) * 2 + v.u2) * 2 * 2 + v.x1 * 2 + v.x2;
      },
      32);

  out.gohari = 0.5 * (h_u1_given_e - c_u1 + h_w1_given_u1e - c_w1 +
                      h_u2_given_u1w1e - c_u2 + h_v2_given_u1w1u2e - c_v2);
  return out;
}

namespace {

uint32_t dot_f2(uint32_t a, uint32_t b) { return std::popcount(a & b) & 1u; }

double product_pkl(int m, uint32_t k, uint32_t l, const BellDistribution& p) {
  const double table[2][2] = {{p.p00, p.p01}, {p.p10, p.p11}};
  double prod = 1.0;
  for (int i = 0; i < m; ++i)
    prod *= table[(k >> i) & 1][(l >> i) & 1];
  return prod;
}

double product_pk(int m, uint32_t k, const BellDistribution& p) {
  const double table[2] = {p.p00 + p.p01, p.p10 + p.p11};
  double prod = 1.0;
  for (int i = 0; i < m; ++i) prod *= table[(k >> i) & 1];
  return prod;
}

}  // namespace

Vector coset_state_vector(int m, uint32_t x, uint32_t k,
                          const BellDistribution& pkl) {
  const int dim = 1 << m;
  double pk = product_pk(m, k, pkl);
  if (pk <= 0)
    throw domain_error("coset_state_vector: conditioning on zero-probability k");
  Vector v = Vector::Zero(dim);
  for (uint32_t l = 0; l < static_cast<uint32_t>(dim); ++l) {
    double amp = std::sqrt(product_pkl(m, k, l, pkl) / pk);
    v[l] = dot_f2(x, l) ? -amp : amp;
  }
  return v;
}

CosetSpectralData coset_mixture_eigendecomposition(
    const std::vector<uint32_t>& code, int m, uint32_t a, uint32_t k,
    const BellDistribution& pkl) {
  if (m < 1 || m > 4)
    throw budget_exceeded("coset_mixture_eigendecomposition: m must be 1..4");
  const uint32_t dim = 1u << m;

  // Validate that `code` is a subspace.
  std::vector<bool> member(dim, false);
  for (uint32_t c : code) {
    if (c >= dim) throw domain_error("coset code word out of range");
    member[c] = true;
  }
  if (!member[0]) throw domain_error("coset code must contain 0");
  for (uint32_t c1 : code)
    for (uint32_t c2 : code)
      if (!member[c1 ^ c2]) throw domain_error("coset code is not a subspace");

  // Dual code.
  std::vector<uint32_t> dual;
  for (uint32_t d = 0; d < dim; ++d) {
    bool ok = true;
    for (uint32_t c : code)
      if (dot_f2(c, d)) {
        ok = false;
        break;
      }
    if (ok) dual.push_back(d);
  }

  // Coset representatives of F2^m / dual (lexicographically smallest first).
  std::vector<bool> seen(dim, false);
  CosetSpectralData out;
  for (uint32_t j = 0; j < dim; ++j) {
    if (seen[j]) continue;
    for (uint32_t d : dual) seen[j ^ d] = true;
    out.representatives.push_back(j);
  }

  const double pk = product_pk(m, k, pkl);
  if (pk <= 0)
    throw domain_error("coset_mixture_eigendecomposition: P_K^m(k) = 0");

  for (uint32_t j : out.representatives) {
    double weight = 0;
    for (uint32_t d : dual) weight += product_pkl(m, k, j ^ d, pkl);
    double eigenvalue = weight / pk;
    out.eigenvalues.push_back(eigenvalue);
    Vector theta = Vector::Zero(dim);
    if (weight > 0) {
      for (uint32_t d : dual) {
        double amp = std::sqrt(product_pkl(m, k, j ^ d, pkl) / weight);
        theta[j ^ d] = dot_f2(a, d) ? -amp : amp;
      }
    }
    out.eigenvectors.push_back(theta);
  }
  return out;
}

std::pair<BlockFunctions, RateResult> optimize_block_functions(
    const ParameterSlice& channel, Protocol protocol, Direction dir,
    std::vector<double>* rate_table) {
  if (rate_table) rate_table->assign(256, 0.0);
  BlockFunctions best_f = BlockFunctions::from_tables(0, 0);
  RateResult best = rate_twoway(channel, protocol, dir, best_f);
  if (rate_table) (*rate_table)[0] = best.raw;
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      if (a == 0 && b == 0) continue;
      BlockFunctions f = BlockFunctions::from_tables(a, b);
      RateResult r = rate_twoway(channel, protocol, dir, f);
      if (rate_table) (*rate_table)[16 * a + b] = r.raw;
      if (r.raw > best.raw) {
        best = r;
        best_f = f;
      }
    }
  return {best_f, best};
}

}  // namespace qkd
