#include "qal/paths.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "qal/errors.hpp"
#include "qal/parallel.hpp"
#include "qal/rng.hpp"

namespace qal::paths {

namespace {

/// base^exp, or nullopt-like max() when it exceeds `cap`.
std::size_t checked_pow(std::size_t base, std::size_t exp, std::size_t cap) {
  std::size_t acc = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (acc > cap / base) return std::numeric_limits<std::size_t>::max();
    acc *= base;
  }
  return acc;
}

void require_coupling(const BareDistribution& bare, const CouplingMatrix& d) {
  if (bare.size() != d.size())
    throw DimensionMismatch("coupling matrix size differs from distribution");
  for (std::size_t j = 0; j < d.size(); ++j)
    for (std::size_t l = 0; l < d.size(); ++l)
      if (d(j, l) != d(l, j))
        throw InvalidArgument("coupling matrix must be symmetric");
}

void require_rounds(std::size_t n) {
  if (n < 1) throw InvalidArgument("number of rounds N must be >= 1");
}

/// Per-round choices of the twin-merged expansion: the M classical labels
/// followed by the unordered pairs (a < b).
struct RoundChoice {
  std::size_t a = 0;
  std::size_t b = 0;  // == a for a classical choice
  double factor = 0.0;
};

std::vector<RoundChoice> round_choices(const BareDistribution& bare,
                                       const CouplingMatrix& d) {
  const std::size_t m = bare.size();
  std::vector<RoundChoice> out;
  out.reserve(m * (m + 1) / 2);
  for (std::size_t j = 0; j < m; ++j) out.push_back({j, j, bare.prob(j)});
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      out.push_back(
          {a, b, 2.0 * std::sqrt(bare.prob(a) * bare.prob(b)) * d(a, b)});
  return out;
}

double wrap_phase(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double y = x - two_pi * std::floor((x + std::numbers::pi) / two_pi);
  if (y <= -std::numbers::pi) y += two_pi;
  if (y > std::numbers::pi) y -= two_pi;
  return y;
}

}  // namespace

std::size_t path_count(std::size_t m, std::size_t n, std::size_t guard) {
  const std::size_t count = checked_pow(m, n, guard);
  if (count > guard) {
    std::ostringstream os;
    os << "M^N = " << m << "^" << n << " exceeds the size guard " << guard;
    throw SizeGuardExceeded(os.str());
  }
  return count;
}

ClassicalPath path_from_rank(std::size_t rank, std::size_t m, std::size_t n) {
  ClassicalPath path(n);
  for (std::size_t r = n; r-- > 0;) {
    path[r] = rank % m;
    rank /= m;
  }
  return path;
}

std::size_t rank_of(const ClassicalPath& path, std::size_t m) {
  std::size_t rank = 0;
  for (std::size_t j : path) rank = rank * m + j;
  return rank;
}

double classical_weight(const BareDistribution& bare, const ClassicalPath& path) {
  double w = 1.0;
  for (std::size_t j : path) w *= bare.prob(j);
  return w;
}

// ---------------------------------------------------------------------------

CensusReport census(std::size_t m, std::size_t n) {
  if (m < 2) throw InvalidArgument("census needs M >= 2");
  require_rounds(n);
  CensusReport rep;
  rep.m = m;
  rep.n = n;
  const BigInt bm = m;
  const BigInt cross = bm * bm - bm;
  const BigInt twin = cross / 2;
  BigInt binom = 1;  // C(N, l), updated incrementally
  for (std::size_t l = 0; l <= n; ++l) {
    if (l > 0) binom = binom * (n - l + 1) / l;
    const BigInt classical = boost::multiprecision::pow(bm, static_cast<unsigned>(n - l));
    rep.raw_per_l.push_back(binom * classical *
                            boost::multiprecision::pow(cross, static_cast<unsigned>(l)));
    rep.per_l.push_back(binom * classical *
                        boost::multiprecision::pow(twin, static_cast<unsigned>(l)));
  }
  rep.raw_total = boost::multiprecision::pow(bm, static_cast<unsigned>(2 * n));
  rep.reduced_total =
      boost::multiprecision::pow((bm * bm + bm) / 2, static_cast<unsigned>(n));
  rep.independent_nonclassical =
      rep.reduced_total - boost::multiprecision::pow(bm, static_cast<unsigned>(n));
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

void check_expansion_guard(std::size_t m, std::size_t n) {
  const std::size_t raw = checked_pow(m, 2 * n, kExpansionGuard);
  if (raw > kExpansionGuard) {
    std::ostringstream os;
    os << "M^(2N) for M=" << m << ", N=" << n << " exceeds the size guard "
       << kExpansionGuard;
    throw SizeGuardExceeded(os.str());
  }
}

}  // namespace

std::vector<ExpandedTerm> expand_paths(const BareDistribution& bare,
                                       const CouplingMatrix& d, std::size_t n) {
  require_rounds(n);
  require_coupling(bare, d);
  check_expansion_guard(bare.size(), n);
  const auto choices = round_choices(bare, d);
  const std::size_t c = choices.size();
  const std::size_t total = checked_pow(c, n, kExpansionGuard);

  std::vector<ExpandedTerm> terms;
  terms.reserve(total);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t t = 0; t < total; ++t) {
    ExpandedTerm term;
    term.base.resize(n);
    double value = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      const RoundChoice& ch = choices[digit[r]];
      term.base[r] = ch.a;
      if (ch.b != ch.a) {
        term.crossings.push_back({r, ch.b});
        term.multiplicity *= 2;
      }
      value *= ch.factor;
    }
    term.value = value;
    terms.push_back(std::move(term));
    for (std::size_t r = n; r-- > 0;) {  // odometer, last round fastest
      if (++digit[r] < c) break;
      digit[r] = 0;
    }
  }
  return terms;
}

double xi_sum(const BareDistribution& bare, const CouplingMatrix& d,
              std::size_t n, unsigned workers) {
  require_rounds(n);
  require_coupling(bare, d);
  check_expansion_guard(bare.size(), n);
  const auto choices = round_choices(bare, d);
  const std::size_t c = choices.size();
  const std::size_t total = checked_pow(c, n, kExpansionGuard);
  constexpr std::size_t kBlock = 4096;
  const std::size_t n_blocks = (total + kBlock - 1) / kBlock;
  std::vector<double> partial(n_blocks, 0.0);
  for_each_block(n_blocks, workers, [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(total, begin + kBlock);
    std::vector<std::size_t> digit(n);
    std::size_t rest = begin;
    for (std::size_t r = n; r-- > 0;) {
      digit[r] = rest % c;
      rest /= c;
    }
    double acc = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
      double v = 1.0;
      for (std::size_t r = 0; r < n; ++r) v *= choices[digit[r]].factor;
      acc += v;
      for (std::size_t r = n; r-- > 0;) {
        if (++digit[r] < c) break;
        digit[r] = 0;
      }
    }
    partial[b] = acc;
  });
  // pairwise reduction in fixed order
  while (partial.size() > 1) {
    std::vector<double> next((partial.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i)
      next[i] = partial[2 * i] + (2 * i + 1 < partial.size() ? partial[2 * i + 1] : 0.0);
    partial.swap(next);
  }
  return partial.empty() ? 0.0 : partial[0];
}

// ---------------------------------------------------------------------------

ConstraintSystem build_constraints(const BareDistribution& bare,
                                   const CouplingMatrix& d, std::size_t n) {
  require_rounds(n);
  require_coupling(bare, d);
  const std::size_t m = bare.size();
  const std::size_t k = path_count(m, n, kConstraintGuard);

  ConstraintSystem sys;
  sys.m = m;
  sys.n = n;
  sys.paths = k;
  sys.pairs.reserve(k * (k - 1) / 2);

  std::vector<ClassicalPath> all(k);
  for (std::size_t r = 0; r < k; ++r) all[r] = path_from_rank(r, m, n);

  std::unordered_map<std::uint64_t, std::size_t> group_of_key;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      PairConstraint pc;
      pc.path_i = i;
      pc.path_j = j;
      double target = 1.0;
      double radix = 1.0;
      std::uint64_t key = 0;
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t a = std::min(all[i][r], all[j][r]);
        const std::size_t b = std::max(all[i][r], all[j][r]);
        key = key * (m * m) + a * m + b;
        radix *= std::sqrt(bare.prob(a) * bare.prob(b));
        if (a != b) {
          pc.diff_rounds.push_back(r);
          target *= d(a, b);
        }
      }
      pc.target = target;
      if (std::abs(target) > 1.0) sys.feasible = false;
      auto [it, inserted] = group_of_key.try_emplace(key, sys.groups.size());
      if (inserted) {
        RadixGroup g;
        g.crossings = pc.diff_rounds.size();
        g.target = target;
        g.radix = radix;
        sys.groups.push_back(std::move(g));
      }
      pc.group = it->second;
      sys.groups[pc.group].pairs.push_back(sys.pairs.size());
      sys.pairs.push_back(std::move(pc));
    }
  }
  return sys;
}

// ---------------------------------------------------------------------------

namespace {

/// Residual vector and Jacobian (w.r.t. phases 1..K-1) for one association.
class PhaseProblem {
 public:
  PhaseProblem(const ConstraintSystem& sys, Association assoc)
      : sys_(sys), assoc_(assoc) {}

  Eigen::Index rows() const {
    return static_cast<Eigen::Index>(assoc_ == Association::kRadixGroup
                                         ? sys_.groups.size()
                                         : sys_.pairs.size());
  }
  Eigen::Index cols() const { return static_cast<Eigen::Index>(sys_.paths) - 1; }

  /// phases has K entries, phases[0] == 0.
  void evaluate(const std::vector<double>& phases, Eigen::VectorXd& r,
                Eigen::MatrixXd* jac) const {
    r.setZero(rows());
    if (jac) jac->setZero(rows(), cols());
    if (assoc_ == Association::kPairwise) {
      for (std::size_t c = 0; c < sys_.pairs.size(); ++c) {
        const auto& pc = sys_.pairs[c];
        const double delta = phases[pc.path_i] - phases[pc.path_j];
        r(static_cast<Eigen::Index>(c)) = std::cos(delta) - pc.target;
        if (jac) add_grad(*jac, static_cast<Eigen::Index>(c), pc, -std::sin(delta));
      }
      return;
    }
    for (std::size_t g = 0; g < sys_.groups.size(); ++g) {
      const auto& grp = sys_.groups[g];
      const double w = 1.0 / static_cast<double>(grp.pairs.size());
      double acc = 0.0;
      for (std::size_t idx : grp.pairs) {
        const auto& pc = sys_.pairs[idx];
        const double delta = phases[pc.path_i] - phases[pc.path_j];
        acc += std::cos(delta);
        if (jac) add_grad(*jac, static_cast<Eigen::Index>(g), pc, -w * std::sin(delta));
      }
      r(static_cast<Eigen::Index>(g)) = w * acc - grp.target;
    }
  }

 private:
  // d/dphi_i of cos(phi_i - phi_j) = -sin(delta); d/dphi_j = +sin(delta)
  static void add_grad(Eigen::MatrixXd& jac, Eigen::Index row,
                       const PairConstraint& pc, double d_first) {
    if (pc.path_i > 0) jac(row, static_cast<Eigen::Index>(pc.path_i) - 1) += d_first;
    if (pc.path_j > 0) jac(row, static_cast<Eigen::Index>(pc.path_j) - 1) -= d_first;
  }

  const ConstraintSystem& sys_;
  Association assoc_;
};

struct LmResult {
  std::vector<double> phases;
  double cost = 0.0;
  double max_residual = 0.0;
  std::size_t iterations = 0;
};

constexpr std::size_t kPolishSteps = 5;
constexpr std::uint64_t kLabelStreamBase = 1ULL << 32;

LmResult levenberg_marquardt(const PhaseProblem& prob, std::vector<double> phases,
                             const SolverOptions& opt) {
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  prob.evaluate(phases, r, &jac);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  std::size_t it = 0;
  const Eigen::Index nv = prob.cols();
  std::size_t polish = 0;
  for (; it < opt.max_iter; ++it) {
    if (r.size() == 0) break;
    const double worst = r.cwiseAbs().maxCoeff();
    // a few extra steps below tol take the residual down to rounding level
    if (worst <= 1e-15 || (worst <= opt.tol && ++polish > kPolishSteps)) break;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    if (grad.cwiseAbs().maxCoeff() < 1e-300) break;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      for (Eigen::Index i = 0; i < nv; ++i) a(i, i) += lambda * (1.0 + jtj(i, i));
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      std::vector<double> trial = phases;
      for (Eigen::Index i = 0; i < nv; ++i)
        trial[static_cast<std::size_t>(i) + 1] += step(i);
      Eigen::VectorXd rt;
      prob.evaluate(trial, rt, nullptr);
      const double ct = rt.squaredNorm();
      if (ct < cost) {
        phases = std::move(trial);
        cost = ct;
        lambda = std::max(lambda / 4.0, 1e-15);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
    prob.evaluate(phases, r, &jac);
  }
  LmResult out;
  out.phases = std::move(phases);
  out.cost = cost;
  out.max_residual = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
  out.iterations = it;
  return out;
}

/// Path phases sum_n s(j_n) with label phases fitted to cos(s_a - s_b) = d(a, b),
/// read off the pairs that differ in one round. Exact for M = 2.
std::vector<double> additive_start(const ConstraintSystem& sys, const SolverOptions& opt) {
  const std::size_t m = sys.m;
  ConstraintSystem labels;
  labels.m = m;
  labels.n = 1;
  labels.paths = m;
  std::vector<double> d(m * m, 0.0);
  for (const auto& pc : sys.pairs) {
    if (pc.diff_rounds.size() != 1) continue;
    const std::size_t round = pc.diff_rounds[0];
    const std::size_t a = path_from_rank(pc.path_i, m, sys.n)[round];
    const std::size_t b = path_from_rank(pc.path_j, m, sys.n)[round];
    d[a * m + b] = d[b * m + a] = pc.target;
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      PairConstraint pc;
      pc.path_i = a;
      pc.path_j = b;
      pc.diff_rounds = {0};
      pc.target = d[a * m + b];
      pc.group = labels.groups.size();
      labels.groups.push_back(RadixGroup{{labels.pairs.size()}, 1, pc.target, 0.0});
      labels.pairs.push_back(std::move(pc));
    }
  }
  const PhaseProblem prob(labels, Association::kPairwise);
  LmResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < 4; ++r) {
    Rng rng(opt.seed, kLabelStreamBase + r);
    std::vector<double> init(m, 0.0);
    for (std::size_t a = 1; a < m; ++a) init[a] = std::numbers::pi * (2.0 * rng.uniform() - 1.0);
    LmResult res = levenberg_marquardt(prob, std::move(init), opt);
    if (res.cost < best.cost) best = std::move(res);
    if (best.max_residual <= 1e-15) break;
  }
  std::vector<double> phases(sys.paths, 0.0);
  for (std::size_t rank = 0; rank < sys.paths; ++rank)
    for (std::size_t j : path_from_rank(rank, m, sys.n)) phases[rank] += best.phases[j];
  return phases;
}

}  // namespace

SolveReport evaluate_phases(const ConstraintSystem& system,
                            const PhaseAssignment& assignment,
                            Association association) {
  if (assignment.phases.size() != system.paths)
    throw DimensionMismatch("phase assignment does not cover every classical path");
  SolveReport rep;
  rep.assignment = assignment;
  rep.pair_residuals.resize(system.pairs.size());
  for (std::size_t c = 0; c < system.pairs.size(); ++c) {
    const auto& pc = system.pairs[c];
    rep.pair_residuals[c] =
        std::cos(assignment.phases[pc.path_i] - assignment.phases[pc.path_j]) -
        pc.target;
  }
  rep.group_residuals.resize(system.groups.size());
  for (std::size_t g = 0; g < system.groups.size(); ++g) {
    const auto& grp = system.groups[g];
    double acc = 0.0;
    for (std::size_t idx : grp.pairs) acc += rep.pair_residuals[idx] + system.pairs[idx].target;
    rep.group_residuals[g] = acc / static_cast<double>(grp.pairs.size()) - grp.target;
  }
  const auto& used = association == Association::kRadixGroup ? rep.group_residuals
                                                             : rep.pair_residuals;
  for (double v : used) {
    rep.max_residual = std::max(rep.max_residual, std::abs(v));
    rep.cost += v * v;
  }
  return rep;
}

SolveReport solve_phases(const ConstraintSystem& system,
                         const SolverOptions& options) {
  PhaseAssignment gauge{system.m, system.n, std::vector<double>(system.paths, 0.0)};
  if (!system.feasible) {
    SolveReport rep;
    rep.status = SolveStatus::kInfeasible;
    rep.assignment = std::move(gauge);
    rep.max_residual = std::numeric_limits<double>::infinity();
    return rep;
  }
  if (system.paths < 2) {
    auto rep = evaluate_phases(system, gauge, options.association);
    return rep;
  }

  const PhaseProblem prob(system, options.association);
  LmResult best;
  best.cost = std::numeric_limits<double>::infinity();
  best.max_residual = std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  std::size_t total_iter = 0;
  const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<double> init(system.paths, 0.0);
    if (r == 0) {
      init = additive_start(system, options);
    } else {
      Rng rng(options.seed, r);
      for (std::size_t i = 1; i < init.size(); ++i)
        init[i] = std::numbers::pi * (2.0 * rng.uniform() - 1.0);
    }
    LmResult res = levenberg_marquardt(prob, std::move(init), options);
    ++used;
    total_iter += res.iterations;
    if (res.cost < best.cost) best = std::move(res);
    if (best.max_residual <= options.tol) break;
  }

  PhaseAssignment out{system.m, system.n, std::move(best.phases)};
  for (double& p : out.phases) p = wrap_phase(p);
  out.phases[0] = 0.0;
  SolveReport rep = evaluate_phases(system, out, options.association);
  rep.restarts_used = used;
  rep.iterations = total_iter;
  rep.status = rep.max_residual <= options.tol ? SolveStatus::kConverged
                                               : SolveStatus::kNonConvergence;
  return rep;
}

std::complex<double> amplitude_sum(const BareDistribution& bare,
                                   const PhaseAssignment& phases, std::size_t n) {
  const std::size_t m = bare.size();
  const std::size_t k = path_count(m, n, std::numeric_limits<std::size_t>::max() / 2);
  if (phases.phases.size() != k)
    throw DimensionMismatch("phase assignment does not cover every classical path");
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t r = 0; r < k; ++r) {
    const double amp = std::sqrt(classical_weight(bare, path_from_rank(r, m, n)));
    acc += std::polar(amp, phases.phases[r]);
  }
  return acc;
}

double gap_bound(const ConstraintSystem& system, const SolveReport& report,
                 double xi, double amp_sq) {
  double analytic = 0.0;
  double magnitude = 1.0 + std::abs(xi) + std::abs(amp_sq);
  for (std::size_t g = 0; g < system.groups.size(); ++g) {
    const auto& grp = system.groups[g];
    const double weight = std::ldexp(grp.radix, static_cast<int>(grp.crossings));
    analytic += weight * std::abs(report.group_residuals[g]);
    magnitude += weight * (1.0 + std::abs(grp.target));
  }
  return analytic + 64.0 * DBL_EPSILON * magnitude;
}

IdentityReport identity_check(const BareDistribution& bare,
                              std::span<const double> loss_rates, std::size_t n,
                              const SolverOptions& options) {
  const CouplingMatrix d = symmetric_coupling(bare, loss_rates);
  const ConstraintSystem sys = build_constraints(bare, d, n);
  IdentityReport rep;
  rep.xi = xi_sum(bare, d, n);
  rep.feasible = sys.feasible;
  rep.solve = solve_phases(sys, options);
  rep.status = rep.solve.status;
  if (!sys.feasible) {
    rep.amp_sq = std::numeric_limits<double>::quiet_NaN();
    rep.gap = std::numeric_limits<double>::quiet_NaN();
    rep.bound = std::numeric_limits<double>::quiet_NaN();
    rep.residual = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.amp_sq = std::norm(amplitude_sum(bare, rep.solve.assignment, n));
  rep.gap = std::abs(rep.xi - rep.amp_sq);
  rep.residual = rep.solve.max_residual;
  rep.bound = gap_bound(sys, rep.solve, rep.xi, rep.amp_sq);
  return rep;
}

}  // namespace qal::paths
