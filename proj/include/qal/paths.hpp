#pragma once

// Path expansion for games driven by an incomplete random variable.
//
// A classical path is a sequence of N outcome indices. Multiplying the
// effective histogram over N rounds branches every classical path into
// terms carrying non-classical (crossing) factors; the module enumerates
// those terms, counts them exactly, builds the amplitude space over
// classical paths and solves for the path phases that make
//   sum over all expanded terms == |sum over amplitudes|^2.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qal/core.hpp"

namespace qal::paths {

using BigInt = boost::multiprecision::cpp_int;

/// Outcome indices (0-based) chosen at rounds 0..N-1.
using ClassicalPath = std::vector<std::size_t>;

/// Number of classical paths M^N; throws SizeGuardExceeded past `guard`.
std::size_t path_count(std::size_t m, std::size_t n, std::size_t guard);

/// Lexicographic rank <-> path (round 0 is the most significant digit).
ClassicalPath path_from_rank(std::size_t rank, std::size_t m, std::size_t n);
std::size_t rank_of(const ClassicalPath& path, std::size_t m);

/// Radix weight prod_n P_{j_n} of a classical path.
double classical_weight(const BareDistribution& bare, const ClassicalPath& path);

// ---------------------------------------------------------------------------
// Census

struct CensusReport {
  std::size_t m = 0;
  std::size_t n = 0;
  BigInt raw_total;                ///< M^(2N)
  std::vector<BigInt> raw_per_l;   ///< C(N,l) M^(N-l) (M^2-M)^l
  std::vector<BigInt> per_l;       ///< C(N,l) M^(N-l) ((M^2-M)/2)^l
  BigInt reduced_total;            ///< ((M^2+M)/2)^N
  BigInt independent_nonclassical; ///< reduced_total - M^N
};

CensusReport census(std::size_t m, std::size_t n);

// ---------------------------------------------------------------------------
// Expansion

struct Crossing {
  std::size_t round = 0;
  std::size_t partner = 0;  ///< l != base[round]; always > base[round]
  friend bool operator==(const Crossing&, const Crossing&) = default;
};

/// One twin-merged term of prod_n (P_{j_n} + sum_{l != j_n} sqrt(P_{j_n} P_l) d).
///
/// Canonical form: at every crossing round the base index is the smaller
/// of the two labels; the term stands for `multiplicity` = 2^L raw terms.
struct ExpandedTerm {
  ClassicalPath base;
  std::vector<Crossing> crossings;
  std::uint64_t multiplicity = 1;
  double value = 0.0;  ///< includes the multiplicity
};

inline constexpr std::size_t kExpansionGuard = 10'000'000;  // M^(2N)
inline constexpr std::size_t kConstraintGuard = 4096;       // M^N

/// All twin-merged terms; SizeGuardExceeded when M^(2N) > kExpansionGuard.
std::vector<ExpandedTerm> expand_paths(const BareDistribution& bare,
                                       const CouplingMatrix& d, std::size_t n);

/// Sum over the expanded terms. Evaluated in fixed-size blocks reduced in
/// block order, so the value does not depend on `workers`.
double xi_sum(const BareDistribution& bare, const CouplingMatrix& d,
              std::size_t n, unsigned workers = 1);

// ---------------------------------------------------------------------------
// Phase constraints

/// cos(phi_i - phi_j) associated with prod over differing rounds of d.
struct PairConstraint {
  std::size_t path_i = 0;  ///< rank of the first classical path (path_i < path_j)
  std::size_t path_j = 0;
  std::vector<std::size_t> diff_rounds;
  double target = 0.0;
  std::size_t group = 0;  ///< index into ConstraintSystem::groups
};

/// Pairs of classical paths sharing one radix sqrt(R_i R_j).
struct RadixGroup {
  std::vector<std::size_t> pairs;  ///< indices into ConstraintSystem::pairs
  std::size_t crossings = 0;       ///< L, number of differing rounds
  double target = 0.0;             ///< prod d over the differing rounds
  double radix = 0.0;              ///< sqrt(R_i R_j), identical for every pair
};

struct ConstraintSystem {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t paths = 0;  ///< M^N
  std::vector<PairConstraint> pairs;
  std::vector<RadixGroup> groups;
  bool feasible = true;  ///< false when some |target| > 1
};

/// One constraint per unordered pair of distinct classical paths, grouped by
/// common radix. SizeGuardExceeded when M^N > kConstraintGuard.
ConstraintSystem build_constraints(const BareDistribution& bare,
                                   const CouplingMatrix& d, std::size_t n);

// ---------------------------------------------------------------------------
// Phase solving

/// Which residuals the least-squares objective uses.
enum class Association {
  /// mean of cos over each radix group minus the group's d-product
  /// (the summed association; makes the two path sums agree exactly).
  kRadixGroup,
  /// cos(phi_i - phi_j) minus target for every pair individually.
  kPairwise,
};

struct SolverOptions {
  std::size_t max_iter = 200;
  double tol = 1e-10;
  std::size_t restarts = 8;
  std::uint64_t seed = 1;
  Association association = Association::kRadixGroup;
};

/// One phase per classical path, indexed by rank; phase[0] == 0 (gauge).
struct PhaseAssignment {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> phases;  ///< each in (-pi, pi]

  double phase_of(const ClassicalPath& path) const {
    return phases[rank_of(path, m)];
  }
};

enum class SolveStatus { kConverged, kNonConvergence, kInfeasible };

struct SolveReport {
  SolveStatus status = SolveStatus::kConverged;
  PhaseAssignment assignment;
  std::vector<double> group_residuals;  ///< mean cos - target, per group
  std::vector<double> pair_residuals;   ///< cos - target, per pair
  double max_residual = 0.0;  ///< max |residual| of the chosen association
  double cost = 0.0;          ///< sum of squared residuals
  std::size_t restarts_used = 0;
  std::size_t iterations = 0;
};

/// Gauge-fixed Levenberg-Marquardt with multi-start. Restart 0 starts from
/// additive phases phi = sum_n s(j_n) with cos(s_a - s_b) fitted to d(a, b)
/// (an exact solution of the grouped association when M = 2); restart r >= 1
/// draws its initial phases from Rng(seed, r). Iteration continues a few steps
/// past tol. Infeasible systems are reported without solving. Deterministic
/// for fixed options.
SolveReport solve_phases(const ConstraintSystem& system,
                         const SolverOptions& options);

/// Residuals of a given assignment (no solving).
SolveReport evaluate_phases(const ConstraintSystem& system,
                            const PhaseAssignment& assignment,
                            Association association);

/// sum over classical paths of sqrt(prod P) * exp(i phi_path).
std::complex<double> amplitude_sum(const BareDistribution& bare,
                                   const PhaseAssignment& phases,
                                   std::size_t n);

// ---------------------------------------------------------------------------

struct IdentityReport {
  double xi = 0.0;       ///< sum over expanded terms
  double amp_sq = 0.0;   ///< |sum over amplitudes|^2
  double gap = 0.0;      ///< |xi - amp_sq|
  double bound = 0.0;    ///< analytic bound on gap from residuals (+ rounding)
  double residual = 0.0; ///< max |residual|
  bool feasible = true;
  SolveStatus status = SolveStatus::kConverged;
  SolveReport solve;
};

/// Coupling -> constraints -> phases -> both sums.
///
/// The gap obeys |xi - amp_sq| = |sum_g 2^L_g R_g r_g| <= sum_g 2^L_g R_g |r_g|,
/// with r_g the radix-group residual; that sum plus a rounding allowance is
/// emitted as `bound`.
IdentityReport identity_check(const BareDistribution& bare,
                              std::span<const double> loss_rates, std::size_t n,
                              const SolverOptions& options);

/// Analytic gap bound for a solved system.
double gap_bound(const ConstraintSystem& system, const SolveReport& report,
                 double xi, double amp_sq);

}  // namespace qal::paths
