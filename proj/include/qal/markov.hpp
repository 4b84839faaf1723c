#pragma once

// Discrete-time games x_{n+1} = F(x_n) + g(x_n) * y_read driven by an
// incomplete random variable: Monte Carlo with frozen rounds, the effective
// Chapman-Kolmogorov kernel on a state grid, and amplitude propagation.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <variant>
#include <vector>

#include "qal/core.hpp"
#include "qal/paths.hpp"

namespace qal::markov {

/// Scalar maps available for drift F and gain g.
struct Identity {};
struct Constant {
  double c = 0.0;
};
struct Linear {
  double a = 1.0;  ///< x -> a x
};
struct Quadratic {
  double a = 0.0;  ///< x -> a x + b x^2
  double b = 0.0;
};
/// Piecewise-linear interpolation through (xs, ys); clamped outside.
struct Table {
  std::vector<double> xs;
  std::vector<double> ys;
};

using ScalarMap = std::variant<Identity, Constant, Linear, Quadratic, Table>;

double evaluate(const ScalarMap& map, double x);

struct GameSpec {
  ScalarMap drift = Identity{};
  ScalarMap gain = Constant{0.0};
  BareDistribution noise;
  QRuleParams channel;

  /// x_{n+1} = F(x) + g(x) * y_j.
  double step(double x, std::size_t label) const {
    return evaluate(drift, x) + evaluate(gain, x) * noise.label(label);
  }
};

/// Uniform grid x_k = x_min + k * dx, k = 0..count-1.
struct StateGrid {
  double x_min = 0.0;
  double dx = 1.0;
  std::size_t count = 0;

  /// Throws InvalidArgument on dx <= 0 or count == 0.
  void validate() const;
  double node(std::size_t k) const { return x_min + static_cast<double>(k) * dx; }
  /// Grid from x_min to x_max inclusive (x_max snapped to the nearest node).
  static StateGrid span(double x_min, double x_max, double dx);
};

/// What to do with lost (frozen) readings in the kernel.
enum class FrozenMass {
  kDiagonal,  ///< state unchanged; columns sum to 1
  kDrop,      ///< sub-stochastic kernel; columns sum to sum_j p_j
};

/// Handling of images that fall outside the grid range.
enum class EdgePolicy {
  kError,  ///< OffGridImage
  kClamp,  ///< snap to the nearest edge node
};

struct KernelOptions {
  /// Maximum |image - node| accepted when snapping; must not exceed dx/2.
  /// The default only absorbs rounding: images have to be grid nodes.
  double snap_tol_fraction = 1e-9;
  FrozenMass frozen = FrozenMass::kDiagonal;
  EdgePolicy edges = EdgePolicy::kError;
};

/// Column-stochastic transition matrix T(k', k) = P(k -> k').
struct TransitionKernel {
  StateGrid grid;
  std::vector<double> matrix;  ///< row-major count x count
  std::vector<double> frozen;  ///< lost-reading mass per column

  std::size_t size() const { return grid.count; }
  double operator()(std::size_t to, std::size_t from) const {
    return matrix[to * grid.count + from];
  }
  double& operator()(std::size_t to, std::size_t from) {
    return matrix[to * grid.count + from];
  }
  double column_sum(std::size_t from) const;
};

/// Index of the node the image snaps to, honouring the options.
std::size_t snap(const StateGrid& grid, double image, const KernelOptions& opt);

TransitionKernel effective_kernel(const GameSpec& spec, const StateGrid& grid,
                                  const KernelOptions& options = {});

/// T^N E0; DimensionMismatch if sizes differ, InvalidArgument unless E0 is a
/// nonnegative vector summing to 1 (1e-10).
std::vector<double> propagate_distribution(std::span<const double> e0,
                                           const TransitionKernel& kernel,
                                           std::size_t steps);

// ---------------------------------------------------------------------------
// Monte Carlo

struct SimulationOptions {
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct SimulationResult {
  std::map<double, std::uint64_t> final_counts;  ///< final state -> trials
  std::uint64_t trials = 0;
  std::uint64_t frozen_rounds = 0;
  double frozen_sq_sum = 0.0;  ///< sum over trials of (frozen rounds)^2

  double frequency(double state) const;
  double mean_frozen() const;
  /// Standard error of mean_frozen().
  double frozen_stderr() const;
};

/// Trials are split into fixed blocks of kTrialBlock; block b draws from
/// Rng(seed, b), so results are identical for any worker count.
inline constexpr std::size_t kTrialBlock = 1024;

SimulationResult simulate_game(const GameSpec& spec, double x0, std::size_t rounds,
                               const SimulationOptions& options);

// ---------------------------------------------------------------------------
// Amplitude form

/// First-order phases: label j contributes phase[j] at every step.
struct LabelPhases {
  std::vector<double> phase;
};

/// Whole-path phases from the paths module: one phase per label sequence.
struct PathPhases {
  paths::PhaseAssignment assignment;
};

using PhaseSource = std::variant<LabelPhases, PathPhases>;

inline constexpr std::size_t kAmplitudeGuard = 10'000'000;

struct AmplitudeResult {
  std::vector<std::complex<double>> psi;
  double total_probability = 0.0;   ///< sum_k |psi_k|^2
  std::vector<double> classical;    ///< T^N |psi0|^2 under the effective law
};

/// psi_N(x) = sum over label paths of prod sqrt(P_j) e^{i phi(path)} psi0(x0).
///
/// LabelPhases are applied step by step (exact, no guard). PathPhases
/// enumerate label sequences from every node with psi0 != 0 and throw
/// SizeGuardExceeded when nonzero_nodes * M^N > kAmplitudeGuard.
AmplitudeResult amplitude_propagate(const GameSpec& spec, const StateGrid& grid,
                                    std::span<const std::complex<double>> psi0,
                                    std::size_t steps, const PhaseSource& phases,
                                    const KernelOptions& options = {});

// ---------------------------------------------------------------------------

/// Probability of each state sequence (x_1..x_N) from a fixed start node.
struct JointTable {
  std::size_t start = 0;
  std::map<std::vector<std::size_t>, double> table;

  double total() const;
  /// Distribution of x_N on the grid.
  std::vector<double> final_marginal(std::size_t grid_count) const;
};

inline constexpr std::size_t kJointGuard = 10'000'000;

/// Brute-force product of per-round laws over all reading sequences.
/// With FrozenMass::kDrop the per-round law is p alone (table sums to
/// (sum p)^N); with kDiagonal a lost round repeats the state.
/// SizeGuardExceeded when count^N > kJointGuard or N > 4.
JointTable joint_path_density(const GameSpec& spec, const StateGrid& grid,
                              std::size_t start, std::size_t rounds,
                              const KernelOptions& options = {});

}  // namespace qal::markov
