#pragma once

// One-dimensional noisy mechanical model in amplitude form.
//
// The one-step propagator is the phase-space kernel
//   K(x', x) = sum_p (dp / 2 pi alpha) exp(i p (x' - x) / alpha)
//              * exp(-i eps (p^2/2m + V(x) - E0) / alpha) * A(p, x)
// evaluated on the discrete momentum grid dual to the position grid. Its
// continuum limit is the Fresnel kernel sqrt(m / (2 pi i eps alpha))
// exp(i m (x'-x)^2 / (2 eps alpha) - i eps V(x) / alpha); on a periodic grid
// the free kernel is exactly unitary. A(p, x) = sqrt(P(y) / P(0)) with
// y = eps (H - E0) / alpha is the optional apodization by the bare law.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace qal::quantum {

using cplx = std::complex<double>;

/// Uniform grid x_k = x_min + k dx; periodic length count * dx.
struct Grid1D {
  double x_min = 0.0;
  double dx = 1.0;
  std::size_t count = 0;

  double node(std::size_t k) const { return x_min + static_cast<double>(k) * dx; }
  double length() const { return static_cast<double>(count) * dx; }
  /// Nodes -half_width, ..., half_width - dx.
  static Grid1D centered(double half_width, double dx);
};

struct WaveState {
  Grid1D grid;
  std::vector<cplx> values;

  /// sum |psi_k|^2 dx
  double norm_sq() const;
  /// Scales to unit norm; returns the norm before scaling.
  double normalize();
};

struct FreePotential {};
struct HarmonicPotential {
  double omega = 1.0;  ///< V = m omega^2 x^2 / 2
};
/// Piecewise-linear V through (xs, vs), clamped outside.
struct TablePotential {
  std::vector<double> xs;
  std::vector<double> vs;
};
using Potential = std::variant<FreePotential, HarmonicPotential, TablePotential>;

struct NoApodization {};
/// P(y) proportional to exp(-y^2 / (2 sigma_y^2)).
struct GaussianApodization {
  double sigma_y = 1.0;
};
/// P(y) uniform on |y| <= half_width.
struct WindowApodization {
  double half_width = 1.0;
};
using Apodization = std::variant<NoApodization, GaussianApodization, WindowApodization>;

struct ParticleParams {
  double mass = 1.0;
  double alpha = 1.0;  ///< action scale
  double eps = 1e-3;   ///< time step
  double e0 = 0.0;     ///< energy reference
  Potential potential = FreePotential{};
  Apodization apodization = NoApodization{};

  /// Throws InvalidArgument unless mass, alpha, eps > 0 and the
  /// apodization width is positive.
  void validate() const;
  /// Noise intensity alpha / eps.
  double noise_intensity() const { return alpha / eps; }
  /// eps / sqrt(<y^2>) for the chosen bare law; 0 without apodization.
  double tau() const;
  double potential_at(double x) const;
  double force_at(double x) const;  ///< -dV/dx
  /// sqrt(P(y)/P(0)) for phase-space energy H = p^2/2m + V(x).
  double apodization_factor(double p, double x) const;
};

enum class Boundary {
  kPeriodic,
  kAbsorbing,  ///< smooth mask on the outer 10% of each side after every step
};

/// Mask applied after each step for Boundary::kAbsorbing.
std::vector<double> absorbing_mask(const Grid1D& grid);

struct KernelMatrix {
  Grid1D grid;
  std::vector<cplx> entries;  ///< row-major K(to, from)
  cplx prefactor;             ///< continuum constant sqrt(m / (2 pi i eps alpha))
  double quadrature_weight = 0.0;  ///< dx
  bool circulant = false;  ///< translation-invariant part only (no V, x-free A)

  cplx operator()(std::size_t to, std::size_t from) const {
    return entries[to * grid.count + from];
  }
  /// out = K in. Rows are split across `workers`; each row is summed in a
  /// fixed order, so the result does not depend on the worker count.
  std::vector<cplx> apply(std::span<const cplx> in, unsigned workers = 1) const;
};

/// Throws PhaseWrapGuard when eps * max|V - E0| / alpha >= pi on the grid.
KernelMatrix build_kernel(const ParticleParams& params, const Grid1D& grid);

struct Propagation {
  WaveState state;     ///< renormalized K^N psi0
  double norm_factor;  ///< ||K^N psi0|| / ||psi0|| before renormalization
  std::size_t steps;
};

Propagation propagate(const WaveState& psi0, const KernelMatrix& kernel,
                      std::size_t steps, Boundary boundary = Boundary::kPeriodic,
                      unsigned workers = 1);
Propagation propagate(const WaveState& psi0, const ParticleParams& params,
                      std::size_t steps, Boundary boundary = Boundary::kPeriodic,
                      unsigned workers = 1);

/// Crank-Nicolson integration of
///   i alpha dpsi/dt = -(alpha^2 / 2m) psi'' + (V - E0) psi
/// with a sixth-order central Laplacian; time step params.eps, round(T/eps)
/// steps. Norm preserving for the periodic boundary.
WaveState reference_solver(const WaveState& psi0, const ParticleParams& params,
                           double total_time, Boundary boundary = Boundary::kPeriodic);

/// Momentum-space amplitudes on the ascending DFT-dual grid p_q = q dp,
/// dp = 2 pi alpha / (count dx).
struct MomentumState {
  double p_min = 0.0;
  double dp = 1.0;
  std::vector<cplx> values;

  double node(std::size_t q) const { return p_min + static_cast<double>(q) * dp; }
};

/// phi(p_q) = sum_k psi_k exp(-i p_q x_k / alpha) dx / sqrt(2 pi alpha).
MomentumState momentum_transform(const WaveState& psi, double alpha);
/// psi_k = sum_q phi_q exp(i p_q x_k / alpha) dp / sqrt(2 pi alpha).
WaveState inverse_momentum_transform(const MomentumState& phi, const Grid1D& grid,
                                     double alpha);

struct UncertaintyReport {
  double delta_x = 0.0;
  double delta_p = 0.0;
  double product = 0.0;
};

/// Standard deviations of |psi|^2 and |phi|^2 (normalization applied
/// internally).
UncertaintyReport uncertainty_product(const WaveState& psi, double alpha);

// ---------------------------------------------------------------------------
// Wave packets and diagnostics

/// exp(-(x - x0)^2 / (4 sigma^2) + i p0 x / alpha), normalized.
WaveState gaussian_packet(const Grid1D& grid, double x0, double sigma, double p0,
                          double alpha);
/// Harmonic ground state displaced to x0 (sigma = sqrt(alpha / (2 m omega))).
WaveState coherent_state(const Grid1D& grid, const ParticleParams& params, double x0);

double mean_position(const WaveState& psi);
double position_width(const WaveState& psi);
/// sqrt(sum |a - b|^2 dx)
double l2_distance(const WaveState& a, const WaveState& b);

/// Analytic free-packet width sigma0 sqrt(1 + (alpha t / (2 m sigma0^2))^2).
double free_gaussian_width(double sigma0, double mass, double alpha, double t);

/// Least-squares slope of log(error) against log(eps).
double fit_order(std::span<const double> eps, std::span<const double> errors);

struct ConvergenceReport {
  std::vector<double> eps;
  std::vector<double> errors;  ///< L2(transfer matrix, reference)
  double order = 0.0;
};

/// Propagates psi0 to total_time with the transfer matrix at each eps of the
/// ladder and compares against one reference run with time step ref_dt.
ConvergenceReport convergence_study(const WaveState& psi0, const ParticleParams& params,
                                    double total_time, std::span<const double> ladder,
                                    double ref_dt, unsigned workers = 1);

struct ApodizationReport {
  std::vector<double> eps;
  std::vector<double> distances;  ///< L2(apodized, plain), both renormalized
  std::vector<double> norm_factors;  ///< accumulated damping of the apodized run
  bool monotone = false;
};

/// For each eps: propagate with params.apodization and with none.
ApodizationReport apodization_study(const WaveState& psi0, const ParticleParams& params,
                                    double total_time, std::span<const double> ladder,
                                    unsigned workers = 1);

// ---------------------------------------------------------------------------
// Classical path of the discrete phase-space action

struct ClassicalPathReport {
  std::size_t steps = 0;
  std::vector<double> x;  ///< x_0..x_N
  std::vector<double> p;  ///< p_0..p_{N-1}
  /// max |p_n - m (x_{n+1} - x_n) / eps|
  double momentum_residual = 0.0;
  /// max |(p_n - p_{n-1}) / eps + V'(x_n)|, interior n
  double force_residual = 0.0;
  /// max |x_n - x(t_n)| against the continuous solution with the same ends
  double max_error_vs_analytic = 0.0;
  /// [S(x + h eta) - S(x)] / [S(x + h eta / 2) - S(x)], ~4 at a stationary point
  double perturbation_ratio = 0.0;
};

/// Stationary path with fixed endpoints for free or harmonic potentials.
/// Discrete action A = sum_n [p_n (x_{n+1} - x_n) - eps (p_n^2/2m + V(x_n))];
/// stationarity gives p_n = m (x_{n+1} - x_n) / eps and
/// (p_n - p_{n-1}) / eps = -V'(x_n).
ClassicalPathReport classical_path_check(const ParticleParams& params, double x_start,
                                         double x_end, double total_time);

// ---------------------------------------------------------------------------
// Path roughness

struct RoughnessOptions {
  std::size_t steps = 16;
  std::size_t samples = 100000;  ///< increments drawn = samples * steps
  std::uint64_t seed = 1;
  double grid_spacing = 0.0;  ///< 0 = continuous positions
  double grid_offset = 0.0;   ///< nodes at grid_offset + k * grid_spacing
};

struct RoughnessReport {
  double eps = 0.0;
  double mean_sq_increment = 0.0;  ///< <(x_{n+1} - x_n)^2>
  double stderr_sq_increment = 0.0;
  double per_eps = 0.0;  ///< mean_sq_increment / eps
};

/// Free paths sampled from the Euclidean continuation of the free kernel,
/// weights exp(-m dx^2 / (2 eps alpha)); positions optionally snapped to a
/// grid. The real-time |K|^2 is flat and cannot be sampled.
RoughnessReport roughness_scan(const ParticleParams& params,
                               const RoughnessOptions& options);

/// Same statistic for the deterministic path x(t) = x0 + v t.
RoughnessReport roughness_classical(double velocity, double eps, std::size_t steps);

}  // namespace qal::quantum
