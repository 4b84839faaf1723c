#include "qal/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <fftw3.h>

#include "qal/errors.hpp"
#include "qal/parallel.hpp"
#include "qal/rng.hpp"

namespace qal::quantum {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr cplx kI{0.0, 1.0};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

/// In-place 1D complex DFT of fixed size with FFTW_ESTIMATE planning.
class Dft {
 public:
  Dft(std::size_t n, int sign)
      : n_(n),
        buf_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)),
             &fftw_free) {
    plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf_.get(), buf_.get(), sign,
                             FFTW_ESTIMATE);
  }
  ~Dft() { fftw_destroy_plan(plan_); }
  Dft(const Dft&) = delete;
  Dft& operator=(const Dft&) = delete;

  cplx* data() { return reinterpret_cast<cplx*>(buf_.get()); }
  void execute() { fftw_execute(plan_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> buf_;
  fftw_plan plan_;
};

/// Signed frequency index of FFT bin i.
long signed_index(std::size_t i, std::size_t n) {
  return i < (n + 1) / 2 ? static_cast<long>(i)
                         : static_cast<long>(i) - static_cast<long>(n);
}

void require_grid(const Grid1D& g) {
  if (!(g.dx > 0.0) || g.count < 2)
    throw InvalidArgument("wave grid needs dx > 0 and at least two nodes");
}

double table_value(const std::vector<double>& xs, const std::vector<double>& vs,
                   double x) {
  if (xs.empty() || xs.size() != vs.size())
    throw InvalidArgument("table potential needs matching, nonempty xs and vs");
  if (x <= xs.front()) return vs.front();
  if (x >= xs.back()) return vs.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return vs[i - 1] + w * (vs[i] - vs[i - 1]);
}

}  // namespace

// ---------------------------------------------------------------------------

Grid1D Grid1D::centered(double half_width, double dx) {
  if (!(half_width > 0.0) || !(dx > 0.0))
    throw InvalidArgument("centered grid needs positive half width and dx");
  const auto count = static_cast<std::size_t>(std::llround(2.0 * half_width / dx));
  return Grid1D{-half_width, dx, count};
}

double WaveState::norm_sq() const {
  double acc = 0.0;
  for (const auto& v : values) acc += std::norm(v);
  return acc * grid.dx;
}

double WaveState::normalize() {
  const double n = std::sqrt(norm_sq());
  if (n > 0.0)
    for (auto& v : values) v /= n;
  return n;
}

void ParticleParams::validate() const {
  if (!(mass > 0.0) || !(alpha > 0.0) || !(eps > 0.0))
    throw InvalidArgument("particle parameters need mass, alpha, eps > 0");
  std::visit(overloaded{
                 [](const NoApodization&) {},
                 [](const GaussianApodization& g) {
                   if (!(g.sigma_y > 0.0))
                     throw InvalidArgument("gaussian apodization needs sigma_y > 0");
                 },
                 [](const WindowApodization& w) {
                   if (!(w.half_width > 0.0))
                     throw InvalidArgument("window apodization needs a positive width");
                 },
             },
             apodization);
}

double ParticleParams::tau() const {
  return std::visit(overloaded{
                        [](const NoApodization&) { return 0.0; },
                        [this](const GaussianApodization& g) { return eps / g.sigma_y; },
                        [this](const WindowApodization& w) {
                          return eps / (w.half_width / std::sqrt(3.0));
                        },
                    },
                    apodization);
}

double ParticleParams::potential_at(double x) const {
  return std::visit(overloaded{
                        [](const FreePotential&) { return 0.0; },
                        [this, x](const HarmonicPotential& h) {
                          return 0.5 * mass * h.omega * h.omega * x * x;
                        },
                        [x](const TablePotential& t) { return table_value(t.xs, t.vs, x); },
                    },
                    potential);
}

double ParticleParams::force_at(double x) const {
  return std::visit(overloaded{
                        [](const FreePotential&) { return 0.0; },
                        [this, x](const HarmonicPotential& h) {
                          return -mass * h.omega * h.omega * x;
                        },
                        [x](const TablePotential& t) {
                          const double h = 1e-6;
                          return -(table_value(t.xs, t.vs, x + h) -
                                   table_value(t.xs, t.vs, x - h)) /
                                 (2.0 * h);
                        },
                    },
                    potential);
}

double ParticleParams::apodization_factor(double p, double x) const {
  const double y = eps * (p * p / (2.0 * mass) + potential_at(x) - e0) / alpha;
  return std::visit(overloaded{
                        [](const NoApodization&) { return 1.0; },
                        [y](const GaussianApodization& g) {
                          return std::exp(-y * y / (4.0 * g.sigma_y * g.sigma_y));
                        },
                        [y](const WindowApodization& w) {
                          return std::abs(y) <= w.half_width ? 1.0 : 0.0;
                        },
                    },
                    apodization);
}

std::vector<double> absorbing_mask(const Grid1D& grid) {
  std::vector<double> mask(grid.count, 1.0);
  const std::size_t pad = std::max<std::size_t>(grid.count / 10, 1);
  for (std::size_t k = 0; k < pad; ++k) {
    // depth 1 at the outermost node, 0 at the inner edge of the pad
    const double depth = static_cast<double>(pad - k) / static_cast<double>(pad);
    const double m = std::pow(std::cos(0.5 * kPi * depth), 0.125);
    mask[k] = m;
    mask[grid.count - 1 - k] = m;
  }
  return mask;
}

// ---------------------------------------------------------------------------

std::vector<cplx> KernelMatrix::apply(std::span<const cplx> in, unsigned workers) const {
  const std::size_t n = grid.count;
  if (in.size() != n) throw DimensionMismatch("state size differs from the kernel grid");
  std::vector<cplx> out(n);
  const auto* x = reinterpret_cast<const double*>(in.data());
  constexpr std::size_t kRows = 64;
  const std::size_t blocks = (n + kRows - 1) / kRows;
  for_each_block(blocks, workers, [&](std::size_t b) {
    const std::size_t end = std::min(n, (b + 1) * kRows);
    for (std::size_t to = b * kRows; to < end; ++to) {
      const auto* row = reinterpret_cast<const double*>(&entries[to * n]);
      double re = 0.0;
      double im = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double ar = row[2 * k];
        const double ai = row[2 * k + 1];
        const double br = x[2 * k];
        const double bi = x[2 * k + 1];
        re += ar * br - ai * bi;
        im += ar * bi + ai * br;
      }
      out[to] = {re, im};
    }
  });
  return out;
}

KernelMatrix build_kernel(const ParticleParams& params, const Grid1D& grid) {
  params.validate();
  require_grid(grid);
  const std::size_t n = grid.count;
  double v_max = 0.0;
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = params.potential_at(grid.node(k));
    v_max = std::max(v_max, std::abs(v[k]));
  }
  if (params.eps * v_max / params.alpha >= kPi) {
    std::ostringstream os;
    os << "eps * max|V| / alpha = " << params.eps * v_max / params.alpha
       << " >= pi; reduce eps or the grid extent";
    throw PhaseWrapGuard(os.str());
  }

  KernelMatrix km;
  km.grid = grid;
  km.entries.assign(n * n, cplx{});
  km.prefactor = std::sqrt(params.mass / (2.0 * kPi * kI * params.eps * params.alpha));
  km.quadrature_weight = grid.dx;
  km.circulant = std::holds_alternative<FreePotential>(params.potential);

  const double dp = 2.0 * kPi * params.alpha / grid.length();
  const bool x_dependent_apod =
      !std::holds_alternative<NoApodization>(params.apodization) && !km.circulant;
  Dft dft(n, FFTW_BACKWARD);

  // column of the translation-invariant part for a source at potential vx;
  // the potential phase itself is applied separately as exp(-i eps V / alpha)
  auto fill_column = [&](double x_src) {
    cplx* buf = dft.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double p = static_cast<double>(signed_index(i, n)) * dp;
      const double phase = -params.eps * (p * p / (2.0 * params.mass) - params.e0) / params.alpha;
      buf[i] = std::polar(params.apodization_factor(p, x_src) / static_cast<double>(n), phase);
    }
    dft.execute();
  };
  auto scatter = [&](std::size_t from) {
    const cplx pot = std::polar(1.0, -params.eps * v[from] / params.alpha);
    const cplx* col = dft.data();
    for (std::size_t to = 0; to < n; ++to) {
      const std::size_t off = (to + n - from) % n;
      km.entries[to * n + from] = col[off] * pot;
    }
  };

  if (x_dependent_apod) {
    for (std::size_t from = 0; from < n; ++from) {
      fill_column(grid.node(from));
      scatter(from);
    }
  } else {
    // A(p, x) is x-independent here: evaluate it with V = 0 when free, or
    // it is identically 1 (no apodization)
    fill_column(km.circulant ? 0.0 : grid.node(0));
    for (std::size_t from = 0; from < n; ++from) scatter(from);
  }
  return km;
}

Propagation propagate(const WaveState& psi0, const KernelMatrix& kernel,
                      std::size_t steps, Boundary boundary, unsigned workers) {
  if (psi0.values.size() != kernel.grid.count)
    throw DimensionMismatch("state size differs from the kernel grid");
  const double norm0 = std::sqrt(psi0.norm_sq());
  if (!(norm0 > 0.0)) throw InvalidArgument("initial state has zero norm");
  std::vector<double> mask;
  if (boundary == Boundary::kAbsorbing) mask = absorbing_mask(kernel.grid);
  std::vector<cplx> cur = psi0.values;
  for (std::size_t s = 0; s < steps; ++s) {
    cur = kernel.apply(cur, workers);
    if (!mask.empty())
      for (std::size_t k = 0; k < cur.size(); ++k) cur[k] *= mask[k];
  }
  Propagation out{WaveState{psi0.grid, std::move(cur)}, 0.0, steps};
  out.norm_factor = out.state.normalize() / norm0;
  return out;
}

Propagation propagate(const WaveState& psi0, const ParticleParams& params,
                      std::size_t steps, Boundary boundary, unsigned workers) {
  return propagate(psi0, build_kernel(params, psi0.grid), steps, boundary, workers);
}

// ---------------------------------------------------------------------------

WaveState reference_solver(const WaveState& psi0, const ParticleParams& params,
                           double total_time, Boundary boundary) {
  params.validate();
  require_grid(psi0.grid);
  const std::size_t n = psi0.grid.count;
  if (n < 7) throw InvalidArgument("reference solver needs at least 7 grid nodes");
  const auto steps = static_cast<std::size_t>(std::llround(total_time / params.eps));
  const double dt = params.eps;
  const double dx2 = psi0.grid.dx * psi0.grid.dx;
  // sixth-order central second derivative
  static constexpr double kStencil[4] = {-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};
  const double kin = -params.alpha * params.alpha / (2.0 * params.mass);
  const cplx half = kI * dt / (2.0 * params.alpha);

  using SpMat = Eigen::SparseMatrix<cplx>;
  std::vector<Eigen::Triplet<cplx>> lhs;
  std::vector<Eigen::Triplet<cplx>> rhs;
  lhs.reserve(7 * n);
  rhs.reserve(7 * n);
  const bool periodic = boundary == Boundary::kPeriodic;
  for (std::size_t k = 0; k < n; ++k) {
    const double vk = params.potential_at(psi0.grid.node(k)) - params.e0;
    for (int off = -3; off <= 3; ++off) {
      long col = static_cast<long>(k) + off;
      if (col < 0 || col >= static_cast<long>(n)) {
        if (!periodic) continue;
        col = (col + static_cast<long>(n)) % static_cast<long>(n);
      }
      double h = kin * kStencil[std::abs(off)] / dx2;
      if (off == 0) h += vk;
      const auto ik = static_cast<int>(k);
      const auto ic = static_cast<int>(col);
      lhs.emplace_back(ik, ic, half * h + (off == 0 ? 1.0 : 0.0));
      rhs.emplace_back(ik, ic, -half * h + (off == 0 ? 1.0 : 0.0));
    }
  }
  SpMat a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  SpMat b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(lhs.begin(), lhs.end());
  b.setFromTriplets(rhs.begin(), rhs.end());
  a.makeCompressed();
  b.makeCompressed();
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw Error("Crank-Nicolson factorization failed");

  std::vector<double> mask;
  if (!periodic) mask = absorbing_mask(psi0.grid);
  Eigen::VectorXcd psi(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) psi(static_cast<Eigen::Index>(k)) = psi0.values[k];
  for (std::size_t s = 0; s < steps; ++s) {
    const Eigen::VectorXcd r = b * psi;
    psi = lu.solve(r);
    if (!mask.empty())
      for (std::size_t k = 0; k < n; ++k) psi(static_cast<Eigen::Index>(k)) *= mask[k];
  }
  WaveState out{psi0.grid, std::vector<cplx>(n)};
  for (std::size_t k = 0; k < n; ++k) out.values[k] = psi(static_cast<Eigen::Index>(k));
  return out;
}

// ---------------------------------------------------------------------------

MomentumState momentum_transform(const WaveState& psi, double alpha) {
  require_grid(psi.grid);
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  const std::size_t n = psi.grid.count;
  if (psi.values.size() != n) throw DimensionMismatch("state size differs from its grid");
  Dft dft(n, FFTW_FORWARD);
  std::copy(psi.values.begin(), psi.values.end(), dft.data());
  dft.execute();
  MomentumState out;
  out.dp = 2.0 * kPi * alpha / psi.grid.length();
  const long q0 = -static_cast<long>(n / 2);
  out.p_min = static_cast<double>(q0) * out.dp;
  out.values.resize(n);
  const double scale = psi.grid.dx / std::sqrt(2.0 * kPi * alpha);
  for (std::size_t t = 0; t < n; ++t) {
    const long q = q0 + static_cast<long>(t);
    const std::size_t i = static_cast<std::size_t>((q + static_cast<long>(n)) % static_cast<long>(n));
    const double p = static_cast<double>(q) * out.dp;
    out.values[t] = dft.data()[i] * std::polar(scale, -p * psi.grid.x_min / alpha);
  }
  return out;
}

WaveState inverse_momentum_transform(const MomentumState& phi, const Grid1D& grid,
                                     double alpha) {
  require_grid(grid);
  const std::size_t n = grid.count;
  if (phi.values.size() != n) throw DimensionMismatch("momentum state size differs from grid");
  Dft dft(n, FFTW_BACKWARD);
  const long q0 = -static_cast<long>(n / 2);
  const double scale = phi.dp / std::sqrt(2.0 * kPi * alpha);
  for (std::size_t t = 0; t < n; ++t) {
    const long q = q0 + static_cast<long>(t);
    const std::size_t i = static_cast<std::size_t>((q + static_cast<long>(n)) % static_cast<long>(n));
    const double p = static_cast<double>(q) * phi.dp;
    dft.data()[i] = phi.values[t] * std::polar(scale, p * grid.x_min / alpha);
  }
  dft.execute();
  WaveState out{grid, std::vector<cplx>(dft.data(), dft.data() + n)};
  return out;
}

namespace {

/// (mean, std) of the density |v_k|^2 on nodes origin + k * step.
std::pair<double, double> moments(std::span<const cplx> v, double origin, double step) {
  double w = 0.0;
  double m1 = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double x = origin + static_cast<double>(k) * step;
    const double p = std::norm(v[k]);
    w += p;
    m1 += p * x;
  }
  const double mean = m1 / w;
  double m2 = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double x = origin + static_cast<double>(k) * step - mean;
    m2 += std::norm(v[k]) * x * x;
  }
  return {mean, std::sqrt(m2 / w)};
}

}  // namespace

UncertaintyReport uncertainty_product(const WaveState& psi, double alpha) {
  const MomentumState phi = momentum_transform(psi, alpha);
  UncertaintyReport rep;
  rep.delta_x = moments(psi.values, psi.grid.x_min, psi.grid.dx).second;
  rep.delta_p = moments(phi.values, phi.p_min, phi.dp).second;
  rep.product = rep.delta_x * rep.delta_p;
  return rep;
}

// ---------------------------------------------------------------------------

WaveState gaussian_packet(const Grid1D& grid, double x0, double sigma, double p0,
                          double alpha) {
  require_grid(grid);
  if (!(sigma > 0.0)) throw InvalidArgument("packet width must be positive");
  WaveState psi{grid, std::vector<cplx>(grid.count)};
  for (std::size_t k = 0; k < grid.count; ++k) {
    const double x = grid.node(k);
    psi.values[k] = std::polar(std::exp(-(x - x0) * (x - x0) / (4.0 * sigma * sigma)),
                               p0 * x / alpha);
  }
  psi.normalize();
  return psi;
}

WaveState coherent_state(const Grid1D& grid, const ParticleParams& params, double x0) {
  const auto* h = std::get_if<HarmonicPotential>(&params.potential);
  if (!h) throw InvalidArgument("coherent state needs a harmonic potential");
  const double sigma = std::sqrt(params.alpha / (2.0 * params.mass * h->omega));
  return gaussian_packet(grid, x0, sigma, 0.0, params.alpha);
}

double mean_position(const WaveState& psi) {
  return moments(psi.values, psi.grid.x_min, psi.grid.dx).first;
}

double position_width(const WaveState& psi) {
  return moments(psi.values, psi.grid.x_min, psi.grid.dx).second;
}

double l2_distance(const WaveState& a, const WaveState& b) {
  if (a.values.size() != b.values.size()) throw DimensionMismatch("states differ in size");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) acc += std::norm(a.values[k] - b.values[k]);
  return std::sqrt(acc * a.grid.dx);
}

double free_gaussian_width(double sigma0, double mass, double alpha, double t) {
  const double r = alpha * t / (2.0 * mass * sigma0 * sigma0);
  return sigma0 * std::sqrt(1.0 + r * r);
}

double fit_order(std::span<const double> eps, std::span<const double> errors) {
  if (eps.size() != errors.size() || eps.size() < 2)
    throw InvalidArgument("order fit needs at least two matching points");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double x = std::log(eps[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceReport convergence_study(const WaveState& psi0, const ParticleParams& params,
                                    double total_time, std::span<const double> ladder,
                                    double ref_dt, unsigned workers) {
  ParticleParams ref_params = params;
  ref_params.eps = ref_dt;
  const WaveState ref = reference_solver(psi0, ref_params, total_time);
  ConvergenceReport rep;
  for (double eps : ladder) {
    ParticleParams p = params;
    p.eps = eps;
    const auto steps = static_cast<std::size_t>(std::llround(total_time / eps));
    const Propagation run = propagate(psi0, p, steps, Boundary::kPeriodic, workers);
    rep.eps.push_back(eps);
    rep.errors.push_back(l2_distance(run.state, ref));
  }
  rep.order = fit_order(rep.eps, rep.errors);
  return rep;
}

ApodizationReport apodization_study(const WaveState& psi0, const ParticleParams& params,
                                    double total_time, std::span<const double> ladder,
                                    unsigned workers) {
  ApodizationReport rep;
  for (double eps : ladder) {
    ParticleParams apod = params;
    apod.eps = eps;
    ParticleParams plain = apod;
    plain.apodization = NoApodization{};
    const auto steps = static_cast<std::size_t>(std::llround(total_time / eps));
    const Propagation a = propagate(psi0, apod, steps, Boundary::kPeriodic, workers);
    const Propagation b = propagate(psi0, plain, steps, Boundary::kPeriodic, workers);
    rep.eps.push_back(eps);
    rep.distances.push_back(l2_distance(a.state, b.state));
    rep.norm_factors.push_back(a.norm_factor);
  }
  // ladder is expected in decreasing eps; distances must decrease along it
  rep.monotone = rep.distances.size() >= 2;
  for (std::size_t i = 1; i < rep.distances.size(); ++i) {
    const bool finer = rep.eps[i] < rep.eps[i - 1];
    if (!finer || !(rep.distances[i] < rep.distances[i - 1])) rep.monotone = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------

ClassicalPathReport classical_path_check(const ParticleParams& params, double x_start,
                                         double x_end, double total_time) {
  params.validate();
  double omega = 0.0;
  if (const auto* h = std::get_if<HarmonicPotential>(&params.potential)) {
    omega = h->omega;
  } else if (!std::holds_alternative<FreePotential>(params.potential)) {
    throw InvalidArgument("classical path check supports free and harmonic potentials");
  }
  const auto steps = static_cast<std::size_t>(std::llround(total_time / params.eps));
  if (steps < 2) throw InvalidArgument("classical path check needs at least two steps");
  const double eps = params.eps;
  const double m = params.mass;

  // x_{n-1} + (eps^2 omega^2 - 2) x_n + x_{n+1} = 0 for n = 1..N-1 (Thomas)
  ClassicalPathReport rep;
  rep.steps = steps;
  rep.x.assign(steps + 1, 0.0);
  rep.x.front() = x_start;
  rep.x.back() = x_end;
  const std::size_t inner = steps - 1;
  const double diag = eps * eps * omega * omega - 2.0;
  std::vector<double> c(inner, 0.0), d(inner, 0.0);
  for (std::size_t i = 0; i < inner; ++i) {
    double rhs = 0.0;
    if (i == 0) rhs -= x_start;
    if (i == inner - 1) rhs -= x_end;
    const double denom = i == 0 ? diag : diag - c[i - 1];
    c[i] = 1.0 / denom;
    d[i] = (rhs - (i == 0 ? 0.0 : d[i - 1])) / denom;
  }
  for (std::size_t i = inner; i-- > 0;) {
    rep.x[i + 1] = d[i] - (i + 1 < inner ? c[i] * rep.x[i + 2] : 0.0);
  }

  rep.p.resize(steps);
  for (std::size_t n = 0; n < steps; ++n) rep.p[n] = m * (rep.x[n + 1] - rep.x[n]) / eps;
  // residuals of the stationarity conditions of the phase-space action
  for (std::size_t n = 0; n < steps; ++n) {
    const double grad_p = (rep.x[n + 1] - rep.x[n]) - eps * rep.p[n] / m;
    rep.momentum_residual = std::max(rep.momentum_residual, std::abs(grad_p * m / eps));
  }
  for (std::size_t n = 1; n < steps; ++n) {
    const double r = (rep.p[n] - rep.p[n - 1]) / eps - params.force_at(rep.x[n]);
    rep.force_residual = std::max(rep.force_residual, std::abs(r));
  }

  const double big_t = static_cast<double>(steps) * eps;
  for (std::size_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * eps;
    double exact;
    if (omega == 0.0) {
      exact = x_start + (x_end - x_start) * t / big_t;
    } else {
      const double b = (x_end - x_start * std::cos(omega * big_t)) / std::sin(omega * big_t);
      exact = x_start * std::cos(omega * t) + b * std::sin(omega * t);
    }
    rep.max_error_vs_analytic = std::max(rep.max_error_vs_analytic, std::abs(rep.x[n] - exact));
  }

  auto action = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
      const double dx = x[n + 1] - x[n];
      s += m * dx * dx / (2.0 * eps) - eps * params.potential_at(x[n]);
    }
    return s;
  };
  auto perturbed = [&](double h) {
    std::vector<double> x = rep.x;
    for (std::size_t n = 1; n < steps; ++n)
      x[n] += h * std::sin(kPi * static_cast<double>(n) / static_cast<double>(steps));
    return action(x);
  };
  const double s0 = action(rep.x);
  const double h = 0.1;
  rep.perturbation_ratio = (perturbed(h) - s0) / (perturbed(h / 2.0) - s0);
  return rep;
}

// ---------------------------------------------------------------------------

RoughnessReport roughness_scan(const ParticleParams& params,
                               const RoughnessOptions& options) {
  params.validate();
  if (!std::holds_alternative<FreePotential>(params.potential) ||
      !std::holds_alternative<NoApodization>(params.apodization))
    throw InvalidArgument("roughness scan is defined for the free, unapodized kernel");
  if (options.steps < 1 || options.samples < 1)
    throw InvalidArgument("roughness scan needs steps >= 1 and samples >= 1");
  const double sd = std::sqrt(params.eps * params.alpha / params.mass);
  const double h = options.grid_spacing;
  auto place = [&](double x) {
    return h > 0.0 ? options.grid_offset + h * std::round((x - options.grid_offset) / h) : x;
  };
  Rng rng(options.seed);
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < options.samples; ++s) {
    double x = place(options.grid_offset);
    for (std::size_t n = 0; n < options.steps; ++n) {
      const double next = place(x + sd * rng.normal());
      const double inc = (next - x) * (next - x);
      sum += inc;
      sum_sq += inc * inc;
      ++count;
      x = next;
    }
  }
  RoughnessReport rep;
  rep.eps = params.eps;
  const double n = static_cast<double>(count);
  rep.mean_sq_increment = sum / n;
  const double var = std::max(sum_sq / n - rep.mean_sq_increment * rep.mean_sq_increment, 0.0);
  rep.stderr_sq_increment = std::sqrt(var / n);
  rep.per_eps = rep.mean_sq_increment / params.eps;
  return rep;
}

RoughnessReport roughness_classical(double velocity, double eps, std::size_t steps) {
  if (!(eps > 0.0) || steps < 1) throw InvalidArgument("need eps > 0 and steps >= 1");
  double sum = 0.0;
  for (std::size_t n = 0; n < steps; ++n) {
    const double a = velocity * static_cast<double>(n) * eps;
    const double b = velocity * static_cast<double>(n + 1) * eps;
    sum += (b - a) * (b - a);
  }
  RoughnessReport rep;
  rep.eps = eps;
  rep.mean_sq_increment = sum / static_cast<double>(steps);
  rep.per_eps = rep.mean_sq_increment / eps;
  return rep;
}

}  // namespace qal::quantum
