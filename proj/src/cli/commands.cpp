#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qal/cli.hpp"
#include "qal/core.hpp"
#include "qal/markov.hpp"
#include "qal/parallel.hpp"
#include "qal/paths.hpp"
#include "qal/quantum.hpp"

#ifndef QAL_VERSION
#define QAL_VERSION "0.0.0"
#endif

namespace qal::cli {

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumerical = 2;

using Row = std::vector<std::string>;

std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::string meta(const std::string& name, const std::string& value) {
  return name + ": " + value;
}

// ---------------------------------------------------------------------------
// Shared builders

BareDistribution make_bare(const ExperimentConfig& c, std::size_t m_default = 0) {
  std::vector<double> p;
  if (c.has("p")) {
    p = c.list("p");
  } else if (m_default >= 2) {
    p.assign(m_default, 1.0 / static_cast<double>(m_default));
  } else {
    throw ConfigError("p", "required; expected a comma-separated list of reals");
  }
  if (m_default && p.size() != m_default)
    throw ConfigError("p", "expected " + std::to_string(m_default) + " values (m), got " +
                               std::to_string(p.size()));
  if (c.has("labels")) {
    if (c.list("labels").size() != p.size())
      throw ConfigError("labels", "expected " + std::to_string(p.size()) + " values, got " +
                                      std::to_string(c.list("labels").size()));
    return BareDistribution(c.list("labels"), p);
  }
  return BareDistribution::with_default_labels(p);
}

std::vector<double> make_gamma(const ExperimentConfig& c, std::size_t m) {
  if (!c.has("gamma")) return std::vector<double>(m, 0.0);
  const auto& g = c.list("gamma");
  if (g.size() != m)
    throw ConfigError("gamma", "expected " + std::to_string(m) + " values, got " +
                                   std::to_string(g.size()));
  return g;
}

QRuleParams make_channel(const ExperimentConfig& c, const BareDistribution& bare) {
  const std::size_t m = bare.size();
  const std::vector<double> gamma = make_gamma(c, m);
  if (c.text("channel") == "symmetric") {
    if (c.has("misread")) throw ConfigError("misread", "not allowed with --channel symmetric");
    return symmetrizing_misreads(bare, gamma);
  }
  SquareMatrix mis(m);
  if (c.has("misread")) {
    const auto& v = c.list("misread");
    if (v.size() != m * m)
      throw ConfigError("misread", "expected " + std::to_string(m * m) +
                                       " values (row-major M*M), got " +
                                       std::to_string(v.size()));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < m; ++l) mis(j, l) = v[j * m + l];
  }
  return QRuleParams(gamma, mis);
}

markov::ScalarMap make_map(const ExperimentConfig& c, const std::string& prefix) {
  const std::string& kind = c.text(prefix);
  const double a = c.real(prefix + "_a");
  const double b = c.real(prefix + "_b");
  if (kind == "identity") return markov::Identity{};
  if (kind == "constant") return markov::Constant{a};
  if (kind == "linear") return markov::Linear{a};
  return markov::Quadratic{a, b};
}

markov::GameSpec make_game(const ExperimentConfig& c) {
  const BareDistribution bare = make_bare(c);
  QRuleParams channel = make_channel(c, bare);
  return markov::GameSpec{make_map(c, "drift"), make_map(c, "gain"), bare, channel};
}

quantum::ParticleParams make_particle(const ExperimentConfig& c) {
  quantum::ParticleParams p;
  p.mass = c.real("mass");
  p.alpha = c.real("alpha");
  p.eps = c.real("eps");
  p.e0 = c.real("e0");
  if (c.text("potential") == "harmonic") p.potential = quantum::HarmonicPotential{c.real("omega")};
  const std::string& apod = c.text("apodization");
  if (apod == "gaussian") p.apodization = quantum::GaussianApodization{c.real("apod_width")};
  if (apod == "window") p.apodization = quantum::WindowApodization{c.real("apod_width")};
  p.validate();
  return p;
}

quantum::Grid1D make_grid(const ExperimentConfig& c) {
  return quantum::Grid1D::centered(c.real("half_width"), c.real("dx"));
}

std::size_t steps_for(double total, double eps, const std::string& key) {
  const double r = total / eps;
  const auto n = static_cast<std::size_t>(std::llround(r));
  if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * r)
    throw ConfigError(key, "time must be a positive integer multiple of eps");
  return n;
}

quantum::Boundary make_boundary(const ExperimentConfig& c) {
  return c.text("boundary") == "absorbing" ? quantum::Boundary::kAbsorbing
                                           : quantum::Boundary::kPeriodic;
}

const char* status_name(paths::SolveStatus s) {
  switch (s) {
    case paths::SolveStatus::kConverged: return "converged";
    case paths::SolveStatus::kNonConvergence: return "nonconvergence";
    case paths::SolveStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

paths::SolverOptions make_solver(const ExperimentConfig& c) {
  paths::SolverOptions o;
  o.max_iter = c.count("max_iter");
  o.tol = c.real("tol");
  o.restarts = c.count("restarts");
  o.seed = c.seed;
  o.association = c.text("association") == "pairwise" ? paths::Association::kPairwise
                                                      : paths::Association::kRadixGroup;
  if (o.restarts < 1) throw ConfigError("restarts", "expected at least 1");
  return o;
}

std::size_t require_m(const ExperimentConfig& c) {
  const std::size_t m = c.count("m");
  if (m < 2) throw ConfigError("m", "expected an integer >= 2");
  return m;
}

std::size_t require_n(const ExperimentConfig& c) {
  const std::size_t n = c.count("n");
  if (n < 1) throw ConfigError("n", "expected an integer >= 1");
  return n;
}

// ---------------------------------------------------------------------------
// Commands; each fills `t` and returns kOk or kNumerical.

int cmd_histogram(const ExperimentConfig& c, CsvTable& t) {
  const BareDistribution bare = make_bare(c);
  const QRuleParams q = make_channel(c, bare);
  const EffectiveDistribution eff = effective_distribution(bare, q);
  const std::size_t m = bare.size();
  const std::size_t draws = c.count("draws");

  std::vector<std::uint64_t> counts(m, 0);
  std::uint64_t lost = 0;
  if (draws > 0) {
    const ReadingSampler sampler(bare, q);
    const std::size_t block = markov::kTrialBlock;
    const std::size_t blocks = (draws + block - 1) / block;
    std::vector<std::vector<std::uint64_t>> partial(blocks, std::vector<std::uint64_t>(m + 1));
    for_each_block(blocks, c.workers, [&](std::size_t b) {
      Rng rng(c.seed, b);
      const std::size_t end = std::min(draws, (b + 1) * block);
      for (std::size_t i = b * block; i < end; ++i) {
        const ReadingOutcome o = sampler(rng);
        ++partial[b][o.lost ? m : o.index];
      }
    });
    for (const auto& p : partial) {
      for (std::size_t j = 0; j < m; ++j) counts[j] += p[j];
      lost += p[m];
    }
  }

  t.metadata.push_back(meta("defect", num(eff.defect)));
  t.metadata.push_back(meta("total", num(eff.total())));
  if (draws > 0)
    t.metadata.push_back(meta("lost_frequency", num(static_cast<double>(lost) / draws)));
  t.header = {"j", "label", "P", "p", "nonclassical"};
  if (draws > 0) t.header.push_back("frequency");
  for (std::size_t j = 0; j < m; ++j) {
    double ct = 0.0;
    for (std::size_t l = 0; l < m; ++l)
      if (l != j) ct += nonclassical_term(bare, q, j, l);
    Row r = {num(j + 1), num(bare.label(j)), num(bare.prob(j)), num(eff.probs[j]), num(ct)};
    if (draws > 0) r.push_back(num(static_cast<double>(counts[j]) / static_cast<double>(draws)));
    t.rows.push_back(std::move(r));
  }
  return kOk;
}

int cmd_census(const ExperimentConfig& c, CsvTable& t) {
  const std::size_t m = require_m(c);
  const std::size_t n = require_n(c);
  const paths::CensusReport rep = paths::census(m, n);
  t.metadata.push_back(meta("raw_total", rep.raw_total.str()));
  t.metadata.push_back(meta("reduced_total", rep.reduced_total.str()));
  t.metadata.push_back(meta("independent_nonclassical", rep.independent_nonclassical.str()));
  t.header = {"l", "raw", "reduced"};
  for (std::size_t l = 0; l <= n; ++l)
    t.rows.push_back({num(l), rep.raw_per_l[l].str(), rep.per_l[l].str()});
  return kOk;
}

int cmd_identity(const ExperimentConfig& c, CsvTable& t) {
  const std::size_t m = require_m(c);
  const std::size_t n = require_n(c);
  const BareDistribution bare = make_bare(c, m);
  const std::vector<double> gamma = make_gamma(c, m);
  const paths::IdentityReport rep = paths::identity_check(bare, gamma, n, make_solver(c));
  t.metadata.push_back(meta("restarts_used", num(rep.solve.restarts_used)));
  t.header = {"m", "n", "xi", "amp_sq", "gap", "bound", "residual", "status"};
  t.rows.push_back({num(m), num(n), num(rep.xi), num(rep.amp_sq), num(rep.gap), num(rep.bound),
                    num(rep.residual), status_name(rep.status)});
  const bool ok = rep.status == paths::SolveStatus::kConverged && rep.gap <= rep.bound;
  return ok ? kOk : kNumerical;
}

int cmd_phase_solve(const ExperimentConfig& c, CsvTable& t) {
  const std::size_t m = require_m(c);
  const std::size_t n = require_n(c);
  const BareDistribution bare = make_bare(c, m);
  const std::vector<double> gamma = make_gamma(c, m);
  const CouplingMatrix d = symmetric_coupling(bare, gamma);
  const paths::ConstraintSystem sys = paths::build_constraints(bare, d, n);
  const paths::SolveReport rep = paths::solve_phases(sys, make_solver(c));
  t.metadata.push_back(meta("status", status_name(rep.status)));
  t.metadata.push_back(meta("max_residual", num(rep.max_residual)));
  t.metadata.push_back(meta("cost", num(rep.cost)));
  t.metadata.push_back(meta("restarts_used", num(rep.restarts_used)));
  t.metadata.push_back(meta("groups", num(sys.groups.size())));
  t.header = {"rank", "path", "phase"};
  if (rep.status != paths::SolveStatus::kInfeasible) {
    for (std::size_t r = 0; r < rep.assignment.phases.size(); ++r) {
      const paths::ClassicalPath path = paths::path_from_rank(r, m, n);
      std::string name;
      for (std::size_t k = 0; k < path.size(); ++k)
        name += (k ? "-" : "") + std::to_string(path[k] + 1);
      t.rows.push_back({num(r), name, num(rep.assignment.phases[r])});
    }
  }
  return rep.status == paths::SolveStatus::kConverged ? kOk : kNumerical;
}

int cmd_simulate(const ExperimentConfig& c, CsvTable& t) {
  const markov::GameSpec spec = make_game(c);
  const std::size_t rounds = c.count("rounds");
  markov::SimulationOptions opt{c.count("trials"), c.seed, c.workers};
  const markov::SimulationResult res = markov::simulate_game(spec, c.real("x0"), rounds, opt);
  const double defect = effective_distribution(spec.noise, spec.channel).defect;
  t.metadata.push_back(meta("trials", num(static_cast<std::size_t>(res.trials))));
  t.metadata.push_back(meta("frozen_rounds", num(static_cast<std::size_t>(res.frozen_rounds))));
  t.metadata.push_back(meta("mean_frozen", num(res.mean_frozen())));
  t.metadata.push_back(meta("frozen_stderr", num(res.frozen_stderr())));
  t.metadata.push_back(meta("expected_frozen", num(static_cast<double>(rounds) * defect)));
  t.header = {"state", "count", "frequency"};
  for (const auto& [x, n] : res.final_counts)
    t.rows.push_back({num(x), num(static_cast<std::size_t>(n)), num(res.frequency(x))});
  return kOk;
}

int cmd_propagate(const ExperimentConfig& c, CsvTable& t) {
  const markov::GameSpec spec = make_game(c);
  const markov::StateGrid grid =
      markov::StateGrid::span(c.real("x_min"), c.real("x_max"), c.real("dx"));
  markov::KernelOptions opt;
  opt.snap_tol_fraction = c.real("snap_tol");
  opt.frozen = c.text("frozen") == "drop" ? markov::FrozenMass::kDrop
                                          : markov::FrozenMass::kDiagonal;
  opt.edges = c.text("edges") == "clamp" ? markov::EdgePolicy::kClamp : markov::EdgePolicy::kError;
  const markov::TransitionKernel kernel = markov::effective_kernel(spec, grid, opt);
  markov::KernelOptions start_opt = opt;
  start_opt.edges = markov::EdgePolicy::kError;
  std::vector<double> e0(grid.count, 0.0);
  e0[markov::snap(grid, c.real("x0"), start_opt)] = 1.0;
  std::vector<double> e = e0;
  const std::size_t rounds = c.count("rounds");
  if (opt.frozen == markov::FrozenMass::kDrop) {
    // sub-stochastic kernel: iterate directly, the total decays as (sum p)^N
    for (std::size_t r = 0; r < rounds; ++r) {
      std::vector<double> next(grid.count, 0.0);
      for (std::size_t to = 0; to < grid.count; ++to)
        for (std::size_t from = 0; from < grid.count; ++from) next[to] += kernel(to, from) * e[from];
      e = std::move(next);
    }
  } else {
    e = markov::propagate_distribution(e0, kernel, rounds);
  }
  double total = 0.0;
  for (double v : e) total += v;
  t.metadata.push_back(meta("total", num(total)));
  t.header = {"x", "probability"};
  for (std::size_t k = 0; k < grid.count; ++k) t.rows.push_back({num(grid.node(k)), num(e[k])});
  return kOk;
}

int cmd_quantum_propagate(const ExperimentConfig& c, CsvTable& t) {
  const quantum::ParticleParams p = make_particle(c);
  const quantum::Grid1D grid = make_grid(c);
  const double total = c.real("time");
  const std::size_t steps = steps_for(total, p.eps, "time");
  const std::size_t snaps = c.count("snapshots");
  if (snaps < 1) throw ConfigError("snapshots", "expected an integer >= 1");
  quantum::WaveState psi =
      quantum::gaussian_packet(grid, c.real("x0"), c.real("sigma0"), c.real("p0"), p.alpha);
  const quantum::KernelMatrix kernel = quantum::build_kernel(p, grid);
  const quantum::Boundary boundary = make_boundary(c);

  t.header = {"t", "x", "re", "im", "prob"};
  auto snapshot = [&](double time) {
    for (std::size_t k = 0; k < grid.count; ++k) {
      const auto v = psi.values[k];
      t.rows.push_back({num(time), num(grid.node(k)), num(v.real()), num(v.imag()),
                        num(std::norm(v))});
    }
  };
  snapshot(0.0);
  double norm_factor = 1.0;
  std::size_t done = 0;
  for (std::size_t s = 1; s <= snaps; ++s) {
    const std::size_t target = (steps * s) / snaps;
    const quantum::Propagation run =
        quantum::propagate(psi, kernel, target - done, boundary, c.workers);
    psi = run.state;
    norm_factor *= run.norm_factor;
    done = target;
    snapshot(static_cast<double>(done) * p.eps);
  }
  t.metadata.push_back(meta("steps", num(steps)));
  t.metadata.push_back(meta("norm_factor", num(norm_factor)));
  t.metadata.push_back(meta("mean_x", num(quantum::mean_position(psi))));
  t.metadata.push_back(meta("width", num(quantum::position_width(psi))));
  if (std::holds_alternative<quantum::FreePotential>(p.potential))
    t.metadata.push_back(meta("free_width",
                              num(quantum::free_gaussian_width(c.real("sigma0"), p.mass,
                                                               p.alpha, total))));
  return kOk;
}

int cmd_quantum_compare(const ExperimentConfig& c, CsvTable& t) {
  const quantum::ParticleParams p = make_particle(c);
  const quantum::Grid1D grid = make_grid(c);
  const double total = c.real("time");
  const auto& ladder = c.list("ladder");
  for (double e : ladder) {
    if (!(e > 0.0)) throw ConfigError("ladder", "time steps must be positive");
    steps_for(total, e, "ladder");
  }
  const quantum::WaveState psi0 =
      std::holds_alternative<quantum::HarmonicPotential>(p.potential)
          ? quantum::coherent_state(grid, p, c.real("x0"))
          : quantum::gaussian_packet(grid, c.real("x0"), c.real("sigma0"), c.real("p0"), p.alpha);
  if (c.text("study") == "convergence") {
    const double ref_dt = c.real("ref_dt");
    steps_for(total, ref_dt, "ref_dt");
    const quantum::ConvergenceReport rep =
        quantum::convergence_study(psi0, p, total, ladder, ref_dt, c.workers);
    t.metadata.push_back(meta("order", num(rep.order)));
    t.header = {"eps", "l2_error"};
    for (std::size_t i = 0; i < rep.eps.size(); ++i)
      t.rows.push_back({num(rep.eps[i]), num(rep.errors[i])});
  } else {
    if (std::holds_alternative<quantum::NoApodization>(p.apodization))
      throw ConfigError("apodization", "the apodization study needs gaussian or window");
    const quantum::ApodizationReport rep =
        quantum::apodization_study(psi0, p, total, ladder, c.workers);
    t.metadata.push_back(meta("monotone", rep.monotone ? "true" : "false"));
    t.header = {"eps", "distance", "norm_factor"};
    for (std::size_t i = 0; i < rep.eps.size(); ++i)
      t.rows.push_back({num(rep.eps[i]), num(rep.distances[i]), num(rep.norm_factors[i])});
  }
  return kOk;
}

quantum::WaveState random_state(const quantum::Grid1D& grid, double alpha, std::uint64_t seed,
                                std::size_t index) {
  Rng rng(seed, index);
  const std::size_t parts = 1 + static_cast<std::size_t>(rng.next() % 3);
  const double span = 0.25 * grid.length();
  quantum::WaveState psi{grid, std::vector<quantum::cplx>(grid.count)};
  for (std::size_t k = 0; k < parts; ++k) {
    const double x0 = span * (2.0 * rng.uniform() - 1.0);
    const double sigma = 0.3 + 1.7 * rng.uniform();
    const double p0 = 3.0 * (2.0 * rng.uniform() - 1.0);
    const quantum::cplx w{rng.normal(), rng.normal()};
    const auto g = quantum::gaussian_packet(grid, x0, sigma, p0, alpha);
    for (std::size_t i = 0; i < grid.count; ++i) psi.values[i] += w * g.values[i];
  }
  psi.normalize();
  return psi;
}

int cmd_uncertainty(const ExperimentConfig& c, CsvTable& t) {
  const double alpha = c.real("alpha");
  if (!(alpha > 0.0)) throw ConfigError("alpha", "expected a positive real");
  const quantum::Grid1D grid = make_grid(c);
  const std::size_t states = c.count("states");
  if (states < 1) throw ConfigError("states", "expected an integer >= 1");
  const bool gaussian = c.text("kind") == "gaussian";
  const double floor = alpha / 2.0;
  double min_product = INFINITY;
  t.header = {"index", "delta_x", "delta_p", "product", "floor"};
  for (std::size_t i = 0; i < states; ++i) {
    const quantum::WaveState psi =
        gaussian ? quantum::gaussian_packet(grid, c.real("x0"), c.real("sigma0"), c.real("p0"),
                                            alpha)
                 : random_state(grid, alpha, c.seed, i);
    const quantum::UncertaintyReport rep = quantum::uncertainty_product(psi, alpha);
    min_product = std::min(min_product, rep.product);
    t.rows.push_back({num(i), num(rep.delta_x), num(rep.delta_p), num(rep.product), num(floor)});
  }
  t.metadata.push_back(meta("min_product", num(min_product)));
  return min_product >= floor - 1e-6 ? kOk : kNumerical;
}

int cmd_roughness(const ExperimentConfig& c, CsvTable& t) {
  quantum::ParticleParams p;
  p.mass = c.real("mass");
  p.alpha = c.real("alpha");
  quantum::RoughnessOptions opt;
  opt.steps = c.count("steps");
  opt.samples = c.count("samples");
  opt.grid_spacing = c.real("grid_spacing");
  opt.grid_offset = c.real("grid_offset");
  if (opt.grid_spacing < 0.0) throw ConfigError("grid_spacing", "expected a real >= 0");
  const auto& ladder = c.list("ladder");
  t.header = {"eps", "mean_sq_increment", "stderr", "per_eps", "classical_mean_sq"};
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    p.eps = ladder[i];
    if (!(p.eps > 0.0)) throw ConfigError("ladder", "time steps must be positive");
    opt.seed = splitmix64(c.seed + i);
    const quantum::RoughnessReport rep = quantum::roughness_scan(p, opt);
    const quantum::RoughnessReport cl =
        quantum::roughness_classical(c.real("velocity"), p.eps, opt.steps);
    t.rows.push_back({num(rep.eps), num(rep.mean_sq_increment), num(rep.stderr_sq_increment),
                      num(rep.per_eps), num(cl.mean_sq_increment)});
  }
  return kOk;
}

int cmd_plot(const ExperimentConfig& c, std::ostream& out) {
  const std::string& k = c.text("kind");
  PlotKind kind = PlotKind::kAuto;
  if (k == "histogram") kind = PlotKind::kHistogram;
  if (k == "convergence") kind = PlotKind::kConvergence;
  if (k == "wavepacket") kind = PlotKind::kWavepacket;
  emit_plot_script(c.text("csv"), c.text("script"), kind);
  out << c.text("script") << '\n';
  return kOk;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

int dispatch(const ExperimentConfig& c, CsvTable& t) {
  const std::string& cmd = c.command;
  if (cmd == "histogram") return cmd_histogram(c, t);
  if (cmd == "census") return cmd_census(c, t);
  if (cmd == "identity-check") return cmd_identity(c, t);
  if (cmd == "phase-solve") return cmd_phase_solve(c, t);
  if (cmd == "simulate-game") return cmd_simulate(c, t);
  if (cmd == "propagate-game") return cmd_propagate(c, t);
  if (cmd == "quantum-propagate") return cmd_quantum_propagate(c, t);
  if (cmd == "quantum-compare") return cmd_quantum_compare(c, t);
  if (cmd == "uncertainty") return cmd_uncertainty(c, t);
  if (cmd == "roughness") return cmd_roughness(c, t);
  throw InvalidArgument("unknown command '" + cmd + "'");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err,
        const char* env_seed) {
  if (args.empty()) {
    err << help_text();
    return kValidation;
  }
  const std::string& cmd = args[0];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    out << help_text();
    return kOk;
  }
  if (cmd == "--version") {
    out << "qal " << QAL_VERSION << '\n';
    return kOk;
  }
  try {
    const auto rest = args.subspan(1);
    for (const auto& a : rest)
      if (a == "--help") {
        out << help_text();
        return kOk;
      }
    const ExperimentConfig cfg = parse_config(cmd, rest, env_seed);
    if (cmd == "plot-script") return cmd_plot(cfg, out);

    CsvTable table;
    table.metadata.push_back("qal " + std::string(QAL_VERSION) + " " + cmd);
    for (const auto& spec : command_keys(cmd)) {
      if (!spec.echo || !cfg.has(spec.name)) continue;
      const Entry& e = cfg.entries.at(spec.name);
      table.metadata.push_back("config " + spec.name + "=" + e.text + " (" +
                               source_name(e.source) + ")");
    }
    const int code = dispatch(cfg, table);
    const std::string run_line = "timestamp=" + timestamp() + " workers=" +
                                 std::to_string(cfg.workers);
    if (cfg.out == "-") {
      write_csv(out, table, run_line);
    } else {
      std::ofstream f(cfg.out);
      if (!f) throw ConfigError("out", "cannot write '" + cfg.out + "'");
      write_csv(f, table, run_line);
    }
    if (code == kNumerical) err << "qal " << cmd << ": numerical report failed (see output)\n";
    return code;
  } catch (const Error& e) {
    err << "qal " << cmd << ": " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "qal " << cmd << ": " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace qal::cli
