// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 when any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qal/cli.hpp"
#include "qal/core.hpp"
#include "qal/errors.hpp"
#include "qal/markov.hpp"
#include "qal/paths.hpp"
#include "qal/quantum.hpp"
#include "qal/rng.hpp"

namespace {

using namespace qal;
namespace fs = std::filesystem;

struct Verdict {
  bool ok = true;
  std::string detail;
};

QRuleParams to_params(const oracle::Channel& c) {
  const std::size_t m = c.gamma.size();
  SquareMatrix mis(m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t l = 0; l < m; ++l) mis(j, l) = c.misread[j * m + l];
  return QRuleParams(c.gamma, mis);
}

double loss_mass(const std::vector<double>& p, const std::vector<double>& gamma) {
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) s += gamma[j] * p[j];
  return s;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// 1
Verdict defect_identity() {
  Rng rng(101, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 5.0);
    const auto p = oracle::random_probs(rng, m);
    const auto ch = oracle::random_channel(rng, m, trial % 2 == 0);
    const auto eff = effective_distribution(BareDistribution::with_default_labels(p),
                                            to_params(ch));
    double s = 0.0;
    for (double v : eff.probs) s += v;
    worst = std::max(worst, std::abs(s - (1.0 - loss_mass(p, ch.gamma))));
    const auto law = oracle::channel_law(p, ch);
    for (std::size_t j = 0; j < m; ++j)
      worst = std::max(worst, std::abs(law[j] - eff.probs[j]));
  }
  return {worst <= 1e-12, "max deviation " + fmt(worst)};
}

// 2
Verdict channel_equivalence() {
  const std::uint64_t draws = 1'000'000;
  Rng setup(202, 0);
  int passed = 0;
  double worst_ratio = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const std::size_t m = 2 + static_cast<std::size_t>(setup.uniform() * 5.0);
    const auto p = oracle::random_probs(setup, m);
    const auto ch = oracle::random_channel(setup, m, true);
    const BareDistribution bare = BareDistribution::with_default_labels(p);
    const QRuleParams q = to_params(ch);
    const auto eff = effective_distribution(bare, q);
    std::vector<double> expected = eff.probs;
    expected.push_back(eff.defect);
    std::vector<std::uint64_t> observed(m + 1, 0);
    const ReadingSampler sampler(bare, q);
    Rng rng(202, 1 + static_cast<std::uint64_t>(inst));
    for (std::uint64_t d = 0; d < draws; ++d) {
      const ReadingOutcome o = sampler(rng);
      ++observed[o.lost ? m : o.index];
    }
    std::size_t cells = 0;
    for (double e : expected) cells += e > 0.0 ? 1 : 0;
    const double stat = oracle::chi_square(observed, expected, draws);
    const double crit = oracle::chi_square_critical(static_cast<double>(cells - 1), 0.01);
    worst_ratio = std::max(worst_ratio, stat / crit);
    if (stat <= crit) ++passed;
  }
  return {passed == 10, std::to_string(passed) + "/10 instances below the 0.01 critical value, "
                            "max stat/crit " + fmt(worst_ratio)};
}

// 3
Verdict census_exactness() {
  using oracle::BigInt;
  bool ok = true;
  std::size_t checked = 0;
  for (std::size_t m = 2; m <= 6; ++m)
    for (std::size_t n = 1; n <= 8; ++n) {
      const auto c = paths::census(m, n);
      const BigInt mm = m;
      const BigInt cross = mm * mm - mm;
      BigInt raw_sum = 0, reduced_sum = 0;
      for (std::size_t l = 0; l <= n; ++l) {
        const BigInt raw =
            oracle::binomial(n, l) * oracle::power(mm, n - l) * oracle::power(cross, l);
        const BigInt red =
            oracle::binomial(n, l) * oracle::power(mm, n - l) * oracle::power(cross / 2, l);
        ok = ok && c.raw_per_l.at(l) == raw && c.per_l.at(l) == red;
        raw_sum += raw;
        reduced_sum += red;
      }
      ok = ok && c.raw_total == oracle::power(mm, 2 * n) && raw_sum == c.raw_total;
      ok = ok && c.reduced_total == oracle::power((mm * mm + mm) / 2, n) &&
           reduced_sum == c.reduced_total;
      ok = ok && c.independent_nonclassical == c.reduced_total - oracle::power(mm, n);
      if (oracle::power(mm, 2 * n) <= 1'000'000) {
        const auto e = oracle::enumerate_census(m, n);
        for (std::size_t l = 0; l <= n; ++l)
          ok = ok && e.raw_per_l[l] == c.raw_per_l[l] && e.reduced_per_l[l] == c.per_l[l];
      }
      ++checked;
    }
  const bool spot = paths::census(2, 2).reduced_total == 9;
  return {ok && spot, std::to_string(checked) + " (M,N) pairs; M=2 N=2 reduced total " +
                          paths::census(2, 2).reduced_total.str()};
}

// 4
Verdict enumeration_oracle() {
  Rng rng(404, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 2.0);
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 5.0);
    const auto p = oracle::random_probs(rng, m);
    std::vector<double> gamma(m);
    for (auto& g : gamma) g = 0.3 * rng.uniform();
    const BareDistribution bare = BareDistribution::with_default_labels(p);
    const CouplingMatrix d = symmetric_coupling(bare, gamma);
    const double xi = paths::xi_sum(bare, d, n);
    const double closed = std::pow(1.0 - loss_mass(p, gamma), static_cast<double>(n));
    std::vector<double> dv(m * m);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t l = 0; l < m; ++l) dv[j * m + l] = d(j, l);
    const double raw = oracle::raw_expansion(p, dv, n);
    worst = std::max({worst, std::abs(xi - closed), std::abs(xi - raw)});
  }
  return {worst <= 1e-10, "max deviation " + fmt(worst)};
}

// 5
Verdict exact_case() {
  Rng rng(505, 0);
  int feasible = 0, infeasible = 0, bad = 0;
  double worst = 0.0;
  auto one = [&](const std::vector<double>& p, const std::vector<double>& gamma) {
    const BareDistribution bare = BareDistribution::with_default_labels(p);
    const double d = symmetric_coupling(bare, gamma)(0, 1);
    paths::SolverOptions opt;
    opt.seed = 5;
    const auto r = paths::identity_check(bare, gamma, 1, opt);
    if (std::abs(d) <= 1.0) {
      ++feasible;
      worst = std::max(worst, r.gap);
      if (r.gap > 1e-10 || r.status != paths::SolveStatus::kConverged) ++bad;
    } else {
      ++infeasible;
      if (r.status != paths::SolveStatus::kInfeasible || r.feasible) ++bad;
    }
  };
  for (int trial = 0; trial < 200; ++trial) {
    const double p0 = 0.02 + 0.96 * rng.uniform();
    one({p0, 1.0 - p0}, {rng.uniform(), rng.uniform()});
  }
  one({0.5, 0.5}, {1.0, 1.0});
  one({0.9, 0.1}, {0.9, 0.9});
  return {bad == 0 && feasible > 0 && infeasible > 0,
          std::to_string(feasible) + " feasible (max gap " + fmt(worst) + "), " +
              std::to_string(infeasible) + " infeasible, " + std::to_string(bad) + " wrong"};
}

// 6
Verdict solver_regime() {
  Rng rng(606, 0);
  double worst_res = 0.0, worst_slack = -1.0;
  int bad = 0, cases = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const double g = 0.05 * (trial % 6) / 5.0;
    const double p0 = 0.1 + 0.8 * rng.uniform();
    const BareDistribution bare = BareDistribution::with_default_labels({p0, 1.0 - p0});
    const std::vector<double> gamma{g, g};
    paths::SolverOptions opt;
    opt.seed = 6 + static_cast<std::uint64_t>(trial);
    const auto r = paths::identity_check(bare, gamma, 2, opt);
    ++cases;
    worst_res = std::max(worst_res, r.residual);
    worst_slack = std::max(worst_slack, r.gap - r.bound);
    if (r.residual > 1e-6 || r.gap > r.bound) ++bad;
  }
  return {bad == 0, std::to_string(cases) + " instances, max residual " + fmt(worst_res) +
                        ", max gap-bound " + fmt(worst_slack)};
}

// 7
Verdict markov_agreement() {
  using namespace qal::markov;
  const std::size_t rounds = 10;
  const std::uint64_t trials = 100'000;
  const GameSpec spec{Identity{}, Constant{1.0}, BareDistribution({-1, 1}, {0.5, 0.5}),
                      QRuleParams::losses_only({0.2, 0.2})};
  const StateGrid grid = StateGrid::span(-double(rounds), double(rounds), 1.0);
  KernelOptions opt;
  // edge images only arise from mass that reaches the edge in the last round
  opt.edges = EdgePolicy::kClamp;
  const TransitionKernel k = effective_kernel(spec, grid, opt);
  std::vector<double> e0(grid.count, 0.0);
  e0[rounds] = 1.0;
  const auto dist = propagate_distribution(e0, k, rounds);
  const auto sim = simulate_game(spec, 0.0, rounds, {trials, 77, 1});
  int outside = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.count; ++i) {
    const double p = dist[i];
    const double f = sim.frequency(grid.node(i));
    const double se = std::sqrt(p * (1.0 - p) / double(trials));
    const double z = se > 0.0 ? std::abs(f - p) / se : (f == p ? 0.0 : INFINITY);
    worst = std::max(worst, z);
    if (z > 3.0) ++outside;
  }
  double mass = 0.0;
  for (const auto& [x, n] : sim.final_counts) mass += double(n);
  const double expect_frozen = double(rounds) * 0.2;
  const double zf = std::abs(sim.mean_frozen() - expect_frozen) / sim.frozen_stderr();
  return {outside == 0 && zf <= 3.0 && mass == double(trials),
          "max bin |z| " + fmt(worst) + ", frozen |z| " + fmt(zf)};
}

// 8
Verdict quantum_convergence() {
  using namespace qal::quantum;
  ParticleParams free;
  free.eps = 1e-3;
  const Grid1D wide = Grid1D::centered(20.0, 0.05);
  const auto out = propagate(gaussian_packet(wide, 0.0, 1.0, 0.0, 1.0), free, 1000);
  const double width = position_width(out.state);
  const double width_err = std::abs(width - std::sqrt(1.25));

  ParticleParams osc;
  osc.potential = HarmonicPotential{1.0};
  const Grid1D grid = Grid1D::centered(10.0, 0.05);
  const std::vector<double> ladder{4e-3, 2e-3, 1e-3};
  const auto conv =
      convergence_study(coherent_state(grid, osc, 1.0), osc, 1.0, ladder, 1e-4);
  return {width_err <= 1e-3 && conv.order >= 0.9,
          "width error " + fmt(width_err) + ", order " + fmt(conv.order) + " (errors " +
              fmt(conv.errors[0]) + ", " + fmt(conv.errors[1]) + ", " + fmt(conv.errors[2]) +
              ")"};
}

// 9
Verdict uncertainty_floor() {
  using namespace qal::quantum;
  const Grid1D grid = Grid1D::centered(20.0, 0.05);
  Rng rng(909, 0);
  double min_excess = INFINITY;
  for (int trial = 0; trial < 100; ++trial) {
    const double alpha = 0.5 + rng.uniform();
    WaveState s{grid, std::vector<cplx>(grid.count, 0.0)};
    const int parts = 1 + trial % 4;
    for (int c = 0; c < parts; ++c) {
      const auto g = gaussian_packet(grid, 8.0 * rng.uniform() - 4.0, 0.5 + 1.5 * rng.uniform(),
                                     4.0 * rng.uniform() - 2.0, alpha);
      const cplx w{rng.uniform() - 0.5, rng.uniform() - 0.5};
      for (std::size_t k = 0; k < grid.count; ++k) s.values[k] += w * g.values[k];
    }
    min_excess = std::min(min_excess, uncertainty_product(s, alpha).product - alpha / 2.0);
  }
  double gauss_dev = 0.0;
  for (double alpha : {0.5, 1.0, 2.0})
    for (double sigma : {0.7, 1.0, 1.6}) {
      const auto g = gaussian_packet(grid, 0.4, sigma, -0.8, alpha);
      gauss_dev = std::max(gauss_dev, std::abs(uncertainty_product(g, alpha).product - alpha / 2));
    }
  return {min_excess >= -1e-6 && gauss_dev <= 1e-6,
          "min product - alpha/2 " + fmt(min_excess) + ", gaussian deviation " + fmt(gauss_dev)};
}

// 10
Verdict apodization_limit() {
  using namespace qal::quantum;
  ParticleParams params;
  params.potential = HarmonicPotential{1.0};
  params.apodization = GaussianApodization{1.0};
  const Grid1D grid = Grid1D::centered(10.0, 0.05);
  const std::vector<double> ladder{4e-3, 2e-3, 1e-3};
  const auto r = apodization_study(coherent_state(grid, params, 1.0), params, 1.0, ladder);
  return {r.monotone, "distances " + fmt(r.distances[0]) + ", " + fmt(r.distances[1]) + ", " +
                          fmt(r.distances[2])};
}

// 11
std::string strip_run_line(const std::string& text) {
  std::istringstream is(text);
  std::string line, kept;
  while (std::getline(is, line))
    if (line.rfind("# run:", 0) != 0) kept += line + "\n";
  return kept;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Verdict cli_reproducibility() {
  const std::vector<std::vector<std::string>> runs{
      {"histogram", "--p", "0.2,0.3,0.5", "--gamma", "0.1,0,0.2", "--draws", "100000"},
      {"simulate-game", "--p", "0.5,0.5", "--labels", "-1,1", "--gamma", "0.2,0.2",
       "--trials", "20000"},
      {"identity-check", "--m", "2", "--n", "2", "--gamma", "0.05,0.05"},
      {"phase-solve", "--m", "3", "--n", "2", "--gamma", "0.02,0.03,0.01"},
      {"roughness", "--samples", "5000"},
      {"census", "--m", "4", "--n", "6"},
  };
  const char* bin = std::getenv("QAL_CLI_PATH");
  const fs::path dir = fs::temp_directory_path() / "qal_acceptance";
  fs::create_directories(dir);
  auto execute = [&](std::vector<std::string> args, const std::string& tag) {
    const fs::path out = dir / (args[0] + "_" + tag + ".csv");
    args.push_back("--out");
    args.push_back(out.string());
    fs::remove(out);
    int code = 0;
    if (bin != nullptr) {
      std::string cmd = std::string("\"") + bin + "\"";
      for (const auto& a : args) cmd += " \"" + a + "\"";
      cmd += " 2>/dev/null";
      code = std::system(cmd.c_str());
    } else {
      std::ostringstream o, e;
      code = cli::run(args, o, e);
    }
    // exit 2 is a valid numerical report; only the bytes and status must repeat
    if (!fs::exists(out)) return std::string("<no output>");
    return "status " + std::to_string(code) + "\n" + strip_run_line(slurp(out));
  };
  int identical = 0, total = 0;
  for (const auto& base : runs) {
    for (const char* seed : {"3", "12345"}) {
      auto args = base;
      args.push_back("--seed");
      args.push_back(seed);
      const std::string ref = execute(args, "w1");
      bool same = ref != "<no output>";
      for (const char* w : {"2", "4", "7"}) {
        auto with = args;
        with.push_back("--workers");
        with.push_back(w);
        same = same && execute(with, std::string("w") + w) == ref;
      }
      same = same && execute(args, "again") == ref;
      ++total;
      identical += same ? 1 : 0;
    }
  }
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " configurations byte-identical across workers 1,2,4,7" +
                                  (bin ? "" : " (in-process)")};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Verdict()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "defect identity", 1.0, defect_identity},
      {2, "generative channel equivalence", 30.0, channel_equivalence},
      {3, "census exactness", 1.0, census_exactness},
      {4, "enumeration oracle", 10.0, enumeration_oracle},
      {5, "central identity, exact case", 1.0, exact_case},
      {6, "central identity, solver regime", 10.0, solver_regime},
      {7, "markov agreement", 30.0, markov_agreement},
      {8, "quantum convergence", 120.0, quantum_convergence},
      {9, "uncertainty floor", 10.0, uncertainty_floor},
      {10, "apodization limit", 120.0, apodization_limit},
      {11, "reproducibility", 10.0, cli_reproducibility},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = v.ok && in_time;
    failures += pass ? 0 : 1;
    std::printf("criterion %2d %s: %s  %s  [%.2f s, limit %.0f s%s]\n", c.id, c.name,
                pass ? "PASS" : "FAIL", v.detail.c_str(), secs, c.limit_seconds,
                in_time ? "" : ", exceeded");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
