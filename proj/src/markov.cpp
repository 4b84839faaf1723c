#include "qal/markov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "qal/errors.hpp"
#include "qal/parallel.hpp"
#include "qal/rng.hpp"

namespace qal::markov {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<double> apply_kernel(const TransitionKernel& t,
                                 std::span<const double> v) {
  const std::size_t n = t.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t to = 0; to < n; ++to) {
    const double* row = &t.matrix[to * n];
    double acc = 0.0;
    for (std::size_t from = 0; from < n; ++from) acc += row[from] * v[from];
    out[to] = acc;
  }
  return out;
}

}  // namespace

double evaluate(const ScalarMap& map, double x) {
  return std::visit(
      overloaded{
          [x](const Identity&) { return x; },
          [](const Constant& c) { return c.c; },
          [x](const Linear& l) { return l.a * x; },
          [x](const Quadratic& q) { return q.a * x + q.b * x * x; },
          [x](const Table& t) {
            if (t.xs.empty() || t.xs.size() != t.ys.size())
              throw InvalidArgument("table map needs matching, nonempty xs and ys");
            if (std::adjacent_find(t.xs.begin(), t.xs.end(), std::greater_equal<>()) !=
                t.xs.end())
              throw InvalidArgument("table map xs must be strictly increasing");
            if (x <= t.xs.front()) return t.ys.front();
            if (x >= t.xs.back()) return t.ys.back();
            const auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - t.xs.begin());
            const double w = (x - t.xs[i - 1]) / (t.xs[i] - t.xs[i - 1]);
            return t.ys[i - 1] + w * (t.ys[i] - t.ys[i - 1]);
          },
      },
      map);
}

void StateGrid::validate() const {
  if (!(dx > 0.0) || count == 0)
    throw InvalidArgument("state grid needs dx > 0 and at least one node");
}

StateGrid StateGrid::span(double x_min, double x_max, double dx) {
  if (!(dx > 0.0) || x_max < x_min)
    throw InvalidArgument("state grid needs dx > 0 and x_max >= x_min");
  const auto count = static_cast<std::size_t>(std::llround((x_max - x_min) / dx)) + 1;
  return StateGrid{x_min, dx, count};
}

double TransitionKernel::column_sum(std::size_t from) const {
  double acc = 0.0;
  for (std::size_t to = 0; to < size(); ++to) acc += (*this)(to, from);
  return acc;
}

std::size_t snap(const StateGrid& grid, double image, const KernelOptions& opt) {
  if (opt.snap_tol_fraction < 0.0 || opt.snap_tol_fraction > 0.5)
    throw InvalidArgument("snap tolerance must lie in [0, dx/2]");
  const double pos = (image - grid.x_min) / grid.dx;
  const double last = static_cast<double>(grid.count - 1);
  const double nearest = std::round(pos);
  if (nearest < 0.0 || nearest > last) {
    if (opt.edges == EdgePolicy::kClamp) return nearest < 0.0 ? 0 : grid.count - 1;
    std::ostringstream os;
    os << "image " << image << " lies outside the grid [" << grid.node(0) << ", "
       << grid.node(grid.count - 1) << "]";
    throw OffGridImage(os.str());
  }
  if (std::abs(pos - nearest) > opt.snap_tol_fraction) {
    std::ostringstream os;
    os << "image " << image << " is " << std::abs(pos - nearest) * grid.dx
       << " away from the nearest node (tolerance "
       << opt.snap_tol_fraction * grid.dx << ")";
    throw OffGridImage(os.str());
  }
  return static_cast<std::size_t>(nearest);
}

TransitionKernel effective_kernel(const GameSpec& spec, const StateGrid& grid,
                                  const KernelOptions& options) {
  grid.validate();
  const EffectiveDistribution eff = effective_distribution(spec.noise, spec.channel);
  const std::size_t n = grid.count;
  TransitionKernel t{grid, std::vector<double>(n * n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t from = 0; from < n; ++from) {
    const double x = grid.node(from);
    for (std::size_t j = 0; j < spec.noise.size(); ++j) {
      if (eff.probs[j] == 0.0) continue;
      t(snap(grid, spec.step(x, j), options), from) += eff.probs[j];
    }
    t.frozen[from] = eff.defect;
    if (options.frozen == FrozenMass::kDiagonal) t(from, from) += eff.defect;
  }
  return t;
}

std::vector<double> propagate_distribution(std::span<const double> e0,
                                           const TransitionKernel& kernel,
                                           std::size_t steps) {
  if (e0.size() != kernel.size())
    throw DimensionMismatch("initial distribution size differs from the kernel grid");
  double total = 0.0;
  for (double v : e0) {
    if (!(v >= 0.0)) throw InvalidArgument("initial distribution must be nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw InvalidArgument("initial distribution must sum to 1");
  std::vector<double> cur(e0.begin(), e0.end());
  for (std::size_t s = 0; s < steps; ++s) cur = apply_kernel(kernel, cur);
  return cur;
}

// ---------------------------------------------------------------------------

double SimulationResult::frequency(double state) const {
  const auto it = final_counts.find(state);
  if (it == final_counts.end() || trials == 0) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(trials);
}

double SimulationResult::mean_frozen() const {
  return trials ? static_cast<double>(frozen_rounds) / static_cast<double>(trials) : 0.0;
}

double SimulationResult::frozen_stderr() const {
  if (trials < 2) return 0.0;
  const double n = static_cast<double>(trials);
  const double mean = mean_frozen();
  const double var = (frozen_sq_sum - n * mean * mean) / (n - 1.0);
  return std::sqrt(std::max(var, 0.0) / n);
}

SimulationResult simulate_game(const GameSpec& spec, double x0, std::size_t rounds,
                               const SimulationOptions& options) {
  if (options.trials < 1) throw InvalidArgument("simulate_game needs trials >= 1");
  const ReadingSampler sampler(spec.noise, spec.channel);
  const std::size_t n_blocks = (options.trials + kTrialBlock - 1) / kTrialBlock;

  struct Partial {
    std::map<double, std::uint64_t> counts;
    std::uint64_t frozen = 0;
    double frozen_sq = 0.0;
  };
  std::vector<Partial> partial(n_blocks);
  for_each_block(n_blocks, options.workers, [&](std::size_t b) {
    Rng rng(options.seed, b);
    Partial& out = partial[b];
    const std::size_t begin = b * kTrialBlock;
    const std::size_t end = std::min(options.trials, begin + kTrialBlock);
    for (std::size_t t = begin; t < end; ++t) {
      double x = x0;
      std::uint64_t frozen = 0;
      for (std::size_t r = 0; r < rounds; ++r) {
        const ReadingOutcome o = sampler(rng);
        if (o.lost) {
          ++frozen;
          continue;
        }
        x = spec.step(x, o.index);
      }
      ++out.counts[x];
      out.frozen += frozen;
      out.frozen_sq += static_cast<double>(frozen * frozen);
    }
  });

  SimulationResult res;
  res.trials = options.trials;
  for (const auto& p : partial) {
    // -0.0 and 0.0 compare equal; store the positive zero
    for (const auto& [state, count] : p.counts)
      res.final_counts[state == 0.0 ? 0.0 : state] += count;
    res.frozen_rounds += p.frozen;
    res.frozen_sq_sum += p.frozen_sq;
  }
  return res;
}

// ---------------------------------------------------------------------------

AmplitudeResult amplitude_propagate(const GameSpec& spec, const StateGrid& grid,
                                    std::span<const std::complex<double>> psi0,
                                    std::size_t steps, const PhaseSource& phases,
                                    const KernelOptions& options) {
  grid.validate();
  const std::size_t n = grid.count;
  if (psi0.size() != n)
    throw DimensionMismatch("initial amplitude size differs from the grid");
  const std::size_t m = spec.noise.size();

  // images[from * m + j] = target node, computed only for nodes that carry
  // amplitude so unreachable nodes may map off the grid
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> images(n * m, kUnset);
  auto image = [&](std::size_t from, std::size_t j) {
    std::size_t& slot = images[from * m + j];
    if (slot == kUnset) slot = snap(grid, spec.step(grid.node(from), j), options);
    return slot;
  };

  AmplitudeResult res;
  if (const auto* lp = std::get_if<LabelPhases>(&phases)) {
    if (lp->phase.size() != m)
      throw DimensionMismatch("label phases must have one entry per outcome");
    std::vector<std::complex<double>> weight(m);
    for (std::size_t j = 0; j < m; ++j)
      weight[j] = std::polar(std::sqrt(spec.noise.prob(j)), lp->phase[j]);
    std::vector<std::complex<double>> cur(psi0.begin(), psi0.end());
    for (std::size_t s = 0; s < steps; ++s) {
      std::vector<std::complex<double>> next(n);
      for (std::size_t from = 0; from < n; ++from) {
        if (cur[from] == std::complex<double>{}) continue;
        for (std::size_t j = 0; j < m; ++j) next[image(from, j)] += weight[j] * cur[from];
      }
      cur.swap(next);
    }
    res.psi = std::move(cur);
  } else {
    const auto& pa = std::get<PathPhases>(phases).assignment;
    if (pa.m != m || pa.n != steps)
      throw DimensionMismatch("path phases must cover label sequences of length N");
    std::size_t nonzero = 0;
    for (const auto& v : psi0) nonzero += v != std::complex<double>{};
    const std::size_t sequences =
        paths::path_count(m, steps, kAmplitudeGuard / std::max<std::size_t>(nonzero, 1));
    res.psi.assign(n, {});
    for (std::size_t start = 0; start < n; ++start) {
      if (psi0[start] == std::complex<double>{}) continue;
      for (std::size_t rank = 0; rank < sequences; ++rank) {
        const auto labels = paths::path_from_rank(rank, m, steps);
        std::size_t node = start;
        double amp = 1.0;
        for (std::size_t j : labels) {
          node = image(node, j);
          amp *= std::sqrt(spec.noise.prob(j));
        }
        res.psi[node] += std::polar(amp, pa.phases[rank]) * psi0[start];
      }
    }
  }
  for (const auto& v : res.psi) res.total_probability += std::norm(v);

  // classical comparison with the same reachable-node images
  const EffectiveDistribution eff = effective_distribution(spec.noise, spec.channel);
  std::vector<double> cls(n);
  for (std::size_t k = 0; k < n; ++k) cls[k] = std::norm(psi0[k]);
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<double> next(n, 0.0);
    for (std::size_t from = 0; from < n; ++from) {
      if (cls[from] == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) next[image(from, j)] += eff.probs[j] * cls[from];
      if (options.frozen == FrozenMass::kDiagonal) next[from] += eff.defect * cls[from];
    }
    cls.swap(next);
  }
  res.classical = std::move(cls);
  return res;
}

// ---------------------------------------------------------------------------

double JointTable::total() const {
  double acc = 0.0;
  for (const auto& [seq, p] : table) acc += p;
  return acc;
}

std::vector<double> JointTable::final_marginal(std::size_t grid_count) const {
  std::vector<double> out(grid_count, 0.0);
  for (const auto& [seq, p] : table) out[seq.empty() ? start : seq.back()] += p;
  return out;
}

JointTable joint_path_density(const GameSpec& spec, const StateGrid& grid,
                              std::size_t start, std::size_t rounds,
                              const KernelOptions& options) {
  grid.validate();
  if (start >= grid.count) throw InvalidArgument("start node outside the grid");
  if (rounds < 1 || rounds > 4)
    throw SizeGuardExceeded("joint path density supports 1 <= N <= 4");
  std::size_t states = 1;
  for (std::size_t r = 0; r < rounds; ++r) {
    if (states > kJointGuard / grid.count)
      throw SizeGuardExceeded("grid^N exceeds the joint-density size guard");
    states *= grid.count;
  }

  const EffectiveDistribution eff = effective_distribution(spec.noise, spec.channel);
  const std::size_t m = spec.noise.size();
  // outcomes per round: labels 0..m-1, plus m = lost (when kept)
  const bool keep_lost = options.frozen == FrozenMass::kDiagonal && eff.defect > 0.0;
  const std::size_t branches = m + (keep_lost ? 1 : 0);

  JointTable out;
  out.start = start;
  std::vector<std::size_t> digit(rounds, 0);
  std::size_t total = 1;
  for (std::size_t r = 0; r < rounds; ++r) total *= branches;
  for (std::size_t t = 0; t < total; ++t) {
    std::vector<std::size_t> seq(rounds);
    std::size_t node = start;
    double prob = 1.0;
    for (std::size_t r = 0; r < rounds; ++r) {
      if (digit[r] == m) {
        prob *= eff.defect;
      } else {
        prob *= eff.probs[digit[r]];
        node = snap(grid, spec.step(grid.node(node), digit[r]), options);
      }
      seq[r] = node;
    }
    if (prob != 0.0) out.table[seq] += prob;
    for (std::size_t r = rounds; r-- > 0;) {
      if (++digit[r] < branches) break;
      digit[r] = 0;
    }
  }
  return out;
}

}  // namespace qal::markov
