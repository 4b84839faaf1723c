#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "qal/errors.hpp"
#include "qal/paths.hpp"

using namespace qal;
using namespace qal::paths;

namespace {

CouplingMatrix coupling2(double d12) {
  CouplingMatrix d{SquareMatrix(2)};
  d.d(0, 1) = d.d(1, 0) = d12;
  return d;
}

std::vector<double> flat(const CouplingMatrix& d) {
  return std::vector<double>(d.d.data().begin(), d.d.data().end());
}

const BareDistribution kHalf({1, 2}, {0.5, 0.5});

}  // namespace

TEST_CASE("path ranks round trip") {
  for (std::size_t r = 0; r < 27; ++r) CHECK(rank_of(path_from_rank(r, 3, 3), 3) == r);
  CHECK(path_from_rank(5, 3, 2) == ClassicalPath{1, 2});
  CHECK_THROWS_AS(path_count(10, 10, 4096), SizeGuardExceeded);
}

TEST_CASE("census examples") {
  const auto c22 = census(2, 2);
  CHECK(c22.raw_total == 16);
  CHECK(c22.per_l == std::vector<BigInt>{4, 4, 1});
  CHECK(c22.raw_per_l == std::vector<BigInt>{4, 8, 4});
  CHECK(c22.reduced_total == 9);
  CHECK(c22.independent_nonclassical == 5);
  const auto c21 = census(2, 1);
  CHECK(c21.raw_total == 4);
  CHECK(c21.reduced_total == 3);
  for (std::size_t m = 2; m <= 10; ++m) CHECK(census(m, 1).reduced_total == m * (m + 1) / 2);
  CHECK_THROWS_AS(census(1, 2), InvalidArgument);
  CHECK_THROWS_AS(census(2, 0), InvalidArgument);
}

TEST_CASE("census closed forms, exact integers, M <= 6, N <= 8") {
  for (std::size_t m = 2; m <= 6; ++m) {
    for (std::size_t n = 1; n <= 8; ++n) {
      const auto c = census(m, n);
      BigInt raw = 0, reduced = 0;
      for (std::size_t l = 0; l <= n; ++l) {
        const BigInt expect_raw = oracle::binomial(n, l) * oracle::power(m, n - l) *
                                  oracle::power(m * m - m, l);
        const BigInt expect_red = oracle::binomial(n, l) * oracle::power(m, n - l) *
                                  oracle::power((m * m - m) / 2, l);
        CHECK(c.raw_per_l[l] == expect_raw);
        CHECK(c.per_l[l] == expect_red);
        raw += c.raw_per_l[l];
        reduced += c.per_l[l];
      }
      CHECK(raw == oracle::power(m, 2 * n));
      CHECK(c.raw_total == raw);
      CHECK(c.reduced_total == oracle::power((m * m + m) / 2, n));
      CHECK(c.reduced_total == reduced);
      CHECK(c.independent_nonclassical == c.reduced_total - oracle::power(m, n));
    }
  }
}

TEST_CASE("census agrees with brute-force term enumeration") {
  for (std::size_t m = 2; m <= 4; ++m) {
    for (std::size_t n = 1; n <= 4 && oracle::power(m, 2 * n) <= 70000; ++n) {
      const auto c = census(m, n);
      const auto e = oracle::enumerate_census(m, n);
      CHECK(c.raw_per_l == e.raw_per_l);
      CHECK(c.per_l == e.reduced_per_l);
    }
  }
  // beyond 64-bit range
  const auto big = census(10, 20);
  CHECK(big.raw_total == oracle::power(10, 40));
  CHECK(big.reduced_total == oracle::power(55, 20));
}

TEST_CASE("expand_paths examples") {
  SUBCASE("classical limit") {
    const BareDistribution b({1, 2, 3}, {0.2, 0.3, 0.5});
    const auto terms = expand_paths(b, CouplingMatrix{SquareMatrix(3)}, 2);
    std::size_t nonzero = 0;
    for (const auto& t : terms) {
      if (t.value != 0.0) {
        ++nonzero;
        CHECK(t.crossings.empty());
        CHECK(std::abs(t.value - classical_weight(b, t.base)) < 1e-16);
      }
    }
    CHECK(nonzero == 9);
    CHECK(terms.size() == 36);  // ((M^2 + M) / 2)^N
  }
  SUBCASE("M = 2, N = 1 by hand") {
    const auto terms = expand_paths(kHalf, coupling2(-0.2), 1);
    REQUIRE(terms.size() == 3);
    std::vector<double> values;
    double sum = 0.0;
    for (const auto& t : terms) {
      values.push_back(t.value);
      sum += t.value;
    }
    std::sort(values.begin(), values.end());
    CHECK(std::abs(values[0] + 0.2) < 1e-15);
    CHECK(values[1] == 0.5);
    CHECK(values[2] == 0.5);
    CHECK(std::abs(sum - 0.8) < 1e-15);
  }
  SUBCASE("canonical twin form") {
    const BareDistribution b({1, 2, 3}, {0.2, 0.3, 0.5});
    const auto d = symmetric_coupling(b, std::vector<double>{0.1, 0.2, 0.3});
    for (const auto& t : expand_paths(b, d, 3)) {
      CHECK(t.multiplicity == (1u << t.crossings.size()));
      for (const auto& c : t.crossings) CHECK(c.partner > t.base[c.round]);
    }
  }
  SUBCASE("size guard") {
    const BareDistribution b = BareDistribution::with_default_labels(std::vector<double>(6, 1.0 / 6));
    CHECK_THROWS_AS(expand_paths(b, CouplingMatrix{SquareMatrix(6)}, 5), SizeGuardExceeded);
  }
}

TEST_CASE("xi_sum examples") {
  CHECK(std::abs(xi_sum(kHalf, symmetric_coupling(kHalf, std::vector<double>{0.2, 0.2}), 3) -
                 0.512) < 1e-14);
  const BareDistribution b({1, 2, 3}, {0.5, 0.3, 0.2});
  CHECK(std::abs(xi_sum(b, CouplingMatrix{SquareMatrix(3)}, 4) - 1.0) < 1e-14);
  const auto d = symmetric_coupling(b, std::vector<double>{0.1, 0.1, 0.1});
  CHECK(std::abs(xi_sum(b, d, 2) - 0.81) < 1e-14);
  CHECK(std::abs(oracle::raw_expansion(b.probs(), flat(d), 2) - 0.81) < 1e-14);
}

TEST_CASE("xi_sum against raw enumeration and the normalization identity") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 2 + rng.next() % 2;
    const std::size_t n = 1 + rng.next() % (m == 2 ? 5 : 4);
    const auto p = oracle::random_probs(rng, m);
    std::vector<double> gamma(m);
    double loss = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      gamma[j] = rng.uniform();
      loss += gamma[j] * p[j];
    }
    const BareDistribution bare = BareDistribution::with_default_labels(p);
    const auto d = symmetric_coupling(bare, gamma);
    const double xi = xi_sum(bare, d, n);
    CHECK(std::abs(xi - oracle::raw_expansion(p, flat(d), n)) < 1e-12);
    CHECK(std::abs(xi - std::pow(1.0 - loss, static_cast<double>(n))) < 1e-10);
  }
}

TEST_CASE("xi_sum is independent of the worker count") {
  const BareDistribution b({1, 2, 3, 4}, {0.1, 0.2, 0.3, 0.4});
  const auto d = symmetric_coupling(b, std::vector<double>{0.3, 0.1, 0.2, 0.05});
  const double one = xi_sum(b, d, 5, 1);
  CHECK(xi_sum(b, d, 5, 3) == one);
  CHECK(xi_sum(b, d, 5, 8) == one);
}

TEST_CASE("build_constraints examples") {
  SUBCASE("M = 2, N = 1") {
    const auto sys = build_constraints(kHalf, coupling2(-0.2), 1);
    REQUIRE(sys.pairs.size() == 1);
    CHECK(sys.pairs[0].target == -0.2);
    CHECK(sys.feasible);
  }
  SUBCASE("M = 2, N = 2") {
    const auto sys = build_constraints(kHalf, coupling2(-0.3), 2);
    CHECK(sys.pairs.size() == 6);
    std::size_t both = 0;
    for (const auto& pc : sys.pairs) {
      if (pc.diff_rounds.size() == 2) {
        ++both;
        CHECK(std::abs(pc.target - 0.09) < 1e-16);
      } else {
        CHECK(pc.target == -0.3);
      }
    }
    CHECK(both == 2);
    // groups: per differing-round label sets; pairs in a group share a radix
    for (const auto& g : sys.groups) CHECK(g.pairs.size() == (1u << (g.crossings - 1)));
  }
  SUBCASE("targets stay in [-1, 1] when |d| <= 1") {
    const BareDistribution b({1, 2, 3}, {0.2, 0.3, 0.5});
    const auto sys = build_constraints(b, symmetric_coupling(b, std::vector<double>{1, 1, 1}), 3);
    for (const auto& pc : sys.pairs) CHECK(std::abs(pc.target) <= 1.0);
  }
  SUBCASE("infeasible flag") {
    const auto sys = build_constraints(kHalf, coupling2(-1.5), 1);
    CHECK_FALSE(sys.feasible);
  }
  SUBCASE("size guard") {
    const BareDistribution b = BareDistribution::with_default_labels(std::vector<double>(4, 0.25));
    CHECK_THROWS_AS(build_constraints(b, CouplingMatrix{SquareMatrix(4)}, 7), SizeGuardExceeded);
  }
}

TEST_CASE("solve_phases examples") {
  SUBCASE("scalar arccos") {
    const auto rep = solve_phases(build_constraints(kHalf, coupling2(-0.2), 1), {});
    REQUIRE(rep.status == SolveStatus::kConverged);
    CHECK(rep.assignment.phases[0] == 0.0);
    CHECK(std::abs(std::abs(rep.assignment.phases[1]) - std::acos(-0.2)) < 1e-10);
    CHECK(rep.max_residual <= 1e-12);
  }
  SUBCASE("zero targets, two paths") {
    const auto rep = solve_phases(build_constraints(kHalf, coupling2(0.0), 1), {});
    REQUIRE(rep.status == SolveStatus::kConverged);
    CHECK(std::abs(std::abs(rep.assignment.phases[1]) - std::numbers::pi / 2) < 1e-10);
    CHECK(rep.max_residual <= 1e-12);
  }
  SUBCASE("M = 2, N = 2 with |d| = 0.05") {
    const auto rep = solve_phases(build_constraints(kHalf, coupling2(-0.05), 2), {});
    CHECK(rep.status == SolveStatus::kConverged);
    CHECK(rep.max_residual <= 1e-6);
  }
  SUBCASE("infeasible is reported, not solved") {
    const auto rep = solve_phases(build_constraints(kHalf, coupling2(-1.2), 1), {});
    CHECK(rep.status == SolveStatus::kInfeasible);
    CHECK(rep.iterations == 0);
  }
  SUBCASE("pairwise association is overdetermined beyond two paths") {
    SolverOptions o;
    o.association = Association::kPairwise;
    const auto rep = solve_phases(build_constraints(kHalf, coupling2(-0.3), 2), o);
    CHECK(rep.status == SolveStatus::kNonConvergence);
    CHECK(rep.max_residual > 1e-3);
    CHECK(rep.pair_residuals.size() == 6);
  }
}

TEST_CASE("solver determinism") {
  const BareDistribution b({1, 2, 3}, {0.2, 0.3, 0.5});
  const auto sys = build_constraints(b, symmetric_coupling(b, std::vector<double>{0.1, 0.1, 0.1}), 2);
  SolverOptions o;
  o.seed = 99;
  const auto a = solve_phases(sys, o);
  const auto c = solve_phases(sys, o);
  REQUIRE(a.assignment.phases.size() == c.assignment.phases.size());
  for (std::size_t i = 0; i < a.assignment.phases.size(); ++i)
    CHECK(std::bit_cast<std::uint64_t>(a.assignment.phases[i]) ==
          std::bit_cast<std::uint64_t>(c.assignment.phases[i]));
  CHECK(a.max_residual == c.max_residual);
}

TEST_CASE("amplitude_sum examples") {
  PhaseAssignment zero{2, 1, {0.0, 0.0}};
  CHECK(std::abs(std::norm(amplitude_sum(kHalf, zero, 1)) - 2.0) < 1e-14);
  PhaseAssignment half{2, 1, {0.0, std::acos(-0.2)}};
  CHECK(std::abs(std::norm(amplitude_sum(kHalf, half, 1)) - 0.8) < 1e-14);
}

TEST_CASE("additive phases satisfy the grouped association exactly") {
  // phi(path) = sum_n s(j_n) with cos(s_1 - s_2) = d
  const double d = -0.3;
  const double th = std::acos(d);
  PhaseAssignment a{2, 2, {}};
  for (std::size_t r = 0; r < 4; ++r) {
    const auto p = path_from_rank(r, 2, 2);
    a.phases.push_back(th * static_cast<double>(p[0] + p[1]));
  }
  const auto sys = build_constraints(kHalf, coupling2(d), 2);
  const auto rep = evaluate_phases(sys, a, Association::kRadixGroup);
  CHECK(rep.max_residual < 1e-15);
  CHECK(std::abs(std::norm(amplitude_sum(kHalf, a, 2)) - xi_sum(kHalf, coupling2(d), 2)) < 1e-15);
}

TEST_CASE("identity_check examples") {
  SUBCASE("exact scalar case") {
    const auto rep = identity_check(kHalf, std::vector<double>{0.2, 0.2}, 1, {});
    CHECK(rep.feasible);
    CHECK(rep.status == SolveStatus::kConverged);
    CHECK(std::abs(rep.xi - 0.8) < 1e-15);
    CHECK(rep.gap <= 1e-10);
    CHECK(rep.gap <= rep.bound);
  }
  SUBCASE("classical limit") {
    const auto rep = identity_check(kHalf, std::vector<double>{0.0, 0.0}, 1, {});
    CHECK(rep.xi == 1.0);
    CHECK(rep.gap <= 1e-15);
    CHECK(rep.residual <= 1e-15);
  }
  SUBCASE("small coupling, N = 2") {
    const auto rep = identity_check(kHalf, std::vector<double>{0.02, 0.02}, 2, {});
    CHECK(rep.status == SolveStatus::kConverged);
    CHECK(rep.gap <= 1e-6);
    CHECK(rep.gap <= rep.bound);
  }
  SUBCASE("zero coupling, M = 2, several N") {
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto rep = identity_check(BareDistribution({1, 2}, {0.3, 0.7}),
                                      std::vector<double>{0.0, 0.0}, n, {});
      CHECK(rep.status == SolveStatus::kConverged);
      CHECK(std::abs(rep.amp_sq - 1.0) < 1e-10);
    }
  }
  SUBCASE("gap never exceeds the bound") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
      const std::size_t m = 2 + rng.next() % 2;
      const std::size_t n = 1 + rng.next() % 2;
      const auto p = oracle::random_probs(rng, m);
      std::vector<double> gamma(m);
      for (auto& g : gamma) g = 0.5 * rng.uniform();
      SolverOptions o;
      o.seed = trial;
      o.restarts = 2;
      const auto rep = identity_check(BareDistribution::with_default_labels(p), gamma, n, o);
      if (!rep.feasible) continue;
      CHECK(rep.gap <= rep.bound);
    }
  }
  SUBCASE("infeasible coupling") {
    const BareDistribution b({1, 2}, {0.9, 0.1});
    // d = -(g sqrt(1/9) + g sqrt(9)) / 2 < -1 for g = 1
    const auto rep = identity_check(b, std::vector<double>{1.0, 1.0}, 1, {});
    CHECK_FALSE(rep.feasible);
    CHECK(rep.status == SolveStatus::kInfeasible);
    CHECK(std::isnan(rep.gap));
  }
}
